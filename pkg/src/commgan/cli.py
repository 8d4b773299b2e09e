"""Command line entry point: ``commgan train | eval | baseline | gradcheck``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .channel import SimulatedChannel, draw_channel_realization
from .checkpoint import Checkpoint, dumps, load_checkpoint
from .config import RunConfig, format_config, parse_config
from .errors import CommGanError
from .evaluation import (
    METRICS_HEADER,
    baseline_qam16_sim,
    export_constellation,
    fmt,
    measure_ser,
    metrics_row,
    qam16_ser_theory,
)
from .gradcheck import gradient_suite
from .rng import RngStream
from .training import train_commgan

log = logging.getLogger("commgan")

GRADCHECK_LIMIT = 1e-4
# substream ids under the run seed, disjoint from the ones training uses
CHANNEL_STREAM = 100
CONSTELLATION_STREAM = 101
EVAL_STREAM = 102
BASELINE_STREAM = 103


def _finish(partial: Path) -> Path:
    final = partial.with_suffix("")
    os.replace(partial, final)
    return final


def cmd_train(args) -> int:
    cfg = parse_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out or cfg.out_dir
    if not out:
        raise CommGanError("no output directory: pass --out or set out_dir")
    cfg.out_dir = str(out)
    cfg.validate()
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)

    resolved = out / "resolved.cfg.partial"
    resolved.write_text(format_config(cfg))
    _finish(resolved)

    root = RngStream(cfg.seed)
    train_cfg = cfg.train_config()
    realization = draw_channel_realization(cfg.channel_config(), root.substream(CHANNEL_STREAM))
    channel = SimulatedChannel(realization)
    log.info("channel: %s", realization)

    metrics_path = out / "metrics.csv.partial"
    with metrics_path.open("w", newline="") as fh:
        fh.write(",".join(METRICS_HEADER) + "\n")

        def on_epoch(m):
            fh.write(",".join(metrics_row(m)) + "\n")
            fh.flush()

        result = train_commgan(train_cfg, channel, root, on_epoch=on_epoch)
    _finish(metrics_path)

    const_path = out / "constellation.csv.partial"
    export_constellation(
        result.encoder, channel, const_path, root.substream(CONSTELLATION_STREAM), train_cfg.c_max
    )
    _finish(const_path)

    ckpt = Checkpoint(
        result.encoder, result.decoder, result.approximator, realization, cfg.seed, train_cfg.c_max
    )
    ckpt_path = out / "final.ckpt.partial"
    ckpt_path.write_text(dumps(ckpt))
    _finish(ckpt_path)
    last = result.metrics[-1]
    print(f"trained {last.epoch} epochs, final ser {fmt(last.ser)}; artifacts in {out}")
    return 0


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    realization = ckpt.realization
    if args.snr_db is not None:
        realization = realization.with_snr(args.snr_db)
    seed = ckpt.seed if args.seed is None else args.seed
    report = measure_ser(
        ckpt.encoder,
        ckpt.decoder,
        SimulatedChannel(realization),
        args.symbols,
        RngStream(seed).substream(EVAL_STREAM),
        c_max=ckpt.c_max,
    )
    print(report.csv_row())
    return 0


def cmd_baseline(args) -> int:
    report = baseline_qam16_sim(
        args.snr_db, args.symbols, RngStream(args.seed).substream(BASELINE_STREAM)
    )
    print(f"{fmt(args.snr_db)},{fmt(qam16_ser_theory(args.snr_db))},{report.csv_row()}")
    return 0


def cmd_gradcheck(args) -> int:
    worst = max(max(pair) for pair in gradient_suite(args.nets, args.seed))
    print(fmt(worst))
    if worst > GRADCHECK_LIMIT:
        print(f"gradient check failed: {worst:.3e} > {GRADCHECK_LIMIT:g}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="commgan", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log every epoch to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train encoder, decoder and channel approximator")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="measure SER of a checkpoint over its channel")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--snr-db", type=float, help="override the training SNR")
    p.add_argument("--symbols", type=int, default=100000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="16-QAM closed form and Monte-Carlo SER")
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--symbols", type=int, default=1000000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("gradcheck", help="finite-difference check of the backprop engine")
    p.add_argument("--nets", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (CommGanError, OSError) as exc:
        print(f"commgan {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
