"""Command-line entry point: ``acfpapr {ccdf,ber,tables,design-filter}``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import experiments as ex


def _common_flags(parser: argparse.ArgumentParser, suppress: bool):
    d = {"default": argparse.SUPPRESS} if suppress else {"default": None}
    parser.add_argument("--config", help="flat key = value configuration file", **d)
    parser.add_argument("--seed", type=int, help="master random seed", **d)
    parser.add_argument("--out", help="output directory", **d)
    parser.add_argument("--trials", type=int, help="OFDM blocks per PAPR curve", **d)
    parser.add_argument("--workers", type=int, help="worker processes", **d)
    parser.add_argument("-v", "--verbose", action="store_true", **({"default": argparse.SUPPRESS} if suppress else {}))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acfpapr",
        description="Clipping and composed-filter PAPR reduction experiments for OFDM.",
    )
    _common_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    shared = argparse.ArgumentParser(add_help=False)
    _common_flags(shared, suppress=True)
    sub.add_parser("ccdf", parents=[shared], help="PAPR distributions per clipping ratio")
    sub.add_parser("ber", parents=[shared], help="BER versus Eb/N0 per clipping ratio")
    sub.add_parser("tables", parents=[shared], help="run both and write the comparison tables")
    sub.add_parser("design-filter", parents=[shared], help="dump filter coefficients and responses")
    sub.add_parser("show-config", parents=[shared], help="print the effective configuration")
    return parser


def _run(args) -> int:
    cfg = ex.load_config(args.config, seed=args.seed, out=args.out, trials=args.trials, workers=args.workers)
    if args.command == "show-config":
        print(ex.dump_config(cfg), end="")
    elif args.command == "ccdf":
        for res in ex.run_ccdf_experiment(cfg):
            print(f"{res.scheme.name}: unclipped {res.readout('none', None):.2f} dB at CCDF={cfg.ccdf_level:g}")
            for cr in cfg.cr_list:
                vals = "  ".join(f"{p} {res.readout(p, cr):.2f} dB" for p in cfg.pipelines)
                print(f"  CR={cr:g}: {vals}")
    elif args.command == "ber":
        for res in ex.run_ber_experiment(cfg):
            for (pipeline, cr), samples in res.samples.items():
                line = " ".join(f"{s.ber:.2e}" for s in samples)
                print(f"{res.scheme.name} {pipeline:>8} CR={'-' if cr is None else f'{cr:g}':>4}: {line}")
    elif args.command == "tables":
        if not set(cfg.pipelines) >= {"existing", "proposed"}:
            raise ValueError("tables need both the existing and proposed pipelines")
        ex.check_table_point(cfg)
        table = ex.build_table(ex.run_ccdf_experiment(cfg), ex.run_ber_experiment(cfg), cfg)
        ex.write_tables(table, cfg)
        print(ex.format_summary(table, cfg), end="")
    elif args.command == "design-filter":
        rep = ex.design_filter_report(cfg)
        prop = rep["proposed"]
        m = prop.meta
        print(f"Chebyshev I band-pass: prototype order {m['order']}, ripple {m['ripple_db']:g} dB, "
              f"edges {m['f_low']:g}-{m['f_high']:g} Hz at fs {prop.fs:g} Hz")
        print("second-order sections (b0 b1 b2 a0 a1 a2):")
        for row in prop.sos:
            print("  " + " ".join(f"{v: .17g}" for v in row))
        print(f"wrote chebyshev1_sos.txt, fir_taps.txt and filter_response.csv to {cfg.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except (ValueError, OSError) as exc:
        print(f"acfpapr: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
