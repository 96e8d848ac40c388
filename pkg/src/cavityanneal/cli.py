"""Command-line entry point: ``cavityanneal <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .errors import CavityAnnealError
from .io import read_json
from .pipeline import STAGES, default_config_path, run_golden, run_pipeline

log = logging.getLogger("cavityanneal")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML or JSON experiment config "
                   "(default: the bundled reference instance)")
    p.add_argument("--out", type=Path, help="output directory (default: runtime.out)")
    p.add_argument("--threads", type=int, help="worker threads")
    p.add_argument("--seed", type=int, help="RNG seed for readout noise")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavityanneal",
                                     description="Cavity-mediated spin annealing toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "select-modes": "greedy mode-basis search at the configured poses",
        "synthesize": "program each recall matrix into the selected basis",
        "spectrum": "low-lying spectrum and minimum gap along the zeta ramp",
        "anneal": "coherent annealing runs for every configured tau",
        "readout": "cavity intensities of the annealed states and their inversion",
        "hopfield-bounds": "exact nu bound and energy-vs-nu tables",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--fresh", action="store_true",
                       help="recompute the mode selection even if selection.json exists")
    p = sub.add_parser("pipeline", help="run all stages in order")
    _common(p)
    p.add_argument("--stage", choices=STAGES, help="stop after this stage")
    p.add_argument("--reuse", action="store_true", help="reuse a saved selection.json")
    p = sub.add_parser("golden", help="compare the reference instance against the fixture")
    _common(p)
    p.add_argument("--fixture", type=Path, help="golden fixture JSON (default: bundled)")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config or default_config_path())
    if args.seed is not None:
        cfg.runtime.seed = args.seed
    if args.threads is not None:
        cfg.runtime.threads = args.threads
    if args.out is not None:
        cfg.runtime.out = str(args.out)
    return cfg


def _summarize(out: Path) -> None:
    """Print one key=value line per headline result found in ``out``."""
    sel = out / "selection.json"
    if sel.exists():
        s = read_json(sel)["selection"]
        print(f"selection\tlog_merit={s['log_merit']:.4f}\tnorm_ratio={s['norm_ratio']:.3g}")
        print("selection\tmodes=" + " ".join("({},{})".format(*lab[:2]) for lab in s["labels"]))
    for p in sorted(out.glob("program_*.json")):
        d = read_json(p)
        print(f"{p.stem}\tmax_deviation={d['max_deviation']:.4f}\t"
              f"effective_strength={d['effective_strength']:.4f}")
    if (out / "spectrum_summary.json").exists():
        for name, r in read_json(out / "spectrum_summary.json")["recalls"].items():
            print(f"spectrum_{name}\tmin_gap={r['min_gap']:.4f}\tzeta_star={r['min_gap_zeta']:.4f}\t"
                  f"ground_overlap={r['ground_overlap_final']:.4f}")
    if (out / "anneal_summary.json").exists():
        for name, runs in read_json(out / "anneal_summary.json")["recalls"].items():
            for r in runs:
                print(f"anneal_{name}\ttau={r['tau']:g}\ttarget_overlap={r['final_target_overlap']:.4f}"
                      f"\twinner={r['winner']}")
    for p in sorted(out.glob("reconstruction_*.json")):
        d = read_json(p)
        print(f"{p.stem}\tpattern={d['pattern']}\tresidual={d['residual']:.2e}")
    for p in sorted(out.glob("hopfield_*.json")):
        d = read_json(p)
        print(f"{p.stem}\tnu_upper={d['nu_upper_exact']}\tground={d['ground']}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "golden":
            report = run_golden(args.fixture, args.out)
            print("\n".join(report.lines()))
            return 0 if report.passed else 1
        cfg = _config(args)
        out = Path(cfg.runtime.out)
        if args.command == "pipeline":
            run_pipeline(cfg, out, stop_stage=args.stage, reuse=args.reuse)
        else:
            run_pipeline(cfg, out, only=args.command, reuse=not args.fresh)
        _summarize(out)
        print(f"manifest\t{out / 'manifest.json'}")
        return 0
    except CavityAnnealError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
