"""Command-line front end.

    prefmono audit CONFIG [--seed N] [--out-dir DIR] [--format csv|jsonl]
    prefmono figure1 CONFIG [--seed N] [--out-dir DIR] [--format csv|jsonl]
    prefmono check-lemma --dim N --trials K [--seed N]
    prefmono validate CONFIG

The default output directory comes from ``$PREFMONO_OUT_DIR`` when neither
``--out-dir`` nor the config's ``output.dir`` is set.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import load_config
from .errors import ConfigError, PrefMonoError
from .report import FORMATS
from .runner import run_config, write_figure1
from .spectral import lemma_inverse_difference_check, random_dominant_matrix


def _common(p: argparse.ArgumentParser):
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--format", choices=FORMATS, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefmono", description="Monotonicity audits for preference learning losses")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="run the audits of a config")
    _common(p)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("figure1", help="emit the gradient-step chosen/rejected trace")
    _common(p)

    p = sub.add_parser("check-lemma", help="randomized check of the inverse-difference lemma")
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="parse and validate a config")
    p.add_argument("config")
    return parser


def _check_lemma(dim: int, trials: int, seed: int) -> int:
    rng = np.random.default_rng(seed)
    worst = np.inf
    failures = 0
    for _ in range(trials):
        v = lemma_inverse_difference_check(random_dominant_matrix(dim, rng))
        worst = min(worst, v.min_margin)
        failures += not v.holds
    print(f"dim={dim} trials={trials} failures={failures} worst_margin={worst:.3e}")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "check-lemma":
            if args.dim < 1 or args.trials < 0:
                print("error: --dim must be >= 1 and --trials >= 0", file=sys.stderr)
                return 2
            return _check_lemma(args.dim, args.trials, args.seed)
        cfg = load_config(args.config)
        if args.command == "validate":
            print(f"{args.config}: ok ({len(cfg.audits)} audit(s), model {cfg.model.kind}, "
                  f"loss {cfg.problem.family.kind}, {len(cfg.problem.dataset)} record(s))")
            return 0
        if args.command == "audit":
            status, paths = run_config(cfg, args.out_dir, args.format, args.seed, args.workers)
            for p in paths[:1]:
                print(p)
            return status
        path = write_figure1(cfg, args.out_dir, args.format, args.seed)
        print(path)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PrefMonoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
