"""``fanrec <stage> --config FILE [--seed N] [--work-dir D] [--set key=value ...]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import apply_override, load_config
from .errors import FanrecError
from .pipeline import STAGES, run_stage


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fanrec", description="Tweet-driven fan clustering and artist recommendation.")
    p.add_argument("stage", choices=list(STAGES) + ["all"])
    p.add_argument("--config", help="JSON config file; its values override the defaults")
    p.add_argument("--seed", type=int, help="top-level seed")
    p.add_argument("--work-dir", help="directory holding stage artifacts")
    p.add_argument("--weighting", choices=["tfidf", "tf"], help="term weighting for vectors")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config value, e.g. --set cluster.k=6 (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        for item in args.overrides:
            cfg = apply_override(cfg, item)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.work_dir is not None:
            cfg.paths.work_dir = args.work_dir
        if args.weighting is not None:
            cfg.vectorize.weighting = args.weighting
        run_stage(args.stage, cfg)
    except FanrecError as exc:
        print(f"fanrec {args.stage}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
