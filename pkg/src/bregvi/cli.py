"""Command-line entry point: ``bregvi {landscape,envelope,trajectory,sweep,verify}``.

Exit status is 0 on success, 1 when a check or bound fails, 2 on a bad spec.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import BregviError, SpecError
from .experiments import COMMANDS, EXPERIMENTS, build_spec

log = logging.getLogger("bregvi")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with spec fields")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--grid", type=int, help="envelope grid size (odd)")
    common.add_argument("--panels", type=int, help="Simpson panel count (even)")
    common.add_argument("--max-iters", type=int, dest="max_iters")
    common.add_argument("--tol", type=float, help="stop once ||phi - phi*|| <= tol")
    common.add_argument("--jobs", type=int, help="parallel sweep cells")
    common.add_argument("--allow-divergent", action="store_true", default=None, dest="allow_divergent",
                        help="run GD step sizes that cannot converge")
    common.add_argument("--inject-fault", action="store_true", default=None, dest="inject_fault",
                        help="verify: perturb the gradient to exercise failure reporting")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="bregvi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=COMMANDS[name].__doc__.splitlines()[0])
    return parser


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SpecError("config must be a JSON object")
    return data


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "config", "verbose") and v is not None
    }
    try:
        spec = build_spec(args.command, _load_config(args.config), overrides)
    except SpecError as exc:
        print(f"bregvi: spec error: {exc}", file=sys.stderr)
        return 2
    try:
        result = COMMANDS[args.command](spec)
    except BregviError as exc:
        print(f"bregvi: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    for path in result.write(spec.out):
        log.info("wrote %s", path)
    if result.failures:
        print(f"bregvi: {result.failures} check(s) failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
