"""Command-line front end.

Exit codes: 0 success, 2 invalid input or config, 3 numerical failure
(including a sweep in which any run failed).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

from . import config
from .runner import SUBCOMMANDS, execute
from .sweep import Axis, SweepSpec, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--out", metavar="DIR", default="runs", help="output root (default: runs)")
    common.add_argument("--seed", type=int, default=0, help="detector RNG seed")
    common.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--print-config", action="store_true",
                        help="print the effective config and exit")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")

    p = argparse.ArgumentParser(prog="bec-optomech", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "steady": "steady-state resonance curves over the pump-cavity detuning",
        "critical": "critical pump strength for bistability",
        "twomode": "two-mode oscillator driven by a detuning scan",
        "gpe": "1D mean-field ground state and scan propagation",
        "thermal": "thermal occupation of the mechanical mode",
        "analyze": "frequency analysis of a counts CSV",
    }
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "analyze":
            sp.add_argument("input", help="counts CSV with columns t_bin_start,counts")
    sp = sub.add_parser("sweep", parents=[common], help="fan out a subcommand over config values")
    sp.add_argument("target", choices=[s for s in SUBCOMMANDS if s != "analyze"])
    sp.add_argument("--axis", action="append", required=True, metavar="KEY=START:STOP:COUNT[:log]")
    sp.add_argument("--jobs", type=int, default=None, help="parallel runs (default: CPU count)")
    return p


def _overrides(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise config.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    log = logging.getLogger("bec_optomech")
    if args.quiet:
        warnings.simplefilter("ignore")
    try:
        cfg, defaulted = config.load(args.config, overrides=_overrides(args.set))
        if args.print_config:
            sys.stdout.write(config.dumps(cfg))
            return EXIT_OK
        if defaulted:
            log.info("defaults used for: %s", ", ".join(defaulted))
        if args.command == "sweep":
            spec = SweepSpec(args.target, cfg, tuple(Axis.parse(a) for a in args.axis),
                             args.jobs, args.seed, args.fmt)
            res = run_sweep(spec, args.out)
            if not args.quiet:
                print(res.manifest_path)
            if res.failed:
                log.error("%d of %d sweep runs failed", res.failed, len(res.entries))
                return EXIT_NUMERIC
            return EXIT_OK
        rec = execute(args.command, cfg, args.out, args.seed, args.fmt,
                      getattr(args, "input", None))
    except (ValueError, FileNotFoundError, FileExistsError) as exc:
        # ParameterError and ConfigError derive from ValueError
        log.error("error: %s", exc)
        return EXIT_INVALID
    except (ArithmeticError, RuntimeError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    if not args.quiet:
        print(json.dumps({"run": rec.name, "reused": rec.reused, "summary": rec.summary},
                         indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
