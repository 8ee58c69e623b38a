"""
Command-line front end.

    symradio ber --preset spreading_gain --out sg.csv
    symradio rate --config my.yaml --seed 7

Exit codes: 0 success, 2 configuration error, 3 infeasible allocation,
130 interrupted (rows finished so far are kept).
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

import yaml

from ..core import ConfigError, InfeasibleError
from .config import PRESETS, config_to_dict, load_config, validate
from .experiments import ResultWriter, iter_experiment, resolve_workers

log = logging.getLogger("symradio")

SUBCOMMANDS = {
    "ber": "ber_sweep",
    "rate": "rate_sweep",
    "alloc": "allocation",
    "ris": "ris_scaling",
    "fdsr": "fdsr_sweep",
    "check": "oracle_suite",
}

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INTERRUPTED = 0, 2, 3, 130


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="symradio", description="Symbiotic radio link-level experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {kind} experiment")
        p.add_argument("--config", help="YAML file overriding the shipped defaults")
        p.add_argument("--preset", help="named preset applied before --config")
        p.add_argument("--seed", type=_u64, help="experiment seed (unsigned 64-bit)")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--workers", type=int, help="worker processes; 0 uses every core")
        p.add_argument("--dump-config", action="store_true", help="print the merged config and exit")
    sub.add_parser("presets", help="list the named presets")
    return parser


def _run(cfg):
    writer = ResultWriter(cfg.out)
    workers = resolve_workers(cfg)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for row in iter_experiment(cfg, pool):
            writer.write(row)
            writer.flush()
    except KeyboardInterrupt:
        log.warning("interrupted; %d row(s) kept", writer.count)
        return EXIT_INTERRUPTED
    finally:
        writer.close()
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    log.info("wrote %d row(s) to %s", writer.count, cfg.out or "stdout")
    return EXIT_OK


def _setup_logging(verbose):
    for h in [h for h in log.handlers if getattr(h, "_symradio", False)]:
        log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    handler._symradio = True
    log.addHandler(handler)
    log.setLevel(logging.DEBUG if verbose else logging.INFO)
    log.propagate = False


def main(argv=None):
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    if args.command == "presets":
        for name, body in PRESETS.items():
            kind = body["experiment"]
            cmd = next(k for k, v in SUBCOMMANDS.items() if v == kind)
            print(f"{name:20s} symradio {cmd} --preset {name}")
        return EXIT_OK

    kind = SUBCOMMANDS[args.command]
    try:
        cfg = load_config(args.config, args.preset, args.seed, args.out, args.workers)
        if cfg.experiment != kind:
            if args.preset and not args.config:
                raise ConfigError(f"preset {args.preset!r} is a {cfg.experiment} experiment; "
                                  f"run it with the matching subcommand", "preset")
            cfg = cfg.replace(experiment=kind)
            validate(cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG

    if args.dump_config:
        yaml.safe_dump(config_to_dict(cfg), sys.stdout, sort_keys=False)
        return EXIT_OK
    try:
        return _run(cfg)
    except InfeasibleError as exc:
        log.error("infeasible allocation (%s): %s", exc.binding, exc)
        return EXIT_INFEASIBLE
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
