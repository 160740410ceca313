"""Batch command-line front end.

Every subcommand reads JSON inputs, runs deterministically under the given
seed, and emits a JSON report (or a flat CSV rendering with --format csv).
Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields as dataclass_fields

import numpy as np

from . import __version__
from .channels import merging_fidelity
from .config import Config, DimensionCapError, get_config, set_config, update_config
from .io import (
    ParseError,
    instrument_to_dict,
    load_json,
    protocol_from_dict,
    state_from_dict,
    state_set_from_dict,
)
from .linalg import bell_pair, fidelity, tensor_power
from .rates import (
    StateSet,
    avqs_distillation_capacity,
    compound_classical_cost,
    compound_merging_cost,
    convex_mixture,
    worst_case_protocol_fidelity,
)
from .rate_gap import build_orthogonal_family, rate_gap_report
from .robustify import check_robustification
from .schur_weyl import build_entropy_instrument

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_CAP = 3

_CONFIG_FIELDS = {f.name for f in dataclass_fields(Config)}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="deterministic seed (default 0)")
    common.add_argument(
        "--format", choices=("json", "csv"), default=None, help="report format"
    )
    common.add_argument(
        "--csv",
        action="store_const",
        const="csv",
        dest="format",
        help="shorthand for --format csv",
    )
    common.add_argument("--dim-cap", type=int, default=None, help="override the dimension cap")
    common.add_argument(
        "--tol",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="override a tolerance, e.g. --tol close_tol=1e-7 (repeatable)",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="avqsbench",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", parents=[common], help="merging/classical costs of a state set")
    p.add_argument("--set", required=True, dest="set_path", help="state-set JSON file")
    p.add_argument("--hull", action="store_true", help="maximize over the convex hull")
    p.add_argument("--restarts", type=int, default=8)

    p = sub.add_parser(
        "distill-capacity", parents=[common], help="distillation rate of a (hull of a) state set"
    )
    p.add_argument("--set", required=True, dest="set_path")
    p.add_argument("--k", type=int, default=1, choices=(1, 2))
    p.add_argument("--outcomes", type=int, default=2, help="instrument outcomes to search over")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--maxiter", type=int, default=None, help="search iterations per restart")

    p = sub.add_parser(
        "worst-case", parents=[common], help="minimum merging fidelity over source words"
    )
    p.add_argument("--protocol", required=True, dest="protocol_path", help="protocol JSON file")
    p.add_argument("--set", required=True, dest="set_path")
    p.add_argument("--blocklength", type=int, required=True)
    p.add_argument("--sample", type=int, default=None, help="sample this many words instead")

    p = sub.add_parser(
        "merge-fidelity", parents=[common], help="merging fidelity of a protocol on one state"
    )
    p.add_argument("--protocol", required=True, dest="protocol_path")
    p.add_argument("--state", required=True, dest="state_path", help="source state JSON file")

    p = sub.add_parser(
        "schur-demo", parents=[common], help="entropy-bin probabilities of a tensor power"
    )
    p.add_argument("--dim", type=int, required=True, help="local dimension of the sending side")
    p.add_argument("--blocklength", type=int, required=True)
    p.add_argument("--eta", type=float, required=True, help="entropy bin width in bits")
    p.add_argument("--state", required=True, dest="state_path")

    p = sub.add_parser(
        "robustify-check",
        parents=[common],
        help="verify the permutation-average bound on a word-fidelity function",
    )
    p.add_argument("--set", required=True, dest="set_path")
    p.add_argument("--blocklength", type=int, required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument(
        "--exhaustive",
        action="store_true",
        help="check the set-derived fidelity function over every word (default)",
    )
    mode.add_argument(
        "--trials",
        type=int,
        default=None,
        help="additionally stress seeded random word functions, this many tables",
    )

    p = sub.add_parser(
        "example-gap", parents=[common], help="hull costs vs protocol rates of a block family"
    )
    p.add_argument("--N", type=int, required=True, dest="n", help="family size")
    p.add_argument(
        "--base",
        default="builtin:bell",
        help="base state: 'builtin:bell' or a state JSON file",
    )
    p.add_argument("--blocklength", type=int, default=1)

    return parser


def _apply_overrides(args) -> None:
    overrides = {}
    if args.dim_cap is not None:
        if args.dim_cap <= 0:
            raise ParseError("--dim-cap must be positive")
        overrides["dim_cap"] = args.dim_cap
    for item in args.tol:
        name, sep, value = item.partition("=")
        if not sep or name not in _CONFIG_FIELDS or name == "dim_cap":
            raise ParseError(f"--tol expects NAME=VALUE with a known tolerance, got {item!r}")
        try:
            overrides[name] = float(value)
        except ValueError:
            raise ParseError(f"--tol {name}: {value!r} is not a number") from None
    if overrides:
        update_config(**overrides)


def _flatten(doc, prefix=""):
    rows = []
    if isinstance(doc, dict):
        for key in sorted(doc):
            rows.extend(_flatten(doc[key], f"{prefix}{key}." if prefix else f"{key}."))
    elif isinstance(doc, list):
        for i, item in enumerate(doc):
            rows.extend(_flatten(item, f"{prefix}{i}."))
    else:
        rows.append((prefix[:-1], doc))
    return rows


def _emit(payload: dict, fmt: str) -> None:
    if fmt == "json":
        doc = {k: v for k, v in payload.items() if k != "csv_rows"}
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        if "csv_rows" in payload:
            header, rows = payload["csv_rows"]
            sys.stdout.write(",".join(header) + "\n")
            for row in rows:
                sys.stdout.write(",".join(str(x) for x in row) + "\n")
        else:
            sys.stdout.write("key,value\n")
            for key, value in _flatten({k: v for k, v in payload.items() if k != "csv_rows"}):
                sys.stdout.write(f"{key},{value}\n")


# ---------------------------------------------------------------------------
# subcommand handlers: each returns (payload, exit_code, default_format)

def _cmd_rates(args):
    xs = state_set_from_dict(load_json(args.set_path), args.set_path)
    merging = compound_merging_cost(xs, hull=args.hull, restarts=args.restarts, seed=args.seed)
    classical = compound_classical_cost(xs, hull=args.hull, restarts=args.restarts, seed=args.seed)
    payload = {
        "command": "rates",
        "seed": args.seed,
        "set": args.set_path,
        "hull": bool(args.hull),
        "merging_cost": merging.to_dict(),
        "classical_cost": classical.to_dict(),
    }
    return payload, EXIT_OK, "json"


def _cmd_distill(args):
    xs = state_set_from_dict(load_json(args.set_path), args.set_path)
    result = avqs_distillation_capacity(
        xs,
        k=args.k,
        n_outcomes=args.outcomes,
        restarts=args.restarts,
        seed=args.seed,
        maxiter=args.maxiter,
    )
    payload = {
        "command": "distill-capacity",
        "seed": args.seed,
        "set": args.set_path,
        "report": result.report.to_dict(),
        "instrument": instrument_to_dict(result.instrument),
    }
    return payload, EXIT_OK, "json"


def _cmd_worst_case(args):
    protocol = protocol_from_dict(load_json(args.protocol_path), args.protocol_path)
    xs = state_set_from_dict(load_json(args.set_path), args.set_path)
    value, word = worst_case_protocol_fidelity(
        protocol, xs, args.blocklength, sample=args.sample, seed=args.seed
    )
    payload = {
        "command": "worst-case",
        "seed": args.seed,
        "set": args.set_path,
        "protocol": args.protocol_path,
        "blocklength": args.blocklength,
        "min_fidelity": value,
        "argmin_word": list(word),
        "exhaustive": args.sample is None,
    }
    return payload, EXIT_OK, "json"


def _cmd_merge_fidelity(args):
    protocol = protocol_from_dict(load_json(args.protocol_path), args.protocol_path)
    source = state_from_dict(load_json(args.state_path), args.state_path)
    payload = {
        "command": "merge-fidelity",
        "seed": args.seed,
        "protocol": args.protocol_path,
        "state": args.state_path,
        "fidelity": merging_fidelity(protocol, source),
    }
    return payload, EXIT_OK, "json"


def _cmd_schur_demo(args):
    source = state_from_dict(load_json(args.state_path), args.state_path)
    parties = set(source.parties)
    marginal = source.marginal("A") if "A" in parties and len(parties) > 1 else source
    if marginal.dim != args.dim:
        raise ParseError(
            f"--dim {args.dim} does not match the sending-side dimension {marginal.dim}"
        )
    instrument = build_entropy_instrument(args.blocklength, args.dim, args.eta)
    rows = instrument.probabilities(marginal)
    payload = {
        "command": "schur-demo",
        "seed": args.seed,
        "dim": args.dim,
        "blocklength": args.blocklength,
        "eta": args.eta,
        "state": args.state_path,
        "bins": [
            {"bin_index": i, "interval_lo": lo, "interval_hi": hi, "probability": p}
            for i, lo, hi, p in rows
        ],
        "csv_rows": (
            ("bin_index", "interval_lo", "interval_hi", "probability"),
            [(i, repr(lo), repr(hi), repr(p)) for i, lo, hi, p in rows],
        ),
    }
    return payload, EXIT_OK, "csv"


def _word_fidelity_function(xs: StateSet, l: int):
    """Fidelity of each word state to the tensor power of the set average."""
    average = convex_mixture(xs, np.full(xs.n, 1.0 / xs.n))
    reference = tensor_power(average, l).matrix

    def f(word):
        return fidelity(xs.word_state(word).matrix, reference)

    return f


def _cmd_robustify(args):
    xs = state_set_from_dict(load_json(args.set_path), args.set_path)
    l = args.blocklength
    if xs.n**l > 4096:
        raise DimensionCapError(f"{xs.n}^{l} words exceed the word enumeration cap")
    report = check_robustification(_word_fidelity_function(xs, l), xs.n, l)
    payload = {
        "command": "robustify-check",
        "seed": args.seed,
        "set": args.set_path,
        "blocklength": l,
        "report": report.to_dict(),
    }
    passed = report.passed
    if args.trials:
        import itertools

        rng = np.random.default_rng(args.seed)
        words = list(itertools.product(range(xs.n), repeat=l))
        failures = 0
        for _ in range(args.trials):
            lookup = dict(zip(words, rng.random(len(words))))
            trial = check_robustification(lookup.__getitem__, xs.n, l)
            failures += 0 if trial.passed else 1
        payload["random_tables"] = {"trials": args.trials, "failures": failures}
        passed = passed and failures == 0
    payload["passed"] = passed
    return payload, EXIT_OK if passed else EXIT_VERIFICATION, "json"


def _cmd_example_gap(args):
    if args.base == "builtin:bell":
        base = bell_pair().density()
    else:
        base = state_from_dict(load_json(args.base), args.base)
    family = build_orthogonal_family(base, args.n)
    report = rate_gap_report(family, l=args.blocklength, seed=args.seed)
    payload = {
        "command": "example-gap",
        "seed": args.seed,
        "base": args.base,
        "report": report.to_dict(),
    }
    return payload, EXIT_OK if report.passed else EXIT_VERIFICATION, "json"


_HANDLERS = {
    "rates": _cmd_rates,
    "distill-capacity": _cmd_distill,
    "worst-case": _cmd_worst_case,
    "merge-fidelity": _cmd_merge_fidelity,
    "schur-demo": _cmd_schur_demo,
    "robustify-check": _cmd_robustify,
    "example-gap": _cmd_example_gap,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    previous = get_config()
    try:
        _apply_overrides(args)
        payload, code, default_fmt = _HANDLERS[args.command](args)
        _emit(payload, args.format or default_fmt)
        return code
    except ParseError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except DimensionCapError as exc:
        sys.stderr.write(f"resource cap: {exc}\n")
        return EXIT_CAP
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    finally:
        set_config(previous)


if __name__ == "__main__":
    sys.exit(main())
