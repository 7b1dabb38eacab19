"""``wola-lab`` command line interface.

List-valued options take comma-separated values; integer options also accept
inclusive ranges ``start:stop:step`` (``--taps 1:101:10``). ``--seeds K``
with a single integer runs K replicates derived from ``--seed``; a comma list
gives explicit seeds.
"""
from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import logging
import sys

import numpy as np

from . import bench
from .complexity import Method, table1
from .errors import WolaError
from .filterbank import FilterBankSpec
from .prototype import verify_pr


def int_list(text) -> list[int]:
    """Parse ``"1,5,9"`` or ``"1:9:4"`` (inclusive) into a list of ints."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1
            out.extend(range(start, stop + (1 if step > 0 else -1), step))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty list: {text!r}")
    return out


def str_list(text) -> list[str]:
    return [p.strip() for p in str(text).split(",") if p.strip()]


def _add_common(p, lists=False):
    conv_i = int_list if lists else int
    conv_s = str_list if lists else str
    p.add_argument("--config", help="flat JSON file with ScenarioConfig fields")
    p.add_argument("--n", type=int, help="DFT size N")
    p.add_argument("--d", type=int, help="decimation D")
    p.add_argument("--window", type=conv_s, help="rect, cosine, root-hann or raised:RHO:ETA")
    p.add_argument("--synthesis", type=str_list, help="min-norm and/or min-distortion")
    p.add_argument("--method", type=conv_s, help="gwola, ptwola or conventional")
    p.add_argument("--taps", type=conv_i, help="taps per subband T")
    p.add_argument("--cross-terms", type=conv_i, help="single-sided cross terms R")
    p.add_argument("--rir-len", type=int, help="impulse response length L")
    p.add_argument("--t60", type=float)
    p.add_argument("--ebr-db", type=float)
    p.add_argument("--frames", type=int)
    p.add_argument("--fs", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", help="replicate count or comma list of seeds")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")


_FLAG_FIELDS = {"n": "N", "d": "D", "rir_len": "L", "t60": "t60", "ebr_db": "ebr_db",
                "frames": "frames", "fs": "fs", "seed": "seed"}


def _first(v):
    return v[0] if isinstance(v, list) else v


def build_config(args) -> bench.ScenarioConfig:
    """ScenarioConfig from defaults, then the JSON file, then explicit flags."""
    values = {}
    if args.config:
        with open(args.config) as fh:
            values.update(json.load(fh))
    for flag, name in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    for flag, name in [("window", "window"), ("synthesis", "synthesis"), ("method", "method"),
                       ("taps", "T"), ("cross_terms", "R")]:
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = _first(v)
    return bench.ScenarioConfig.from_dict(values)


def _seeds(args, cfg):
    if args.seeds is None:
        return [cfg.seed]
    parts = str_list(args.seeds)
    if len(parts) == 1:
        return [bench.derive_seed(cfg.seed, i) for i in range(int(parts[0]))]
    return [int(p) for p in parts]


def _listed(args, flag, default):
    v = getattr(args, flag, None)
    if v is None:
        return [default]
    return v if isinstance(v, list) else [v]


@contextlib.contextmanager
def _sink(path):
    if path:
        with open(path, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _emit(rows, args, columns):
    with _sink(args.out) as fh:
        if args.format == "json":
            bench.write_json(rows, fh)
        else:
            bench.write_csv(rows, fh, columns)


def cmd_design(args):
    cfg = build_config(args)
    spec = FilterBankSpec.design(cfg.N, cfg.D, cfg.window, cfg.synthesis)
    vectors = {"h0": spec.h0.coefficients, "f0": spec.f0.coefficients, "g0": spec.kernels.g0}
    v = vectors[args.vector]
    with _sink(args.out) as fh:
        if args.format == "json":
            json.dump({k: np.real(x).tolist() for k, x in vectors.items()}, fh)
            fh.write("\n")
        else:
            bench.write_vector_csv(v, fh)
    return 0


def cmd_verify_pr(args):
    cfg = build_config(args)
    spec = FilterBankSpec.design(cfg.N, cfg.D, cfg.window, cfg.synthesis)
    rep = verify_pr(spec.h0, spec.f0, cfg.N, cfg.D)
    row = {"tau": rep.tau, "max_distortion_dev": rep.max_distortion_dev,
           "max_alias": rep.max_alias, "passed": rep.passed}
    _emit([row], args, list(row))
    return 0 if rep.passed else 1


def cmd_analyze(args):
    cfg = build_config(args)
    seeds = _seeds(args, cfg)
    rows = bench.analytic_sweep(
        _listed(args, "window", cfg.window), _listed(args, "synthesis", cfg.synthesis),
        _listed(args, "taps", cfg.T), cfg.N, cfg.D, cfg.L, cfg.t60, cfg.fs, seeds,
    )
    _emit(rows, args, bench.ANALYTIC_COLUMNS)
    return 0


def cmd_simulate(args):
    cfg = build_config(args)
    syntheses = _listed(args, "synthesis", cfg.synthesis)
    rows = []
    for seed in _seeds(args, cfg):
        c = dataclasses.replace(cfg, seed=seed)
        res = bench.simulate(c, syntheses)
        rows.extend(bench.result_row(c, s, res[s]) for s in syntheses)
    _emit(rows, args, bench.CSV_COLUMNS)
    return 0


def cmd_sweep(args):
    cfg = build_config(args)
    rows = bench.sweep(
        cfg,
        _listed(args, "taps", cfg.T),
        _listed(args, "window", cfg.window),
        _listed(args, "synthesis", cfg.synthesis),
        _listed(args, "method", cfg.method),
        _seeds(args, cfg),
        R_list=_listed(args, "cross_terms", cfg.R),
        jobs=args.jobs,
    )
    _emit(rows, args, bench.CSV_COLUMNS)
    return 0


def cmd_complexity(args):
    N = args.n or 1024
    rows = []
    for method in _listed(args, "method", "gwola"):
        m = Method(method)
        for T in _listed(args, "taps", 1):
            Rs = _listed(args, "cross_terms", 0) if m is Method.PTWOLA else [0]
            for R in Rs:
                rep = table1(m, N, T, R)
                rows.append({"method": m.value, "N": N, "T": T, "R": R,
                             "real_mults": rep.real_mults, "real_adds": rep.real_adds})
    _emit(rows, args, bench.COMPLEXITY_COLUMNS)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wola-lab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="design analysis/synthesis prototypes and export them")
    _add_common(p)
    p.add_argument("--vector", choices=["h0", "f0", "g0"], default="f0")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("verify-pr", help="check perfect reconstruction of a designed bank")
    _add_common(p)
    p.set_defaults(func=cmd_verify_pr)

    p = sub.add_parser("analyze", help="analytical steady-state ERLE over T")
    _add_common(p, lists=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run one adaptive echo cancellation scenario")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid of simulations over windows, syntheses, methods, T, R")
    _add_common(p, lists=True)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("complexity", help="closed-form real operation counts per frame")
    _add_common(p, lists=True)
    p.set_defaults(func=cmd_complexity)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (WolaError, OSError, json.JSONDecodeError) as exc:
        print(f"wola-lab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
