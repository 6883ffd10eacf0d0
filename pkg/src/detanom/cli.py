"""Command-line front end: evaluation, verification, and search subcommands.

Results are emitted as JSON (sorted keys, so identical configurations and
seeds produce byte-identical output) or CSV, to stdout or to --out.  Exit
status: 0 success, 1 domain error (bad numerical content), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import bounds, geometry as geo, spectral
from .anomaly import anomaly_general, radial_anomaly_result
from .errors import DomainError
from .optimizer import FAMILIES, SearchConfig, profile_family, search_sup
from .rearrangement import (
    decreasing_rearrangement,
    half_line_restriction,
    load_half_line_csv,
    monotone_envelope,
    save_half_line_csv,
)
from .selftest import CRITERIA, run_selftest


@dataclass
class RunConfig:
    """Grid and tolerance knobs shared by the subcommands."""

    T: float = geo.DEFAULT_WINDOW
    t_nodes: int = geo.DEFAULT_T_NODES
    theta_nodes: int = geo.DEFAULT_THETA_NODES
    circle_nodes: int = 256
    seed: int = 0
    max_degree: int = 8

    def __post_init__(self):
        if self.T < 20.0:
            raise ValueError("window T must be at least 20")
        if self.t_nodes < 16 or self.theta_nodes < 4:
            raise ValueError("node counts out of supported range")
        if self.circle_nodes < 64 or self.circle_nodes & (self.circle_nodes - 1):
            raise ValueError("circle grid must be a power of two >= 64")

    @classmethod
    def load(cls, args) -> "RunConfig":
        data = {}
        if getattr(args, "config", None):
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
            known = {f.name for f in fields(cls)}
            unknown = set(raw) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            data.update(raw)
        for name in ("T", "t_nodes", "theta_nodes", "circle_nodes", "seed"):
            val = getattr(args, name.replace("-", "_"), None)
            if val is not None:
                data[name] = val
        return cls(**data)

    def grid(self):
        return geo.default_t_grid(self.T, self.t_nodes)

    def meta(self) -> dict:
        return {"T": self.T, "t_nodes": self.t_nodes,
                "theta_nodes": self.theta_nodes, "seed": self.seed}


def _emit_json(payload: dict, out_path):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(header, rows, out_path):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _build_profile(args, rc: RunConfig):
    return profile_family(args.profile, tuple(args.param or ()), rc.grid())


def cmd_anomaly(args) -> int:
    rc = RunConfig.load(args)
    if args.field:
        phi = geo.load_field_json(args.field)
        result = anomaly_general(phi, args.n, rc.max_degree)
    else:
        prof = _build_profile(args, rc)
        if args.radial:
            result = radial_anomaly_result(prof, args.n)
        else:
            result = anomaly_general(geo.lift(prof, rc.theta_nodes), args.n,
                                     rc.max_degree)
    _emit_json(result.as_dict(), args.out)
    return 0


def cmd_lemma3(args) -> int:
    rc = RunConfig.load(args)
    if args.coefficient_sweep:
        N, coef, bound, margin = bounds.lemma3_coefficient_sweep(args.coefficient_sweep)
        rows = zip(N.tolist(), coef.tolist(), bound.tolist(), margin.tolist())
        _emit_csv(["N", "coefficient", "bound", "margin"], rows, args.out)
        return 0
    prof = _build_profile(args, rc)
    u = monotone_envelope(half_line_restriction(prof))
    report = bounds.lemma3_report(u, args.m, calibration=args.calibration)
    payload = report.as_dict()
    payload["grid_meta"] = rc.meta()
    _emit_json(payload, args.out)
    return 0


def cmd_rearrange(args) -> int:
    g = load_half_line_csv(args.input)
    out = monotone_envelope(g) if args.envelope else decreasing_rearrangement(g)
    save_half_line_csv(out, args.output)
    return 0


def cmd_mt_check(args) -> int:
    rc = RunConfig.load(args)
    if args.probes:
        from .probes import random_radial_profile, random_smooth_field

        rng = np.random.default_rng(rc.seed)
        grid = rc.grid()
        deficits = []
        for i in range(args.probes):
            if i % 2 == 0:
                phi = random_smooth_field(rng, grid, rc.theta_nodes)
            else:
                phi = geo.lift(random_radial_profile(rng, grid), rc.theta_nodes)
            deficits.append(bounds.mt_deficit(phi))
        payload = {
            "probes": args.probes,
            "max_deficit": max(deficits),
            "min_deficit": min(deficits),
            "all_below_bar": bool(max(deficits) <= 1e-9),
            "grid_meta": rc.meta(),
        }
    else:
        prof = _build_profile(args, rc)
        phi = geo.lift(prof, rc.theta_nodes)
        energy = geo.gradient_integral(phi)
        payload = {
            "deficit": bounds.mt_deficit(phi),
            "gradient_energy": energy,
            "fontana": bounds.fontana_functional(phi),
            "fontana_rescaled": bool(energy > 1.0),
            "grid_meta": rc.meta(),
        }
    _emit_json(payload, args.out)
    return 0


def cmd_circle_det(args) -> int:
    rc = RunConfig.load(args)
    if args.input:
        samples = []
        with open(args.input, encoding="utf-8", newline="") as fh:
            for row in csv.reader(fh):
                if not row or not row[0].strip():
                    continue
                try:
                    samples.append(float(row[-1]))
                except ValueError:
                    continue  # header
        phi = spectral.CircleMetric(np.asarray(samples))
    else:
        x = np.arange(rc.circle_nodes) / rc.circle_nodes
        phi = spectral.CircleMetric(args.amplitude * np.cos(2 * math.pi * x))
    det = spectral.circle_det(phi)
    det0 = spectral.circle_det(spectral.CircleMetric.zero(phi.n))
    formula = spectral.circle_anomaly_formula(phi)
    payload = {
        "det": det,
        "anomaly_formula": formula,
        "discrepancy": math.log(det) - math.log(det0) - formula,
        "grid_meta": {"circle_nodes": phi.n},
    }
    _emit_json(payload, args.out)
    return 0


def cmd_search(args) -> int:
    rc = RunConfig.load(args)
    # the 2-D basis multiplies every radial degree by the angular modes, so
    # the general search defaults to a leaner grid and basis
    general = bool(args.general)
    cfg = SearchConfig(
        n=args.n,
        radial=not general,
        max_iters=args.max_iters,
        restarts=args.restarts,
        seed=rc.seed,
        energy_cap=args.energy_cap,
        window=rc.T,
        t_nodes=min(rc.t_nodes, 257) if general and args.t_nodes is None
        else rc.t_nodes,
        theta_nodes=rc.theta_nodes if args.theta_nodes is not None else 64,
        basis_size=10 if general else 24,
    )
    trace = search_sup(cfg)
    if args.trace_out:
        rows = [
            (i, float(a), float(e), float(g))
            for i, (a, e, g) in enumerate(
                zip(trace.values, trace.energies, trace.grad_norms))
        ]
        _emit_csv(["iter", "A", "energy", "gradnorm"], rows, args.trace_out)
    payload = {
        "best_value": trace.best_value,
        "status": trace.status,
        "iterations": int(trace.values.size),
        "restart_index": trace.restart_index,
        "restart_finals": [[v, s] for v, s in trace.meta["finals"]],
        "grid_meta": {k: trace.meta[k] for k in
                      ("n", "seed", "restarts", "T", "t_nodes", "basis_size",
                       "energy_cap", "radial")},
    }
    _emit_json(payload, args.out)
    return 0


def cmd_selftest(args) -> int:
    ids = args.criteria.split(",") if args.criteria else None
    ok = run_selftest(ids)
    return 0 if ok else 1


def _add_common(p):
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--out", help="write the result here instead of stdout")
    p.add_argument("--T", type=float, default=None, help="half-width of the t window")
    p.add_argument("--t-nodes", type=int, default=None, dest="t_nodes")
    p.add_argument("--theta-nodes", type=int, default=None, dest="theta_nodes")
    p.add_argument("--circle-nodes", type=int, default=None, dest="circle_nodes")
    p.add_argument("--seed", type=int, default=None)


def _add_profile_args(p):
    p.add_argument("--profile", default="zero", choices=FAMILIES)
    p.add_argument("--param", type=float, action="append",
                   help="family parameter (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detanom",
        description="determinant-anomaly functionals, inequality checks, "
                    "and supremum search on the round sphere and circle",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("anomaly", help="evaluate the anomaly functional")
    p.add_argument("--n", type=int, required=True, help="bundle degree")
    p.add_argument("--radial", action="store_true",
                   help="use the 1-D rotation-invariant evaluator")
    p.add_argument("--field", help="JSON file with a 2-D field")
    _add_profile_args(p)
    _add_common(p)
    p.set_defaults(handler=cmd_anomaly)

    p = sub.add_parser("lemma3", help="envelope bound report or coefficient sweep")
    p.add_argument("--coefficient-sweep", type=int, default=None,
                   dest="coefficient_sweep", metavar="N_MAX",
                   help="emit CSV of coefficients and margins for N = 1..N_MAX")
    p.add_argument("--m", type=int, default=1, help="number of summands minus one")
    p.add_argument("--calibration", type=float, default=0.0,
                   help="additive constant used in the reported slack")
    _add_profile_args(p)
    _add_common(p)
    p.set_defaults(handler=cmd_lemma3)

    p = sub.add_parser("rearrange", help="rearrange or envelope a half-line CSV")
    p.add_argument("--input", required=True, help="CSV with columns s,value")
    p.add_argument("--output", required=True)
    p.add_argument("--envelope", action="store_true",
                   help="emit the monotone envelope instead of the rearrangement")
    p.set_defaults(handler=cmd_rearrange)

    p = sub.add_parser("mt-check", help="exponential-moment deficit checks")
    p.add_argument("--probes", type=int, default=None,
                   help="run a seeded probe battery of this size")
    _add_profile_args(p)
    _add_common(p)
    p.set_defaults(handler=cmd_mt_check)

    p = sub.add_parser("circle-det", help="circle determinant vs closed form")
    p.add_argument("--input", help="CSV of phi samples (last column)")
    p.add_argument("--amplitude", type=float, default=1.0,
                   help="amplitude of the cosine metric when no CSV is given")
    _add_common(p)
    p.set_defaults(handler=cmd_circle_det)

    p = sub.add_parser("search", help="supremum search over perturbations")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--general", action="store_true",
                   help="search the full 2-D basis instead of radial profiles")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iters", type=int, default=400, dest="max_iters")
    p.add_argument("--energy-cap", type=float, default=100.0, dest="energy_cap")
    p.add_argument("--trace-out", dest="trace_out",
                   help="write the best trace as CSV (iter,A,energy,gradnorm)")
    _add_common(p)
    p.set_defaults(handler=cmd_search)

    p = sub.add_parser("selftest", help="run the acceptance battery")
    p.add_argument("--criteria", help="comma-separated subset, e.g. C01,C04")
    known = ", ".join(cid for cid, _, _ in CRITERIA)
    p.description = f"known criteria: {known}"
    p.set_defaults(handler=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
