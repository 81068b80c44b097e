"""kedfl command line: predict, sweep, stats, calibrate, oracle.

Every command reads one scenario document and prints a JSON record on
stdout. Exit codes: 0 ok, 2 bad input, 3 validation error, 4 divergence,
5 capability exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from ._parallel import parallel_map, set_threads
from .calibration import calibrate, residuals
from .diffraction_full import attenuation_db, expand, mixed_term
from .diffraction_paraxial import field_ratio_multi_paraxial
from .documents import Scenario, load_measurements, load_scenario
from .exceptions import (
    CalibrationError,
    CapabilityError,
    QuadratureError,
    ScenarioError,
    SchemaError,
)
from .oracle import oracle_field_ratio
from .scenario import in_link_region, knife_edge, validate
from .statistical import active_bodies, additive_attenuation, attenuation_stats, rss_empty

EXIT_OK, EXIT_INPUT, EXIT_VALIDATION, EXIT_DIVERGENCE, EXIT_CAPABILITY = 0, 2, 3, 4, 5
ENGINE_CHOICES = ("mbm", "pmbm", "additive", "all")
CSV_HEADER = "position_m,A_mbm_db,A_pmbm_db,A_additive_db,err_mbm,err_pmbm"


class CommandError(Exception):
    def __init__(self, code: int, message: str, payload: dict | None = None):
        super().__init__(message)
        self.code = code
        self.payload = payload


def _engines(flag: str) -> tuple[str, ...]:
    return ("mbm", "pmbm", "additive") if flag == "all" else (flag,)


def _emit(record: dict, stream=None) -> None:
    stream = stream or sys.stdout
    stream.write(json.dumps(record, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _check(scn: Scenario, bodies=None) -> list[str]:
    report = validate(scn.geometry, scn.bodies if bodies is None else bodies)
    if report.errors:
        raise CommandError(EXIT_VALIDATION, "; ".join(report.errors))
    return report.warnings


def _ratio_record(ratio) -> dict:
    return {
        "A_db": attenuation_db(ratio),
        "re": ratio.value.real,
        "im": ratio.value.imag,
        "err": ratio.err_estimate,
    }


def _predict_bodies(scn: Scenario, bodies, engines) -> dict:
    g = scn.geometry
    edges = [knife_edge(g, b) for b in bodies if in_link_region(g, b.x)]
    out: dict = {}
    if "mbm" in engines:
        active, fields, psis = expand(g, edges, scn.quadrature)
        out["mbm"] = _ratio_record(fields[tuple(range(len(active)))])
        out["mixed_term_abs"] = abs(mixed_term(psis, len(active))) if len(active) > 1 else 0.0
    if "pmbm" in engines:
        out["pmbm"] = _ratio_record(field_ratio_multi_paraxial(g, edges, scn.quadrature))
    if "additive" in engines:
        out["additive"] = {
            "A_db": additive_attenuation(g, edges, "sbm", scn.quadrature) if edges else 0.0
        }
    return out


def cmd_predict(scn: Scenario, args) -> dict:
    warnings = _check(scn)
    record = _predict_bodies(scn, scn.bodies, _engines(args.engine))
    record["warnings"] = warnings
    return record


def _sweep_row(scn: Scenario, sweep, pos: float, engines):
    moving = scn.bodies[sweep.body_index]
    moved = replace(moving, x=pos) if sweep.axis == "along" else replace(moving, y=pos)
    bodies = list(scn.bodies)
    bodies[sweep.body_index] = moved
    nan = math.nan
    if not in_link_region(scn.geometry, moved.x):
        return [pos, nan, nan, nan, nan, nan], f"position {pos:.6g} m: body outside (0, d)"
    report = validate(scn.geometry, bodies)
    if report.errors:
        return [pos, nan, nan, nan, nan, nan], f"position {pos:.6g} m: {report.errors[0]}"
    rec = _predict_bodies(scn, bodies, engines)
    row = [
        pos,
        rec.get("mbm", {}).get("A_db", nan),
        rec.get("pmbm", {}).get("A_db", nan),
        rec.get("additive", {}).get("A_db", nan),
        rec.get("mbm", {}).get("err", nan),
        rec.get("pmbm", {}).get("err", nan),
    ]
    return row, None


def format_row(values) -> str:
    return ",".join(f"{v:.6g}" for v in values)


def cmd_sweep(scn: Scenario, args) -> dict:
    if args.sweep is None:
        if len(scn.sweeps) != 1:
            raise SchemaError("/sweeps", "select a sweep with --sweep NAME")
        sweep = scn.sweeps[0]
    else:
        sweep = scn.sweep(args.sweep)
    warnings = _check(scn)
    engines = _engines(args.engine)
    positions = sweep.positions()
    results = parallel_map(lambda p: _sweep_row(scn, sweep, p, engines), positions)
    lines = [CSV_HEADER] + [format_row(row) for row, _ in results]
    text = "\n".join(lines) + "\n"
    warnings += [w for _, w in results if w]
    record = {"sweep": sweep.name, "rows": len(positions), "warnings": warnings}
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        record["out"] = str(args.out)
    else:
        record["csv"] = text
    return record


def cmd_stats(scn: Scenario, args) -> dict:
    if scn.stats is None:
        raise SchemaError("/stats", "the stats block is required for this command")
    params = scn.stats
    engine = "mbm" if args.engine in ("all", "additive") else args.engine
    warnings = _check(scn)
    mu0, s0 = rss_empty(params)
    record = {"engine": engine, "mu0_dbm": mu0, "sigma0_sq": s0, "seed": params.seed, "warnings": warnings}
    active = active_bodies(scn.geometry, scn.bodies)
    if not active:
        record.update(mu1_dbm=mu0, sigma1_sq=s0, delta_mu=0.0, delta_sigma_sq=0.0,
                      mc_stderr=0.0, n_samples=0)
        return record
    st = attenuation_stats(scn.geometry, active, params, engine, scn.quadrature)
    record.update(
        mu1_dbm=st.mu1,
        sigma1_sq=st.sigma1_sq,
        delta_mu=st.delta_mu,
        delta_sigma_sq=st.delta_sigma_sq,
        mc_stderr=st.mc_stderr,
        mean_attenuation_db=st.mean_attenuation,
        n_samples=st.n_samples,
    )
    return record


def cmd_calibrate(scn: Scenario, args) -> dict:
    if not args.measurements:
        raise SchemaError("/", "--measurements is required for calibrate")
    meas = load_measurements(args.measurements)
    cfg = scn.calibration
    engine = args.engine if args.engine in ("mbm", "pmbm") else cfg.engine
    dmu_C = scn.stats.delta_mu_C if scn.stats else 0.0
    init = scn.initial_sizes()
    for i, lm in enumerate(meas.landmarks):
        if len(lm.positions) != len(init):
            raise SchemaError(f"/landmarks/{i}/bodies", f"expected {len(init)} bodies")
    try:
        result = calibrate(
            scn.geometry, meas.landmarks, init, engine, mu0=meas.mu0, delta_mu_C=dmu_C,
            bounds=cfg.bounds, shared=cfg.shared, spec=scn.quadrature,
        )
    except CalibrationError as exc:
        payload = {"error": str(exc), "engine": engine}
        if exc.last is not None:
            payload["last"] = exc.last.to_dict()
        raise CommandError(EXIT_DIVERGENCE, str(exc), payload) from exc
    record = {"engine": engine, **result.to_dict()}
    record["initial_residuals_db"] = list(
        residuals(scn.geometry, meas.landmarks, init, engine, meas.mu0, dmu_C, scn.quadrature)
    )
    if args.out:
        Path(args.out).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        record["out"] = str(args.out)
    return record


def cmd_oracle(scn: Scenario, args) -> dict:
    g = scn.geometry
    warnings = _check(scn)
    edges = [knife_edge(g, b) for b in scn.bodies if in_link_region(g, b.x)]
    if len(edges) > 2:
        raise CapabilityError(f"oracle handles at most 2 bodies, got {len(edges)}")
    step = args.grid_step if args.grid_step is not None else g.wavelength / 8
    oracle = oracle_field_ratio(g, edges, step)
    engine = _predict_bodies(scn, scn.bodies, ("mbm",))["mbm"]
    a_oracle = attenuation_db(oracle)
    return {
        "grid_step_m": step,
        "oracle": {"A_db": a_oracle, "re": oracle.value.real, "im": oracle.value.imag,
                   "err": oracle.err_estimate},
        "engine": engine,
        "diff_db": engine["A_db"] - a_oracle,
        "warnings": warnings,
    }


COMMANDS = {
    "predict": cmd_predict,
    "sweep": cmd_sweep,
    "stats": cmd_stats,
    "calibrate": cmd_calibrate,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kedfl", description="Knife-edge body attenuation engine.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--scenario", required=True, help="scenario JSON document")
    p.add_argument("--out", help="output file (CSV for sweep, JSON for calibrate)")
    p.add_argument("--engine", choices=ENGINE_CHOICES, default="all")
    p.add_argument("--grid-step", type=float, help="oracle grid step in metres (default lambda/8)")
    p.add_argument("--threads", type=int, help="worker threads, 0 = one per CPU (env KEDFL_THREADS)")
    p.add_argument("--sweep", help="name of the sweep to run")
    p.add_argument("--measurements", help="landmark measurement JSON for calibrate")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        set_threads(args.threads)
        scn = load_scenario(args.scenario)
        record = COMMANDS[args.command](scn, args)
    except CommandError as exc:
        print(f"kedfl: {exc}", file=sys.stderr)
        if exc.payload is not None:
            _emit(exc.payload)
        return exc.code
    except SchemaError as exc:
        print(f"kedfl: input error at {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ScenarioError as exc:
        print(f"kedfl: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CapabilityError as exc:
        print(f"kedfl: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except QuadratureError as exc:
        print(f"kedfl: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except ValueError as exc:
        print(f"kedfl: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(record)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
