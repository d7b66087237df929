"""Command-line front end: scenario runs, sweeps, worst case, prediction,
MDP solving, simulation, and report export.

Scenario files are JSON.  Either name a bundled IXP ("ixp": "linx"),
or give a region preset / explicit regular price plus exactly one
demand-scale source: a traffic CSV ("trace") or an explicit billable
demand ("d_bar" with "mu"/"theta").  Remaining keys: beta (scalar or
list), gamma, r_ratio, m_ratio, kind, alpha_bar, label.

Profit and surplus figures are in price*demand units ($/Mbps * Gbps);
multiplying by 1000 gives $ per month under 95th-percentile billing,
and the exported reports carry the converted columns too.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import calibration, mdp, pricing, traffic, welfare
from .simulate import SimConfig, compare_to_analytic, simulate_policy

DOLLAR_NOTE = "dollars = price($/Mbps) * demand(Gbps) * 1000, monthly 95th-percentile billing"
USD_PER_UNIT = 1000.0

DEFAULT_BETAS = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
SWEEP_DEFAULTS = {
    "r_ratio": [round(0.1 * k, 2) for k in range(1, 10)],
    "m_ratio": [round(0.5 + 0.1 * k, 2) for k in range(11)],
    "gamma": [round(1.1 + 0.1 * k, 2) for k in range(10)],
    "beta": DEFAULT_BETAS,
}


@dataclass
class Scenario:
    label: str
    p_bar: float
    d_bar: float
    mu: float
    theta: float
    betas: list
    gamma: float
    r_ratio: float
    m_ratio: float
    kind: str
    alpha_bar: float
    demand_source: str

    def input_for(self, beta: float) -> calibration.CalibrationInput:
        return calibration.CalibrationInput(
            p_bar=self.p_bar,
            d_bar=self.d_bar,
            beta=beta,
            gamma=self.gamma,
            alpha_bar=self.alpha_bar,
            mu=self.mu,
            theta=self.theta,
            demand_source=self.demand_source,
        )


def load_scenario(source) -> Scenario:
    """Accept a path to a scenario JSON file or an already-parsed dict."""
    if isinstance(source, dict):
        obj = dict(source)
    else:
        with open(source) as fh:
            obj = json.load(fh)

    ixp = obj.get("ixp")
    if ixp:
        stats = calibration.IXP_STATS[ixp.lower()]
        obj.setdefault("region", stats["region"])
        obj.setdefault("mu", stats["mu"])
        obj.setdefault("theta", stats["theta"])
        obj.setdefault("label", ixp.upper())

    if obj.get("p_bar") is not None:
        p_bar = float(obj["p_bar"])
    elif obj.get("region"):
        p_bar = calibration.REGION_PRICES[obj["region"].lower()]
    else:
        raise ValueError("scenario needs a region preset or an explicit p_bar")

    sources = [k for k in ("trace", "d_bar") if obj.get(k) is not None]
    if ixp and not sources:
        d_bar = calibration.PEAK_DEMAND_PROXY * calibration.IXP_STATS[ixp.lower()]["peak"]
        demand_source = "0.9*peak proxy"
        mu, theta = float(obj["mu"]), float(obj["theta"])
    elif len(sources) != 1:
        raise ValueError("scenario needs exactly one demand-scale source (trace or d_bar)")
    elif sources[0] == "trace":
        series = traffic.load_series(obj["trace"])
        d_bar = traffic.percentile_95(series)
        report = traffic.prediction_errors(series)
        mu, theta = report.residual_mean, report.residual_sd
        demand_source = f"trace p95 ({obj['trace']})"
    else:
        d_bar = float(obj["d_bar"])
        mu, theta = float(obj.get("mu", 0.0)), float(obj.get("theta", 1.0))
        demand_source = "explicit"

    betas = obj.get("beta", DEFAULT_BETAS)
    if not isinstance(betas, (list, tuple)):
        betas = [betas]
    r_ratio = float(obj.get("r_ratio", 0.5))
    m_ratio = float(obj.get("m_ratio", 1.0))
    if r_ratio <= 0 or m_ratio <= 0:
        raise ValueError("cost and penalty ratios must be positive")

    return Scenario(
        label=obj.get("label", "scenario"),
        p_bar=p_bar,
        d_bar=d_bar,
        mu=mu,
        theta=theta,
        betas=[float(b) for b in betas],
        gamma=float(obj.get("gamma", 1.25)),
        r_ratio=r_ratio,
        m_ratio=m_ratio,
        kind=obj.get("kind", "iso"),
        alpha_bar=float(obj.get("alpha_bar", 2.0)),
        demand_source=demand_source,
    )


def _solve_point(scn: Scenario, beta: float, r_ratio=None, m_ratio=None, gamma=None) -> dict:
    """Calibrate and solve one grid point; returns a flat result row."""
    inp = scn.input_for(beta)
    if gamma is not None:
        inp = replace(inp, gamma=gamma)
    scen = calibration.calibrate(
        inp,
        kind=scn.kind,
        r_ratio=scn.r_ratio if r_ratio is None else r_ratio,
        m_ratio=scn.m_ratio if m_ratio is None else m_ratio,
    )
    sol = pricing.optimize_price(scen.demand, scen.uncertainty, scen.market)
    rep = welfare.welfare_report(scen.demand, scen.uncertainty, scen.market, sol)
    row = {
        "label": scn.label,
        "kind": scn.kind,
        "beta": beta,
        "gamma": inp.gamma,
        "r_ratio": scn.r_ratio if r_ratio is None else r_ratio,
        "m_ratio": scn.m_ratio if m_ratio is None else m_ratio,
        "p_bar": scn.p_bar,
        "p_star": sol.p_star,
        "price_ratio": sol.p_star / scn.p_bar,
        "discount_pct": 100.0 * (1.0 - sol.p_star / scn.p_bar),
        "overflow_probability": sol.overflow_probability,
        "expected_profit": sol.expected_profit,
        "surplus_spot": rep.surplus_spot,
        "surplus_regular": rep.surplus_regular,
        "profit_improvement_pct": rep.profit_improvement_pct,
        "surplus_improvement_pct": rep.surplus_improvement_pct,
        "profit_gain_usd": rep.profit_gain_abs * USD_PER_UNIT,
        "surplus_gain_usd": rep.surplus_gain_abs * USD_PER_UNIT,
        "welfare_spot": rep.welfare_spot,
        "welfare_regular": rep.welfare_regular,
        "penalty_assumption_ok": scen.penalty_assumption_ok,
        "demand_source": scn.demand_source,
    }
    return row


STATIC_COLUMNS = [
    "label", "kind", "beta", "gamma", "r_ratio", "m_ratio", "p_bar", "p_star",
    "price_ratio", "discount_pct", "overflow_probability", "expected_profit",
    "surplus_spot", "surplus_regular", "profit_improvement_pct",
    "surplus_improvement_pct", "profit_gain_usd", "surplus_gain_usd",
    "welfare_spot", "welfare_regular", "penalty_assumption_ok", "demand_source",
]


def cmd_calibrate(scn: Scenario):
    rows = []
    for beta in scn.betas:
        inp = scn.input_for(beta)
        scen = calibration.calibrate(inp, kind=scn.kind, r_ratio=scn.r_ratio, m_ratio=scn.m_ratio)
        rows.append({
            "label": scn.label,
            "kind": scn.kind,
            "beta": beta,
            "p_bar": scn.p_bar,
            "d_bar": scn.d_bar,
            "r_bar": scen.market.r_bar,
            "r": scen.market.r,
            "m": scen.market.m,
            "capacity": scen.market.capacity,
            "demand_v": scen.demand.v,
            "demand_alpha": scen.demand.alpha,
            "mu_scaled": scen.uncertainty.mu,
            "theta_scaled": scen.uncertainty.theta,
            "penalty_assumption_ok": scen.penalty_assumption_ok,
            "demand_source": scn.demand_source,
        })
    columns = list(rows[0].keys())
    return {"command": "calibrate", "dollar_note": DOLLAR_NOTE}, rows, columns


def cmd_static(scn: Scenario):
    rows = [_solve_point(scn, beta) for beta in scn.betas]
    return {"command": "static", "dollar_note": DOLLAR_NOTE}, rows, STATIC_COLUMNS


def cmd_sweep(scn: Scenario, param: str, values=None):
    """One row per swept value per beta; calibration failures are soft."""
    if param not in SWEEP_DEFAULTS:
        raise ValueError(f"sweep parameter must be one of {sorted(SWEEP_DEFAULTS)}, got {param}")
    values = SWEEP_DEFAULTS[param] if values is None else list(values)
    rows = []
    for value in values:
        betas = [value] if param == "beta" else scn.betas
        for beta in betas:
            kwargs = {}
            if param == "r_ratio":
                kwargs["r_ratio"] = value
            elif param == "m_ratio":
                kwargs["m_ratio"] = value
            elif param == "gamma":
                kwargs["gamma"] = value
            try:
                row = _solve_point(scn, beta, **kwargs)
            except (ValueError, RuntimeError) as exc:
                row = {"label": scn.label, "kind": scn.kind, "beta": beta,
                       "sweep_param": param, "sweep_value": value, "error": str(exc)}
                rows.append(row)
                continue
            row["sweep_param"] = param
            row["sweep_value"] = value
            rows.append(row)

    summary = {}
    for beta in sorted({r["beta"] for r in rows}):
        prices = [r["p_star"] for r in rows if r.get("p_star") is not None and r["beta"] == beta]
        summary[f"p_star_nondecreasing_beta_{beta:g}"] = bool(
            all(b >= a - 1e-9 for a, b in zip(prices, prices[1:]))
        )
    meta = {"command": "sweep", "parameter": param, "dollar_note": DOLLAR_NOTE,
            "monotonicity": summary}
    columns = STATIC_COLUMNS + ["sweep_param", "sweep_value", "error"]
    return meta, rows, columns


WORST_CASE = {"r_ratio": 0.9, "m_ratio": 1.5, "gamma": 1.1}


def cmd_worst_case(scn: Scenario):
    """High cost, high penalty, low elasticity; floor violations are findings."""
    rows = []
    findings = []
    surplus_floor = 5.0 if scn.kind == "iso" else 60.0
    for beta in scn.betas:
        row = _solve_point(scn, beta, **WORST_CASE)
        row["sweep_param"] = "worst_case"
        rows.append(row)
        checks = {
            "spot_below_regular": row["p_star"] < scn.p_bar,
            "profit_improvement_min_10pct": row["profit_improvement_pct"] >= 10.0,
            f"surplus_improvement_min_{surplus_floor:g}pct":
                row["surplus_improvement_pct"] >= surplus_floor,
        }
        for name, ok in checks.items():
            if not ok:
                findings.append({"beta": beta, "check": name,
                                 "profit_improvement_pct": row["profit_improvement_pct"],
                                 "surplus_improvement_pct": row["surplus_improvement_pct"]})
    meta = {"command": "worst-case", "parameters": WORST_CASE,
            "dollar_note": DOLLAR_NOTE, "findings": findings}
    columns = STATIC_COLUMNS + ["sweep_param"]
    return meta, rows, columns


def cmd_predict(trace_path: str, window: float):
    series = traffic.load_series(trace_path)
    report = traffic.prediction_errors(series, window)
    meta = {
        "command": "predict",
        "trace": str(trace_path),
        "samples": len(series),
        "step_seconds": series.step,
        "gaps_filled": series.gaps_filled,
        "window_seconds": window,
        "percentile_95": traffic.percentile_95(series),
        "residual_mean": report.residual_mean,
        "residual_sd": report.residual_sd,
        "residual_count": report.residual_count,
        "degenerate": report.degenerate,
    }
    rows = [{"theoretical_quantile": float(a), "sample_quantile": float(b)}
            for a, b in report.qq_points]
    return meta, rows, ["theoretical_quantile", "sample_quantile"]


def cmd_mdp(config_path: str, algorithm: str, tol: float):
    with open(config_path) as fh:
        cfg = json.load(fh)
    spec = mdp.MdpSpec.from_config(cfg)
    solve = mdp.policy_iteration if algorithm == "pi" else mdp.relative_value_iteration
    sol = solve(spec, tol=tol)
    structure = mdp.verify_structure(sol)
    meta = {
        "command": "mdp",
        "algorithm": algorithm,
        "capacity": spec.capacity,
        "price_points": len(spec.price_grid),
        "j_star": sol.j_star,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "structure": {
            "h_monotone": structure.h_monotone,
            "h_concave": structure.h_concave,
            "price_monotone": structure.price_monotone,
            "violations": structure.violations,
        },
    }
    rows = [{"state": n, "price": p, "h": h} for n, p, h in sol.csv_rows()]
    return meta, rows, ["state", "price", "h"], spec, sol


def cmd_simulate(config_path: str, horizon: float, warmup, seed: int):
    meta_mdp, _, _, spec, sol = cmd_mdp(config_path, "pi", 1e-9)
    cfg = SimConfig(spec=spec, policy=sol.policy, horizon=horizon, warmup=warmup, seed=seed)
    result = simulate_policy(cfg)
    report = compare_to_analytic(result, spec, sol.policy)
    meta = {
        "command": "simulate",
        "seed": seed,
        "horizon": horizon,
        "warmup": cfg.warmup,
        "j_star": sol.j_star,
        "revenue_rate_estimate": result.revenue_rate_estimate,
        "revenue_rate_stderr": result.revenue_rate_stderr,
        "transitions": result.transitions,
        "stuck_state": result.stuck_state,
        "revenue_z": report.revenue_z,
        "tv_distance": report.tv_distance,
        "passed": report.passed,
    }
    rows = [{"state": n, "occupancy": float(o), "steady_state": float(p)}
            for n, (o, p) in enumerate(zip(result.occupancy,
                                           mdp.steady_state(spec, sol.policy)))]
    return meta, rows, ["state", "occupancy", "steady_state"]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.6g}"
    if value is None:
        return ""
    return str(value)


def export_report(meta: dict, rows: list, columns: list, fmt: str, path):
    """Write a report; CSV carries the meta as leading '#' comment lines."""
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump({"meta": meta, "rows": rows, "columns": columns}, fh, indent=2,
                      default=lambda o: o.item() if isinstance(o, np.generic) else str(o))
            fh.write("\n")
    elif fmt == "csv":
        with open(path, "w") as fh:
            for key, value in meta.items():
                fh.write(f"# {key}: {json.dumps(value) if isinstance(value, (dict, list)) else value}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(row.get(c)) for c in columns) + "\n")
    else:
        raise ValueError(f"format must be json or csv, got {fmt!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spottransit",
        description="Spot-transit pricing toolkit (static optimum, sweeps, dynamic MDP, simulation)",
    )
    parser.add_argument("--scenario", help="scenario JSON file")
    parser.add_argument("--out", default="report", help="output path without extension")
    parser.add_argument("--format", default="json", choices=["json", "csv"])
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("calibrate", "static", "worst-case"):
        sub.add_parser(name)
    p_sweep = sub.add_parser("sweep")
    p_sweep.add_argument("--param", required=True, choices=sorted(SWEEP_DEFAULTS))
    p_sweep.add_argument("--values", help="comma-separated override of the default grid")
    p_pred = sub.add_parser("predict")
    p_pred.add_argument("--trace", required=True)
    p_pred.add_argument("--window", type=float, default=604800.0)
    p_mdp = sub.add_parser("mdp")
    p_mdp.add_argument("--config", required=True, help="MDP config JSON")
    p_mdp.add_argument("--algorithm", default="pi", choices=["pi", "rvi"])
    p_mdp.add_argument("--tol", type=float, default=1e-9)
    p_sim = sub.add_parser("simulate")
    p_sim.add_argument("--config", required=True, help="MDP config JSON")
    p_sim.add_argument("--horizon", type=float, default=1e5)
    p_sim.add_argument("--warmup", type=float, default=None)
    p_sim.add_argument("--seed", type=int, required=True)
    p_rep = sub.add_parser("report")
    p_rep.add_argument("--in", dest="infile", required=True, help="previously exported JSON report")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args, parser)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args, parser) -> int:
    if args.command in ("calibrate", "static", "sweep", "worst-case"):
        if not args.scenario:
            parser.error(f"{args.command} needs --scenario")
        scn = load_scenario(args.scenario)
        if args.command == "calibrate":
            meta, rows, columns = cmd_calibrate(scn)
        elif args.command == "static":
            meta, rows, columns = cmd_static(scn)
        elif args.command == "sweep":
            values = [float(v) for v in args.values.split(",")] if args.values else None
            meta, rows, columns = cmd_sweep(scn, args.param, values)
        else:
            meta, rows, columns = cmd_worst_case(scn)
    elif args.command == "predict":
        meta, rows, columns = cmd_predict(args.trace, args.window)
    elif args.command == "mdp":
        meta, rows, columns, _, _ = cmd_mdp(args.config, args.algorithm, args.tol)
    elif args.command == "simulate":
        meta, rows, columns = cmd_simulate(args.config, args.horizon, args.warmup, args.seed)
    else:  # report: re-export a JSON report in the requested format
        with open(args.infile) as fh:
            saved = json.load(fh)
        meta, rows = saved["meta"], saved["rows"]
        columns = saved.get("columns") or (list(rows[0].keys()) if rows else [])

    path = f"{args.out}.{args.format}"
    export_report(meta, rows, columns, args.format, path)
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
