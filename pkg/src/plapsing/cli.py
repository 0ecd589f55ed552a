"""Command-line front end.

    plapsing exponents --N 3 --p 2 --q 1.25
    plapsing eigen --N 2 --p 1.5 --tol 1e-10 --out run/
    plapsing profile --N 3 --p 2 --q 1.2
    plapsing verify --N 3 --p 2.5 --q 1.7 --suite barriers
    plapsing pde --N 2 --p 1.5 --q 0.66 --mode strong --amp 1e4 --grid2 257x65
    plapsing sweep --N 3 --p 2 --q 1.4 --workers 4

Every command prints one JSON document on stdout.  Exit codes: 0 success,
2 nonexistence or removability is the answer, 3 solver non-convergence,
1 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import eigensolver as eig
from . import io
from . import pdesolver as pde
from . import profiles as prof
from .exponents import DomainError, ProblemParams, beta_q, check_bounds, exponent_report, q_star

EXIT_OK, EXIT_USAGE, EXIT_NONEXISTENCE, EXIT_NONCONVERGED = 0, 1, 2, 3
COMMANDS = ("exponents", "eigen", "profile", "verify", "pde", "sweep")
SUITES = ("bounds", "identity", "barriers", "subsolution", "dichotomy")


class UsageError(Exception):
    def __init__(self, message, flag=None):
        super().__init__(message)
        self.flag = flag


@dataclass
class RunConfig:
    command: str
    N: int
    p: float
    q: Optional[float] = None
    tol: float = 1e-10
    grid: int = 4096
    grid2: tuple = (257, 65)
    mode: str = "weak"
    k: float = 1.0
    amp: float = 1e4
    eps: float = 1e-4
    reg_delta: float = 1e-6
    out: Optional[str] = None
    suite: str = "bounds"
    workers: int = 1
    sweep: tuple = (1e-6, 1e6, 25)

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command}", "command")
        for name in ("tol", "grid", "k", "amp", "eps", "reg_delta", "workers"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive", "--" + name.replace("_", "-"))
        if len(self.grid2) != 2 or min(self.grid2) < 16:
            raise UsageError("grid2 must be NRxNTH with both >= 16", "--grid2")
        lo, hi, n = self.sweep
        if not (0 < lo < hi and n >= 2):
            raise UsageError("sweep must be lo:hi:n with 0 < lo < hi, n >= 2", "--sweep")
        if self.mode not in pde.MODES:
            raise UsageError(f"mode must be one of {pde.MODES}", "--mode")
        if self.suite not in SUITES:
            raise UsageError(f"suite must be one of {SUITES}", "--suite")
        if not self.eps < 1:
            raise UsageError("eps must be below 1", "--eps")
        if self.out is not None:
            try:
                Path(self.out).mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise UsageError(f"cannot create output directory: {exc}", "--out")
        return self

    def params(self) -> ProblemParams:
        try:
            ProblemParams(self.N, self.p)
        except DomainError as exc:
            raise UsageError(str(exc), "--N" if int(self.N) != self.N or self.N < 2 else "--p")
        try:
            return ProblemParams(self.N, self.p, self.q)
        except DomainError as exc:
            raise UsageError(str(exc), "--q")

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["grid2"] = list(self.grid2)
        d["sweep"] = list(self.sweep)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}", "--config")
        for key in ("grid2", "sweep"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _grid2(text):
    try:
        a, b = text.lower().split("x")
        return (int(a), int(b))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NRxNTH, got {text!r}")


def _sweep(text):
    try:
        lo, hi, n = text.split(":")
        return (float(lo), float(hi), int(n))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:n, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="plapsing", description="Boundary singularities of -Δ_p u + |∇u|^q = 0.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON file mirroring RunConfig; flags override it")
    ap.add_argument("--N", type=int)
    ap.add_argument("--p", type=float)
    ap.add_argument("--q", type=float)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--grid", type=int, help="angular intervals M for ODE profiles")
    ap.add_argument("--grid2", type=_grid2, help="PDE grid as NRxNTH nodes")
    ap.add_argument("--mode", choices=pde.MODES)
    ap.add_argument("--k", type=float, help="weak-mode data amplitude")
    ap.add_argument("--amp", type=float, help="strong/flat-mode data amplitude")
    ap.add_argument("--eps", type=float, help="inner radius")
    ap.add_argument("--reg-delta", dest="reg_delta", type=float,
                    help="regularization, relative to the scaled data size")
    ap.add_argument("--out", help="directory for CSV artifacts")
    ap.add_argument("--suite", choices=SUITES)
    ap.add_argument("--workers", type=int, help="processes for sweep")
    ap.add_argument("--sweep", type=_sweep, help="omega0 range lo:hi:n relative to the natural scale")
    return ap


def resolve_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    base = {}
    if ns.config:
        try:
            base = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}", "--config")
    base["command"] = ns.command
    for f in dataclasses.fields(RunConfig):
        val = getattr(ns, f.name, None)
        if val is not None and f.name != "command":
            base[f.name] = val
    for req in ("N", "p"):
        if req not in base:
            raise UsageError(f"missing required value {req}", "--" + req)
    return RunConfig.from_dict(base).validate()


# ---------------------------------------------------------------- commands

def _beta_star(params, cfg):
    return eig.solve_beta_star(params.with_q(None), tol=cfg.tol, M=cfg.grid)


def cmd_exponents(cfg, params):
    res = _beta_star(params, cfg)
    return EXIT_OK, exponent_report(params, res.beta_star).as_dict()


def cmd_eigen(cfg, params):
    try:
        res = _beta_star(params, cfg)
    except (eig.IntegrationFailure, eig.NoSignChange) as exc:
        return EXIT_NONCONVERGED, {"error": str(exc)}
    props = eig.certify_properties(res.path, res.profile)
    if cfg.out:
        p = res.profile
        io.write_profile_csv(Path(cfg.out) / "eigen_profile.csv", p.theta, p.omega, p.omega_theta)
    return EXIT_OK, {
        "beta_star": res.beta_star, "identity_gap": res.identity_gap,
        "iterations": res.iterations, "bracket": list(res.bracket),
        "residual_sup": res.profile.residual_sup, "properties": props.as_dict(),
    }


def cmd_profile(cfg, params):
    q = params.require_q() if params.q is not None else None
    if q is None:
        raise UsageError("profile needs --q", "--q")
    bs = _beta_star(params, cfg).beta_star
    qs = q_star(bs, params)
    base = {"beta_q": beta_q(params), "beta_star": bs, "q_star": qs}
    if q >= qs:
        rep = prof.nonexistence_scan(params, cfg.sweep, beta_star=bs)
        return EXIT_NONEXISTENCE, {**base, "regime": "critical_or_above", "bracket": None,
                                   "signature": rep.signature}
    try:
        res = prof.solve_omega_star(params, tol=min(cfg.tol, 1e-12), M=cfg.grid, sweep_spec=cfg.sweep)
    except prof.ThresholdError as exc:
        return EXIT_NONCONVERGED, {**base, "regime": "subcritical", "error": str(exc)}
    if cfg.out:
        p = res.profile
        io.write_profile_csv(Path(cfg.out) / "omega_star.csv", p.theta, p.omega, p.omega_theta)
    return EXIT_OK, {**base, "regime": "subcritical", "omega0": res.omega0,
                     "bracket": list(res.bracket), "end_value": res.end_value,
                     "sign_changes": res.sign_changes, "residual_sup": res.profile.residual_sup}


def _shoot(args):
    omega0, params = args
    return prof.shoot_profile(omega0, params)


def cmd_sweep(cfg, params):
    if params.q is None:
        raise UsageError("sweep needs --q", "--q")
    bs = _beta_star(params, cfg).beta_star
    lo, hi, n = cfg.sweep
    values = prof.natural_scale(params) * np.geomspace(lo, hi, n)
    jobs = [(float(w), params) for w in values]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            outcomes = list(ex.map(_shoot, jobs))
    else:
        outcomes = [_shoot(j) for j in jobs]
    bracket = bool(prof._brackets(outcomes))
    body = {"params": {"N": params.N, "p": params.p, "q": params.q},
            "q_star": q_star(bs, params), "bracket_found": bracket,
            "outcomes": [{"omega0": o.omega0, "exit": o.exit, "end_value": o.end_value}
                         for o in outcomes]}
    return (EXIT_OK if bracket else EXIT_NONEXISTENCE), body


def _suite_bounds(cfg, params):
    res = _beta_star(params, cfg)
    checks = [{"name": n, "satisfied": bool(s)} for n, s in check_bounds(res.beta_star, params)]
    return all(c["satisfied"] for c in checks), {"beta_star": res.beta_star, "checks": checks}


def _suite_identity(cfg, params):
    base = params.with_q(None)
    res = eig.solve_beta_star(base, tol=cfg.tol, M=cfg.grid)
    fine = eig.reconstruct_profile(eig.integrate_phase(res.beta_star, base, 2 * cfg.grid))
    gap2 = eig.eigen_identity_gap(fine, base)
    ok = res.identity_gap < 1e-5 and gap2 <= max(res.identity_gap, 1e-9)
    return ok, {"beta_star": res.beta_star, "gap_M": res.identity_gap, "gap_2M": gap2}


def _suite_barriers(cfg, params):
    if params.q is None:
        raise UsageError("barriers suite needs --q", "--q")
    specs = {
        "power_nominal": prof.BarrierSpec("power", c2_rule="nominal"),
        "power_sharp": prof.BarrierSpec("power", c2_rule="sharp"),
        "log": prof.BarrierSpec("log"),
        "tangential": prof.BarrierSpec("tangential", eps=0.25, R=1.0,
                                       a=prof.tangential_amplitude(params, 0.25, 1.0)),
    }
    out = {}
    for name, spec in specs.items():
        rep = prof.barrier_residual(spec, params)
        out[name] = {"sign_ok": rep.sign_ok, "min_normalized": rep.min_normalized,
                     "c2": rep.c2, "amplitude_ok": rep.amplitude_ok}
    return all(v["sign_ok"] for v in out.values()), out


def _suite_subsolution(cfg, params):
    if params.q is None:
        raise UsageError("subsolution suite needs --q", "--q")
    res = eig.solve_beta_star(params.with_q(None), tol=cfg.tol, M=cfg.grid)
    probe = prof.subsolution_Q1(prof.SubsolutionSpec(0.0, 0.0, g_choice="linear"), res, params)
    g0 = 0.99 * probe.gamma0
    out = {"gamma0": g0, "epsilon0": probe.epsilon0}
    ok = True
    for name, spec in (("linear", prof.SubsolutionSpec(g0, g_choice="linear")),
                       ("power", prof.SubsolutionSpec(g0, g_choice="power"))):
        rep = prof.subsolution_Q1(spec, res, params)
        out[name] = rep.as_dict()
        ok &= rep.max_Q1_region <= 1e-10
    first = prof.subsolution_Q1(prof.SubsolutionSpec(g0, 0.0, g_choice="damped"), res, params)
    if first.k0 is not None:
        rep = prof.subsolution_Q1(prof.SubsolutionSpec(g0, first.k0, g_choice="damped"), res, params)
        out["damped"] = rep.as_dict()
        ok &= rep.max_Q1_region <= 1e-10
    else:
        out["damped"] = None
        ok = False
    return bool(ok), out


def _suite_dichotomy(cfg, params):
    if params.q is None:
        raise UsageError("dichotomy suite needs --q", "--q")
    grid = pde.PolarGrid(cfg.eps, cfg.grid2[0], cfg.grid2[1], params.N)
    rep = pde.dichotomy_experiment(params, grid, k=cfg.k, A=cfg.amp, reg_delta=cfg.reg_delta)
    rep.pop("fields")
    ok = (rep["weak"]["rel_error"] < 0.05 and rep["strong"]["rel_error"] < 0.05
          and rep["weak"]["profile_distance"] < 0.05 and rep["strong"]["profile_distance"] < 0.05)
    return ok, rep


def cmd_verify(cfg, params):
    fn = {"bounds": _suite_bounds, "identity": _suite_identity, "barriers": _suite_barriers,
          "subsolution": _suite_subsolution, "dichotomy": _suite_dichotomy}[cfg.suite]
    ok, body = fn(cfg, params)
    return EXIT_OK, {"suite": cfg.suite, "passed": bool(ok), "report": body}


def cmd_pde(cfg, params):
    if params.q is None:
        raise UsageError("pde needs --q", "--q")
    bs = _beta_star(params, cfg).beta_star
    qs = q_star(bs, params)
    if cfg.mode == "strong" and params.q >= qs:
        return EXIT_NONEXISTENCE, {"regime": "critical_or_above", "q_star": qs,
                                   "detail": "no strongly singular profile exists"}
    grid = pde.PolarGrid(cfg.eps, cfg.grid2[0], cfg.grid2[1], params.N)
    amp = cfg.k if cfg.mode == "weak" else cfg.amp
    f = pde.solve_steady(grid, cfg.mode, params, amplitude=amp, reg_delta=cfg.reg_delta,
                         tol=cfg.tol, beta_star=bs)
    body = {"mode": cfg.mode, "q_star": qs, "converged": f.converged, "stats": f.solver_stats}
    if cfg.out:
        io.write_field_csv(Path(cfg.out) / f"field_{cfg.mode}.csv", grid.r_nodes, grid.theta_nodes, f.u)
    if not f.converged:
        return EXIT_NONCONVERGED, body
    try:
        body["fit"] = pde.fit_exponent(f).as_dict()
    except pde.FitError as exc:
        body["fit"] = {"error": str(exc)}
    const, finite = pde.gradient_estimate_check(f, params)
    body["gradient_constant"] = const
    body["harnack"] = pde.harnack_spot_check(f).as_dict()
    body["bound_ratio_sharp"] = pde.universal_bound_ratio(f, "sharp", shifted=True)
    if cfg.mode == "flat" and params.q >= qs:
        body["regime"] = "removable"
        return EXIT_NONEXISTENCE, body
    return EXIT_OK, body


HANDLERS = {"exponents": cmd_exponents, "eigen": cmd_eigen, "profile": cmd_profile,
            "verify": cmd_verify, "pde": cmd_pde, "sweep": cmd_sweep}


def run(cfg: RunConfig) -> tuple:
    """Dispatch a validated config; returns (exit code, JSON-ready summary)."""
    params = cfg.params()
    code, body = HANDLERS[cfg.command](cfg, params)
    return code, {"config": cfg.as_dict(), "result": body}


def main(argv=None) -> int:
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        code, summary = run(cfg)
    except UsageError as exc:
        flag = f" [{exc.flag}]" if exc.flag else ""
        print(f"usage error{flag}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(io.dumps(summary))
    return code


if __name__ == "__main__":
    sys.exit(main())
