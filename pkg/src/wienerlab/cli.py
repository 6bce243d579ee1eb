"""Command-line front end.

Subcommands: ``simulate``, ``frac deriv``, ``frac integrate``, ``clark-ocone``,
``kernel sample``, ``kernel entropy``, ``optimize``, ``replicate``, ``report``.

Exit codes: 0 success, 1 validation or I/O error, 2 completed with numerical
warnings (entropy divergence, never-hit intervals, norm divergence).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import frac_calc, gauss_sim, malliavin, pricing, strategy, utility
from . import io as wio
from .errors import MissingArtifact, NumericalFlag, ValidationError, WienerlabError, InvalidParameter
from .paths import GridFunction, SamplePath, from_array, uniform_grid

log = logging.getLogger("wienerlab")

SCHEMA_VERSION = 1

# option name -> default; None means "required by some subcommand"
DEFAULTS = {
    "model": "fbm",
    "hurst": 0.7,
    "hurst2": None,
    "bifrac_k": None,
    "a": 0.0,
    "b": 0.0,
    "sigma": 1.0,
    "y0": 0.0,
    "steps": 1024,
    "paths": 100,
    "seed": None,
    "alpha": None,
    "order": None,
    "theta": "const:0.0",
    "utility": "exponential",
    "beta": 1.0,
    "gamma": 0.5,
    "w": 1.0,
    "levels": 8,
    "workers": 1,
    "out": ".",
    "input": None,
    "against": None,
    "functional": "square",
    "target": "self",
    "side": "left",
    "horizon": 1.0,
}

# values that never change results and stay out of manifests
NON_SEMANTIC = {"workers", "out", "config"}


@dataclass
class ExperimentConfig:
    command: str
    options: dict
    model: gauss_sim.GaussianModel | None = None
    theta: pricing.ThetaSpec | None = None
    utility: utility.UtilitySpec | None = None
    schedule: strategy.StrategySchedule | None = None
    schema_version: int = SCHEMA_VERSION
    flags: list = field(default_factory=list)

    @property
    def output_dir(self) -> Path:
        return Path(self.options["out"])

    def manifest(self) -> dict:
        opts = {k: v for k, v in sorted(self.options.items()) if k not in NON_SEMANTIC}
        return {"command": self.command, "options": opts, "schema_version": self.schema_version}


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def parse_theta(text: str, T: float = 1.0) -> pricing.ThetaSpec:
    """``const:<v> | power:<c>,<e> | ex42:<mu>,<r>,<sigma>,<H> | file:<path>``."""
    if ":" not in text:
        raise InvalidParameter(f"bad --theta {text!r}")
    kind, _, rest = text.partition(":")
    try:
        if kind == "const":
            return pricing.ThetaSpec.constant(float(rest), T)
        if kind == "power":
            c, e = (float(v) for v in rest.split(","))
            return pricing.ThetaSpec.power_law(c, e, T)
        if kind == "ex42":
            mu, r, sig, H = (float(v) for v in rest.split(","))
            return pricing.ThetaSpec.example42(mu, r, sig, H, T)
        if kind == "file":
            return pricing.ThetaSpec.custom(_read_column(rest), T)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise InvalidParameter(f"bad --theta {text!r}: {exc}") from exc
    raise InvalidParameter(f"unknown --theta kind {kind!r}")


def _read_column(path) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise MissingArtifact(f"missing file {p}")
    rows = [r.strip() for r in p.read_text().splitlines() if r.strip()]
    vals = []
    for r in rows:
        last = r.split(",")[-1]
        try:
            vals.append(float(last))
        except ValueError:
            continue  # header
    if not vals:
        raise InvalidParameter(f"no numbers in {p}")
    return np.asarray(vals)


def build_model(o: dict) -> gauss_sim.GaussianModel:
    kind, T = o["model"], float(o["horizon"])
    H = float(o["hurst"])
    if kind == "wiener":
        return gauss_sim.GaussianModel.wiener(T)
    if kind == "fbm":
        return gauss_sim.GaussianModel.fbm(H, T)
    if kind == "fou":
        return gauss_sim.GaussianModel.fou(o["a"], o["b"], o["sigma"], H, o["y0"], T)
    if kind == "subfractional":
        return gauss_sim.GaussianModel.subfractional(H, T)
    if kind == "bifractional":
        if o["bifrac_k"] is None:
            raise InvalidParameter("--bifrac-k is required for the bifractional model")
        return gauss_sim.GaussianModel.bifractional(H, o["bifrac_k"], T)
    if kind == "mixed":
        return gauss_sim.GaussianModel.mixed(H, T)
    if kind == "fbm_combo":
        if o["hurst2"] is None:
            return gauss_sim.GaussianModel.fbm_combo([o["a"] or 1.0], [H], T)
        return gauss_sim.GaussianModel.fbm_combo([o["a"], o["b"]], [H, o["hurst2"]], T)
    raise InvalidParameter(f"unknown --model {kind!r}")


def build_utility(o: dict) -> utility.UtilitySpec:
    k = o["utility"]
    if k == "exponential":
        return utility.UtilitySpec.exponential(o["beta"])
    if k == "power":
        return utility.UtilitySpec.power(o["gamma"])
    if k == "log":
        return utility.UtilitySpec.log()
    raise InvalidParameter(f"unknown --utility {k!r}")


def _seed(o):
    if o.get("seed") is not None:
        return int(o["seed"])
    env = os.environ.get("WIENERLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InvalidParameter(f"WIENERLAB_SEED is not an integer: {env!r}") from exc
    return 0


def _check_counts(o):
    if int(o["steps"]) < 1 or int(o["paths"]) < 1:
        raise InvalidParameter("--steps and --paths must be >= 1")
    if int(o["workers"]) < 1:
        raise InvalidParameter("--workers must be >= 1")
    if int(o["seed"]) < 0:
        raise InvalidParameter("seed must be non-negative")


def make_config(command: str, o: dict) -> ExperimentConfig:
    """Validate everything the subcommand needs before any computation."""
    o = dict(o)
    o["seed"] = _seed(o)
    _check_counts(o)
    cfg = ExperimentConfig(command, o)
    if command == "simulate":
        cfg.model = build_model(o)
    elif command in ("kernel sample", "kernel entropy", "optimize"):
        cfg.theta = parse_theta(o["theta"], float(o["horizon"]))
        if command == "optimize":
            cfg.utility = build_utility(o)
            if cfg.utility.kind != "exponential" and not float(o["w"]) > 0:
                raise InvalidParameter("--w must be positive for power and log utility")
    elif command == "replicate":
        if o["target"] != "self":
            raise InvalidParameter("only --target self is supported")
        cfg.schedule = strategy.StrategySchedule.default(int(o["levels"]))
        if int(o["steps"]) < 2 ** (int(o["levels"]) + 1):
            raise InvalidParameter("--steps too small for the number of levels")
        frac_calc.volterra.check_hurst_half(o["hurst"])
    elif command in ("frac deriv", "frac integrate"):
        if o["input"] is None:
            raise InvalidParameter("--input is required")
        if command == "frac integrate" and o["against"] is None:
            raise InvalidParameter("--against is required")
    elif command == "clark-ocone":
        if o["functional"] not in ("linear", "square", "exp"):
            raise InvalidParameter("--functional must be linear, square or exp")
    return cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _wiener(cfg):
    o = cfg.options
    n, P, T = int(o["steps"]), int(o["paths"]), float(o["horizon"])
    dW = gauss_sim.wiener_increments(n, P, o["seed"], T, workers=o["workers"])
    W = np.zeros((P, n + 1))
    W[:, 1:] = np.cumsum(dW, axis=1)
    return uniform_grid(T, n), W


def _artifact(cfg, kind, body):
    out = {"artifact": kind, "manifest": cfg.manifest()}
    out.update(body)
    return out


def cmd_simulate(cfg):
    o = cfg.options
    times, vals = gauss_sim.simulate_array(cfg.model, int(o["steps"]), int(o["paths"]), o["seed"], o["workers"])
    man = gauss_sim.manifest(cfg.model, o["steps"], o["paths"], o["seed"])
    wio.write_paths_csv(cfg.output_dir / "paths.csv", from_array(times, vals))
    wio.write_json(cfg.output_dir / "manifest.json", _artifact(cfg, "simulate", man))
    return 0


def _load_single(path):
    paths = wio.read_paths_csv(path)
    return GridFunction(paths[0].times, paths[0].values)


def cmd_frac_deriv(cfg):
    o = cfg.options
    f = _load_single(o["input"])
    order = o["order"] if o["order"] is not None else (o["alpha"] if o["alpha"] is not None else 0.5)
    p = frac_calc.FracParams(float(order), float(f.times[0]), float(f.times[-1]))
    if o["side"] == "left":
        d = frac_calc.rl_derivative_left(f, p)
    elif o["side"] == "right":
        d = frac_calc.rl_derivative_right(f, p)
    else:
        raise InvalidParameter("--side must be left or right")
    wio.atomic_write_text(cfg.output_dir / "derivative.csv", wio.table_text(["t", "value"], [d.times, d.values]))
    wio.write_json(cfg.output_dir / "derivative.json", _artifact(cfg, "frac-deriv", {"order": order, "side": o["side"], "n_points": len(d)}))
    return 0


def cmd_frac_integrate(cfg):
    o = cfg.options
    f = _load_single(o["input"])
    g = _load_single(o["against"])
    alpha = o["alpha"] if o["alpha"] is not None else frac_calc.default_alpha(0.7)
    flags = []
    try:
        val = frac_calc.gls_integral(f, g, alpha)
    except NumericalFlag as exc:
        flags.append(f"norm-divergence: {exc}")
        val = frac_calc.gls_integral(f, g, alpha, check_norm=False)
    body = {
        "alpha": alpha,
        "integral": val,
        "lambda_alpha": frac_calc.lambda_alpha(g, alpha),
        "holder_norm": frac_calc.holder_norm(f, alpha, float(f.times[-1])),
        "flags": flags,
    }
    wio.write_json(cfg.output_dir / "integral.json", _artifact(cfg, "frac-integrate", body))
    return 2 if flags else 0


def cmd_clark_ocone(cfg):
    o = cfg.options
    T = float(o["horizon"])
    F = {
        "linear": malliavin.TerminalFunctional.linear,
        "square": malliavin.TerminalFunctional.square,
        "exp": malliavin.TerminalFunctional.exp,
    }[o["functional"]](T)
    times, W = _wiener(cfg)
    res = []
    first = None
    for i, row in enumerate(W):
        w = SamplePath(times, row, i)
        th = malliavin.clark_ocone_integrand(F, w)
        if first is None:
            first = th
        res.append(malliavin.verify_representation(F, w, th))
    res = np.asarray(res)
    body = {
        "functional": o["functional"],
        "expectation": malliavin.expectation(F),
        "median_residual": float(np.median(res)),
        "max_residual": float(np.max(res)),
    }
    wio.atomic_write_text(cfg.output_dir / "integrand.csv", wio.table_text(["t", "value"], [first.times, first.values]))
    wio.atomic_write_text(cfg.output_dir / "residuals.csv", wio.table_text(["path_id", "residual"], [np.arange(res.size), res]))
    wio.write_json(cfg.output_dir / "clark_ocone.json", _artifact(cfg, "clark-ocone", body))
    return 0


def _kernel(cfg):
    times, W = _wiener(cfg)
    return pricing.sample_kernel_array(cfg.theta, times, W)


def cmd_kernel_sample(cfg):
    b = _kernel(cfg)
    m, se = pricing.mc_mean(b.phi_T)
    text = wio.table_text(["path_id", "phi_T", "log_phi_T"], [np.arange(len(b)), b.phi_T, b.log_phi_T])
    wio.atomic_write_text(cfg.output_dir / "kernel.csv", text)
    wio.write_json(cfg.output_dir / "kernel.json", _artifact(cfg, "kernel-sample", {"theta": cfg.theta.to_dict(), "mean_phi": m, "SE": se}))
    return 0


def cmd_kernel_entropy(cfg):
    b = _kernel(cfg)
    e1 = pricing.relative_entropy(b, "P*||P")
    e2 = pricing.relative_entropy(b, "P||P*")
    flags = [f"entropy-divergence ({d})" for d, e in (("P*||P", e1), ("P||P*", e2)) if not e.stable]
    body = {
        "theta": cfg.theta.to_dict(),
        "entropy_Pstar_P": e1.value,
        "entropy_Pstar_P_SE": e1.se,
        "entropy_P_Pstar": e2.value,
        "entropy_P_Pstar_SE": e2.se,
        "flags": flags,
    }
    wio.write_json(cfg.output_dir / "entropy.json", _artifact(cfg, "kernel-entropy", body))
    return 2 if flags else 0


def cmd_optimize(cfg):
    b = _kernel(cfg)
    prof = utility.optimal_profile(cfg.utility, float(cfg.options["w"]), b)
    body = prof.report()
    body["theta"] = cfg.theta.to_dict()
    wio.write_json(cfg.output_dir / "optimize.json", _artifact(cfg, "optimize", body))
    return 2 if prof.flags else 0


def cmd_replicate(cfg):
    o = cfg.options
    H, n = float(o["hurst"]), int(o["steps"])
    times, B = gauss_sim.sample_exact_array(gauss_sim.GaussianModel.fbm(H), n, 1, o["seed"])
    G = SamplePath(times, B[0], 0)
    sched = cfg.schedule
    psi, state = strategy.construct_strategy(G, G, sched)
    alpha = o["alpha"] if o["alpha"] is not None else frac_calc.default_alpha(H)
    norms = strategy.norm_decay_check(strategy.integrand_path(G, state, 4), sched, alpha)
    levels = state.to_dict()["levels"]
    for lv, nm in zip(levels, norms):
        lv["psi_norm"] = nm
        lv["target_error"] = strategy.replication_error(state, float(G.values[-1]), lv["level"] + 1)[1]
    body = {"schedule": sched.to_dict(), "alpha": alpha, "levels": levels}
    flags = [f"never-hit at level {lv['level']}" for lv in levels if lv["never_hit"]]
    body["flags"] = flags
    wio.atomic_write_text(cfg.output_dir / "psi.csv", wio.table_text(["t", "value"], [psi.times, psi.values]))
    wio.write_json(cfg.output_dir / "replicate.json", _artifact(cfg, "replicate", body))
    return 2 if flags else 0


def cmd_report(cfg):
    root = cfg.output_dir
    files = sorted(p for p in root.rglob("*.json") if not p.name.startswith("report"))
    arts = []
    for p in files:
        try:
            d = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError):
            continue
        if isinstance(d, dict) and "artifact" in d:
            arts.append((p, d))
    if not arts:
        raise MissingArtifact(f"no run artifacts under {root}")
    util_rows, ent_rows, res_rows = [], [], []
    for p, d in arts:
        run = str(p.parent.relative_to(root)) if p.parent != root else "."
        seed = d["manifest"]["options"].get("seed")
        if d["artifact"] == "optimize":
            util_rows.append((run, seed, d["utility"], d["w"], d["expected_utility"], d["SE"], d["closed_form"], d["budget_residual"], d["c_star"]))
        elif d["artifact"] == "kernel-entropy":
            ent_rows.append((run, seed, d["theta"]["kind"], d["entropy_Pstar_P"], d["entropy_Pstar_P_SE"], d["entropy_P_Pstar"], d["entropy_P_Pstar_SE"]))
        elif d["artifact"] == "replicate":
            for lv in d["levels"]:
                res_rows.append((run, seed, lv["level"], lv["case"], lv["phi1_residual"], lv["psi_norm"]))
    written = []

    def dump(name, header, rows):
        if not rows:
            return
        cols = [np.asarray([r[j] for r in rows]) for j in range(len(header))]
        wio.atomic_write_text(root / name, wio.table_text(header, cols))
        written.append(name)

    dump("report_utility.csv", ["run", "seed", "utility", "w", "expected_utility", "SE", "closed_form", "budget_residual", "c_star"], util_rows)
    dump("report_entropy.csv", ["run", "seed", "theta", "H_Pstar_P", "H_Pstar_P_SE", "H_P_Pstar", "H_P_Pstar_SE"], ent_rows)
    dump("report_residuals.csv", ["run", "seed", "level", "case", "phi1_residual", "psi_norm"], res_rows)
    for name in written:
        print(name)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "frac deriv": cmd_frac_deriv,
    "frac integrate": cmd_frac_integrate,
    "clark-ocone": cmd_clark_ocone,
    "kernel sample": cmd_kernel_sample,
    "kernel entropy": cmd_kernel_entropy,
    "optimize": cmd_optimize,
    "replicate": cmd_replicate,
    "report": cmd_report,
}


def _add_common(p: argparse.ArgumentParser):
    a = p.add_argument
    a("--config", help="JSON file with option values; flags override it")
    a("--model", choices=["wiener", "fbm", "fou", "subfractional", "bifractional", "mixed", "fbm_combo"])
    a("--hurst", type=float)
    a("--hurst2", type=float, help="second Hurst index of fbm_combo")
    a("--bifrac-k", dest="bifrac_k", type=float)
    a("--a", type=float, help="fOU mean reversion, or first fbm_combo weight")
    a("--b", type=float, help="fOU drift level, or second fbm_combo weight")
    a("--sigma", type=float)
    a("--y0", type=float)
    a("--horizon", type=float)
    a("--steps", type=int)
    a("--paths", type=int)
    a("--seed", type=int, help="defaults to $WIENERLAB_SEED, then 0")
    a("--alpha", type=float)
    a("--order", type=float, help="order of the fractional derivative")
    a("--side", choices=["left", "right"])
    a("--input")
    a("--against")
    a("--theta", help="const:<v> | power:<c>,<e> | ex42:<mu>,<r>,<sigma>,<H> | file:<path>")
    a("--utility", choices=["exponential", "power", "log"])
    a("--beta", type=float)
    a("--gamma", type=float)
    a("--w", type=float)
    a("--functional", choices=["linear", "square", "exp"])
    a("--target")
    a("--levels", type=int)
    a("--workers", type=int, help="thread cap; results do not depend on it")
    a("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wienerlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "clark-ocone", "optimize", "replicate", "report"):
        _add_common(sub.add_parser(name))
    for group, names in (("frac", ("deriv", "integrate")), ("kernel", ("sample", "entropy"))):
        gp = sub.add_parser(group)
        gsub = gp.add_subparsers(dest="sub", required=True)
        for nm in names:
            _add_common(gsub.add_parser(nm))
    return parser


def resolve_options(ns: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if getattr(ns, "config", None):
        path = Path(ns.config)
        if not path.exists():
            raise MissingArtifact(f"missing config {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InvalidParameter(f"config is not valid JSON: {exc}") from exc
        if isinstance(data, dict) and "options" in data.get("manifest", data):
            data = data.get("manifest", data)["options"]
        for k, v in data.items():
            key = k.replace("-", "_")
            if key not in DEFAULTS:
                raise InvalidParameter(f"unknown config key {k!r}")
            opts[key] = v
    for k in DEFAULTS:
        v = getattr(ns, k, None)
        if v is not None:
            opts[k] = v
    return opts


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    command = ns.command if ns.command not in ("frac", "kernel") else f"{ns.command} {ns.sub}"
    try:
        cfg = make_config(command, resolve_options(ns))
        return COMMANDS[command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFlag as exc:
        print(f"numerical flag: {exc}", file=sys.stderr)
        return 2
    except (OSError, WienerlabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
