"""Command line entry point: ``layermie {solve,ladder,check} --config scene.json``.

Exit status: 0 success, 1 invalid input, 2 numerical failure or failed check.
"""

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import calderon
from .errors import InvalidArgumentError, LayerMieError, NumericalFailure
from .fields import (
    FarFieldSamples,
    eval_H,
    farfield_series,
    farfield_stratton_chu,
    l2_s2_norm,
    sphere_quadrature,
)
from .mie import solve_modes, truncation_order
from .scene import AssumptionBounds, CoreKind, IncidentWave, LayeredScene, Material, Shell
from .verify import (
    delta_ladder_study,
    energy_identity_residual,
    interior_estimate_check,
    weak_form_residual,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2

#: Largest value any tolerance may take.
TOLERANCE_CEILING = 1e-2

DEFAULT_TOLERANCES = {
    "energy": 1e-7,
    "lossless_flux": 1e-9,
    "weak_form": 1e-5,
    "farfield_cross": 1e-6,
    "radius_independence": 1e-7,
    "relations": 1e-9,
    "calderon_self": 1e-10,
}

DEFAULT_LADDER = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
MIN_SLOPE = 0.45


class ConfigError(InvalidArgumentError):
    pass


@dataclass
class RunConfig:
    scene: LayeredScene
    incidence: IncidentWave
    delta_ladder: List[float]
    eta0: float = 1.0
    tau0: float = 1.0
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    n_max: Optional[int] = None
    quad_order: Optional[int] = None
    seed: int = 0


def _complex(value, name):
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(f"{name}: expected a number or [re, im], got {value!r}")


def _material(entry, name):
    if not isinstance(entry, dict):
        raise ConfigError(f"{name}: expected an object with mu and eps")
    try:
        return Material(_complex(entry.get("mu", 1.0), f"{name}.mu"), _complex(entry.get("eps", 1.0), f"{name}.eps"))
    except InvalidArgumentError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def _require(data, key):
    if key not in data:
        raise ConfigError(f"missing required key {key!r}")
    return data[key]


def parse_config(data):
    """Validate a decoded JSON config and build a :class:`RunConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {
        "core_radius", "core_kind", "core_material", "shells", "k", "R", "incidence",
        "delta_ladder", "eta0", "tau0", "tolerances", "bounds",
    }
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kind = str(_require(data, "core_kind"))
    if kind.lower() == "penetrable":
        core = _material(_require(data, "core_material"), "core_material")
    elif kind.upper() in ("PEC", "PMC"):
        core = kind.upper()
    else:
        raise ConfigError(f"core_kind must be PEC, PMC or penetrable, got {kind!r}")
    shells = []
    for i, entry in enumerate(data.get("shells", [])):
        if not isinstance(entry, dict):
            raise ConfigError(f"shells[{i}]: expected an object")
        shells.append(Shell(float(_require(entry, "radius")), _material(entry, f"shells[{i}]")))
    bounds = None
    if "bounds" in data:
        b = data["bounds"]
        try:
            bounds = AssumptionBounds(float(b["gamma1"]), float(b["gamma2"]), float(b["gamma"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError("bounds needs gamma1, gamma2 and gamma") from exc
    k = float(_require(data, "k"))
    try:
        scene = LayeredScene(
            core_radius=float(_require(data, "core_radius")),
            core=core,
            shells=tuple(shells),
            background_k=k,
            calderon_radius=None if data.get("R") is None else float(data["R"]),
            bounds=bounds,
        )
        inc = data.get("incidence", {})
        incidence = IncidentWave(
            tuple(inc.get("d", (0.0, 0.0, 1.0))), tuple(inc.get("p", (1.0, 0.0, 0.0))), k
        )
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from exc
    ladder = [float(d) for d in data.get("delta_ladder", DEFAULT_LADDER)]
    tolerances = dict(DEFAULT_TOLERANCES)
    for name, value in data.get("tolerances", {}).items():
        set_tolerance(tolerances, name, value)
    return RunConfig(
        scene=scene,
        incidence=incidence,
        delta_ladder=ladder,
        eta0=float(data.get("eta0", 1.0)),
        tau0=float(data.get("tau0", 1.0)),
        tolerances=tolerances,
    )


def set_tolerance(tolerances, name, value):
    if name not in DEFAULT_TOLERANCES:
        raise ConfigError(f"unknown tolerance {name!r}")
    value = float(value)
    if not (value > 0 and value <= TOLERANCE_CEILING):
        raise ConfigError(f"tolerance {name}={value:g} must lie in (0, {TOLERANCE_CEILING:g}]")
    tolerances[name] = value


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)


# ----------------------------------------------------------------------------


def _pair(z):
    return [float(z.real), float(z.imag)]


def _n_max(cfg):
    if cfg.n_max is not None:
        return cfg.n_max
    return truncation_order(cfg.incidence.k, cfg.scene.calderon_radius)


def _quad(cfg, n_max):
    return sphere_quadrature(cfg.quad_order if cfg.quad_order else 2 * n_max + 8)


def _write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def cmd_solve(cfg, out_dir, stream=sys.stdout):
    n_max = _n_max(cfg)
    sol = solve_modes(cfg.scene, cfg.incidence, n_max)
    quad = _quad(cfg, n_max)
    far = farfield_series(sol, quad)
    energy = energy_identity_residual(sol)
    modes = {
        "n_max": n_max,
        "k": cfg.incidence.k,
        "rotation": sol.rotation.tolist(),
        "s_te": [_pair(z) for z in sol.s_te],
        "s_tm": [_pair(z) for z in sol.s_tm],
        "regions": [
            {
                "kind": reg.kind,
                "inner": reg.inner,
                "outer": reg.outer if math.isfinite(reg.outer) else None,
                "te": [[_pair(a), _pair(b)] for a, b in sol.coeffs[i, 0]],
                "tm": [[_pair(a), _pair(b)] for a, b in sol.coeffs[i, 1]],
            }
            for i, reg in enumerate(sol.regions)
        ],
        "core_log_scale": sol.core_log_scale,
        "energy": {"flux": energy.flux, "absorption": energy.absorption, "residual": energy.residual},
    }
    _write(out_dir, "modes.json", json.dumps(modes, indent=2, sort_keys=True))
    _write(out_dir, "farfield.csv", far.to_csv())
    print(f"n_max {n_max}", file=stream)
    print(f"far-field L2 norm {l2_s2_norm(far):.12e}", file=stream)
    print(f"energy residual {energy.residual:.3e}", file=stream)
    return EXIT_OK


def ladder_verdict(report, tolerances):
    """Named pass/fail results for a finished ladder."""
    interior = interior_estimate_check(report, report.kind)
    results = {
        "far_errs strictly decreasing": report.strictly_decreasing(),
        f"fitted slope >= {MIN_SLOPE}": bool(report.fitted_slope >= MIN_SLOPE),
        "sqrt(delta) bound": report.bound_holds(),
        "interior estimates": interior.passed,
        "energy residuals": all(r <= tolerances["energy"] for r in report.energy_residuals),
    }
    if report.weak_residuals:
        results["weak-form residuals"] = all(r <= tolerances["weak_form"] for r in report.weak_residuals.values())
    return results


def cmd_ladder(cfg, out_dir, stream=sys.stdout):
    if cfg.scene.core_kind is CoreKind.PENETRABLE:
        raise ConfigError("ladder needs core_kind PEC or PMC")
    n_max = _n_max(cfg)
    report = delta_ladder_study(
        cfg.scene,
        cfg.incidence,
        cfg.delta_ladder,
        cfg.eta0,
        cfg.tau0,
        quad=_quad(cfg, n_max),
        n_max=n_max,
        weak_form=True,
        seed=cfg.seed,
    )
    _write(out_dir, "report.json", report.to_json())
    _write(out_dir, "report.csv", report.to_csv())
    for d, e in zip(report.deltas, report.far_errs):
        print(f"delta {d:.3e}  far_err {e:.6e}", file=stream)
    print(f"fitted slope {report.fitted_slope:.4f}  logC {report.fitted_logC:.4f}", file=stream)
    verdict = ladder_verdict(report, cfg.tolerances)
    for name, ok in verdict.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}", file=stream)
    return EXIT_OK if all(verdict.values()) else EXIT_NUMERICAL


def inner_surface_radius(scene):
    """``1.1 r_outer``, or the midpoint to ``R`` when that is closer."""
    return min(1.1 * scene.outer_radius, 0.5 * (scene.outer_radius + scene.calderon_radius))


def run_checks(cfg):
    """Residuals of every single-scene check: ``{name: (value, tolerance)}``."""
    tol = cfg.tolerances
    n_max = _n_max(cfg)
    sol = solve_modes(cfg.scene, cfg.incidence, n_max)
    quad = _quad(cfg, n_max)
    results = {}

    energy = energy_identity_residual(sol)
    lossless = all(
        reg.material is None or reg.material.is_lossless for reg in sol.regions
    )
    if lossless:
        # absolute for weak scatterers, relative once the radiated power exceeds 1
        power = calderon.radiated_power(calderon.scattered_trace(sol), sol.k)
        results["energy flux (lossless)"] = (abs(energy.flux) / max(1.0, power), tol["lossless_flux"])
    else:
        results["energy identity"] = (energy.residual, tol["energy"])

    results["weak form"] = (weak_form_residual(sol, n_tests=10, seed=cfg.seed), tol["weak_form"])

    series = farfield_series(sol, quad)
    h_series = farfield_series(sol, quad, "H")
    norm = l2_s2_norm(series)
    dirs = quad.directions
    scale = max(np.max(np.abs(series.values)), 1e-300)
    tangential = np.max(np.abs(np.sum(dirs * series.values, axis=1))) / scale
    h_rel = np.max(np.abs(h_series.values - np.cross(dirs, series.values))) / scale
    if norm == 0:
        tangential = h_rel = 0.0
    results["far-field tangentiality"] = (float(tangential), tol["relations"])
    results["H_inf = x cross E_inf"] = (float(h_rel), tol["relations"])

    sc = farfield_stratton_chu(sol, quad)
    cross = l2_s2_norm(FarFieldSamples(dirs, quad.weights, sc.values - series.values))
    results["far-field cross-route"] = (cross / norm if norm else cross, tol["farfield_cross"])
    inner = farfield_stratton_chu(sol, quad, surface_radius=inner_surface_radius(cfg.scene))
    radius = l2_s2_norm(FarFieldSamples(dirs, quad.weights, inner.values - sc.values))
    results["surface-radius independence"] = (radius / norm if norm else radius, tol["radius_independence"])

    # Calderon: G_e reproduces the magnetic trace of the scattered field
    lam_s = calderon.scattered_trace(sol)
    nu = sphere_quadrature(n_max + 4).directions
    R = cfg.scene.calderon_radius
    direct = np.cross(nu, eval_H(sol, R * nu, "scattered"))
    spectral = calderon.apply_Ge(lam_s, cfg.incidence.k).evaluate(nu)
    denom = max(np.max(np.abs(direct)), 1e-300)
    self_err = float(np.max(np.abs(spectral - direct)) / denom) if np.any(direct) else 0.0
    results["Calderon self-consistency"] = (self_err, tol["calderon_self"])
    return results


def cmd_check(cfg, out_dir, stream=sys.stdout):
    results = run_checks(cfg)
    ok = True
    for name, (value, tol) in results.items():
        passed = value <= tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {value:.3e} (tol {tol:.1e})", file=stream)
    _write(
        out_dir,
        "checks.json",
        json.dumps({k: {"value": v, "tolerance": t} for k, (v, t) in results.items()}, indent=2, sort_keys=True),
    )
    return EXIT_OK if ok else EXIT_NUMERICAL


COMMANDS = {"solve": cmd_solve, "ladder": cmd_ladder, "check": cmd_check}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scene description (JSON)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="seed for random test fields")
    common.add_argument("--nmax", type=int, default=None, help="override the truncation order")
    common.add_argument("--quad-order", type=int, default=None, help="override the sphere quadrature order")
    common.add_argument(
        "--tol",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="override a tolerance (at most %g)" % TOLERANCE_CEILING,
    )
    parser = argparse.ArgumentParser(prog="layermie", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve one scene and write coefficients and far field")
    sub.add_parser("ladder", parents=[common], help="run the delta ladder for an obstacle core")
    sub.add_parser("check", parents=[common], help="run the residual checks on one scene")
    return parser


def main(argv=None, stream=None):
    stream = sys.stdout if stream is None else stream
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        cfg = load_config(args.config)
        if args.nmax is not None:
            if args.nmax < 1:
                raise ConfigError("--nmax must be >= 1")
            cfg.n_max = args.nmax
        if args.quad_order is not None:
            if args.quad_order < 1:
                raise ConfigError("--quad-order must be >= 1")
            cfg.quad_order = args.quad_order
        cfg.seed = args.seed
        for item in args.tol:
            name, _, value = item.partition("=")
            try:
                value = float(value)
            except ValueError as exc:
                raise ConfigError(f"bad --tol {item!r}, expected NAME=VALUE") from exc
            set_tolerance(cfg.tolerances, name, value)
        return COMMANDS[args.command](cfg, args.out, stream)
    except NumericalFailure as exc:
        delta = getattr(exc, "delta", None)
        where = f" (delta={delta:g})" if delta is not None else ""
        print(f"error: {exc}{where}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidArgumentError, LayerMieError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
