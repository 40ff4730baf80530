"""Checks of the effective-medium estimates on solved scenes.

The energy balance and the weak-form residual are written for the total
field on the ball ``|x| < R``, with the exterior closed by the Calderon
operator.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from . import calderon
from .errors import InvalidArgumentError, LayerMieError, PreconditionError
from .fields import (
    _electric_pattern,
    _magnetic_pattern,
    eval_in_region,
    farfield_series,
    hcurl_norm,
    region_l2,
    sphere_quadrature,
    volume_quadrature,
)
from .mie import solve_modes, truncation_order
from .scene import CoreKind, DeltaParams, LayeredScene, realize_scene
from .specfun import mie_angular_table, riccati_table

#: Highest degree of the random test fields used by :func:`weak_form_residual`.
TEST_DEGREE = 4


@dataclass(frozen=True)
class EnergyBalance:
    flux: float
    absorption: float
    residual: float


def energy_identity_residual(solution):
    """Compare the Poynting flux through ``|x| = R`` with the volume loss.

    ``flux = Re int (nu x conj(E)) . H ds`` for the total field and
    ``absorption = -k sum (Im eps ||E||^2 + Im mu ||H||^2)`` over the
    penetrable regions inside the scatterer.  The residual is normalised by
    the largest of ``|flux|``, ``|absorption|`` and the scattered power.
    """
    lam, mag = calderon.traces(solution)
    flux = -calderon.pairing(mag, calderon.cross_normal(lam)).real
    k = solution.k
    absorption = 0.0
    for i, reg in enumerate(solution.regions[:-1]):
        mat = reg.material
        if mat is None or mat.is_lossless:
            continue
        e2, c2 = region_l2(solution, i)
        h2 = c2 / (k**2 * abs(mat.mu_r) ** 2)
        absorption -= k * (mat.eps_r.imag * e2 + mat.mu_r.imag * h2)
    scattered = calderon.radiated_power(calderon.scattered_trace(solution), k)
    scale = max(abs(flux), abs(absorption), abs(scattered))
    residual = abs(flux - absorption) / scale if scale > 0 else 0.0
    return EnergyBalance(float(flux), float(absorption), float(residual))


# ----------------------------------------------------------------------------
# weak form


def _test_field(coeffs, kt, points):
    """Regular VSH combination and its curl at ``points``.

    ``coeffs[n - 1]`` holds the weights of ``(M_o, N_e, N_o, M_e)`` with
    radial factor ``psi_n(kt r)``.
    """
    n_max = coeffs.shape[0]
    r = np.linalg.norm(points, axis=-1)
    ct = np.clip(points[:, 2] / r, -1, 1)
    phi = np.arctan2(points[:, 1], points[:, 0])
    rho = kt * r
    f, fp = riccati_table("psi", n_max, rho)
    pi, tau = mie_angular_table(n_max, ct)
    n = np.arange(1, n_max + 1)[:, None]
    nn1 = n * (n + 1)
    mo, ne, no, me = (coeffs[:, j, None] for j in range(4))

    def combo(a_mo, a_ne, a_no, a_me):
        e_part = _electric_pattern(a_ne * f / rho**2, a_mo * f / rho, a_ne * fp / rho, pi, tau, ct, phi, nn1)
        h_part = _magnetic_pattern(a_no * f / rho**2, a_no * fp / rho, -a_me * f / rho, pi, tau, ct, phi, nn1)
        return e_part + h_part

    value = combo(mo, ne, no, me)
    # curl M = kappa N and curl N = kappa M with the parity kept
    curl = kt * combo(no, me, mo, ne)
    return value, curl


def _domain_regions(solution):
    """Material regions of the weak form: (index, inner, outer, material)."""
    out = []
    for i, reg in enumerate(solution.regions):
        if reg.material is None:
            continue
        outer = solution.scene.calderon_radius if reg.kind == "exterior" else reg.outer
        out.append((i, reg.inner, outer, reg.material))
    return out


def _volume_terms(solution, coeffs, quad, nodes=12, chunk=20000):
    k = solution.k
    a_total = 0.0j
    mag = 0.0
    for index, inner, outer, mat in _domain_regions(solution):
        kappa = abs(mat.wavenumber(k))
        panels = max(2, int(math.ceil(kappa * (outer - inner) / 2.0)))
        pts, w = volume_quadrature(inner, outer, quad, panels=panels, nodes=nodes)
        for s in range(0, len(w), chunk):
            p, ww = pts[s : s + chunk], w[s : s + chunk]
            # the modal series of each region, like the surface terms
            u = eval_in_region(solution, index, p, "E")
            cu = 1j * k * mat.mu_r * eval_in_region(solution, index, p, "H")
            phi, cphi = _test_field(coeffs, k, p)
            t1 = np.sum(cu * np.conj(cphi), axis=1) / mat.mu_r
            t2 = -(k**2) * mat.eps_r * np.sum(u * np.conj(phi), axis=1)
            a_total += np.sum(ww * (t1 + t2))
            mag += np.sum(
                ww
                * (
                    np.linalg.norm(cu, axis=1) * np.linalg.norm(cphi, axis=1) / abs(mat.mu_r)
                    + k**2 * abs(mat.eps_r) * np.linalg.norm(u, axis=1) * np.linalg.norm(phi, axis=1)
                )
            )
    return a_total, mag


def _surface_integral(values, coeffs, k, radius, quad):
    pts = radius * quad.directions
    phi, _ = _test_field(coeffs, k, pts)
    w = quad.weights * radius**2
    integral = np.sum(w * np.sum(values * np.conj(phi), axis=1))
    magnitude = np.sum(w * np.linalg.norm(values, axis=1) * np.linalg.norm(phi, axis=1))
    return integral, magnitude


def weak_form_residual(solution, n_tests=10, seed=0, quad=None):
    """Largest relative residual ``|M(U, Phi) - F(Phi)|`` over random test fields.

    ``M(U, Phi) = int mu^-1 curl U . conj(curl Phi) - k^2 eps U . conj(Phi)
    + i k int_{|x|=R} G_e(x cross U) . conj(Phi)`` over the ball without an
    obstacle core, and ``F(Phi) = -int_{|x|=R} (x cross curl E^i - i k
    G_e(x cross E^i)) . conj(Phi)``.  For a PEC core the surface term
    ``-int_{|x|=a} (x cross mu^-1 curl U) . conj(Phi)`` is added since the
    test fields do not vanish there; for a PMC core it is zero.  Each
    residual is divided by the sum of the absolute values of the integrands.
    """
    if n_tests < 1:
        raise InvalidArgumentError("n_tests must be >= 1")
    k = solution.k
    R = solution.scene.calderon_radius
    if quad is None:
        quad = sphere_quadrature(solution.n_max // 2 + TEST_DEGREE + 6)
    surface = sphere_quadrature(solution.n_max + TEST_DEGREE + 4)
    nu = surface.directions

    lam, _ = calderon.traces(solution, R, "total")
    lam_i, mag_i = calderon.traces(solution, R, "regular")
    g_total = calderon.apply_Ge(lam, k).evaluate(nu)
    g_inc = calderon.apply_Ge(lam_i, k).evaluate(nu)
    curl_inc = 1j * k * mag_i.evaluate(nu)  # x cross curl E^i
    core_term = None
    if solution.scene.core_kind is CoreKind.PEC:
        a = float(solution.scene.core_radius)
        nu_a = sphere_quadrature(solution.n_max + TEST_DEGREE + 4)
        h = eval_in_region(solution, 1, a * nu_a.directions, "H")
        core_term = (np.cross(nu_a.directions, 1j * k * h), nu_a, a)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_tests):
        coeffs = rng.normal(size=(TEST_DEGREE, 4)) + 1j * rng.normal(size=(TEST_DEGREE, 4))
        vol, vol_mag = _volume_terms(solution, coeffs, quad)
        bnd, bnd_mag = _surface_integral(1j * k * g_total, coeffs, k, R, surface)
        rhs, rhs_mag = _surface_integral(-(curl_inc - 1j * k * g_inc), coeffs, k, R, surface)
        lhs = vol + bnd
        scale = vol_mag + bnd_mag + rhs_mag
        if core_term is not None:
            values, q_a, a = core_term
            c, c_mag = _surface_integral(values, coeffs, k, a, q_a)
            lhs -= c
            scale += c_mag
        if scale > 0:
            worst = max(worst, abs(lhs - rhs) / scale)
    return float(worst)


# ----------------------------------------------------------------------------
# delta ladder


def incident_scale(k, R):
    """``(1 + k) |B_R|^(1/2)``: the incident-data norm of a unit plane wave."""
    return (1.0 + k) * math.sqrt(4.0 * math.pi * R**3 / 3.0)


def fit_rate(xs, ys):
    """Least-squares line through ``(log x, log y)``; returns ``(slope, intercept)``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise InvalidArgumentError("fit_rate needs two 1-D arrays of equal length")
    if xs.size < 3:
        raise InvalidArgumentError(f"fit_rate needs at least 3 points, got {xs.size}")
    if np.any(~np.isfinite(xs)) or np.any(~np.isfinite(ys)) or np.any(xs <= 0) or np.any(ys <= 0):
        raise InvalidArgumentError("fit_rate needs finite positive values")
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope), float(intercept)


@dataclass
class ConvergenceReport:
    kind: str
    deltas: List[float]
    far_errs: List[float]
    core_hcurl: List[float]
    outside_hcurl: List[float]
    fitted_slope: float
    fitted_logC: float
    incident_scale: float
    eta0: float = 1.0
    tau0: float = 1.0
    n_max: int = 0
    quad_order: int = 0
    energy_residuals: List[float] = field(default_factory=list)
    weak_residuals: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.deltas)
        if not (len(self.far_errs) == len(self.core_hcurl) == len(self.outside_hcurl) == n):
            raise InvalidArgumentError("report columns must have equal length")

    def bound_holds(self):
        """``far_errs <= exp(logC) sqrt(delta) incident_scale`` at every rung."""
        if not math.isfinite(self.fitted_logC):
            return False
        c = math.exp(self.fitted_logC) * self.incident_scale
        return all(e <= c * math.sqrt(d) for d, e in zip(self.deltas, self.far_errs))

    def strictly_decreasing(self):
        e = self.far_errs
        return all(b < a for a, b in zip(e, e[1:]))

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta", "far_err", "core_hcurl", "outside_hcurl"])
        for row in zip(self.deltas, self.far_errs, self.core_hcurl, self.outside_hcurl):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def delta_ladder_study(
    scene_obstacle,
    incidence,
    deltas,
    eta0=1.0,
    tau0=1.0,
    quad=None,
    n_max=None,
    realize=realize_scene,
    energy=True,
    weak_form=False,
    seed=0,
):
    """Far-field and interior norms of the realised scenes along a delta ladder.

    ``realize(scene, DeltaParams)`` builds the penetrable scene for each
    delta; the default replaces the obstacle core by its effective medium.
    A custom ``realize`` lifts the obstacle-core precondition (useful for
    self-comparisons).  Solver failures are re-raised with a ``delta``
    attribute naming the rung.
    """
    if not isinstance(scene_obstacle, LayeredScene):
        raise InvalidArgumentError("scene_obstacle must be a LayeredScene")
    if realize is realize_scene and scene_obstacle.core_kind is CoreKind.PENETRABLE:
        raise PreconditionError("the delta ladder needs a PEC or PMC core")
    deltas = [float(d) for d in deltas]
    if len(deltas) < 1 or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise InvalidArgumentError("deltas must be strictly decreasing")
    k = incidence.k
    R = scene_obstacle.calderon_radius
    if n_max is None:
        n_max = truncation_order(k, R)
    quad = sphere_quadrature(2 * n_max + 8) if quad is None else quad

    reference = solve_modes(scene_obstacle, incidence, n_max)
    e_ref = farfield_series(reference, quad).values
    far, core, outside, energies = [], [], [], []
    weak = {}
    solutions = []
    for d in deltas:
        try:
            scene = realize(scene_obstacle, DeltaParams(d, eta0, tau0))
            sol = solve_modes(scene, incidence, n_max)
            diff = farfield_series(sol, quad).values - e_ref
            far.append(float(np.sqrt(np.sum(quad.weights * np.sum(np.abs(diff) ** 2, axis=1)))))
            core.append(hcurl_norm(sol, "core"))
            outside.append(hcurl_norm(sol, "outside"))
            if energy:
                energies.append(energy_identity_residual(sol).residual)
        except LayerMieError as exc:
            exc.delta = d
            raise
        solutions.append(sol)
    if weak_form and solutions:
        weak["coarsest"] = weak_form_residual(solutions[0], seed=seed)
        weak["finest"] = weak_form_residual(solutions[-1], seed=seed)

    scale = incident_scale(k, R)
    if len(deltas) >= 3 and all(e > 0 for e in far):
        slope, log_c = fit_rate(deltas, far)
    else:
        slope, log_c = math.nan, math.nan
    kind = scene_obstacle.core_kind.value
    return ConvergenceReport(
        kind=kind,
        deltas=deltas,
        far_errs=far,
        core_hcurl=core,
        outside_hcurl=outside,
        fitted_slope=slope,
        fitted_logC=log_c,
        incident_scale=scale,
        eta0=float(eta0),
        tau0=float(tau0),
        n_max=int(n_max),
        quad_order=int(quad.order),
        energy_residuals=energies,
        weak_residuals=weak,
    )


@dataclass(frozen=True)
class InteriorCheck:
    passed: bool
    core_ratio: float
    outside_ratio: float
    core_decreasing: Optional[bool] = None


def _spread(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.any(v <= 0) or not np.all(np.isfinite(v)):
        return math.inf
    return float(v.max() / v.min())


def interior_estimate_check(report, kind, core_bound=10.0, outside_bound=2.0):
    """Uniform-in-delta bounds on the interior norms.

    PMC: ``sqrt(delta) * core_hcurl`` varies by at most ``core_bound`` and
    ``outside_hcurl`` by at most ``outside_bound``.  PEC: the same with
    ``core_hcurl / sqrt(delta)``, and ``core_hcurl`` must decrease strictly.
    All norms are divided by ``incident_scale``.
    """
    kind = CoreKind(kind) if not isinstance(kind, CoreKind) else kind
    d = np.asarray(report.deltas, dtype=float)
    core = np.asarray(report.core_hcurl, dtype=float) / report.incident_scale
    outside = np.asarray(report.outside_hcurl, dtype=float) / report.incident_scale
    if kind is CoreKind.PMC:
        core_ratio = _spread(np.sqrt(d) * core)
        decreasing = None
    elif kind is CoreKind.PEC:
        core_ratio = _spread(core / np.sqrt(d))
        decreasing = bool(np.all(np.diff(core) < 0))
    else:
        raise InvalidArgumentError("interior_estimate_check needs kind PEC or PMC")
    outside_ratio = _spread(outside)
    passed = core_ratio <= core_bound and outside_ratio <= outside_bound
    if decreasing is not None:
        passed = passed and decreasing
    return InteriorCheck(bool(passed), core_ratio, outside_ratio, decreasing)


def perturb_scattering(solution, n, parity, factor):
    """Copy of ``solution`` with one scattering coefficient multiplied by ``factor``."""
    coeffs = solution.coeffs.copy()
    coeffs[-1, ("TE", "TM").index(parity), n - 1, 1] *= factor
    return replace(solution, coeffs=coeffs)
