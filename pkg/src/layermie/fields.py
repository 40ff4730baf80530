"""Field synthesis, far-field patterns, sphere quadrature and region norms.

Fields are synthesised from a :class:`~layermie.mie.ModalSolution` using the
conventions documented in :mod:`layermie.mie`.  Far fields follow
``E^s(r x) = exp(i k r) / r * E_inf(x) + O(1/r^2)``.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from .errors import AmbiguousRegionError, InvalidArgumentError, PreconditionError
from .mie import TE, TM
from .specfun import mie_angular_table

INTERFACE_TOL = 1e-12
_ORIGIN = 1e-12


# ----------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    """Gauss-Legendre in ``cos(theta)`` times a uniform rule in ``phi``.

    ``order`` Gauss nodes and ``2 * order`` azimuthal nodes integrate every
    spherical harmonic of degree below ``2 * order`` exactly.
    """

    order: int
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    @property
    def directions(self):
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)], axis=-1)

    @property
    def exact_degree(self):
        return 2 * self.order - 1

    def __len__(self):
        return self.weights.size


def sphere_quadrature(order):
    order = int(order)
    if order < 1:
        raise InvalidArgumentError(f"quadrature order must be >= 1, got {order}")
    x, w = np.polynomial.legendre.leggauss(order)
    n_phi = 2 * order
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    theta = np.arccos(x)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    weights = np.outer(w, np.full(n_phi, 2 * np.pi / n_phi))
    return SphereQuadrature(order, th.ravel(), ph.ravel(), weights.ravel())


def default_quadrature(solution):
    return sphere_quadrature(2 * solution.n_max + 8)


def volume_quadrature(inner, outer, quad, panels=4, nodes=12):
    """Tensor rule on the shell ``inner < |x| < outer``: points and weights."""
    if not 0 <= inner < outer:
        raise InvalidArgumentError("volume_quadrature needs 0 <= inner < outer")
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(inner, outer, panels + 1)
    r = np.concatenate([(lo + hi) / 2 + (hi - lo) / 2 * x for lo, hi in zip(edges, edges[1:])])
    wr = np.concatenate([(hi - lo) / 2 * w for lo, hi in zip(edges, edges[1:])])
    dirs = quad.directions
    points = (r[:, None, None] * dirs[None]).reshape(-1, 3)
    weights = (wr[:, None] * r[:, None] ** 2 * quad.weights[None]).ravel()
    return points, weights


# ----------------------------------------------------------------------------
# angular synthesis in the rotated frame


def _to_cartesian(comp_r, comp_t, comp_p, ct, st, phi):
    cp, sp = np.cos(phi), np.sin(phi)
    return np.stack(
        [
            comp_r * st * cp + comp_t * ct * cp - comp_p * sp,
            comp_r * st * sp + comp_t * ct * sp + comp_p * cp,
            comp_r * ct - comp_t * st,
        ],
        axis=-1,
    )


def _electric_pattern(a_r, b1, b2, pi, tau, ct, phi, nn1):
    """``sum a_r N_e,r + b1 M_o,tan + b2 N_e,tan`` with the radial profile folded in."""
    st = np.sqrt(np.clip(1 - ct**2, 0, None))
    comp_r = np.cos(phi) * st * np.sum(nn1 * a_r * pi, axis=0)
    comp_t = np.cos(phi) * np.sum(b1 * pi + b2 * tau, axis=0)
    comp_p = -np.sin(phi) * np.sum(b1 * tau + b2 * pi, axis=0)
    return _to_cartesian(comp_r, comp_t, comp_p, ct, st, phi)


def _magnetic_pattern(a_r, c1, c2, pi, tau, ct, phi, nn1):
    """``sum a_r N_o,r + c1 N_o,tan - c2 M_e,tan``."""
    st = np.sqrt(np.clip(1 - ct**2, 0, None))
    comp_r = np.sin(phi) * st * np.sum(nn1 * a_r * pi, axis=0)
    comp_t = np.sin(phi) * np.sum(c1 * tau + c2 * pi, axis=0)
    comp_p = np.cos(phi) * np.sum(c1 * pi + c2 * tau, axis=0)
    return _to_cartesian(comp_r, comp_t, comp_p, ct, st, phi)


def _local_coordinates(solution, x):
    xr = x @ solution.rotation.T
    r = np.linalg.norm(xr, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    ct = np.where(r > 0, xr[..., 2] / safe, 1.0)
    ct = np.clip(ct, -1.0, 1.0)
    phi = np.arctan2(xr[..., 1], xr[..., 0])
    return r, ct, phi


def _synthesize(solution, region, r, ct, phi, field, part):
    """Field of one region at rotated-frame points, returned in the rotated frame."""
    n_max = solution.n_max
    reg = solution.regions[region]
    if reg.material is None:
        return np.zeros(r.shape + (3,), dtype=complex)
    kappa = reg.material.wavenumber(solution.k)
    r = np.maximum(r, _ORIGIN * max(1.0, reg.outer if math.isfinite(reg.outer) else reg.inner))
    f, fp = solution.radial(region, r, part)
    rho = kappa * r
    pref = solution.prefactors[:, :, None]
    n = np.arange(1, n_max + 1)[:, None]
    nn1 = n * (n + 1)
    pi, tau = mie_angular_table(n_max, ct)
    if field == "E":
        return _electric_pattern(
            pref[TM] * f[TM] / rho**2,
            pref[TE] * f[TE] / rho,
            pref[TM] * fp[TM] / rho,
            pi, tau, ct, phi, nn1,
        )
    scale = kappa / (1j * solution.k * reg.material.mu_r)
    return scale * _magnetic_pattern(
        pref[TE] * f[TE] / rho**2,
        pref[TE] * fp[TE] / rho,
        -pref[TM] * f[TM] / rho,
        pi, tau, ct, phi, nn1,
    )


def _evaluate(solution, x, region, field):
    if region not in ("total", "scattered"):
        raise InvalidArgumentError(f"region must be 'total' or 'scattered', got {region!r}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != 3 or not np.all(np.isfinite(pts)):
        raise InvalidArgumentError("points must be finite 3-vectors")
    r, ct, phi = _local_coordinates(solution, pts)
    scene = solution.scene
    out = np.zeros(pts.shape[:-1] + (3,), dtype=complex)
    if region == "scattered":
        if np.any(r <= scene.outer_radius):
            raise PreconditionError("scattered field is defined outside the scatterer only")
        out = _synthesize(solution, len(solution.regions) - 1, r, ct, phi, field, "outgoing")
    else:
        idx = solution.region_of_radius(r, INTERFACE_TOL)
        if np.any(idx < 0):
            raise AmbiguousRegionError(
                f"point within {INTERFACE_TOL:g} of an interface; the total field is two-valued there"
            )
        ext = len(solution.regions) - 1
        for reg in np.unique(idx):
            sel = idx == reg
            # outside the scatterer the incident wave is added in closed form,
            # so the field stays exact beyond the truncation radius
            part = "outgoing" if reg == ext else "total"
            out[sel] = _synthesize(solution, int(reg), r[sel], ct[sel], phi[sel], field, part)
    out = out @ solution.rotation
    if region == "total":
        outside = idx == len(solution.regions) - 1
        if np.any(outside):
            inc = solution.incidence
            wave = inc.electric if field == "E" else inc.magnetic
            out[outside] += wave(pts[outside])
    return out[0] if single else out


def eval_in_region(solution, region_index, x, field="E"):
    """Field of one modal region's expansion, continued to ``x`` (e.g. onto its boundary)."""
    if field not in ("E", "H"):
        raise InvalidArgumentError("field must be 'E' or 'H'")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    r, ct, phi = _local_coordinates(solution, pts)
    out = _synthesize(solution, int(region_index), r, ct, phi, field, "total")
    return out @ solution.rotation


def eval_E(solution, x, region="total"):
    """Electric field at ``x`` (shape ``(3,)`` or ``(N, 3)``)."""
    return _evaluate(solution, x, region, "E")


def eval_H(solution, x, region="total"):
    """Magnetic field at ``x``, ``H = curl E / (i k mu)``."""
    return _evaluate(solution, x, region, "H")


# ----------------------------------------------------------------------------
# far fields


@dataclass(frozen=True, eq=False)
class FarFieldSamples:
    directions: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def to_csv(self, target=None):
        """Write ``theta, phi, weight`` and Re/Im of each component; returns text if no target."""
        d = self.directions
        theta = np.arccos(np.clip(d[:, 2], -1, 1))
        phi = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2 * np.pi)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "phi", "weight", "re_x", "im_x", "re_y", "im_y", "re_z", "im_z"])
        for t, p, wt, v in zip(theta, phi, self.weights, self.values):
            w.writerow(
                [repr(float(t)), repr(float(p)), repr(float(wt))]
                + [repr(float(c)) for z in v for c in (z.real, z.imag)]
            )
        text = buf.getvalue()
        if target is None:
            return text
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return None


def farfield_at(solution, directions, field="E"):
    """Modal ``E_inf`` (or ``H_inf``) at an ``(N, 3)`` array of unit directions."""
    if field not in ("E", "H"):
        raise InvalidArgumentError("field must be 'E' or 'H'")
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    _, ct, phi = _local_coordinates(solution, dirs)
    n = np.arange(1, solution.n_max + 1)[:, None]
    amp = (-1j / solution.k) * (2 * n + 1) / (n * (n + 1))
    pi, tau = mie_angular_table(solution.n_max, ct)
    zero = np.zeros((solution.n_max, 1))
    s_te = amp * solution.s_te[:, None]
    s_tm = amp * solution.s_tm[:, None]
    pattern = _electric_pattern if field == "E" else _magnetic_pattern
    return pattern(zero, s_te, s_tm, pi, tau, ct, phi, zero) @ solution.rotation


def farfield_series(solution, quad=None, field="E"):
    """``E_inf`` (or ``H_inf`` with ``field="H"``) from the scattering coefficients."""
    quad = default_quadrature(solution) if quad is None else quad
    dirs = quad.directions
    return FarFieldSamples(dirs, quad.weights, farfield_at(solution, dirs, field))


def farfield_stratton_chu(solution, quad=None, surface_radius=None, surface_quad=None, chunk=256):
    """``E_inf`` from the scattered field on a sphere of radius ``surface_radius``.

    ``E_inf(x) = ik/(4 pi) x cross int (nu x E^s + (nu x H^s) x x) exp(-ik x.y) ds(y)``.
    The surface data are synthesised spectrally; only the surface quadrature
    is approximate.
    """
    scene = solution.scene
    R = scene.calderon_radius
    r = R if surface_radius is None else float(surface_radius)
    if not (scene.outer_radius < r <= R * (1 + 1e-12)):
        raise InvalidArgumentError(
            f"surface_radius {r} must lie in ({scene.outer_radius}, {R}]"
        )
    k = solution.k
    quad = default_quadrature(solution) if quad is None else quad
    if surface_quad is None:
        surface_quad = sphere_quadrature(solution.n_max + int(math.ceil(k * r)) + 16)
    nu = surface_quad.directions
    y = r * nu
    es = eval_E(solution, y, "scattered")
    hs = eval_H(solution, y, "scattered")
    a = np.cross(nu, es) * (surface_quad.weights * r**2)[:, None]
    b = np.cross(nu, hs) * (surface_quad.weights * r**2)[:, None]
    dirs = quad.directions
    vals = np.empty((dirs.shape[0], 3), dtype=complex)
    for start in range(0, dirs.shape[0], chunk):
        xd = dirs[start : start + chunk]
        phase = np.exp(-1j * k * (xd @ y.T))
        A = phase @ a
        B = phase @ b
        vals[start : start + chunk] = np.cross(xd, A + np.cross(B, xd))
    vals *= 1j * k / (4 * np.pi)
    return FarFieldSamples(dirs, quad.weights, vals)


def l2_s2_norm(samples):
    return float(np.sqrt(np.sum(samples.weights * np.sum(np.abs(samples.values) ** 2, axis=-1))))


# ----------------------------------------------------------------------------
# volume norms


def _radial_density(solution, region, r):
    """``(|E|^2, |curl E|^2)`` integrated over the sphere of radius ``r``."""
    reg = solution.regions[region]
    kappa = reg.material.wavenumber(solution.k)
    rr = np.atleast_1d(r)
    f, fp = solution.radial(region, rr)
    rho2 = np.abs(kappa * rr) ** 2
    n = np.arange(1, solution.n_max + 1)[:, None]
    nn1 = n * (n + 1)
    # pi * c_n^2 * int (pi_n^2 + tau_n^2) d(cos theta)
    w = np.pi * ((2 * n + 1) / nn1) ** 2 * 2 * nn1**2 / (2 * n + 1)
    a_te, a_tm = np.abs(f[TE]) ** 2, np.abs(f[TM]) ** 2
    d_te, d_tm = np.abs(fp[TE]) ** 2, np.abs(fp[TM]) ** 2
    e2 = np.sum(w * (a_te + nn1 * a_tm / rho2 + d_tm), axis=0) / abs(kappa) ** 2
    c2 = np.sum(w * (nn1 * a_te / rho2 + d_te + a_tm), axis=0)
    return np.array([e2[0], c2[0]]) if np.ndim(r) == 0 else np.array([e2, c2])


def region_l2(solution, region, inner=None, outer=None, epsrel=1e-9):
    """``(||E||^2, ||curl E||^2)`` over one modal region, optionally clipped radially."""
    reg = solution.regions[region]
    if reg.material is None:
        return np.zeros(2)
    lo = reg.inner if inner is None else inner
    hi = reg.outer if outer is None else outer
    if not math.isfinite(hi):
        raise InvalidArgumentError("exterior integrals need an explicit outer radius")
    kappa = reg.material.wavenumber(solution.k)
    panels = max(1, int(math.ceil(abs(kappa) * (hi - lo) / 2.0)))
    points = list(np.linspace(lo, hi, panels + 1)[1:-1])
    val, _ = quad_vec(
        lambda t: _radial_density(solution, region, t),
        lo,
        hi,
        epsrel=epsrel,
        epsabs=1e-300,
        points=points or None,
    )
    return val


def _region_indices(solution, region):
    scene = solution.scene
    n_shell = len(scene.shells)
    ext = len(solution.regions) - 1
    if region == "core":
        return [(0, None, None)]
    if region == "annulus":
        return [(ext, scene.outer_radius, scene.calderon_radius)]
    if region == "outside":
        return [(i, None, None) for i in range(1, ext)] + [
            (ext, scene.outer_radius, scene.calderon_radius)
        ]
    if isinstance(region, (int, np.integer)) and 0 <= region < n_shell:
        return [(int(region) + 1, None, None)]
    raise InvalidArgumentError(
        f"region must be 'core', 'annulus', 'outside' or a shell index < {n_shell}, got {region!r}"
    )


def hcurl_norm(solution, region):
    """``(||E||^2 + ||curl E||^2)^(1/2)`` over ``region``.

    ``region`` is ``"core"``, a shell index, ``"annulus"`` (between the
    scatterer and the Calderon sphere) or ``"outside"`` (everything between
    the core and the Calderon sphere).
    """
    total = sum(region_l2(solution, i, lo, hi).sum() for i, lo, hi in _region_indices(solution, region))
    return float(np.sqrt(total))


def l2_norms(solution, region):
    """``(||E||, ||curl E||)`` over ``region`` (same region names as :func:`hcurl_norm`)."""
    total = sum(region_l2(solution, i, lo, hi) for i, lo, hi in _region_indices(solution, region))
    return tuple(float(v) for v in np.sqrt(total))
