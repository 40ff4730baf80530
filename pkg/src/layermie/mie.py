"""Per-mode solution of plane-wave scattering by a concentric layered sphere.

Conventions
-----------
This module is the single source of truth for the modal conventions used by
:mod:`layermie.fields`, :mod:`layermie.calderon` and :mod:`layermie.verify`.

* Time dependence ``exp(-i w t)``; Maxwell's equations read
  ``curl E = i k mu H`` and ``curl H = -i k eps E`` with ``k`` the vacuum
  wavenumber.  A region with ``(mu, eps)`` has wavenumber
  ``kappa = k sqrt(mu eps)``.
* All work is done in the rotated frame where the incidence direction is
  ``+z`` and the polarization is ``+x`` (see :func:`rotation_frame`).  Only
  azimuthal orders ``m = +-1`` then appear and the Bohren-Huffman functions
  ``M_o1n``, ``N_e1n`` (electric) and ``N_o1n``, ``M_e1n`` (magnetic) span the
  field.
* In every region the electric field is::

      E = sum_n  P_TE(n) * M_o1n[f_TE]  +  P_TM(n) * N_e1n[f_TM]

  with ``P_TE = E_n``, ``P_TM = -i E_n``, ``E_n = i^n (2n+1) / (n (n+1))`` and
  ``f`` the Riccati-type radial function of ``rho = kappa r``::

      f(rho) = c_reg * psi_n(rho) + c_out * xi_n(rho)

  so that ``M[f]`` carries ``f / rho`` and ``N[f]`` carries ``f' / rho`` on
  its tangential components.  ``H = kappa / (i k mu) * sum P_TE N_o1n[f_TE] +
  P_TM M_e1n[f_TM]``.
* Coefficients are normalised so that the exterior regular part is the
  incident wave, ``c_reg = 1``.  The exterior outgoing part
  ``s = c_out`` is the *scattering coefficient* of the mode.  In
  Bohren-Huffman notation ``s_TM = -a_n`` and ``s_TE = -b_n``; for lossless
  scenes ``|1 + 2 s| = 1``.
* A penetrable core uses the scaled, boundary-normalised radial function
  ``psi~_n(kappa r) exp(|Im kappa| (r - a))``, where ``psi~`` is the
  exponentially scaled Riccati function and ``a`` the core radius.  The
  stored core coefficient multiplies this function; ``core_log_scale`` holds
  the omitted factor ``-|Im kappa| a`` for reference.
"""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import InvalidArgumentError, NumericalResonanceError, PreconditionError, RangeError
from .scene import VACUUM, CoreKind, IncidentWave, LayeredScene
from .specfun import N_CAP, riccati_table

TE, TM = 0, 1
PARITIES = ("TE", "TM")

#: Per-mode condition numbers above this are reported as resonances.
RESONANCE_CONDITION = 1e12


@dataclass(frozen=True)
class Mode:
    n: int
    parity: str

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgumentError(f"mode degree must be >= 1, got {self.n}")
        if self.parity not in PARITIES:
            raise InvalidArgumentError(f"parity must be TE or TM, got {self.parity!r}")


def rotation_frame(d, p):
    """Proper rotation taking ``d`` to ``z`` and ``p`` to ``x``."""
    d = np.asarray(d, dtype=float)
    p = np.asarray(p, dtype=float)
    if (
        d.shape != (3,)
        or p.shape != (3,)
        or abs(np.linalg.norm(d) - 1) > 1e-12
        or abs(np.linalg.norm(p) - 1) > 1e-12
        or abs(d @ p) > 1e-12
    ):
        raise InvalidArgumentError("rotation_frame needs orthonormal d and p")
    return np.array([p, np.cross(d, p), d])


def truncation_order(k, r, safety=8):
    """Number of multipoles needed for a ball of radius ``r`` at wavenumber ``k``."""
    if k <= 0 or r <= 0:
        raise InvalidArgumentError("truncation_order needs k > 0 and r > 0")
    kr = k * r
    return min(math.ceil(kr + 4.0 * kr ** (1.0 / 3.0)) + int(safety), N_CAP)


def plane_wave_prefactors(n_max):
    """``(P_TE, P_TM)`` for ``n = 1..n_max`` as a ``(2, n_max)`` array."""
    n = np.arange(1, n_max + 1)
    e_n = (1j**n) * (2 * n + 1) / (n * (n + 1))
    return np.array([e_n, -1j * e_n])


@dataclass(frozen=True)
class Region:
    inner: float
    outer: float
    material: object
    kind: str  # "core", "shell" or "exterior"


@dataclass(frozen=True, eq=False)
class ModalSolution:
    """All modal coefficients for one scene and one incident plane wave.

    ``coeffs[region, parity, n - 1] = (c_reg, c_out)``; region 0 is the core,
    regions ``1..L`` are the shells and the last region is the exterior.
    Obstacle cores have no field and zero coefficients.
    """

    scene: LayeredScene
    incidence: IncidentWave
    n_max: int
    rotation: np.ndarray
    regions: Tuple[Region, ...]
    coeffs: np.ndarray
    core_log_scale: float
    condition: np.ndarray = field(repr=False)

    @property
    def k(self):
        return self.incidence.k

    @property
    def s_te(self):
        return self.coeffs[-1, TE, :, 1]

    @property
    def s_tm(self):
        return self.coeffs[-1, TM, :, 1]

    @property
    def scattering(self):
        """``(2, n_max)`` array of scattering coefficients ``[s_TE, s_TM]``."""
        return self.coeffs[-1, :, :, 1]

    @property
    def prefactors(self):
        return plane_wave_prefactors(self.n_max)

    def wavenumber(self, region):
        material = self.regions[region].material
        return material.wavenumber(self.k) if material is not None else None

    def region_of_radius(self, r, tol=1e-12):
        """Region index for each radius; ``-1`` marks points on an interface."""
        r = np.asarray(r, dtype=float)
        radii = np.asarray(self.scene.interface_radii)
        idx = np.searchsorted(radii, r, side="left")
        near = np.min(np.abs(r[..., None] - radii), axis=-1) <= tol * np.maximum(1.0, radii.max())
        return np.where(near, -1, idx)

    def radial(self, region, r, part="total"):
        """Radial functions ``(f, f')`` of shape ``(2, n_max) + r.shape``.

        ``f`` is evaluated at ``rho = kappa r`` with the stored coefficients,
        so the fields follow from the conventions in the module docstring.
        ``part`` selects ``"total"``, ``"regular"`` (``psi`` terms only) or
        ``"outgoing"`` (``xi`` terms only).  In the exterior the regular part
        is the incident wave and the outgoing part the scattered wave.
        """
        if part not in ("total", "regular", "outgoing"):
            raise InvalidArgumentError(f"unknown radial part {part!r}")
        r = np.asarray(r, dtype=float)
        reg = self.regions[region]
        if reg.material is None:
            zero = np.zeros((2, self.n_max) + r.shape, dtype=complex)
            return zero, zero.copy()
        kappa = reg.material.wavenumber(self.k)
        rho = kappa * r
        c = self.coeffs[region].copy()
        if part == "regular":
            c[:, :, 1] = 0
        elif part == "outgoing":
            c[:, :, 0] = 0
        expand = (slice(None),) * 2 + (None,) * r.ndim
        if reg.kind == "core":
            psi, dpsi = riccati_table("psi", self.n_max, rho, scaled=True)
            grow = np.exp(abs(kappa.imag) * (r - reg.outer))
            creg = c[:, :, 0][expand]
            return creg * psi * grow, creg * dpsi * grow
        f = np.zeros((2, self.n_max) + r.shape, dtype=complex)
        fp = np.zeros_like(f)
        if np.any(c[:, :, 0] != 0):
            psi, dpsi = riccati_table("psi", self.n_max, rho)
            f = f + c[:, :, 0][expand] * psi
            fp = fp + c[:, :, 0][expand] * dpsi
        if np.any(c[:, :, 1] != 0):
            xi, dxi = riccati_table("xi", self.n_max, rho)
            f = f + c[:, :, 1][expand] * xi
            fp = fp + c[:, :, 1][expand] * dxi
        return f, fp


def _build_regions(scene):
    regions = [Region(0.0, float(scene.core_radius), scene.core_material, "core")]
    inner = float(scene.core_radius)
    for shell in scene.shells:
        regions.append(Region(inner, shell.outer_radius, shell.material, "shell"))
        inner = shell.outer_radius
    regions.append(Region(inner, math.inf, VACUUM, "exterior"))
    return tuple(regions)


def _trace_matrix(parity, k, material, r, n_max):
    """Map ``(c_reg, c_out) -> (e, h)`` tangential traces at radius ``r``.

    Returns ``M`` with shape ``(n_max, 2, 2)``; ``e`` is the tangential E
    amplitude and ``h`` the tangential H amplitude, both up to factors
    common to every region (``1/r`` and ``1/(i k)``).
    """
    kappa = material.wavenumber(k)
    mu = material.mu_r
    rho = kappa * r
    psi, dpsi = riccati_table("psi", n_max, rho)
    xi, dxi = riccati_table("xi", n_max, rho)
    M = np.empty((n_max, 2, 2), dtype=complex)
    if parity == TE:
        M[:, 0, 0], M[:, 0, 1] = psi / kappa, xi / kappa
        M[:, 1, 0], M[:, 1, 1] = dpsi / mu, dxi / mu
    else:
        M[:, 0, 0], M[:, 0, 1] = dpsi / kappa, dxi / kappa
        M[:, 1, 0], M[:, 1, 1] = psi / mu, xi / mu
    return M


def _inverse_trace(parity, k, material, r, n_max):
    """Inverse of :func:`_trace_matrix`, written with the Wronskian ``psi xi' - psi' xi = i``."""
    kappa = material.wavenumber(k)
    mu = material.mu_r
    rho = kappa * r
    psi, dpsi = riccati_table("psi", n_max, rho)
    xi, dxi = riccati_table("xi", n_max, rho)
    inv = np.empty((n_max, 2, 2), dtype=complex)
    if parity == TE:
        inv[:, 0, 0], inv[:, 0, 1] = -1j * kappa * dxi, 1j * mu * xi
        inv[:, 1, 0], inv[:, 1, 1] = 1j * kappa * dpsi, -1j * mu * psi
    else:
        inv[:, 0, 0], inv[:, 0, 1] = 1j * kappa * xi, -1j * mu * dxi
        inv[:, 1, 0], inv[:, 1, 1] = -1j * kappa * psi, 1j * mu * dpsi
    return inv


def _core_traces(parity, scene, k, n_max):
    """Tangential ``(e, h)`` just outside the core, up to a per-mode scale."""
    a = float(scene.core_radius)
    kind = scene.core_kind
    eh = np.zeros((n_max, 2), dtype=complex)
    if kind is CoreKind.PEC:
        eh[:, 1] = 1.0
    elif kind is CoreKind.PMC:
        eh[:, 0] = 1.0
    else:
        mat = scene.core_material
        kappa = mat.wavenumber(k)
        psi, dpsi = riccati_table("psi", n_max, kappa * a, scaled=True)
        if parity == TE:
            eh[:, 0], eh[:, 1] = psi / kappa, dpsi / mat.mu_r
        else:
            eh[:, 0], eh[:, 1] = dpsi / kappa, psi / mat.mu_r
    return eh


def _condition_numbers(parity, scene, regions, k, n_max):
    """Condition number of the equilibrated global interface system, per mode."""
    radii = scene.interface_radii
    penetrable = scene.core_kind is CoreKind.PENETRABLE
    n_shell = len(scene.shells)
    n_unknown = (1 if penetrable else 0) + 2 * n_shell + 1
    rows = []
    col0 = 1 if penetrable else 0
    if not penetrable:
        first = regions[1]
        M = _trace_matrix(parity, k, first.material, radii[0], n_max)
        row = np.zeros((n_max, n_unknown), dtype=complex)
        which = 0 if scene.core_kind is CoreKind.PEC else 1
        row[:, 0:2] = M[:, which, :] if n_shell else M[:, which, 1:2]
        rows.append(row[:, None, :])
    for i, r in enumerate(radii):
        if i == 0 and not penetrable:
            continue
        blk = np.zeros((n_max, 2, n_unknown), dtype=complex)
        if i == 0:
            blk[:, :, 0] = _core_traces(parity, scene, k, n_max)
        else:
            inner = regions[i]
            Mi = _trace_matrix(parity, k, inner.material, r, n_max)
            c = col0 + 2 * (i - 1)
            blk[:, :, c : c + 2] = Mi
        outer = regions[i + 1]
        Mo = _trace_matrix(parity, k, outer.material, r, n_max)
        c = col0 + 2 * i
        if outer.kind == "exterior":
            blk[:, :, n_unknown - 1] = -Mo[:, :, 1]
        else:
            blk[:, :, c : c + 2] = -Mo
        rows.append(blk)
    A = np.concatenate(rows, axis=1)
    A = A / np.max(np.abs(A), axis=1, keepdims=True)
    A = A / np.max(np.abs(A), axis=2, keepdims=True)
    if not np.all(np.isfinite(A)):
        return np.full(n_max, np.inf)
    return np.linalg.cond(A)


def solve_modes(scene, incidence, n_max, check_condition=True):
    """Solve every mode ``n = 1..n_max`` of both parities.

    Tangential traces are propagated outward with 2x2 transfer matrices,
    starting from the core condition, then normalised by the exterior
    regular amplitude.  Raises :class:`NumericalResonanceError` when a
    per-mode interface system has condition number above
    :data:`RESONANCE_CONDITION` and :class:`RangeError` on overflow.
    """
    if not isinstance(scene, LayeredScene) or not isinstance(incidence, IncidentWave):
        raise InvalidArgumentError("solve_modes needs a LayeredScene and an IncidentWave")
    if not math.isclose(incidence.k, scene.background_k, rel_tol=1e-14, abs_tol=0.0):
        raise PreconditionError(
            f"incidence k={incidence.k} differs from scene background_k={scene.background_k}"
        )
    n_max = int(n_max)
    if n_max < 1:
        raise InvalidArgumentError("n_max must be >= 1")
    if n_max > N_CAP:
        raise InvalidArgumentError(f"n_max {n_max} exceeds N_CAP={N_CAP}")

    k = incidence.k
    regions = _build_regions(scene)
    radii = scene.interface_radii
    coeffs = np.zeros((len(regions), 2, n_max, 2), dtype=complex)
    condition = np.zeros((2, n_max))

    with np.errstate(over="ignore", invalid="ignore"):
        for parity in (TE, TM):
            eh = _core_traces(parity, scene, k, n_max)
            if scene.core_kind is CoreKind.PENETRABLE:
                coeffs[0, parity, :, 0] = 1.0
            for i in range(1, len(regions)):
                reg = regions[i]
                inv = _inverse_trace(parity, k, reg.material, radii[i - 1], n_max)
                ab = np.einsum("nij,nj->ni", inv, eh)
                coeffs[i, parity] = ab
                if reg.kind != "exterior":
                    M = _trace_matrix(parity, k, reg.material, reg.outer, n_max)
                    eh = np.einsum("nij,nj->ni", M, ab)
            a_ext = coeffs[-1, parity, :, 0].copy()
            if not np.all(np.isfinite(coeffs[:, parity])):
                raise RangeError(f"overflow while propagating {PARITIES[parity]} modes")
            if np.any(a_ext == 0):
                n_bad = int(np.argmax(a_ext == 0)) + 1
                raise NumericalResonanceError(n_bad, PARITIES[parity], math.inf)
            coeffs[:, parity] /= a_ext[None, :, None]
            condition[parity] = _condition_numbers(parity, scene, regions, k, n_max)

    if not np.all(np.isfinite(coeffs)):
        raise RangeError("non-finite modal coefficients")
    if check_condition:
        bad = condition > RESONANCE_CONDITION
        if np.any(bad):
            parity, n_idx = np.argwhere(bad)[0]
            raise NumericalResonanceError(int(n_idx) + 1, PARITIES[parity], float(condition[parity, n_idx]))

    core = scene.core_material
    log_scale = -abs(core.wavenumber(k).imag) * float(scene.core_radius) if core is not None else 0.0
    return ModalSolution(
        scene=scene,
        incidence=incidence,
        n_max=n_max,
        rotation=rotation_frame(np.asarray(incidence.direction), np.asarray(incidence.polarization)),
        regions=regions,
        coeffs=coeffs,
        core_log_scale=log_scale,
        condition=condition,
    )
