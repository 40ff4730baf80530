"""Exterior Calderon operator on the sphere ``|x| = R`` as a diagonal multiplier.

Tangential fields are expanded over the angular patterns of the rotated
frame of :mod:`layermie.mie`::

    X[n, TE, +1] = M_o1n angular part    X[n, TE, -1] = M_e1n angular part
    X[n, TM, +1] = N_e1n angular part    X[n, TM, -1] = N_o1n angular part

(``M``: ``(pi cos, -tau sin)`` type, ``N``: ``(tau cos, -pi sin)`` type in
``(theta, phi)`` components).  A :class:`TangentialField` holds coefficients
either against the *trace* basis ``x cross X`` (how ``lambda = x cross E``
is naturally written) or against the *rotated* basis ``X = (x cross X) cross x``.

For an outgoing single-mode field ``x cross H^s = m * (x cross E^s)`` in the
sense that a trace coefficient ``e`` maps to a rotated coefficient ``m e``
with::

    m_TE = i xi_n'(kR) / xi_n(kR)        m_TM = -i xi_n(kR) / xi_n'(kR)

so ``m_TE m_TM = 1``.  ``G~_e`` is the same map with ``k`` replaced by ``i``;
both of its multipliers are negative real.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, SingularArgumentError
from .mie import TE, TM
from .specfun import mie_angular_table

PLUS, MINUS = 0, 1
_M_INDEX = {1: PLUS, -1: MINUS}


def basis_norms(n_max, radius):
    """``||X[n, p, m]||^2`` on the sphere of radius ``radius``, shape ``(n_max,)``."""
    n = np.arange(1, n_max + 1)
    return radius**2 * np.pi * 2 * n**2 * (n + 1) ** 2 / (2 * n + 1)


@dataclass(frozen=True, eq=False)
class TangentialField:
    """Spectral tangential field on ``|x| = radius``.

    ``coefficients[n - 1, parity, m_index]`` with ``m_index`` 0 for ``m = +1``
    and 1 for ``m = -1``.  ``rotated`` selects the basis (see module doc);
    ``rotation`` is the frame of the angular patterns.
    """

    radius: float
    coefficients: np.ndarray
    rotated: bool = False
    rotation: np.ndarray = None

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 3 or c.shape[1:] != (2, 2) or c.shape[0] < 1:
            raise InvalidArgumentError("coefficients must have shape (n_max, 2, 2)")
        if not np.all(np.isfinite(c)):
            raise InvalidArgumentError("coefficients must be finite")
        if not self.radius > 0:
            raise InvalidArgumentError("radius must be positive")
        object.__setattr__(self, "coefficients", c)
        rot = np.eye(3) if self.rotation is None else np.asarray(self.rotation, dtype=float)
        object.__setattr__(self, "rotation", rot)

    @property
    def n_max(self):
        return self.coefficients.shape[0]

    @classmethod
    def zeros(cls, radius, n_max, rotated=False):
        return cls(radius, np.zeros((n_max, 2, 2), dtype=complex), rotated)

    @classmethod
    def from_modes(cls, radius, n_max, modes, rotated=False):
        """Build from ``{(n, "TE"|"TM", +1|-1): value}``."""
        c = np.zeros((n_max, 2, 2), dtype=complex)
        for (n, parity, m), value in modes.items():
            if not 1 <= n <= n_max:
                raise InvalidArgumentError(f"mode degree {n} outside 1..{n_max}")
            c[n - 1, ("TE", "TM").index(parity), _M_INDEX[m]] = value
        return cls(radius, c, rotated)

    def _like(self, coefficients, rotated=None):
        return TangentialField(
            self.radius, coefficients, self.rotated if rotated is None else rotated, self.rotation
        )

    def _check_compatible(self, other):
        if not isinstance(other, TangentialField):
            return NotImplemented
        if other.radius != self.radius or other.rotated != self.rotated or other.n_max != self.n_max:
            raise InvalidArgumentError("tangential fields differ in radius, basis or truncation")
        return None

    def __add__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return self._like(self.coefficients + other.coefficients)

    def __sub__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return self._like(self.coefficients - other.coefficients)

    def __mul__(self, scalar):
        return self._like(complex(scalar) * self.coefficients)

    __rmul__ = __mul__

    def evaluate(self, directions):
        """Vector values at ``radius * directions`` (original frame)."""
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        dr = d @ self.rotation.T
        ct = np.clip(dr[:, 2], -1, 1)
        st = np.sqrt(1 - ct**2)
        phi = np.arctan2(dr[:, 1], dr[:, 0])
        cp, sp = np.cos(phi), np.sin(phi)
        pi, tau = mie_angular_table(self.n_max, ct)
        c = self.coefficients
        # theta and phi components of sum c X
        comp_t = (
            cp * (c[:, TE, PLUS] @ pi + c[:, TM, PLUS] @ tau)
            + sp * (-(c[:, TE, MINUS] @ pi) + c[:, TM, MINUS] @ tau)
        )
        comp_p = (
            -sp * (c[:, TE, PLUS] @ tau + c[:, TM, PLUS] @ pi)
            + cp * (-(c[:, TE, MINUS] @ tau) + c[:, TM, MINUS] @ pi)
        )
        if not self.rotated:
            # x cross (a theta + b phi) = a phi - b theta
            comp_t, comp_p = -comp_p, comp_t
        th = np.stack([ct * cp, ct * sp, -st], axis=-1)
        ph = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
        vals = comp_t[:, None] * th + comp_p[:, None] * ph
        return vals @ self.rotation


def calderon_multipliers(n, k, R):
    """``(m_TE, m_TM)`` of the exterior Calderon operator for degree ``n``."""
    if n < 1:
        raise InvalidArgumentError(f"degree must be >= 1, got {n}")
    m = multiplier_table(n, k, R)
    return complex(m[TE, n - 1]), complex(m[TM, n - 1])


def multiplier_table(n_max, k, R):
    """``(2, n_max)`` array of ``[m_TE, m_TM]`` for ``n = 1..n_max``."""
    z = complex(k) * R
    if z == 0:
        raise SingularArgumentError("Calderon multipliers are singular at kR = 0")
    if z.imag < 0:
        raise InvalidArgumentError("Calderon multipliers need Im(kR) >= 0")
    # q_n = h_n / h_(n-1) by forward recurrence; h is dominant for Im z >= 0,
    # so the ratios stay accurate long after xi_n itself overflows
    q = np.empty(n_max, dtype=complex)
    q[0] = (1.0 - 1j * z) / z
    for n in range(1, n_max):
        q[n] = (2 * n + 1) / z - 1.0 / q[n - 1]
    n = np.arange(1, n_max + 1)
    log_deriv = 1.0 / q - n / z  # xi_n' / xi_n
    return np.array([1j * log_deriv, -1j / log_deriv])


def _apply(lam, k):
    if not isinstance(lam, TangentialField):
        raise InvalidArgumentError("expected a TangentialField")
    if lam.rotated:
        raise InvalidArgumentError("the Calderon operator acts on trace-basis fields")
    m = multiplier_table(lam.n_max, k, lam.radius)
    return lam._like(lam.coefficients * m.T[:, :, None], rotated=True)


def apply_Ge(lam, k, radius=None):
    """``x cross H^s`` for the outgoing field with trace ``lam = x cross E^s``."""
    if radius is not None and radius != lam.radius:
        raise InvalidArgumentError(f"field radius {lam.radius} does not match {radius}")
    k = complex(k)
    if k.imag != 0 or k.real <= 0:
        raise InvalidArgumentError("apply_Ge needs a positive real wavenumber")
    return _apply(lam, k.real)


def apply_Ge_tilde(lam):
    """The companion operator with ``k`` replaced by ``i``."""
    return _apply(lam, 1j)


def cross_normal(field, side="right"):
    """``field x x`` (``side="right"``) or ``x x field`` (``side="left"``)."""
    if side == "right":
        sign = -1.0 if field.rotated else 1.0
    elif side == "left":
        sign = 1.0 if field.rotated else -1.0
    else:
        raise InvalidArgumentError("side must be 'right' or 'left'")
    return field._like(sign * field.coefficients, rotated=not field.rotated)


def pairing(u, v):
    """``int u . conj(v) ds`` for two fields in the same basis."""
    if u.rotated != v.rotated or u.radius != v.radius or u.n_max != v.n_max:
        raise InvalidArgumentError("pairing needs fields in the same basis and truncation")
    w = basis_norms(u.n_max, u.radius)
    return complex(np.sum(w[:, None, None] * u.coefficients * np.conj(v.coefficients)))


def norm_proxy(lam):
    """Spectral stand-in for the ``H^(-1/2)_div`` norm of a trace-basis field.

    Trace-basis TE patterns are surface gradients and TM patterns are
    surface curls; they are weighted by ``(1 + n(n+1))^(+1/2)`` and
    ``(1 + n(n+1))^(-1/2)`` respectively.
    """
    if lam.rotated:
        raise InvalidArgumentError("norm_proxy expects a trace-basis field")
    n = np.arange(1, lam.n_max + 1)
    s = 1.0 + n * (n + 1)
    weights = np.stack([np.sqrt(s), 1.0 / np.sqrt(s)], axis=1)[:, :, None]
    w = basis_norms(lam.n_max, lam.radius)[:, None, None]
    return float(np.sqrt(np.sum(w * weights * np.abs(lam.coefficients) ** 2)))


def traces(solution, radius=None, part="total"):
    """Electric trace ``x cross E`` (trace basis) and magnetic trace ``x cross H`` (rotated basis).

    Evaluated on ``|x| = radius`` outside the scatterer (default: the
    Calderon radius).  ``part`` is ``"total"``, ``"regular"`` (incident) or
    ``"outgoing"`` (scattered).
    """
    R = solution.scene.calderon_radius if radius is None else float(radius)
    if not R > solution.scene.outer_radius:
        raise InvalidArgumentError("the trace radius must lie outside the scatterer")
    z = solution.k * R
    f, fp = solution.radial(len(solution.regions) - 1, np.array(R), part)
    pref = solution.prefactors
    e = np.zeros((solution.n_max, 2, 2), dtype=complex)
    h = np.zeros_like(e)
    e[:, TE, PLUS] = pref[TE] * f[TE] / z
    e[:, TM, PLUS] = pref[TM] * fp[TM] / z
    h[:, TE, PLUS] = 1j * pref[TE] * fp[TE] / z
    h[:, TM, PLUS] = -1j * pref[TM] * f[TM] / z
    return (
        TangentialField(R, e, False, solution.rotation),
        TangentialField(R, h, True, solution.rotation),
    )


def scattered_trace(solution, radius=None):
    """``x cross E^s`` on ``|x| = radius`` in the trace basis."""
    return traces(solution, radius, "outgoing")[0]


def radiated_power(lam, k):
    """``Re int (nu x conj(E^s)) . H^s ds`` for the outgoing field with trace ``lam``.

    Equals ``-Re <G_e lam, lam x x>``, which is non-negative.
    """
    return -pairing(apply_Ge(lam, k), cross_normal(lam)).real
