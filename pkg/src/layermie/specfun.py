"""Spherical Bessel, Hankel and Riccati-Bessel functions of complex argument.

All table routines return arrays of shape ``(n_max + 1,) + z.shape`` holding
orders ``0..n_max``.  Two families are provided:

* unscaled values ``j_n(z)``, ``h_n(z) = j_n(z) + i y_n(z)``;
* exponentially scaled values ``j_n(z) exp(-|Im z|)`` and
  ``h_n(z) exp(-i z)``, which stay finite for the large complex wavenumbers
  of strongly contrasted cores.

``j_n`` is obtained from a Miller-type downward recurrence normalised
against the closed forms of ``j_0``/``j_1``.  Upward recurrence for ``j_n``
is only stable while ``n < |z|``; downward recurrence started above
``max(n_max, |z|)`` is stable everywhere.  ``h_n`` is dominant for upward
recurrence and is propagated from its closed forms.

Riccati-Bessel functions are ``psi_n(z) = z j_n(z)`` and
``xi_n(z) = z h_n(z)``; their derivatives follow from
``f_n'(z) = f_{n-1}(z) - (n / z) f_n(z)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, SingularArgumentError, UnsupportedOrderError

N_CAP = 512

_RESCALE_AT = 1e250


@dataclass(frozen=True)
class RadialPair:
    """Value of a radial function and its derivative with respect to ``z``."""

    value: complex
    derivative: complex


def _check_order(n):
    if n < 0:
        raise InvalidArgumentError(f"order must be non-negative, got {n}")
    if n > N_CAP:
        raise UnsupportedOrderError(f"order {n} exceeds N_CAP={N_CAP}")


def _as_complex(z):
    z = np.asarray(z, dtype=complex)
    if np.any(np.isnan(z.real) | np.isnan(z.imag)):
        raise InvalidArgumentError("NaN argument")
    return z


def _miller_start(n_max, zabs):
    top = max(float(n_max), zabs)
    return int(top + 20 + 4.0 * np.cbrt(top) + np.sqrt(top))


def spherical_jn_table(n_max, z, scaled=False):
    """Return ``j_n(z)`` for ``n = 0..n_max`` (optionally times ``exp(-|Im z|)``)."""
    _check_order(n_max)
    z = _as_complex(z)
    shape = z.shape
    zf = z.ravel()
    out = np.zeros((n_max + 1, zf.size), dtype=complex)
    zero = zf == 0
    out[0, zero] = 1.0
    nz = ~zero
    if np.any(nz):
        out[:, nz] = _jn_nonzero(n_max, zf[nz], scaled)
    return out.reshape((n_max + 1,) + shape)


def _jn_nonzero(n_max, z, scaled):
    # closed forms, scaled by exp(-|Im z|) to stay finite
    shift = np.abs(z.imag)
    moderate = shift < 300.0
    zm = np.where(moderate, z, 0.0)
    ep = np.exp(1j * z - shift)
    em = np.exp(-1j * z - shift)
    # np.sin keeps relative accuracy near real zeros; exponentials overflow-safe
    sin_s = np.where(moderate, np.sin(zm) * np.exp(-np.where(moderate, shift, 0.0)), (ep - em) / 2j)
    cos_s = np.where(moderate, np.cos(zm) * np.exp(-np.where(moderate, shift, 0.0)), (ep + em) / 2)
    j0 = sin_s / z
    j1 = sin_s / z**2 - cos_s / z

    start = _miller_start(n_max, float(np.max(np.abs(z))))
    f_hi = np.zeros_like(z)
    f = np.full_like(z, 1e-300)
    vals = np.zeros((n_max + 1, z.size), dtype=complex)
    for n in range(start, 0, -1):
        f_hi, f = f, (2 * n + 1) / z * f - f_hi
        if n - 1 <= n_max:
            vals[n - 1] = f
        big = np.abs(f) > _RESCALE_AT
        if np.any(big):
            f[big] /= _RESCALE_AT
            f_hi[big] /= _RESCALE_AT
            vals[:, big] /= _RESCALE_AT
    use0 = np.abs(j0) >= np.abs(j1)
    ref = np.where(use0, j0, j1)
    if n_max >= 1:
        got = np.where(use0, vals[0], vals[1])
    else:
        got = vals[0]
        ref = j0
    vals *= ref / got
    vals[0] = j0
    if not scaled:
        vals *= np.exp(shift)
    return vals


def spherical_h1_table(n_max, z, scaled=False):
    """Return ``h_n^(1)(z)`` for ``n = 0..n_max`` (optionally times ``exp(-i z)``)."""
    _check_order(n_max)
    z = _as_complex(z)
    if np.any(z == 0):
        raise SingularArgumentError("h_n^(1) is singular at z = 0")
    shape = z.shape
    zf = z.ravel()
    lower = zf.imag < 0
    if np.any(lower):
        # upward recurrence loses digits below the real axis; use
        # h1 = 2 j - h2 with h2(z) = conj(h1(conj z)) from the upper half plane
        vals = np.empty((n_max + 1, zf.size), dtype=complex)
        if np.any(~lower):
            vals[:, ~lower] = spherical_h1_table(n_max, zf[~lower], scaled)
        zl = zf[lower]
        j = spherical_jn_table(n_max, zl, scaled)
        h2 = np.conj(spherical_h1_table(n_max, np.conj(zl), scaled))
        if scaled:
            # j carries exp(-|Im z|), h1 must carry exp(-i z); h2 as computed
            # carries exp(-i z) * exp(2 Im z) relative to the unscaled value
            with np.errstate(over="ignore", invalid="ignore"):
                vals[:, lower] = 2 * j * np.exp(-1j * zl.real) - h2 * np.exp(-2j * zl)
        else:
            vals[:, lower] = 2 * j - h2
        return vals.reshape((n_max + 1,) + shape)
    phase = np.ones_like(zf) if scaled else np.exp(1j * zf)
    vals = np.empty((n_max + 1, zf.size), dtype=complex)
    vals[0] = -1j * phase / zf
    if n_max >= 1:
        vals[1] = -phase * (zf + 1j) / zf**2
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_max):
            vals[n + 1] = (2 * n + 1) / zf * vals[n] - vals[n - 1]
    return vals.reshape((n_max + 1,) + shape)


def sph_bessel_j(n, z):
    """Spherical Bessel function of the first kind ``j_n(z)``."""
    _check_order(n)
    return complex(spherical_jn_table(n, z)[n])


def sph_hankel1(n, z):
    """Spherical Hankel function of the first kind ``h_n^(1)(z)``."""
    _check_order(n)
    return complex(spherical_h1_table(n, z)[n])


def riccati_table(kind, n_max, z, scaled=False):
    """Riccati-Bessel values and derivatives for ``n = 1..n_max``.

    Returns ``(value, derivative)``, each of shape ``(n_max,) + z.shape`` with
    row ``n - 1`` holding order ``n``.  With ``scaled=True`` both are
    multiplied by the same factor as the underlying Bessel table
    (``exp(-|Im z|)`` for ``psi``, ``exp(-i z)`` for ``xi``), so ratios such as
    ``psi'/psi`` are unaffected.
    """
    if kind not in ("psi", "xi"):
        raise InvalidArgumentError(f"kind must be 'psi' or 'xi', got {kind!r}")
    if n_max < 1:
        raise InvalidArgumentError("n_max must be >= 1")
    z = _as_complex(z)
    if kind == "psi":
        base = spherical_jn_table(n_max, z, scaled)
    else:
        base = spherical_h1_table(n_max, z, scaled)
    f = z * base
    n = np.arange(1, n_max + 1).reshape((-1,) + (1,) * z.ndim)
    with np.errstate(invalid="ignore", divide="ignore"):
        deriv = f[:-1] - n / z * f[1:]
    if kind == "psi" and np.any(z == 0):
        # psi_n'(0) = 0 for n >= 1
        deriv[:, z == 0] = 0.0
    return f[1:], deriv


def riccati(kind, n, z, scaled=False):
    """Riccati-Bessel function ``psi_n`` or ``xi_n`` with its derivative."""
    if n < 1:
        raise InvalidArgumentError(f"order must be >= 1, got {n}")
    _check_order(n)
    value, deriv = riccati_table(kind, n, z, scaled)
    return RadialPair(complex(value[n - 1]), complex(deriv[n - 1]))


def mie_angular_table(n_max, mu):
    """Angular functions ``pi_n`` and ``tau_n`` for ``n = 1..n_max``.

    ``pi_n = P_n^1 / sin(theta)`` and ``tau_n = d P_n^1 / d theta`` with the
    sign convention in which ``pi_1 = 1`` and ``tau_1 = cos(theta)``.  Both
    are polynomials in ``mu = cos(theta)``, so the poles need no special
    treatment.  Returns two arrays of shape ``(n_max,) + mu.shape``.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(np.isnan(mu)):
        raise InvalidArgumentError("NaN argument")
    if np.any(np.abs(mu) > 1.0):
        raise InvalidArgumentError("|cos(theta)| must not exceed 1")
    if n_max < 1:
        raise InvalidArgumentError("n_max must be >= 1")
    pi = np.empty((n_max + 1,) + mu.shape)
    tau = np.empty((n_max,) + mu.shape)
    pi[0] = 0.0
    pi[1] = 1.0
    tau[0] = mu
    for n in range(2, n_max + 1):
        pi[n] = ((2 * n - 1) * mu * pi[n - 1] - n * pi[n - 2]) / (n - 1)
        tau[n - 1] = n * mu * pi[n] - (n + 1) * pi[n - 1]
    return pi[1:], tau


def mie_angular(n, mu):
    """Return ``(pi_n, tau_n)`` at ``cos(theta) = mu`` for a single order."""
    if n < 1:
        raise InvalidArgumentError(f"order must be >= 1, got {n}")
    _check_order(n)
    pi, tau = mie_angular_table(n, mu)
    return float(pi[n - 1]), float(tau[n - 1])
