"""Closed-form dispersion machinery for the limit graph of the thin ladder.

As the rung thickness tends to zero the ladder degenerates to a periodic
metric graph carrying -u'' = omega^2 u on every edge, with Kirchhoff (flux
balance) conditions at the vertices; the rung at x = 0 enters the flux sum
with weight mu.  After the symmetric/antisymmetric reduction about y = 0,
each Floquet fiber at quasimomentum theta in [0, pi] is governed by a scalar
relation between omega and theta.  Everything in this module is a closed-form
function of omega; the frequency variable is omega, the spectral parameter is
lambda = omega^2.

Pole convention: functions with trigonometric poles return +inf/-inf carrying
the sign of the right-sided limit; at points where a pole of the rung
impedance coincides with sin(omega) = 0 (compactly supported flat modes) the
transfer coefficient is genuinely indeterminate and NaN is returned -- band
membership at those points is decided by the special-point rules in
`bands.in_essential_spectrum`, never by the NaN.
"""

from __future__ import annotations

import math

from .params import SymmetryClass
from .rootfind import bisect_root, dist_to_multiple

#: relative tolerance for detecting an exact trigonometric pole
POLE_RTOL = 1e-12
#: tolerance under which sin(omega) counts as zero when classifying a pole
FLAT_RTOL = 1e-9


def _is_pole_of_cot(x):
    return dist_to_multiple(x, math.pi) <= POLE_RTOL * max(1.0, abs(x))


def _is_pole_of_tan(x):
    return dist_to_multiple(x - 0.5 * math.pi, math.pi) <= POLE_RTOL * max(1.0, abs(x))


def phi_L(omega, L, sym_class):
    """Impedance of a half-rung of length L/2 seen from the rail.

    2/tan(omega*L/2) for the symmetric family (Neumann midpoint), and
    -2*tan(omega*L/2) for the antisymmetric family (Dirichlet midpoint).
    Strictly decreasing between consecutive poles; poles return +inf
    (right-sided limit).
    """
    half = 0.5 * omega * L
    if sym_class is SymmetryClass.SYMMETRIC:
        if _is_pole_of_cot(half):
            return math.inf
        if _is_pole_of_tan(half):
            return 0.0  # exact zero of cot, clamped like the poles
        return 2.0 / math.tan(half)
    if _is_pole_of_tan(half):
        return math.inf
    if _is_pole_of_cot(half):
        return 0.0
    return -2.0 * math.tan(half)


def phi_2(omega):
    """Impedance 2/tan(omega) of a rail segment of unit length; poles return +inf."""
    if _is_pole_of_cot(omega):
        return math.inf
    if _is_pole_of_tan(omega):
        return 0.0
    return 2.0 / math.tan(omega)


def g_mu_value(omega, L, mu, sym_class):
    """Transfer coefficient -cos(omega) + mu*sin(omega)/phi_L(omega).

    The discrete rail recursion u_{j+1} + 2 g u_j + u_{j-1} = 0 holds with this
    coefficient at the vertex whose rung carries weight mu.  Returns +-inf at
    the zeros of phi_L when sin(omega) != 0 (right-sided limit sign), NaN when
    the zero coincides with sin(omega) = 0 (flat point).
    """
    s = math.sin(omega)
    c = math.cos(omega)
    half = 0.5 * omega * L
    if sym_class is SymmetryClass.SYMMETRIC:
        # poles of tan(omega*L/2), i.e. zeros of phi_L
        if _is_pole_of_tan(half):
            if abs(s) <= FLAT_RTOL * max(1.0, abs(omega)):
                return math.nan
            return math.copysign(math.inf, -s)  # tan -> -inf from the right
        return -c + 0.5 * mu * s * math.tan(half)
    if _is_pole_of_cot(half):
        if abs(s) <= FLAT_RTOL * max(1.0, abs(omega)):
            return math.nan
        return math.copysign(math.inf, -s)  # cot -> +inf from the right
    return -c - 0.5 * mu * s / math.tan(half)


def g_value(omega, L, sym_class):
    """Transfer coefficient of the unperturbed ladder (mu = 1)."""
    return g_mu_value(omega, L, 1.0, sym_class)


def dispersion_residual(theta, omega, L, sym_class):
    """Signed residual of the Floquet dispersion relation at (theta, omega).

    Symmetric family:      2 cos(wL/2) (cos w - cos theta) - sin w sin(wL/2)
    Antisymmetric family:  2 sin(wL/2) (cos w - cos theta) + sin w cos(wL/2)

    Entire in omega (no poles).  theta must lie in the reduced Brillouin zone
    [0, pi]; values of omega solving the relation for some theta make up the
    essential spectrum of the corresponding family (for the antisymmetric one,
    omega = 0 is excluded by definition).
    """
    if not 0.0 <= theta <= math.pi:
        raise ValueError(f"quasimomentum theta={theta} outside [0, pi]")
    half = 0.5 * omega * L
    if sym_class is SymmetryClass.SYMMETRIC:
        return 2.0 * math.cos(half) * (math.cos(omega) - math.cos(theta)) - math.sin(
            omega
        ) * math.sin(half)
    return 2.0 * math.sin(half) * (math.cos(omega) - math.cos(theta)) + math.sin(
        omega
    ) * math.cos(half)


def theta_root(omega, L, sym_class, *, tol=1e-10):
    """Quasimomentum theta in [0, pi] solving the dispersion relation at omega.

    The residual is monotone in cos(theta), so the bracket [0, pi] certifies
    existence: a root exists iff the endpoint residuals do not share a strict
    sign.  Returns the bisected root, or None when no root exists.
    """
    f = lambda th: dispersion_residual(th, omega, L, sym_class)
    r0, rpi = f(0.0), f(math.pi)
    if r0 == 0.0:
        return 0.0
    if rpi == 0.0:
        return math.pi
    if math.copysign(1.0, r0) == math.copysign(1.0, rpi):
        return None
    return bisect_root(f, 0.0, math.pi, xtol=tol, flo=r0, fhi=rpi)


def f_plus(omega):
    """Band-edge curve tan(omega/2), pi-periodized.

    omega belongs to a band exactly when phi_L(omega) leaves the open strip
    (f_minus, f_plus); gap bottoms of type (i)/(iii) sit on phi_L = f_plus.
    """
    t = math.fmod(omega, math.pi)
    if t < 0:
        t += math.pi
    return math.tan(0.5 * t)


def f_minus(omega):
    """Band-edge curve -cot(omega/2), pi-periodized; companion of f_plus.

    Gap tops of type (i)/(ii) sit on phi_L = f_minus.
    """
    t = math.fmod(omega, math.pi)
    if t < 0:
        t += math.pi
    if t == 0.0:
        return -math.inf
    return -1.0 / math.tan(0.5 * t)


def capital_F(omega, L, sym_class):
    """Defect response F(omega) = 1 - sqrt((g^2-1)/(g+cos omega)^2).

    Defined inside spectral gaps (|g| > 1); a rung-weight defect mu in (0, 1)
    produces an eigenvalue exactly where F(omega) = mu.  At the zeros of
    phi_L inside a gap (g infinite) the limit value 0 is returned.  Raises
    ValueError when omega lies in the essential spectrum of the family.
    """
    g = g_mu_value(omega, L, 1.0, sym_class)
    if math.isnan(g):
        raise ValueError(f"omega={omega} is a flat spectral point; F undefined")
    if math.isinf(g):
        return 0.0
    if abs(g) <= 1.0:
        raise ValueError(
            f"omega={omega} lies in the essential spectrum (|g|={abs(g)} <= 1); F undefined"
        )
    denom = g + math.cos(omega)
    return 1.0 - math.sqrt((g * g - 1.0) / (denom * denom))


def capital_F_phi(omega, L, sym_class):
    """F(omega) through the impedance identity 1 - sqrt(1 - phi_L*(phi_L + phi_2)).

    Algebraically identical to `capital_F`; kept as an independent evaluation
    route for cross-checking.
    """
    p = phi_L(omega, L, sym_class)
    q = phi_2(omega)
    if math.isinf(p) or math.isinf(q):
        raise ValueError(
            f"omega={omega} is a pole of the impedances; use capital_F or move off the pole"
        )
    rad = 1.0 - p * (p + q)
    if rad < 0.0:
        raise ValueError(
            f"omega={omega} lies in the essential spectrum (radicand {rad} < 0); F undefined"
        )
    return 1.0 - math.sqrt(rad)


def reflection_root(omega, L, sym_class):
    """Decay factor r in (-1, 1) of the defect mode, the stable root of r^2 + 2 g r + 1 = 0.

    r = -g + sign(g) sqrt(g^2 - 1); the companion root is 1/r (Vieta).  Raises
    ValueError inside the essential spectrum.  At zeros of phi_L (g infinite)
    the limit 0 is returned.
    """
    g = g_mu_value(omega, L, 1.0, sym_class)
    if math.isnan(g):
        raise ValueError(f"omega={omega} is a flat spectral point; no decay root")
    if math.isinf(g):
        return 0.0
    if abs(g) <= 1.0:
        raise ValueError(
            f"omega={omega} lies in the essential spectrum (|g| <= 1); no decaying root"
        )
    return -g + math.copysign(math.sqrt(g * g - 1.0), g)
