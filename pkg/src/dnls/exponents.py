"""Closed-form exponents and scaling relations for i u_t + (1/2) Lap u = lambda |u|^(p-1) u.

Everything here is arithmetic on (d, p, lambda).  Computations stay inside
`fractions.Fraction` whenever the inputs allow it, so identities between
exponents can be asserted with zero tolerance; float inputs degrade
gracefully to float results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

# Calibration constants for the scaling-to-small construction.  The theory
# fixes neither of them; these are documented defaults, not ground truth.
DEFAULT_EPS0 = 1e-2
DEFAULT_C_H = 1.0
DEFAULT_C_E = 2.0


def _exact(x) -> Fraction:
    """Exact rational image of x (binary-exact for floats)."""
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class PhysParams:
    """Equation data: dimension, nonlinearity power, complex coefficient.

    `p` may be a Fraction (preferred, keeps the exponent calculus exact),
    an int (promoted to Fraction) or a float.  lambda_im > 0 would amplify
    mass and is rejected; lambda_im == 0 is allowed so the conservative
    limits can be exercised, but a dissipative run needs lambda_im < 0.
    """

    d: int
    p: Fraction | float
    lambda_re: float = 0.0
    lambda_im: float = 0.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if isinstance(self.p, int):
            object.__setattr__(self, "p", Fraction(self.p))
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if self.lambda_im > 0:
            raise ValueError("Im lambda must be <= 0, the amplifying regime is unsupported")

    @property
    def lam(self) -> complex:
        return complex(self.lambda_re, self.lambda_im)

    @property
    def dissipative(self) -> bool:
        return self.lambda_im < 0

    @property
    def critical_power(self) -> Fraction:
        return 1 + Fraction(2, self.d)

    @property
    def is_critical(self) -> bool:
        return _exact(self.p) == self.critical_power


@dataclass(frozen=True)
class DecayRate:
    """L2 decay exponent; `kappa` is None exactly at the critical power."""

    critical: bool
    kappa: Fraction | float | None
    log_exp: Fraction | float


def decay_exponent(params: PhysParams) -> DecayRate:
    """Decay exponent kappa = 2/((d+2)(p-1)) * (1 - d(p-1)/2) for 1 < p <= 1 + 2/d.

    At p = 1 + 2/d the algebraic rate degenerates and the decay is
    logarithmic with exponent 2/((d+2)(p-1)); the critical flag marks that
    branch.  Rational p keeps both numbers exact.
    """
    d, p = params.d, params.p
    if _exact(p) > params.critical_power:
        raise ValueError("decay exponent defined only for 1 < p <= 1 + 2/d")
    log_exp = 2 / ((d + 2) * (p - 1))
    if params.is_critical:
        return DecayRate(True, None, log_exp)
    kappa = log_exp * (1 - d * (p - 1) / 2)
    return DecayRate(False, kappa, log_exp)


@dataclass(frozen=True)
class HolderExponents:
    q: Fraction
    alpha: Fraction
    beta: Fraction | float


def holder_exponents(params: PhysParams) -> HolderExponents:
    """Interpolation exponents (q, alpha, beta) used to close the mass decay.

    q = 1 in one dimension, 2(d+1)/(d+2) otherwise; alpha = 1/q - 1/2;
    beta = ((p+1)/q - 1)/alpha.  beta > p + 1 holds for every p > 1, which
    is what makes the interpolated term subordinate.
    """
    d, p = params.d, params.p
    q = Fraction(1) if d == 1 else Fraction(2 * (d + 1), d + 2)
    alpha = 1 / q - Fraction(1, 2)
    beta = ((p + 1) / q - 1) / alpha
    assert beta > p + 1
    return HolderExponents(q, alpha, beta)


@dataclass(frozen=True)
class GNParameters:
    theta: Fraction | float
    p1: Fraction | float


def gn_parameters(params: PhysParams) -> GNParameters:
    """Gagliardo-Nirenberg interpolation share theta = d(p-1)/(4p), in (0, 1),
    and the induced power p1 = (4p - d(p-1)) / (2(p+1) - d(p-1)) > 1."""
    d, p = params.d, params.p
    if not _exact(p) < 1 + Fraction(4, d):
        raise ValueError("Gagliardo-Nirenberg step needs p < 1 + 4/d")
    theta = d * (p - 1) / (4 * p)
    p1 = (4 * p - d * (p - 1)) / (2 * (p + 1) - d * (p - 1))
    return GNParameters(theta, p1)


@dataclass(frozen=True)
class Regime:
    sdc_satisfied: bool
    attractive: bool


def sdc_check(params: PhysParams) -> Regime:
    """Strong-dissipation test (p-1)|lambda| <= (p+1)|Im lambda|, plus the
    attractive/repulsive tag from the sign of Re lambda."""
    if not params.dissipative:
        raise ValueError("regime classification needs Im lambda < 0")
    p = float(params.p)
    mod = math.hypot(params.lambda_re, params.lambda_im)
    return Regime(
        (p - 1.0) * mod <= (p + 1.0) * abs(params.lambda_im),
        params.lambda_re < 0,
    )


def smallness_threshold(p1, c_e: float = DEFAULT_C_E) -> float:
    """Positive root (2/c_e)^(1/(p1-1)) of c_e*|Im lambda|*X^p1 - 2*|Im lambda|*X.

    Below this value of ||u||_{p+1}^{p+1} the dissipative terms dominate the
    interpolation remainder; the root does not depend on Im lambda.
    """
    p1 = float(p1)
    if not p1 > 1:
        raise ValueError("p1 must exceed 1 for a positive root to exist")
    if not c_e > 0:
        raise ValueError("c_e must be positive")
    return (2.0 / c_e) ** (1.0 / (p1 - 1.0))


def smallness_scaling(params: PhysParams, h1_norm: float,
                      eps0: float = DEFAULT_EPS0, c_h: float = DEFAULT_C_H):
    """Dilation factor mu <= 1 pushing the data into the small regime, and
    the matching mass weight gamma = mu^-2.

    mu solves c_h * mu^(2/(p-1) - d/2) * h1_norm = eps0^(1/(p+1)), clamped at
    one when the data is already small.  Needs p < 1 + 4/d so the scaling
    exponent is positive.
    """
    if not (h1_norm > 0 and eps0 > 0 and c_h > 0):
        raise ValueError("h1_norm, eps0 and c_h must all be positive")
    p, d = float(params.p), params.d
    expo = 2.0 / (p - 1.0) - 0.5 * d
    if expo <= 0:
        raise ValueError("scaling to the small regime needs p < 1 + 4/d")
    mu = min((eps0 ** (1.0 / (p + 1.0)) / (c_h * h1_norm)) ** (1.0 / expo), 1.0)
    return mu, mu ** -2.0


def rate_envelope(params: PhysParams, t: float, c: float) -> float:
    """Theoretical decay envelope: c*(1+t)^-kappa, or the logarithmic form
    c*(log(1+t))^(-2/((d+2)(p-1))) at the critical power (t >= 1 there)."""
    if not c > 0:
        raise ValueError("c must be positive")
    rate = decay_exponent(params)
    if rate.critical:
        if t < 1:
            raise ValueError("critical envelope defined for t >= 1")
        return c * math.log1p(t) ** (-float(rate.log_exp))
    if t < 0:
        raise ValueError("t must be nonnegative")
    return c * (1.0 + t) ** (-float(rate.kappa))


@dataclass(frozen=True)
class ExponentSet:
    """All derived exponents for one (d, p); kappa is None when critical."""

    q: Fraction
    alpha: Fraction
    beta: Fraction | float
    theta: Fraction | float
    p1: Fraction | float
    kappa: Fraction | float | None
    log_exp: Fraction | float
    critical: bool


def exponent_set(params: PhysParams) -> ExponentSet:
    h = holder_exponents(params)
    g = gn_parameters(params)
    r = decay_exponent(params)
    return ExponentSet(h.q, h.alpha, h.beta, g.theta, g.p1,
                       r.kappa, r.log_exp, r.critical)
