"""
The special-function kernel and the numeric plumbing every analytic model
leans on.

Most functions are thin, validated wrappers over :mod:`scipy.special`; the
finite Kummer sum for integer-parameter ₁F₁ and the quadrature wrapper are
the only things done by hand.

::

    >>> gamma(5)
    24.0
    >>> all(check.passed for check in self_test())
    True
"""
import dataclasses
import logging
import math
import warnings
from collections.abc import Callable

import numpy as np
from scipy import integrate, special

from .constants import DEFAULT_TOL, QUAD_ABS_FLOOR, QUAD_ERROR_CEILING

LOG = logging.getLogger(__name__)


class DomainError(ValueError):
    """
    A special function was asked for a value outside its domain.
    """


class SeriesDivergenceError(ArithmeticError):
    """
    A series did not reach its tolerance before the configured term cap.
    """


class QuadratureError(ArithmeticError):
    """
    Adaptive quadrature could not reach the requested accuracy.
    """


def gamma(x: float) -> float:
    """
    The gamma function Γ(x).
    """
    if x <= 0 and float(x).is_integer():
        raise DomainError(f"Γ has a pole at {x}")
    return float(special.gamma(x))


def lower_gamma(a: float, x):
    """
    The (unregularized) lower incomplete gamma function γ(a, x).
    """
    if a <= 0:
        raise DomainError(f"γ(a, x) needs a > 0, got {a}")
    if np.any(np.asarray(x) < 0):
        raise DomainError("γ(a, x) needs x ≥ 0")
    return special.gammainc(a, x) * special.gamma(a)


def pochhammer(x: float, n: int) -> float:
    """
    The rising factorial (x)_n = Γ(x+n)/Γ(x), with (x)_0 = 1.
    """
    if n < 0:
        raise DomainError(f"Pochhammer order must be ≥ 0, got {n}")
    return float(special.poch(x, n))


def kummer_polynomial(a: int, z):
    """
    e^{-z}·₁F₁(a; 1; z) for integer a ≥ 1, as the finite sum
    Σ_{l<a} C(a-1, l) z^l / l!.

    Keeping the exponential out lets callers fold it into their own
    exponents, which is how the shadowed-Rician density stays finite for
    large arguments.
    """
    if int(a) != a or a < 1:
        raise DomainError(f"finite Kummer sum needs integer a ≥ 1, got {a}")
    z = np.asarray(z, dtype=float)
    total = np.zeros_like(z)
    # Horner from the top coefficient down
    for l in range(int(a) - 1, -1, -1):
        total = total * z + special.binom(a - 1, l) / math.factorial(l)
    return total if total.ndim else float(total)


def hyp1f1_kummer(a: int, z):
    """
    ₁F₁(a; 1; z) for integer a ≥ 1 via Kummer's transformation.
    """
    return np.exp(z) * kummer_polynomial(a, z)


def hyp2f1(a: float, b: float, c: float, z):
    """
    The Gauss hypergeometric function ₂F₁(a, b; c; z) for z < 1.

    Raises :class:`DomainError` when c is a non-positive integer or z ≥ 1.
    """
    if c <= 0 and float(c).is_integer():
        raise DomainError(f"₂F₁ undefined for c = {c}")
    if np.any(np.asarray(z) >= 1):
        raise DomainError("₂F₁ is only evaluated on the real line below 1")
    return special.hyp2f1(a, b, c, z)


def q_function(x):
    """
    The Gaussian tail Q(x) = P[N(0, 1) > x].
    """
    return special.ndtr(-np.asarray(x, dtype=float))


def q_inverse(p):
    """
    The inverse of :func:`q_function`.
    """
    return -special.ndtri(p)


def binom(a: float, n: int) -> float:
    """
    Generalized binomial coefficient a choose n, for real a.
    """
    return float(special.binom(a, n))


def quad(func: Callable[[float], float], lower: float, upper: float, *,
         tol: float = DEFAULT_TOL, points=None, limit: int = 200) -> float:
    """
    Adaptive quadrature of ``func`` over [lower, upper].

    Thin wrapper over :func:`scipy.integrate.quad` that turns QUADPACK's
    warnings into either a log line (if the error estimate is still small)
    or a :class:`QuadratureError`.
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always', integrate.IntegrationWarning)
        value, abserr = integrate.quad(
            func, lower, upper, epsabs=QUAD_ABS_FLOOR, epsrel=tol, limit=limit,
            points=points,
        )
    if not math.isfinite(value):
        raise QuadratureError(f"non-finite integral over [{lower}, {upper}]")
    if caught:
        ceiling = max(QUAD_ABS_FLOOR, QUAD_ERROR_CEILING * abs(value))
        if abserr > ceiling:
            raise QuadratureError(
                f"quadrature over [{lower}, {upper}] stalled at {value!r} ± {abserr:.3g}: "
                f"{caught[0].message}")
        LOG.debug("Quadrature warning accepted (%s), error estimate %.3g", caught[0].message, abserr)
    return value


@dataclasses.dataclass(frozen=True)
class KernelCheck:
    """
    One identity checked by :func:`self_test`.
    """
    #: What was checked
    name: str
    #: What the kernel produced
    measured: float
    #: What the identity says it should be
    expected: float
    #: Allowed error
    tolerance: float
    #: Whether ``tolerance`` is relative (otherwise absolute)
    relative: bool = True

    @property
    def error(self) -> float:
        err = abs(self.measured - self.expected)
        if self.relative and self.expected != 0:
            err /= abs(self.expected)
        return err

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance


def self_test() -> list[KernelCheck]:
    """
    Checks the kernel against identities with known closed forms.
    """
    log_identity = lambda z: -math.log1p(-z) / z  # noqa: E731
    return [
        KernelCheck("gamma(5)", gamma(5), 24.0, 1e-10),
        KernelCheck("gamma(1/2)", gamma(0.5), math.sqrt(math.pi), 1e-10),
        KernelCheck("lower_gamma(1, ln 2)", float(lower_gamma(1, math.log(2))), 0.5, 1e-10),
        KernelCheck("pochhammer(x, 0)", pochhammer(3.7, 0), 1.0, 0),
        KernelCheck("pochhammer(3, 4)", pochhammer(3, 4), 360.0, 1e-10),
        KernelCheck("hyp1f1(1; 1; z)", float(hyp1f1_kummer(1, 0.8)), math.exp(0.8), 1e-10),
        KernelCheck("hyp1f1(3; 1; z)", float(hyp1f1_kummer(3, 0.7)),
                    float(special.hyp1f1(3, 1, 0.7)), 1e-10),
        KernelCheck("hyp2f1(a, b; c; 0)", float(hyp2f1(2.5, 1.5, 3.5, 0.0)), 1.0, 1e-10),
        KernelCheck("hyp2f1(1, 1; 2; 0.3)", float(hyp2f1(1, 1, 2, 0.3)), log_identity(0.3), 1e-10),
        KernelCheck("hyp2f1(1, 1; 2; -2)", float(hyp2f1(1, 1, 2, -2.0)), log_identity(-2.0), 1e-10),
        KernelCheck("Q(0)", float(q_function(0.0)), 0.5, 1e-12, relative=False),
        KernelCheck("Q(1.959964)", float(q_function(1.959964)), 0.025, 1e-7, relative=False),
        KernelCheck("Q(x) + Q(-x)", float(q_function(1.3) + q_function(-1.3)), 1.0, 1e-12,
                    relative=False),
    ]
