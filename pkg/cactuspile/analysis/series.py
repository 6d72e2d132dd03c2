import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import special, stats

from cactuspile.analysis.filling import PHI_LOWER_BOUND, phi_n
from cactuspile.config import settings
from cactuspile.errors import InputError, SizeGuardError

logger = logging.getLogger(__name__)

# Dominant singularity of f and g, and the exponent of their square-root factor
SINGULARITY = Fraction(1, 20)
SINGULAR_EXPONENT = -0.5
CRITICAL_EXPONENT = 1.5
# Denominator of p^cf(n): recurrent configurations per cell in the limit
RECURRENT_PER_CELL = 5


@dataclass
class SeriesTable:
    a: List[int]
    b: List[int]
    c: List[float]

    @classmethod
    def build(cls, n_max: int) -> "SeriesTable":
        a = f_coeffs(n_max)
        b = g_coeffs(n_max, a)
        return cls(a=a, b=b, c=scaled_coeffs(n_max).tolist())


def _check_exact(n_max: int) -> None:
    if n_max < 1:
        raise InputError(f"series length must be at least 1, got {n_max}")
    if n_max > settings.EXACT_SERIES_MAX:
        raise SizeGuardError(f"exact coefficients are limited to n <= {settings.EXACT_SERIES_MAX}, asked for {n_max}")


def f_coeffs(n_max: int) -> List[int]:
    """a_0..a_n_max of f(x) = 12x + 8x f(x) + 3x f(x)^2."""
    _check_exact(n_max)
    a = [0] * (n_max + 1)
    a[1] = 12
    for n in range(2, n_max + 1):
        a[n] = 8 * a[n - 1] + 3 * sum(a[i] * a[n - 1 - i] for i in range(1, n - 1))
    return a


def g_coeffs(n_max: int, a: Optional[Sequence[int]] = None) -> List[int]:
    """b_0..b_n_max of g(x) = f(x) + f(x)^2."""
    a = f_coeffs(n_max) if a is None else a
    return [0] + [a[n] + sum(a[i] * a[n - i] for i in range(1, n)) for n in range(1, n_max + 1)]


def _sqrt_series(p: Sequence[Fraction], n_max: int) -> List[Fraction]:
    """Coefficients of sqrt(P) for a series P with P(0) = 1."""
    s = [Fraction(1)] + [Fraction(0)] * n_max
    for n in range(1, n_max + 1):
        p_n = p[n] if n < len(p) else 0
        s[n] = (p_n - sum(s[i] * s[n - i] for i in range(1, n))) / 2
    return s


def closed_form_coeffs(n_max: int) -> List[Fraction]:
    """Expansion of (1 - 8x - sqrt(1 - 16x - 80x^2)) / (6x) with exact rationals."""
    _check_exact(n_max)
    s = _sqrt_series([Fraction(1), Fraction(-16), Fraction(-80)], n_max + 1)
    numerator = [1 - s[0], -8 - s[1]] + [-s[k] for k in range(2, n_max + 2)]
    if numerator[0] != 0:
        raise ArithmeticError("closed form numerator has a constant term")
    return [numerator[n + 1] / 6 for n in range(n_max + 1)]


def scaled_coeffs(n_max: int, which: str = "g") -> np.ndarray:
    """
    b_n / 20^n (or a_n / 20^n for which="f") for n = 0..n_max.

    The recurrences are run on the scaled values directly, so nothing grows like 20^n:
    alpha_n = 0.4 alpha_(n-1) + 0.15 sum alpha_i alpha_(n-1-i).
    """
    if n_max < 1:
        raise InputError(f"series length must be at least 1, got {n_max}")
    if n_max > settings.SCALED_SERIES_MAX:
        raise SizeGuardError(f"scaled coefficients are limited to n <= {settings.SCALED_SERIES_MAX}, asked for {n_max}")
    if which not in ("f", "g"):
        raise InputError(f"unknown series {which!r}, expected 'f' or 'g'")

    alpha = np.zeros(n_max + 1)
    alpha[1] = 12 / 20
    for n in range(2, n_max + 1):
        alpha[n] = 0.4 * alpha[n - 1] + 0.15 * np.dot(alpha[1:n - 1], alpha[n - 2:0:-1])
    if which == "f":
        return alpha

    beta = alpha.copy()
    for n in range(2, n_max + 1):
        beta[n] += np.dot(alpha[1:n], alpha[n - 1:0:-1])
    return beta


class ExponentFit(NamedTuple):
    slope: float
    intercept: float
    stderr: float


def fit_exponent(series: Sequence[float], n_min: int, n_max: int) -> ExponentFit:
    """Least-squares line through (log n, log series[n]) for n_min <= n <= n_max."""
    if n_min < 2 or n_max <= n_min:
        raise InputError(f"degenerate fit window [{n_min}, {n_max}]; need n_max > n_min >= 2")
    if n_max >= len(series):
        raise InputError(f"fit window ends at {n_max} but the series has {len(series)} terms")
    n = np.arange(n_min, n_max + 1)
    values = np.asarray(series, dtype=float)[n_min:n_max + 1]
    if np.any(values <= 0):
        raise InputError("series values must be positive for a log-log fit")

    result = stats.linregress(np.log(n), np.log(values))
    logger.info(f"Fitted slope {result.slope:.6f} +/- {result.stderr:.2e} over n in [{n_min}, {n_max}]")
    return ExponentFit(slope=float(result.slope), intercept=float(result.intercept), stderr=float(result.stderr))


# Asymptotics


def _singular_factor(kind: str, x: float) -> float:
    """Coefficient of sqrt(1 - 20x) in the decomposition of f or g."""
    if kind == "f":
        return -np.sqrt(1 + 4 * x) / (6 * x)
    if kind == "g":
        return (5 * x - 1) / (18 * x ** 2) * np.sqrt(1 + 4 * x)
    raise InputError(f"unknown series {kind!r}, expected 'f' or 'g'")


def polya_constant(kind: str = "g") -> float:
    """K in coefficient ~ K 20^n n^(-3/2): the singular factor at 1/20 over Gamma(-1/2)."""
    return float(_singular_factor(kind, float(SINGULARITY)) / special.gamma(SINGULAR_EXPONENT))


def f_direct(x: float) -> float:
    return (1 - 8 * x - np.sqrt(1 - 16 * x - 80 * x ** 2)) / (6 * x)


def printed_g_regular(x: float) -> float:
    """Regular part of g as usually displayed, with the sign of its last two terms flipped."""
    return -(16 / 9 - 13 / (18 * x) + 1 / (18 * x ** 2))


def g_regular(x: float) -> float:
    return -(16 / 9 + 13 / (18 * x) - 1 / (18 * x ** 2))


@dataclass(frozen=True)
class SingularDecompositionCheck:
    x: float
    g_value: float
    series_value: float
    singular_part: float
    residual: float
    printed_residual: float
    f_residual: float

    @property
    def printed_form_holds(self) -> bool:
        return abs(self.printed_residual) <= 1e-9 * max(1.0, abs(self.g_value))


def check_singular_decomposition(x: float = 0.049, terms: int = 4000) -> SingularDecompositionCheck:
    """
    Compare g(x) from the quadratic formula and from its coefficients with the square-root
    decomposition, once with the regular part as commonly printed and once with the corrected one.
    """
    if not 0 < x < float(SINGULARITY):
        raise InputError(f"x must lie in (0, 1/20), got {x}")
    f_value = f_direct(x)
    g_value = f_value + f_value ** 2
    root = np.sqrt(1 - 20 * x)
    singular = _singular_factor("g", x) * root
    c = scaled_coeffs(terms)
    series_value = float(np.sum(c * (20 * x) ** np.arange(terms + 1)))
    f_decomposed = _singular_factor("f", x) * root + (1 / (6 * x) - 4 / 3)

    check = SingularDecompositionCheck(
        x=x,
        g_value=float(g_value),
        series_value=series_value,
        singular_part=float(singular),
        residual=float(g_value - singular - g_regular(x)),
        printed_residual=float(g_value - singular - printed_g_regular(x)),
        f_residual=float(f_value - f_decomposed),
    )
    if not check.printed_form_holds:
        logger.warning(f"Printed regular part of g is off by {check.printed_residual:.6g} at x={x}; "
                       f"corrected form leaves {check.residual:.2e}")
    return check


@dataclass(frozen=True)
class PcfBounds:
    n: int
    lower: float
    upper: float
    phi: Fraction
    phi_exact: bool


def pcf_bounds(n: int, series: Optional[Sequence[float]] = None) -> PcfBounds:
    """
    Bounds on the share of recurrent configurations whose first wave topples exactly n cells:
    phi * b_n / (5 * 20^n) and b_n / (5 * 20^n), with phi = phi_n when it can be computed
    and 7/48 otherwise.
    """
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    c = scaled_coeffs(n) if series is None else series
    upper = float(c[n]) / RECURRENT_PER_CELL
    exact = n <= settings.PHI_MAX_CELLS
    phi = phi_n(n) if exact else PHI_LOWER_BOUND
    return PcfBounds(n=n, lower=float(phi) * upper, upper=upper, phi=phi, phi_exact=exact)
