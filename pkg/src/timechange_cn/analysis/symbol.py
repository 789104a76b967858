"""
Fourier symbol analysis of the time-changed Crank-Nicolson scheme

With Dirac data the discrete transform after N steps is the product

    U^N(s) = [1 (1 - xi)(1 - 2 xi) ... (1 - (N-1) xi)] / [(1 + xi)(1 + 2 xi) ... (1 + N xi)],
    xi = 2 lambda^2 sin^2(s h / 2),

and its error against exp(-s^2/2) splits into four wave number regimes bounded
by h^{-r}, the symbol zeros s_N and s_{m*}, and pi/h. This module evaluates the
product, the regime partition, the per-regime predictions and bounds, and the
Rannacher and cost-constrained comparisons.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from ..config import Config
from ..exceptions import QuadratureError, RegimeOrderingError
from ..models import SolutionField

logger = logging.getLogger(__name__)

# a factor 1 - m xi within this many ulps of m xi counts as an exact root
ZERO_ULPS = 4.0
_CHUNK = 1 << 20

LAMBDA_CRITICAL = 1.0 / math.sqrt(2.0)
N5_AT_ZERO = 3.0    # N^(5)(0) * sqrt(2 pi)
N7_AT_ZERO = -15.0  # N^(7)(0) * sqrt(2 pi)


class ComparisonScheme(str, Enum):
    TIMECHANGED = "timechanged"
    RANNACHER = "rannacher"


def xi_of(s, h: float, lam: float):
    """xi = 2 lambda^2 sin^2(s h / 2)"""
    return 2.0 * lam * lam * np.sin(np.asarray(s) * h / 2.0) ** 2


def _log_symbol(N: int, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """log|U^N|, parity of negative factors, and exact-zero mask for a 1-D xi array"""
    log_mag = np.zeros(xi.size)
    negatives = np.zeros(xi.size, dtype=np.int64)
    zero = np.zeros(xi.size, dtype=bool)
    chunk = max(1, _CHUNK // max(xi.size, 1))
    eps = np.finfo(float).eps

    with np.errstate(divide="ignore", invalid="ignore"):
        for start in range(1, N + 1, chunk):
            m = np.arange(start, min(start + chunk, N + 1), dtype=float)[:, None]
            mx = m * xi[None, :]
            log_mag -= np.log1p(mx).sum(axis=0)

            num = mx[m[:, 0] < N]
            if num.size:
                below = num < 1.0
                log_f = np.where(below, np.log1p(-num), np.log(num - 1.0))
                root = np.abs(1.0 - num) <= ZERO_ULPS * eps * num
                zero |= root.any(axis=0)
                log_mag += np.where(root, 0.0, log_f).sum(axis=0)
                negatives += (~below & ~root).sum(axis=0)
    return log_mag, negatives % 2, zero


def symbol_product(N: int, xi):
    """
    U^N at xi (scalar or array), computed as sign * exp(sum of log-magnitudes)

    Returns 0 where a numerator factor vanishes (xi = 1/m, m <= N-1).
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(xi_arr < 0):
        raise ValueError("xi must be non-negative")
    log_mag, odd, zero = _log_symbol(N, xi_arr.ravel())
    value = np.where(odd == 1, -1.0, 1.0) * np.exp(log_mag)
    value[zero] = 0.0
    value = value.reshape(xi_arr.shape)
    if np.ndim(xi) == 0:
        return float(value[0])
    return value


def exact_transform(s):
    """exp(-s^2/2), the transform of the exact solution at t = 1"""
    return np.exp(-np.square(s) / 2.0)


@dataclass(frozen=True)
class SymbolQuery:
    """Wave number s for an N-step run with spacing h and mesh ratio lambda"""

    s: float
    h: float
    lam: float
    N: int

    def __post_init__(self):
        if self.h <= 0 or self.lam <= 0 or self.N < 1:
            raise ValueError("h, lambda and N must be positive")
        if abs(self.s) > math.pi / self.h * (1.0 + 1e-12):
            raise ValueError(f"s={self.s} is outside the principal band |s| <= pi/h")

    @property
    def xi(self) -> float:
        return float(xi_of(self.s, self.h, self.lam))

    @classmethod
    def at_unit_time(cls, s: float, N: int, lam: float) -> "SymbolQuery":
        """T = 1 run, so h = 1/(N lambda)"""
        return cls(s=s, h=1.0 / (N * lam), lam=lam, N=N)


def transform_error(q: SymbolQuery) -> float:
    """E(s) = U^N(s) - exp(-s^2/2)"""
    return symbol_product(q.N, q.xi) - float(exact_transform(q.s))


def regime1_error_prediction(
    s: float,
    lam: float,
    h: float,
    scheme: ComparisonScheme = ComparisonScheme.TIMECHANGED,
) -> float:
    """Leading-order low wave number error exp(-s^2/2) * c(s, lambda) * h^2"""
    lam2 = lam * lam
    s4, s6 = s**4, s**6
    if scheme is ComparisonScheme.TIMECHANGED:
        coeff = s4 / 24.0 - lam2 * s6 / 48.0 + lam2 * s4 / 8.0
    else:
        coeff = s4 / 24.0 + lam2 * s4 / 8.0 - lam2 * s6 / 96.0
    return float(exact_transform(s)) * coeff * h * h


def m_star(lam: float) -> int:
    """Smallest m with 1/m <= 2 lambda^2 (first real zero of the symbol)"""
    target = 1.0 / (2.0 * lam * lam)
    return max(1, math.ceil(target - 1e-12 * target))


def symbol_zero(n: int, h: float, lam: float) -> float:
    """s_n with 2 lambda^2 sin^2(s_n h/2) = 1/n"""
    arg = 1.0 / (2.0 * lam * lam * n)
    if arg > 1.0 + 1e-12:
        raise ValueError(f"no symbol zero for n={n} at lambda={lam}")
    return 2.0 / h * math.asin(math.sqrt(min(arg, 1.0)))


@dataclass(frozen=True)
class RegimePartition:
    """Upper wave number of each regime for one (h, lambda, N)"""

    r: float
    h: float
    lam: float
    N: int
    s_I_max: float
    s_II_max: float
    s_III_max: float
    s_IV_max: float
    m_star: int

    def bands(self) -> List[Tuple[str, float, float, float, float]]:
        """(regime, s_min, s_max, xi_min, xi_max) rows"""
        edges = [0.0, self.s_I_max, self.s_II_max, self.s_III_max, self.s_IV_max]
        names = ["I", "II", "III", "IV"]
        rows = []
        for name, lo, hi in zip(names, edges[:-1], edges[1:]):
            rows.append((name, lo, hi, float(xi_of(lo, self.h, self.lam)), float(xi_of(hi, self.h, self.lam))))
        return rows

    def regime_of(self, s: float) -> str:
        s = abs(s)
        if s <= self.s_I_max:
            return "I"
        if s <= self.s_II_max:
            return "II"
        if s <= self.s_III_max:
            return "III"
        return "IV"


def regime_partition(h: float, lam: float, r: float = 0.3, N: Optional[int] = None) -> RegimePartition:
    """
    Regime boundaries h^{-r}, s_N, s_{m*}, pi/h

    N defaults to the unit-time step count 1/(h lambda). Raises
    RegimeOrderingError when h is too large for the boundaries to be ordered.
    """
    if not 0.0 < r < 1.0 / 3.0:
        raise ValueError(f"regime exponent r must lie in (0, 1/3), got {r}")
    if N is None:
        N = max(1, round(1.0 / (h * lam)))
    ms = m_star(lam)
    if N < ms:
        raise RegimeOrderingError(f"N={N} is below m*={ms}; regime III is empty")

    s_I = h ** (-r)
    s_N = symbol_zero(N, h, lam)
    s_m = symbol_zero(ms, h, lam)
    s_pi = math.pi / h
    edges = [s_I, s_N, s_m, s_pi]
    if not (0.0 < s_I <= s_N <= s_m <= s_pi * (1.0 + 1e-12)):
        raise RegimeOrderingError(
            f"regime boundaries out of order at h={h}, lambda={lam}: {edges}"
        )
    return RegimePartition(
        r=r, h=h, lam=lam, N=N,
        s_I_max=s_I, s_II_max=s_N, s_III_max=s_m, s_IV_max=s_pi, m_star=ms,
    )


def regime3_bound(N: int, m: int, lam: Optional[float] = None) -> float:
    """W_{N,m} = ((m+1)!)^2 (N-m-1)! / ((2m+2) (N+m)!), via log-gamma"""
    lo = m_star(lam) if lam is not None else 1
    if not lo <= m <= N - 1:
        raise ValueError(f"m={m} outside [{lo}, {N - 1}]")
    log_w = (
        2.0 * gammaln(m + 2)
        + gammaln(N - m)
        - math.log(2 * m + 2)
        - gammaln(N + m + 1)
    )
    return math.exp(log_w)


def regime4_exponent(xi: float, lam: Optional[float] = None) -> float:
    """Predicted h-exponent 1 + 2/xi of |U^N| at fixed xi in regime IV"""
    if lam is not None:
        lo, hi = 1.0 / m_star(lam), 2.0 * lam * lam
        if not lo * (1 - 1e-12) <= xi <= hi * (1 + 1e-12):
            raise ValueError(f"xi={xi} outside regime IV [{lo}, {hi}]")
    elif xi <= 0:
        raise ValueError("xi must be positive")
    return 1.0 + 2.0 / xi


def measured_regime4_exponent(xi: float, Ns: Iterable[int], lam: float = 1.0) -> float:
    """Least-squares slope of log|U^N(xi)| against log h, h = 1/(N lambda)"""
    Ns = list(Ns)
    log_h = np.log([1.0 / (N * lam) for N in Ns])
    log_u = np.log([abs(symbol_product(N, xi)) for N in Ns])
    slope, _ = np.polyfit(log_h, log_u, 1)
    return float(slope)


def theoretical_order(lam: float) -> float:
    """min(2, 1/lambda^2)"""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return min(2.0, 1.0 / (lam * lam))


def _breakpoints(N: int, h: float, lam: float, s_lo: float, s_hi: float) -> List[float]:
    ms = m_star(lam)
    pts = {s_lo, s_hi}
    for m in range(ms, N):
        s = symbol_zero(m, h, lam)
        if s_lo < s < s_hi:
            pts.add(s)
    return sorted(pts)


def band_error(
    x: float,
    N: int,
    h: float,
    lam: float,
    s_lo: float,
    s_hi: float,
    epsabs: Optional[float] = None,
    limit: Optional[int] = None,
) -> float:
    """
    (1/pi) * integral over [s_lo, s_hi] of E(s) cos(s x) ds

    Panels are split at every symbol zero inside the band; for x != 0 each
    panel uses QUADPACK's cosine weight.
    epsabs and limit default to Config.QUAD_EPSABS and Config.QUAD_LIMIT.
    """
    epsabs = Config.QUAD_EPSABS if epsabs is None else epsabs
    limit = Config.QUAD_LIMIT if limit is None else limit
    pts = _breakpoints(N, h, lam, s_lo, s_hi)
    panels = list(zip(pts[:-1], pts[1:]))

    def integrand(s: float) -> float:
        return symbol_product(N, float(xi_of(s, h, lam))) - math.exp(-s * s / 2.0)

    weight = {} if x == 0.0 else {"weight": "cos", "wvar": x}
    eps_panel = epsabs / max(len(panels), 1)
    total, total_err = 0.0, 0.0
    for a, b in panels:
        if b <= a:
            continue
        out = integrate.quad(
            integrand, a, b, epsabs=eps_panel, epsrel=1e-10, limit=limit,
            full_output=1, **weight,
        )
        val, err = out[0], out[1]
        # a fourth element is QUADPACK's failure message
        if len(out) > 3 and err > epsabs:
            raise QuadratureError(f"quad failed on [{a}, {b}] (abserr={err:.3g}): {out[3]}")
        total += val
        total_err += err
    if total_err > 10.0 * epsabs + 1e-10 * abs(total):
        logger.warning("band_error abserr %.3g above tolerance %.3g", total_err, epsabs)
    return total / math.pi


def inverse_transform_error(
    x: float,
    N: int,
    h: float,
    lam: float,
    epsabs: Optional[float] = None,
    limit: Optional[int] = None,
) -> float:
    """Node error E(x) recovered from E(s) over the principal band [0, pi/h]"""
    return band_error(x, N, h, lam, 0.0, math.pi / h, epsabs=epsabs, limit=limit)


def regime_band_errors(
    x: float,
    N: int,
    h: float,
    lam: float,
    r: float = Config.REGIME_EXPONENT,
    epsabs: Optional[float] = None,
    limit: Optional[int] = None,
) -> dict:
    """Contribution of each regime to the node error at x"""
    partition = regime_partition(h, lam, r, N)
    return {
        name: band_error(x, N, h, lam, lo, hi, epsabs=epsabs, limit=limit)
        for name, lo, hi, _, _ in partition.bands()
    }


def error_ratio_rannacher_tc(lam: float) -> float:
    """E_R / E_TC at x = 0 from the regime-I coefficients (lambda <= 1/sqrt 2)"""
    if lam <= 0 or lam > LAMBDA_CRITICAL * (1.0 + 1e-12):
        raise ValueError(
            f"lambda={lam}: ratio only meaningful for 0 < lambda <= 1/sqrt(2)"
        )
    lam2 = lam * lam
    base = N5_AT_ZERO * (1.0 / 24.0 + lam2 / 8.0)
    rannacher = base + N7_AT_ZERO * lam2 / 96.0
    timechanged = base + N7_AT_ZERO * lam2 / 48.0
    return rannacher / timechanged


@dataclass(frozen=True)
class CostComparison:
    """Errors at fixed cost C ~ c/(k h), normalised to c/C = 1"""

    lam: float
    e_r: float
    e_tc: float
    lambda_star_r: float
    lambda_star_tc: float


R_H2 = 1.0 / 8.0
R_K2 = 21.0 / 96.0
TC_K2 = 1.0 / 16.0  # 3/48


def cost_constrained_errors(lam: float) -> CostComparison:
    """
    E_R = 1/(8 lambda) + 21 lambda/96 and E_TC = 1/(8 lambda) + lambda/16

    The unconstrained time-change optimum sqrt(2) lies outside lambda <= 1/sqrt 2,
    so the reported optimum is 1/sqrt 2.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    e_r = R_H2 / lam + R_K2 * lam
    e_tc = R_H2 / lam + TC_K2 * lam
    star_r = math.sqrt(R_H2 / R_K2)
    star_tc = min(math.sqrt(R_H2 / TC_K2), LAMBDA_CRITICAL)
    return CostComparison(lam=lam, e_r=e_r, e_tc=e_tc, lambda_star_r=star_r, lambda_star_tc=star_tc)


def dft_of_field(field: SolutionField) -> Tuple[np.ndarray, np.ndarray]:
    """
    h * sum_j U_j exp(i s x_j) at the non-negative discrete frequencies of a periodic grid

    Node M duplicates node 0 and is skipped. Returns (s, real part of the transform).
    """
    grid = field.grid
    M, h = grid.M, grid.h
    u = field.values[:M]
    p = np.arange(M // 2 + 1)
    s = 2.0 * np.pi * p / (M * h)
    coeffs = M * np.fft.ifft(u)[: M // 2 + 1]
    transform = h * coeffs * np.exp(1j * s * grid.x_min)
    return s, transform.real


def symbol_on_grid(field: SolutionField, lam: float, N: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(s, xi, U^N(xi)) at the same frequencies as dft_of_field"""
    grid = field.grid
    M = grid.M
    p = np.arange(M // 2 + 1)
    s = 2.0 * np.pi * p / (M * grid.h)
    xi = 2.0 * lam * lam * np.sin(np.pi * p / M) ** 2
    return s, xi, symbol_product(N, xi)
