"""Scalar kernels: principal-branch Lambert W, fixed points and 1-D minimization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import DomainError, NonConvergence

INV_E = math.exp(-1.0)
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_EPS = 2.220446049250313e-16

# plain iterations attempted before fixed_point falls back to bisection
PLAIN_ITERATIONS = 20


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError(f"interval bounds must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise DomainError(f"interval needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class SolveSettings:
    abs_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")


DEFAULT_SETTINGS = SolveSettings()


def _branch_point_series(p: float) -> float:
    # W0 expanded in p = sqrt(2(e x + 1)) around x = -1/e
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * (769.0 / 17280.0)))))


def lambert_w0(x: float, settings: SolveSettings = DEFAULT_SETTINGS) -> float:
    """Principal branch of the Lambert W function for real ``x >= -1/e``.

    The initial guess comes from the branch-point series near ``-1/e``,
    ``log1p`` for moderate arguments and the asymptotic ``log x - log log x``
    otherwise; Halley's iteration then polishes it to machine precision.
    """
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"lambert_w0 needs a finite argument, got {x}")
    offset = x + INV_E
    if offset < -settings.abs_tol:
        raise DomainError(f"lambert_w0 is undefined below -1/e, got {x}")
    if offset <= 0.0:
        return -1.0
    if x == 0.0:
        return 0.0

    p = math.sqrt(2.0 * math.e * offset)
    if p < 1e-3:
        return _branch_point_series(p)
    if p < 0.5:
        w = _branch_point_series(p)
    elif x < 3.0:
        w = math.log1p(x)
    else:
        lx = math.log(x)
        w = lx - math.log(lx)

    last = math.inf
    for _ in range(settings.max_iter):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        # near -1/e rounding in f is amplified by 1/(w + 1); once steps stop
        # shrinking at that noise level the iterate is as good as it gets
        if abs(dw) >= last and abs(dw) < 1e-9:
            return w
        w -= dw
        if abs(dw) <= 4.0 * _EPS * (1.0 + abs(w)):
            return w
        last = abs(dw)
    raise NonConvergence(f"lambert_w0({x}) did not converge in {settings.max_iter} iterations")


def bisect(h: Callable[[float], float], lo: float, hi: float, settings: SolveSettings = DEFAULT_SETTINGS) -> float:
    """Root of ``h`` on ``[lo, hi]`` given a sign change; stops once ``|h| <= abs_tol``."""
    hlo, hhi = h(lo), h(hi)
    if hlo == 0.0:
        return lo
    if hhi == 0.0:
        return hi
    if (hlo > 0) == (hhi > 0):
        raise DomainError(f"no sign change of h on [{lo}, {hi}]")
    best, best_val = (lo, abs(hlo)) if abs(hlo) < abs(hhi) else (hi, abs(hhi))
    for _ in range(settings.max_iter):
        mid = 0.5 * (lo + hi)
        hmid = h(mid)
        if abs(hmid) < best_val:
            best, best_val = mid, abs(hmid)
        if best_val <= settings.abs_tol or mid in (lo, hi):
            break
        if (hmid > 0) == (hlo > 0):
            lo, hlo = mid, hmid
        else:
            hi = mid
    if best_val > settings.abs_tol:
        raise NonConvergence(f"bisection stalled with |h| = {best_val:.3g}")
    return best


def fixed_point(
    f: Callable[[float], float],
    x0: float,
    settings: SolveSettings = DEFAULT_SETTINGS,
    bracket: tuple[float, float] = (0.0, 1.0 - 1e-9),
) -> float:
    """Solve ``x = f(x)`` on ``[0, 1)`` starting from ``x0``.

    Plain substitution is tried first.  If it has not settled after
    ``PLAIN_ITERATIONS`` steps (slow contraction, ``|f'| -> 1``) the root of
    ``f(x) - x`` is bracketed on ``bracket`` and bisected.  For an increasing
    convex map started below its smallest root, both routes land on that root.
    """
    x = float(x0)
    for _ in range(min(PLAIN_ITERATIONS, settings.max_iter)):
        fx = f(x)
        if abs(fx - x) <= settings.abs_tol:
            return x
        x = fx
    if abs(f(x) - x) <= settings.abs_tol:
        return x
    try:
        return bisect(lambda t: f(t) - t, bracket[0], bracket[1], settings)
    except DomainError:
        pass
    for _ in range(settings.max_iter - PLAIN_ITERATIONS):
        fx = f(x)
        if abs(fx - x) <= settings.abs_tol:
            return x
        x = fx
    raise NonConvergence(f"fixed point not found within {settings.max_iter} iterations")


def minimize_1d(
    g: Callable[[float], float], box: Interval, settings: SolveSettings = DEFAULT_SETTINGS
) -> tuple[float, float]:
    """Golden-section search for a unimodal ``g`` on ``box``.

    Brackets shrink to ``1e-9 * box.width``.  The endpoints are compared
    against the interior candidate at the end, so a monotone ``g`` returns
    ``box.lo`` or ``box.hi`` exactly.
    """
    lo, hi = box.lo, box.hi
    tol = 1e-9 * box.width
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = g(x1), g(x2)
    it = 0
    while hi - lo > tol:
        if it >= settings.max_iter:
            raise NonConvergence("golden-section search exceeded max_iter")
        it += 1
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = g(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = g(x2)
    x_best, f_best = (x1, f1) if f1 <= f2 else (x2, f2)
    g_lo, g_hi = g(box.lo), g(box.hi)
    if g_lo <= f_best and g_lo <= g_hi:
        return box.lo, g_lo
    if g_hi <= f_best:
        return box.hi, g_hi
    return x_best, f_best
