"""AoII minimization by decomposition into a service-rate problem and a
power-allocation problem.

The service-rate part scans the scheduler rate ``mu0`` on a uniform grid and,
for each grid value, minimizes the blended AoI over ``(mu1, mu2)``.  With
``mu0`` frozen the objective is a sum of a ``mu1`` term and a ``mu2`` term, so
the inner problem is two independent golden-section searches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError
from .numerics import DEFAULT_SETTINGS, Interval, SolveSettings, minimize_1d
from .queueing import QueueParams, average_aoi, eta_dm1, unchecked_arrival_rates
from .semantic import FeasibilityReport, LogisticParams, NomaScenario, check_feasibility, similarity, sinr_vector

C5_CLIP = 1e-6
C7_GAP = 1e-9
DEFAULT_GRID_STEPS = 100


@dataclass(frozen=True)
class PolicySpace:
    mu0_box: Interval
    mu1_box: Interval
    mu2_box: Interval
    grid_steps: int = DEFAULT_GRID_STEPS

    def __post_init__(self):
        if self.grid_steps < 1:
            raise DomainError("grid_steps must be at least 1")
        if not self.mu1_box.hi > self.mu2_box.lo:
            raise DomainError("mu1 box must admit values above the mu2 box (C7)")

    def mu0_grid(self) -> list[float]:
        lo, hi, q = self.mu0_box.lo, self.mu0_box.hi, self.grid_steps
        step = (hi - lo) / q
        return [lo + k * step for k in range(q)] + [hi]


@dataclass(frozen=True)
class Policy:
    powers: tuple[float, ...]
    mu0: float
    mu1: float
    mu2: float


@dataclass(frozen=True)
class TracePoint:
    mu0: float
    mu1: float
    mu2: float
    objective: float  # inf when the grid point admits no stable policy


@dataclass(frozen=True)
class P1Result:
    mu0: float
    mu1: float
    mu2: float
    aoi_min: float
    best_index: int
    trace: tuple[TracePoint, ...]


@dataclass(frozen=True)
class P3Result:
    powers: tuple[float, ...]
    sinr: tuple[float, ...]
    similarities: tuple[float, ...]
    mean_similarity: float
    feasibility: FeasibilityReport

    @property
    def feasible(self) -> bool:
        return self.feasibility.feasible


@dataclass(frozen=True)
class SolveResult:
    policy: Policy
    aoi_min: float
    mean_similarity: float
    aoii_min: float
    similarities: tuple[float, ...]
    best_index: int
    trace: tuple[TracePoint, ...]


def _blended(qp: QueueParams, mu0: float, mu1: float, mu2: float) -> float:
    return average_aoi(qp.with_rates(mu0, mu1, mu2)).aoi_blended


def _stable_box(box: Interval, lam: float) -> Interval | None:
    lo = max(box.lo, lam * (1.0 + C5_CLIP)) if lam > 0 else box.lo
    if lo >= box.hi:
        return None
    return Interval(lo, box.hi)


def solve_inner(
    qp: QueueParams, mu0: float, space: PolicySpace, settings: SolveSettings = DEFAULT_SETTINGS
) -> TracePoint:
    """Best ``(mu1, mu2)`` for a frozen scheduler rate ``mu0``."""
    nan = math.nan
    if not qp.lambda0 / mu0 < 1.0 - 1e-9:
        return TracePoint(mu0, nan, nan, math.inf)
    probe = qp.with_rates(mu0=mu0)
    eta0 = eta_dm1(probe.rho0)
    # arrival rates at the servers do not depend on mu1, mu2
    lam1, lam2 = unchecked_arrival_rates(probe, eta0)
    box1 = _stable_box(space.mu1_box, lam1)
    if box1 is None:
        return TracePoint(mu0, nan, nan, math.inf)
    box2 = _stable_box(space.mu2_box, lam2)
    if box2 is None:
        return TracePoint(mu0, nan, nan, math.inf)
    mu2_ref = box2.hi

    def first(m1: float) -> float:
        return _blended(qp, mu0, m1, min(mu2_ref, m1 - C7_GAP))

    # C7 is enforced below by clipping mu2 under mu1; search mu1 only where
    # some stable mu2 still fits beneath it
    lo1 = max(box1.lo, box2.lo + 2 * C7_GAP)
    if lo1 >= box1.hi:
        return TracePoint(mu0, nan, nan, math.inf)
    mu1, _ = minimize_1d(first, Interval(lo1, box1.hi), settings)
    hi2 = min(box2.hi, mu1 - C7_GAP)
    mu2, value = minimize_1d(lambda m2: _blended(qp, mu0, mu1, m2), Interval(box2.lo, hi2), settings)
    return TracePoint(mu0, mu1, mu2, value)


def solve_p1(qp_template: QueueParams, space: PolicySpace, settings: SolveSettings = DEFAULT_SETTINGS) -> P1Result:
    """Exact linear search over the scheduler rate.

    Ties between grid points keep the smallest ``mu0``.
    """
    trace = tuple(solve_inner(qp_template, mu0, space, settings) for mu0 in space.mu0_grid())
    best = None
    for k, point in enumerate(trace):
        if math.isfinite(point.objective) and (best is None or point.objective < trace[best].objective):
            best = k
    if best is None:
        raise InfeasibleError("no scheduler rate on the grid admits a stable policy (C5)", subproblem="P1")
    p = trace[best]
    return P1Result(mu0=p.mu0, mu1=p.mu1, mu2=p.mu2, aoi_min=p.objective, best_index=best, trace=trace)


def solve_p3(scenario: NomaScenario, lp: LogisticParams, strict: bool = True) -> P3Result:
    """Every user transmits at ``p_max``; C1 and C2 are then verified.

    No search is performed.  With ``strict`` an infeasible outcome raises
    ``InfeasibleError`` naming the first violating user.
    """
    powers = tuple([scenario.p_max] * scenario.n_users)
    at_max = scenario.with_powers(powers)
    gammas = sinr_vector(at_max)
    xis = np.atleast_1d(similarity(gammas, lp))
    report = check_feasibility(at_max, lp)
    if strict and not report.feasible:
        k = report.first_violation
        check = report.per_user[k - 1]
        which = "C1 semantic rate" if not check.rate_ok else "C2 similarity"
        raise InfeasibleError(
            f"{which} violated by user {k} at p_max "
            f"(rate {check.rate:.6g} vs {scenario.s_th:.6g}, similarity {check.similarity:.6g} vs {scenario.xi_th:.6g})",
            subproblem="P3",
            user=k,
        )
    return P3Result(
        powers=powers,
        sinr=tuple(float(g) for g in gammas),
        similarities=tuple(float(x) for x in xis),
        mean_similarity=float(np.mean(xis)),
        feasibility=report,
    )


def compose(p1: P1Result, p3: P3Result) -> SolveResult:
    return SolveResult(
        policy=Policy(powers=p3.powers, mu0=p1.mu0, mu1=p1.mu1, mu2=p1.mu2),
        aoi_min=p1.aoi_min,
        mean_similarity=p3.mean_similarity,
        aoii_min=p1.aoi_min * (1.0 - p3.mean_similarity),
        similarities=p3.similarities,
        best_index=p1.best_index,
        trace=p1.trace,
    )


def solve_p0(
    scenario: NomaScenario,
    lp: LogisticParams,
    qp_template: QueueParams,
    space: PolicySpace,
    settings: SolveSettings = DEFAULT_SETTINGS,
) -> SolveResult:
    return compose(solve_p1(qp_template, space, settings), solve_p3(scenario, lp))


@dataclass(frozen=True)
class HessianReport:
    z1: float
    z2: float
    z3: float
    z4: float
    is_psd: bool

    @property
    def cross_ratio(self) -> float:
        """Largest mixed partial relative to the largest pure second partial."""
        return max(abs(self.z2), abs(self.z3)) / max(abs(self.z1), abs(self.z4))


def hessian_check(qp: QueueParams, mu0_fixed: float | None = None, rel_step: float = 1e-4) -> HessianReport:
    """Central-difference Hessian of the blended AoI in ``(mu1, mu2)`` at the
    rates held by ``qp``, with the scheduler rate frozen."""
    mu0 = qp.mu0 if mu0_fixed is None else mu0_fixed
    x, y = qp.mu1, qp.mu2
    hx, hy = rel_step * x, rel_step * y

    def f(m1: float, m2: float) -> float:
        return _blended(qp, mu0, m1, m2)

    f0 = f(x, y)
    z1 = (f(x + hx, y) - 2.0 * f0 + f(x - hx, y)) / (hx * hx)
    z4 = (f(x, y + hy) - 2.0 * f0 + f(x, y - hy)) / (hy * hy)

    def d_dx(m2: float) -> float:
        return (f(x + hx, m2) - f(x - hx, m2)) / (2.0 * hx)

    def d_dy(m1: float) -> float:
        return (f(m1, y + hy) - f(m1, y - hy)) / (2.0 * hy)

    z2 = (d_dx(y + hy) - d_dx(y - hy)) / (2.0 * hy)
    z3 = (d_dy(x + hx) - d_dy(x - hx)) / (2.0 * hx)
    sym = 0.5 * (z2 + z3)
    is_psd = z1 >= 0 and z4 >= 0 and z1 * z4 - sym * sym >= 0
    return HessianReport(z1=z1, z2=z2, z3=z3, z4=z4, is_psd=bool(is_psd))
