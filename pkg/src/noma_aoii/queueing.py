"""Stationary analysis of the scheduler plus two-parallel-server network.

The scheduler sees deterministic arrivals every ``1/lambda0`` seconds and
serves exponentially (D/M/1).  Each server is treated as D/M/1 as well, with
an arrival rate given either by the scheduler's departure-interval model
(``arrival_mode="departure"``) or by throughput conservation
(``arrival_mode="flow"``).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StabilityError
from .numerics import DEFAULT_SETTINGS, SolveSettings, fixed_point, lambert_w0

STABILITY_MARGIN = 1e-9
ARRIVAL_MODES = ("departure", "flow")
DEFAULT_TRUNCATION = 60

_ETA_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class QueueParams:
    lambda0: float  # generation rate, 1/(N T)
    mu0: float
    mu1: float
    mu2: float
    a: float  # share of Category-I packets
    theta: float = 0.0  # constant transmission time, s
    arrival_mode: str = "departure"

    def __post_init__(self):
        for name in ("lambda0", "mu0", "mu1", "mu2"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be a positive finite rate, got {value}")
        if not 0.0 <= self.a <= 1.0:
            raise DomainError(f"category-I share a must lie in [0, 1], got {self.a}")
        if not self.theta >= 0:
            raise DomainError(f"transmission time theta must be nonnegative, got {self.theta}")
        if self.arrival_mode not in ARRIVAL_MODES:
            raise DomainError(f"arrival_mode must be one of {ARRIVAL_MODES}, got {self.arrival_mode!r}")

    @property
    def b(self) -> float:
        return 1.0 - self.a

    @property
    def rho0(self) -> float:
        return self.lambda0 / self.mu0

    def with_rates(self, mu0=None, mu1=None, mu2=None) -> "QueueParams":
        return dataclasses.replace(
            self,
            mu0=self.mu0 if mu0 is None else mu0,
            mu1=self.mu1 if mu1 is None else mu1,
            mu2=self.mu2 if mu2 is None else mu2,
        )


@dataclass(frozen=True)
class StationarySolution:
    eta0: float
    eta1: float
    eta2: float
    lambda1: float
    lambda2: float
    rho0: float
    rho1: float
    rho2: float
    d0: float
    d1: float
    d2: float


@dataclass(frozen=True)
class AoiReport:
    aoi_cat1: float
    aoi_cat2: float
    aoi_blended: float


@dataclass(frozen=True)
class AoiiReport:
    mean_one_minus_xi: float
    aoii: float


def _check_utilization(rho: float, where: str) -> None:
    if not rho < 1.0 - STABILITY_MARGIN:
        raise StabilityError(f"C5 violated at {where}: utilization {rho:.6g} is not below 1")


def eta_dm1(rho: float, settings: SolveSettings = DEFAULT_SETTINGS) -> float:
    """Root parameter of a D/M/1 queue at utilization ``rho``.

    Smallest root of ``eta = exp(-(1 - eta)/rho)``, in closed form
    ``-rho W0(-(1/rho) exp(-1/rho))``.  The result is checked against the
    fixed-point equation and refined by ``fixed_point`` if the residual is
    not below 1e-10.
    """
    if not 0.0 < rho < 1.0:
        raise DomainError(f"D/M/1 root needs 0 < rho < 1, got {rho}")
    inv = 1.0 / rho
    eta = -rho * lambert_w0(-inv * math.exp(-inv), settings)
    eta = min(max(eta, 0.0), 1.0)
    if abs(eta - math.exp(-(1.0 - eta) * inv)) > _ETA_RESIDUAL_TOL:
        eta = fixed_point(lambda x: math.exp(-(1.0 - x) * inv), min(eta, 1.0 - 1e-6), settings)
    return eta


def dm1_delay(mu: float, eta: float) -> float:
    """Mean sojourn time: service ``1/mu`` plus mean wait ``eta / (mu (1 - eta))``."""
    return 1.0 / mu + eta / (mu * (1.0 - eta))


def scheduler_delay(qp: QueueParams) -> float:
    _check_utilization(qp.rho0, "scheduler")
    return dm1_delay(qp.mu0, eta_dm1(qp.rho0))


def unchecked_arrival_rates(qp: QueueParams, eta0: float) -> tuple[float, float]:
    if qp.arrival_mode == "departure":
        if not 0.0 <= eta0 < 1.0:
            raise DomainError(f"eta0 must lie in [0, 1), got {eta0}")
        base = qp.mu0 * (1.0 - eta0)
    else:
        base = qp.lambda0
    return qp.a * base, qp.b * base


def server_arrival_rates(qp: QueueParams, eta0: float) -> tuple[float, float]:
    """Arrival rates at the two servers.

    In departure mode each server inherits the scheduler's departure rate
    ``mu0 (1 - eta0)`` thinned by its category share; in flow mode it gets its
    share of ``lambda0``.  A server that receives no traffic is not checked.
    """
    lam1, lam2 = unchecked_arrival_rates(qp, eta0)
    if lam1 > 0:
        _check_utilization(lam1 / qp.mu1, "server 1")
    if lam2 > 0:
        _check_utilization(lam2 / qp.mu2, "server 2")
    return lam1, lam2


def server_delay(mu_i: float, lambda_i: float) -> float:
    if lambda_i == 0:
        return 1.0 / mu_i
    rho = lambda_i / mu_i
    _check_utilization(rho, "server")
    return dm1_delay(mu_i, eta_dm1(rho))


def solve_stationary(qp: QueueParams) -> StationarySolution:
    _check_utilization(qp.rho0, "scheduler")
    eta0 = eta_dm1(qp.rho0)
    lam1, lam2 = server_arrival_rates(qp, eta0)
    rho1, rho2 = lam1 / qp.mu1, lam2 / qp.mu2
    eta1 = eta_dm1(rho1) if lam1 > 0 else 0.0
    eta2 = eta_dm1(rho2) if lam2 > 0 else 0.0
    return StationarySolution(
        eta0=eta0,
        eta1=eta1,
        eta2=eta2,
        lambda1=lam1,
        lambda2=lam2,
        rho0=qp.rho0,
        rho1=rho1,
        rho2=rho2,
        d0=dm1_delay(qp.mu0, eta0),
        d1=dm1_delay(qp.mu1, eta1),
        d2=dm1_delay(qp.mu2, eta2),
    )


def aoi_from_solution(qp: QueueParams, sol: StationarySolution) -> AoiReport:
    base = 1.0 / (2.0 * qp.lambda0) + qp.theta + sol.d0
    cat1 = base + sol.d1
    cat2 = base + sol.d2
    return AoiReport(aoi_cat1=cat1, aoi_cat2=cat2, aoi_blended=qp.a * cat1 + qp.b * cat2)


def average_aoi(qp: QueueParams) -> AoiReport:
    """Per-category and blended average AoI.

    Category i: half a generation interval, plus transmission, scheduler and
    server-i sojourn times; the blend weights the categories by ``a`` and
    ``1 - a``.
    """
    return aoi_from_solution(qp, solve_stationary(qp))


def average_aoii(aoi: AoiReport, similarities) -> AoiiReport:
    xi = np.asarray(similarities, dtype=float)
    if xi.size == 0:
        raise DomainError("need at least one similarity")
    if np.any((xi < 0) | (xi > 1)):
        raise DomainError("similarities must lie in [0, 1]")
    mismatch = float(np.mean(1.0 - xi))
    return AoiiReport(mean_one_minus_xi=mismatch, aoii=aoi.aoi_blended * mismatch)


def dm1_arrival_probabilities(rho: float, count: int) -> np.ndarray:
    """Probabilities of k = 0..count-1 exponential completions within one
    deterministic inter-arrival time (Poisson with mean ``1/rho``)."""
    m = 1.0 / rho
    k = np.arange(count)
    log_pmf = -m + k * math.log(m) - np.array([math.lgamma(i + 1.0) for i in k])
    return np.exp(log_pmf)


def dm1_transition_matrix(rho: float, truncation: int = DEFAULT_TRUNCATION) -> np.ndarray:
    """Embedded chain of the number in system seen by arrivals, truncated.

    Row i has ``theta_{i+1-j}`` in column ``j = 1..i+1`` and the complement in
    column 0.  The last row's overflow mass goes to the last column.
    """
    if truncation < 2:
        raise DomainError(f"truncation must be at least 2, got {truncation}")
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    theta = dm1_arrival_probabilities(rho, truncation + 1)
    n = truncation
    P = np.zeros((n, n))
    for i in range(n):
        for j in range(1, min(i + 1, n - 1) + 1):
            P[i, j] = theta[i + 1 - j]
        if i == n - 1:
            P[i, n - 1] += theta[0]
        P[i, 0] = 1.0 - theta[: i + 1].sum()
    return P


def stationary_distribution(P: np.ndarray, tol: float = 1e-15, max_iter: int = 100_000) -> np.ndarray:
    """Left Perron vector of a stochastic matrix by power iteration."""
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < tol:
            return nxt
        pi = nxt
    return pi


def geometric_distribution(eta: float, n: int) -> np.ndarray:
    return (1.0 - eta) * eta ** np.arange(n)


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def waiting_time_cdf(eta: float, mu: float, t):
    """Waiting-time CDF of a G/M/1 queue: atom ``1 - eta`` at zero plus an
    exponential tail with rate ``mu (1 - eta)``."""
    t_arr = np.asarray(t, dtype=float)
    out = np.where(t_arr < 0, 0.0, 1.0 - eta * np.exp(-mu * (1.0 - eta) * np.maximum(t_arr, 0.0)))
    return float(out) if out.ndim == 0 else out
