"""Uplink NOMA SINR under perfect SIC and the logistic semantic-similarity model."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DomainError


def dbm_to_watts(dbm):
    watts = 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)
    return float(watts) if watts.ndim == 0 else watts


def watts_to_dbm(watts):
    dbm = 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0
    return float(dbm) if dbm.ndim == 0 else dbm


@dataclass(frozen=True)
class UserChannel:
    gain_sq: float
    power: float  # watts

    def __post_init__(self):
        if not self.gain_sq > 0:
            raise DomainError(f"channel power gain must be positive, got {self.gain_sq}")
        if not self.power > 0:
            raise DomainError(f"transmit power must be positive, got {self.power}")


@dataclass(frozen=True)
class LogisticParams:
    """Coefficients of the generalized logistic similarity curve.

    ``a1``/``a2`` are the lower/upper asymptotes, ``c1`` the growth rate per
    unit SINR and ``c2`` shifts the midpoint to ``gamma = -c2 / c1``.
    """

    a1: float
    a2: float
    c1: float
    c2: float

    def __post_init__(self):
        if not 0.0 <= self.a1 < self.a2 <= 1.0:
            raise DomainError(f"need 0 <= a1 < a2 <= 1, got a1={self.a1}, a2={self.a2}")
        if not self.c1 > 0:
            raise DomainError(f"growth rate c1 must be positive, got {self.c1}")


# Illustrative values only: no fitted coefficients are published for the
# similarity curve, so callers should supply their own fit.
PLACEHOLDER_LOGISTIC = LogisticParams(a1=0.2, a2=0.95, c1=0.5, c2=-1.0)


@dataclass(frozen=True)
class NomaScenario:
    """Static uplink scenario.  Users are listed in SIC decoding order."""

    users: tuple[UserChannel, ...]
    noise_power: float  # watts
    bandwidth: float  # Hz
    info_per_word: float  # I / L, suts per word
    symbols_per_word: int
    max_symbols: int
    p_max: float  # watts
    s_th: float  # suts/s
    xi_th: float
    xi_hat: float

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if not self.users:
            raise DomainError("scenario needs at least one user")
        gains = [u.gain_sq for u in self.users]
        if any(g1 < g2 for g1, g2 in zip(gains, gains[1:])):
            raise DomainError("users must be sorted by nonincreasing channel gain")
        if not (self.noise_power > 0 and self.bandwidth > 0 and self.info_per_word > 0):
            raise DomainError("noise power, bandwidth and I/L must be positive")
        if not 1 <= self.symbols_per_word <= self.max_symbols:
            raise DomainError(
                f"symbols per word must lie in 1..{self.max_symbols} (C3), got {self.symbols_per_word}"
            )
        if not self.p_max > 0:
            raise DomainError("p_max must be positive")
        # tolerate dBm round-off when a power is configured equal to p_max
        limit = self.p_max * (1.0 + 1e-12)
        for k, u in enumerate(self.users, start=1):
            if u.power > limit:
                raise DomainError(f"user {k} power {u.power} W exceeds p_max {self.p_max} W (C4)")
        if not 0.0 < self.xi_th <= self.xi_hat <= 1.0:
            raise DomainError(f"need 0 < xi_th <= xi_hat <= 1, got {self.xi_th}, {self.xi_hat}")
        if self.s_th < 0:
            raise DomainError("s_th must be nonnegative")

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def powers(self) -> np.ndarray:
        return np.array([u.power for u in self.users])

    @property
    def gains(self) -> np.ndarray:
        return np.array([u.gain_sq for u in self.users])

    def with_powers(self, powers) -> "NomaScenario":
        powers = list(powers)
        if len(powers) != self.n_users:
            raise DomainError(f"expected {self.n_users} powers, got {len(powers)}")
        users = tuple(UserChannel(u.gain_sq, float(p)) for u, p in zip(self.users, powers))
        return dataclasses.replace(self, users=users)


def sinr_vector(scenario: NomaScenario) -> np.ndarray:
    """SINR of every user when the base station decodes users 1..M in order.

    User k sees as interference every user decoded after it.
    """
    received = scenario.powers * scenario.gains
    # interference for user k is the sum of received powers of users k+1..M
    tail = np.concatenate([np.cumsum(received[::-1])[::-1][1:], [0.0]])
    return received / (scenario.noise_power + tail)


def similarity(gamma, lp: LogisticParams):
    z = lp.c1 * np.asarray(gamma, dtype=float) + lp.c2
    out = lp.a1 + (lp.a2 - lp.a1) * expit(z)
    return float(out) if np.ndim(out) == 0 else out


def similarity_derivative(gamma, lp: LogisticParams):
    """d(similarity)/d(gamma); the logistic slope ``c1 (a2-a1) s(z) s(-z)``."""
    z = lp.c1 * np.asarray(gamma, dtype=float) + lp.c2
    out = lp.c1 * (lp.a2 - lp.a1) * expit(z) * expit(-z)
    return float(out) if np.ndim(out) == 0 else out


def semantic_rate(gamma, scenario: NomaScenario, lp: LogisticParams):
    """Semantic rate in suts/s: ``W (I/L) / rho * similarity``."""
    scale = scenario.bandwidth * scenario.info_per_word / scenario.symbols_per_word
    return scale * similarity(gamma, lp)


def rate_from_similarity(xi, scenario: NomaScenario):
    return scenario.bandwidth * scenario.info_per_word / scenario.symbols_per_word * xi


@dataclass(frozen=True)
class UserCheck:
    user: int  # 1-based
    sinr: float
    similarity: float
    rate: float
    rate_ok: bool
    similarity_ok: bool

    @property
    def ok(self) -> bool:
        return self.rate_ok and self.similarity_ok


@dataclass(frozen=True)
class FeasibilityReport:
    min_rate: float
    min_similarity: float
    rate_ok: bool
    similarity_ok: bool
    per_user: tuple[UserCheck, ...]

    @property
    def feasible(self) -> bool:
        return self.rate_ok and self.similarity_ok

    @property
    def first_violation(self):
        """1-based index of the first user breaking C1 or C2, else None."""
        for check in self.per_user:
            if not check.ok:
                return check.user
        return None


def check_feasibility(scenario: NomaScenario, lp: LogisticParams) -> FeasibilityReport:
    """Evaluate the semantic-rate (C1) and similarity (C2) constraints at the
    scenario's current powers.  Infeasibility is reported, never raised."""
    gammas = sinr_vector(scenario)
    xis = np.atleast_1d(similarity(gammas, lp))
    rates = np.atleast_1d(semantic_rate(gammas, scenario, lp))
    checks = tuple(
        UserCheck(
            user=k + 1,
            sinr=float(g),
            similarity=float(x),
            rate=float(r),
            rate_ok=bool(r >= scenario.s_th),
            similarity_ok=bool(x >= scenario.xi_th),
        )
        for k, (g, x, r) in enumerate(zip(gammas, xis, rates))
    )
    min_rate = float(rates.min())
    min_xi = float(xis.min())
    return FeasibilityReport(
        min_rate=min_rate,
        min_similarity=min_xi,
        rate_ok=min_rate >= scenario.s_th,
        similarity_ok=min_xi >= scenario.xi_th,
        per_user=checks,
    )


def linear_amplitudes(lo: float, hi: float, n: int) -> list[float]:
    """Channel amplitudes linearly spaced on ``[lo, hi]``, strongest first."""
    if n == 1:
        return [hi]
    return [hi - k * (hi - lo) / (n - 1) for k in range(n)]
