"""Monte-Carlo simulation of one update stream through the base-station network.

Packets are generated every ``1/lambda0`` seconds, spend a constant ``theta``
in transmission, queue FCFS at an exponential scheduler, are routed to one of
two FCFS exponential servers and depart.  Each stage draws from its own
random stream spawned from the configured seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import stats

from .errors import ConfigError, EmptyInput, UnstableSimulation
from .queueing import QueueParams

TRACE_HEADER = ("n", "alpha", "T", "w0", "h0", "category", "wi", "hi", "beta")
DEFAULT_BATCHES = 30


@dataclass(frozen=True)
class Routing:
    """How packets are split between server 1 (Category I) and server 2.

    ``bernoulli``: each packet independently goes to server 1 with probability
    ``a``.  ``similarity_threshold``: packet n comes from user ``n mod M`` and
    goes to server 1 iff that user's similarity is at least ``xi_hat``.
    """

    kind: str
    a: float | None = None
    xi_hat: float | None = None
    similarities: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "similarities", tuple(float(x) for x in self.similarities))
        if self.kind == "bernoulli":
            if self.a is None or not 0.0 <= self.a <= 1.0:
                raise ConfigError(f"bernoulli routing needs 0 <= a <= 1, got {self.a}")
        elif self.kind == "similarity_threshold":
            if self.xi_hat is None or not self.similarities:
                raise ConfigError("similarity_threshold routing needs xi_hat and per-user similarities")
            if any(not 0.0 <= x <= 1.0 for x in self.similarities):
                raise ConfigError("similarities must lie in [0, 1]")
        else:
            raise ConfigError(f"unknown routing kind {self.kind!r}")

    @classmethod
    def bernoulli(cls, a: float) -> "Routing":
        return cls("bernoulli", a=a)

    @classmethod
    def similarity_threshold(cls, xi_hat: float, similarities: Sequence[float]) -> "Routing":
        return cls("similarity_threshold", xi_hat=xi_hat, similarities=tuple(similarities))

    @property
    def category1_share(self) -> float:
        if self.kind == "bernoulli":
            return self.a
        return sum(x >= self.xi_hat for x in self.similarities) / len(self.similarities)

    def assign(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "bernoulli":
            return np.where(rng.random(n) < self.a, 1, 2).astype(np.int8)
        pattern = np.array([1 if x >= self.xi_hat else 2 for x in self.similarities], dtype=np.int8)
        return np.resize(pattern, n)


@dataclass(frozen=True)
class SimConfig:
    qp: QueueParams
    routing: Routing | None = None
    horizon_packets: int = 100_000
    warmup_packets: int | None = None
    rng_seed: int = 0
    batches: int = DEFAULT_BATCHES

    def __post_init__(self):
        if self.routing is None:
            object.__setattr__(self, "routing", Routing.bernoulli(self.qp.a))
        if self.warmup_packets is None:
            object.__setattr__(self, "warmup_packets", self.horizon_packets // 10)
        if not self.horizon_packets > self.warmup_packets >= 0:
            raise ConfigError("need horizon_packets > warmup_packets >= 0")
        if self.horizon_packets - self.warmup_packets < 2 * self.batches:
            raise ConfigError("too few post-warmup packets for batch means")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class PacketRecord:
    n: int
    generation_time: float
    transmission_time: float
    scheduler_wait: float
    scheduler_service: float
    category: int
    server_wait: float
    server_service: float
    departure_time: float


@dataclass(frozen=True, eq=False)
class PacketTrace:
    """Column-oriented per-packet times (post-warmup packets only)."""

    n: np.ndarray
    alpha: np.ndarray
    T: np.ndarray
    w0: np.ndarray
    h0: np.ndarray
    category: np.ndarray
    wi: np.ndarray
    hi: np.ndarray
    beta: np.ndarray

    def __len__(self) -> int:
        return len(self.n)

    def records(self) -> Iterator[PacketRecord]:
        for row in zip(
            self.n.tolist(),
            self.alpha.tolist(),
            self.T.tolist(),
            self.w0.tolist(),
            self.h0.tolist(),
            self.category.tolist(),
            self.wi.tolist(),
            self.hi.tolist(),
            self.beta.tolist(),
        ):
            yield PacketRecord(*row)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_HEADER)
            fmt = "{:.9f}".format
            for r in self.records():
                writer.writerow(
                    (
                        r.n,
                        fmt(r.generation_time),
                        fmt(r.transmission_time),
                        fmt(r.scheduler_wait),
                        fmt(r.scheduler_service),
                        r.category,
                        fmt(r.server_wait),
                        fmt(r.server_service),
                        fmt(r.departure_time),
                    )
                )


@dataclass(frozen=True, eq=False)
class SimReport:
    packets: int
    mean_transmission: float
    mean_scheduler_wait: float
    mean_scheduler_delay: float
    mean_server1_delay: float
    mean_server2_delay: float
    mean_total_delay: float
    p_zero_wait: float
    fraction_cat1: float
    fraction_cat2: float
    aoi_cat1: float
    aoi_cat2: float
    aoi_sawtooth: float
    aoi_q_decomposition: float
    aoi_q_per_packet: float
    stale_fraction: float
    half_widths: dict = field(default_factory=dict)
    trace: PacketTrace | None = None

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k not in ("trace", "half_widths")}
        out["half_widths"] = dict(self.half_widths)
        return out


def check_stable(config: SimConfig) -> None:
    qp = config.qp
    share = config.routing.category1_share
    loads = {
        "scheduler": qp.lambda0 / qp.mu0,
        "server 1": share * qp.lambda0 / qp.mu1,
        "server 2": (1.0 - share) * qp.lambda0 / qp.mu2,
    }
    for where, rho in loads.items():
        if rho >= 1.0:
            raise UnstableSimulation(f"unstable simulation: {where} load {rho:.4g} >= 1 (C5)")


def simulate_trace(config: SimConfig) -> PacketTrace:
    """Event-ordered pass over every packet, warmup included."""
    check_stable(config)
    qp = config.qp
    n = config.horizon_packets
    seeds = np.random.SeedSequence(config.rng_seed).spawn(4)
    sched_rng, srv1_rng, srv2_rng, route_rng = (np.random.Generator(np.random.PCG64(s)) for s in seeds)

    h0 = sched_rng.exponential(1.0 / qp.mu0, n)
    srv_draws = (srv1_rng.exponential(1.0 / qp.mu1, n), srv2_rng.exponential(1.0 / qp.mu2, n))
    category = config.routing.assign(n, route_rng)
    hi = np.where(category == 1, srv_draws[0], srv_draws[1])
    gap = 1.0 / qp.lambda0
    alpha = np.arange(n) * gap
    theta = qp.theta

    w0 = np.empty(n)
    wi = np.empty(n)
    beta = np.empty(n)
    h0_l, hi_l, cat_l, alpha_l = h0.tolist(), hi.tolist(), category.tolist(), alpha.tolist()
    sched_free = -math.inf
    server_free = [-math.inf, -math.inf, -math.inf]
    for k in range(n):
        arrive = alpha_l[k] + theta
        start = arrive if arrive >= sched_free else sched_free
        w0[k] = start - arrive
        sched_free = start + h0_l[k]
        c = cat_l[k]
        free = server_free[c]
        start_i = sched_free if sched_free >= free else free
        wi[k] = start_i - sched_free
        done = start_i + hi_l[k]
        server_free[c] = done
        beta[k] = done

    return PacketTrace(
        n=np.arange(n),
        alpha=alpha,
        T=np.full(n, theta),
        w0=w0,
        h0=h0,
        category=category,
        wi=wi,
        hi=hi,
        beta=beta,
    )


def _slice(trace: PacketTrace, start: int) -> PacketTrace:
    return PacketTrace(**{name: getattr(trace, name)[start:] for name in TRACE_HEADER})


def _as_arrays(records) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(records, PacketTrace):
        alpha, beta = records.alpha, records.beta
    else:
        records = list(records)
        alpha = np.array([r.generation_time for r in records], dtype=float)
        beta = np.array([r.departure_time for r in records], dtype=float)
    if alpha.size == 0:
        raise EmptyInput("no packet records")
    return alpha, beta


def delivered_updates(alpha: np.ndarray, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Departures that actually refresh the monitor, in departure order.

    A packet overtaken by a fresher one carries stale information and does not
    reset the age, so it is dropped.
    """
    order = np.lexsort((alpha, beta))
    a, b = alpha[order], beta[order]
    prev_best = np.concatenate([[-np.inf], np.maximum.accumulate(a)[:-1]])
    keep = a > prev_best
    return a[keep], b[keep]


def _sawtooth_pieces(alpha: np.ndarray, beta: np.ndarray, horizon: float | None):
    a, b = delivered_updates(alpha, beta)
    end = b[-1] if horizon is None else horizon
    if end < b[0]:
        raise EmptyInput("horizon ends before the first departure")
    nxt = np.concatenate([b[1:], [end]])
    nxt = np.minimum(nxt, end)
    keep = b <= end
    a, b, nxt = a[keep], b[keep], nxt[keep]
    area = 0.5 * ((nxt - a) ** 2 - (b - a) ** 2)
    return area, nxt - b


def aoi_sawtooth(records, horizon: float | None = None) -> float:
    """Time-average of ``t - alpha(t)`` over ``[first departure, horizon]``.

    ``horizon`` defaults to the last departure.
    """
    alpha, beta = _as_arrays(records)
    area, span = _sawtooth_pieces(alpha, beta, horizon)
    total = span.sum()
    if total <= 0:
        raise EmptyInput("observation window has zero length")
    return float(area.sum() / total)


def _q_terms(alpha: np.ndarray, beta: np.ndarray, delivered_only: bool):
    if delivered_only:
        a, b = delivered_updates(alpha, beta)
    else:
        order = np.argsort(alpha, kind="stable")
        a, b = alpha[order], beta[order]
    if a.size < 2:
        raise EmptyInput("need at least two packets for inter-generation gaps")
    G = np.diff(a)
    D = (b - a)[1:]
    return G * D + 0.5 * G * G, G


def aoi_q_decomposition(records, delivered_only: bool = True) -> float:
    """Average AoI as ``(E[G D] + E[G^2] / 2) / E[G]``.

    ``G`` is the gap between successive generation times and ``D`` the system
    delay.  With ``delivered_only`` the sequence is the refreshing updates in
    departure order, which tiles the age curve exactly even when packets
    overtake each other; otherwise every packet in generation order is used.
    """
    alpha, beta = _as_arrays(records)
    Q, G = _q_terms(alpha, beta, delivered_only)
    return float(Q.mean() / G.mean())


def batch_ratio_half_width(num: np.ndarray, den: np.ndarray, batches: int = DEFAULT_BATCHES, level: float = 0.95) -> float:
    """Batch-means confidence half-width of ``sum(num) / sum(den)``."""
    if num.size < 2 * batches:
        return math.nan
    edges = np.linspace(0, num.size, batches + 1).astype(int)
    ratios = np.array([num[i:j].sum() / den[i:j].sum() for i, j in zip(edges[:-1], edges[1:])])
    t = stats.t.ppf(0.5 + level / 2.0, batches - 1)
    return float(t * ratios.std(ddof=1) / math.sqrt(batches))


def batch_mean_half_width(x: np.ndarray, batches: int = DEFAULT_BATCHES, level: float = 0.95) -> float:
    return batch_ratio_half_width(x, np.ones_like(x, dtype=float), batches, level)


def run(config: SimConfig) -> SimReport:
    full = simulate_trace(config)
    trace = _slice(full, config.warmup_packets)
    B = config.batches
    d0 = trace.w0 + trace.h0
    di = trace.wi + trace.hi
    total = trace.beta - trace.alpha
    cat1 = trace.category == 1
    cat2 = ~cat1

    saw_area, saw_span = _sawtooth_pieces(trace.alpha, trace.beta, None)
    q_num, q_den = _q_terms(trace.alpha, trace.beta, delivered_only=True)
    pp_num, pp_den = _q_terms(trace.alpha, trace.beta, delivered_only=False)
    delivered, _ = delivered_updates(trace.alpha, trace.beta)

    # per-category AoI: Q-decomposition restricted to the category's packets,
    # with G the generation gap preceding each packet
    G_all = np.diff(trace.alpha)
    D_all = total[1:]
    Q_all = G_all * D_all + 0.5 * G_all * G_all

    def _cat_aoi(mask: np.ndarray) -> float:
        m = mask[1:]
        return float(Q_all[m].sum() / G_all[m].sum()) if m.any() else math.nan

    def _mean(x: np.ndarray) -> float:
        return float(x.mean()) if x.size else math.nan

    half = {
        "mean_scheduler_delay": batch_mean_half_width(d0, B),
        "mean_server1_delay": batch_mean_half_width(di[cat1], B),
        "mean_server2_delay": batch_mean_half_width(di[cat2], B),
        "mean_total_delay": batch_mean_half_width(total, B),
        "aoi_sawtooth": batch_ratio_half_width(saw_area, saw_span, B),
        "aoi_q_decomposition": batch_ratio_half_width(q_num, q_den, B),
        "aoi_q_per_packet": batch_ratio_half_width(pp_num, pp_den, B),
    }
    return SimReport(
        packets=len(trace),
        mean_transmission=_mean(trace.T),
        mean_scheduler_wait=_mean(trace.w0),
        mean_scheduler_delay=_mean(d0),
        mean_server1_delay=_mean(di[cat1]),
        mean_server2_delay=_mean(di[cat2]),
        mean_total_delay=_mean(total),
        p_zero_wait=float(np.mean(trace.w0 == 0.0)),
        fraction_cat1=float(cat1.mean()),
        fraction_cat2=float(cat2.mean()),
        aoi_cat1=_cat_aoi(cat1),
        aoi_cat2=_cat_aoi(cat2),
        aoi_sawtooth=float(saw_area.sum() / saw_span.sum()),
        aoi_q_decomposition=float(q_num.mean() / q_den.mean()),
        aoi_q_per_packet=float(pp_num.mean() / pp_den.mean()),
        stale_fraction=1.0 - delivered.size / len(trace),
        half_widths=half,
        trace=trace,
    )


@dataclass(frozen=True)
class EmpiricalAoii:
    per_packet: float
    product_form: float
    half_width: float


def empirical_aoii(report: SimReport, similarities: Sequence[float]) -> EmpiricalAoii:
    """AoII estimated packet by packet and in product form.

    Packet n is attributed to user ``n mod M``; each delivered update's age
    polygon is weighted by that user's mismatch ``1 - xi``.  The product form
    multiplies the delivered-update AoI by the mean mismatch.
    """
    if report.trace is None:
        raise EmptyInput("report carries no packet trace")
    xi = np.asarray(similarities, dtype=float)
    if xi.size == 0 or np.any((xi < 0) | (xi > 1)):
        raise ValueError("similarities must be a nonempty list in [0, 1]")
    trace = report.trace
    order = np.lexsort((trace.alpha, trace.beta))
    a, n_sorted = trace.alpha[order], trace.n[order]
    b = trace.beta[order]
    prev_best = np.concatenate([[-np.inf], np.maximum.accumulate(a)[:-1]])
    keep = a > prev_best
    a, b, n_sorted = a[keep], b[keep], n_sorted[keep]
    G = np.diff(a)
    D = (b - a)[1:]
    weight = 1.0 - xi[n_sorted[1:] % xi.size]
    num = weight * (G * D + 0.5 * G * G)
    per_packet = float(num.sum() / G.sum())
    product = float(report.aoi_q_decomposition * np.mean(1.0 - xi))
    return EmpiricalAoii(per_packet=per_packet, product_form=product, half_width=batch_ratio_half_width(num, G))
