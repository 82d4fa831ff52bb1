"""Glue from a SystemConfig to analytic, simulated and optimized results."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import AoiiError, ConfigError, DomainError
from .optimizer import P1Result, P3Result, SolveResult, compose, solve_p1, solve_p3
from .queueing import AoiReport, aoi_from_solution, average_aoii, solve_stationary
from .semantic import check_feasibility, semantic_rate, similarity, sinr_vector
from .simulator import SimReport, run


@dataclass(frozen=True)
class MetricsReport:
    """The metric set shared by analytic and simulated evaluations."""

    source: str
    d0: float
    d1: float
    d2: float
    aoi_cat1: float
    aoi_cat2: float
    aoi_blended: float
    similarities: tuple[float, ...]
    aoii: float

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("d0", "d1", "d2", "aoi_cat1", "aoi_cat2", "aoi_blended")}
        for k, xi in enumerate(self.similarities, start=1):
            out[f"xi_{k}"] = xi
        out["aoii"] = self.aoii
        return out


def current_similarities(cfg: SystemConfig) -> tuple[float, ...]:
    gammas = sinr_vector(cfg.noma_scenario())
    return tuple(float(x) for x in np.atleast_1d(similarity(gammas, cfg.logistic)))


def analytic_metrics(cfg: SystemConfig, arrival_mode: str | None = None) -> tuple[MetricsReport, dict]:
    """Closed-form evaluation at the configured powers and service rates.

    Returns the shared MetricsReport and a flat dict with the stationary
    solution (roots, arrival rates, utilizations) added.
    """
    qp = cfg.queue if arrival_mode is None else dataclasses.replace(cfg.queue, arrival_mode=arrival_mode)
    sol = solve_stationary(qp)
    aoi = aoi_from_solution(qp, sol)
    xis = current_similarities(cfg)
    report = MetricsReport(
        source="analytic",
        d0=sol.d0,
        d1=sol.d1,
        d2=sol.d2,
        aoi_cat1=aoi.aoi_cat1,
        aoi_cat2=aoi.aoi_cat2,
        aoi_blended=aoi.aoi_blended,
        similarities=xis,
        aoii=average_aoii(aoi, xis).aoii,
    )
    flat = {"arrival_mode": qp.arrival_mode}
    flat.update({k: getattr(sol, k) for k in ("eta0", "eta1", "eta2", "lambda1", "lambda2", "rho0", "rho1", "rho2")})
    flat.update(report.to_dict())
    return report, flat


def simulated_metrics(sim: SimReport, similarities) -> MetricsReport:
    xis = tuple(float(x) for x in similarities)
    aoi = AoiReport(sim.aoi_cat1, sim.aoi_cat2, sim.aoi_sawtooth)
    return MetricsReport(
        source="simulated",
        d0=sim.mean_scheduler_delay,
        d1=sim.mean_server1_delay,
        d2=sim.mean_server2_delay,
        aoi_cat1=sim.aoi_cat1,
        aoi_cat2=sim.aoi_cat2,
        aoi_blended=sim.aoi_sawtooth,
        similarities=xis,
        aoii=average_aoii(aoi, xis).aoii,
    )


def simulate(cfg: SystemConfig, seed=None, packets=None) -> tuple[SimReport, MetricsReport]:
    """Run the simulator on ``cfg``.

    The routing's Category-I share must equal ``queue.a``, otherwise the
    analytic columns of the comparison would describe a different split.
    """
    xis = current_similarities(cfg)
    sim_cfg = cfg.sim_config(seed=seed, packets=packets, similarities=xis)
    share = sim_cfg.routing.category1_share
    if abs(share - cfg.queue.a) > 1e-9:
        raise ConfigError(f"routing sends a share {share:.6g} to server 1 but queue.a is {cfg.queue.a:.6g}")
    sim = run(sim_cfg)
    return sim, simulated_metrics(sim, xis)


COMPARED = ("d0", "d1", "d2", "aoi_cat1", "aoi_cat2", "aoi_blended", "aoii")


def comparison_table(cfg: SystemConfig, simulated: MetricsReport) -> list[dict]:
    """One row per metric: both analytic arrival modes against the simulation.

    ``rel_err`` is measured against the flow-conservation prediction, the one
    whose arrival rates the simulator obeys.  A mode that is unstable for this
    configuration shows NaN.
    """
    analytic = {}
    for mode in ("departure", "flow"):
        try:
            analytic[mode] = analytic_metrics(cfg, mode)[0].to_dict()
        except AoiiError:
            analytic[mode] = {}
    sim = simulated.to_dict()
    rows = []
    for metric in COMPARED:
        flow = analytic["flow"].get(metric, math.nan)
        value = sim[metric]
        rel = (value - flow) / flow if flow and math.isfinite(flow) else math.nan
        rows.append(
            {
                "metric": metric,
                "analytic_departure_mode": analytic["departure"].get(metric, math.nan),
                "analytic_flow_mode": flow,
                "simulated": value,
                "rel_err": rel,
            }
        )
    return rows


def optimize(cfg: SystemConfig) -> SolveResult:
    return compose(solve_p1(cfg.queue, cfg.policy_space), solve_p3(cfg.noma_scenario(), cfg.logistic))


def solve_result_to_dict(result: SolveResult) -> dict:
    p = result.policy
    return {
        "mu0": p.mu0,
        "mu1": p.mu1,
        "mu2": p.mu2,
        "powers": list(p.powers),
        "aoi_min": result.aoi_min,
        "mean_similarity": result.mean_similarity,
        "aoii_min": result.aoii_min,
        "similarities": list(result.similarities),
        "best_index": result.best_index,
        "trace": [
            {
                "kappa": k,
                "mu0": t.mu0,
                "mu1": t.mu1,
                "mu2": t.mu2,
                "objective": t.objective,
                "best": k == result.best_index,
            }
            for k, t in enumerate(result.trace)
        ],
    }


# ---------------------------------------------------------------------------
# metric registry for sweeps

QUEUE_METRICS = ("eta0", "eta1", "eta2", "lambda1", "lambda2", "rho0", "rho1", "rho2", "d0", "d1", "d2",
                 "aoi_cat1", "aoi_cat2", "aoi_blended")
SEMANTIC_METRICS = ("mean_similarity", "min_similarity", "mean_rate", "min_rate", "feasible")
PER_USER_PREFIXES = ("sinr_", "xi_", "rate_")
P1_METRICS = ("aoi_min", "mu0_opt", "mu1_opt", "mu2_opt")
P3_METRICS = ("p3_mean_similarity",)
COMPOSED_METRICS = ("aoii", "aoii_min")


def known_metric(name: str, n_users: int | None = None) -> bool:
    if name in QUEUE_METRICS + SEMANTIC_METRICS + P1_METRICS + P3_METRICS + COMPOSED_METRICS:
        return True
    for prefix in PER_USER_PREFIXES:
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            k = int(name[len(prefix):])
            return k >= 1 and (n_users is None or k <= n_users)
    return False


def evaluate(cfg: SystemConfig, metrics) -> dict[str, tuple[float, str]]:
    """Compute the requested metrics; a failing group yields ``(nan, reason)``."""
    cache: dict[str, object] = {}

    def group(key, fn):
        if key not in cache:
            try:
                cache[key] = fn()
            except (AoiiError, DomainError) as exc:
                cache[key] = exc
        return cache[key]

    def queue():
        sol = solve_stationary(cfg.queue)
        return sol, aoi_from_solution(cfg.queue, sol)

    def semantic():
        scenario = cfg.noma_scenario()
        gammas = sinr_vector(scenario)
        xis = np.atleast_1d(similarity(gammas, cfg.logistic))
        rates = np.atleast_1d(semantic_rate(gammas, scenario, cfg.logistic))
        return gammas, xis, rates, check_feasibility(scenario, cfg.logistic)

    out = {}
    for name in metrics:
        if name in QUEUE_METRICS:
            res = group("queue", queue)
            if isinstance(res, Exception):
                out[name] = (math.nan, _reason(res))
                continue
            sol, aoi = res
            value = getattr(aoi, name) if name.startswith("aoi") else getattr(sol, name)
        elif name in SEMANTIC_METRICS or name.startswith(PER_USER_PREFIXES):
            gammas, xis, rates, report = group("semantic", semantic)
            if name == "mean_similarity":
                value = float(np.mean(xis))
            elif name == "min_similarity":
                value = report.min_similarity
            elif name == "mean_rate":
                value = float(np.mean(rates))
            elif name == "min_rate":
                value = report.min_rate
            elif name == "feasible":
                value = 1.0 if report.feasible else 0.0
            else:
                prefix, idx = name.rsplit("_", 1)
                arr = {"sinr": gammas, "xi": xis, "rate": rates}[prefix]
                value = float(arr[int(idx) - 1])
        elif name == "aoii":
            res = group("queue", queue)
            if isinstance(res, Exception):
                out[name] = (math.nan, _reason(res))
                continue
            xis = group("semantic", semantic)[1]
            value = average_aoii(res[1], xis).aoii
        elif name in P1_METRICS or name == "aoii_min":
            p1 = group("p1", lambda: solve_p1(cfg.queue, cfg.policy_space))
            if isinstance(p1, Exception):
                out[name] = (math.nan, _reason(p1))
                continue
            assert isinstance(p1, P1Result)
            if name == "aoii_min":
                p3 = group("p3", lambda: solve_p3(cfg.noma_scenario(), cfg.logistic))
                if isinstance(p3, Exception):
                    out[name] = (math.nan, _reason(p3))
                    continue
                value = compose(p1, p3).aoii_min
            else:
                value = {"aoi_min": p1.aoi_min, "mu0_opt": p1.mu0, "mu1_opt": p1.mu1, "mu2_opt": p1.mu2}[name]
        elif name in P3_METRICS:
            p3 = group("p3", lambda: solve_p3(cfg.noma_scenario(), cfg.logistic))
            if isinstance(p3, Exception):
                out[name] = (math.nan, _reason(p3))
                continue
            assert isinstance(p3, P3Result)
            value = p3.mean_similarity
        else:
            raise DomainError(f"unknown metric {name!r}")
        out[name] = (float(value), "")
    return out


def _reason(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"
