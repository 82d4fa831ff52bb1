"""YAML configuration: one schema shared by every subcommand.

Values are kept exactly as written in the file (powers and noise in dBm) so
that load -> dump -> load is lossless; domain objects are built on demand.
"""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .errors import AoiiError, ConfigError, DomainError
from .numerics import Interval
from .optimizer import PolicySpace
from .queueing import QueueParams
from .semantic import LogisticParams, NomaScenario, UserChannel, dbm_to_watts
from .simulator import Routing, SimConfig

ROUTING_KINDS = ("bernoulli", "similarity_threshold")


@dataclass(frozen=True)
class UserSpec:
    gain_sq: float
    power: float  # dBm


@dataclass(frozen=True)
class ScenarioSpec:
    users: tuple[UserSpec, ...]
    noise_power: float  # dBm
    bandwidth: float
    info_per_word: float
    symbols_per_word: int
    max_symbols: int
    p_max: float  # dBm
    s_th: float
    xi_th: float
    xi_hat: float


@dataclass(frozen=True)
class SimSettings:
    routing: str = "bernoulli"
    horizon_packets: int = 1_000_000
    warmup_packets: int | None = None
    rng_seed: int = 0


@dataclass(frozen=True)
class SystemConfig:
    scenario: ScenarioSpec
    logistic: LogisticParams
    queue: QueueParams
    policy_space: PolicySpace
    simulation: SimSettings

    def noma_scenario(self) -> NomaScenario:
        s = self.scenario
        return NomaScenario(
            users=tuple(UserChannel(u.gain_sq, dbm_to_watts(u.power)) for u in s.users),
            noise_power=dbm_to_watts(s.noise_power),
            bandwidth=s.bandwidth,
            info_per_word=s.info_per_word,
            symbols_per_word=s.symbols_per_word,
            max_symbols=s.max_symbols,
            p_max=dbm_to_watts(s.p_max),
            s_th=s.s_th,
            xi_th=s.xi_th,
            xi_hat=s.xi_hat,
        )

    def sim_config(self, seed=None, packets=None, similarities=None, arrival_mode=None) -> SimConfig:
        sim = self.simulation
        qp = self.queue if arrival_mode is None else dataclasses.replace(self.queue, arrival_mode=arrival_mode)
        if sim.routing == "bernoulli":
            routing = Routing.bernoulli(qp.a)
        else:
            if similarities is None:
                raise ConfigError("similarity_threshold routing needs per-user similarities")
            routing = Routing.similarity_threshold(self.scenario.xi_hat, similarities)
        horizon = sim.horizon_packets if packets is None else packets
        warmup = sim.warmup_packets if packets is None else None
        return SimConfig(
            qp=qp,
            routing=routing,
            horizon_packets=horizon,
            warmup_packets=warmup,
            rng_seed=sim.rng_seed if seed is None else seed,
        )


def _section(data: Any, name: str, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    missing = [k for k in required if k not in data]
    if missing:
        raise ConfigError(f"section '{name}' is missing {', '.join(missing)}")
    unknown = sorted(set(data) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"section '{name}' has unknown keys {', '.join(unknown)}")
    return data


def _num(data: dict, key: str, where: str, kind=float):
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _interval(value: Any, where: str) -> Interval:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(f"{where} must be a [lo, hi] pair")
    try:
        return Interval(float(value[0]), float(value[1]))
    except (TypeError, ValueError, DomainError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: Any) -> SystemConfig:
    top = _section(data, "<root>", ("scenario", "logistic", "queue", "policy_space"), ("simulation",))
    try:
        sc = _section(
            top["scenario"],
            "scenario",
            ("users", "noise_power", "bandwidth", "info_per_word", "symbols_per_word", "p_max", "s_th", "xi_th"),
            ("max_symbols", "xi_hat"),
        )
        users_raw = sc["users"]
        if not isinstance(users_raw, list) or not users_raw:
            raise ConfigError("scenario.users must be a nonempty list")
        users = []
        for k, u in enumerate(users_raw):
            where = f"scenario.users[{k}]"
            _section(u, where, ("gain_sq", "power"))
            users.append(UserSpec(_num(u, "gain_sq", where), _num(u, "power", where)))
        symbols = _num(sc, "symbols_per_word", "scenario", int)
        xi_th = _num(sc, "xi_th", "scenario")
        scenario = ScenarioSpec(
            users=tuple(users),
            noise_power=_num(sc, "noise_power", "scenario"),
            bandwidth=_num(sc, "bandwidth", "scenario"),
            info_per_word=_num(sc, "info_per_word", "scenario"),
            symbols_per_word=symbols,
            max_symbols=_num(sc, "max_symbols", "scenario", int) if "max_symbols" in sc else symbols,
            p_max=_num(sc, "p_max", "scenario"),
            s_th=_num(sc, "s_th", "scenario"),
            xi_th=xi_th,
            xi_hat=_num(sc, "xi_hat", "scenario") if "xi_hat" in sc else xi_th,
        )

        lg = _section(top["logistic"], "logistic", ("a1", "a2", "c1", "c2"))
        logistic = LogisticParams(*(_num(lg, k, "logistic") for k in ("a1", "a2", "c1", "c2")))

        q = _section(
            top["queue"], "queue", ("lambda0", "mu0", "mu1", "mu2", "a"), ("theta", "arrival_mode")
        )
        mode = q.get("arrival_mode", "departure")
        if not isinstance(mode, str):
            raise ConfigError("queue.arrival_mode must be a string")
        queue = QueueParams(
            lambda0=_num(q, "lambda0", "queue"),
            mu0=_num(q, "mu0", "queue"),
            mu1=_num(q, "mu1", "queue"),
            mu2=_num(q, "mu2", "queue"),
            a=_num(q, "a", "queue"),
            theta=_num(q, "theta", "queue") if "theta" in q else 0.0,
            arrival_mode=mode,
        )

        ps = _section(top["policy_space"], "policy_space", ("mu0_box", "mu1_box", "mu2_box"), ("grid_steps",))
        space = PolicySpace(
            mu0_box=_interval(ps["mu0_box"], "policy_space.mu0_box"),
            mu1_box=_interval(ps["mu1_box"], "policy_space.mu1_box"),
            mu2_box=_interval(ps["mu2_box"], "policy_space.mu2_box"),
            grid_steps=_num(ps, "grid_steps", "policy_space", int) if "grid_steps" in ps else 100,
        )

        sm = _section(
            top.get("simulation", {}),
            "simulation",
            (),
            ("routing", "horizon_packets", "warmup_packets", "rng_seed"),
        )
        routing = sm.get("routing", "bernoulli")
        if routing not in ROUTING_KINDS:
            raise ConfigError(f"simulation.routing must be one of {ROUTING_KINDS}, got {routing!r}")
        sim = SimSettings(
            routing=routing,
            horizon_packets=_num(sm, "horizon_packets", "simulation", int) if "horizon_packets" in sm else 1_000_000,
            warmup_packets=_num(sm, "warmup_packets", "simulation", int)
            if sm.get("warmup_packets") is not None
            else None,
            rng_seed=_num(sm, "rng_seed", "simulation", int) if "rng_seed" in sm else 0,
        )
        cfg = SystemConfig(scenario, logistic, queue, space, sim)
        cfg.noma_scenario()  # validates ordering, C3, C4 and thresholds
        cfg.sim_config(similarities=[1.0] * len(users))
    except ConfigError:
        raise
    except (AoiiError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def config_to_dict(cfg: SystemConfig) -> dict:
    s = cfg.scenario
    q = cfg.queue
    ps = cfg.policy_space
    sim = cfg.simulation
    out = {
        "scenario": {
            "users": [{"gain_sq": u.gain_sq, "power": u.power} for u in s.users],
            "noise_power": s.noise_power,
            "bandwidth": s.bandwidth,
            "info_per_word": s.info_per_word,
            "symbols_per_word": s.symbols_per_word,
            "max_symbols": s.max_symbols,
            "p_max": s.p_max,
            "s_th": s.s_th,
            "xi_th": s.xi_th,
            "xi_hat": s.xi_hat,
        },
        "logistic": dataclasses.asdict(cfg.logistic),
        "queue": {
            "lambda0": q.lambda0,
            "theta": q.theta,
            "mu0": q.mu0,
            "mu1": q.mu1,
            "mu2": q.mu2,
            "a": q.a,
            "arrival_mode": q.arrival_mode,
        },
        "policy_space": {
            "mu0_box": [ps.mu0_box.lo, ps.mu0_box.hi],
            "mu1_box": [ps.mu1_box.lo, ps.mu1_box.hi],
            "mu2_box": [ps.mu2_box.lo, ps.mu2_box.hi],
            "grid_steps": ps.grid_steps,
        },
        "simulation": {
            "routing": sim.routing,
            "horizon_packets": sim.horizon_packets,
            "warmup_packets": sim.warmup_packets,
            "rng_seed": sim.rng_seed,
        },
    }
    return out


def read_yaml(path) -> Any:
    try:
        with open(path) as fh:
            return yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path} is not valid YAML: {exc}") from None


def load_config(path) -> SystemConfig:
    return config_from_dict(read_yaml(path))


def dump_config(cfg: SystemConfig, path=None) -> str:
    text = yaml.safe_dump(config_to_dict(cfg), sort_keys=False)
    if path is not None:
        Path(path).write_text(text)
    return text


def set_path(data: dict, path: str, value: Any) -> dict:
    """Return a deep copy of ``data`` with the dotted ``path`` set to ``value``.

    A ``*`` component applies the rest of the path to every list element;
    integer components index lists (0-based).
    """
    out = copy.deepcopy(data)
    _assign(out, path.split("."), value, path)
    return out


def _assign(node: Any, parts: list[str], value: Any, full: str) -> None:
    head, rest = parts[0], parts[1:]
    if isinstance(node, list):
        if head == "*":
            targets = range(len(node))
        else:
            try:
                idx = int(head)
            except ValueError:
                raise ConfigError(f"path {full!r}: expected a list index at {head!r}") from None
            if not 0 <= idx < len(node):
                raise ConfigError(f"path {full!r}: index {idx} out of range")
            targets = [idx]
        for i in targets:
            if rest:
                _assign(node[i], rest, value, full)
            else:
                node[i] = value
        return
    if not isinstance(node, dict) or head not in node:
        raise ConfigError(f"path {full!r} does not name an existing config field")
    if rest:
        _assign(node[head], rest, value, full)
    else:
        if isinstance(node[head], (dict, list)):
            raise ConfigError(f"path {full!r} names a section, not a value")
        node[head] = value
