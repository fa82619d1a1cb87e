"""Deterministic discrete-event swarm simulator.

Agents fly piecewise-linear trajectories and broadcast advertisements per
their behavior; every observer receives every packet (unless a loss knob is
turned on), measures its power through a log-distance channel with seeded
log-normal shadowing, verifies it, and maintains a roster that is published
every 0.1 s of logical time.

Determinism rules, which the whole metrics story depends on:

* the clock is an integer tick counter (``t = n * tick_dt``); nothing reads
  wall time;
* iteration order is always sorted by id, never by insertion order;
* every random draw comes from a counter-based (Philox) substream keyed by
  ``(seed, namespace, ids...)``, so adding or removing an agent never shifts
  the noise another (observer, agent) pair sees;
* positions live on the quantization grid: the fix an honest agent transmits
  is also the position the channel uses, so a noise-free honest residual is
  exactly zero.

A run produces an :class:`EventLog` with per-kind record lists, totally
ordered by (time, kind rank, ids).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .packet import (
    AdvertisementPacket,
    FlightRecord,
    GpsFixQ,
    VerificationKey,
    derive_key,
    quantize_fix,
)
from .radio import ObserverPose, PathLossModel, expected_rssi, geodesic_distance
from .roster import (
    AlarmPolicy,
    AuthorizedRegistry,
    DroneStatus,
    Observation,
    Roster,
    RosterSnapshot,
    verify_observation,
)

PUBLISH_PERIOD = 0.1  # s of logical time between roster publications

# substream namespaces; keys never collide across uses of the same seed
_NS_NOISE = 0
_NS_LOSS = 1
_NS_BEHAVIOR = 2

_REL_EPS = 1e-6  # tolerance when checking that one period divides another


class ConfigError(ValueError):
    """A scenario configuration is invalid; names the offending field."""

    def __init__(self, field_name: str, message: str) -> None:
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


class Behavior(Enum):
    HONEST = "honest"
    NO_KEY = "nokey"
    RANDOM_KEY = "randomkey"
    REPLAY = "replay"
    SPOOF = "spoof"


@dataclass(frozen=True, slots=True)
class Waypoint:
    time: float
    lat: float
    lon: float
    alt: float


@dataclass(frozen=True, slots=True)
class Trajectory:
    """Piecewise-linear path through (time, lat, lon, alt) waypoints.

    Positions clamp to the first/last waypoint outside the time span.
    """

    waypoints: tuple[Waypoint, ...]

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ConfigError("waypoints", "at least one waypoint required")
        times = [w.time for w in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("waypoints", "timestamps must be strictly increasing")

    def interpolate(self, t: float) -> tuple[float, float, float]:
        """Raw (lat, lon, alt) at time t, before quantization."""
        pts = self.waypoints
        if t <= pts[0].time:
            w = pts[0]
            return w.lat, w.lon, w.alt
        if t >= pts[-1].time:
            w = pts[-1]
            return w.lat, w.lon, w.alt
        for a, b in zip(pts, pts[1:]):
            if t <= b.time:
                frac = (t - a.time) / (b.time - a.time)
                return (
                    a.lat + frac * (b.lat - a.lat),
                    a.lon + frac * (b.lon - a.lon),
                    a.alt + frac * (b.alt - a.alt),
                )
        raise AssertionError("unreachable")

    def position_at(self, t: float) -> GpsFixQ:
        return quantize_fix(*self.interpolate(t))


@dataclass(frozen=True, slots=True)
class AgentSpec:
    """One drone in the scenario.

    ``source_id``/``capture_delay`` apply to REPLAY agents (rebroadcast the
    source's captured packets verbatim, from the replayer's own true
    position).  ``offset_*`` apply to SPOOF agents: an insider that derives a
    valid key over a falsified position, which only the power check can
    catch -- include it in the registry for the scenario to be meaningful.
    """

    drone_id: int
    trajectory: Trajectory
    behavior: Behavior = Behavior.HONEST
    advertise_interval: float = 0.1
    source_id: int | None = None
    capture_delay: float = 0.0
    offset_lat: float = 0.0
    offset_lon: float = 0.0
    offset_alt: float = 0.0


@dataclass(frozen=True, slots=True)
class ObserverSpec:
    observer_id: int
    pose: ObserverPose


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    duration: float
    registry: AuthorizedRegistry
    agents: tuple[AgentSpec, ...]
    observers: tuple[ObserverSpec, ...]
    pathloss: PathLossModel = PathLossModel()
    policy: AlarmPolicy = AlarmPolicy()
    name: str = "scenario"
    tick_dt: float = 0.01
    seed: int = 0
    loss_prob: float = 0.0

    def validate(self) -> None:
        if self.duration <= 0:
            raise ConfigError("sim.duration", f"must be > 0, got {self.duration}")
        if self.tick_dt <= 0:
            raise ConfigError("sim.tick_dt", f"must be > 0, got {self.tick_dt}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("sim.seed", "must fit an unsigned 64-bit integer")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ConfigError("sim.loss_prob", f"must be in [0, 1], got {self.loss_prob}")
        _ticks_per("sim.tick_dt", PUBLISH_PERIOD, self.tick_dt)
        if not self.observers:
            raise ConfigError("observers", "at least one observer required")
        seen_obs: set[int] = set()
        for obs in self.observers:
            if obs.observer_id < 0 or obs.observer_id >= 2**32:
                raise ConfigError("observer", f"id {obs.observer_id} out of range")
            if obs.observer_id in seen_obs:
                raise ConfigError("observer", f"duplicate observer id {obs.observer_id}")
            seen_obs.add(obs.observer_id)
        if not self.agents:
            raise ConfigError("agents", "at least one agent required")
        ids = {a.drone_id for a in self.agents}
        if len(ids) != len(self.agents):
            raise ConfigError("agent", "duplicate agent drone_id")
        for agent in self.agents:
            where = f"agent {agent.drone_id}"
            if agent.advertise_interval <= 0:
                raise ConfigError(f"{where}.advertise_interval", "must be > 0")
            _ticks_per(f"{where}.advertise_interval", agent.advertise_interval, self.tick_dt)
            if agent.behavior is Behavior.HONEST and agent.drone_id not in self.registry:
                raise ConfigError(f"{where}.behavior", "honest agent missing from registry ids")
            if agent.behavior is Behavior.REPLAY:
                if agent.source_id is None:
                    raise ConfigError(f"{where}.source_id", "replay behavior requires a source")
                if agent.source_id not in ids:
                    raise ConfigError(
                        f"{where}.source_id", f"source agent {agent.source_id} does not exist"
                    )
                if agent.source_id == agent.drone_id:
                    raise ConfigError(f"{where}.source_id", "replay source must be another agent")
                if agent.capture_delay < 0:
                    raise ConfigError(f"{where}.capture_delay", "must be >= 0")
            elif agent.source_id is not None:
                raise ConfigError(f"{where}.source_id", "only valid for replay behavior")

    def intruder_agents(self) -> tuple[AgentSpec, ...]:
        """Agents that are not honest registry members."""
        return tuple(
            a
            for a in self.agents
            if a.behavior is not Behavior.HONEST or a.drone_id not in self.registry
        )


def _ticks_per(field_name: str, period: float, tick_dt: float) -> int:
    """Number of ticks in `period`, requiring an integer multiple of tick_dt."""
    ratio = period / tick_dt
    n = round(ratio)
    if n < 1 or abs(ratio - n) > _REL_EPS * max(1.0, abs(ratio)):
        raise ConfigError(field_name, f"{period} is not a multiple of tick_dt {tick_dt}")
    return n


# --- event records -----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class TxEvent:
    time: float
    agent_id: int       # who physically transmitted
    drone_id: int       # id claimed in the packet (differs for replay)
    seq: int
    claimed_fix: GpsFixQ
    true_fix: GpsFixQ
    key: int


@dataclass(frozen=True, slots=True)
class RxEvent:
    time: float
    observer_id: int
    agent_id: int
    drone_id: int
    seq: int
    rssi: float


@dataclass(frozen=True, slots=True)
class VerifyEvent:
    time: float
    observer_id: int
    agent_id: int
    drone_id: int
    seq: int
    known_id: bool
    key_ok: bool
    rssi_ok: bool
    residual: float
    passed: bool
    status: DroneStatus


@dataclass(frozen=True, slots=True)
class AlarmEvent:
    """First transition of a drone id to Unauthorized at one observer."""

    time: float
    observer_id: int
    drone_id: int


@dataclass(frozen=True, slots=True)
class SnapshotEvent:
    time: float
    observer_id: int
    snapshot: RosterSnapshot


_KIND_RANK = {TxEvent: 0, RxEvent: 1, VerifyEvent: 2, AlarmEvent: 3}


@dataclass
class EventLog:
    """Complete, deterministic record of one run."""

    config: ScenarioConfig
    intruder_ids: frozenset[int]
    claimed_ids: dict[int, int]  # agent id -> id it transmits under
    tx: list[TxEvent] = field(default_factory=list)
    rx: list[RxEvent] = field(default_factory=list)
    verifications: list[VerifyEvent] = field(default_factory=list)
    alarms: list[AlarmEvent] = field(default_factory=list)
    snapshots: list[SnapshotEvent] = field(default_factory=list)

    def all_events(self) -> list[TxEvent | RxEvent | VerifyEvent | AlarmEvent]:
        """tx/rx/verify/alarm records merged into one total order."""
        merged = [*self.tx, *self.rx, *self.verifications, *self.alarms]
        merged.sort(
            key=lambda e: (
                e.time,
                _KIND_RANK[type(e)],
                e.drone_id,
                getattr(e, "observer_id", -1),
                getattr(e, "seq", -1),
            )
        )
        return merged


# --- channel -----------------------------------------------------------------

def _substream(seed: int, namespace: int, *ids: int) -> np.random.Generator:
    """Counter-based generator keyed by ids, independent of creation order."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(namespace, *ids))
    return np.random.Generator(np.random.Philox(seq))


def sample_rssi(true_distance: float, model: PathLossModel, rng: np.random.Generator) -> float:
    """Received power: path-loss prediction plus one shadowing draw.

    A normal variate is consumed even when sigma is zero so a stream stays
    aligned packet-for-packet regardless of the noise setting.
    """
    return expected_rssi(true_distance, model) + model.shadow_sigma * float(rng.standard_normal())


# --- the run loop --------------------------------------------------------------

def run(config: ScenarioConfig) -> EventLog:
    """Execute a scenario; returns the complete event log.

    Stage order within one tick: staleness sweep, transmissions, receptions
    and verification, then (on 0.1 s boundaries after t=0) publication.
    Ticks cover t = 0 .. duration inclusive, so a T-second run publishes
    exactly floor(T / 0.1) snapshots.
    """
    config.validate()
    model = config.pathloss
    registry = config.registry
    dt = config.tick_dt

    n_ticks = int(math.floor(config.duration / dt + _REL_EPS * max(1.0, config.duration / dt)))
    pub_every = _ticks_per("sim.tick_dt", PUBLISH_PERIOD, dt)

    agents = sorted(config.agents, key=lambda a: a.drone_id)
    observers = sorted(config.observers, key=lambda o: o.observer_id)
    adv_every = {
        a.drone_id: _ticks_per(f"agent {a.drone_id}.advertise_interval", a.advertise_interval, dt)
        for a in agents
    }

    claimed_ids = {
        a.drone_id: (a.source_id if a.behavior is Behavior.REPLAY else a.drone_id) for a in agents
    }
    intruders = frozenset(a.drone_id for a in config.intruder_agents())
    log = EventLog(config=config, intruder_ids=intruders, claimed_ids=claimed_ids)

    rosters = {o.observer_id: Roster(config.policy) for o in observers}
    alarmed: set[tuple[int, int]] = set()
    seq_counters = {a.drone_id: 0 for a in agents}
    history: dict[int, list[tuple[float, AdvertisementPacket]]] = {a.drone_id: [] for a in agents}

    behavior_rng = {
        a.drone_id: _substream(config.seed, _NS_BEHAVIOR, a.drone_id)
        for a in agents
        if a.behavior is Behavior.RANDOM_KEY
    }
    noise_rng = {
        (o.observer_id, a.drone_id): _substream(config.seed, _NS_NOISE, o.observer_id, a.drone_id)
        for o in observers
        for a in agents
    }
    loss_rng = {
        (o.observer_id, a.drone_id): _substream(config.seed, _NS_LOSS, o.observer_id, a.drone_id)
        for o in observers
        for a in agents
    }

    for n in range(n_ticks + 1):
        t = n * dt

        for observer in observers:
            rosters[observer.observer_id].tick(t)

        transmissions: list[tuple[AgentSpec, AdvertisementPacket, GpsFixQ]] = []
        for agent in agents:
            if n % adv_every[agent.drone_id] != 0:
                continue
            emitted = _emit(agent, t, registry, seq_counters, history, behavior_rng)
            if emitted is None:
                continue
            packet, true_fix = emitted
            record = packet.record
            log.tx.append(
                TxEvent(
                    time=t,
                    agent_id=agent.drone_id,
                    drone_id=record.drone_id,
                    seq=record.seq,
                    claimed_fix=record.fix,
                    true_fix=true_fix,
                    key=packet.key.value,
                )
            )
            transmissions.append((agent, packet, true_fix))

        for observer in observers:
            roster = rosters[observer.observer_id]
            for agent, packet, true_fix in transmissions:
                pair = (observer.observer_id, agent.drone_id)
                # noise is drawn before the loss decision so the stream stays
                # aligned packet-for-packet whatever the loss setting
                distance = geodesic_distance(true_fix, observer.pose.fix)
                rssi = sample_rssi(distance, model, noise_rng[pair])
                if config.loss_prob > 0 and loss_rng[pair].uniform() < config.loss_prob:
                    continue
                observation = Observation(packet, rssi, t, observer.pose)
                outcome = verify_observation(observation, registry, model)
                claimed = packet.record.drone_id
                previous = roster.status_of(claimed)
                status = roster.apply(observation, outcome)
                log.rx.append(
                    RxEvent(t, observer.observer_id, agent.drone_id, claimed, packet.record.seq, rssi)
                )
                log.verifications.append(
                    VerifyEvent(
                        time=t,
                        observer_id=observer.observer_id,
                        agent_id=agent.drone_id,
                        drone_id=claimed,
                        seq=packet.record.seq,
                        known_id=outcome.known_id,
                        key_ok=outcome.key_ok,
                        rssi_ok=outcome.rssi_ok,
                        residual=outcome.residual,
                        passed=outcome.passed,
                        status=status,
                    )
                )
                alarm_key = (observer.observer_id, claimed)
                if (
                    status is DroneStatus.UNAUTHORIZED
                    and previous is not DroneStatus.UNAUTHORIZED
                    and alarm_key not in alarmed
                ):
                    alarmed.add(alarm_key)
                    log.alarms.append(AlarmEvent(t, observer.observer_id, claimed))

        # captured packets become replayable only on later ticks
        for agent, packet, _ in transmissions:
            history[agent.drone_id].append((t, packet))

        if n > 0 and n % pub_every == 0:
            for observer in observers:
                snapshot = rosters[observer.observer_id].publish(t)
                log.snapshots.append(SnapshotEvent(t, observer.observer_id, snapshot))

    return log


def _emit(
    agent: AgentSpec,
    t: float,
    registry: AuthorizedRegistry,
    seq_counters: dict[int, int],
    history: dict[int, list[tuple[float, AdvertisementPacket]]],
    behavior_rng: dict[int, np.random.Generator],
) -> tuple[AdvertisementPacket, GpsFixQ] | None:
    """Build the packet this agent advertises at time t, or None if silent."""
    true_fix = agent.trajectory.position_at(t)

    if agent.behavior is Behavior.REPLAY:
        cutoff = t - agent.capture_delay + 1e-9
        captured = None
        for tx_time, packet in reversed(history[agent.source_id]):
            if tx_time <= cutoff:
                captured = packet
                break
        if captured is None:
            return None
        return captured, true_fix

    seq = seq_counters[agent.drone_id] % 0x10000
    seq_counters[agent.drone_id] += 1

    if agent.behavior is Behavior.SPOOF:
        lat, lon, alt = agent.trajectory.interpolate(t)
        claimed_fix = quantize_fix(
            lat + agent.offset_lat, lon + agent.offset_lon, alt + agent.offset_alt
        )
        record = FlightRecord(agent.drone_id, claimed_fix, seq)
        key = derive_key(record, registry.schedule)
    else:
        record = FlightRecord(agent.drone_id, true_fix, seq)
        if agent.behavior is Behavior.HONEST:
            key = derive_key(record, registry.schedule)
        elif agent.behavior is Behavior.NO_KEY:
            key = VerificationKey(0)
        elif agent.behavior is Behavior.RANDOM_KEY:
            key = VerificationKey(int(behavior_rng[agent.drone_id].integers(0, 256)))
        else:
            raise AssertionError(f"unhandled behavior {agent.behavior}")

    return AdvertisementPacket.build(record, key), true_fix
