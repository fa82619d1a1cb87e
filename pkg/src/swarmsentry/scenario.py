"""Scenario file parsing.

The format is deliberately dumb: UTF-8 lines, ``#`` comments, ``[section]``
headers, ``key = value`` pairs.  Sections:

    [sim]            name, duration*, tick_dt, seed, loss_prob
    [pathloss]       rssi0, exponent_n, shadow_sigma, tolerance_delta, d_min
    [policy]         k_consecutive, stale_timeout
    [registry]       ids* (comma-separated), w_id, w_lat, w_lon, w_alt, modulus
    [agent <id>]     behavior, advertise_interval, waypoints*,
                     source_id, capture_delay    (replay only)
                     offset_lat, offset_lon, offset_alt    (spoof only)
    [observer <id>]  lat*, lon*, alt*

Starred keys are required; everything else falls back to the library
defaults.  ``waypoints`` is a ``;``-separated list of ``t, lat, lon, alt``
quadruples.  Unknown sections or keys are rejected so typos fail loudly, and
every parse error carries file:line:key context.
"""

from __future__ import annotations

from pathlib import Path

from .packet import KeySchedule, quantize_fix
from .radio import ObserverPose, PathLossModel
from .roster import AlarmPolicy, AuthorizedRegistry
from .sim import AgentSpec, Behavior, ObserverSpec, ScenarioConfig, Trajectory, Waypoint

_REQUIRED = object()


class ScenarioError(ValueError):
    """Scenario text rejected; message carries file:line and the key."""

    def __init__(self, message: str, *, source: str, line: int, key: str = "") -> None:
        self.source = source
        self.line = line
        self.key = key
        where = f"{source}:{line}"
        if key:
            where += f": {key}"
        super().__init__(f"{where}: {message}")


class _Section:
    def __init__(self, header: str, line: int, source: str) -> None:
        self.header = header
        self.line = line
        self.source = source
        self.entries: dict[str, tuple[str, int]] = {}

    def error(self, message: str, key: str = "", line: int | None = None) -> ScenarioError:
        return ScenarioError(
            message, source=self.source, line=self.line if line is None else line, key=key
        )

    def raw(self, key: str, default=_REQUIRED) -> str:
        if key in self.entries:
            return self.entries[key][0]
        if default is _REQUIRED:
            raise self.error(f"missing required key in [{self.header}]", key=key)
        return default

    def line_of(self, key: str) -> int:
        return self.entries[key][1] if key in self.entries else self.line

    def get_float(self, key: str, default=_REQUIRED) -> float:
        value = self.raw(key, default)
        if not isinstance(value, str):
            return value
        try:
            return float(value)
        except ValueError:
            raise self.error(f"not a number: {value!r}", key=key, line=self.line_of(key)) from None

    def get_int(self, key: str, default=_REQUIRED) -> int:
        value = self.raw(key, default)
        if not isinstance(value, str):
            return value
        try:
            return int(value, 0)
        except ValueError:
            raise self.error(f"not an integer: {value!r}", key=key, line=self.line_of(key)) from None

    def get_str(self, key: str, default=_REQUIRED) -> str:
        return self.raw(key, default)

    def check_keys(self, allowed: set[str]) -> None:
        for key, (_, line) in self.entries.items():
            if key not in allowed:
                raise self.error(f"unknown key in [{self.header}]", key=key, line=line)


def parse_scenario(path: str | Path) -> ScenarioConfig:
    """Parse a scenario file; raises OSError on I/O and ScenarioError on content."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_scenario_text(text, source=str(path), default_name=path.stem)


_KNOWN_SECTIONS = {"sim", "pathloss", "policy", "registry", "agent", "observer"}


def parse_scenario_text(
    text: str, source: str = "<scenario>", default_name: str = "scenario"
) -> ScenarioConfig:
    sections = _split_sections(text, source)
    for section in sections:
        kind = section.header.split(" ", 1)[0]
        if kind not in _KNOWN_SECTIONS:
            raise section.error(f"unknown section [{section.header}]")

    sim = _take(sections, "sim") or _Section("sim", 0, source)
    sim.check_keys({"name", "duration", "tick_dt", "seed", "loss_prob"})
    name = sim.get_str("name", default_name)
    duration = sim.get_float("duration")
    tick_dt = sim.get_float("tick_dt", 0.01)
    seed = sim.get_int("seed", 0)
    loss_prob = sim.get_float("loss_prob", 0.0)

    pathloss_sec = _take(sections, "pathloss")
    pathloss = _build_pathloss(pathloss_sec)

    policy_sec = _take(sections, "policy")
    policy = _build_policy(policy_sec)

    registry_sec = _take(sections, "registry")
    registry = _build_registry(registry_sec, source)

    agents = []
    observers = []
    for section in sections:
        kind, _, arg = section.header.partition(" ")
        if kind == "agent":
            agents.append(_build_agent(section, arg))
        elif kind == "observer":
            observers.append(_build_observer(section, arg))
        else:
            raise section.error(f"unknown section [{section.header}]")

    return ScenarioConfig(
        duration=duration,
        registry=registry,
        agents=tuple(agents),
        observers=tuple(observers),
        pathloss=pathloss,
        policy=policy,
        name=name,
        tick_dt=tick_dt,
        seed=seed,
        loss_prob=loss_prob,
    )


def _split_sections(text: str, source: str) -> list[_Section]:
    sections: list[_Section] = []
    current: _Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            header = " ".join(line[1:-1].split())
            if not header:
                raise ScenarioError("empty section header", source=source, line=lineno)
            current = _Section(header, lineno, source)
            sections.append(current)
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ScenarioError(
                "expected 'key = value' or '[section]'", source=source, line=lineno
            )
        if current is None:
            raise ScenarioError("key outside any section", source=source, line=lineno, key=key.strip())
        key = key.strip()
        if key in current.entries:
            raise ScenarioError(
                f"duplicate key in [{current.header}]", source=source, line=lineno, key=key
            )
        current.entries[key] = (value.strip(), lineno)
    return sections


def _take(sections: list[_Section], header: str) -> _Section | None:
    for section in sections:
        if section.header == header:
            sections.remove(section)
            return section
    return None


def _build_pathloss(section: _Section | None) -> PathLossModel:
    if section is None:
        return PathLossModel()
    section.check_keys({"rssi0", "exponent_n", "shadow_sigma", "tolerance_delta", "d_min"})
    try:
        return PathLossModel(
            rssi0=section.get_float("rssi0", -40.0),
            exponent_n=section.get_float("exponent_n", 2.0),
            shadow_sigma=section.get_float("shadow_sigma", 2.0),
            tolerance_delta=section.get_float("tolerance_delta", 6.0),
            d_min=section.get_float("d_min", 1.0),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise section.error(str(exc)) from exc


def _build_policy(section: _Section | None) -> AlarmPolicy:
    if section is None:
        return AlarmPolicy()
    section.check_keys({"k_consecutive", "stale_timeout"})
    try:
        return AlarmPolicy(
            k_consecutive=section.get_int("k_consecutive", 2),
            stale_timeout=section.get_float("stale_timeout", 1.0),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise section.error(str(exc)) from exc


def _build_registry(section: _Section | None, source: str) -> AuthorizedRegistry:
    if section is None:
        raise ScenarioError("missing [registry] section", source=source, line=0, key="ids")
    section.check_keys({"ids", "w_id", "w_lat", "w_lon", "w_alt", "modulus"})
    raw_ids = section.get_str("ids")
    ids = set()
    for part in raw_ids.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            ids.add(int(part, 0))
        except ValueError:
            raise section.error(
                f"bad drone id {part!r}", key="ids", line=section.line_of("ids")
            ) from None
    try:
        schedule = KeySchedule(
            w_id=section.get_int("w_id", 5),
            w_lat=section.get_int("w_lat", 4),
            w_lon=section.get_int("w_lon", 3),
            w_alt=section.get_int("w_alt", 2),
            modulus=section.get_int("modulus", 256),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise section.error(str(exc)) from exc
    return AuthorizedRegistry(ids=frozenset(ids), schedule=schedule)


def _parse_waypoints(section: _Section) -> Trajectory:
    raw = section.get_str("waypoints")
    line = section.line_of("waypoints")
    waypoints = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 4:
            raise section.error(
                f"waypoint needs 't, lat, lon, alt', got {chunk!r}", key="waypoints", line=line
            )
        try:
            t, lat, lon, alt = (float(p) for p in parts)
        except ValueError:
            raise section.error(
                f"non-numeric waypoint field in {chunk!r}", key="waypoints", line=line
            ) from None
        waypoints.append(Waypoint(t, lat, lon, alt))
    if not waypoints:
        raise section.error("waypoints list is empty", key="waypoints", line=line)
    try:
        return Trajectory(tuple(waypoints))
    except ValueError as exc:
        raise section.error(str(exc), key="waypoints", line=line) from exc


def _build_agent(section: _Section, arg: str) -> AgentSpec:
    try:
        drone_id = int(arg, 0)
    except ValueError:
        raise section.error(f"agent section needs a numeric id, got {arg!r}") from None
    allowed = {"behavior", "advertise_interval", "waypoints"}
    behavior_name = section.get_str("behavior", "honest").lower()
    try:
        behavior = Behavior(behavior_name)
    except ValueError:
        choices = ", ".join(b.value for b in Behavior)
        raise section.error(
            f"unknown behavior {behavior_name!r} (choices: {choices})",
            key="behavior",
            line=section.line_of("behavior"),
        ) from None
    if behavior is Behavior.REPLAY:
        allowed |= {"source_id", "capture_delay"}
    if behavior is Behavior.SPOOF:
        allowed |= {"offset_lat", "offset_lon", "offset_alt"}
    section.check_keys(allowed)

    source_id = section.get_int("source_id", None) if behavior is Behavior.REPLAY else None
    try:
        return AgentSpec(
            drone_id=drone_id,
            trajectory=_parse_waypoints(section),
            behavior=behavior,
            advertise_interval=section.get_float("advertise_interval", 0.1),
            source_id=source_id,
            capture_delay=section.get_float("capture_delay", 0.0),
            offset_lat=section.get_float("offset_lat", 0.0),
            offset_lon=section.get_float("offset_lon", 0.0),
            offset_alt=section.get_float("offset_alt", 0.0),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise section.error(str(exc)) from exc


def _build_observer(section: _Section, arg: str) -> ObserverSpec:
    try:
        observer_id = int(arg, 0)
    except ValueError:
        raise section.error(f"observer section needs a numeric id, got {arg!r}") from None
    section.check_keys({"lat", "lon", "alt"})
    try:
        fix = quantize_fix(
            section.get_float("lat"), section.get_float("lon"), section.get_float("alt")
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise section.error(str(exc)) from exc
    return ObserverSpec(observer_id=observer_id, pose=ObserverPose(fix))
