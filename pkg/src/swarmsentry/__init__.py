"""Intruder detection for drone swarms.

Authorized drones broadcast compact advertisements carrying their quantized
position and a key derived from a shared weighted-sum secret; verifiers
recompute the key and check the received signal strength against the
distance the packet claims.  This package provides the protocol types and
codec, the path-loss channel, the roster state machine, a deterministic
swarm simulator with adversary behaviors, detection metrics, and a CLI.
"""

from .packet import (
    AdvertisementPacket,
    DEFAULT_SCHEDULE,
    FlightRecord,
    GpsFixQ,
    KeySchedule,
    PacketError,
    VerificationKey,
    crc8,
    decode_packet,
    derive_key,
    encode_packet,
    packet_from_hex,
    packet_to_hex,
    quantize_fix,
)
from .radio import ObserverPose, PathLossModel, expected_rssi, geodesic_distance, rssi_consistent
from .roster import (
    AlarmPolicy,
    AuthorizedRegistry,
    DroneStatus,
    Observation,
    Roster,
    RosterSnapshot,
    VerificationOutcome,
    verify_observation,
)
from .scenario import ScenarioError, parse_scenario, parse_scenario_text
from .sim import (
    AgentSpec,
    Behavior,
    ConfigError,
    EventLog,
    ObserverSpec,
    ScenarioConfig,
    Trajectory,
    Waypoint,
    run,
    sample_rssi,
)

__version__ = "0.1.0"

__all__ = [
    "AdvertisementPacket",
    "AgentSpec",
    "AlarmPolicy",
    "AuthorizedRegistry",
    "Behavior",
    "ConfigError",
    "DEFAULT_SCHEDULE",
    "DroneStatus",
    "EventLog",
    "FlightRecord",
    "GpsFixQ",
    "KeySchedule",
    "Observation",
    "ObserverPose",
    "ObserverSpec",
    "PacketError",
    "PathLossModel",
    "Roster",
    "RosterSnapshot",
    "ScenarioConfig",
    "ScenarioError",
    "Trajectory",
    "VerificationKey",
    "VerificationOutcome",
    "Waypoint",
    "crc8",
    "decode_packet",
    "derive_key",
    "encode_packet",
    "expected_rssi",
    "geodesic_distance",
    "packet_from_hex",
    "packet_to_hex",
    "parse_scenario",
    "parse_scenario_text",
    "quantize_fix",
    "rssi_consistent",
    "run",
    "sample_rssi",
    "verify_observation",
]
