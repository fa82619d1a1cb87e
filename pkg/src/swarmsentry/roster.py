"""Two-stage verification and the per-drone status roster.

Every received advertisement goes through two tests: the key test (does the
transmitted key equal the one recomputed from the transmitted fields under
the shared schedule?) and the power test (is the measured RSSI consistent
with the claimed position?).  A roster folds the per-packet outcomes into a
per-drone status with a consecutive-failure alarm policy:

* an unknown drone id is flagged Unauthorized on its first observation;
* a known drone is flagged after ``k_consecutive`` failed observations in a
  row, and un-flagged again only after ``k_consecutive`` clean passes
  (symmetric hysteresis, so a borderline drone does not flap);
* a drone silent for longer than ``stale_timeout`` becomes Stale rather than
  Unauthorized -- silence is not evidence of intrusion.  Already-flagged
  entries stay Unauthorized through silence.

The roster is a single-writer state machine: one owner applies observations
and staleness ticks in timestamp order.  Published snapshots are immutable
and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .packet import AdvertisementPacket, GpsFixQ, KeySchedule, DEFAULT_SCHEDULE, derive_key
from .radio import ObserverPose, PathLossModel, rssi_consistent


class DroneStatus(Enum):
    AUTHORIZED = "authorized"
    UNAUTHORIZED = "unauthorized"
    STALE = "stale"


@dataclass(frozen=True, slots=True)
class AuthorizedRegistry:
    """The swarm's membership list plus the shared key schedule."""

    ids: frozenset[int]
    schedule: KeySchedule = DEFAULT_SCHEDULE

    def __contains__(self, drone_id: int) -> bool:
        return drone_id in self.ids


@dataclass(frozen=True, slots=True)
class AlarmPolicy:
    k_consecutive: int = 2
    stale_timeout: float = 1.0

    def __post_init__(self) -> None:
        if self.k_consecutive < 1:
            raise ValueError(f"k_consecutive must be >= 1, got {self.k_consecutive}")
        if self.stale_timeout <= 0:
            raise ValueError(f"stale_timeout must be > 0, got {self.stale_timeout}")


@dataclass(frozen=True, slots=True)
class Observation:
    """A decoded packet as seen by one observer: power and receive time."""

    packet: AdvertisementPacket
    measured_rssi: float
    rx_time: float
    observer: ObserverPose


@dataclass(frozen=True, slots=True)
class VerificationOutcome:
    known_id: bool
    key_ok: bool
    rssi_ok: bool
    residual: float

    @property
    def passed(self) -> bool:
        return self.known_id and self.key_ok and self.rssi_ok


def verify_observation(
    obs: Observation,
    registry: AuthorizedRegistry,
    model: PathLossModel,
) -> VerificationOutcome:
    """Run both verification stages on one observation.

    The packet is assumed CRC-valid (decode failures are handled upstream).
    All three checks are evaluated unconditionally so the outcome reports
    which stage failed, not merely that one did.
    """
    record = obs.packet.record
    known = record.drone_id in registry
    key_ok = obs.packet.key == derive_key(record, registry.schedule)
    rssi_ok, residual = rssi_consistent(obs.measured_rssi, record.fix, obs.observer, model)
    return VerificationOutcome(known, key_ok, rssi_ok, residual)


@dataclass(slots=True)
class RosterEntry:
    drone_id: int
    last_fix: GpsFixQ
    last_rssi: float
    last_seen: float
    last_seq: int
    key_ok: bool
    rssi_ok: bool
    fail_streak: int = 0
    pass_streak: int = 0
    status: DroneStatus = DroneStatus.AUTHORIZED


@dataclass(frozen=True, slots=True)
class SnapshotRow:
    drone_id: int
    lat_deg: float
    lon_deg: float
    alt_m: int
    rssi: float
    key_ok: bool
    rssi_ok: bool
    status: DroneStatus


@dataclass(frozen=True, slots=True)
class RosterSnapshot:
    """Immutable point-in-time view of a roster, sorted by drone id."""

    time: float
    rows: tuple[SnapshotRow, ...]

    CSV_HEADER = ("time", "drone_id", "lat", "lon", "alt", "rssi", "key_ok", "rssi_ok", "status")

    def csv_rows(self) -> list[list[str]]:
        """One 9-column row per drone, matching :data:`CSV_HEADER`."""
        out = []
        for row in self.rows:
            out.append(
                [
                    f"{self.time:.6f}",
                    str(row.drone_id),
                    f"{row.lat_deg:.4f}",
                    f"{row.lon_deg:.4f}",
                    str(row.alt_m),
                    f"{row.rssi:.6f}",
                    "1" if row.key_ok else "0",
                    "1" if row.rssi_ok else "0",
                    row.status.value,
                ]
            )
        return out


class Roster:
    """Single-writer per-drone verification state."""

    def __init__(self, policy: AlarmPolicy | None = None) -> None:
        self.policy = policy if policy is not None else AlarmPolicy()
        self._entries: dict[int, RosterEntry] = {}

    def entries(self) -> dict[int, RosterEntry]:
        return self._entries

    def status_of(self, drone_id: int) -> DroneStatus | None:
        entry = self._entries.get(drone_id)
        return entry.status if entry is not None else None

    def apply(self, obs: Observation, outcome: VerificationOutcome) -> DroneStatus:
        """Fold one verified observation into the roster; returns the new status."""
        record = obs.packet.record
        entry = self._entries.get(record.drone_id)
        if entry is None:
            entry = RosterEntry(
                drone_id=record.drone_id,
                last_fix=record.fix,
                last_rssi=obs.measured_rssi,
                last_seen=obs.rx_time,
                last_seq=record.seq,
                key_ok=outcome.key_ok,
                rssi_ok=outcome.rssi_ok,
            )
            self._entries[record.drone_id] = entry
        else:
            entry.last_fix = record.fix
            entry.last_rssi = obs.measured_rssi
            entry.last_seen = obs.rx_time
            entry.last_seq = record.seq
            entry.key_ok = outcome.key_ok
            entry.rssi_ok = outcome.rssi_ok

        k = self.policy.k_consecutive
        if not outcome.known_id:
            entry.fail_streak += 1
            entry.pass_streak = 0
            entry.status = DroneStatus.UNAUTHORIZED
        elif outcome.passed:
            entry.fail_streak = 0
            entry.pass_streak += 1
            if entry.status is not DroneStatus.UNAUTHORIZED or entry.pass_streak >= k:
                entry.status = DroneStatus.AUTHORIZED
        else:
            entry.pass_streak = 0
            entry.fail_streak += 1
            if entry.status is DroneStatus.UNAUTHORIZED or entry.fail_streak >= k:
                entry.status = DroneStatus.UNAUTHORIZED
            else:
                # live again, not yet proven hostile
                entry.status = DroneStatus.AUTHORIZED
        return entry.status

    def tick(self, now: float) -> None:
        """Age out silent drones; flagged entries stay flagged."""
        timeout = self.policy.stale_timeout
        for entry in self._entries.values():
            if entry.status is DroneStatus.AUTHORIZED and now - entry.last_seen > timeout:
                entry.status = DroneStatus.STALE

    def publish(self, now: float) -> RosterSnapshot:
        rows = tuple(
            SnapshotRow(
                drone_id=entry.drone_id,
                lat_deg=entry.last_fix.lat_deg,
                lon_deg=entry.last_fix.lon_deg,
                alt_m=entry.last_fix.alt_q,
                rssi=entry.last_rssi,
                key_ok=entry.key_ok,
                rssi_ok=entry.rssi_ok,
                status=entry.status,
            )
            for entry in sorted(self._entries.values(), key=lambda e: e.drone_id)
        )
        return RosterSnapshot(time=now, rows=rows)
