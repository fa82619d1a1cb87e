import math

import numpy as np
import pytest

from swarmsentry.packet import (
    AdvertisementPacket,
    FlightRecord,
    GpsFixQ,
    VerificationKey,
    derive_key,
    quantize_fix,
)
from swarmsentry.radio import ObserverPose, PathLossModel, expected_rssi, geodesic_distance
from swarmsentry.roster import (
    AlarmPolicy,
    AuthorizedRegistry,
    DroneStatus,
    Observation,
    Roster,
    verify_observation,
)

MODEL = PathLossModel(shadow_sigma=0.0)
OBSERVER = ObserverPose(GpsFixQ(0, 0, 0))
REGISTRY = AuthorizedRegistry(frozenset({1, 2}))


def honest_observation(drone_id=1, fix=GpsFixQ(0, 0, 100), rx_time=0.0, seq=0,
                       key=None, measured=None, true_fix=None):
    """Observation of a packet transmitted from `true_fix` claiming `fix`."""
    record = FlightRecord(drone_id, fix, seq)
    packet = AdvertisementPacket.build(record, key or derive_key(record))
    physical = true_fix if true_fix is not None else fix
    rssi = measured if measured is not None else expected_rssi(
        geodesic_distance(physical, OBSERVER.fix), MODEL
    )
    return Observation(packet, rssi, rx_time, OBSERVER)


# --- verify_observation ---------------------------------------------------------

def test_honest_observation_passes_all_three():
    outcome = verify_observation(honest_observation(), REGISTRY, MODEL)
    assert outcome.known_id and outcome.key_ok and outcome.rssi_ok
    assert outcome.passed
    assert outcome.residual == pytest.approx(0.0)


def test_wrong_key_fails_key_stage_only():
    record = FlightRecord(1, GpsFixQ(0, 0, 100), 0)
    wrong = VerificationKey((derive_key(record).value + 1) % 256)
    obs = honest_observation(key=wrong)
    outcome = verify_observation(obs, REGISTRY, MODEL)
    assert outcome.known_id and not outcome.key_ok and outcome.rssi_ok
    assert not outcome.passed


def test_unknown_id_fails_membership():
    outcome = verify_observation(honest_observation(drone_id=77), REGISTRY, MODEL)
    assert not outcome.known_id and outcome.key_ok and outcome.rssi_ok
    assert not outcome.passed


def test_replayed_position_fails_rssi_stage():
    # claimed 100 m overhead; physically transmitted from 300 m away:
    # residual = 20*log10(300/100) ~ 9.5 dB beyond the claimed prediction
    claimed = GpsFixQ(0, 0, 100)
    true_fix = quantize_fix(0.0027, 0.0, 0.0)
    obs = honest_observation(fix=claimed, true_fix=true_fix)
    outcome = verify_observation(obs, REGISTRY, MODEL)
    assert outcome.known_id and outcome.key_ok and not outcome.rssi_ok
    assert abs(outcome.residual) > MODEL.tolerance_delta


def test_exactly_one_key_value_passes():
    record = FlightRecord(2, GpsFixQ(4321, -8765, 12), 5)
    passing = []
    for value in range(256):
        packet = AdvertisementPacket.build(record, VerificationKey(value))
        rssi = expected_rssi(geodesic_distance(record.fix, OBSERVER.fix), MODEL)
        outcome = verify_observation(Observation(packet, rssi, 0.0, OBSERVER), REGISTRY, MODEL)
        if outcome.key_ok:
            passing.append(value)
    assert passing == [derive_key(record).value]


# --- roster state machine -------------------------------------------------------

def fail_outcome(known=True):
    from swarmsentry.roster import VerificationOutcome

    return VerificationOutcome(known_id=known, key_ok=False, rssi_ok=True, residual=0.0)


def pass_outcome():
    from swarmsentry.roster import VerificationOutcome

    return VerificationOutcome(known_id=True, key_ok=True, rssi_ok=True, residual=0.0)


def test_single_failure_not_yet_flagged_with_k2():
    roster = Roster(AlarmPolicy(k_consecutive=2))
    status = roster.apply(honest_observation(rx_time=0.0), fail_outcome())
    assert status is DroneStatus.AUTHORIZED
    assert roster.entries()[1].fail_streak == 1


def test_two_consecutive_failures_flag_with_k2():
    roster = Roster(AlarmPolicy(k_consecutive=2))
    roster.apply(honest_observation(rx_time=0.0), fail_outcome())
    status = roster.apply(honest_observation(rx_time=0.1, seq=1), fail_outcome())
    assert status is DroneStatus.UNAUTHORIZED


def test_pass_resets_failure_streak():
    roster = Roster(AlarmPolicy(k_consecutive=2))
    roster.apply(honest_observation(rx_time=0.0), fail_outcome())
    roster.apply(honest_observation(rx_time=0.1, seq=1), pass_outcome())
    status = roster.apply(honest_observation(rx_time=0.2, seq=2), fail_outcome())
    assert status is DroneStatus.AUTHORIZED  # streak restarted at 1
    assert roster.entries()[1].fail_streak == 1


def test_k1_flags_on_first_failure():
    roster = Roster(AlarmPolicy(k_consecutive=1))
    status = roster.apply(honest_observation(rx_time=0.0), fail_outcome())
    assert status is DroneStatus.UNAUTHORIZED


def test_unknown_id_flagged_immediately_any_k():
    for k in (1, 2, 5):
        roster = Roster(AlarmPolicy(k_consecutive=k))
        status = roster.apply(honest_observation(drone_id=77, rx_time=0.0), fail_outcome(known=False))
        assert status is DroneStatus.UNAUTHORIZED


def test_recovery_needs_k_consecutive_passes():
    roster = Roster(AlarmPolicy(k_consecutive=2))
    roster.apply(honest_observation(rx_time=0.0), fail_outcome())
    roster.apply(honest_observation(rx_time=0.1, seq=1), fail_outcome())
    assert roster.status_of(1) is DroneStatus.UNAUTHORIZED
    assert roster.apply(honest_observation(rx_time=0.2, seq=2), pass_outcome()) is DroneStatus.UNAUTHORIZED
    assert roster.apply(honest_observation(rx_time=0.3, seq=3), pass_outcome()) is DroneStatus.AUTHORIZED


def test_recovery_interrupted_by_failure_restarts():
    roster = Roster(AlarmPolicy(k_consecutive=2))
    roster.apply(honest_observation(rx_time=0.0), fail_outcome())
    roster.apply(honest_observation(rx_time=0.1, seq=1), fail_outcome())
    roster.apply(honest_observation(rx_time=0.2, seq=2), pass_outcome())
    roster.apply(honest_observation(rx_time=0.3, seq=3), fail_outcome())
    assert roster.status_of(1) is DroneStatus.UNAUTHORIZED
    roster.apply(honest_observation(rx_time=0.4, seq=4), pass_outcome())
    assert roster.status_of(1) is DroneStatus.UNAUTHORIZED
    roster.apply(honest_observation(rx_time=0.5, seq=5), pass_outcome())
    assert roster.status_of(1) is DroneStatus.AUTHORIZED


# --- staleness ------------------------------------------------------------------

def test_tick_staleness_boundaries():
    roster = Roster(AlarmPolicy(stale_timeout=1.0))
    roster.apply(honest_observation(rx_time=0.0), pass_outcome())
    roster.tick(0.5)
    assert roster.status_of(1) is DroneStatus.AUTHORIZED
    roster.tick(1.5)
    assert roster.status_of(1) is DroneStatus.STALE


def test_stale_entry_recovers_on_passing_observation():
    roster = Roster(AlarmPolicy(stale_timeout=1.0))
    roster.apply(honest_observation(rx_time=0.0), pass_outcome())
    roster.tick(1.5)
    assert roster.status_of(1) is DroneStatus.STALE
    status = roster.apply(honest_observation(rx_time=1.6, seq=1), pass_outcome())
    assert status is DroneStatus.AUTHORIZED
    assert roster.entries()[1].fail_streak == 0


def test_unauthorized_entries_do_not_go_stale():
    roster = Roster(AlarmPolicy(k_consecutive=1, stale_timeout=1.0))
    roster.apply(honest_observation(rx_time=0.0), fail_outcome())
    roster.tick(10.0)
    assert roster.status_of(1) is DroneStatus.UNAUTHORIZED


# --- publication ----------------------------------------------------------------

def test_publish_empty_roster():
    snapshot = Roster().publish(0.3)
    assert snapshot.time == 0.3
    assert snapshot.rows == ()
    assert snapshot.csv_rows() == []


def test_publish_sorted_by_drone_id():
    roster = Roster()
    roster.apply(honest_observation(drone_id=2, rx_time=0.0), pass_outcome())
    roster.apply(honest_observation(drone_id=1, rx_time=0.0), pass_outcome())
    snapshot = roster.publish(0.1)
    assert [row.drone_id for row in snapshot.rows] == [1, 2]
    assert len(snapshot.csv_rows()[0]) == len(snapshot.CSV_HEADER)


# --- stream-level properties ------------------------------------------------------

def test_honest_drone_never_flagged_noise_free():
    roster = Roster(AlarmPolicy(k_consecutive=2))
    registry = REGISTRY
    for i in range(500):
        obs = honest_observation(rx_time=0.1 * i, seq=i % 0x10000)
        outcome = verify_observation(obs, registry, MODEL)
        status = roster.apply(obs, outcome)
        assert status is DroneStatus.AUTHORIZED


def test_deterministic_history():
    def run_stream():
        roster = Roster(AlarmPolicy(k_consecutive=2))
        trail = []
        for i in range(50):
            outcome = fail_outcome() if i % 3 == 0 else pass_outcome()
            trail.append(roster.apply(honest_observation(rx_time=0.1 * i, seq=i), outcome))
        return trail

    assert run_stream() == run_stream()


def test_random_key_attacker_flagged_within_three_packets():
    """Monte Carlo vs exact enumeration of surviving pass/fail patterns.

    With per-packet pass probability p = 1/256 and k = 2, the attacker
    survives the first three packets only via PPP, PPF, PFP, FPP or FPF:
    survive = p^3 + 3 p^2 q + p q^2 with q = 1 - p.
    """
    p = 1.0 / 256.0
    q = 1.0 - p
    survive_exact = p**3 + 3 * p**2 * q + p * q**2
    flag_exact = 1.0 - survive_exact
    assert flag_exact > 0.99

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(31)))
    trials = 40_000
    passes = rng.random((trials, 3)) < p
    flagged = 0
    for row in passes:
        streak = 0
        for ok in row:
            streak = 0 if ok else streak + 1
            if streak >= 2:
                flagged += 1
                break
    rate = flagged / trials
    sigma = math.sqrt(flag_exact * (1 - flag_exact) / trials)
    assert abs(rate - flag_exact) <= 3 * sigma
