#!/usr/bin/env python3
"""Score-based evaluation of the power check under shadowing noise.

Simulates a mixed swarm (honest members plus a position-spoofing insider
and a replay attacker), uses each observation's |RSSI residual| as an
anomaly score, and reports the threshold sweep, ROC/AUC and the Youden
operating point.  Writes residual_scores.csv, roc_points.csv and
sweep_table.csv under out/residual_roc/.
"""

import csv
from pathlib import Path

from swarmsentry import (
    AgentSpec,
    AlarmPolicy,
    AuthorizedRegistry,
    Behavior,
    ObserverPose,
    ObserverSpec,
    PathLossModel,
    ScenarioConfig,
    Trajectory,
    Waypoint,
    metrics,
    quantize_fix,
    run,
)

OUT_DIR = Path(__file__).resolve().parents[1] / "out" / "residual_roc"


def hover(lat: float, lon: float, alt: float) -> Trajectory:
    return Trajectory((Waypoint(0.0, lat, lon, alt),))


def build_config() -> ScenarioConfig:
    agents = (
        AgentSpec(1, hover(0.0010, 0.0, 30.0)),
        AgentSpec(2, hover(0.0013, 0.0002, 30.0)),
        AgentSpec(3, hover(0.0008, -0.0003, 25.0)),
        # insider reporting a position ~250 m off; key still valid
        AgentSpec(21, hover(0.0011, 0.0001, 30.0), behavior=Behavior.SPOOF,
                  offset_lat=0.00225),
        # replays drone 1's broadcasts from twice the distance
        AgentSpec(22, hover(0.0020, 0.0, 30.0), behavior=Behavior.REPLAY,
                  source_id=1, capture_delay=0.5),
    )
    return ScenarioConfig(
        duration=120.0,
        registry=AuthorizedRegistry(frozenset({1, 2, 3, 21})),
        agents=agents,
        observers=(ObserverSpec(1, ObserverPose(quantize_fix(0.0, 0.0, 0.0))),),
        pathloss=PathLossModel(shadow_sigma=2.0, tolerance_delta=6.0),
        policy=AlarmPolicy(k_consecutive=2),
        name="residual_roc",
        seed=11,
    )


def main() -> None:
    log = run(build_config())
    scores = metrics.residual_scores(log)
    n_pos = sum(1 for s in scores if s.label)
    print(f"{len(scores)} observations ({n_pos} from intruders)")

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with open(OUT_DIR / "residual_scores.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["score", "label"])
        for s in scores:
            writer.writerow([f"{s.score:.6f}", int(s.label)])

    curve = metrics.roc_auc(scores)
    with open(OUT_DIR / "roc_points.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["fpr", "tpr"])
        for fpr, tpr in curve.points:
            writer.writerow([f"{fpr:.6f}", f"{tpr:.6f}"])

    thresholds = [i * 1.0 for i in range(0, 16)]
    with open(OUT_DIR / "sweep_table.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["threshold", "accuracy", "precision", "recall"])
        for report in metrics.sweep(scores, thresholds):
            writer.writerow([f"{report.threshold:g}", f"{report.accuracy:.4f}",
                             f"{report.precision:.4f}", f"{report.recall:.4f}"])

    print(f"AUC = {curve.auc:.4f}")
    print(f"Youden operating point: threshold {metrics.operating_point(curve):.3f} dB")
    print(f"outputs in {OUT_DIR}")


if __name__ == "__main__":
    main()
