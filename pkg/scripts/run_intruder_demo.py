#!/usr/bin/env python3
"""Run the bundled close-intruder scenario and print what the verifier saw.

Equivalent to `swarmsentry run scenarios/close_intruder.txt --out-dir out/demo`
but driven through the library API, as a starting point for custom
experiments.
"""

from pathlib import Path

from swarmsentry import metrics, parse_scenario, run

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    config = parse_scenario(ROOT / "scenarios" / "close_intruder.txt")
    log = run(config)

    print(f"scenario {config.name!r}, seed {config.seed}, {config.duration} s")
    print(f"transmissions: {len(log.tx)}, observations: {len(log.rx)}")
    print(f"roster snapshots: {len(log.snapshots)}")
    for alarm in log.alarms:
        print(f"alarm: drone {alarm.drone_id} flagged at t={alarm.time:.3f} s "
              f"(observer {alarm.observer_id})")
    for agent_id, latency in metrics.detection_latency(log).items():
        shown = "not detected" if latency is None else f"{latency:.3f} s"
        print(f"intruder agent {agent_id}: detection latency {shown}")


if __name__ == "__main__":
    main()
