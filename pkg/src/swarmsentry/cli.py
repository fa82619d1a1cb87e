"""Command-line front end.

    swarmsentry run SCENARIO [--seed N] [--out-dir DIR]
    swarmsentry sweep SCORES_CSV --thresholds A:B:STEP
    swarmsentry roc SCORES_CSV
    swarmsentry keygen ID LAT LON ALT
    swarmsentry decode HEX

Exit codes are a stable scripting contract: 0 success, 2 usage or parse
errors, 3 I/O errors.  Every command is deterministic given its arguments
and input files; ``run`` writes events.csv, roster.csv, trace.csv and
report.txt into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import metrics
from .packet import (
    AdvertisementPacket,
    FlightRecord,
    PacketError,
    DEFAULT_SCHEDULE,
    derive_key,
    packet_from_hex,
    packet_to_hex,
    quantize_fix,
)
from .roster import DroneStatus, RosterSnapshot
from .scenario import ScenarioError, parse_scenario
from .sim import (
    AlarmEvent,
    ConfigError,
    EventLog,
    RxEvent,
    TxEvent,
    VerifyEvent,
    run,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3

EVENTS_HEADER = [
    "kind", "time", "observer_id", "agent_id", "drone_id", "seq",
    "lat", "lon", "alt", "true_lat", "true_lon", "true_alt",
    "key", "rssi", "known_id", "key_ok", "rssi_ok", "residual", "passed", "status",
]
TRACE_HEADER = ["time", "drone_id", "lat", "lon", "alt", "status"]


@dataclass(frozen=True)
class RunReport:
    """Human-readable summary of one run (the report.txt contents)."""

    scenario: str
    seed: int
    duration: float
    final_status: dict[tuple[int, int], DroneStatus]  # (observer, drone) -> status
    alarms: list[AlarmEvent]
    latencies: dict[int, float | None]
    key_failures: dict[int, int]
    rssi_failures: dict[int, int]
    output_files: list[Path]

    def render(self) -> str:
        lines = [
            f"scenario: {self.scenario}",
            f"seed: {self.seed}",
            f"duration: {self.duration:.6f} s",
            "",
            "final status:",
        ]
        for (observer_id, drone_id), status in sorted(self.final_status.items()):
            lines.append(
                f"  observer {observer_id}  drone {drone_id}: {status.value}"
                f"  (key failures {self.key_failures.get(drone_id, 0)},"
                f" rssi failures {self.rssi_failures.get(drone_id, 0)})"
            )
        lines.append("")
        if self.alarms:
            lines.append("alarms:")
            for alarm in self.alarms:
                lines.append(
                    f"  t={alarm.time:.6f}  observer {alarm.observer_id}"
                    f"  drone {alarm.drone_id} flagged unauthorized"
                )
        else:
            lines.append("alarms: none")
        lines.append("")
        if self.latencies:
            lines.append("detection latency:")
            for agent_id, latency in sorted(self.latencies.items()):
                shown = "not detected" if latency is None else f"{latency:.6f} s"
                lines.append(f"  intruder agent {agent_id}: {shown}")
        else:
            lines.append("detection latency: no intruders in scenario")
        lines.append("")
        lines.append("outputs:")
        for path in self.output_files:
            lines.append(f"  {path}")
        lines.append("")
        return "\n".join(lines)


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _bool(value: bool) -> str:
    return "1" if value else "0"


def write_events_csv(log: EventLog, path: Path) -> None:
    """Kind-tagged union of tx/rx/verify/alarm records, totally ordered."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(EVENTS_HEADER)
        for event in log.all_events():
            row = {"time": _fmt(event.time), "drone_id": str(event.drone_id)}
            if isinstance(event, TxEvent):
                row.update(
                    kind="tx",
                    agent_id=str(event.agent_id),
                    seq=str(event.seq),
                    lat=f"{event.claimed_fix.lat_deg:.4f}",
                    lon=f"{event.claimed_fix.lon_deg:.4f}",
                    alt=str(event.claimed_fix.alt_q),
                    true_lat=f"{event.true_fix.lat_deg:.4f}",
                    true_lon=f"{event.true_fix.lon_deg:.4f}",
                    true_alt=str(event.true_fix.alt_q),
                    key=str(event.key),
                )
            elif isinstance(event, RxEvent):
                row.update(
                    kind="rx",
                    observer_id=str(event.observer_id),
                    agent_id=str(event.agent_id),
                    seq=str(event.seq),
                    rssi=_fmt(event.rssi),
                )
            elif isinstance(event, VerifyEvent):
                row.update(
                    kind="verify",
                    observer_id=str(event.observer_id),
                    agent_id=str(event.agent_id),
                    seq=str(event.seq),
                    known_id=_bool(event.known_id),
                    key_ok=_bool(event.key_ok),
                    rssi_ok=_bool(event.rssi_ok),
                    residual=_fmt(event.residual),
                    passed=_bool(event.passed),
                    status=event.status.value,
                )
            elif isinstance(event, AlarmEvent):
                row.update(kind="alarm", observer_id=str(event.observer_id))
            writer.writerow([row.get(column, "") for column in EVENTS_HEADER])


def write_roster_csv(log: EventLog, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RosterSnapshot.CSV_HEADER)
        for event in log.snapshots:
            writer.writerows(event.snapshot.csv_rows())


def write_trace_csv(log: EventLog, path: Path) -> None:
    """Plot-ready drone positions+status per snapshot, lowest-id observer."""
    if log.snapshots:
        chosen = min(event.observer_id for event in log.snapshots)
    else:
        chosen = None
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for event in log.snapshots:
            if event.observer_id != chosen:
                continue
            for row in event.snapshot.rows:
                writer.writerow(
                    [
                        _fmt(event.time),
                        str(row.drone_id),
                        f"{row.lat_deg:.4f}",
                        f"{row.lon_deg:.4f}",
                        str(row.alt_m),
                        row.status.value,
                    ]
                )


def build_report(log: EventLog, output_files: list[Path]) -> RunReport:
    final_status: dict[tuple[int, int], DroneStatus] = {}
    for event in log.verifications:
        final_status[(event.observer_id, event.drone_id)] = event.status
    for event in log.snapshots:
        for row in event.snapshot.rows:
            final_status[(event.observer_id, row.drone_id)] = row.status

    key_failures: dict[int, int] = {}
    rssi_failures: dict[int, int] = {}
    for event in log.verifications:
        if not event.key_ok:
            key_failures[event.drone_id] = key_failures.get(event.drone_id, 0) + 1
        if not event.rssi_ok:
            rssi_failures[event.drone_id] = rssi_failures.get(event.drone_id, 0) + 1

    return RunReport(
        scenario=log.config.name,
        seed=log.config.seed,
        duration=log.config.duration,
        final_status=final_status,
        alarms=list(log.alarms),
        latencies=metrics.detection_latency(log),
        key_failures=key_failures,
        rssi_failures=rssi_failures,
        output_files=output_files,
    )


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = parse_scenario(args.scenario)
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ScenarioError, ConfigError, PacketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.seed is not None:
        config = replace(config, seed=args.seed)

    try:
        log = run(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        files = {
            "events": out_dir / "events.csv",
            "roster": out_dir / "roster.csv",
            "trace": out_dir / "trace.csv",
            "report": out_dir / "report.txt",
        }
        write_events_csv(log, files["events"])
        write_roster_csv(log, files["roster"])
        write_trace_csv(log, files["trace"])
        report = build_report(log, list(files.values()))
        files["report"].write_text(report.render(), encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO

    sys.stdout.write(report.render())
    return EXIT_OK


def _parse_threshold_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected A:B:STEP, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if start == stop:
        return [start]
    if step <= 0:
        raise ValueError("STEP must be > 0")
    if stop < start:
        raise ValueError("need A <= B")
    count = int((stop - start) / step + 1e-9)
    return [start + i * step for i in range(count + 1)]


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        thresholds = _parse_threshold_grid(args.thresholds)
    except ValueError as exc:
        print(f"error: --thresholds: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        scores = metrics.read_scores_csv(args.scores)
    except OSError as exc:
        print(f"error: cannot read scores: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["threshold", "accuracy", "precision", "recall"])
    for report in metrics.sweep(scores, thresholds):
        writer.writerow(
            [
                f"{report.threshold:g}",
                f"{report.accuracy:.4f}",
                f"{report.precision:.4f}",
                f"{report.recall:.4f}",
            ]
        )
    return EXIT_OK


def cmd_roc(args: argparse.Namespace) -> int:
    try:
        scores = metrics.read_scores_csv(args.scores)
    except OSError as exc:
        print(f"error: cannot read scores: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        curve = metrics.roc_auc(scores)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["fpr", "tpr"])
    for fpr, tpr in curve.points:
        writer.writerow([f"{fpr:.6f}", f"{tpr:.6f}"])
    print()
    writer.writerow(["recall", "precision"])
    for recall, precision in metrics.precision_recall_points(scores):
        writer.writerow([f"{recall:.6f}", f"{precision:.6f}"])
    print(f"AUC={curve.auc}")
    return EXIT_OK


def cmd_keygen(args: argparse.Namespace) -> int:
    try:
        fix = quantize_fix(args.lat, args.lon, args.alt)
        record = FlightRecord(args.drone_id, fix, seq=0)
    except PacketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    key = derive_key(record, DEFAULT_SCHEDULE)
    packet = AdvertisementPacket.build(record, key)
    print(f"key = {key.value} (0x{key.value:02X})")
    print(f"packet = {packet_to_hex(packet)}")
    return EXIT_OK


def cmd_decode(args: argparse.Namespace) -> int:
    try:
        packet = packet_from_hex(args.hex)
    except PacketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    record = packet.record
    fix = record.fix
    expected = derive_key(record, DEFAULT_SCHEDULE)
    print(f"drone_id = {record.drone_id}")
    print(f"lat = {fix.lat_deg:.4f} deg (lat_q {fix.lat_q})")
    print(f"lon = {fix.lon_deg:.4f} deg (lon_q {fix.lon_q})")
    print(f"alt = {fix.alt_q} m")
    print(f"seq = {record.seq}")
    print(f"key = {packet.key.value} (0x{packet.key.value:02X})")
    print(f"crc = 0x{packet.crc:02X}")
    valid = "yes" if packet.key == expected else "no"
    print(f"key valid under default schedule: {valid}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmsentry",
        description="Keyed-advertisement intruder detection: simulator and evaluation tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file and write CSV/report outputs")
    p_run.add_argument("scenario", help="path to a scenario text file")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--out-dir", default="out", help="directory for output files")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="threshold sweep table from a score CSV")
    p_sweep.add_argument("scores", help="CSV of score,label rows")
    p_sweep.add_argument(
        "--thresholds", required=True, help="grid A:B:STEP, both ends inclusive"
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_roc = sub.add_parser("roc", help="ROC / precision-recall points and AUC from a score CSV")
    p_roc.add_argument("scores", help="CSV of score,label rows")
    p_roc.set_defaults(func=cmd_roc)

    p_keygen = sub.add_parser("keygen", help="derive a key and packet for given id/coordinates")
    p_keygen.add_argument("drone_id", type=int)
    p_keygen.add_argument("lat", type=float)
    p_keygen.add_argument("lon", type=float)
    p_keygen.add_argument("alt", type=float)
    p_keygen.set_defaults(func=cmd_keygen)

    p_decode = sub.add_parser("decode", help="decode a 34-character packet hex string")
    p_decode.add_argument("hex")
    p_decode.set_defaults(func=cmd_decode)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
