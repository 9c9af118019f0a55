"""Newline-delimited JSON streams between the tracker and the controller.

Track records::

    {"frame": 7, "detector_ran": true, "tracks": [{"id": 1, "tlbr": [1.00, 2.00, 3.00, 4.00], "class": 0, "status": "confirmed"}]}

Command records::

    {"frame": 7, "yaw": 0.50, "pitch": -1.25, "roll": 0.10}

Field order is fixed and floats carry exactly two decimals so that runs can be
compared byte for byte.
"""
from __future__ import annotations

import json
import socket
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Sequence

from herdtrack.control import ControlCommand, ControllerState, PIDGains, compute_errors, pid_step
from herdtrack.geometry import BBox
from herdtrack.pipeline import FrameResult, TrackOutput, TrackStatus


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def format_track_record(result: FrameResult) -> str:
    parts = []
    for t in result.tracks:
        if t.status is TrackStatus.DELETED:
            continue
        b = t.box
        tlbr = ", ".join(_f(v) for v in (b.x_tl, b.y_tl, b.x_br, b.y_br))
        parts.append(f'{{"id": {t.id}, "tlbr": [{tlbr}], "class": {t.class_id}, "status": "{t.status.value}"}}')
    ran = "true" if result.detector_ran else "false"
    return f'{{"frame": {result.frame_index}, "detector_ran": {ran}, "tracks": [{", ".join(parts)}]}}'


def parse_track_record(line: str) -> FrameResult:
    rec = json.loads(line)
    tracks = [
        TrackOutput(int(t["id"]), BBox.from_array(t["tlbr"]), int(t["class"]), TrackStatus(t["status"]))
        for t in rec["tracks"]
    ]
    return FrameResult(int(rec["frame"]), tracks, bool(rec["detector_ran"]))


def format_command_record(frame: int, cmd: ControlCommand) -> str:
    return f'{{"frame": {frame}, "yaw": {_f(cmd.yaw_rate)}, "pitch": {_f(cmd.pitch_rate)}, "roll": {_f(cmd.roll_rate)}}}'


def parse_command_record(line: str) -> tuple[int, ControlCommand]:
    rec = json.loads(line)
    return int(rec["frame"]), ControlCommand(float(rec["yaw"]), float(rec["roll"]), float(rec["pitch"]))


def select_target(tracks: Sequence[TrackOutput], current_id: int | None) -> TrackOutput | None:
    """Keep following ``current_id`` while it is confirmed, else the oldest confirmed track."""
    confirmed = [t for t in tracks if t.status is TrackStatus.CONFIRMED]
    for t in confirmed:
        if t.id == current_id:
            return t
    return min(confirmed, key=lambda t: t.id) if confirmed else None


@dataclass
class StreamController:
    """Consumer side of the tracker socket: one command per track record."""

    gains: PIDGains
    frame_w: float
    frame_h: float
    ref_area: float
    dt: float
    state: ControllerState = ControllerState()
    target_id: int | None = None

    def on_frame(self, result: FrameResult) -> ControlCommand:
        target = select_target(result.tracks, self.target_id)
        if target is None:
            self.target_id = None
            self.state = ControllerState()
            return ControlCommand()
        if target.id != self.target_id:
            self.state = ControllerState()
            self.target_id = target.id
        err = compute_errors(target.box, self.frame_w, self.frame_h, self.ref_area)
        cmd, self.state = pid_step(err, self.state, self.gains, self.dt)
        return cmd

    def run(self, lines: Iterable[str]) -> Iterator[str]:
        for line in lines:
            if not line.strip():
                continue
            result = parse_track_record(line)
            yield format_command_record(result.frame_index, self.on_frame(result))


class TrackStreamWriter:
    """Writes track records to any text stream (stdout, a file, or a socket file)."""

    def __init__(self, out: IO[str]):
        self.out = out

    def write(self, result: FrameResult) -> None:
        self.out.write(format_track_record(result) + "\n")
        self.out.flush()


def connect_track_stream(address: str | tuple[str, int]) -> TrackStreamWriter:
    """Open a writer on a local stream socket: a filesystem path (AF_UNIX) or ``(host, port)``."""
    if isinstance(address, str):
        sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        sock.connect(address)
    else:
        sock = socket.create_connection(address)
    return TrackStreamWriter(sock.makefile("w", encoding="utf-8", newline="\n"))
