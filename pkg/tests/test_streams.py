import socket
import threading

import pytest

from herdtrack.control import ChannelGains, ControlCommand, PIDGains
from herdtrack.geometry import BBox
from herdtrack.pipeline import FrameResult, TrackOutput, TrackStatus
from herdtrack.streams import (
    StreamController,
    TrackStreamWriter,
    format_command_record,
    format_track_record,
    parse_command_record,
    parse_track_record,
    select_target,
)


def result(frame=7, ran=True, tracks=()):
    return FrameResult(frame, list(tracks), ran)


def out(id, box, status=TrackStatus.CONFIRMED):
    return TrackOutput(id, box, 0, status)


def test_track_record_golden():
    r = result(tracks=[out(1, BBox(1, 2, 3.456, 4.0049)), out(3, BBox(-0.001, 0, 10, 10), TrackStatus.TENTATIVE)])
    assert format_track_record(r) == (
        '{"frame": 7, "detector_ran": true, "tracks": ['
        '{"id": 1, "tlbr": [1.00, 2.00, 3.46, 4.00], "class": 0, "status": "confirmed"}, '
        '{"id": 3, "tlbr": [0.00, 0.00, 10.00, 10.00], "class": 0, "status": "tentative"}]}'
    )


def test_empty_track_record_golden():
    assert format_track_record(result(2, False)) == '{"frame": 2, "detector_ran": false, "tracks": []}'


def test_deleted_tracks_never_serialised():
    r = result(tracks=[out(1, BBox(0, 0, 1, 1), TrackStatus.DELETED)])
    assert '"tracks": []' in format_track_record(r)


def test_command_record_golden():
    line = format_command_record(12, ControlCommand(yaw_rate=0.5, roll_rate=0.104, pitch_rate=-1.255))
    assert line == '{"frame": 12, "yaw": 0.50, "pitch": -1.25, "roll": 0.10}'
    assert format_command_record(1, ControlCommand(-0.001, 0, 0)) == '{"frame": 1, "yaw": 0.00, "pitch": 0.00, "roll": 0.00}'


def test_track_record_round_trip():
    r = result(9, True, [out(4, BBox(10.25, 20.5, 30.75, 40))])
    back = parse_track_record(format_track_record(r))
    assert back.frame_index == 9 and back.detector_ran
    assert back.tracks == [out(4, BBox(10.25, 20.5, 30.75, 40))]
    assert format_track_record(back) == format_track_record(r)


def test_command_record_round_trip():
    frame, cmd = parse_command_record(format_command_record(3, ControlCommand(1.5, -2.25, 0.75)))
    assert frame == 3 and cmd == ControlCommand(1.5, -2.25, 0.75)


def test_select_target_prefers_current_then_oldest_confirmed():
    a, b = out(2, BBox(0, 0, 1, 1)), out(5, BBox(0, 0, 1, 1))
    t = out(1, BBox(0, 0, 1, 1), TrackStatus.TENTATIVE)
    assert select_target([t, a, b], None) is a
    assert select_target([t, a, b], 5) is b
    assert select_target([t, a, b], 9) is a
    assert select_target([t], 1) is None


def make_controller():
    gains = PIDGains(yaw=ChannelGains(kp=0.1), roll=ChannelGains(kp=0.05), pitch=ChannelGains(kp=0.2))
    return StreamController(gains, 1280, 720, 1200.0, 1 / 30)


def test_controller_zero_command_without_target():
    c = make_controller()
    assert c.on_frame(result(tracks=[])) == ControlCommand()


def test_controller_over_socket():
    """Tracker writes records into one end of a socket pair; the controller answers per frame."""
    a, b = socket.socketpair()
    records = [
        result(1, True, []),
        result(2, False, [out(1, BBox(680, 345, 720, 375))]),  # dx = 60
        result(3, False, [out(1, BBox(560, 345, 600, 375))]),  # dx = -60
    ]

    def produce():
        with a.makefile("w", encoding="utf-8", newline="\n") as f:
            w = TrackStreamWriter(f)
            for r in records:
                w.write(r)
        a.close()

    th = threading.Thread(target=produce)
    th.start()
    with b.makefile("r", encoding="utf-8") as f:
        lines = list(make_controller().run(f))
    th.join()
    b.close()
    cmds = [parse_command_record(l) for l in lines]
    assert [f for f, _ in cmds] == [1, 2, 3]
    assert cmds[0][1] == ControlCommand()
    assert cmds[1][1].yaw_rate == pytest.approx(6.0) and cmds[1][1].roll_rate == pytest.approx(3.0)
    assert cmds[2][1].yaw_rate == pytest.approx(-6.0)
