import socket

import pytest

from app.entities.orchestrator.schemas.enums import EndpointStateEnum
from app.entities.orchestrator.schemas.wire_schemas import Ack, PickRequest, Reject, Status
from app.entities.orchestrator.services.channel_service import (
    LocalChannel,
    TcpChannel,
    open_channel,
    serve_robot_endpoint,
)
from app.entities.orchestrator.services.endpoint_service import RobotEndpoint, pick_point_from_request
from app.entities.orchestrator.services.wire_service import (
    decode_message,
    decode_stream,
    encode_message,
    encode_stream,
)
from app.shared.exceptions import EXIT_INPUT_ERROR, MalformedMessageError


T_CROSS = 2000.0 / 350.0


def request(item_id="trk-0001", t_pick=T_CROSS, y0=400.0, t0=None):
    """Orden cuyo objeto cruza el eje del robot justo en t_pick (salvo t0 explícito)."""
    t0 = t_pick - T_CROSS if t0 is None else t0
    return PickRequest(item_id=item_id, x0_mm=0.0, y0_mm=y0, w_mm=80.0, h_mm=60.0,
                       v_mm_s=350.0, t0_stamp_s=t0, t_pick_s=t_pick)


@pytest.fixture
def endpoint(robot_config, trajectory_config):
    return RobotEndpoint(robot_config, trajectory_config)


@pytest.mark.unit
class TestWireCodec:
    def test_ack_is_one_json_line(self):
        assert encode_message(Ack(item_id="trk-0001")) == b'{"type":"ack","item_id":"trk-0001"}\n'

    def test_decode_picks_type(self):
        messages = decode_stream(encode_stream([
            request(), Ack(item_id="a"), Reject(item_id="b", reason="late"),
            Status(robot_state=EndpointStateEnum.BUSY, busy_until_s=3.5),
        ]))
        assert [type(m) for m in messages] == [PickRequest, Ack, Reject, Status]
        assert messages[0] == request()

    def test_unknown_fields_are_ignored(self):
        message = decode_message(b'{"type": "ack", "item_id": "x", "extra": 1}')
        assert message == Ack(item_id="x")

    def test_status_state_on_the_wire(self):
        line = encode_message(Status(robot_state=EndpointStateEnum.IDLE, busy_until_s=0.0))
        assert line == b'{"type":"status","robot_state":"Idle","busy_until_s":0.0}\n'
        assert decode_message(line).robot_state is EndpointStateEnum.IDLE

    def test_unknown_robot_state(self):
        with pytest.raises(MalformedMessageError) as exc:
            decode_message(b'{"type": "status", "robot_state": "Sleeping", "busy_until_s": 0}')
        assert "robot_state" in exc.value.details["reason"]

    def test_missing_field(self):
        payload = b'{"type": "pick_request", "item_id": "trk-0001", "x0_mm": 0, "y0_mm": 0, ' \
                  b'"w_mm": 1, "h_mm": 1, "v_mm_s": 350, "t0_stamp_s": 0}'
        with pytest.raises(MalformedMessageError) as exc:
            decode_message(payload)
        assert "t_pick_s" in exc.value.details["reason"]
        assert exc.value.exit_code == EXIT_INPUT_ERROR

    @pytest.mark.parametrize("payload", [b"", b"not json", b'{"type": "launch"}', b'[1, 2]'])
    def test_malformed(self, payload):
        with pytest.raises(MalformedMessageError):
            decode_message(payload)


@pytest.mark.unit
class TestRobotEndpoint:
    def test_pick_point_in_robot_frame(self, robot_config):
        point = pick_point_from_request(request(y0=430.0), robot_config)
        assert point == pytest.approx((0.0, 30.0, -900.0))

    def test_accepts_and_reports_busy(self, endpoint):
        reply, status = endpoint.handle(request())
        assert reply == Ack(item_id="trk-0001")
        assert status.robot_state is EndpointStateEnum.BUSY
        assert status.busy_until_s == pytest.approx(T_CROSS + 1.6)
        assert endpoint.acks == 1

    def test_rejects_overlap(self, endpoint):
        endpoint.handle(request(t_pick=10.0))
        reply, status = endpoint.handle(request(item_id="trk-0002", t_pick=12.0))
        assert reply == Reject(item_id="trk-0002", reason="overlap")
        assert status.busy_until_s == pytest.approx(11.6)

    def test_back_to_back_is_not_overlap(self, endpoint):
        endpoint.handle(request(t_pick=10.0))
        reply, _ = endpoint.handle(request(item_id="trk-0002", t_pick=12.6))
        assert isinstance(reply, Ack)

    def test_rejects_late(self, endpoint):
        reply, _ = endpoint.handle(request(t_pick=0.5, t0=0.0))
        assert reply.reason == "late"

    def test_rejects_unreachable(self, endpoint):
        reply, status = endpoint.handle(request(y0=2400.0))
        assert reply.reason == "unreachable"
        assert endpoint.rejects == 1
        assert status.busy_until_s == 0.0

    def test_only_pick_requests_are_served(self, endpoint):
        with pytest.raises(MalformedMessageError):
            endpoint.handle_bytes(encode_message(Ack(item_id="x")))


@pytest.mark.unit
class TestLocalChannel:
    def test_exchange_goes_through_codec(self, endpoint):
        channel = LocalChannel(endpoint)
        replies = channel.exchange(request())
        assert [type(r) for r in replies] == [Ack, Status]
        assert channel.bytes_sent == len(encode_message(request()))
        assert channel.bytes_received > 0

    def test_open_channel_defaults_to_local(self, endpoint):
        assert isinstance(open_channel(endpoint), LocalChannel)
        with pytest.raises(ValueError):
            open_channel(None)


@pytest.mark.integration
class TestTcpChannel:
    @pytest.fixture
    def server(self, endpoint):
        server = serve_robot_endpoint(endpoint, "127.0.0.1", 0, background=True)
        yield server
        server.shutdown()
        server.server_close()

    def test_same_answers_as_local(self, server, robot_config, trajectory_config):
        local = LocalChannel(RobotEndpoint(robot_config, trajectory_config))
        with TcpChannel("127.0.0.1", server.port) as remote:
            for req in (request(), request(item_id="trk-0002", t_pick=T_CROSS + 0.5), request(item_id="trk-0003", t_pick=20.0)):
                assert remote.exchange(req) == local.exchange(req)

    def test_malformed_line_gets_reject(self, server):
        with socket.create_connection(("127.0.0.1", server.port), timeout=5.0) as sock:
            sock.sendall(b'{"type": "pick_request"}\n')
            reader = sock.makefile("rb")
            reply = decode_message(reader.readline())
            status = decode_message(reader.readline())
        assert reply == Reject(item_id="", reason="malformed")
        assert isinstance(status, Status)

    def test_open_channel_by_address(self, server):
        channel = open_channel(None, f"127.0.0.1:{server.port}")
        try:
            assert isinstance(channel, TcpChannel)
            assert isinstance(channel.exchange(request())[0], Ack)
        finally:
            channel.close()
