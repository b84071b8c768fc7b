"""
Canales de transporte entre el extremo de visión y el del robot

Los dos extremos solo intercambian bytes codificados con wire_service,
tanto en proceso (LocalChannel) como por TCP (TcpChannel + servidor).
"""

import logging
import socket
import socketserver
import threading
from typing import List, Optional, Protocol, Tuple

from app.entities.orchestrator.schemas.enums import EndpointStateEnum
from app.entities.orchestrator.schemas.wire_schemas import PickRequest, Reject, Status, WireMessage
from app.entities.orchestrator.services.endpoint_service import RobotEndpoint
from app.entities.orchestrator.services.wire_service import (
    decode_message,
    decode_stream,
    encode_message,
    encode_stream,
)
from app.shared.exceptions import MalformedMessageError


logger = logging.getLogger(__name__)


class Channel(Protocol):
    def exchange(self, request: PickRequest) -> List[WireMessage]:
        """Envía un PickRequest y devuelve las respuestas hasta el Status incluido."""
        ...

    def close(self) -> None:
        ...


# ==================== EN PROCESO ====================

class LocalChannel:
    """
    Canal en memoria: mismo codec que el TCP, sin sockets.

    Ejemplo:
        channel = LocalChannel(RobotEndpoint(RobotConfig(), TrajectoryConfig()))
        ack, status = channel.exchange(request)
    """

    def __init__(self, endpoint: RobotEndpoint):
        self.endpoint = endpoint
        self.bytes_sent = 0
        self.bytes_received = 0

    def exchange(self, request: PickRequest) -> List[WireMessage]:
        payload = encode_message(request)
        self.bytes_sent += len(payload)
        reply = self.endpoint.handle_bytes(payload)
        self.bytes_received += len(reply)
        return decode_stream(reply)

    def close(self) -> None:
        pass


# ==================== TCP ====================

class TcpChannel:
    """
    Cliente TCP de líneas JSON contra un servidor de serve_robot_endpoint.

    Ejemplo:
        with TcpChannel("127.0.0.1", 7070) as channel:
            replies = channel.exchange(request)
    """

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self.address = (host, int(port))
        self._socket = socket.create_connection(self.address, timeout=timeout)
        self._reader = self._socket.makefile("rb")
        logger.info("Conectado al robot en %s:%d", host, port)

    def exchange(self, request: PickRequest) -> List[WireMessage]:
        self._socket.sendall(encode_message(request))
        replies: List[WireMessage] = []
        while True:
            line = self._reader.readline()
            if not line:
                raise MalformedMessageError("conexión cerrada antes del Status", payload=b"")
            if not line.strip():
                continue
            message = decode_message(line)
            replies.append(message)
            if isinstance(message, Status):
                return replies

    def close(self) -> None:
        try:
            self._reader.close()
        finally:
            self._socket.close()

    def __enter__(self) -> "TcpChannel":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class _EndpointHandler(socketserver.StreamRequestHandler):
    """Una conexión: cada línea recibida produce su respuesta completa."""

    def handle(self) -> None:
        endpoint: RobotEndpoint = self.server.endpoint
        for line in self.rfile:
            if not line.strip():
                continue
            try:
                reply = endpoint.handle_bytes(line)
            except MalformedMessageError as e:
                logger.warning("Mensaje descartado de %s: %s", self.client_address, e.message)
                reply = encode_stream([
                    Reject(item_id="", reason="malformed"),
                    Status(robot_state=EndpointStateEnum.IDLE, busy_until_s=endpoint.busy_until),
                ])
            self.wfile.write(reply)
            self.wfile.flush()


class RobotEndpointServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: Tuple[str, int], endpoint: RobotEndpoint):
        self.endpoint = endpoint
        super().__init__(address, _EndpointHandler)

    @property
    def port(self) -> int:
        return self.server_address[1]


def serve_robot_endpoint(endpoint: RobotEndpoint, host: str, port: int,
                         background: bool = False) -> RobotEndpointServer:
    """
    Arranca el servidor del extremo robot.

    Con background=True sirve en un hilo daemon y retorna de inmediato
    (port=0 elige un puerto libre); si no, bloquea hasta shutdown().
    """
    server = RobotEndpointServer((host, port), endpoint)
    logger.info("Extremo robot escuchando en %s:%d", host, server.port)
    if background:
        thread = threading.Thread(target=server.serve_forever, name="robot-endpoint", daemon=True)
        thread.start()
    else:
        server.serve_forever()
    return server


def open_channel(endpoint: Optional[RobotEndpoint], connect: Optional[str] = None,
                 timeout: float = 5.0) -> Channel:
    """Canal local si no hay dirección; si no, TCP contra host:port."""
    if connect is None:
        if endpoint is None:
            raise ValueError("Se necesita un endpoint para el canal local")
        return LocalChannel(endpoint)
    host, _, port = connect.rpartition(":")
    return TcpChannel(host or "127.0.0.1", int(port), timeout)
