"""Live frame ingest over UDP datagrams, a TCP line stream or stdin.

A session collects canonical keypoint JSON lines in arrival order. Every
accepted frame yields angle CSV rows computed over a sliding window; when the
stream stays idle for ``idle_timeout`` seconds the session closes and the
accepted lines are analysed by the same code path as a batch file, so the two
reports agree.
"""

from __future__ import annotations

import json
import logging
import socket
import sys
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .errors import ConfigError, GaitkitError
from .ingest import normalize_axes, parse_keypoint_json
from .kinematics import angle_series
from .pipeline import RunConfig, analyze_sequence

logger = logging.getLogger(__name__)

MAX_DATAGRAM = 65536


@dataclass
class StreamSession:
    config: RunConfig = field(default_factory=RunConfig)
    meta_line: str | None = None
    lines: list = field(default_factory=list)
    received: int = 0
    dropped: int = 0
    _pending: bytes = b""
    _last_t: float | None = None
    _dims: int | None = None

    def __post_init__(self):
        self._window = deque(maxlen=max(2, self.config.stream_window))
        self._options = self.config.schema_options(self.config.axes)

    @property
    def accepted(self) -> int:
        return len(self.lines)

    def _header(self) -> str:
        return (self.meta_line + "\n") if self.meta_line else ""

    def feed(self, data: bytes, final: bool = False) -> list[str]:
        """Consume raw bytes; a trailing partial line waits for more data."""
        self._pending += data
        *complete, self._pending = self._pending.split(b"\n")
        if final and self._pending:
            complete.append(self._pending)
            self._pending = b""
        rows = []
        for raw in complete:
            rows.extend(self.feed_line(raw))
        return rows

    def feed_datagram(self, data: bytes) -> list[str]:
        """A datagram holds whole lines only."""
        rows = []
        for raw in data.split(b"\n"):
            rows.extend(self.feed_line(raw))
        return rows

    def feed_line(self, raw: bytes | str) -> list[str]:
        """Validate one line; accepted frames return their angle CSV rows."""
        try:
            line = (raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw).strip()
        except UnicodeDecodeError:
            self.received += 1
            self.dropped += 1
            return []
        if not line:
            return []
        self.received += 1
        try:
            obj = json.loads(line)
            if isinstance(obj, dict) and "meta" in obj:
                if self.lines:
                    raise ValueError("meta after first frame")
                parse_keypoint_json(line, self._options)
                self.meta_line = line
                self.received -= 1
                return []
            frame = parse_keypoint_json(self._header() + line, self._options)
        except (GaitkitError, ValueError, TypeError) as exc:
            logger.debug("dropping frame: %s", exc)
            self.dropped += 1
            return []
        if frame.n_frames != 1 or (self._dims is not None and frame.dims != self._dims):
            self.dropped += 1
            return []
        t = float(frame.times[0])
        # without explicit timestamps t comes from the frame index
        if self._last_t is not None and not t > self._last_t:
            self.dropped += 1
            return []
        self._dims = frame.dims
        self._last_t = t
        self.lines.append(line)
        self._window.append(line)
        return self._angle_rows()

    def _angle_rows(self) -> list[str]:
        try:
            window = parse_keypoint_json(self._header() + "\n".join(self._window), self._options)
            angles = angle_series(normalize_axes(window))
        except GaitkitError as exc:
            logger.debug("no angles for window: %s", exc)
            return []
        last = int(window.frame_index[-1])
        rows = angles.to_csv().splitlines()[1:]
        return [r for r in rows if r.split(",", 1)[0] == str(last)]

    def sequence(self):
        return parse_keypoint_json(self._header() + "\n".join(self.lines), self._options)

    def close(self) -> tuple[dict, dict] | None:
        """Full report for the session, or None when no frame was accepted."""
        if self._pending:
            self.feed(b"", final=True)
        if not self.lines:
            return None
        report, artifacts = analyze_sequence(self.sequence(), self.config)
        report["stream"] = {"received": self.received, "accepted": self.accepted, "dropped": self.dropped}
        return report, artifacts


ANGLE_HEADER = "frame,t,side,inv_ev_deg,dorsi_plantar_deg,ankle_deg"


def parse_endpoint(text: str) -> tuple[str, str, int]:
    """``[udp://|tcp://]host:port`` (UDP by default) or ``-`` for stdin."""
    if text == "-":
        return "stdin", "", 0
    proto = "udp"
    if "://" in text:
        proto, text = text.split("://", 1)
    if proto not in ("udp", "tcp"):
        raise ConfigError(f"unsupported transport {proto!r}")
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ConfigError(f"bad listen endpoint {text!r}; expected HOST:PORT")
    return proto, host or "127.0.0.1", int(port)


SessionHandler = Callable[[StreamSession, "tuple[dict, dict] | None"], None]
RowHandler = Callable[[str], None]


def _bind(proto: str, host: str, port: int) -> socket.socket:
    kind = socket.SOCK_DGRAM if proto == "udp" else socket.SOCK_STREAM
    sock = socket.socket(socket.AF_INET, kind)
    try:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, port))
        if proto == "tcp":
            sock.listen(1)
    except OSError as exc:
        sock.close()
        raise ConfigError(f"cannot bind {proto}://{host}:{port}: {exc}") from exc
    return sock


def serve(
    config: RunConfig,
    endpoint: str,
    on_row: RowHandler,
    on_close: SessionHandler,
    max_sessions: int = 0,
    ready: Callable[[tuple], None] | None = None,
) -> int:
    """Run sessions until ``max_sessions`` have closed (0 = forever).

    Returns the number of closed sessions. Idle periods with no frame at all
    count as empty sessions and are reported to ``on_close`` with ``None``.
    """
    proto, host, port = parse_endpoint(endpoint)
    if proto == "stdin":
        session = StreamSession(config)
        for raw in sys.stdin.buffer:
            for row in session.feed(raw):
                on_row(row)
        on_close(session, session.close())
        return 1

    sock = _bind(proto, host, port)
    if ready is not None:
        ready(sock.getsockname())
    closed = 0
    try:
        while not max_sessions or closed < max_sessions:
            session = StreamSession(config)
            if proto == "udp":
                _run_udp(sock, session, config.idle_timeout, on_row)
            else:
                _run_tcp(sock, session, config.idle_timeout, on_row)
            on_close(session, session.close())
            closed += 1
    finally:
        sock.close()
    return closed


def _run_udp(sock: socket.socket, session: StreamSession, timeout: float, on_row: RowHandler) -> None:
    sock.settimeout(timeout)
    while True:
        try:
            data, _ = sock.recvfrom(MAX_DATAGRAM)
        except socket.timeout:
            return
        for row in session.feed_datagram(data):
            on_row(row)


def _run_tcp(sock: socket.socket, session: StreamSession, timeout: float, on_row: RowHandler) -> None:
    sock.settimeout(timeout)
    try:
        conn, _ = sock.accept()
    except socket.timeout:
        return
    with conn:
        conn.settimeout(timeout)
        while True:
            try:
                data = conn.recv(MAX_DATAGRAM)
            except socket.timeout:
                break
            if not data:
                break
            for row in session.feed(data):
                on_row(row)
    session.feed(b"", final=True)
