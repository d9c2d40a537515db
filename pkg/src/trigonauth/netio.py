"""Socket plumbing for the line protocol.

One request line yields exactly one response line; a connection may be
reused for further sequential exchanges. The server side is a plain
threaded TCP server dispatching through a handler callable, with an
optional peer-address allowlist.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
from typing import Callable, Iterable, Optional

from .wire import MAX_LINE_BYTES, ErrorReply, MalformedMessage, Message, decode, encode

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0


class TransportError(Exception):
    """Connection, timeout or framing failure below the message layer."""


def parse_hostport(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ValueError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def read_line(fp) -> Optional[bytes]:
    """One LF-terminated line from a binary stream; None at EOF.

    Raises MalformedMessage when a line blows the 64 KiB cap; framing is
    lost at that point, so callers must drop the connection.
    """
    line = fp.readline(MAX_LINE_BYTES + 1)
    if not line:
        return None
    if not line.endswith(b"\n") and len(line) > MAX_LINE_BYTES:
        raise MalformedMessage("line exceeds 64 KiB")
    return line


def exchange_raw(addr: tuple[str, int], line: bytes,
                 timeout: float = DEFAULT_TIMEOUT) -> bytes:
    """Send one raw line, return the raw reply line. No codec involved."""
    try:
        with socket.create_connection(addr, timeout=timeout) as sock:
            sock.sendall(line)
            with sock.makefile("rb") as fp:
                reply = read_line(fp)
    except OSError as exc:
        raise TransportError(str(exc)) from exc
    if reply is None:
        raise TransportError("connection closed before reply")
    return reply


def request(addr: tuple[str, int], message: Message,
            timeout: float = DEFAULT_TIMEOUT) -> Message:
    """Send one message, read one reply message."""
    try:
        return decode(exchange_raw(addr, encode(message), timeout))
    except MalformedMessage as exc:
        # a peer that breaks the codec contract is indistinguishable from
        # a broken link
        raise TransportError(f"malformed reply: {exc}") from exc


class MessageServer(socketserver.ThreadingTCPServer):
    """Threaded line-protocol server; one thread per connection."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, addr: tuple[str, int],
                 handler: Callable[[Message], Message],
                 allow_hosts: Optional[Iterable[str]] = None):
        self.handler = handler
        self.allow_hosts = frozenset(allow_hosts) if allow_hosts else None
        super().__init__(addr, _Connection)

    @property
    def bound_address(self) -> tuple[str, int]:
        name = self.socket.getsockname()
        return name[0], name[1]


class _Connection(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        server: MessageServer = self.server  # type: ignore[assignment]
        peer = self.client_address[0]
        if server.allow_hosts is not None and peer not in server.allow_hosts:
            log.warning("rejected connection from %s", peer)
            return
        while True:
            try:
                line = read_line(self.rfile)
            except MalformedMessage:
                self._reply(ErrorReply("BAD_REQUEST", "line exceeds 64 KiB"))
                return
            except OSError:
                return
            if line is None:
                return
            try:
                message = decode(line)
            except MalformedMessage as exc:
                self._reply(ErrorReply("BAD_REQUEST", f"malformed message: {exc}"))
                continue
            try:
                response = server.handler(message)
            except Exception:
                log.exception("handler failed for %s", type(message).__name__)
                return
            if not self._reply(response):
                return

    def _reply(self, message: Message) -> bool:
        try:
            self.wfile.write(encode(message))
            self.wfile.flush()
            return True
        except OSError:
            return False


def start_server(addr: tuple[str, int], handler: Callable[[Message], Message],
                 allow_hosts: Optional[Iterable[str]] = None,
                 ) -> tuple[MessageServer, threading.Thread]:
    """Bind, start serving on a daemon thread, return (server, thread)."""
    server = MessageServer(addr, handler, allow_hosts)
    thread = threading.Thread(target=lambda: server.serve_forever(poll_interval=0.05),
                              name=f"message-server-{server.bound_address[1]}",
                              daemon=True)
    thread.start()
    return server, thread
