"""The hidden backend server.

Holds the (user, v, p) half of every credential and answers two requests:
store a new half at registration time, and fold a submitted ``alpha``
into the stored half at login time. It renders no accept/reject verdict
of its own; that judgement happens on the public server, so compromising
this process alone decides nothing.
"""

from __future__ import annotations

import argparse
import logging
import socket
import threading

from . import core, wire
from .netio import parse_hostport, start_server
from .store import BackendRecord, BackendStore, valid_username

log = logging.getLogger(__name__)


class BackendService:
    """Transport-agnostic request handlers for the backend role."""

    def __init__(self, store: BackendStore):
        self._store = store
        self._write_lock = threading.Lock()

    def handle(self, message: wire.Message) -> wire.Message:
        if isinstance(message, wire.StoreRequest):
            return self.store_credential(message.user, message.v, message.p)
        if isinstance(message, wire.AuthRequest):
            return self.answer_auth(message.user, message.alpha)
        return wire.ErrorReply("BAD_REQUEST", "unexpected message type")

    def store_credential(self, user: str, v: int, p: int) -> wire.Message:
        """Persist a credential half; idempotent only for identical values."""
        if not valid_username(user):
            return wire.ErrorReply("BAD_REQUEST", "invalid username")
        if p <= 0:
            return wire.ErrorReply("BAD_REQUEST", "p must be positive")
        if v == 0:
            return wire.ErrorReply("BAD_REQUEST", "v must be nonzero")
        with self._write_lock:
            existing = self._store.get(user)
            if existing is not None:
                if existing.v == v and existing.p == p:
                    return wire.StoreOk(user)
                return wire.ErrorReply("DUPLICATE_USER",
                                       "conflicting credential for username")
            self._store.put(BackendRecord(user, v, p))
        return wire.StoreOk(user)

    def answer_auth(self, user: str, alpha: float) -> wire.Message:
        """Compute (alpha + v**2) / (2*p) for the stored half.

        Pure given the store: the same (user, alpha) always produces the
        bit-identical scalar. The arithmetic result is forwarded
        unconditionally; plausibility of alpha is not this server's call.
        """
        record = self._store.get(user)
        if record is None:
            return wire.ErrorReply("UNKNOWN_USER", "username not registered")
        token = core.auth_token(alpha, record.v, record.p)
        return wire.AuthResponse(user, token.value)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="trigon-bs",
        description="Backend credential server (holds the v,p half).")
    parser.add_argument("--listen", required=True, metavar="HOST:PORT")
    parser.add_argument("--store", required=True, metavar="PATH",
                        help="JSON-lines store file; created if missing")
    parser.add_argument("--allow-as", metavar="HOST", default=None,
                        help="only accept connections from this host")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    store = BackendStore.load(args.store)
    service = BackendService(store)
    allow_hosts = None
    if args.allow_as is not None:
        allow_hosts = {socket.gethostbyname(args.allow_as)}
    server, _ = start_server(parse_hostport(args.listen), service.handle, allow_hosts)
    host, port = server.bound_address
    log.info("backend server listening on %s:%s (%d users)", host, port, len(store))
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()


if __name__ == "__main__":
    main()
