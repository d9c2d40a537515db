"""The public-facing authentication server.

Registration digests the password into its angle, rolls two fresh prime
sides, keeps ``alpha`` locally and hands ``(v, p)`` to the backend; the
two halves are useless apart. Login recomputes the angle from the
password submitted now, fetches the backend's scalar for the stored
``alpha`` and accepts through the half-angle check, minting a short-lived
bearer token on success. Failures of any authentication kind produce one
fixed warning line, so an outsider cannot tell a wrong password from an
unknown username.

The cleartext password never leaves this process and is never stored;
after registration returns, the only password-derived value here is
``alpha``.
"""

from __future__ import annotations

import argparse
import logging
import random
import threading
import time

from . import core, wire
from .core import AngleConvention
from .netio import TransportError, parse_hostport, request, start_server
from .store import AuthServerRecord, AuthServerStore, TOKEN_EXPIRED, TOKEN_OK, TokenTable, valid_username

log = logging.getLogger(__name__)

WARNING_TEXT = "WARNING: invalid credentials; access to VO denied"
RESOURCE_STRING = "vo://grid/compute-slot"
DEFAULT_TOKEN_TTL = 300.0
DEFAULT_BACKEND_TIMEOUT = 10.0
DEFAULT_MAX_BACKEND_INFLIGHT = 16


class TcpBackendLink:
    """Per-request TCP connection to the backend, capped in flight."""

    def __init__(self, addr: tuple[str, int],
                 timeout: float = DEFAULT_BACKEND_TIMEOUT,
                 max_inflight: int = DEFAULT_MAX_BACKEND_INFLIGHT):
        self._addr = addr
        self._timeout = timeout
        self._slots = threading.BoundedSemaphore(max_inflight)

    def call(self, message: wire.Message) -> wire.Message:
        with self._slots:
            return request(self._addr, message, timeout=self._timeout)


class LoopbackBackendLink:
    """In-process link that still round-trips every message through the codec."""

    def __init__(self, service):
        self._service = service

    def call(self, message: wire.Message) -> wire.Message:
        response = self._service.handle(wire.decode(wire.encode(message)))
        return wire.decode(wire.encode(response))


class AuthService:
    """Transport-agnostic request handlers for the public server role.

    The config attributes (``convention``, ``prime_bits``, ``epsilon``,
    ``token_ttl``) are plain attributes and may be adjusted between
    requests; store and token mutations serialize through internal locks.
    """

    def __init__(self, store: AuthServerStore, backend, *,
                 convention: AngleConvention = AngleConvention.INTERIOR,
                 prime_bits: int = core.DEFAULT_PRIME_BITS,
                 epsilon: float = core.DEFAULT_EPSILON,
                 token_ttl: float = DEFAULT_TOKEN_TTL,
                 rng: random.Random | None = None,
                 clock=time.time):
        self._store = store
        self._backend = backend
        self.convention = convention
        self.prime_bits = prime_bits
        self.epsilon = epsilon
        self.token_ttl = token_ttl
        self._rng = rng if rng is not None else random.Random()
        self._clock = clock
        self._tokens = TokenTable()
        self._write_lock = threading.Lock()

    def handle(self, message: wire.Message) -> wire.Message:
        if isinstance(message, wire.RegisterRequest):
            return self.register(message.user, message.password)
        if isinstance(message, wire.LoginRequest):
            return self.login(message.user, message.password)
        if isinstance(message, wire.AccessRequest):
            return self.access(message.user, message.token)
        return wire.ErrorReply("BAD_REQUEST", "unexpected message type")

    def register(self, user: str, password: str) -> wire.Message:
        """Create the split credential, atomically across both servers.

        The local alpha record is rolled back if the backend does not
        confirm, so no partial registration survives a backend failure.
        """
        if not valid_username(user):
            return wire.ErrorReply("BAD_REQUEST", "invalid username")
        try:
            index = core.password_index(password)
        except ValueError:
            return wire.ErrorReply("DEGENERATE_PASSWORD",
                                   "password does not digest to a usable angle")
        with self._write_lock:
            if self._store.get(user) is not None:
                return wire.ErrorReply("DUPLICATE_USER", "username already registered")
            a, a_prime = core.generate_prime_pair(self.prime_bits, self._rng)
            credential = core.derive_credential(a, a_prime, index, self.convention)
            self._store.put(AuthServerRecord(user, credential.alpha))
            try:
                reply = self._backend.call(
                    wire.StoreRequest(user, credential.v, credential.p))
            except TransportError:
                self._store.delete(user)
                return wire.ErrorReply("BACKEND_UNAVAILABLE", "backend store failed")
            if isinstance(reply, wire.StoreOk) and reply.user == user:
                return wire.Registered(user)
            self._store.delete(user)
            if isinstance(reply, wire.ErrorReply):
                return reply
            return wire.ErrorReply("BACKEND_UNAVAILABLE", "unexpected backend reply")

    def login(self, user: str, password: str) -> wire.Message:
        """Dual-server check; on success a fresh bearer token.

        Every authentication failure, unknown username included, returns
        the byte-identical deny line. Backend trouble is different: that
        is infrastructure, not authentication, and surfaces as
        BACKEND_UNAVAILABLE.
        """
        deny = wire.Deny(WARNING_TEXT)
        try:
            index = core.password_index(password)
        except ValueError:
            return deny
        record = self._store.get(user) if valid_username(user) else None
        if record is None:
            return deny
        try:
            reply = self._backend.call(wire.AuthRequest(user, record.alpha))
        except TransportError:
            return wire.ErrorReply("BACKEND_UNAVAILABLE", "backend auth failed")
        if isinstance(reply, wire.ErrorReply) and reply.code == "UNKNOWN_USER":
            # stores out of sync; indistinguishable from bad credentials
            return deny
        if not isinstance(reply, wire.AuthResponse) or reply.user != user:
            return wire.ErrorReply("BACKEND_UNAVAILABLE", "unexpected backend reply")
        accepted = core.verify(core.auth_index(index), core.AuthToken(reply.a_t),
                               self.convention, self.epsilon)
        if not accepted:
            return deny
        issued = self._tokens.issue(user, self.token_ttl, self._clock())
        return wire.TokenIssued(user, issued.token, issued.expires_at)

    def access(self, user: str, token: str) -> wire.Message:
        """Grant the resource while the token lives; reuse until expiry is fine."""
        status = self._tokens.status(user, token, self._clock())
        if status == TOKEN_OK:
            return wire.Granted(RESOURCE_STRING)
        if status == TOKEN_EXPIRED:
            return wire.ErrorReply("TOKEN_EXPIRED", "token has expired")
        return wire.ErrorReply("TOKEN_INVALID", "token not recognised")


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="trigon-as",
        description="Public authentication server (holds the alpha half).")
    parser.add_argument("--listen", required=True, metavar="HOST:PORT")
    parser.add_argument("--bs", required=True, metavar="HOST:PORT",
                        help="address of the backend server")
    parser.add_argument("--store", required=True, metavar="PATH",
                        help="JSON-lines store file; created if missing")
    parser.add_argument("--convention", choices=["interior", "supplement"],
                        default="interior")
    parser.add_argument("--prime-bits", type=int, default=core.DEFAULT_PRIME_BITS,
                        metavar="N", help="bit length of each prime side (16-31)")
    parser.add_argument("--epsilon", type=float, default=core.DEFAULT_EPSILON,
                        metavar="E", help="verification tolerance")
    parser.add_argument("--token-ttl", type=float, default=DEFAULT_TOKEN_TTL,
                        metavar="SECONDS")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed prime generation (reproducible registrations)")
    args = parser.parse_args(argv)
    if not core.MIN_PRIME_BITS <= args.prime_bits <= core.MAX_PRIME_BITS:
        parser.error(f"--prime-bits must be in [{core.MIN_PRIME_BITS}, {core.MAX_PRIME_BITS}]")
    if args.epsilon <= 0:
        parser.error("--epsilon must be positive")
    if args.token_ttl <= 0:
        parser.error("--token-ttl must be positive")

    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    store = AuthServerStore.load(args.store)
    service = AuthService(
        store,
        TcpBackendLink(parse_hostport(args.bs)),
        convention=AngleConvention(args.convention),
        prime_bits=args.prime_bits,
        epsilon=args.epsilon,
        token_ttl=args.token_ttl,
        rng=random.Random(args.seed),
    )
    server, _ = start_server(parse_hostport(args.listen), service.handle)
    host, port = server.bound_address
    log.info("auth server listening on %s:%s (%d users, %s convention)",
             host, port, len(store), args.convention)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()


if __name__ == "__main__":
    main()
