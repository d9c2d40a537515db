"""Attack experiments against a running deployment or its stolen files.

Three scenarios, each emitting a single JSON report on stdout:

* ``stolen``  - offline dictionary confirmation from stolen store
  fragments. With one fragment there is no equation to test a candidate
  against, so confirmations are zero by construction; with both fragments
  the credential check runs offline and the true password falls.
* ``guess``   - online acceptance sampling with random passwords, cross
  checked against an offline recomputation of every trial's angle.
* ``replay``  - verbatim re-injection of captured protocol lines, on
  either link. Transcripts are taken at the codec layer (the harness is
  the client, or a recording tap between the two servers).

The point is measurement, not advocacy: where the scheme holds, the
numbers show it, and where it does not (a replayed client login line
mints a fresh token), the report flags the limitation explicitly.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import socket
import socketserver
import threading

from . import core, netio, wire
from .core import AngleConvention
from .store import AuthServerStore, BackendStore

DEFAULT_TIMEOUT = 10.0

FRAGMENT_NOTES = {
    "as": ("alpha alone is one equation in the two free unknowns v and p; "
           "every candidate angle stays consistent, so no candidate can be confirmed"),
    "bs": ("v and p alone carry no trace of the angle; "
           "there is nothing to test a candidate against"),
    "both": ("with both halves the scalar (alpha + v^2)/(2p) is computable offline "
             "and comparable against each candidate's angle"),
}


def _expected_scalar(password: str, convention: AngleConvention) -> float | None:
    """The scalar an honest backend would produce for this password, or None."""
    try:
        index = core.password_index(password)
    except ValueError:
        return None
    cosine = math.cos(math.radians(index.degrees))
    return cosine if convention is AngleConvention.INTERIOR else -cosine


def run_stolen_verifier(fragment: str, dictionary: list[str], user: str, *,
                        as_store: AuthServerStore | None = None,
                        bs_store: BackendStore | None = None,
                        convention: AngleConvention = AngleConvention.INTERIOR,
                        epsilon: float = core.DEFAULT_EPSILON) -> dict:
    """Offline dictionary attack holding only the named store fragment(s)."""
    if fragment not in FRAGMENT_NOTES:
        raise ValueError(f"unknown fragment {fragment!r}")
    alpha = None
    half = None
    if fragment in ("as", "both"):
        record = as_store.get(user) if as_store is not None else None
        alpha = record.alpha if record is not None else None
    if fragment in ("bs", "both"):
        half = bs_store.get(user) if bs_store is not None else None

    confirmed: list[str] = []
    if fragment == "both" and alpha is not None and half is not None:
        scalar = (alpha + half.v * half.v) / (2 * half.p)
        for candidate in dictionary:
            want = _expected_scalar(candidate, convention)
            if want is not None and abs(scalar - want) <= epsilon:
                confirmed.append(candidate)
    # "as" and "bs" fragments: no closed check exists, nothing to run per
    # candidate; the loop would compare against an unknown.

    return {
        "scenario": "stolen_verifier",
        "fragment": fragment,
        "user": user,
        "dictionary_size": len(dictionary),
        "confirmations": len(confirmed),
        "confirmed_passwords": confirmed,
        "note": FRAGMENT_NOTES[fragment],
    }


def random_password(rng: random.Random, min_len: int = 5, max_len: int = 8) -> str:
    return "".join(chr(rng.randrange(32, 127))
                   for _ in range(rng.randrange(min_len, max_len + 1)))


def _offline_accepts(true_password: str, trial: str,
                     convention: AngleConvention, epsilon: float) -> bool:
    """Mirror of the server's accept decision, recomputed from scratch."""
    want = _expected_scalar(true_password, convention)
    if want is None:
        return False
    try:
        index = core.password_index(trial)
    except ValueError:
        return False
    return core.verify(core.auth_index(index), core.AuthToken(want),
                       convention, epsilon)


def run_guessing(as_addr: tuple[str, int], user: str, trials: int, seed: int, *,
                 true_password: str | None = None,
                 convention: AngleConvention = AngleConvention.INTERIOR,
                 epsilon: float = core.DEFAULT_EPSILON,
                 timeout: float = DEFAULT_TIMEOUT) -> dict:
    """Online random-guess sampling; optional offline cross-check."""
    rng = random.Random(seed)
    passwords = [random_password(rng) for _ in range(trials)]
    online_accepts = 0
    accepted: list[str] = []
    for candidate in passwords:
        reply = netio.request(as_addr, wire.LoginRequest(user, candidate), timeout)
        if isinstance(reply, wire.TokenIssued):
            online_accepts += 1
            accepted.append(candidate)
        elif not isinstance(reply, wire.Deny):
            raise RuntimeError(f"unexpected reply during guessing: {reply!r}")
    report = {
        "scenario": "guessing",
        "user": user,
        "trials": trials,
        "seed": seed,
        "online_accepts": online_accepts,
        "acceptance_rate": online_accepts / trials if trials else 0.0,
        "accepted_passwords": accepted,
    }
    if true_password is not None:
        offline = sum(1 for candidate in passwords
                      if _offline_accepts(true_password, candidate,
                                          convention, epsilon))
        report["offline_collisions"] = offline
        report["online_matches_offline"] = (online_accepts == offline)
    return report


def _ensure_registered(as_addr: tuple[str, int], user: str, password: str,
                       timeout: float) -> str:
    reply = netio.request(as_addr, wire.RegisterRequest(user, password), timeout)
    if isinstance(reply, wire.Registered):
        return "registered"
    if isinstance(reply, wire.ErrorReply) and reply.code == "DUPLICATE_USER":
        return "already-registered"
    raise RuntimeError(f"could not register target account: {reply!r}")


def run_replay_client_as(as_addr: tuple[str, int], user: str, password: str, *,
                         timeout: float = DEFAULT_TIMEOUT) -> dict:
    """Capture one login line as the client, then re-inject it verbatim."""
    registration = _ensure_registered(as_addr, user, password, timeout)
    captured = wire.encode(wire.LoginRequest(user, password))
    first = wire.decode(netio.exchange_raw(as_addr, captured, timeout))
    replayed = wire.decode(netio.exchange_raw(as_addr, captured, timeout))
    replay_succeeded = isinstance(replayed, wire.TokenIssued)
    fresh_token = (replay_succeeded and isinstance(first, wire.TokenIssued)
                   and first.token != replayed.token)
    return {
        "scenario": "replay",
        "link": "client-as",
        "registration": registration,
        "replayed_message_type": "login",
        "first_reply_type": _tag(first),
        "replay_reply_type": _tag(replayed),
        "replay_succeeded": replay_succeeded,
        "fresh_token_on_replay": fresh_token,
        "limitation": ("LIMITATION: a captured login line replays successfully and "
                       "mints a fresh token; the password is static and the protocol "
                       "carries no nonce or channel binding on the client link"),
    }


def _tag(message: wire.Message) -> str:
    return type(message).__name__


class RecordingProxy:
    """Line-level tap between the public server and the backend.

    Point the public server's --bs at this proxy's listen address; every
    line is recorded verbatim and forwarded unmodified.
    """

    def __init__(self, listen_addr: tuple[str, int], upstream: tuple[str, int],
                 timeout: float = DEFAULT_TIMEOUT):
        self.upstream = upstream
        self.timeout = timeout
        self.records: list[tuple[str, bytes]] = []
        self._lock = threading.Lock()
        proxy = self

        class _Relay(socketserver.StreamRequestHandler):
            def handle(self):
                try:
                    with socket.create_connection(proxy.upstream,
                                                  timeout=proxy.timeout) as up:
                        up_fp = up.makefile("rb")
                        while True:
                            line = netio.read_line(self.rfile)
                            if line is None:
                                return
                            proxy.record("as->bs", line)
                            up.sendall(line)
                            reply = netio.read_line(up_fp)
                            if reply is None:
                                return
                            proxy.record("bs->as", reply)
                            self.wfile.write(reply)
                            self.wfile.flush()
                except OSError:
                    return

        class _Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._server = _Server(listen_addr, _Relay)
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True)

    @property
    def bound_address(self) -> tuple[str, int]:
        name = self._server.socket.getsockname()
        return name[0], name[1]

    def record(self, direction: str, line: bytes) -> None:
        with self._lock:
            self.records.append((direction, line))

    def captured(self, direction: str, message_type: str) -> list[bytes]:
        with self._lock:
            lines = [line for d, line in self.records if d == direction]
        out = []
        for line in lines:
            try:
                message = wire.decode(line)
            except wire.MalformedMessage:
                continue
            if _tag(message) == message_type:
                out.append(line)
        return out

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()


def run_replay_as_bs(as_addr: tuple[str, int], bs_addr: tuple[str, int],
                     proxy_listen: tuple[str, int], user: str, password: str, *,
                     timeout: float = DEFAULT_TIMEOUT) -> dict:
    """Record the server-to-server link through a tap, then replay against
    the backend directly.

    The public server must have been started with --bs pointing at
    ``proxy_listen``. The harness drives one registration and one login
    through it to populate the transcript.
    """
    proxy = RecordingProxy(proxy_listen, bs_addr, timeout)
    proxy.start()
    try:
        registration = _ensure_registered(as_addr, user, password, timeout)
        login_reply = netio.request(as_addr, wire.LoginRequest(user, password),
                                    timeout)
        if not isinstance(login_reply, wire.TokenIssued):
            raise RuntimeError(f"login did not succeed through the tap: {login_reply!r}")

        auth_lines = proxy.captured("as->bs", "AuthRequest")
        if not auth_lines:
            raise RuntimeError("no auth exchange captured on the tap")
        target = auth_lines[-1]
        replies = [wire.decode(netio.exchange_raw(bs_addr, target, timeout))
                   for _ in range(2)]
        scalars = [r.a_t for r in replies if isinstance(r, wire.AuthResponse)]

        store_result = None
        store_lines = proxy.captured("as->bs", "StoreRequest")
        if store_lines:
            store_reply = wire.decode(netio.exchange_raw(bs_addr, store_lines[-1],
                                                         timeout))
            store_result = _tag(store_reply)

        captured_types = sorted({_tag(wire.decode(line))
                                 for _, line in proxy.records})
    finally:
        proxy.stop()

    return {
        "scenario": "replay",
        "link": "as-bs",
        "registration": registration,
        "captured_message_types": captured_types,
        "auth_req_replays": len(replies),
        "a_t_values": scalars,
        "identical_a_t": len(set(scalars)) == 1 and len(scalars) == 2,
        "store_replay_reply": store_result,
        "replayer_learns": ("re-injection adds nothing beyond the already-captured "
                            "scalar a_t: the backend answers bit-identically and "
                            "mutates no store; turning a_t into an accepted login "
                            "still requires a password whose digest matches"),
    }


def _read_dictionary(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.rstrip("\n")]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="trigon-attack",
        description="Security experiments against the dual-server deployment.")
    sub = parser.add_subparsers(dest="scenario", required=True)

    stolen = sub.add_parser("stolen", help="offline dictionary attack on stolen stores")
    stolen.add_argument("--fragment", choices=["as", "bs", "both"], required=True)
    stolen.add_argument("--dict", dest="dict_path", required=True, metavar="PATH")
    stolen.add_argument("--user", required=True)
    stolen.add_argument("--as-store", default=None, metavar="PATH")
    stolen.add_argument("--bs-store", default=None, metavar="PATH")
    stolen.add_argument("--convention", choices=["interior", "supplement"],
                        default="interior")
    stolen.add_argument("--epsilon", type=float, default=core.DEFAULT_EPSILON)

    guess = sub.add_parser("guess", help="online random-guess sampling")
    guess.add_argument("--as", dest="as_addr", required=True, metavar="HOST:PORT")
    guess.add_argument("--user", required=True)
    guess.add_argument("--trials", type=int, required=True)
    guess.add_argument("--seed", type=int, required=True)
    guess.add_argument("--password", default=None,
                       help="target's true password, enables the offline cross-check")
    guess.add_argument("--convention", choices=["interior", "supplement"],
                       default="interior")
    guess.add_argument("--epsilon", type=float, default=core.DEFAULT_EPSILON)

    replay = sub.add_parser("replay", help="verbatim re-injection of captured lines")
    replay.add_argument("--link", choices=["client-as", "as-bs"], required=True)
    replay.add_argument("--as", dest="as_addr", required=True, metavar="HOST:PORT")
    replay.add_argument("--bs", dest="bs_addr", default=None, metavar="HOST:PORT",
                        help="real backend address (as-bs link)")
    replay.add_argument("--proxy", default=None, metavar="HOST:PORT",
                        help="tap address the public server was pointed at (as-bs link)")
    replay.add_argument("--user", required=True)
    replay.add_argument("--password", required=True)

    args = parser.parse_args(argv)

    try:
        report = _run_scenario(parser, args)
    except (netio.TransportError, RuntimeError, OSError) as exc:
        print(json.dumps({"error": "SCENARIO_FAILED", "message": str(exc)}))
        return 1
    print(json.dumps(report))
    return 0


def _run_scenario(parser, args) -> dict:
    if args.scenario == "stolen":
        if args.fragment in ("as", "both") and args.as_store is None:
            parser.error("--as-store is required for this fragment")
        if args.fragment in ("bs", "both") and args.bs_store is None:
            parser.error("--bs-store is required for this fragment")
        report = run_stolen_verifier(
            args.fragment,
            _read_dictionary(args.dict_path),
            args.user,
            as_store=AuthServerStore.load(args.as_store) if args.as_store else None,
            bs_store=BackendStore.load(args.bs_store) if args.bs_store else None,
            convention=AngleConvention(args.convention),
            epsilon=args.epsilon,
        )
    elif args.scenario == "guess":
        report = run_guessing(
            netio.parse_hostport(args.as_addr),
            args.user,
            args.trials,
            args.seed,
            true_password=args.password,
            convention=AngleConvention(args.convention),
            epsilon=args.epsilon,
        )
    else:
        if args.link == "client-as":
            report = run_replay_client_as(netio.parse_hostport(args.as_addr),
                                          args.user, args.password)
        else:
            if args.bs_addr is None or args.proxy is None:
                parser.error("--bs and --proxy are required for the as-bs link")
            report = run_replay_as_bs(netio.parse_hostport(args.as_addr),
                                      netio.parse_hostport(args.bs_addr),
                                      netio.parse_hostport(args.proxy),
                                      args.user, args.password)

    print(json.dumps(report))
    return 0


if __name__ == "__main__":
    main()
