import random
import socket
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from trigonauth.auth_server import AuthService, LoopbackBackendLink, TcpBackendLink
from trigonauth.backend_server import BackendService
from trigonauth.core import AngleConvention
from trigonauth.netio import MessageServer, start_server
from trigonauth.store import AuthServerStore, BackendStore


class FakeClock:
    def __init__(self, start: float = 1_000_000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


@dataclass
class Stack:
    """An in-process deployment: both services wired through the codec."""

    auth: AuthService
    backend: BackendService
    as_store: AuthServerStore
    bs_store: BackendStore
    as_path: Path
    bs_path: Path
    clock: FakeClock


def make_stack(tmp_path: Path, convention=AngleConvention.INTERIOR, seed=101,
               epsilon=1e-9, token_ttl=300.0, prime_bits=20) -> Stack:
    as_path = tmp_path / "as-store.jsonl"
    bs_path = tmp_path / "bs-store.jsonl"
    as_store = AuthServerStore(as_path)
    bs_store = BackendStore(bs_path)
    backend = BackendService(bs_store)
    clock = FakeClock()
    auth = AuthService(
        as_store,
        LoopbackBackendLink(backend),
        convention=convention,
        epsilon=epsilon,
        token_ttl=token_ttl,
        prime_bits=prime_bits,
        rng=random.Random(seed),
        clock=clock,
    )
    return Stack(auth, backend, as_store, bs_store, as_path, bs_path, clock)


@pytest.fixture
def stack(tmp_path):
    return make_stack(tmp_path)


@dataclass
class TcpStack:
    """A socket deployment on loopback: both servers on ephemeral ports."""

    as_addr: tuple
    bs_addr: tuple
    auth: AuthService
    backend: BackendService
    as_store: AuthServerStore
    bs_store: BackendStore
    as_path: Path
    bs_path: Path
    servers: list = field(default_factory=list)

    def shutdown(self):
        for server in self.servers:
            server.shutdown()
            server.server_close()


def make_tcp_stack(tmp_path: Path, convention=AngleConvention.INTERIOR, seed=202,
                   epsilon=1e-9, token_ttl=300.0, prime_bits=20,
                   bs_addr_override=None) -> TcpStack:
    as_path = tmp_path / "as-store.jsonl"
    bs_path = tmp_path / "bs-store.jsonl"
    as_store = AuthServerStore(as_path)
    bs_store = BackendStore(bs_path)
    backend = BackendService(bs_store)
    bs_server, _ = start_server(("127.0.0.1", 0), backend.handle)
    bs_addr = bs_server.bound_address
    link_addr = bs_addr_override if bs_addr_override is not None else bs_addr
    auth = AuthService(
        as_store,
        TcpBackendLink(link_addr, timeout=5.0),
        convention=convention,
        epsilon=epsilon,
        token_ttl=token_ttl,
        prime_bits=prime_bits,
        rng=random.Random(seed),
    )
    as_server, _ = start_server(("127.0.0.1", 0), auth.handle)
    return TcpStack(as_server.bound_address, bs_addr, auth, backend,
                    as_store, bs_store, as_path, bs_path, [as_server, bs_server])


@pytest.fixture
def tcp_stack(tmp_path):
    stack = make_tcp_stack(tmp_path)
    yield stack
    stack.shutdown()


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def wait_listening(addr, timeout=10.0) -> None:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            with socket.create_connection(addr, timeout=0.5):
                return
        except OSError:
            time.sleep(0.05)
    raise TimeoutError(f"nothing listening on {addr}")
