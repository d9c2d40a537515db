"""Line-oriented persistence for each server's half of the split credential.

One JSON object per line, UTF-8, LF-terminated. ``v`` and ``p`` travel as
decimal strings so the integers survive the trip exactly; ``alpha`` rides
as a plain JSON number, whose shortest-repr rendering round-trips a
float64 bit for bit. A store file belongs to exactly one server process;
within the process all mutations funnel through one lock.

The issued-token table lives here too. It is memory-only on purpose:
tokens are short-lived bearer secrets and there is nothing to gain from
writing them to disk.
"""

from __future__ import annotations

import json
import math
import os
import re
import secrets
import threading
from dataclasses import dataclass
from pathlib import Path

_USERNAME_RE = re.compile(r"[A-Za-z0-9_.\-]{1,64}")

TOKEN_OK = "ok"
TOKEN_INVALID = "invalid"
TOKEN_EXPIRED = "expired"


def valid_username(user: object) -> bool:
    """Usernames are 1-64 chars from [A-Za-z0-9_.-], safe on the wire and in files."""
    return isinstance(user, str) and _USERNAME_RE.fullmatch(user) is not None


class DuplicateUser(Exception):
    """Insert of a username that is already registered."""


class CorruptStoreFile(Exception):
    """Store file failed validation; ``line`` is the 1-based offender."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


def _require_number(value: object, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{what} must be a real number")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{what} must be finite")
    return value


def _require_int(value: object, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{what} must be an integer")
    return value


@dataclass(frozen=True)
class AuthServerRecord:
    """The public server's half: just the scalar alpha."""

    user: str
    alpha: float

    def __post_init__(self) -> None:
        if not valid_username(self.user):
            raise ValueError(f"invalid username {self.user!r}")
        object.__setattr__(self, "alpha", _require_number(self.alpha, "alpha"))


@dataclass(frozen=True)
class BackendRecord:
    """The hidden server's half: exact side difference and side product."""

    user: str
    v: int
    p: int

    def __post_init__(self) -> None:
        if not valid_username(self.user):
            raise ValueError(f"invalid username {self.user!r}")
        if _require_int(self.v, "v") == 0:
            raise ValueError("v must be nonzero")
        if _require_int(self.p, "p") <= 0:
            raise ValueError("p must be positive")


# Canonical decimal integers only; no sign-less zeros, no leading zeros.
_DECIMAL_RE = re.compile(r"-?(?:0|[1-9][0-9]*)")


def _decimal_int(value: object, what: str) -> int:
    if not isinstance(value, str) or _DECIMAL_RE.fullmatch(value) is None:
        raise ValueError(f"{what} must be a canonical decimal integer string")
    return int(value)


class _LineStore:
    """In-memory username map, optionally mirrored to a JSON-lines file.

    ``put`` appends; ``delete`` (used only for registration rollback)
    rewrites the snapshot atomically via a temp file.
    """

    def __init__(self, path: str | os.PathLike | None = None):
        self._records: dict[str, object] = {}
        self._path = Path(path) if path is not None else None
        self._lock = threading.Lock()

    # subclasses provide these
    @staticmethod
    def _record_to_obj(record) -> dict:
        raise NotImplementedError

    @staticmethod
    def _record_from_obj(obj: dict):
        raise NotImplementedError

    @classmethod
    def load(cls, path: str | os.PathLike):
        """Read a store file; a missing file is an empty store."""
        store = cls(path)
        file_path = Path(path)
        if not file_path.exists():
            return store
        with file_path.open("r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n").rstrip("\r")
                try:
                    obj = json.loads(line)
                except ValueError:
                    raise CorruptStoreFile(lineno, "invalid JSON") from None
                if not isinstance(obj, dict):
                    raise CorruptStoreFile(lineno, "not a JSON object")
                try:
                    record = cls._record_from_obj(obj)
                except ValueError as exc:
                    raise CorruptStoreFile(lineno, str(exc)) from None
                if record.user in store._records:
                    raise CorruptStoreFile(lineno, f"duplicate username {record.user!r}")
                store._records[record.user] = record
        return store

    def save(self, path: str | os.PathLike | None = None) -> None:
        """Write a full snapshot (temp file then rename)."""
        target = Path(path) if path is not None else self._path
        if target is None:
            raise ValueError("store has no path")
        with self._lock:
            self._write_snapshot(target)

    def _write_snapshot(self, target: Path) -> None:
        tmp = target.with_name(target.name + ".tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            for record in self._records.values():
                fh.write(json.dumps(self._record_to_obj(record)) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)

    def put(self, record) -> None:
        """Insert a new record; durably appended when the store is file-backed."""
        with self._lock:
            if record.user in self._records:
                raise DuplicateUser(record.user)
            self._records[record.user] = record
            if self._path is not None:
                with self._path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(self._record_to_obj(record)) + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())

    def get(self, user: str):
        """The stored record, or None; absence is a value, not an error."""
        return self._records.get(user)

    def delete(self, user: str) -> None:
        with self._lock:
            self._records.pop(user, None)
            if self._path is not None:
                self._write_snapshot(self._path)

    def users(self) -> list[str]:
        return list(self._records)

    def __len__(self) -> int:
        return len(self._records)


class AuthServerStore(_LineStore):
    """(user, alpha) records; never holds v, p or anything password-shaped."""

    @staticmethod
    def _record_to_obj(record: AuthServerRecord) -> dict:
        return {"user": record.user, "alpha": record.alpha}

    @staticmethod
    def _record_from_obj(obj: dict) -> AuthServerRecord:
        if set(obj) != {"user", "alpha"}:
            raise ValueError("expected exactly the fields 'user' and 'alpha'")
        if not isinstance(obj["user"], str):
            raise ValueError("user must be a string")
        return AuthServerRecord(obj["user"], _require_number(obj["alpha"], "alpha"))


class BackendStore(_LineStore):
    """(user, v, p) records; never holds alpha or anything password-shaped."""

    @staticmethod
    def _record_to_obj(record: BackendRecord) -> dict:
        return {"user": record.user, "v": str(record.v), "p": str(record.p)}

    @staticmethod
    def _record_from_obj(obj: dict) -> BackendRecord:
        if set(obj) != {"user", "v", "p"}:
            raise ValueError("expected exactly the fields 'user', 'v' and 'p'")
        if not isinstance(obj["user"], str):
            raise ValueError("user must be a string")
        return BackendRecord(obj["user"],
                             _decimal_int(obj["v"], "v"),
                             _decimal_int(obj["p"], "p"))


@dataclass(frozen=True)
class IssuedToken:
    """A live bearer token: 32 lowercase hex chars (128 random bits)."""

    token: str
    user: str
    expires_at: float


class TokenTable:
    """In-memory table of issued tokens with lazy expiry."""

    def __init__(self):
        self._tokens: dict[str, IssuedToken] = {}
        self._lock = threading.Lock()

    def issue(self, user: str, ttl: float, now: float) -> IssuedToken:
        if ttl <= 0:
            raise ValueError("ttl must be positive")
        with self._lock:
            self._purge(now)
            while True:
                value = secrets.token_hex(16)
                if value not in self._tokens:
                    break
            issued = IssuedToken(value, user, now + ttl)
            self._tokens[value] = issued
            return issued

    def status(self, user: str, token: str, now: float) -> str:
        """TOKEN_OK, TOKEN_INVALID (unknown or wrong user) or TOKEN_EXPIRED."""
        with self._lock:
            issued = self._tokens.get(token)
            if issued is None or issued.user != user:
                return TOKEN_INVALID
            if now >= issued.expires_at:
                del self._tokens[token]
                return TOKEN_EXPIRED
            return TOKEN_OK

    def _purge(self, now: float) -> None:
        dead = [t for t, rec in self._tokens.items() if now >= rec.expires_at]
        for t in dead:
            del self._tokens[t]

    def __len__(self) -> int:
        return len(self._tokens)
