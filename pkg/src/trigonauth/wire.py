"""Newline-delimited JSON codec for both protocol links.

Every message is exactly one LF-terminated UTF-8 line of at most 64 KiB.
Decoding is strict: unknown type, missing field, extra field, wrong JSON
type, a non-canonical integer string or a non-finite number all raise
MalformedMessage. The decoder never guesses, and it never raises anything
else, no matter what bytes arrive.

Exact integers (``v``, ``p``) travel as decimal strings; floats travel as
JSON numbers, which round-trip bit for bit through repr.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Union

MAX_LINE_BYTES = 64 * 1024

ERROR_CODES = frozenset({
    "UNKNOWN_USER",
    "DUPLICATE_USER",
    "AUTH_FAILED",
    "BAD_REQUEST",
    "DEGENERATE_PASSWORD",
    "TOKEN_INVALID",
    "TOKEN_EXPIRED",
    "BACKEND_UNAVAILABLE",
})


class MalformedMessage(ValueError):
    """The input line is not a valid protocol message."""


# client -> public server
@dataclass(frozen=True)
class RegisterRequest:
    user: str
    password: str


@dataclass(frozen=True)
class LoginRequest:
    user: str
    password: str


@dataclass(frozen=True)
class AccessRequest:
    user: str
    token: str


# public server -> client
@dataclass(frozen=True)
class Registered:
    user: str


@dataclass(frozen=True)
class TokenIssued:
    user: str
    token: str
    expires_unix: float


@dataclass(frozen=True)
class Deny:
    warning: str


@dataclass(frozen=True)
class Granted:
    resource: str


@dataclass(frozen=True)
class ErrorReply:
    code: str
    message: str


# public server -> backend
@dataclass(frozen=True)
class StoreRequest:
    user: str
    v: int
    p: int


@dataclass(frozen=True)
class AuthRequest:
    user: str
    alpha: float


# backend -> public server
@dataclass(frozen=True)
class StoreOk:
    user: str


@dataclass(frozen=True)
class AuthResponse:
    user: str
    a_t: float


Message = Union[
    RegisterRequest, LoginRequest, AccessRequest,
    Registered, TokenIssued, Deny, Granted, ErrorReply,
    StoreRequest, AuthRequest, StoreOk, AuthResponse,
]

# field kinds: "str" | "number" | "int_str" | "error_code"
_SCHEMAS: dict[str, tuple[type, tuple[tuple[str, str], ...]]] = {
    "register": (RegisterRequest, (("user", "str"), ("password", "str"))),
    "login": (LoginRequest, (("user", "str"), ("password", "str"))),
    "access": (AccessRequest, (("user", "str"), ("token", "str"))),
    "registered": (Registered, (("user", "str"),)),
    "token": (TokenIssued, (("user", "str"), ("token", "str"),
                            ("expires_unix", "number"))),
    "deny": (Deny, (("warning", "str"),)),
    "granted": (Granted, (("resource", "str"),)),
    "error": (ErrorReply, (("code", "error_code"), ("message", "str"))),
    "store": (StoreRequest, (("user", "str"), ("v", "int_str"), ("p", "int_str"))),
    "auth_req": (AuthRequest, (("user", "str"), ("alpha", "number"))),
    "store_ok": (StoreOk, (("user", "str"),)),
    "auth_resp": (AuthResponse, (("user", "str"), ("a_t", "number"))),
}

_TAG_BY_CLASS = {cls: (tag, fieldspec) for tag, (cls, fieldspec) in _SCHEMAS.items()}

_DECIMAL_RE = re.compile(r"-?(?:0|[1-9][0-9]*)")


def _parse_str(name: str, value: object) -> str:
    if not isinstance(value, str):
        raise MalformedMessage(f"field {name!r} must be a string")
    return value


def _parse_number(name: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedMessage(f"field {name!r} must be a number")
    try:
        value = float(value)
    except OverflowError:
        raise MalformedMessage(f"field {name!r} does not fit a float64") from None
    if not math.isfinite(value):
        raise MalformedMessage(f"field {name!r} must be finite")
    return value


def _parse_int_str(name: str, value: object) -> int:
    if not isinstance(value, str) or _DECIMAL_RE.fullmatch(value) is None:
        raise MalformedMessage(f"field {name!r} must be a canonical decimal string")
    return int(value)


def _parse_error_code(name: str, value: object) -> str:
    if not isinstance(value, str) or value not in ERROR_CODES:
        raise MalformedMessage(f"field {name!r} is not a known error code")
    return value


_FIELD_PARSERS = {
    "str": _parse_str,
    "number": _parse_number,
    "int_str": _parse_int_str,
    "error_code": _parse_error_code,
}


def encode(message: Message) -> bytes:
    """Serialise a message as one LF-terminated UTF-8 line."""
    try:
        tag, fieldspec = _TAG_BY_CLASS[type(message)]
    except KeyError:
        raise TypeError(f"not a protocol message: {message!r}") from None
    obj: dict[str, object] = {"type": tag}
    for name, kind in fieldspec:
        value = getattr(message, name)
        obj[name] = str(value) if kind == "int_str" else value
    return json.dumps(obj, allow_nan=False, separators=(",", ":")).encode("utf-8") + b"\n"


def _reject_constant(name: str):
    raise MalformedMessage(f"non-finite number {name!r}")


def decode(line: bytes) -> Message:
    """Parse one line into a message, or raise MalformedMessage.

    Accepts the line with or without its trailing newline. Never raises
    anything but MalformedMessage (and TypeError for non-bytes input).
    """
    if not isinstance(line, (bytes, bytearray)):
        raise TypeError("decode expects bytes")
    if line.endswith(b"\n"):
        line = line[:-1]
    if line.endswith(b"\r"):
        line = line[:-1]
    if len(line) > MAX_LINE_BYTES:
        raise MalformedMessage("line exceeds 64 KiB")
    try:
        text = bytes(line).decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedMessage("line is not valid UTF-8") from None
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except MalformedMessage:
        raise
    except (ValueError, RecursionError) as exc:
        raise MalformedMessage(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedMessage("top level is not a JSON object")
    tag = obj.get("type")
    if not isinstance(tag, str) or tag not in _SCHEMAS:
        raise MalformedMessage(f"unknown message type {tag!r}")
    cls, fieldspec = _SCHEMAS[tag]
    expected = {"type"} | {name for name, _ in fieldspec}
    if set(obj) != expected:
        missing = expected - set(obj)
        extra = set(obj) - expected
        raise MalformedMessage(
            f"field mismatch for {tag!r}: missing {sorted(missing)}, extra {sorted(extra)}")
    kwargs = {name: _FIELD_PARSERS[kind](name, obj[name]) for name, kind in fieldspec}
    return cls(**kwargs)
