"""Command-line user agent: register, login, and token-bearing access.

Every invocation prints exactly one JSON object on stdout and exits 0 on
success, 1 when the server says no, 2 when the server cannot be reached.
The password is read from --password or prompted without echo; it is
never written to stdout, stderr or any file.
"""

from __future__ import annotations

import argparse
import getpass
import json
import sys

from . import wire
from .netio import TransportError, parse_hostport, request


def _emit(obj: dict) -> None:
    print(json.dumps(obj))


def _get_password(args) -> str:
    if args.password is not None:
        return args.password
    return getpass.getpass("password: ")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="trigon-client",
        description="User agent for the dual-server authentication service.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, password=False, token=False):
        p.add_argument("--as", dest="as_addr", required=True, metavar="HOST:PORT",
                       help="address of the authentication server")
        p.add_argument("--user", required=True)
        if password:
            p.add_argument("--password", default=None,
                           help="prompted without echo when omitted")
        if token:
            p.add_argument("--token", required=True)

    common(sub.add_parser("register", help="create an account"), password=True)
    common(sub.add_parser("login", help="authenticate and obtain a token"),
           password=True)
    common(sub.add_parser("access", help="use a token to reach the resource"),
           token=True)
    args = parser.parse_args(argv)

    addr = parse_hostport(args.as_addr)
    if args.command == "register":
        message = wire.RegisterRequest(args.user, _get_password(args))
    elif args.command == "login":
        message = wire.LoginRequest(args.user, _get_password(args))
    else:
        message = wire.AccessRequest(args.user, args.token)

    try:
        reply = request(addr, message)
    except TransportError as exc:
        _emit({"error": "CONNECT_FAILED", "message": str(exc)})
        return 2

    if args.command == "register" and isinstance(reply, wire.Registered):
        _emit({"registered": reply.user})
        return 0
    if args.command == "login" and isinstance(reply, wire.TokenIssued):
        _emit({"token": reply.token, "expires_unix": reply.expires_unix})
        return 0
    if args.command == "access" and isinstance(reply, wire.Granted):
        _emit({"resource": reply.resource})
        return 0
    if isinstance(reply, wire.Deny):
        _emit({"warning": reply.warning})
        return 1
    if isinstance(reply, wire.ErrorReply):
        _emit({"error": reply.code, "message": reply.message})
        return 1
    _emit({"error": "UNEXPECTED_RESPONSE", "message": type(reply).__name__})
    return 1


if __name__ == "__main__":
    sys.exit(main())
