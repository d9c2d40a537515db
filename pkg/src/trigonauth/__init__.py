"""Dual-server password authentication with a triangle-angle digest.

The password digests to an angle; registration splits the resulting
triangle parameters into two halves held by two different servers, and
only the two of them together can check a login. ``core`` holds the
math, ``store`` the per-server persistence, ``wire`` the line codec,
``auth_server``/``backend_server`` the two daemons, ``client`` the user
CLI and ``attacks`` the security experiment harness.
"""

from .core import (
    AngleConvention,
    AuthIndex,
    AuthToken,
    DegeneratePassword,
    DigitStringTooShort,
    EmptyOrShortPassword,
    NonPrintableCharacter,
    PasswordIndex,
    SidesEqual,
    TrigonCredential,
    ascii_digits,
    auth_index,
    auth_token,
    derive_credential,
    fold_digits,
    generate_prime_pair,
    is_probable_prime,
    password_index,
    verify,
)

__version__ = "0.1.0"

__all__ = [
    "AngleConvention",
    "AuthIndex",
    "AuthToken",
    "DegeneratePassword",
    "DigitStringTooShort",
    "EmptyOrShortPassword",
    "NonPrintableCharacter",
    "PasswordIndex",
    "SidesEqual",
    "TrigonCredential",
    "ascii_digits",
    "auth_index",
    "auth_token",
    "derive_credential",
    "fold_digits",
    "generate_prime_pair",
    "is_probable_prime",
    "password_index",
    "verify",
    "__version__",
]
