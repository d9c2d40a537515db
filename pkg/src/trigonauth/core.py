"""Password-to-angle credential math for the dual-server login scheme.

A password is digested deterministically into an angle strictly between 0
and 180 degrees (the *password index*). At registration that angle is
placed between two freshly generated prime-length sides of a triangle,
and the triangle yields the split credential: the scalar ``alpha`` (kept
by the public authentication server) and the integer pair ``(v, p)``,
side difference and side product (kept by the hidden backend server).

At login the backend folds ``alpha`` back into its own half as

    a_t = (alpha + v**2) / (2 * p)

which algebraically equals plus or minus the cosine of the *registered*
angle. The public server accepts when the half-angle identity ties that
scalar to the angle of the password submitted now, so the check succeeds
exactly when the two angles agree. Neither half alone pins down the
angle: ``alpha`` is one equation in two free unknowns, and ``(v, p)``
says nothing about it.

Everything in this module is pure. All randomness comes in through an
explicit ``random.Random`` and angles are degrees at the API surface,
radians only inside the trig calls.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum

MIN_PASSWORD_LENGTH = 4
DEFAULT_EPSILON = 1e-9
DEFAULT_PRIME_BITS = 20
MIN_PRIME_BITS = 16
MAX_PRIME_BITS = 31  # keeps v*v, 2*p and alpha well inside float64 territory
MILLER_RABIN_ROUNDS = 40


class EmptyOrShortPassword(ValueError):
    """Password shorter than MIN_PASSWORD_LENGTH characters."""


class NonPrintableCharacter(ValueError):
    """Password contains a character outside printable ASCII [32, 126]."""


class DigitStringTooShort(ValueError):
    """Digit string carries fewer than 4 digits."""


class DegeneratePassword(ValueError):
    """Password digests to an angle outside the open interval (0, 180)."""


class SidesEqual(ValueError):
    """The two prime sides must differ; their difference is part of the credential."""


class AngleConvention(Enum):
    """Sign convention tying ``alpha`` to the password angle.

    INTERIOR treats the digest angle as the triangle's interior angle
    (``a_t = +cos``, sine half-angle check). SUPPLEMENT flips the cosine
    sign (``a_t = -cos``, cosine half-angle check). The two modes accept
    and reject identically; both ends of a deployment must simply agree
    on one.
    """

    INTERIOR = "interior"
    SUPPLEMENT = "supplement"


@dataclass(frozen=True)
class PasswordIndex:
    """Angle digest of a password, in degrees, strictly inside (0, 180)."""

    degrees: float

    def __post_init__(self) -> None:
        if not 0.0 < self.degrees < 180.0:
            raise DegeneratePassword(
                f"password index {self.degrees!r} outside the open interval (0, 180)")


@dataclass(frozen=True)
class AuthIndex:
    """Half the password index, in degrees; recomputed at every login."""

    degrees: float

    def __post_init__(self) -> None:
        if not 0.0 < self.degrees < 90.0:
            raise ValueError(f"auth index {self.degrees!r} outside the open interval (0, 90)")


@dataclass(frozen=True)
class AuthToken:
    """The backend's per-login scalar.

    For an honestly derived credential this equals plus or minus the
    cosine of the registered angle, so its magnitude stays within 1 up to
    rounding. Arbitrary inputs to the backend can produce anything, which
    is why the value is not range-checked here; verification simply fails
    for out-of-range tokens.
    """

    value: float


@dataclass(frozen=True)
class TrigonCredential:
    """Full registration-time parameter set.

    Only ``alpha`` (public server) and ``v, p`` (backend) outlive
    registration; the prime sides themselves are discarded afterwards.
    """

    a: int
    a_prime: int
    v: int
    p: int
    alpha: float
    convention: AngleConvention

    def __post_init__(self) -> None:
        if self.a == self.a_prime:
            raise SidesEqual("the two prime sides are equal")
        if self.v != self.a - self.a_prime:
            raise ValueError("v must equal a - a_prime exactly")
        if self.p != self.a * self.a_prime:
            raise ValueError("p must equal a * a_prime exactly")


def ascii_digits(password: str) -> str:
    """Concatenate the decimal ASCII code of every character.

    No padding: codes 32-99 contribute two digits, 100-126 three.
    """
    if len(password) < MIN_PASSWORD_LENGTH:
        raise EmptyOrShortPassword(
            f"password must be at least {MIN_PASSWORD_LENGTH} characters")
    for ch in password:
        if not 32 <= ord(ch) <= 126:
            raise NonPrintableCharacter(f"character {ch!r} outside printable ASCII")
    return "".join(str(ord(ch)) for ch in password)


def fold_digits(digits: str) -> int:
    """Fold a decimal digit string into the angle integer.

    The first three quarters of the digits (floor) are reduced modulo 180
    and rendered as exactly three zero-padded digits; the remaining
    quarter is appended verbatim. Parsing the whole thing back as an
    integer drops any leading zeros.
    """
    if not digits.isdigit():
        raise ValueError("expected a decimal digit string")
    if len(digits) < 4:
        raise DigitStringTooShort("need at least 4 digits")
    m = (3 * len(digits)) // 4
    head = int(digits[:m]) % 180
    return int(f"{head:03d}{digits[m:]}")


def _angle_from_fold(folded: int) -> float:
    digits = str(folded)
    n = len(digits)
    if n < 4:
        raise DegeneratePassword(f"angle integer {folded} has fewer than 4 digits")
    if int(digits[:3]) >= 180:
        return folded / 10 ** (n - 2)
    return folded / 10 ** (n - 3)


def password_index(password: str) -> PasswordIndex:
    """Digest a password into its angle. This value is the live secret."""
    return PasswordIndex(_angle_from_fold(fold_digits(ascii_digits(password))))


def auth_index(index: PasswordIndex) -> AuthIndex:
    """Halve the password index (exact in binary floating point)."""
    return AuthIndex(index.degrees / 2.0)


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_probable_prime(n: int, rounds: int = MILLER_RABIN_ROUNDS,
                      rng: random.Random | None = None) -> bool:
    """Miller-Rabin with ``rounds`` random bases.

    False-positive probability is at most 4**-rounds; 40 rounds is far
    beyond what these desk-scale primes need.
    """
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n % q == 0:
            return n == q
    draw = rng.randrange if rng is not None else random.randrange
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = draw(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime(bits: int, rng: random.Random) -> int:
    lo = 1 << (bits - 1)
    hi = 1 << bits
    while True:
        candidate = rng.randrange(lo, hi)
        if is_probable_prime(candidate, rng=rng):
            return candidate


def generate_prime_pair(bits: int, rng: random.Random) -> tuple[int, int]:
    """Two distinct probable primes drawn uniformly from [2**(bits-1), 2**bits).

    Deterministic for a given rng state; retries internally until the
    primes differ.
    """
    if not MIN_PRIME_BITS <= bits <= MAX_PRIME_BITS:
        raise ValueError(f"bits must be in [{MIN_PRIME_BITS}, {MAX_PRIME_BITS}]")
    first = _random_prime(bits, rng)
    while True:
        second = _random_prime(bits, rng)
        if second != first:
            return first, second


def derive_credential(a: int, a_prime: int, index: PasswordIndex,
                      convention: AngleConvention = AngleConvention.INTERIOR,
                      ) -> TrigonCredential:
    """Derive the split credential from two prime sides and the angle.

    ``alpha`` is computed directly as ``+/-2*p*cos(angle) - v**2``, which
    is what subtracting the squared third side from ``2*p`` comes out to
    under the law of cosines; the third side itself (an irrational square
    root) is never materialised.
    """
    if a == a_prime:
        raise SidesEqual("the two prime sides are equal")
    v = a - a_prime
    p = a * a_prime
    cos_angle = math.cos(math.radians(index.degrees))
    if convention is AngleConvention.INTERIOR:
        alpha = 2 * p * cos_angle - v * v
    else:
        alpha = -2 * p * cos_angle - v * v
    return TrigonCredential(a=a, a_prime=a_prime, v=v, p=p, alpha=alpha,
                            convention=convention)


def auth_token(alpha: float, v: int, p: int) -> AuthToken:
    """The backend's response scalar ``(alpha + v**2) / (2*p)``."""
    if p <= 0:
        raise ValueError("p must be positive")
    return AuthToken((alpha + v * v) / (2 * p))


def verify(index: AuthIndex, token: AuthToken,
           convention: AngleConvention = AngleConvention.INTERIOR,
           epsilon: float = DEFAULT_EPSILON) -> bool:
    """Accept iff the submitted password's half-angle matches the token.

    INTERIOR compares ``sin**2`` of the half-angle against
    ``(1 - a_t) / 2``; SUPPLEMENT compares ``cos**2`` against the same
    quantity. Either way the comparison collapses to equality of the
    registered and submitted password angles, within ``epsilon``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    half = math.radians(index.degrees)
    if convention is AngleConvention.INTERIOR:
        lhs = math.sin(half) ** 2
    else:
        lhs = math.cos(half) ** 2
    return abs(lhs - (1.0 - token.value) / 2.0) <= epsilon
