"""Arithmetic in small Galois fields GF(p^a).

Elements are plain integers in ``[0, q)``.  The integer encodes the
coefficients of the residue polynomial in base p: the element
``c_0 + c_1 x + ... + c_{a-1} x^{a-1}`` has index
``c_0 + c_1 p + ... + c_{a-1} p^{a-1}``, i.e. the polynomial evaluated at
p over the integers.  For prime fields (a = 1) the index is the residue
itself and arithmetic is plain modular arithmetic.

Extension fields reduce products modulo a fixed irreducible polynomial.
The moduli are Conway polynomials, one per supported prime power:

    GF(4)  : x^2 + x + 1
    GF(8)  : x^3 + x + 1
    GF(9)  : x^2 + 2x + 2
    GF(16) : x^4 + x + 1
    GF(25) : x^2 + 4x + 2
    GF(27) : x^3 + 2x + 1
    GF(32) : x^5 + x^2 + 1
    GF(49) : x^2 + 6x + 3
    GF(64) : x^6 + x^4 + x^3 + x + 1

Any irreducible modulus would give an isomorphic field; fixing one table
keeps every structure built on top of these fields reproducible byte for
byte.  Each table entry is re-checked by the brute-force irreducibility
test in :func:`verify_field`, so a transcription error cannot survive the
test suite.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError, UnsupportedFieldError


def _is_prime(k: int) -> bool:
    if k < 2:
        return False
    d = 2
    while d * d <= k:
        if k % d == 0:
            return False
        d += 1
    return True


# Coefficient tuples are little endian: entry i is the coefficient of x^i.
_CONWAY: dict[tuple[int, int], tuple[int, ...]] = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 1, 0, 1),
    (2, 4): (1, 1, 0, 0, 1),
    (2, 5): (1, 0, 1, 0, 0, 1),
    (2, 6): (1, 1, 0, 1, 1, 0, 1),
    (3, 2): (2, 2, 1),
    (3, 3): (1, 2, 0, 1),
    (5, 2): (2, 4, 1),
    (7, 2): (3, 6, 1),
}

SUPPORTED_ORDERS = frozenset(p for p in range(2, 65) if _is_prime(p)) | frozenset(
    p ** a for (p, a) in _CONWAY
)


@dataclass(frozen=True)
class PrimePower:
    """A field order q = p^a with p prime and a >= 1."""

    p: int
    a: int

    def __post_init__(self):
        if not _is_prime(self.p):
            raise UnsupportedFieldError(f"{self.p} is not prime")
        if self.a < 1:
            raise UnsupportedFieldError(f"extension degree must be positive, got {self.a}")

    @property
    def q(self) -> int:
        return self.p ** self.a

    @classmethod
    def from_order(cls, q: int) -> "PrimePower":
        if q < 2:
            raise UnsupportedFieldError(f"field order must be at least 2, got {q}")
        p = 2
        while p * p <= q:
            if q % p == 0:
                break
            p += 1
        else:
            return cls(q, 1)
        a = 0
        rest = q
        while rest % p == 0:
            rest //= p
            a += 1
        if rest != 1:
            raise UnsupportedFieldError(f"{q} is not a prime power")
        return cls(p, a)


def index_to_coeffs(index: int, p: int, a: int) -> tuple[int, ...]:
    """Base-p digits of ``index``, little endian, padded to length ``a``."""
    digits = []
    for _ in range(a):
        digits.append(index % p)
        index //= p
    return tuple(digits)


def coeffs_to_index(coeffs: tuple[int, ...], p: int) -> int:
    index = 0
    for c in reversed(coeffs):
        index = index * p + c
    return index


def _poly_mul(u: tuple[int, ...], v: tuple[int, ...], p: int) -> tuple[int, ...]:
    out = [0] * (len(u) + len(v) - 1)
    for i, ui in enumerate(u):
        if ui == 0:
            continue
        for j, vj in enumerate(v):
            out[i + j] = (out[i + j] + ui * vj) % p
    return tuple(out)


def _poly_rem(u: tuple[int, ...], modulus: tuple[int, ...], p: int) -> tuple[int, ...]:
    """Remainder of ``u`` modulo a monic ``modulus`` over F_p."""
    deg_m = len(modulus) - 1
    rem = list(u)
    for i in range(len(rem) - 1, deg_m - 1, -1):
        c = rem[i]
        if c == 0:
            continue
        rem[i] = 0
        for j in range(deg_m):
            rem[i - deg_m + j] = (rem[i - deg_m + j] - c * modulus[j]) % p
    return tuple(rem[:deg_m]) if deg_m > 0 else ()


def poly_mul_mod(u: tuple[int, ...], v: tuple[int, ...], modulus: tuple[int, ...], p: int) -> tuple[int, ...]:
    """Product of two residue polynomials, reduced modulo ``modulus``."""
    return _poly_rem(_poly_mul(u, v, p), modulus, p)


def is_irreducible(modulus: tuple[int, ...], p: int) -> bool:
    """Brute-force irreducibility over F_p.

    A monic polynomial of degree a is reducible iff it has a monic factor
    of degree between 1 and a // 2; for the orders supported here that is
    a tiny search.
    """
    a = len(modulus) - 1
    if a < 1 or modulus[-1] != 1:
        return False
    for d in range(1, a // 2 + 1):
        for lower in itertools.product(range(p), repeat=d):
            candidate = tuple(lower) + (1,)
            if not any(_poly_rem(modulus, candidate, p)):
                return False
    return True


class Field:
    """GF(p^a) for a supported order, operating on integer indices.

    Extension fields precompute full addition and multiplication tables
    (at most 64 x 64 entries), so per-operation cost is a lookup.  Prime
    fields skip the tables and use modular integer arithmetic directly.
    """

    def __init__(self, order: PrimePower, modulus: tuple[int, ...] | None = None):
        if order.q not in SUPPORTED_ORDERS:
            raise UnsupportedFieldError(
                f"unsupported field order {order.q}; supported orders are primes up to 64 "
                f"and the prime powers {sorted(p ** a for (p, a) in _CONWAY)}"
            )
        self.order = order
        self.p = order.p
        self.a = order.a
        self.q = order.q
        if modulus is None:
            modulus = (0, 1) if self.a == 1 else _CONWAY[(self.p, self.a)]
        modulus = tuple(int(c) for c in modulus)
        if len(modulus) != self.a + 1 or modulus[-1] != 1:
            raise DomainError(f"modulus must be monic of degree {self.a}")
        if any(not 0 <= c < self.p for c in modulus[:-1]):
            raise DomainError(f"modulus coefficients must lie in [0, {self.p})")
        self.modulus = modulus
        if self.a == 1:
            self._add_table = None
            self._mul_table = None
        else:
            self._add_table = self._build_table(self._poly_add)
            self._mul_table = self._build_table(self._poly_product)

    def _poly_add(self, x: int, y: int) -> int:
        cx = index_to_coeffs(x, self.p, self.a)
        cy = index_to_coeffs(y, self.p, self.a)
        return coeffs_to_index(tuple((u + v) % self.p for u, v in zip(cx, cy)), self.p)

    def _poly_product(self, x: int, y: int) -> int:
        cx = index_to_coeffs(x, self.p, self.a)
        cy = index_to_coeffs(y, self.p, self.a)
        prod = poly_mul_mod(cx, cy, self.modulus, self.p)
        padded = tuple(prod) + (0,) * (self.a - len(prod))
        return coeffs_to_index(padded, self.p)

    def _build_table(self, op) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(op(x, y) for y in range(self.q)) for x in range(self.q))

    def _check(self, x: int) -> int:
        if not 0 <= x < self.q:
            raise DomainError(f"element index {x} out of range for GF({self.q})")
        return x

    def add(self, x: int, y: int) -> int:
        self._check(x)
        self._check(y)
        if self._add_table is None:
            return (x + y) % self.p
        return self._add_table[x][y]

    def mul(self, x: int, y: int) -> int:
        self._check(x)
        self._check(y)
        if self._mul_table is None:
            return (x * y) % self.p
        return self._mul_table[x][y]

    def neg(self, x: int) -> int:
        self._check(x)
        if self._add_table is None:
            return (-x) % self.p
        row = self._add_table[x]
        return row.index(0)

    def inv(self, x: int) -> int:
        self._check(x)
        if x == 0:
            raise DomainError("0 has no multiplicative inverse")
        if self._mul_table is None:
            return pow(x, self.p - 2, self.p)
        row = self._mul_table[x]
        try:
            return row.index(1)
        except ValueError:
            raise DomainError(f"{x} has no multiplicative inverse under this modulus") from None

    def coeffs(self, x: int) -> tuple[int, ...]:
        self._check(x)
        return index_to_coeffs(x, self.p, self.a)

    def from_coeffs(self, coeffs: tuple[int, ...]) -> int:
        if len(coeffs) != self.a or any(not 0 <= c < self.p for c in coeffs):
            raise DomainError(f"expected {self.a} coefficients in [0, {self.p})")
        return coeffs_to_index(tuple(coeffs), self.p)

    @property
    def elements(self) -> range:
        return range(self.q)

    def __repr__(self) -> str:
        return f"Field(GF({self.q}))"


@lru_cache(maxsize=None)
def field_for_order(q: int) -> Field:
    """The canonical GF(q) for a supported order (cached, immutable)."""
    return Field(PrimePower.from_order(q))


@dataclass(frozen=True)
class FieldReport:
    """Outcome of :func:`verify_field`: pass flag plus failure descriptions."""

    passed: bool
    failures: tuple[str, ...]


def verify_field(field: Field, triple_samples: int = 4000) -> FieldReport:
    """Check the field axioms and the modulus directly on a Field instance.

    Pairwise properties (commutativity, identities, inverses) are checked
    over all q^2 pairs.  Three-element properties (associativity,
    distributivity) are exhaustive for q <= 16 and use a seeded random
    sample of triples for larger q.
    """
    failures: list[str] = []
    q, p, a = field.q, field.p, field.a

    if len(field.modulus) != a + 1 or field.modulus[-1] != 1:
        failures.append(f"modulus {field.modulus} is not monic of degree {a}")
    elif not is_irreducible(field.modulus, p):
        failures.append(f"modulus {field.modulus} is reducible over F_{p}")

    for x in range(q):
        if field.add(x, 0) != x:
            failures.append(f"0 is not an additive identity at {x}")
            break
    for x in range(q):
        if field.mul(x, 1) != x:
            failures.append(f"1 is not a multiplicative identity at {x}")
            break

    for x in range(q):
        if not any(field.add(x, y) == 0 for y in range(q)):
            failures.append(f"{x} has no additive inverse")
            break
    for x in range(1, q):
        if not any(field.mul(x, y) == 1 for y in range(q)):
            failures.append(f"{x} has no multiplicative inverse")
            break

    commutative = True
    for x in range(q):
        for y in range(x + 1, q):
            if field.add(x, y) != field.add(y, x):
                failures.append(f"addition is not commutative at ({x}, {y})")
                commutative = False
                break
            if field.mul(x, y) != field.mul(y, x):
                failures.append(f"multiplication is not commutative at ({x}, {y})")
                commutative = False
                break
        if not commutative:
            break

    if q <= 16:
        triples = itertools.product(range(q), repeat=3)
    else:
        rng = random.Random(0x5EED * q)
        triples = ((rng.randrange(q), rng.randrange(q), rng.randrange(q)) for _ in range(triple_samples))
    for x, y, z in triples:
        if field.add(field.add(x, y), z) != field.add(x, field.add(y, z)):
            failures.append(f"addition is not associative at ({x}, {y}, {z})")
            break
        if field.mul(field.mul(x, y), z) != field.mul(x, field.mul(y, z)):
            failures.append(f"multiplication is not associative at ({x}, {y}, {z})")
            break
        if field.mul(x, field.add(y, z)) != field.add(field.mul(x, y), field.mul(x, z)):
            failures.append(f"distributivity fails at ({x}, {y}, {z})")
            break

    return FieldReport(passed=not failures, failures=tuple(failures))
