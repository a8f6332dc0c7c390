"""Exact arithmetic with roots of unity at a fixed level, plus finite-field
embeddings used by all randomized verification.

A session fixes one level N (for the group pipelines N = p^e where p^e is the
group exponent).  Roots of unity are pairs (level, exponent); sums of roots
with rational coefficients live in `CycloNum`, a dense vector over the power
basis 1, z, ..., z^{phi(N)-1} of the N-th cyclotomic field (N a prime power).

Finite-field embeddings send z to an element of exact multiplicative order N
in F_q with q = 1 (mod N).  A nonzero residue under an embedding certifies
that the corresponding cyclotomic integer is nonzero in characteristic 0;
the converse direction is never assumed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction


class LevelMismatch(ValueError):
    """Root arithmetic attempted across different levels."""


class PrimeSearchExhausted(RuntimeError):
    """find_prime ran out of its search budget."""


@dataclass(frozen=True)
class Root:
    """The root of unity zeta_level^exp, with 0 <= exp < level."""

    level: int
    exp: int

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValueError(f"root level must be positive, got {self.level}")
        object.__setattr__(self, "exp", self.exp % self.level)

    def __mul__(self, other: "Root") -> "Root":
        if self.level != other.level:
            raise LevelMismatch(f"levels {self.level} != {other.level}")
        return Root(self.level, self.exp + other.exp)

    def __pow__(self, n: int) -> "Root":
        return Root(self.level, self.exp * n)

    def inv(self) -> "Root":
        return Root(self.level, -self.exp)

    def is_one(self) -> bool:
        return self.exp == 0

    def order(self) -> int:
        return self.level // math.gcd(self.level, self.exp)

    def at_level(self, level: int) -> "Root":
        """Rewrite at a multiple level: zeta_m^j = zeta_N^{j*(N/m)}."""
        if level % self.level != 0:
            raise LevelMismatch(f"{self.level} does not divide {level}")
        return Root(level, self.exp * (level // self.level))

    @staticmethod
    def of_order(level: int, order: int, exp: int = 1) -> "Root":
        """zeta_order^exp expressed at the given level (order must divide it)."""
        if level % order != 0:
            raise LevelMismatch(f"{order} does not divide level {level}")
        return Root(level, exp * (level // order))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"z{self.level}^{self.exp}"


def root_mul(a: Root, b: Root) -> Root:
    return a * b


def root_pow(a: Root, n: int) -> Root:
    return a**n


# ---------------------------------------------------------------------------
# cyclotomic numbers (prime-power level)


class CycloField:
    """The cyclotomic field of prime-power level N = p^e.

    Elements are integer vectors over the power basis with a common positive
    denominator; reduction uses the prime-power cyclotomic relation
    sum_{k=0}^{p-1} z^{k*p^(e-1)} = 0.
    """

    def __init__(self, p: int, e: int):
        if e < 0:
            raise ValueError("negative exponent")
        if e > 0 and not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.e = e
        self.level = p**e
        self.phi = 1 if e == 0 else (p - 1) * p ** (e - 1)
        self._root_vectors = [self._reduce_power(k) for k in range(self.level)]

    def _reduce_power(self, k: int) -> tuple[int, ...]:
        """Coordinates of z^k over the power basis."""
        vec = [0] * self.phi
        if k < self.phi:
            vec[k] = 1
            return tuple(vec)
        # k = (p-1) p^(e-1) + r with 0 <= r < p^(e-1)
        step = self.p ** (self.e - 1)
        r = k - (self.p - 1) * step
        for t in range(self.p - 1):
            vec[t * step + r] -= 1
        return tuple(vec)

    def zero(self) -> "CycloNum":
        return CycloNum(self, (0,) * self.phi, 1)

    def one(self) -> "CycloNum":
        return self.from_fraction(Fraction(1))

    def from_fraction(self, q: Fraction | int) -> "CycloNum":
        q = Fraction(q)
        vec = [0] * self.phi
        vec[0] = q.numerator
        return CycloNum(self, tuple(vec), q.denominator)

    def from_root(self, r: Root) -> "CycloNum":
        r = r.at_level(self.level)
        return CycloNum(self, self._root_vectors[r.exp], 1)

    def root_vector(self, exp: int) -> tuple[int, ...]:
        return self._root_vectors[exp % self.level]


@dataclass(frozen=True)
class CycloNum:
    """An element of a CycloField: nums / den over the power basis."""

    field: CycloField
    nums: tuple[int, ...]
    den: int

    def __post_init__(self) -> None:
        if self.den == 0:
            raise ZeroDivisionError("zero denominator")
        nums, den = self.nums, self.den
        if den < 0:
            nums, den = tuple(-x for x in nums), -den
        g = math.gcd(den, *[abs(x) for x in nums]) if any(nums) else den
        if g > 1:
            nums = tuple(x // g for x in nums)
            den //= g
        if not any(nums):
            den = 1
        object.__setattr__(self, "nums", nums)
        object.__setattr__(self, "den", den)

    def _binop(self, other: "CycloNum", sign: int) -> "CycloNum":
        if self.field is not other.field:
            raise LevelMismatch("cyclotomic numbers from different fields")
        d = self.den * other.den // math.gcd(self.den, other.den)
        a, b = d // self.den, d // other.den
        nums = tuple(x * a + sign * y * b for x, y in zip(self.nums, other.nums))
        return CycloNum(self.field, nums, d)

    def __add__(self, other: "CycloNum") -> "CycloNum":
        return self._binop(other, 1)

    def __sub__(self, other: "CycloNum") -> "CycloNum":
        return self._binop(other, -1)

    def __neg__(self) -> "CycloNum":
        return CycloNum(self.field, tuple(-x for x in self.nums), self.den)

    def __mul__(self, other: "CycloNum") -> "CycloNum":
        if self.field is not other.field:
            raise LevelMismatch("cyclotomic numbers from different fields")
        f = self.field
        conv = [0] * f.level
        for i, x in enumerate(self.nums):
            if x == 0:
                continue
            for j, y in enumerate(other.nums):
                if y:
                    conv[(i + j) % f.level] += x * y
        out = [0] * f.phi
        for k, c in enumerate(conv):
            if c:
                for t, v in enumerate(f.root_vector(k)):
                    if v:
                        out[t] += c * v
        return CycloNum(f, tuple(out), self.den * other.den)

    def scale(self, q: Fraction | int) -> "CycloNum":
        q = Fraction(q)
        return CycloNum(
            self.field,
            tuple(x * q.numerator for x in self.nums),
            self.den * q.denominator,
        )

    def is_zero(self) -> bool:
        return not any(self.nums)

    def as_root(self) -> Root | None:
        """Return the Root this element equals, or None if it is not one."""
        if self.den != 1:
            return None
        for k in range(self.field.level):
            if self.nums == self.field.root_vector(k):
                return Root(self.field.level, k)
        return None


# ---------------------------------------------------------------------------
# primes and embeddings

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def find_prime(N: int, bits: int, seed: int, budget: int = 10**6) -> int:
    """A prime q = 1 (mod N) with q >= 2^bits (smallest such when bits = 0).

    Deterministic given the seed; the seed only randomizes the search start
    when bits > 0.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if bits == 0:
        q = 2
        while True:
            if q % N == 1 and _is_prime(q):
                return q
            q += 1
            if q > N * budget + 2:
                raise PrimeSearchExhausted(f"no prime = 1 mod {N} found")
    rng = random.Random(seed)
    t = max(1, (2**bits - 1) // N + 1) + rng.randrange(0, 1 << 20)
    for _ in range(budget):
        q = N * t + 1
        if _is_prime(q):
            return q
        t += 1
    raise PrimeSearchExhausted(f"no prime = 1 mod {N} above 2^{bits} in budget")


@dataclass(frozen=True)
class FFEmbedding:
    """zeta_N -> omega, an element of exact multiplicative order N in F_q."""

    q: int
    level: int
    omega: int

    def embed_root(self, r: Root) -> int:
        if self.level % r.level != 0:
            raise LevelMismatch(f"{r.level} does not divide level {self.level}")
        return pow(self.omega, r.exp * (self.level // r.level), self.q)

    def embed_fraction(self, x: Fraction | int) -> int:
        x = Fraction(x)
        return x.numerator * pow(x.denominator, -1, self.q) % self.q

    def embed_cyclo(self, c: CycloNum) -> int:
        acc = 0
        for i, n in enumerate(c.nums):
            if n:
                acc += n * pow(self.omega, i, self.q)
        return acc * pow(c.den, -1, self.q) % self.q


def make_embedding(q: int, N: int, seed: int) -> FFEmbedding:
    """Sample omega of exact order N in F_q (requires q = 1 mod N)."""
    if (q - 1) % N != 0:
        raise ValueError(f"q = {q} is not 1 mod {N}")
    if N == 1:
        return FFEmbedding(q, 1, 1)
    prime_divisors = _prime_divisors(N)
    rng = random.Random(seed)
    while True:
        g = rng.randrange(2, q)
        omega = pow(g, (q - 1) // N, q)
        if omega == 1:
            continue
        if all(pow(omega, N // ell, q) != 1 for ell in prime_divisors):
            assert pow(omega, N, q) == 1
            return FFEmbedding(q, N, omega)


def _prime_divisors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out
