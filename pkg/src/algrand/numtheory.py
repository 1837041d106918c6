"""Number theory for the CSSS tests.

Modular arithmetic, the Jacobi symbol, the Solovay-Strassen predicate W,
the Chaitin-Schwartz witness parameters and compound predicate Z, and
Carmichael number generation / ingestion.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

MAX_MODULUS = 10**20
KORSELT_CHECK_LIMIT = 10**12

# Odd composites below 100 plus the smallest Carmichael number.
DEFAULT_TEST_NUMBERS: tuple[int, ...] = (
    9, 15, 21, 25, 27, 33, 35, 39, 45, 49, 51, 55, 57, 63,
    65, 69, 75, 77, 81, 85, 87, 91, 93, 95, 99, 561,
)


def mulmod(a: int, b: int, n: int) -> int:
    if n < 2:
        raise ValueError(f"modulus must be >= 2, got {n}")
    return (a * b) % n


def powmod(a: int, e: int, n: int) -> int:
    """``a**e mod n`` by left-to-right square-and-multiply."""
    if n < 2:
        raise ValueError(f"modulus must be >= 2, got {n}")
    if e < 0:
        raise ValueError("negative exponent")
    a %= n
    result = 1
    for bit in bin(e)[2:]:
        result = mulmod(result, result, n)
        if bit == "1":
            result = mulmod(result, a, n)
    return result


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd n >= 3."""
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Jacobi symbol needs odd n >= 3, got {n}")
    if a < 0:
        raise ValueError("a must be non-negative")
    a %= n
    sign = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                sign = -sign
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            sign = -sign
        a %= n
    return sign if n == 1 else 0


def ss_predicate(n: int, a: int) -> bool:
    """Solovay-Strassen predicate W(n, a); True means a witnesses n composite."""
    if not 1 <= a <= n - 1:
        raise ValueError(f"witness {a} outside [1, {n - 1}]")
    j = jacobi(a, n)
    return j % n != powmod(a, (n - 1) // 2, n)


@lru_cache(maxsize=64)
def witness_table(n: int) -> np.ndarray:
    """Boolean array t with t[d] == W(n, 1 + d) for every digit d in [0, n-2]."""
    if n > 1 << 16:
        raise ValueError(f"witness table too large for n={n}")
    table = np.fromiter((ss_predicate(n, a) for a in range(1, n)), dtype=bool, count=n - 1)
    table.setflags(write=False)
    return table


def is_prime_trial(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division."""
    factors: dict[int, int] = {}
    f = 2
    while f * f <= n:
        while n % f == 0:
            factors[f] = factors.get(f, 0) + 1
            n //= f
        f += 1 if f == 2 else 2
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors


def is_carmichael(n: int) -> bool:
    """Korselt's criterion: composite, squarefree, p-1 | n-1 for all p | n."""
    if n < 3 or n % 2 == 0:
        return False
    factors = factorize(n)
    if len(factors) < 2 or any(e > 1 for e in factors.values()):
        return False
    return all((n - 1) % (p - 1) == 0 for p in factors)


# -- Chaitin-Schwartz parameters ------------------------------------------


@dataclass(frozen=True)
class TestNumber:
    """An odd composite test number with its witness-string parameters.

    ``m_cs`` is the witness bit length l(3l - 2) and ``k_digits`` the
    smallest k with (n-1)**(k+1) >= 2**m_cs, i.e. the smallest integer
    strictly above log(2**m - 1)/log(n - 1) - 1.
    """

    __test__ = False

    n: int
    ell: int
    m_cs: int
    k_digits: int

    @property
    def base(self) -> int:
        return self.n - 1

    @property
    def p_ss(self) -> float:
        return 2.0 ** -self.k_digits


def _min_digits(m: int, base: int) -> int:
    k = max(0, int(m / math.log2(base)) - 2)
    target = 1 << m
    while base ** (k + 1) < target:
        k += 1
    while k > 0 and base**k >= target:
        k -= 1
    return k


@lru_cache(maxsize=None)
def cs_params(n: int) -> TestNumber:
    if n < 9 or n % 2 == 0:
        raise ValueError(f"test numbers must be odd and >= 9, got {n}")
    if n > MAX_MODULUS:
        raise ValueError(f"test number {n} exceeds {MAX_MODULUS}")
    ell = n.bit_length()
    m = ell * (3 * ell - 2)
    return TestNumber(n=n, ell=ell, m_cs=m, k_digits=_min_digits(m, n - 1))


@dataclass(frozen=True)
class DigitString:
    """Base-(n-1) digits, least significant first."""

    digits: tuple[int, ...]
    base: int

    def value(self) -> int:
        v = 0
        for d in reversed(self.digits):
            v = v * self.base + d
        return v

    def __len__(self) -> int:
        return len(self.digits)


def to_base_digits(s_value: int, n: TestNumber) -> DigitString:
    if not 0 <= s_value < 1 << n.m_cs:
        raise ValueError(f"witness value does not fit in {n.m_cs} bits")
    base = n.base
    digits = []
    for _ in range(n.k_digits + 1):
        s_value, d = divmod(s_value, base)
        digits.append(d)
    return DigitString(tuple(digits), base)


def cs_predicate(n: TestNumber, d: DigitString) -> tuple[bool, int]:
    """Compound predicate Z over digits d_0 .. d_{k-1} (d_k is not used).

    Returns ``(z, evaluated)``; evaluation stops at the first digit whose
    W(n, 1 + d_i) is true.
    """
    if len(d.digits) < n.k_digits:
        raise ValueError(f"need {n.k_digits} digits, got {len(d.digits)}")
    for i in range(n.k_digits):
        if ss_predicate(n.n, 1 + d.digits[i]):
            return False, i + 1
    return True, n.k_digits


@dataclass(frozen=True)
class TestNumberSet:
    """Ordered odd composite test numbers with cached parameters."""

    __test__ = False

    numbers: tuple[TestNumber, ...] = field(default_factory=tuple)

    @classmethod
    def from_ints(cls, values: Iterable[int], verify: bool = True) -> "TestNumberSet":
        values = list(values)
        if verify:
            for v in values:
                if v <= KORSELT_CHECK_LIMIT and is_prime_trial(v):
                    raise ValueError(f"test number {v} is prime")
        return cls(tuple(cs_params(v) for v in values))

    @classmethod
    def default(cls) -> "TestNumberSet":
        return cls.from_ints(DEFAULT_TEST_NUMBERS)

    def __iter__(self):
        return iter(self.numbers)

    def __len__(self) -> int:
        return len(self.numbers)

    def ints(self) -> list[int]:
        return [t.n for t in self.numbers]


# -- Carmichael numbers ---------------------------------------------------


def _small_primes(limit: int) -> np.ndarray:
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve)


def carmichael_up_to(limit: int, segment: int = 1 << 22) -> list[int]:
    """All Carmichael numbers <= limit, ascending.

    Segmented trial division over odd n: every odd prime p <= sqrt(limit)
    is divided out of its multiples while checking squarefreeness and
    p - 1 | n - 1; the cofactor left over is 1 or a single large prime.
    """
    if limit < 561:
        raise ValueError(f"limit must be >= 561, got {limit}")
    primes = [int(p) for p in _small_primes(math.isqrt(limit)) if p > 2]
    found: list[int] = []
    for lo in range(3, limit + 1, 2 * segment):
        hi = min(lo + 2 * segment, limit + 1)
        n = np.arange(lo, hi, 2, dtype=np.int64)
        rem = n.copy()
        ok = np.ones(n.size, dtype=bool)
        nfac = np.zeros(n.size, dtype=np.int8)
        for p in primes:
            first = (-lo) % p
            # n = lo + 2i is divisible by p for i = first * inv(2) mod p
            start = (first * ((p + 1) // 2)) % p
            if start >= n.size:
                continue
            sl = slice(start, None, p)
            q = rem[sl] // p
            rem[sl] = q
            ok[sl] &= (q % p != 0) & ((n[sl] - 1) % (p - 1) == 0)
            nfac[sl] += 1
        big = rem > 1
        with np.errstate(divide="ignore"):
            ok[big] &= (n[big] - 1) % (rem[big] - 1) == 0
        nfac[big] += 1
        hits = n[ok & (nfac >= 2)]
        found.extend(int(v) for v in hits)
    return found


def load_carmichael(path: Union[str, os.PathLike], validate: bool = False) -> list[int]:
    """Read an ascending list of Carmichael numbers, one decimal per line.

    With ``validate=True`` every entry <= 10**12 is checked against
    Korselt's criterion.
    """
    path = Path(path)
    values: list[int] = []
    prev = 0
    with path.open("r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                v = int(text.split()[0])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: cannot parse {text!r}") from exc
            if v % 2 == 0:
                raise ValueError(f"{path}:{lineno}: even entry {v}")
            if v <= 560:
                raise ValueError(f"{path}:{lineno}: entry {v} below 561")
            if v <= prev:
                raise ValueError(f"{path}:{lineno}: entries not ascending ({prev} then {v})")
            if validate and v <= KORSELT_CHECK_LIMIT and not is_carmichael(v):
                raise ValueError(f"{path}:{lineno}: {v} fails Korselt's criterion")
            values.append(v)
            prev = v
    return values


def store_carmichael(values: Sequence[int], path: Union[str, os.PathLike]) -> None:
    Path(path).write_text("".join(f"{v}\n" for v in values), encoding="ascii")
