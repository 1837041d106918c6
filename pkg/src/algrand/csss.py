"""Chaitin-Schwartz-Solovay-Strassen (CSSS) tests and sample driver.

Tests 1 and 2 read l(n)-bit candidates straight from the source, test 3
forms base-(n-1) digit witnesses from m-bit blocks, and test 4 counts
violations of the Chaitin-Schwartz compound predicate over m offset passes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Union

import numpy as np

from .bitstore import BitCursor, BitSource, BitString, SourceExhausted, complement, loop_to
from .borel import bias, borel_metric
from .numtheory import (
    TestNumber,
    TestNumberSet,
    cs_params,
    cs_predicate,
    ss_predicate,
    to_base_digits,
    witness_table,
)

TEST_IDS = ("borel", "csss1", "csss2", "csss3", "csss4")
ORIENTATIONS = ("original", "complemented")


class IncompleteRun(Exception):
    """A test ran out of bits; ``partial`` holds the counts so far."""

    def __init__(self, message: str, partial: Any, completed: int):
        super().__init__(message)
        self.partial = partial
        self.completed = completed


@dataclass
class Csss12Result:
    witnesses_used: int = 0
    bits_used: int = 0
    discarded: int = 0
    per_n: Optional[list[tuple[int, int, int]]] = None  # (n, witnesses, bits)


@dataclass
class Csss3Result:
    bits_used: int = 0
    violations: int = 0
    per_n: Optional[list[tuple[int, int, bool]]] = None  # (n, charged bits, violation)


@dataclass
class Csss4Result:
    total_violations: int = 0
    per_n_violations: dict[int, int] = field(default_factory=dict)
    per_n_pobs: dict[int, float] = field(default_factory=dict)
    witnesses_checked: dict[int, int] = field(default_factory=dict)
    violation_starts: Optional[dict[int, list[int]]] = None


def csss_test_1_2(x: BitSource, carmichael: Sequence[int], detail: bool = False) -> Csss12Result:
    """Witnesses (test 1) and bits (test 2) needed to show every n composite.

    Candidates equal to 0 or above n-1 are discarded: they cost bits but
    are not counted as witnesses. The cursor is never rewound between n.
    """
    if not carmichael:
        raise ValueError("empty test number list")
    result = Csss12Result(per_n=[] if detail else None)
    cursor = BitCursor(x)
    for done, n in enumerate(carmichael):
        ell = n.bit_length()
        before_w, before_b = result.witnesses_used, cursor.consumed
        while True:
            try:
                a = cursor.read_bits(ell)
            except SourceExhausted as exc:
                result.bits_used = cursor.consumed
                raise IncompleteRun(
                    f"source exhausted after verifying {done} of {len(carmichael)} numbers",
                    result,
                    done,
                ) from exc
            if a == 0 or a > n - 1:
                result.discarded += 1
                continue
            result.witnesses_used += 1
            if ss_predicate(n, a):
                break
        if detail:
            result.per_n.append((n, result.witnesses_used - before_w, cursor.consumed - before_b))
    result.bits_used = cursor.consumed
    return result


def csss_test_3(x: BitSource, carmichael: Sequence[int], detail: bool = False) -> Csss3Result:
    """Bits of each m-bit witness string needed before some digit witnesses n.

    If the digit at 0-based index i is the first witness, ceil(m (i+1) / k)
    bits are charged; a violation (no witnessing digit) charges all m.
    """
    if not carmichael:
        raise ValueError("empty test number list")
    result = Csss3Result(per_n=[] if detail else None)
    cursor = BitCursor(x)
    for done, n in enumerate(carmichael):
        t = cs_params(n)
        try:
            s = cursor.read_wide(t.m_cs)
        except SourceExhausted as exc:
            raise IncompleteRun(
                f"source exhausted after {done} of {len(carmichael)} numbers", result, done
            ) from exc
        z, evaluated = cs_predicate(t, to_base_digits(s, t))
        if z:
            charged = t.m_cs
            result.violations += 1
        else:
            charged = -(-t.m_cs * evaluated // t.k_digits)
        result.bits_used += charged
        if detail:
            result.per_n.append((n, charged, z))
    return result


# -- test 4 ---------------------------------------------------------------
#
# The m passes at offsets 0..m-1 each read disjoint consecutive m-bit blocks;
# together they visit every block start p in [0, N-m] exactly once. The
# engine below therefore scans all window starts, chunk by chunk, holding
# each m-bit witness as big-endian 16-bit limbs.

_LIMB_BITS = 16
_LIMB = 1 << _LIMB_BITS
_CHUNK_WINDOWS = 1 << 18


def _sliding_words(bits: np.ndarray, count: int) -> np.ndarray:
    """v[p] = integer value of bits[p:p+16] for p < count (bits zero padded)."""
    need = count + _LIMB_BITS - 1
    if bits.size < need:
        bits = np.concatenate([bits, np.zeros(need - bits.size, dtype=np.uint8)])
    v = np.zeros(count, dtype=np.int64)
    for j in range(_LIMB_BITS):
        v <<= 1
        v |= bits[j : j + count]
    return v


def _limb_layout(m: int) -> list[tuple[int, int]]:
    """(bit offset within window, right shift) per limb, most significant first."""
    r = m % _LIMB_BITS
    layout = []
    if r:
        layout.append((0, _LIMB_BITS - r))
    layout.extend((r + _LIMB_BITS * t, 0) for t in range(m // _LIMB_BITS))
    return layout


def _count_violations(
    words: np.ndarray, nwin: int, t: TestNumber, starts: Optional[list[int]], base_pos: int
) -> int:
    table = witness_table(t.n)
    b = t.base
    layout = _limb_layout(t.m_cs)
    nlimbs = len(layout)

    # first digit via s mod b = sum(limb * LIMB**pos mod b)
    acc = np.zeros(nwin, dtype=np.int64)
    for pos, (off, shift) in enumerate(layout):
        w = pow(_LIMB, nlimbs - 1 - pos, b)
        limb = words[off : off + nwin]
        if shift:
            limb = limb >> shift
        acc += limb * w
    alive = np.flatnonzero(~table[acc % b])
    if alive.size == 0:
        return 0

    limbs = np.empty((nlimbs, alive.size), dtype=np.int64)
    for pos, (off, shift) in enumerate(layout):
        limbs[pos] = words[alive + off] >> shift
    for _ in range(t.k_digits):
        rem = np.zeros(alive.size, dtype=np.int64)
        for pos in range(nlimbs):
            cur = rem * _LIMB + limbs[pos]
            limbs[pos] = cur // b
            rem = cur - limbs[pos] * b
        keep = ~table[rem]
        alive = alive[keep]
        if alive.size == 0:
            return 0
        limbs = limbs[:, keep]
    if starts is not None:
        starts.extend(int(p) + base_pos for p in alive)
    return int(alive.size)


def csss_test_4(
    x: BitSource,
    numbers: Optional[TestNumberSet] = None,
    record_starts: bool = False,
) -> Csss4Result:
    """Count Z-true witness blocks over m offset passes for each test number."""
    numbers = TestNumberSet.default() if numbers is None else numbers
    for t in numbers:
        if t.n > 1 << 16:
            raise ValueError(f"test number {t.n} too large for the tabulated predicate")
    length = x.length
    result = Csss4Result(violation_starts={} if record_starts else None)
    for t in numbers:
        result.per_n_violations[t.n] = 0
        result.witnesses_checked[t.n] = max(0, length - t.m_cs + 1)
        if record_starts:
            result.violation_starts[t.n] = []
    max_m = max((t.m_cs for t in numbers), default=0)

    for c0 in range(0, max(0, length - min((t.m_cs for t in numbers), default=length) + 1), _CHUNK_WINDOWS):
        c1 = c0 + _CHUNK_WINDOWS
        bits = x.bits(c0, min(length, c1 + max_m - 1))
        words = _sliding_words(bits, _CHUNK_WINDOWS + max_m)
        for t in numbers:
            last = length - t.m_cs + 1  # exclusive bound on window starts
            nwin = min(c1, last) - c0
            if nwin <= 0:
                continue
            starts = result.violation_starts[t.n] if record_starts else None
            result.per_n_violations[t.n] += _count_violations(words, nwin, t, starts, c0)

    result.total_violations = sum(result.per_n_violations.values())
    for n, checked in result.witnesses_checked.items():
        result.per_n_pobs[n] = result.per_n_violations[n] / checked if checked else 0.0
    return result


# -- sample driver --------------------------------------------------------


@dataclass
class TestOutcome:
    """Result of one test on one string in one orientation."""

    __test__ = False

    index: int
    orientation: str
    test: str
    value: Optional[float]
    detail: dict = field(default_factory=dict)
    error: Optional[str] = None


@dataclass
class RunOptions:
    tests: tuple[str, ...] = TEST_IDS
    complement: bool = True
    loop_to: Optional[int] = None
    carmichael: Sequence[int] = ()
    numbers: Optional[TestNumberSet] = None
    jobs: int = 1


def _run_one(x: BitString, index: int, orientation: str, opts: RunOptions) -> list[TestOutcome]:
    tests = opts.tests
    out: list[TestOutcome] = []
    csss_source: BitSource = x
    loop_detail: dict = {}
    if opts.loop_to:
        view = loop_to(x, opts.loop_to)
        csss_source = view
        loop_detail = {"repetitions": view.repetitions, "looped_length": view.length}

    def fail(test: str, exc: Exception) -> TestOutcome:
        detail = dict(loop_detail)
        if isinstance(exc, IncompleteRun):
            detail["completed"] = exc.completed
        return TestOutcome(index, orientation, test, None, detail, f"{type(exc).__name__}: {exc}")

    if "borel" in tests:
        try:
            r = borel_metric(x)
            detail = {
                "per_m_deviation": {str(k): v for k, v in r.per_m_deviation.items()},
                "m_max": r.m_max,
                "length": r.string_length,
                "bias": bias(x),
            }
            out.append(TestOutcome(index, orientation, "borel", r.metric, detail))
        except Exception as exc:  # recorded, sample continues
            out.append(fail("borel", exc))

    if "csss1" in tests or "csss2" in tests:
        try:
            r12 = csss_test_1_2(csss_source, opts.carmichael)
            common = dict(loop_detail, discarded=r12.discarded)
            if "csss1" in tests:
                out.append(TestOutcome(index, orientation, "csss1", r12.witnesses_used,
                                       dict(common, bits_used=r12.bits_used)))
            if "csss2" in tests:
                out.append(TestOutcome(index, orientation, "csss2", r12.bits_used,
                                       dict(common, witnesses_used=r12.witnesses_used)))
        except Exception as exc:
            out.extend(fail(t, exc) for t in ("csss1", "csss2") if t in tests)

    if "csss3" in tests:
        try:
            r3 = csss_test_3(csss_source, opts.carmichael)
            out.append(TestOutcome(index, orientation, "csss3", r3.bits_used,
                                   dict(loop_detail, violations=r3.violations)))
        except Exception as exc:
            out.append(fail("csss3", exc))

    if "csss4" in tests:
        try:
            r4 = csss_test_4(csss_source, opts.numbers)
            detail = dict(
                loop_detail,
                per_n_violations={str(k): v for k, v in r4.per_n_violations.items()},
                witnesses_checked={str(k): v for k, v in r4.witnesses_checked.items()},
            )
            out.append(TestOutcome(index, orientation, "csss4", r4.total_violations, detail))
        except Exception as exc:
            out.append(fail("csss4", exc))
    return out


def run_string(x: BitString, index: int, opts: RunOptions) -> list[TestOutcome]:
    """All selected tests on one string, then on its complement if requested."""
    outcomes = _run_one(x, index, "original", opts)
    if opts.complement:
        outcomes.extend(_run_one(complement(x), index, "complemented", opts))
    return outcomes


def _run_indexed(args: tuple[BitString, int, RunOptions]) -> list[TestOutcome]:
    return run_string(*args)


def run_sample(
    strings: Sequence[BitString],
    tests: Union[str, Sequence[str]] = TEST_IDS,
    complement: bool = False,
    loop_to: Optional[int] = None,
    carmichael: Sequence[int] = (),
    numbers: Optional[TestNumberSet] = None,
    jobs: int = 1,
) -> list[TestOutcome]:
    """Run tests over a sample; outcomes are ordered by string, orientation, test."""
    if not strings:
        raise ValueError("empty sample")
    tests = (tests,) if isinstance(tests, str) else tuple(tests)
    unknown = set(tests) - set(TEST_IDS)
    if unknown:
        raise ValueError(f"unknown test ids: {sorted(unknown)}")
    if any(t in tests for t in ("csss1", "csss2", "csss3")) and not carmichael:
        raise ValueError("CSSS tests 1-3 need a Carmichael list")
    opts = RunOptions(tests, complement, loop_to, list(carmichael), numbers, jobs)
    work = [(x, i, opts) for i, x in enumerate(strings)]
    if jobs <= 1 or len(work) == 1:
        batches = map(_run_indexed, work)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_run_indexed, work))
    return [o for batch in batches for o in batch]
