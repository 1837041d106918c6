"""Bit sources: MT19937 and GFSR4 baselines, and a QRNG HTTP client.

Both PRNGs follow the GSL implementations used by Dieharder, including
GSL's substitution of seed 4357 for seed 0. Output words are serialized
MSB-first (big-endian).
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import httpx
import numpy as np

from .bitstore import BitString

log = logging.getLogger(__name__)

MASK32 = 0xFFFFFFFF
DEFAULT_SEED = 4357


def _words_to_bits(words: np.ndarray, count: int) -> BitString:
    raw = words.astype(">u4").tobytes()
    nbytes = (count + 7) // 8
    return BitString(raw[:nbytes], count)


class MT19937:
    """Mersenne Twister, 32-bit output."""

    N, M = 624, 397
    MATRIX_A = np.uint32(0x9908B0DF)
    UPPER = np.uint32(0x80000000)
    LOWER = np.uint32(0x7FFFFFFF)

    def __init__(self, seed: int = 5489):
        seed &= MASK32
        if seed == 0:
            seed = DEFAULT_SEED
        mt = [seed]
        for i in range(1, self.N):
            prev = mt[-1]
            mt.append((1812433253 * (prev ^ (prev >> 30)) + i) & MASK32)
        self._mt = np.array(mt, dtype=np.uint32)
        self._index = self.N

    def _twist_rows(self, lo: int, hi: int, nxt: np.ndarray, far: np.ndarray) -> None:
        y = (self._mt[lo:hi] & self.UPPER) | (nxt & self.LOWER)
        mag = np.where(y & np.uint32(1), self.MATRIX_A, np.uint32(0))
        self._mt[lo:hi] = far ^ (y >> np.uint32(1)) ^ mag

    def _twist(self) -> None:
        mt = self._mt
        n, m = self.N, self.M
        split = n - m  # 227
        # rows [0, 227) only see old state; later rows need rows already updated
        self._twist_rows(0, split, mt[1 : split + 1].copy(), mt[m:n].copy())
        self._twist_rows(split, 2 * split, mt[split + 1 : 2 * split + 1].copy(), mt[0:split].copy())
        self._twist_rows(2 * split, n - 1, mt[2 * split + 1 : n].copy(), mt[split : n - 1 - split].copy())
        self._twist_rows(n - 1, n, mt[0:1].copy(), mt[m - 1 : m].copy())
        self._index = 0

    @staticmethod
    def _temper(y: np.ndarray) -> np.ndarray:
        y = y ^ (y >> np.uint32(11))
        y = y ^ ((y << np.uint32(7)) & np.uint32(0x9D2C5680))
        y = y ^ ((y << np.uint32(15)) & np.uint32(0xEFC60000))
        return y ^ (y >> np.uint32(18))

    def words(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.uint32)
        filled = 0
        while filled < count:
            if self._index >= self.N:
                self._twist()
            take = min(count - filled, self.N - self._index)
            out[filled : filled + take] = self._temper(self._mt[self._index : self._index + take])
            self._index += take
            filled += take
        return out


class GFSR4:
    """Four-tap generalized feedback shift register (Ziff), GSL seeding."""

    LAGS = (471, 1586, 6988, 9689)
    SIZE = 1 << 14

    def __init__(self, seed: int = DEFAULT_SEED):
        seed &= MASK32
        if seed == 0:
            seed = DEFAULT_SEED
        # state filled from the top bit of successive LCG values s <- 69069 s mod 2^32
        steps = self.SIZE * 32
        powers = np.cumprod(np.full(steps, 69069, dtype=np.uint64), dtype=np.uint64)
        lcg = (powers * np.uint64(seed)) & np.uint64(MASK32)
        top = ((lcg >> np.uint64(31)) & np.uint64(1)).astype(np.uint8).reshape(self.SIZE, 32)
        ra = np.packbits(top, axis=1).view(">u4").ravel().astype(np.uint32)
        msb, mask = 0x80000000, MASK32
        for i in range(32):
            k = 7 + 3 * i
            ra[k] = (int(ra[k]) & mask) | msb
            mask >>= 1
            msb >>= 1
        nd = 32
        # history[i] holds the value produced at time nd - SIZE + 1 + i
        self._history = ra[(np.arange(self.SIZE) + nd + 1) % self.SIZE].copy()

    def words(self, count: int) -> np.ndarray:
        hist = self._history
        size = self.SIZE
        buf = np.empty(size + count, dtype=np.uint32)
        buf[:size] = hist
        pos = size
        end = size + count
        step = self.LAGS[0]
        a, b, c, d = self.LAGS
        while pos < end:
            hi = min(pos + step, end)
            buf[pos:hi] = buf[pos - a : hi - a] ^ buf[pos - b : hi - b] ^ buf[pos - c : hi - c] ^ buf[pos - d : hi - d]
            pos = hi
        self._history = buf[-size:].copy()
        return buf[size:].copy()


def mt19937_words(seed: int, count: int) -> np.ndarray:
    return MT19937(seed).words(count)


def mt19937_bits(seed: int, count: int) -> BitString:
    if count < 1:
        raise ValueError("bit count must be >= 1")
    return _words_to_bits(MT19937(seed).words((count + 31) // 32), count)


def gfsr4_words(seed: int, count: int) -> np.ndarray:
    return GFSR4(seed).words(count)


def gfsr4_bits(seed: int, count: int) -> BitString:
    if count < 1:
        raise ValueError("bit count must be >= 1")
    return _words_to_bits(GFSR4(seed).words((count + 31) // 32), count)


PRNG_KINDS = {"mt19937": mt19937_bits, "gfsr4": gfsr4_bits}


# -- QRNG over HTTP -------------------------------------------------------


class QrngError(Exception):
    pass


class QrngServiceError(QrngError):
    """The service answered but reported failure or sent an unusable payload."""


class QrngNetworkError(QrngError):
    pass


@dataclass
class FetchSession:
    """Configuration and progress of one QRNG acquisition.

    The service must answer ``GET endpoint?length=L&type=uint8`` with JSON
    ``{"success": true, "data": [L integers in 0..255]}``.
    """

    endpoint: str
    block_size: int = 1024
    max_attempts: int = 5
    backoff: float = 1.0
    max_bits: int = 1 << 27
    cache_dir: Optional[Path] = None
    name: str = "qrng"
    api_key_env: str = "ALGRAND_QRNG_API_KEY"
    received: int = 0
    client: Optional[httpx.Client] = field(default=None, repr=False)
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)

    @property
    def cache_path(self) -> Optional[Path]:
        return None if self.cache_dir is None else Path(self.cache_dir) / f"{self.name}.bin"

    def backoff_schedule(self) -> list[float]:
        return [self.backoff * 2**i for i in range(self.max_attempts - 1)]


def _parse_payload(resp: httpx.Response, expected: int) -> bytes:
    try:
        payload = resp.json()
    except ValueError as exc:
        raise QrngServiceError(f"response is not JSON: {resp.text[:80]!r}") from exc
    if not isinstance(payload, dict):
        raise QrngServiceError("response is not a JSON object")
    if payload.get("success") is not True:
        raise QrngServiceError(f"service reported failure: {payload.get('message', payload)!r}")
    data = payload.get("data")
    if not isinstance(data, list) or len(data) != expected:
        raise QrngServiceError(f"expected a list of {expected} values")
    if not all(isinstance(v, int) and not isinstance(v, bool) and 0 <= v <= 255 for v in data):
        raise QrngServiceError("payload values are not unsigned 8-bit integers")
    return bytes(data)


def _request_block(session: FetchSession, client: httpx.Client, length: int) -> bytes:
    headers = {}
    key = os.environ.get(session.api_key_env)
    if key:
        headers["x-api-key"] = key
    delays = session.backoff_schedule()
    for attempt in range(session.max_attempts):
        try:
            resp = client.get(session.endpoint, params={"length": length, "type": "uint8"}, headers=headers)
        except httpx.TransportError as exc:
            reason = f"{type(exc).__name__}: {exc}"
        else:
            if resp.status_code == 429 or resp.status_code >= 500:
                reason = f"HTTP {resp.status_code}"
            elif resp.status_code >= 400:
                raise QrngServiceError(f"HTTP {resp.status_code}: {resp.text[:80]!r}")
            else:
                return _parse_payload(resp, length)
        if attempt + 1 < session.max_attempts:
            log.warning("QRNG request failed (%s), retrying in %.1fs", reason, delays[attempt])
            session.sleep(delays[attempt])
    raise QrngNetworkError(f"giving up after {session.max_attempts} attempts: {reason}")


def fetch_qrng(session: FetchSession, count: int) -> BitString:
    """Fetch ``count`` bits, replaying from the session cache when possible."""
    if count < 1:
        raise ValueError("bit count must be >= 1")
    if count > session.max_bits:
        raise ValueError(f"requested {count} bits, cap is {session.max_bits}")
    nbytes = (count + 7) // 8
    cache = session.cache_path
    if cache is not None and cache.is_file() and cache.stat().st_size >= nbytes:
        raw = cache.read_bytes()[:nbytes]
        return BitString(raw[:nbytes], count)

    client = session.client or httpx.Client(timeout=30.0)
    chunks: list[bytes] = []
    try:
        got = 0
        while got < nbytes:
            length = min(session.block_size, nbytes - got)
            block = _request_block(session, client, length)
            chunks.append(block)
            got += len(block)
            session.received = got
    finally:
        if session.client is None:
            client.close()
    raw = b"".join(chunks)
    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        tmp = cache.with_suffix(".part")
        tmp.write_bytes(raw)
        tmp.replace(cache)
    return BitString(raw, count)
