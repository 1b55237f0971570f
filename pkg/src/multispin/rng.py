"""Deterministic pseudo-random streams and the randomness-quality battery.

The generator is xoshiro256++ with splitmix64-derived stream states: one
master seed plus a stream index gives an independent 256-bit state, so any
number of cells can draw concurrently and reproducibly.  Unit floats are
shaped from the top 32 bits of each output: the low 23 of those bits become
the mantissa of a binary32 in [1, 2) and 1.0 is subtracted, yielding
``k * 2**-23`` for k in [0, 2**23).

The quality battery implements the frequency (monobit), block-frequency,
runs, longest-run-of-ones and cumulative-sums tests at significance 0.01,
plus the unit-float frequency histogram, the lag-1 joint distribution, and
median thresholding of floats back into a testable bit stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erfc, gammaincc, ndtr

__all__ = [
    "ALPHA",
    "Xoshiro256pp",
    "XoshiroStreams",
    "stream_state",
    "shape_unit_float",
    "TestReport",
    "monobit_test",
    "block_frequency_test",
    "runs_test",
    "longest_run_test",
    "cusum_test",
    "run_battery",
    "HistogramReport",
    "frequency_histogram",
    "JointReport",
    "lag1_joint",
    "median_threshold_bits",
    "load_bitstream",
]

ALPHA = 0.01

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4B7C15
_MANTISSA = 0x7FFFFF
_UNIT = 2.0 ** -23


def _mix64(z: int) -> int:
    """splitmix64 output finalizer."""
    z &= _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def splitmix64(seed: int, count: int) -> list[int]:
    """First ``count`` outputs of a splitmix64 sequence started at ``seed``."""
    out = []
    z = seed & _M64
    for _ in range(count):
        z = (z + _GOLDEN) & _M64
        out.append(_mix64(z))
    return out


def stream_state(master_seed: int, stream: int) -> list[int]:
    """256-bit xoshiro state for one numbered stream of a master seed.

    The stream seed is the (stream+1)-th splitmix64 output of the master
    seed; four more splitmix64 outputs of that seed fill the state.  The
    all-zero state is absorbing and gets patched away.
    """
    stream_seed = _mix64(master_seed + (stream + 1) * _GOLDEN)
    state = splitmix64(stream_seed, 4)
    if not any(state):
        state[0] = _GOLDEN
    return state


class Xoshiro256pp:
    """Scalar xoshiro256++ stream on python integers."""

    def __init__(self, master_seed: int, stream: int = 0):
        self.master_seed = int(master_seed)
        self.stream = int(stream)
        self._s = stream_state(self.master_seed, self.stream)

    def next_raw64(self) -> int:
        s0, s1, s2, s3 = self._s
        x = (s0 + s3) & _M64
        result = (((x << 23) | (x >> 41)) + s0) & _M64
        t = (s1 << 17) & _M64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _M64
        self._s = [s0, s1, s2, s3]
        return result

    def next_bits(self, k: int) -> int:
        """Top k bits of the next output; one output is consumed per call."""
        if not 1 <= k <= 64:
            raise ValueError(f"bit count {k} outside [1, 64]")
        return self.next_raw64() >> (64 - k)

    def next_unit_float(self) -> float:
        """Next unit-interval float, shaped from the top 32 bits."""
        return (self.next_raw64() >> 32 & _MANTISSA) * _UNIT

    def raw64(self, count: int) -> np.ndarray:
        """Bulk 64-bit outputs as a uint64 array."""
        out = np.empty(count, dtype=np.uint64)
        s0, s1, s2, s3 = self._s
        for k in range(count):
            x = (s0 + s3) & _M64
            out[k] = (((x << 23) | (x >> 41)) + s0) & _M64
            t = (s1 << 17) & _M64
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = ((s3 << 45) | (s3 >> 19)) & _M64
        self._s = [s0, s1, s2, s3]
        return out

    def unit_floats(self, count: int) -> np.ndarray:
        """Bulk unit floats; identical to ``count`` next_unit_float calls."""
        raw = self.raw64(count)
        return ((raw >> np.uint64(32)) & np.uint64(_MANTISSA)) * _UNIT

    def bits(self, count: int) -> np.ndarray:
        """Bulk bit stream, most significant bit of each output first.

        Concatenating ``next_bits(64)`` calls reproduces the same stream.
        """
        n_words = -(-count // 64)
        raw = self.raw64(n_words)
        bits = np.unpackbits(raw.astype(">u8").view(np.uint8))
        return bits[:count]


class XoshiroStreams:
    """Many xoshiro256++ streams advanced in lockstep.

    Column j of every returned block belongs to stream ``first_stream + j``
    and is that stream's own sequence, so a consumer bound to one column
    sees the same draws no matter how many streams run beside it or how the
    streams are partitioned across workers.  Below a handful of streams a
    python-int loop beats numpy dispatch; both paths emit identical values.
    """

    _PYTHON_MAX_STREAMS = 48

    def __init__(self, master_seed: int, n_streams: int, first_stream: int = 0):
        if n_streams < 1:
            raise ValueError("need at least one stream")
        self.master_seed = int(master_seed)
        self.n_streams = int(n_streams)
        self.first_stream = int(first_stream)
        states = np.array(
            [stream_state(self.master_seed, self.first_stream + j) for j in range(n_streams)],
            dtype=np.uint64,
        )
        self._s = [states[:, i].copy() for i in range(4)]

    def raw_block(self, count: int, _force_numpy: bool = False) -> np.ndarray:
        """(count, n_streams) uint64 block; row k is every stream's k-th output."""
        if self.n_streams <= self._PYTHON_MAX_STREAMS and not _force_numpy:
            return self._raw_block_py(count)
        return self._raw_block_np(count)

    def unit_block(self, count: int) -> np.ndarray:
        """(count, n_streams) float64 block of shaped unit floats."""
        raw = self.raw_block(count)
        return ((raw >> np.uint64(32)) & np.uint64(_MANTISSA)) * _UNIT

    def _raw_block_py(self, count: int) -> np.ndarray:
        out = np.empty((count, self.n_streams), dtype=np.uint64)
        states = [[int(a[j]) for a in self._s] for j in range(self.n_streams)]
        for j, (s0, s1, s2, s3) in enumerate(states):
            col = out[:, j]
            for k in range(count):
                x = (s0 + s3) & _M64
                col[k] = (((x << 23) | (x >> 41)) + s0) & _M64
                t = (s1 << 17) & _M64
                s2 ^= s0
                s3 ^= s1
                s1 ^= s2
                s0 ^= s3
                s2 ^= t
                s3 = ((s3 << 45) | (s3 >> 19)) & _M64
            states[j] = [s0, s1, s2, s3]
        for i in range(4):
            self._s[i] = np.array([st[i] for st in states], dtype=np.uint64)
        return out

    def _raw_block_np(self, count: int) -> np.ndarray:
        s0, s1, s2, s3 = self._s
        out = np.empty((count, self.n_streams), dtype=np.uint64)
        c23, c41, c17, c45, c19 = (np.uint64(k) for k in (23, 41, 17, 45, 19))
        for k in range(count):
            x = s0 + s3
            out[k] = ((x << c23) | (x >> c41)) + s0
            t = s1 << c17
            s2 = s2 ^ s0
            s3 = s3 ^ s1
            s1 = s1 ^ s2
            s0 = s0 ^ s3
            s2 = s2 ^ t
            s3 = (s3 << c45) | (s3 >> c19)
        self._s = [s0, s1, s2, s3]
        return out


def shape_unit_float(raw32):
    """Shape 32-bit chunks into [0, 1) floats via exponent splicing.

    The top 9 bits are dropped with an AND against 0x7fffff, the survivors
    are OR-ed with 0x3f800000 to form a binary32 in [1, 2), and 1.0 is
    subtracted.  Accepts a scalar or an array; returns float64 values
    ``k * 2**-23`` with k in [0, 2**23).
    """
    raw = np.atleast_1d(np.asarray(raw32, dtype=np.uint32))
    pattern = (raw & np.uint32(0x007FFFFF)) | np.uint32(0x3F800000)
    shaped = (pattern.view(np.float32) - np.float32(1.0)).astype(np.float64)
    if np.ndim(raw32) == 0:
        return float(shaped[0])
    return shaped


# ---------------------------------------------------------------------------
# Bit-stream quality tests (NIST SP 800-22 subset), significance 0.01.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestReport:
    """Outcome of one randomness test."""

    name: str
    p_value: float
    n_bits: int

    @property
    def passed(self) -> bool:
        return self.p_value >= ALPHA


def _as_bits(bits, minimum: int, test: str) -> np.ndarray:
    b = np.asarray(bits).ravel()
    if b.size < minimum:
        raise ValueError(f"{test} needs at least {minimum} bits, got {b.size}")
    b = b.astype(np.uint8)
    if ((b != 0) & (b != 1)).any():
        raise ValueError(f"{test}: bit stream contains values other than 0 and 1")
    return b


def monobit_test(bits) -> TestReport:
    """Frequency test: are ones and zeros balanced overall?"""
    b = _as_bits(bits, 100, "monobit test")
    n = b.size
    s = 2.0 * int(b.sum()) - n
    p = float(erfc(abs(s) / np.sqrt(n) / np.sqrt(2.0)))
    return TestReport("monobit", p, n)


def block_frequency_test(bits, block_size: int | None = None) -> TestReport:
    """Frequency within blocks: chi-square of per-block one-fractions.

    With no explicit block size, picks the smallest power of two that keeps
    the block count at or below 100 (and at least 128 bits per block).
    """
    b = _as_bits(bits, 100, "block frequency test")
    n = b.size
    if block_size is None:
        block_size = 128
        while n // block_size > 100:
            block_size *= 2
    if block_size < 1 or n // block_size < 1:
        raise ValueError(f"block size {block_size} leaves no complete block in {n} bits")
    n_blocks = n // block_size
    pi = b[: n_blocks * block_size].reshape(n_blocks, block_size).mean(axis=1)
    chi2 = 4.0 * block_size * float(((pi - 0.5) ** 2).sum())
    p = float(gammaincc(n_blocks / 2.0, chi2 / 2.0))
    return TestReport("block_frequency", p, n)


def runs_test(bits) -> TestReport:
    """Runs test: is the number of unbroken runs consistent with independence?"""
    b = _as_bits(bits, 100, "runs test")
    n = b.size
    pi = float(b.mean())
    if abs(pi - 0.5) >= 2.0 / np.sqrt(n):
        return TestReport("runs", 0.0, n)
    v = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    num = abs(v - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * np.sqrt(2.0 * n) * pi * (1.0 - pi)
    p = float(erfc(num / den))
    return TestReport("runs", p, n)


# Longest-run-of-ones reference distributions: block size -> (categories, pi).
_LONGEST_RUN_TIERS = (
    (750_000, 10_000, (10, 11, 12, 13, 14, 15, 16),
     (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6_272, 128, (4, 5, 6, 7, 8, 9),
     (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    (128, 8, (1, 2, 3, 4),
     (0.2148, 0.3672, 0.2305, 0.1875)),
)


def _longest_run_per_block(blocks: np.ndarray) -> np.ndarray:
    """Longest run of ones within each row of a 0/1 matrix."""
    n_blocks, width = blocks.shape
    run = np.zeros(n_blocks, dtype=np.int64)
    best = np.zeros(n_blocks, dtype=np.int64)
    for j in range(width):
        col = blocks[:, j]
        run = (run + col) * col
        np.maximum(best, run, out=best)
    return best


def longest_run_test(bits) -> TestReport:
    """Longest run of ones in fixed-size blocks against tabulated frequencies."""
    b = _as_bits(bits, 128, "longest run test")
    n = b.size
    for min_n, block_size, cats, pi in _LONGEST_RUN_TIERS:
        if n >= min_n:
            break
    n_blocks = n // block_size
    longest = _longest_run_per_block(b[: n_blocks * block_size].reshape(n_blocks, block_size))
    edges = np.array(cats)
    counts = np.zeros(len(cats), dtype=np.int64)
    counts[0] = int(np.count_nonzero(longest <= edges[0]))
    for k in range(1, len(cats) - 1):
        counts[k] = int(np.count_nonzero(longest == edges[k]))
    counts[-1] = int(np.count_nonzero(longest >= edges[-1]))
    expected = n_blocks * np.asarray(pi)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    p = float(gammaincc((len(cats) - 1) / 2.0, chi2 / 2.0))
    return TestReport("longest_run", p, n)


def cusum_test(bits, reverse: bool = False) -> TestReport:
    """Cumulative-sums test: maximal random-walk excursion of the +/-1 stream."""
    b = _as_bits(bits, 100, "cumulative sums test")
    n = b.size
    steps = 2.0 * b.astype(np.float64) - 1.0
    if reverse:
        steps = steps[::-1]
    z = float(np.abs(np.cumsum(steps)).max())
    sqrt_n = np.sqrt(n)
    # Subtract the (4k-1, 4k+1) excursion band, add back the (4k+1, 4k+3) one.
    start1 = int(np.floor((-n / z + 1) / 4.0))
    stop = int(np.floor((n / z - 1) / 4.0))
    k1 = np.arange(start1, stop + 1, dtype=np.float64)
    term1 = (ndtr((4.0 * k1 + 1.0) * z / sqrt_n) - ndtr((4.0 * k1 - 1.0) * z / sqrt_n)).sum()
    start2 = int(np.floor((-n / z - 3) / 4.0))
    k2 = np.arange(start2, stop + 1, dtype=np.float64)
    term2 = (ndtr((4.0 * k2 + 3.0) * z / sqrt_n) - ndtr((4.0 * k2 + 1.0) * z / sqrt_n)).sum()
    p = float(1.0 - term1 + term2)
    p = min(max(p, 0.0), 1.0)
    name = "cumulative_sums_backward" if reverse else "cumulative_sums_forward"
    return TestReport(name, p, n)


def run_battery(bits) -> list[TestReport]:
    """All implemented tests over one bit stream, in a fixed order."""
    return [
        monobit_test(bits),
        block_frequency_test(bits),
        runs_test(bits),
        longest_run_test(bits),
        cusum_test(bits, reverse=False),
        cusum_test(bits, reverse=True),
    ]


# ---------------------------------------------------------------------------
# Shaped-float checks.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HistogramReport:
    """Unit-interval frequency histogram with its max/min relative spread."""

    bin_width: float
    frequencies: np.ndarray
    spread: float

    @property
    def degenerate(self) -> bool:
        return not np.isfinite(self.spread)


def frequency_histogram(floats, bin_width: float = 0.01) -> HistogramReport:
    """Bin unit floats and report the (max - min)/min frequency spread.

    An empty bin makes the spread infinite, which callers should treat as a
    failed uniformity check.
    """
    x = np.asarray(floats, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("frequency histogram needs a non-empty sample")
    n_bins = round(1.0 / bin_width)
    if abs(n_bins * bin_width - 1.0) > 1e-9 or n_bins < 2:
        raise ValueError(f"bin width {bin_width} does not evenly divide the unit interval")
    counts, _ = np.histogram(x, bins=n_bins, range=(0.0, 1.0))
    freq = counts / x.size
    fmin = float(freq.min())
    fmax = float(freq.max())
    spread = (fmax - fmin) / fmin if fmin > 0 else float("inf")
    return HistogramReport(bin_width, freq, spread)


@dataclass(frozen=True)
class JointReport:
    """Lag-1 joint histogram and its chi-square uniformity p-value."""

    counts: np.ndarray
    chi_square: float
    p_value: float

    @property
    def passed(self) -> bool:
        return self.p_value >= ALPHA


def lag1_joint(floats, bins: int = 100) -> JointReport:
    """Joint distribution of (x_k, x_{k+1}) pairs over a bins x bins grid."""
    x = np.asarray(floats, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError("lag-1 joint distribution needs at least 2 samples")
    counts, _, _ = np.histogram2d(x[:-1], x[1:], bins=bins, range=((0.0, 1.0), (0.0, 1.0)))
    expected = (x.size - 1) / bins ** 2
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    p = float(gammaincc((bins ** 2 - 1) / 2.0, chi2 / 2.0))
    return JointReport(counts, chi2, p)


def median_threshold_bits(floats) -> np.ndarray:
    """Threshold floats at their median: bit[k] = float[k] >= median."""
    x = np.asarray(floats, dtype=np.float64).ravel()
    if x.size < 100:
        raise ValueError(f"median thresholding needs at least 100 samples, got {x.size}")
    return (x >= np.median(x)).astype(np.uint8)


def load_bitstream(path) -> np.ndarray:
    """Read a bit stream from a file, auto-detecting its encoding.

    A file of '0'/'1' characters (whitespace allowed) is parsed digit by
    digit; anything else is treated as raw binary and unpacked most
    significant bit first.
    """
    data = Path(path).read_bytes()
    if not data:
        raise ValueError(f"{path}: empty bit stream")
    ascii_like = max(data) < 128 and sum(ch in b"01" for ch in data) >= 0.5 * len(data)
    if not ascii_like:
        return np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    bits: list[int] = []
    for line_no, line in enumerate(data.decode("ascii").splitlines(), start=1):
        for ch in line:
            if ch in "01":
                bits.append(ch == "1")
            elif not ch.isspace():
                raise ValueError(f"{path}:{line_no}: invalid character {ch!r} in bit stream")
    return np.array(bits, dtype=np.uint8)
