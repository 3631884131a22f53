"""Deterministic, splittable random streams.

Every stream is xoshiro256++ seeded by a splitmix64 expansion of a 64-bit
seed. Seeds are derived from a :class:`SeedContext` (global seed, corruption
code, level, sample index), so a corrupted sample depends only on that tuple
and never on generation order or thread count.

Draw accounting is part of the contract:

* ``uniform`` consumes one 64-bit draw (top 53 bits -> [0, 1)).
* ``gaussian`` uses trigonometric Box-Muller on two draws and caches the
  second normal; the cache is part of the stream state.
* ``int_inclusive`` uses plain rejection against the largest multiple of the
  range size that fits in 2**64, so it consumes one draw except on (rare)
  rejection.
* ``permutation`` is Fisher-Yates from ``n - 1`` down to ``1``.
* ``point_in_unit_sphere`` takes three gaussians then one uniform, redrawing
  the gaussians if their norm is below 1e-12.

The sequential kernels are compiled with numba; all transcendental calls are
double precision.
"""
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import InvalidRange, InvalidSeedContext, InvalidSigma

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# corruption_id codes beyond the seven corruptions
AUGMENTATION_ID = 7
COMPOSITE_ID = 8
MAX_CORRUPTION_ID = 8

_U = np.uint64
_S11 = _U(11)
_S17 = _U(17)
_S23 = _U(23)
_S45 = _U(45)
_ZERO = _U(0)
_ONE = _U(1)
_MAXU = _U(MASK64)
_INV53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi


# --- scalar splitmix64 (plain ints) --------------------------------------

def splitmix64_mix(x):
    """One splitmix64 step from state ``x``; returns the output word."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64_sequence(seed, n):
    """First ``n`` outputs of a splitmix64 generator started at ``seed``."""
    out = []
    state = seed & MASK64
    for _ in range(n):
        out.append(splitmix64_mix(state))
        state = (state + GOLDEN_GAMMA) & MASK64
    return out


def parse_seed(value):
    """Parse a 64-bit unsigned seed from an int, decimal string or ``0x`` hex string."""
    if isinstance(value, str):
        text = value.strip().lower()
        seed = int(text, 16) if text.startswith("0x") else int(text, 10)
    else:
        seed = int(value)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed {value!r} is not a 64-bit unsigned integer")
    return seed


@dataclass(frozen=True)
class SeedContext:
    global_seed: int
    corruption_id: int
    level: int = 0
    sample_index: int = 0

    def __post_init__(self):
        if not 0 <= self.global_seed <= MASK64:
            raise InvalidSeedContext(f"global_seed {self.global_seed} not a u64")
        if not 0 <= self.corruption_id <= MAX_CORRUPTION_ID:
            raise InvalidSeedContext(
                f"corruption_id {self.corruption_id} outside [0, {MAX_CORRUPTION_ID}]")
        if not 0 <= self.level <= 5:
            raise InvalidSeedContext(f"level {self.level} outside [0, 5]")
        if not 0 <= self.sample_index <= 0xFFFFFFFF:
            raise InvalidSeedContext(f"sample_index {self.sample_index} not a u32")

    def derive_seed(self):
        # fold order: corruption id, level, sample index
        h = self.global_seed ^ splitmix64_mix(self.corruption_id)
        h = splitmix64_mix(h ^ self.level)
        h = splitmix64_mix(h ^ self.sample_index)
        return h


# --- compiled kernels ----------------------------------------------------

_jit = numba.njit(cache=True, nogil=True)


@_jit
def _rotl(x, k):
    return (x << k) | (x >> (_U(64) - k))


@_jit
def _next(s):
    s0, s1, s2, s3 = s[0], s[1], s[2], s[3]
    result = _rotl(s0 + s3, _S23) + s0
    t = s1 << _S17
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, _S45)
    s[0], s[1], s[2], s[3] = s0, s1, s2, s3
    return result


@_jit
def _unit(s):
    return float(_next(s) >> _S11) * _INV53


@_jit
def _gauss(s, cache):
    if cache[0] != 0.0:
        cache[0] = 0.0
        return cache[1]
    u1 = 1.0 - _unit(s)  # (0, 1]
    u2 = _unit(s)
    r = math.sqrt(-2.0 * math.log(u1))
    theta = _TWO_PI * u2
    cache[0] = 1.0
    cache[1] = r * math.sin(theta)
    return r * math.cos(theta)


@_jit
def _bounded(s, span):
    # span = range size as uint64, 0 meaning the full 2**64
    if span == _ZERO:
        return _next(s)
    rem = ((_MAXU % span) + _ONE) % span
    limit = _MAXU - rem
    while True:
        x = _next(s)
        if rem == _ZERO or x <= limit:
            return x % span


@_jit
def _fill_raw(s, out):
    for i in range(out.shape[0]):
        out[i] = _next(s)


@_jit
def _fill_unit(s, out):
    for i in range(out.shape[0]):
        out[i] = _unit(s)


@_jit
def _fill_gauss(s, cache, out):
    for i in range(out.shape[0]):
        out[i] = _gauss(s, cache)


@_jit
def _fill_bounded(s, span, out):
    for i in range(out.shape[0]):
        out[i] = _bounded(s, span)


@_jit
def _permutation(s, n):
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = np.int64(_bounded(s, _U(i + 1)))
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return perm


@_jit
def _sphere_points(s, cache, out):
    for i in range(out.shape[0]):
        while True:
            x = _gauss(s, cache)
            y = _gauss(s, cache)
            z = _gauss(s, cache)
            norm = math.sqrt(x * x + y * y + z * z)
            if norm >= 1e-12:
                break
        radius = _unit(s) ** (1.0 / 3.0)
        out[i, 0] = radius * x / norm
        out[i, 1] = radius * y / norm
        out[i, 2] = radius * z / norm


def _seed_state(seed):
    return np.array(splitmix64_sequence(seed, 4), dtype=np.uint64)


class RandomStream:
    """xoshiro256++ stream with a cached spare gaussian.

    A stream is single-owner mutable state; use :meth:`clone` to fork an
    identical copy and :meth:`spawn` to derive an independent sub-stream.
    """

    def __init__(self, seed):
        self.seed = parse_seed(seed)
        self._state = _seed_state(self.seed)
        self._cache = np.zeros(2, dtype=np.float64)

    @classmethod
    def from_context(cls, ctx):
        return cls(ctx.derive_seed())

    def clone(self):
        other = RandomStream.__new__(RandomStream)
        other.seed = self.seed
        other._state = self._state.copy()
        other._cache = self._cache.copy()
        return other

    def spawn(self):
        """Consume one draw and use it to seed an independent stream."""
        return RandomStream(self.next_u64())

    def state(self):
        return tuple(int(v) for v in self._state), tuple(float(v) for v in self._cache)

    # raw words

    def next_u64(self):
        return int(_next(self._state))

    def raw_array(self, n):
        out = np.empty(n, dtype=np.uint64)
        _fill_raw(self._state, out)
        return out

    # uniforms

    def uniform(self, a=0.0, b=1.0):
        _check_range(a, b)
        # rounding can land on b when b - a is tiny; keep the interval half-open
        return min(a + (b - a) * _unit(self._state), math.nextafter(b, a))

    def uniform_array(self, n, a=0.0, b=1.0):
        _check_range(a, b)
        out = np.empty(n, dtype=np.float64)
        _fill_unit(self._state, out)
        return np.minimum(a + (b - a) * out, math.nextafter(b, a))

    # gaussians

    def gaussian(self, mu=0.0, sigma=1.0):
        _check_sigma(sigma)
        return mu + sigma * _gauss(self._state, self._cache)

    def gaussian_array(self, n, mu=0.0, sigma=1.0):
        """``n`` consecutive gaussians, identical to ``n`` calls to :meth:`gaussian`."""
        _check_sigma(sigma)
        out = np.empty(n, dtype=np.float64)
        _fill_gauss(self._state, self._cache, out)
        return mu + sigma * out

    # integers

    def int_inclusive(self, lo, hi):
        lo, hi = int(lo), int(hi)
        if lo > hi:
            raise InvalidRange(f"empty integer range [{lo}, {hi}]")
        span = (hi - lo + 1) & MASK64
        return lo + int(_bounded(self._state, _U(span)))

    def int_inclusive_array(self, n, lo, hi):
        lo, hi = int(lo), int(hi)
        if lo > hi:
            raise InvalidRange(f"empty integer range [{lo}, {hi}]")
        out = np.empty(n, dtype=np.uint64)
        _fill_bounded(self._state, _U((hi - lo + 1) & MASK64), out)
        return out.astype(np.int64) + lo

    def permutation(self, n):
        if n < 1:
            raise InvalidRange(f"permutation size must be >= 1, got {n}")
        return _permutation(self._state, n)

    # geometry

    def point_in_unit_sphere(self):
        return self.points_in_unit_sphere(1)[0]

    def points_in_unit_sphere(self, k):
        out = np.empty((k, 3), dtype=np.float64)
        _sphere_points(self._state, self._cache, out)
        return out

    # distributions built on the primitives

    def gamma(self, shape):
        """Marsaglia-Tsang gamma variate with unit scale."""
        if shape <= 0:
            raise InvalidRange(f"gamma shape must be positive, got {shape}")
        if shape < 1.0:
            g = self.gamma(shape + 1.0)
            return g * self.uniform() ** (1.0 / shape)
        d = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = self.gaussian()
            v = (1.0 + c * x) ** 3
            if v <= 0.0:
                continue
            u = self.uniform()
            if u == 0.0 or math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
                return d * v

    def beta(self, a, b):
        """Beta(a, b) variate; Beta(1, 1) is a single uniform draw."""
        if a <= 0 or b <= 0:
            raise InvalidRange(f"beta parameters must be positive, got ({a}, {b})")
        if a == 1.0 and b == 1.0:
            return self.uniform()
        x = self.gamma(a)
        y = self.gamma(b)
        return x / (x + y)


def derive_stream(ctx_or_seed, corruption_id=None, level=0, sample_index=0):
    """Build the stream for a :class:`SeedContext` (or its four fields)."""
    if isinstance(ctx_or_seed, SeedContext):
        ctx = ctx_or_seed
    else:
        ctx = SeedContext(int(ctx_or_seed), int(corruption_id), int(level), int(sample_index))
    return RandomStream.from_context(ctx)


def _check_range(a, b):
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise InvalidRange(f"invalid uniform range [{a}, {b})")


def _check_sigma(sigma):
    if not math.isfinite(sigma) or sigma < 0:
        raise InvalidSigma(f"sigma must be finite and >= 0, got {sigma}")
