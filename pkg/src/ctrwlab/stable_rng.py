"""Seedable random variates: normal, Rademacher, exponential and stable laws.

Stable laws use the S_alpha(sigma, gamma, mu) convention whose characteristic
function is

    exp(-sigma^a |u|^a (1 - i gamma sign(u) tan(pi a / 2)) + i mu u),   a != 1
    exp(-sigma |u| (1 + i gamma (2/pi) sign(u) log|u|) + i mu u),       a == 1

so that alpha = 2 is normal with variance 2 sigma^2 and alpha = 1, gamma = 0
is Cauchy with scale sigma.  One-sided laws are normalised by their Laplace
transform, E[exp(-s tau)] = exp(-s^beta).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterDomainError

__all__ = [
    "StableParams",
    "RngStream",
    "sample_stable",
    "sample_one_sided_stable",
    "sample_elementary",
    "stable_variates",
    "one_sided_stable_variates",
]

_U64 = (1 << 64) - 1


def _hash64(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class StableParams:
    """Descriptor of S_alpha(scale, skewness, location)."""

    alpha: float
    skewness: float = 0.0
    scale: float = 1.0
    location: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ParameterDomainError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not (-1.0 <= self.skewness <= 1.0):
            raise ParameterDomainError(f"skewness must lie in [-1, 1], got {self.skewness}")
        if not (self.scale > 0.0) or not math.isfinite(self.scale):
            raise ParameterDomainError(f"scale must be positive, got {self.scale}")
        if not math.isfinite(self.location):
            raise ParameterDomainError("location must be finite")

    @classmethod
    def one_sided(cls, beta: float) -> "StableParams":
        """Totally skewed law with Laplace transform exp(-s^beta)."""
        if not (0.0 < beta < 1.0):
            raise ParameterDomainError(f"beta must lie in (0, 1), got {beta}")
        return cls(alpha=beta, skewness=1.0, scale=math.cos(math.pi * beta / 2) ** (1.0 / beta))


@dataclass(frozen=True)
class RngStream:
    """Immutable (seed, stream_id) pair naming an independent variate stream.

    The bit generator is Philox (counter based, 128-bit key) keyed through a
    ``SeedSequence`` built from both integers, so distinct ids give
    independent streams and the same pair always replays the same bits.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or not (0 <= v <= _U64):
                raise ParameterDomainError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, *labels) -> "RngStream":
        """Derive a child stream; labels may be strings or integers."""
        return RngStream(self.seed, _hash64(int(self.stream_id), *labels))

    @classmethod
    def named(cls, seed: int, name: str) -> "RngStream":
        return cls(seed, _hash64("root", name))


def _check_count(count):
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise ParameterDomainError(f"count must be a positive integer, got {count!r}")


def stable_variates(gen: np.random.Generator, params: StableParams, size) -> np.ndarray:
    """Chambers-Mallows-Stuck transform drawing from an existing generator."""
    a, g = params.alpha, params.skewness
    v = gen.uniform(-math.pi / 2, math.pi / 2, size)
    w = gen.standard_exponential(size)
    if a == 1.0:
        half_pi = math.pi / 2
        gv = half_pi + g * v
        x = (gv * np.tan(v) - g * np.log(half_pi * w * np.cos(v) / gv)) / half_pi
        x = params.scale * x + (2.0 / math.pi) * g * params.scale * math.log(params.scale)
    else:
        t = g * math.tan(math.pi * a / 2)
        b = math.atan(t) / a
        s = (1.0 + t * t) ** (1.0 / (2.0 * a))
        x = (
            s
            * np.sin(a * (v + b))
            / np.cos(v) ** (1.0 / a)
            * (np.cos(v - a * (v + b)) / w) ** ((1.0 - a) / a)
        )
        x = params.scale * x
    return x + params.location


def one_sided_stable_variates(gen: np.random.Generator, beta: float, size) -> np.ndarray:
    """Kanter's representation of the positive beta-stable law, E e^{-s tau} = e^{-s^beta}."""
    u = gen.uniform(0.0, math.pi, size)
    w = gen.standard_exponential(size)
    return (
        np.sin(beta * u)
        / np.sin(u) ** (1.0 / beta)
        * (np.sin((1.0 - beta) * u) / w) ** ((1.0 - beta) / beta)
    )


def sample_stable(params: StableParams, stream: RngStream, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. S_alpha(scale, skewness, location) variates."""
    _check_count(count)
    return stable_variates(stream.generator(), params, count)


def sample_one_sided_stable(beta: float, stream: RngStream, count: int) -> np.ndarray:
    """Draw ``count`` strictly beta-stable positive variates.

    Strict stability means (tau_1 + ... + tau_n) / n^(1/beta) has the law of
    tau_1; every returned value is strictly positive.
    """
    if not (0.0 < beta < 1.0):
        raise ParameterDomainError(f"beta must lie in (0, 1), got {beta}")
    _check_count(count)
    x = one_sided_stable_variates(stream.generator(), beta, count)
    # u == 0 has probability 2^-53; the transform would give 0 there.
    return np.maximum(x, np.finfo(float).tiny)


def sample_elementary(kind: str, stream: RngStream, count: int, rate: float = 1.0) -> np.ndarray:
    """Draw normal, Rademacher or exponential(rate) variates.

    ``kind`` is one of ``"normal"``, ``"rademacher"``, ``"exponential"``.
    """
    _check_count(count)
    gen = stream.generator()
    if kind == "normal":
        return gen.standard_normal(count)
    if kind == "rademacher":
        return np.where(gen.random(count) < 0.5, -1.0, 1.0)
    if kind == "exponential":
        if not (rate > 0.0) or not math.isfinite(rate):
            raise ParameterDomainError(f"exponential rate must be positive, got {rate}")
        return gen.standard_exponential(count) / rate
    raise ParameterDomainError(f"unknown elementary law {kind!r}")
