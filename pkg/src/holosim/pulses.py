"""Pulse envelopes and gate-level pulse schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .errors import InvalidArgument, InvalidSchedule

DEFAULT_TRUNCATION = 1e-3


def arcsech(x: float) -> float:
    if not 0 < x <= 1:
        raise InvalidArgument("arcsech is defined on (0, 1]")
    return math.log((1 + math.sqrt(1 - x * x)) / x)


@dataclass(frozen=True)
class SechEnvelope:
    """Truncated hyperbolic secant ``scale * beta * sech(beta (t - center))``.

    The envelope is exactly zero where ``sech < truncation_ratio``.  ``scale``
    is 1 for the plain pulse; :meth:`with_area` adjusts it.
    """

    beta: float
    center: float = 0.0
    truncation_ratio: float = DEFAULT_TRUNCATION
    scale: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise InvalidArgument("beta must be positive")
        if not 0 < self.truncation_ratio < 1:
            raise InvalidArgument("truncation_ratio must lie in (0, 1)")

    @property
    def half_width(self) -> float:
        return arcsech(self.truncation_ratio) / self.beta

    @property
    def support(self) -> tuple[float, float]:
        hw = self.half_width
        return self.center - hw, self.center + hw

    @property
    def duration(self) -> float:
        return 2 * self.half_width

    @property
    def peak(self) -> float:
        return self.scale * self.beta

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        x = self.beta * (t - self.center)
        inside = np.abs(x) <= arcsech(self.truncation_ratio)
        # cosh overflows far outside the support; those points are masked anyway
        with np.errstate(over="ignore"):
            val = np.where(inside, self.peak / np.cosh(np.where(inside, x, 0.0)), 0.0)
        return float(val) if val.ndim == 0 else val

    def area(self) -> float:
        a, b = self.support
        val, _ = quad(lambda t: self.peak / math.cosh(self.beta * (t - self.center)),
                      a, b, epsabs=0.0, epsrel=1e-13, limit=200)
        return val

    def with_area(self, target: float) -> "SechEnvelope":
        return replace(self, scale=self.scale * target / self.area())

    def shifted(self, center: float) -> "SechEnvelope":
        return replace(self, center=center)


@dataclass(frozen=True)
class RectEnvelope:
    """Constant amplitude on ``[start, stop]``; used for integrator checks."""

    amplitude: float
    start: float
    stop: float

    def __post_init__(self):
        if self.stop <= self.start:
            raise InvalidArgument("rectangular envelope needs stop > start")

    @property
    def support(self) -> tuple[float, float]:
        return self.start, self.stop

    @property
    def center(self) -> float:
        return 0.5 * (self.start + self.stop)

    @property
    def duration(self) -> float:
        return self.stop - self.start

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = np.where((t >= self.start) & (t <= self.stop), self.amplitude, 0.0)
        return float(val) if val.ndim == 0 else val

    def area(self) -> float:
        return self.amplitude * (self.stop - self.start)

    def with_area(self, target: float) -> "RectEnvelope":
        return replace(self, amplitude=target / (self.stop - self.start))

    def shifted(self, center: float) -> "RectEnvelope":
        half = 0.5 * self.duration
        return replace(self, start=center - half, stop=center + half)


def envelope_value(env, t):
    return env(t)


def envelope_area(env) -> float:
    return env.area()


@dataclass(frozen=True)
class PulsePair:
    """Two simultaneous pulses sharing one envelope, with couplings ``(omega0, omega1)``."""

    envelope: SechEnvelope | RectEnvelope
    omega0: complex
    omega1: complex

    def __post_init__(self):
        norm = abs(self.omega0) ** 2 + abs(self.omega1) ** 2
        if abs(norm - 1) > 1e-12:
            raise InvalidArgument(f"pulse-pair couplings not normalized (sum |w|^2 = {norm})")

    @property
    def couplings(self) -> np.ndarray:
        return np.array([self.omega0, self.omega1], dtype=complex)

    @property
    def support(self) -> tuple[float, float]:
        return self.envelope.support


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered pulse pairs inside a ``[prep_time, readout_time]`` window."""

    pairs: tuple[PulsePair, ...]
    prep_time: float
    readout_time: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if self.readout_time < self.prep_time:
            raise InvalidSchedule("readout_time precedes prep_time")
        supports = [p.support for p in self.pairs]
        for (a0, b0), (a1, b1) in zip(supports, supports[1:]):
            if a1 <= b0:
                raise InvalidSchedule(
                    f"pulse supports overlap or are out of order: [{a0}, {b0}] and [{a1}, {b1}]")
        if supports:
            if self.prep_time > supports[0][0] + 1e-12 * max(1.0, abs(supports[0][0])):
                raise InvalidSchedule("prep_time after the first pulse starts")
            if self.readout_time < supports[-1][1] - 1e-12 * max(1.0, abs(supports[-1][1])):
                raise InvalidSchedule("readout_time before the last pulse ends")

    @property
    def separation(self) -> float | None:
        """Center-to-center spacing of consecutive pairs (``None`` for < 2 pairs)."""
        if len(self.pairs) < 2:
            return None
        return self.pairs[1].envelope.center - self.pairs[0].envelope.center

    @property
    def supports(self) -> list[tuple[float, float]]:
        return [p.support for p in self.pairs]

    @classmethod
    def from_couplings(
        cls,
        couplings: Sequence[tuple[complex, complex]],
        beta: float,
        separation: float = 0.0,
        prep_offset: float = 0.0,
        readout_offset: float = 0.0,
        truncation_ratio: float = DEFAULT_TRUNCATION,
        exact_area: bool = False,
    ) -> "PulseSchedule":
        """Sech pulse pairs centered at ``0, separation, 2*separation, ...``.

        ``prep_offset``/``readout_offset`` are the idle times before the first
        support starts and after the last support ends.  With ``exact_area``
        every envelope is rescaled to area pi.
        """
        if len(couplings) > 1 and separation <= 0:
            raise InvalidSchedule("separation must be positive for more than one pair")
        env = SechEnvelope(beta, 0.0, truncation_ratio)
        if exact_area:
            env = env.with_area(math.pi)
        pairs = tuple(PulsePair(env.shifted(k * separation), complex(w0), complex(w1))
                      for k, (w0, w1) in enumerate(couplings))
        if pairs:
            prep = pairs[0].support[0] - prep_offset
            readout = pairs[-1].support[1] + readout_offset
        else:
            prep, readout = -prep_offset, readout_offset
        return cls(pairs, prep, readout)


def schedule_duration(s: PulseSchedule) -> float:
    return s.readout_time - s.prep_time
