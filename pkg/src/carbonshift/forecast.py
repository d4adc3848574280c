"""Carbon intensity forecasts: the true signal, optionally perturbed by noise.

Noise is i.i.d. normal per slot with a standard deviation proportional to the
mean of the whole signal, and it does not grow with the forecast horizon.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HorizonError
from .gridmodel import CarbonSignal

PERFECT = "perfect"
GAUSSIAN = "gaussian_noise"


@dataclass(frozen=True)
class ForecastModel:
    kind: str = PERFECT
    relative_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (PERFECT, GAUSSIAN):
            raise ValueError(f"unknown forecast kind {self.kind!r}")
        if not self.relative_sigma >= 0:
            raise ValueError("relative_sigma must be >= 0")
        if self.kind == PERFECT and self.relative_sigma != 0:
            raise ValueError("a perfect forecast has relative_sigma = 0")

    @classmethod
    def with_error(cls, relative_sigma: float, seed: int = 0) -> "ForecastModel":
        """Perfect model for 0, gaussian noise otherwise."""
        if relative_sigma == 0:
            return cls(PERFECT, 0.0, seed)
        return cls(GAUSSIAN, float(relative_sigma), seed)

    @property
    def is_perfect(self) -> bool:
        return self.kind == PERFECT

    def noise_std(self, signal: CarbonSignal) -> float:
        return self.relative_sigma * signal.mean()


def noise_rng(seed: int, repetition: int, start: int) -> np.random.Generator:
    # seed + repetition: repetition r of base seed s behaves like seed s + r
    return np.random.default_rng([seed + repetition, start])


def forecast(signal: CarbonSignal, model: ForecastModel, start: int, stop: int,
             repetition: int = 0, noise_std: float | None = None) -> np.ndarray:
    """Forecast of ``signal`` for slots ``[start, stop)``.

    The draw depends only on ``(model.seed + repetition, start)``, so the same
    call always returns the same values and a longer horizon from the same
    start extends a shorter one. ``noise_std`` may be passed to skip
    recomputing the signal mean in tight loops.
    """
    if start < 0 or stop > len(signal) or start > stop:
        raise HorizonError(f"forecast horizon [{start}, {stop}) outside signal of {len(signal)} slots")
    truth = signal.values[start:stop]
    if model.is_perfect:
        return truth.copy()
    std = model.noise_std(signal) if noise_std is None else noise_std
    noise = noise_rng(model.seed, repetition, start).normal(0.0, std, stop - start)
    return np.maximum(truth + noise, 0.0)
