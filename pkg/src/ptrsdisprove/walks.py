"""Finite-support random walks on the integers, stopped at values ≤ 0."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Mapping

import numpy as np

WalkKind = Literal["loop", "symmetric", "positively_biased", "negatively_biased"]

# bit generator behind simulate(); recorded so statistical test logs can name it
RNG_ALGORITHM = "numpy.random.PCG64"


class WalkError(ValueError):
    pass


@dataclass(frozen=True)
class RandomWalk:
    steps: tuple[tuple[int, Fraction], ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise WalkError("a random walk needs a non-empty support")
        if any(p <= 0 for _, p in self.steps):
            raise WalkError("support entries must have positive probability")
        total = sum(p for _, p in self.steps)
        if total != 1:
            raise WalkError(f"step probabilities sum to {total}, not 1")

    @classmethod
    def of(cls, mu: Mapping[int, Fraction | int | str]) -> "RandomWalk":
        items = {int(x): Fraction(p) for x, p in mu.items()}
        return cls(tuple(sorted((x, p) for x, p in items.items() if p != 0)))

    def __getitem__(self, x: int) -> Fraction:
        return dict(self.steps).get(x, Fraction(0))

    @property
    def support(self) -> list[int]:
        return [x for x, _ in self.steps]

    def to_json(self) -> dict[str, str]:
        return {str(x): str(p) for x, p in self.steps}


@dataclass(frozen=True)
class WalkClass:
    kind: WalkKind
    is_ast: bool
    is_past: bool


def walk_from_counts(leaves: Iterable[tuple[Fraction, int]]) -> RandomWalk:
    """μ(x) = total probability of the leaves whose count is x + 1."""
    mu: dict[int, Fraction] = {}
    total = Fraction(0)
    for p, count in leaves:
        p = Fraction(p)
        total += p
        mu[count - 1] = mu.get(count - 1, Fraction(0)) + p
    if total != 1:
        raise WalkError(f"leaf probabilities sum to {total}, not 1")
    return RandomWalk.of(mu)


def expected_value(mu: RandomWalk) -> Fraction:
    return sum((x * p for x, p in mu.steps), Fraction(0))


def classify(mu: RandomWalk) -> WalkClass:
    if mu[0] == 1:
        return WalkClass("loop", False, False)
    e = expected_value(mu)
    if e > 0:
        return WalkClass("positively_biased", False, False)
    if e == 0:
        return WalkClass("symmetric", True, False)
    return WalkClass("negatively_biased", True, True)


@dataclass(frozen=True)
class SimulationResult:
    terminated: int
    trials: int
    total_steps: int

    @property
    def termination_frequency(self) -> Fraction:
        return Fraction(self.terminated, self.trials)

    @property
    def mean_steps(self) -> Fraction | None:
        if not self.terminated:
            return None
        return Fraction(self.total_steps, self.terminated)


def simulate(mu: RandomWalk, x0: int, horizon: int, trials: int, seed: int, block: int = 256) -> SimulationResult:
    """Monte-Carlo estimate of the termination behaviour of ``mu`` from ``x0``.

    Each trial stops when its value reaches ≤ 0 or after ``horizon`` steps.
    All trials advance together in blocks of steps; the result depends only
    on the arguments.
    """
    if horizon <= 0 or trials <= 0:
        raise WalkError("horizon and trials must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    denom = math.lcm(*(p.denominator for _, p in mu.steps))
    if denom <= 1 << 16:
        # exact sampling: uniform integers below the common denominator
        table = np.repeat(
            np.array(mu.support, dtype=np.int32),
            [int(p * denom) for _, p in mu.steps],
        )

        small = np.uint8 if denom <= 256 else np.uint16

        def draw(n: int, b: int) -> np.ndarray:
            return table[rng.integers(0, denom, size=(n, b), dtype=small)]

    else:
        values = np.array(mu.support, dtype=np.int32)
        cdf = np.cumsum([float(p) for _, p in mu.steps])
        cdf[-1] = 1.0

        def draw(n: int, b: int) -> np.ndarray:
            return values[np.searchsorted(cdf, rng.random((n, b)), side="right")]

    max_down = max(0, -min(mu.support))
    wide = abs(x0) + horizon * max(abs(v) for v in mu.support) >= 1 << 31
    acc = np.int64 if wide else np.int32

    if x0 <= 0:
        return SimulationResult(trials, trials, 0)
    pos = np.full(trials, x0, dtype=acc)
    active = np.arange(trials)
    terminated, total_steps, t = 0, 0, 0
    while active.size and t < horizon:
        b = min(block, horizon - t)
        paths = pos[active, None] + np.cumsum(draw(active.size, b), axis=1, dtype=acc)
        hit = paths <= 0
        done = hit.any(axis=1)
        first = hit.argmax(axis=1)
        terminated += int(done.sum())
        total_steps += int((t + first[done] + 1).sum())
        survivors = ~done
        pos[active[survivors]] = paths[survivors, -1]
        active = active[survivors]
        t += b
        if max_down == 0:
            break
        # trials too far above 0 to come back before the horizon
        reachable = pos[active] <= (horizon - t) * max_down
        active = active[reachable]
    return SimulationResult(terminated, trials, total_steps)
