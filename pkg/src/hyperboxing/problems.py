"""The benchmark problems: evaluators, start-box corners and front samplers.

Five problems: sphere and ellipsoid (any m >= 2, closed-form scalarization),
plus three tri-objective problems (non-convex connected front, comet-shaped
front, patched front with four disconnected parts) solved on a decision grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .geometry import Point

PROBLEM_NAMES = ("sphere", "ellipsoid", "nonconvex", "comet", "patched")


class UnsupportedProblem(ValueError):
    """Requested capability is not available for this problem."""


@dataclass
class ProblemSpec:
    """A multi-objective test problem in decision-space form."""

    name: str
    m: int
    decision_box: tuple[tuple[float, float], ...] | None
    ideal: Point
    nadir: Point
    analytic_quadric: Point | None = None
    default_grid_resolution: int = 64
    evaluate_batch: Callable[[np.ndarray], np.ndarray] = None
    feasible_batch: Callable[[np.ndarray], np.ndarray] = None
    front_sampler: Callable[[int, int], np.ndarray] | None = None

    def __post_init__(self):
        if not all(i <= n for i, n in zip(self.ideal, self.nadir)):
            raise ValueError("ideal point must be componentwise <= nadir point")

    def feasible(self, x) -> bool:
        return bool(self.feasible_batch(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def evaluate(self, x) -> Point:
        """Objective vector at a single feasible decision vector."""
        arr = np.atleast_2d(np.asarray(x, dtype=float))
        if not self.feasible_batch(arr)[0]:
            raise ValueError(f"infeasible decision vector {x!r} for {self.name}")
        return tuple(float(v) for v in self.evaluate_batch(arr)[0])

    @property
    def has_front_sampler(self) -> bool:
        return self.front_sampler is not None

    def sample_front(self, n: int, seed: int = 0) -> np.ndarray:
        """Seeded quasi-uniform sample of the nondominated set, shape (<=n, m)."""
        if self.front_sampler is None:
            raise UnsupportedProblem(f"{self.name} has no front sampler")
        if n < 1:
            raise ValueError("sample count must be positive")
        return self.front_sampler(n, seed)


def nondominated_mask(points: np.ndarray) -> np.ndarray:
    """Rows not weakly dominated by a distinct row (minimization, exact)."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    keep = np.ones(n, dtype=bool)
    chunk = max(1, int(4e6 // max(1, points.size)))
    for i in range(0, n, chunk):
        block = points[i : i + chunk]
        le = (points[None, :, :] <= block[:, None, :]).all(axis=2)
        eq = (points[None, :, :] == block[:, None, :]).all(axis=2)
        keep[i : i + chunk] = ~(le & ~eq).any(axis=1)
    return keep


def _dedupe(points: np.ndarray) -> np.ndarray:
    return np.unique(points, axis=0)


def _filter_front(images: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    images = _dedupe(images)
    images = images[nondominated_mask(images)]
    if len(images) > n:
        idx = rng.choice(len(images), size=n, replace=False)
        images = images[np.sort(idx)]
    return images


# -- sphere / ellipsoid -------------------------------------------------------


def _make_quadric(name: str, m: int) -> ProblemSpec:
    if m < 2:
        raise ValueError(f"{name} needs m >= 2, got {m}")
    if name == "sphere":
        a = (1.0,) * m
    else:
        a = (float(m),) + (1.0,) * (m - 1)
    a_arr = np.asarray(a)

    def evaluate_batch(x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)

    def feasible_batch(x: np.ndarray) -> np.ndarray:
        return (np.square(np.asarray(x) / a_arr).sum(axis=1) <= 1.0 + 1e-12)

    def front_sampler(n: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        dirs = np.abs(rng.standard_normal((n, m)))
        norms = np.linalg.norm(dirs, axis=1)
        norms[norms == 0] = 1.0
        return -a_arr * dirs / norms[:, None]

    return ProblemSpec(
        name=name,
        m=m,
        decision_box=tuple((-ai, 0.0) for ai in a),
        ideal=tuple(-ai for ai in a),
        nadir=(0.0,) * m,
        analytic_quadric=a,
        evaluate_batch=evaluate_batch,
        feasible_batch=feasible_batch,
        front_sampler=front_sampler,
    )


# -- non-convex connected front ----------------------------------------------

_NC_X1_MAX = math.acos(0.2)
_NC_X2_MAX = math.log(5.0)


def _make_nonconvex() -> ProblemSpec:
    def evaluate_batch(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([-x[:, 0], -x[:, 1], -np.square(x[:, 2])], axis=1)

    def feasible_batch(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x[:, 2] - np.cos(x[:, 0]) - np.exp(-x[:, 1]) <= 1e-9

    def front_sampler(n: int, seed: int) -> np.ndarray:
        # The efficient set is the constraint surface x3 = cos x1 + exp(-x2)
        # restricted to x3 >= 1.2: raising either of x1, x2 strictly lowers
        # the attainable x3, so distinct surface points never dominate each
        # other and no filtering is required.
        rng = np.random.default_rng(seed)
        x1 = rng.uniform(0.0, _NC_X1_MAX, n)
        x2 = rng.uniform(0.0, 1.0, n) * (-np.log(1.2 - np.cos(x1)))
        x3 = np.cos(x1) + np.exp(-x2)
        return np.stack([-x1, -x2, -np.square(x3)], axis=1)

    return ProblemSpec(
        name="nonconvex",
        m=3,
        decision_box=((0.0, math.pi), (0.0, _NC_X2_MAX), (1.2, 2.0)),
        ideal=(-_NC_X1_MAX, -_NC_X2_MAX, -4.0),
        nadir=(0.0, 0.0, -1.44),
        default_grid_resolution=64,
        evaluate_batch=evaluate_batch,
        feasible_batch=feasible_batch,
        front_sampler=front_sampler,
    )


# -- comet --------------------------------------------------------------------

# Closed-form minimum of the first (and, by symmetry, second) objective on
# the front: x1 = 3.5, x2 on the branch boundary, x3 = 1.
_COMET_F1_MIN = 2.0 * (-4.0 / 3.5**3 - 10.0 * 3.5)


def _comet_objectives(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
    base = x1**3 * x2**2 - 10.0 * x1
    f1 = (1.0 + x3) * (base - 4.0 * x2)
    f2 = (1.0 + x3) * (base + 4.0 * x2)
    f3 = 3.0 * (1.0 + x3) * x1**2
    return np.stack([f1, f2, f3], axis=1)


def _make_comet() -> ProblemSpec:
    box = ((1.0, 3.5), (-2.0, 2.0), (0.0, 1.0))

    def feasible_batch(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ok = np.ones(len(x), dtype=bool)
        for d, (lo, hi) in enumerate(box):
            ok &= (x[:, d] >= lo) & (x[:, d] <= hi)
        return ok

    def front_sampler(n: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        half = max(n, 1024)
        # Tail piece: x3 = 1, x2 restricted by |x2| <= 2 / x1^3.
        x1 = rng.uniform(1.0, 3.5, half)
        x2 = rng.uniform(-1.0, 1.0, half) * (2.0 / x1**3)
        tail = np.stack([x1, x2, np.ones(half)], axis=1)
        # Head piece: x1 = 1, full x2 and x3 ranges.
        x2h = rng.uniform(-2.0, 2.0, half)
        x3h = rng.uniform(0.0, 1.0, half)
        head = np.stack([np.ones(half), x2h, x3h], axis=1)
        images = _comet_objectives(np.vstack([tail, head]))
        return _filter_front(images, n, rng)

    return ProblemSpec(
        name="comet",
        m=3,
        decision_box=box,
        ideal=(_COMET_F1_MIN, _COMET_F1_MIN, 3.0),
        nadir=(4.0, 4.0, 73.5),
        default_grid_resolution=72,
        evaluate_batch=_comet_objectives,
        feasible_batch=feasible_batch,
        front_sampler=front_sampler,
    )


# -- patched front ------------------------------------------------------------


def _patched_h(x: np.ndarray) -> np.ndarray:
    return x * (1.0 + np.sin(3.0 * math.pi * x))


def _patched_dh(x: float) -> float:
    w = 3.0 * math.pi * x
    return 1.0 + math.sin(w) + 3.0 * math.pi * x * math.cos(w)


def _patched_axis_intervals() -> tuple[tuple[float, float], tuple[float, float]]:
    """Per-axis pieces on which h strictly exceeds its running maximum.

    h rises to a local peak at x_p, dips, and only regains that level at
    x_r before climbing to its global maximum x*.  A coordinate value
    outside [0, x_p] | [x_r, x*] is dominated through the third objective
    by some smaller coordinate, so the efficient set of the problem is
    exactly the product of these two bands.
    """
    x_p = brentq(_patched_dh, 0.2, 0.3, xtol=1e-14)
    x_star = brentq(_patched_dh, 0.8, 0.9, xtol=1e-14)
    h = _patched_h
    x_r = brentq(lambda x: float(h(np.array([x]))[0] - h(np.array([x_p]))[0]),
                 0.5, x_star, xtol=1e-14)
    return (0.0, x_p), (x_r, x_star)


def _patched_h_peak() -> float:
    (_, _), (_, x_star) = _patched_axis_intervals()
    return float(_patched_h(np.array([x_star]))[0])


def _make_patched() -> ProblemSpec:
    h_max = _patched_h_peak()

    def evaluate_batch(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        f3 = 6.0 - _patched_h(x[:, 0]) - _patched_h(x[:, 1])
        return np.stack([x[:, 0], x[:, 1], f3], axis=1)

    def feasible_batch(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return ((x >= 0.0) & (x <= 1.0)).all(axis=1)

    bands = _patched_axis_intervals()
    lengths = np.array([hi - lo for lo, hi in bands])

    def _draw_axis(rng: np.random.Generator, n: int) -> np.ndarray:
        # Length-weighted uniform draw over the two efficient bands.
        pick = rng.random(n) * lengths.sum()
        offset = np.where(pick < lengths[0], pick, pick - lengths[0])
        lo = np.where(pick < lengths[0], bands[0][0], bands[1][0])
        return lo + offset

    def front_sampler(n: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        grid = np.stack([_draw_axis(rng, n), _draw_axis(rng, n)], axis=1)
        return evaluate_batch(grid)

    return ProblemSpec(
        name="patched",
        m=3,
        decision_box=((0.0, 1.0), (0.0, 1.0)),
        ideal=(0.0, 0.0, 6.0 - 2.0 * h_max),
        nadir=(0.86, 0.86, 6.0),
        default_grid_resolution=512,
        evaluate_batch=evaluate_batch,
        feasible_batch=feasible_batch,
        front_sampler=front_sampler,
    )


def make_problem(name: str, m: int = 3) -> ProblemSpec:
    """Build one of the named test problems for m objectives."""
    if name in ("sphere", "ellipsoid"):
        return _make_quadric(name, m)
    if m != 3:
        raise ValueError(f"problem {name!r} is defined for m = 3 only, got m = {m}")
    if name == "nonconvex":
        return _make_nonconvex()
    if name == "comet":
        return _make_comet()
    if name == "patched":
        return _make_patched()
    raise ValueError(f"unknown problem {name!r}; choose from {PROBLEM_NAMES}")
