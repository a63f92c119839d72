"""The refinement driver: pick the largest box, scalarize, update the region.

Two entry points:

* :class:`Session` exposes the loop step-wise (next_query / submit) so an
  external solver can supply the scalarization answers.
* :func:`run_representation` drives a session to completion with an
  in-process backend and returns a :class:`RunReport`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import Box, Point, SizeMode, box_measures, box_size
from .problems import ProblemSpec
from .scalarization import (
    ContractError,
    GridScalarizer,
    NoIntersection,
    ProtocolError,
    PSQuery,
    PSSolution,
    solve_quadric_ps,
)
from .search_region import SearchRegion, Strategy

DEFAULT_MAX_ITERATIONS = 100_000


class Ack(str, Enum):
    ACCEPTED = "accepted"
    SKIPPED_DOMINATED = "skippedDominated"
    STALLED_EVICTED = "stalledEvicted"


class SessionError(RuntimeError):
    """Operation on a closed session."""


@dataclass
class RunConfig:
    problem: ProblemSpec
    epsilon: float
    mode: SizeMode = SizeMode.ABSOLUTE
    strategy: Strategy = Strategy.IMPROVED
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    grid_resolution: int | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError(f"target approximation quality must be > 0, got {self.epsilon}")
        if self.max_iterations < 1:
            raise ValueError("iteration cap must be at least 1")


@dataclass
class RepresentationEntry:
    z: Point
    s: Point
    alpha: float
    box_lower: Point
    box_upper: Point


@dataclass
class RunReport:
    problem: str
    m: int
    epsilon: float
    mode: SizeMode
    strategy: Strategy
    entries: list[RepresentationEntry]
    iterations: int
    stalled_boxes: int
    skipped_dominated: int
    final_max_box_size: float
    selected_sizes: list[float]
    wall_time_total: float
    wall_time_region: float
    wall_time_solve: float
    truncated: bool = False

    @property
    def cardinality(self) -> int:
        return len(self.entries)

    @property
    def points(self) -> list[Point]:
        return [e.z for e in self.entries]


class Session:
    """One step-wise representation run over a start box.

    ``next_query`` is idempotent until the pending query is answered via
    ``submit`` (or given up via ``evict_pending`` when the backend cannot
    solve it).
    """

    def __init__(
        self,
        start_box: Box,
        epsilon: float,
        mode: SizeMode = SizeMode.ABSOLUTE,
        strategy: Strategy = Strategy.IMPROVED,
        max_iterations: int = DEFAULT_MAX_ITERATIONS,
    ):
        if epsilon <= 0:
            raise ValueError(f"target approximation quality must be > 0, got {epsilon}")
        self.region = SearchRegion(start_box, epsilon, mode, strategy)
        self.epsilon = float(epsilon)
        self.mode = SizeMode(mode)
        self.max_iterations = max_iterations
        self.entries: list[RepresentationEntry] = []
        self.selected_sizes: list[float] = []
        self.iterations = 0
        self.stalled_boxes = 0
        self.skipped_dominated = 0
        self.truncated = False
        self._accepted = np.empty((0, start_box.dim))
        self._pending: tuple[PSQuery, int, int, Box] | None = None
        self._next_query_id = 0
        self._closed = False

    def close(self) -> None:
        self._closed = True

    def next_query(self) -> PSQuery | None:
        if self._closed:
            raise SessionError("session is closed")
        if self._pending is not None:
            return self._pending[0]
        if self.iterations >= self.max_iterations:
            self.truncated = True
            return None
        pick = self.region.largest_box()
        if pick is None:
            return None
        box, l_id, u_id = pick
        query = PSQuery(self._next_query_id, box.upper, box.diagonal)
        self._pending = (query, l_id, u_id, box)
        return query

    def evict_pending(self) -> Ack:
        """Give up on the pending box (backend reported no intersection)."""
        if self._pending is None:
            raise ProtocolError("no pending query to evict")
        _, l_id, u_id, _ = self._pending
        self.region.evict_pair(l_id, u_id)
        self._finish_iteration()
        self.stalled_boxes += 1
        return Ack.STALLED_EVICTED

    def submit(self, solution: PSSolution) -> Ack:
        if self._closed:
            raise SessionError("session is closed")
        if self._pending is None:
            raise ProtocolError("no query is pending")
        query, l_id, u_id, box = self._pending
        if solution.query_id != query.query_id:
            raise ProtocolError(
                f"query id mismatch: expected {query.query_id}, got {solution.query_id}"
            )
        if any(v < -1e-9 for v in solution.lam):
            raise ContractError(f"negative slack beyond tolerance: {solution.lam}")
        z = tuple(float(v) for v in solution.z)
        s = tuple(zi + max(float(li), 0.0) for zi, li in zip(z, solution.lam))

        dominated = bool((self._accepted <= np.asarray(z)).all(axis=1).any())
        self.region.apply_point(z, s, lower_only=dominated)
        stalled = self.region.contains_bound(l_id) and self.region.contains_bound(u_id)
        if stalled:
            self.region.evict_pair(l_id, u_id)
            self.stalled_boxes += 1
        self._finish_iteration()
        if dominated:
            self.skipped_dominated += 1
            return Ack.SKIPPED_DOMINATED
        if stalled:
            return Ack.STALLED_EVICTED
        self.entries.append(
            RepresentationEntry(z, s, float(solution.alpha), box.lower, box.upper)
        )
        self._accepted = np.vstack([self._accepted, np.asarray(z)])
        return Ack.ACCEPTED

    def _finish_iteration(self) -> None:
        _, _, _, box = self._pending
        self.selected_sizes.append(box_size(box, self.mode))
        self._pending = None
        self._next_query_id += 1
        self.iterations += 1

    def final_max_box_size(self) -> float:
        return self.region.max_box_size_full_scan()


def start_box_for(problem: ProblemSpec) -> Box:
    """Start box spanned by the problem's ideal and nadir points."""
    scale = tuple(n - i for i, n in zip(problem.ideal, problem.nadir))
    return Box(problem.ideal, problem.nadir, scale)


def make_backend(config: RunConfig):
    """In-process scalarization backend for the configured problem."""
    problem = config.problem
    if problem.analytic_quadric is not None:
        a = problem.analytic_quadric
        return lambda query: solve_quadric_ps(query, a)
    return GridScalarizer(problem, config.grid_resolution).solve


def run_representation(config: RunConfig) -> RunReport:
    """Run the full refinement loop and report the representation found."""
    problem = config.problem
    solve = make_backend(config)
    session = Session(
        start_box_for(problem),
        config.epsilon,
        mode=config.mode,
        strategy=config.strategy,
        max_iterations=config.max_iterations,
    )
    t_start = time.perf_counter()
    region_time = 0.0
    solve_time = 0.0
    while True:
        t0 = time.perf_counter()
        query = session.next_query()
        region_time += time.perf_counter() - t0
        if query is None:
            break
        t0 = time.perf_counter()
        try:
            solution = solve(query)
        except NoIntersection:
            solve_time += time.perf_counter() - t0
            t0 = time.perf_counter()
            session.evict_pending()
            region_time += time.perf_counter() - t0
            continue
        solve_time += time.perf_counter() - t0
        t0 = time.perf_counter()
        session.submit(solution)
        region_time += time.perf_counter() - t0

    return RunReport(
        problem=problem.name,
        m=problem.m,
        epsilon=config.epsilon,
        mode=config.mode,
        strategy=config.strategy,
        entries=session.entries,
        iterations=session.iterations,
        stalled_boxes=session.stalled_boxes,
        skipped_dominated=session.skipped_dominated,
        final_max_box_size=session.final_max_box_size(),
        selected_sizes=session.selected_sizes,
        wall_time_total=time.perf_counter() - t_start,
        wall_time_region=region_time,
        wall_time_solve=solve_time,
        truncated=session.truncated,
    )


@dataclass
class ComparisonReport:
    naive: RunReport
    improved: RunReport
    identical_sequences: bool

    @property
    def region_time_ratio(self) -> float:
        return self.improved.wall_time_region / max(self.naive.wall_time_region, 1e-12)

    @property
    def total_time_ratio(self) -> float:
        return self.improved.wall_time_total / max(self.naive.wall_time_total, 1e-12)


def compare_strategies(config: RunConfig) -> ComparisonReport:
    """Run both strategies on identical inputs and compare."""
    naive_cfg = RunConfig(
        config.problem, config.epsilon, config.mode, Strategy.NAIVE,
        config.max_iterations, config.grid_resolution,
    )
    improved_cfg = RunConfig(
        config.problem, config.epsilon, config.mode, Strategy.IMPROVED,
        config.max_iterations, config.grid_resolution,
    )
    naive = run_representation(naive_cfg)
    improved = run_representation(improved_cfg)
    identical = naive.points == improved.points
    return ComparisonReport(naive, improved, identical)
