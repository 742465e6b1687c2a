"""Discretization layer: state grid, control mesh, threshold rays, reachability.

The state grid is a rectilinear box with uniformly spaced nodes per
dimension.  Queries outside the box are clamped componentwise before
interpolation; that is the only place clamping happens (the model itself is
exact).  Multilinear interpolation is the default; nearest-node is
available so that finite-state test systems evaluate with zero
discretization error.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import SystemSpec

__all__ = [
    "UnpopulatedNodeError",
    "StateGrid",
    "ControlMesh",
    "ThresholdRayMesh",
    "threshold_ray_mesh",
    "ReachableSets",
    "build_reachable_sets",
    "interpolate",
]

INTERP_MODES = ("multilinear", "nearest")


class UnpopulatedNodeError(RuntimeError):
    """An interpolation query touched a node that was never populated.

    This is an internal consistency failure (bad reachable-set bookkeeping),
    not a numeric result.
    """


@dataclass(frozen=True)
class StateGrid:
    """Uniform rectilinear grid over a box.  Nodes are in C order."""

    lower: np.ndarray
    upper: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.atleast_1d(np.asarray(self.lower, dtype=float)))
        object.__setattr__(self, "upper", np.atleast_1d(np.asarray(self.upper, dtype=float)))
        object.__setattr__(self, "counts", np.atleast_1d(np.asarray(self.counts, dtype=int)))
        if not (self.lower.shape == self.upper.shape == self.counts.shape):
            raise ValueError("lower, upper and counts must have matching shapes")
        if np.any(self.upper <= self.lower):
            raise ValueError("grid needs lower < upper in every dimension")
        if np.any(self.counts < 2):
            raise ValueError("grid needs at least 2 nodes per dimension")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def spacing(self) -> np.ndarray:
        return (self.upper - self.lower) / (self.counts - 1)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.counts))

    def axis_coords(self, d: int) -> np.ndarray:
        return self.lower[d] + self.spacing[d] * np.arange(self.counts[d])

    def node_coordinates(self) -> np.ndarray:
        """All node coordinates, shape (n_nodes, dim), C order."""
        axes = [self.axis_coords(d) for d in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def contains(self, x) -> bool:
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(xa >= self.lower - 1e-12) and np.all(xa <= self.upper + 1e-12))

    def clamp(self, points: np.ndarray) -> np.ndarray:
        return np.clip(points, self.lower, self.upper)

    def locate(self, points: np.ndarray, mode: str = "multilinear"):
        """Corner node indices and weights for a batch of query points.

        points: (B, dim).  Returns (idx, w) with shape (B, 2**dim) for
        multilinear mode and (B, 1) for nearest mode; weights sum to one per
        row.  Points are clamped into the box first.
        """
        if mode not in INTERP_MODES:
            raise ValueError(f"unknown interpolation mode {mode!r}")
        pts = self.clamp(np.asarray(points, dtype=float).reshape(-1, self.dim))
        t = (pts - self.lower) / self.spacing  # in [0, counts-1] per dim
        if mode == "nearest":
            # midpoint ties go to the upper node
            near = np.minimum(np.floor(t + 0.5).astype(np.int64), self.counts - 1)
            flat = np.ravel_multi_index(tuple(near.T), tuple(self.counts))
            return flat.reshape(-1, 1), np.ones((len(pts), 1))
        lo = np.minimum(np.floor(t).astype(np.int64), self.counts - 2)
        frac = t - lo
        n_corners = 1 << self.dim
        idx = np.empty((len(pts), n_corners), dtype=np.int64)
        wts = np.empty((len(pts), n_corners))
        for j, bits in enumerate(itertools.product((0, 1), repeat=self.dim)):
            corner = lo + np.asarray(bits, dtype=np.int64)
            idx[:, j] = np.ravel_multi_index(tuple(corner.T), tuple(self.counts))
            w = np.ones(len(pts))
            for d, b in enumerate(bits):
                w = w * (frac[:, d] if b else 1.0 - frac[:, d])
            wts[:, j] = w
        return idx, wts


@dataclass(frozen=True)
class ControlMesh:
    """Finite sample of the control space used by all grid-based solvers."""

    values: tuple

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("control mesh is empty")

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def validate_against(self, sys: SystemSpec) -> None:
        for u in self.values:
            if not sys.control_space.contains(u):
                raise ValueError(f"control mesh value {u!r} outside the control space")

    @staticmethod
    def uniform(lower: float, upper: float, count: int) -> "ControlMesh":
        if count < 1:
            raise ValueError("control mesh count must be >= 1")
        if count == 1:
            return ControlMesh((float(lower),))
        return ControlMesh(tuple(np.linspace(lower, upper, count)))


def threshold_ray_mesh(d: float, n_d: int, anchors) -> "ThresholdRayMesh":
    """Axis-sweep mesh of thresholds pinned at large anchors.

    For each axis j the mesh holds the points whose j-th coordinate sweeps
    {0, d, 2d, ..., n_d*d} while every other coordinate sits at its anchor.
    With anchors large enough, every point lies outside the sustainable set
    and projects onto the weak Pareto front.  Exact duplicates are dropped.
    """
    if d <= 0:
        raise ValueError("ray mesh spacing d must be > 0")
    if n_d < 0:
        raise ValueError("ray mesh count must be >= 0")
    anchors = np.atleast_1d(np.asarray(anchors, dtype=float))
    if np.any(anchors <= 0):
        raise ValueError("ray mesh anchors must be strictly positive")
    m = len(anchors)
    points, sweeps, seen = [], [], set()
    for axis in range(m):
        members = []
        for j in range(n_d + 1):
            c = anchors.copy()
            c[axis] = j * d
            key = tuple(c)
            if key in seen:
                continue
            seen.add(key)
            members.append(len(points))
            points.append(c)
        sweeps.append((axis, tuple(members)))
    return ThresholdRayMesh(spacing=d, count=n_d, anchors=anchors,
                            points=np.asarray(points), sweeps=tuple(sweeps))


@dataclass(frozen=True)
class ThresholdRayMesh:
    """Threshold rays produced by :func:`threshold_ray_mesh`.

    ``sweeps`` keeps, per axis, the row indices of ``points`` belonging to
    that axis sweep in increasing order of the swept coordinate; front code
    uses it for ordering diagnostics.
    """

    spacing: float
    count: int
    anchors: np.ndarray
    points: np.ndarray
    sweeps: tuple

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ReachableSets:
    """Per-stage node masks: masks[n] marks grid nodes the stage-n solve needs.

    There are N+2 masks; the last one covers the terminal table.  ``exact``
    is True when every one-step image landed exactly on a node (finite-state
    systems), otherwise the sets are a conservative over-approximation by
    whole cells.
    """

    grid: StateGrid
    masks: np.ndarray  # (N+2, n_nodes) bool
    exact: bool
    full: bool = False

    def indices(self, stage: int) -> np.ndarray:
        return np.flatnonzero(self.masks[stage])

    def to_rows(self):
        """(stage, node index, coordinates...) rows for CSV export."""
        coords = self.grid.node_coordinates()
        rows = []
        for n in range(self.masks.shape[0]):
            for i in self.indices(n):
                rows.append((n, int(i), *coords[i]))
        return rows


def full_grid_sets(grid: StateGrid, horizon: int) -> ReachableSets:
    """Degenerate reachable sets marking every node at every stage."""
    masks = np.ones((horizon + 2, grid.n_nodes), dtype=bool)
    return ReachableSets(grid=grid, masks=masks, exact=True, full=True)


def build_reachable_sets(xi, grid: StateGrid, sys: SystemSpec, controls: ControlMesh,
                         *, interp: str = "multilinear",
                         compiled=None) -> ReachableSets:
    """Forward pass marking every node any stage-n interpolation can touch.

    Stage 0 holds the corners of the cell covering xi; stage n+1 collects
    the corners of every cell touched by a one-step image of a stage-n node
    under any (control, scenario) pair.  The result over-approximates the
    exact reachable tube by whole cells, which is cheap and keeps every
    later interpolation query inside populated territory.
    """
    if not grid.contains(xi):
        raise ValueError(f"initial state {xi!r} outside the grid box")
    from . import dp  # local import: dp depends on mesh

    comp = compiled if compiled is not None else dp.compile_system(
        sys, grid, controls, interp=interp)
    n_nodes = grid.n_nodes
    masks = np.zeros((sys.horizon + 2, n_nodes), dtype=bool)
    idx0, _ = grid.locate(np.atleast_2d(np.asarray(xi, dtype=float)), mode=comp.interp)
    masks[0, np.unique(idx0)] = True
    exact = True
    for n in range(sys.horizon + 1):
        rows = np.flatnonzero(masks[n])
        corner_idx, corner_w = comp.stage(n).corner_idx, comp.stage(n).corner_w
        touched = corner_idx[:, rows]
        if comp.interp == "multilinear":
            exact = exact and bool(
                np.all(corner_w[:, rows].max(axis=0) >= 1.0 - 1e-12))
        masks[n + 1, np.unique(touched)] = True
    return ReachableSets(grid=grid, masks=masks, exact=exact)


def interpolate(table, x, mode: str | None = None) -> float:
    """Value of a populated node table at state x (clamped into the box).

    ``table`` needs attributes grid / values / populated (see
    ``dp.ValueTable``).  Multilinear by default; "nearest" returns the
    nearest node's value.  Touching an unpopulated node raises
    UnpopulatedNodeError.
    """
    grid: StateGrid = table.grid
    use = mode if mode is not None else getattr(table, "interp", "multilinear")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    idx, wts = grid.locate(pts, mode=use)
    if not np.all(table.populated[idx]):
        raise UnpopulatedNodeError(
            f"query at {x!r} touches unpopulated nodes of stage-{table.stage} table")
    out = (table.values[idx] * wts).sum(axis=-1)
    return float(out[0]) if np.ndim(x) <= 1 and np.asarray(x).size == grid.dim else out
