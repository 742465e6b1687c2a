"""Maximin backward dynamic programming over a discretized system.

For a threshold vector c the stage-n value at a grid node x follows the
recursion

    V_n(x) = max over mesh controls u of
             min( worst-case over scenario elements w of V_{n+1}(F_n(x,u,w)),
                  stage slack at (x, u) )

with V_{N+1} equal to the terminal slack, where the stage slack is the
smallest componentwise gap between the stage constraint vector and c, and
likewise for the terminal slack.  The root value W(xi, c) = V_0(xi) decides
membership: c is robustly sustainable from xi exactly when W >= 0, and the
weak Pareto front is its zero level set.

The same sweep also runs with arbitrary per-stage score arrays instead of
slacks; the constrained problems behind the strong Pareto front reuse it
with infeasible state-control pairs masked to a large negative sentinel
(min/max propagate the sentinel, nothing ever sums it with real payoffs
except interpolation weights in [0, 1]).

Everything here is deterministic: control ties resolve to the lowest mesh
index, so repeated runs reproduce tables bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import (ControlMesh, ReachableSets, StateGrid, UnpopulatedNodeError,
                   full_grid_sets, interpolate)
from .model import SystemSpec, as_threshold

__all__ = [
    "NEG_INF",
    "ValueTable",
    "FeedbackPolicy",
    "CompiledSystem",
    "compile_system",
    "stage_slack",
    "terminal_slack",
    "backward_recursion",
    "robust_value",
    "solve_value",
    "membership",
]

# Finite stand-in for "infeasible"; only ever flows through min/max and
# convex interpolation, so it cannot overflow.  Values at or below
# NEG_INF_CUTOFF are treated as infeasibility markers.
NEG_INF = -1.0e9
NEG_INF_CUTOFF = NEG_INF / 2.0


@dataclass
class ValueTable:
    """Stage-n values on grid nodes for one threshold (NaN = never populated)."""

    stage: int
    threshold: np.ndarray | None
    grid: StateGrid
    values: np.ndarray
    populated: np.ndarray
    interp: str = "multilinear"


@dataclass
class FeedbackPolicy:
    """Per stage and node, the index into the control mesh attaining the max.

    ``choices[n, i] == -1`` marks nodes the solve never populated.
    """

    grid: StateGrid
    controls: ControlMesh
    choices: np.ndarray  # (N+1, n_nodes) int32

    def control_at(self, stage: int, node: int):
        j = int(self.choices[stage, node])
        if j < 0:
            raise UnpopulatedNodeError(f"no policy stored at stage {stage}, node {node}")
        return self.controls.values[j]


# -- exact slack operations (no grid involved) -----------------------------


def stage_slack(sys: SystemSpec, k: int, x, u, c) -> float:
    """Smallest componentwise gap g^k(x, u) - c; >= 0 iff the stage clears c."""
    cv = as_threshold(c, sys.threshold_dim)
    return float(np.min(sys.stage_constraint(k, x, u) - cv))


def terminal_slack(sys: SystemSpec, x, c) -> float:
    """Smallest componentwise gap between the terminal constraint and c."""
    cv = as_threshold(c, sys.threshold_dim)
    return float(np.min(sys.terminal(x) - cv))


# -- discretization compiled once, reused across thresholds ----------------


@dataclass
class _StageArrays:
    # corner-major layout keeps each per-corner gather contiguous
    corner_idx: np.ndarray  # (C, n_nodes, n_u, n_w) int32
    corner_w: np.ndarray    # (C, n_nodes, n_u, n_w) float64
    g_vals: np.ndarray      # (n_nodes, n_u, m)


class CompiledSystem:
    """Transition/constraint tables of (system, grid, control mesh) pairs.

    Building these costs one pass over node x control x scenario tuples and
    is independent of the threshold, so every threshold solve afterwards is
    pure array arithmetic.  Time-invariant systems share one table across
    stages.
    """

    def __init__(self, sys: SystemSpec, grid: StateGrid, controls: ControlMesh,
                 interp: str = "multilinear"):
        if grid.dim != sys.state_dim:
            raise ValueError("grid dimension does not match the system state dimension")
        controls.validate_against(sys)
        self.sys = sys
        self.grid = grid
        self.controls = controls
        self.interp = interp
        self._nodes = grid.node_coordinates()
        self._stages: list[_StageArrays] = []
        if sys.time_invariant:
            shared = self._build_stage(0)
            self._stages = [shared] * (sys.horizon + 1)
        else:
            self._stages = [self._build_stage(k) for k in range(sys.horizon + 1)]
        self.theta_vals = self._build_terminal()

    # internal evaluation helpers ------------------------------------------------

    def _batch_states(self):
        return self._nodes[:, 0] if self.sys.state_dim == 1 else self._nodes

    def _images(self, k: int, u, w) -> np.ndarray:
        sys = self.sys
        if sys.batchable:
            y = np.asarray(sys.dynamics(k, self._batch_states(), u, w), dtype=float)
        else:
            y = np.asarray([
                np.atleast_1d(sys.step(k, self._state(i), u, w))
                for i in range(len(self._nodes))
            ], dtype=float)
        return y.reshape(len(self._nodes), self.grid.dim)

    def _state(self, i: int):
        row = self._nodes[i]
        return float(row[0]) if self.sys.state_dim == 1 else row

    def _build_stage(self, k: int) -> _StageArrays:
        sys, grid = self.sys, self.grid
        n_u, n_w = len(self.controls), len(sys.scenario_sets[k])
        n_corners = (1 << grid.dim) if self.interp == "multilinear" else 1
        n = len(self._nodes)
        corner_idx = np.empty((n_corners, n, n_u, n_w), dtype=np.int32)
        corner_w = np.empty((n_corners, n, n_u, n_w))
        g_vals = np.empty((n, n_u, sys.threshold_dim))
        for j, u in enumerate(self.controls.values):
            if sys.batchable:
                g = np.asarray(sys.stage_constraints(k, self._batch_states(), u),
                               dtype=float)
            else:
                g = np.asarray([sys.stage_constraint(k, self._state(i), u)
                                for i in range(n)], dtype=float)
            g_vals[:, j, :] = g.reshape(n, sys.threshold_dim)
            for s, w in enumerate(sys.scenario_sets[k]):
                idx, wts = grid.locate(self._images(k, u, w), mode=self.interp)
                corner_idx[:, :, j, s] = idx.T
                corner_w[:, :, j, s] = wts.T
        return _StageArrays(corner_idx=np.ascontiguousarray(corner_idx),
                            corner_w=np.ascontiguousarray(corner_w),
                            g_vals=g_vals)

    def _build_terminal(self) -> np.ndarray:
        sys = self.sys
        if sys.batchable:
            th = np.asarray(sys.terminal_constraint(self._batch_states()), dtype=float)
        else:
            th = np.asarray([sys.terminal(self._state(i))
                             for i in range(len(self._nodes))], dtype=float)
        return th.reshape(len(self._nodes), sys.threshold_dim)

    def stage(self, k: int) -> _StageArrays:
        return self._stages[k]

    # threshold-dependent score construction --------------------------------

    def slack_scores(self, c: np.ndarray) -> list[np.ndarray]:
        """Per-stage (n_nodes, n_u) arrays of min_i (g_i - c_i)."""
        if self.sys.time_invariant:
            arr = (self._stages[0].g_vals - c).min(axis=-1)
            return [arr] * (self.sys.horizon + 1)
        return [(st.g_vals - c).min(axis=-1) for st in self._stages]

    def terminal_slack_scores(self, c: np.ndarray) -> np.ndarray:
        return (self.theta_vals - c).min(axis=-1)

    def masked_component_scores(self, c: np.ndarray, comp: int,
                                neg_inf: float = NEG_INF):
        """Scores for the component-`comp` constrained maximin problem.

        A state-control pair scores its comp-th constraint value when the
        whole constraint vector clears c, and the infeasibility sentinel
        otherwise; same for terminal states.
        """
        def mask(g_vals):
            feas = (g_vals >= c).all(axis=-1)
            return np.where(feas, g_vals[..., comp], neg_inf)

        if self.sys.time_invariant:
            arr = mask(self._stages[0].g_vals)
            stage_scores = [arr] * (self.sys.horizon + 1)
        else:
            stage_scores = [mask(st.g_vals) for st in self._stages]
        feas_T = (self.theta_vals >= c).all(axis=-1)
        terminal = np.where(feas_T, self.theta_vals[:, comp], neg_inf)
        return stage_scores, terminal

    def component_scores(self, comp: int):
        """Raw per-component constraint values (used for policy rollup)."""
        if self.sys.time_invariant:
            arr = self._stages[0].g_vals[..., comp]
            return [arr] * (self.sys.horizon + 1), self.theta_vals[:, comp]
        return ([st.g_vals[..., comp] for st in self._stages],
                self.theta_vals[:, comp])


def compile_system(sys: SystemSpec, grid: StateGrid, controls: ControlMesh,
                   interp: str = "multilinear") -> CompiledSystem:
    return CompiledSystem(sys, grid, controls, interp)


# -- core sweeps ------------------------------------------------------------


def _stage_sel(reach: ReachableSets, stage: int, n_nodes: int):
    """Row selector for one stage: None (full grid), a slice, or an index array.

    Reachable sets of 1-D systems are contiguous node ranges in practice;
    slicing them yields views, which keeps every arithmetic lane free of the
    NaN that marks unpopulated nodes (NaN lanes are dramatically slower).
    """
    if reach.full:
        return None
    rows = reach.indices(stage)
    if len(rows) == n_nodes:
        return None
    if len(rows) and rows[-1] - rows[0] + 1 == len(rows):
        return slice(int(rows[0]), int(rows[-1]) + 1)
    return rows


def _interp_next(V: np.ndarray, sa: _StageArrays, sel):
    """Interpolated next-stage values, shape (rows, n_u, n_w).

    Accumulates corner by corner.  NaN from any touched unpopulated node
    propagates into the result (weights never cancel it).
    """
    ci = sa.corner_idx if sel is None else sa.corner_idx[:, sel]
    cw = sa.corner_w if sel is None else sa.corner_w[:, sel]
    acc = V[ci[0]] * cw[0]
    for j in range(1, ci.shape[0]):
        acc += V[ci[j]] * cw[j]
    return acc


def sweep_scores(compiled: CompiledSystem, reach: ReachableSets,
                 stage_scores: list[np.ndarray], terminal_score: np.ndarray,
                 *, threshold=None, want_policy: bool = True):
    """Backward optimization sweep; returns (tables, policy_or_None)."""
    sys, grid = compiled.sys, compiled.grid
    n_nodes = grid.n_nodes
    tables: list[ValueTable] = [None] * (sys.horizon + 2)  # type: ignore[list-item]
    choices = (np.full((sys.horizon + 1, n_nodes), -1, dtype=np.int32)
               if want_policy else None)

    sel = _stage_sel(reach, sys.horizon + 1, n_nodes)
    if sel is None:
        V = terminal_score.astype(float, copy=True)
    else:
        V = np.full(n_nodes, np.nan)
        V[sel] = terminal_score[sel]
    tables[sys.horizon + 1] = _table(sys.horizon + 1, threshold, grid, V,
                                     compiled.interp)
    for n in range(sys.horizon, -1, -1):
        sel = _stage_sel(reach, n, n_nodes)
        sa = compiled.stage(n)
        scores = stage_scores[n] if sel is None else stage_scores[n][sel]
        q = np.minimum(_interp_next(V, sa, sel).min(axis=-1), scores)
        vals = q.max(axis=-1)
        if np.isnan(vals).any():
            raise UnpopulatedNodeError(
                f"stage-{n} sweep touched unpopulated next-stage nodes")
        if sel is None:
            Vn = vals
        else:
            Vn = np.full(n_nodes, np.nan)
            Vn[sel] = vals
        if want_policy:
            choices[n][slice(None) if sel is None else sel] = q.argmax(axis=-1)
        V = Vn
        tables[n] = _table(n, threshold, grid, V, compiled.interp)
    policy = (FeedbackPolicy(grid=grid, controls=compiled.controls, choices=choices)
              if want_policy else None)
    return tables, policy


def sweep_policy(compiled: CompiledSystem, reach: ReachableSets,
                 policy: FeedbackPolicy, stage_scores: list[np.ndarray],
                 terminal_score: np.ndarray, *, threshold=None):
    """Backward evaluation sweep of a fixed feedback policy (no max)."""
    sys, grid = compiled.sys, compiled.grid
    n_nodes = grid.n_nodes
    tables: list[ValueTable] = [None] * (sys.horizon + 2)  # type: ignore[list-item]
    rows = _stage_sel(reach, sys.horizon + 1, n_nodes)
    if rows is None:
        V = terminal_score.astype(float, copy=True)
    else:
        V = np.full(n_nodes, np.nan)
        V[rows] = terminal_score[rows]
    tables[sys.horizon + 1] = _table(sys.horizon + 1, threshold, grid, V,
                                     compiled.interp)
    for n in range(sys.horizon, -1, -1):
        sel = reach.indices(n) if not reach.full else np.arange(n_nodes)
        p = policy.choices[n][sel]
        if np.any(p < 0):
            raise UnpopulatedNodeError(f"policy gap on reachable nodes at stage {n}")
        sa = compiled.stage(n)
        nxt = V[sa.corner_idx[:, sel, p]]              # (C, R, n_w)
        if np.isnan(nxt).any():
            raise UnpopulatedNodeError(
                f"stage-{n} policy sweep touched unpopulated nodes")
        worst = (nxt * sa.corner_w[:, sel, p]).sum(axis=0).min(axis=-1)
        Vn = np.full(n_nodes, np.nan)
        Vn[sel] = np.minimum(worst, stage_scores[n][sel, p])
        V = Vn
        tables[n] = _table(n, threshold, grid, V, compiled.interp)
    return tables


def _table(stage, threshold, grid, V, interp) -> ValueTable:
    return ValueTable(stage=stage, threshold=threshold, grid=grid, values=V,
                      populated=~np.isnan(V), interp=interp)


# -- public solver entry points ---------------------------------------------


def _ensure(sys, grid, controls, interp, compiled, reach):
    comp = compiled if compiled is not None else compile_system(sys, grid, controls, interp)
    rch = reach if reach is not None else full_grid_sets(grid, sys.horizon)
    return comp, rch


def backward_recursion(sys: SystemSpec, grid: StateGrid, controls: ControlMesh,
                       reach: ReachableSets | None, c, *,
                       interp: str = "multilinear", compiled: CompiledSystem | None = None,
                       want_policy: bool = True):
    """Value tables V_{N+1}..V_0 for threshold c, plus the argmax policy.

    Passing ``reach=None`` solves on the full grid.  Ties in the control
    argmax resolve to the lowest mesh index.  ``interp`` only matters when no
    precompiled tables are passed; a ``compiled`` argument carries its own
    interpolation mode.
    """
    comp, rch = _ensure(sys, grid, controls, interp, compiled, reach)
    cv = as_threshold(c, sys.threshold_dim)
    return sweep_scores(comp, rch, comp.slack_scores(cv),
                        comp.terminal_slack_scores(cv), threshold=cv,
                        want_policy=want_policy)


def robust_value(xi, tables: list[ValueTable]) -> float:
    """W(xi, c) read off the stage-0 table."""
    return interpolate(tables[0], xi)


def solve_value(xi, c, sys: SystemSpec, grid: StateGrid, controls: ControlMesh, *,
                interp: str = "multilinear", compiled: CompiledSystem | None = None,
                reach: ReachableSets | None = None) -> float:
    """Convenience: build the tables for c and return W(xi, c)."""
    tables, _ = backward_recursion(sys, grid, controls, reach, c, interp=interp,
                                   compiled=compiled, want_policy=False)
    return robust_value(xi, tables)


def membership(xi, c, sys: SystemSpec, grid: StateGrid, controls: ControlMesh, *,
               tol: float = 0.0, interp: str = "multilinear",
               compiled: CompiledSystem | None = None,
               reach: ReachableSets | None = None) -> bool:
    """True iff W(xi, c) >= -tol; tol defaults to exact zero."""
    if tol < 0:
        raise ValueError("membership tolerance must be >= 0")
    return solve_value(xi, c, sys, grid, controls, interp=interp,
                       compiled=compiled, reach=reach) >= -tol
