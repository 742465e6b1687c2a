"""Beverton-Holt harvesting benchmark with scenario-dependent growth.

Stock dynamics: next stock = growth(stock, scenario) - harvest, with
growth(x) = (1+r) x / (1 + (r/K) x) for scenario parameters r (intrinsic
growth) and K (carrying capacity).  The two constraint components are the
stock itself and the harvest, so thresholds are (stock floor, harvest
floor) pairs.  The surplus sigma(x) = growth(x) - x is the harvest that
holds the stock at x; it vanishes at 0 and K and peaks at the maximum
sustainable yield stock K / (1 + sqrt(1+r)).

Closed forms for the infinite-horizon single-scenario threshold sets and
their intersection are provided for comparison plots and tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import IntervalControlSpace, SystemSpec, as_threshold

__all__ = [
    "FisheryParams",
    "beverton_holt",
    "surplus",
    "msy_stock",
    "msy_harvest",
    "infinite_horizon_membership",
    "infinite_horizon_membership_robust",
    "build_fishery_system",
]


def beverton_holt(x, r: float, K: float):
    """Stock recruitment (1+r) x / (1 + (r/K) x); requires stock x >= 0.

    Fixed points at 0 and K; strictly increasing and concave in between.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("negative stock passed to the growth map")
    return (1.0 + r) * xa / (1.0 + (r / K) * xa)


def surplus(x, r: float, K: float):
    """Equilibrium harvest at stock x: growth minus standing stock."""
    return beverton_holt(x, r, K) - np.asarray(x, dtype=float)


def msy_stock(r: float, K: float) -> float:
    """Stock maximizing the surplus: K / (1 + sqrt(1+r))."""
    return K / (1.0 + np.sqrt(1.0 + r))


def msy_harvest(r: float, K: float) -> float:
    """Maximum sustainable yield K (sqrt(1+r) - 1)^2 / r (= surplus at its peak)."""
    return K * (np.sqrt(1.0 + r) - 1.0) ** 2 / r


@dataclass(frozen=True)
class FisheryParams:
    """Per-scenario growth parameters plus the harvest bound.

    ``m_big`` feeds the terminal constraint (terminal stock, m_big): large
    enough that no admissible harvest floor ever binds the second terminal
    component, so the terminal condition reduces to a stock floor.
    """

    r: dict
    K: dict
    u_max: float = 40.0
    m_big: float = 1.0e6
    scenarios: tuple = ("a", "b")

    def __post_init__(self):
        for w in self.scenarios:
            if w not in self.r or w not in self.K:
                raise ValueError(f"missing growth parameters for scenario {w!r}")
            if self.r[w] <= 0 or self.K[w] <= 0:
                raise ValueError("growth rate and carrying capacity must be positive")
        if self.u_max <= 0:
            raise ValueError("harvest bound must be positive")

    @staticmethod
    def default(r_a: float = 0.39, r_b: float = 2.0, K_a: float = 90.0,
                K_b: float = 50.0, u_max: float = 40.0,
                m_big: float = 1.0e6, scenarios: tuple = ("a", "b")) -> "FisheryParams":
        return FisheryParams(r={"a": r_a, "b": r_b}, K={"a": K_a, "b": K_b},
                             u_max=u_max, m_big=m_big, scenarios=scenarios)

    def growth(self, x, w):
        return beverton_holt(x, self.r[w], self.K[w])

    def surplus(self, x, w):
        return surplus(x, self.r[w], self.K[w])

    def msy_stock(self, w) -> float:
        return msy_stock(self.r[w], self.K[w])

    def msy_harvest(self, w) -> float:
        return msy_harvest(self.r[w], self.K[w])


def infinite_horizon_membership(params: FisheryParams, xi: float, w, c) -> bool:
    """Closed-form single-scenario threshold-set test at infinite horizon:
    stock floor at most min(xi, K) and harvest floor at most the surplus at
    the stock floor, both evaluated exactly.
    """
    cv = as_threshold(c, 2)
    x_lim, h_lim = float(cv[0]), float(cv[1])
    if x_lim > min(xi, params.K[w]):
        return False
    return h_lim <= float(params.surplus(max(x_lim, 0.0), w))


def infinite_horizon_membership_robust(params: FisheryParams, xi: float, c) -> bool:
    """Intersection of the single-scenario closed-form sets over all scenarios."""
    return all(infinite_horizon_membership(params, xi, w, c)
               for w in params.scenarios)


class _FisheryDynamics:
    """next stock = growth(stock) - harvest; extinct (<= 0) stock stays at 0.

    The extinction extension keeps exact rollouts defined when a harvest
    overshoots the stock; solver paths never see it because interpolation
    clamps into the grid box first.
    """

    def __init__(self, params: FisheryParams):
        self.params = params

    def __call__(self, k, x, u, w):
        xa = np.asarray(x, dtype=float)
        alive = np.maximum(xa, 0.0)
        return self.params.growth(alive, w) - u


class _FisheryStageConstraint:
    def __init__(self, params: FisheryParams):
        self.params = params

    def __call__(self, k, x, u):
        xa = np.asarray(x, dtype=float)
        if xa.ndim == 0:
            return np.asarray([float(xa), float(u)])
        out = np.empty((len(xa), 2))
        out[:, 0] = xa
        out[:, 1] = u
        return out


class _FisheryTerminal:
    def __init__(self, params: FisheryParams):
        self.params = params

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        if xa.ndim == 0:
            return np.asarray([float(xa), self.params.m_big])
        out = np.empty((len(xa), 2))
        out[:, 0] = xa
        out[:, 1] = self.params.m_big
        return out


def build_fishery_system(params: FisheryParams, horizon: int,
                         scenarios: tuple | None = None) -> SystemSpec:
    """SystemSpec for the harvesting benchmark.

    Stage constraints are (stock, harvest); the terminal constraint is
    (stock, m_big).  Pass a ``scenarios`` subset (e.g. ("b",)) for the
    single-scenario variants used in robust-versus-deterministic
    comparisons.
    """
    scen = tuple(scenarios) if scenarios is not None else params.scenarios
    for w in scen:
        if w not in params.scenarios:
            raise ValueError(f"unknown scenario {w!r}")
    return SystemSpec(
        horizon=horizon,
        state_dim=1,
        threshold_dim=2,
        dynamics=_FisheryDynamics(params),
        stage_constraints=_FisheryStageConstraint(params),
        terminal_constraint=_FisheryTerminal(params),
        control_space=IntervalControlSpace(0.0, params.u_max),
        scenario_sets=tuple(scen for _ in range(horizon + 1)),
        time_invariant=True,
        batchable=True,
        name="fishery-beverton-holt",
        state_lower=np.asarray([0.0]),
        state_upper=np.asarray([max(params.K[w] for w in params.scenarios) * (4 / 3)]),
    )
