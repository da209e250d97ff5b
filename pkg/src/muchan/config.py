"""Shared tolerances and run configuration.

All numerical gates in the package route through the constants below so that
every module agrees on what "zero", "Hermitian", or "mixed unitary" means.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# ---------------------------------------------------------------------------
# Global tolerances
# ---------------------------------------------------------------------------

#: Relative radius used when clustering eigenvalues into multiplicity groups.
TOL_CLUSTER = 1e-8

#: Relative Hermiticity gate: ||A - A*|| <= TOL_HERM * ||A|| counts as Hermitian.
TOL_HERM = 1e-10

#: Absolute floor on Choi eigenvalues for complete positivity.
TOL_PSD = 1e-9

#: Relative cutoff (against the largest eigenvalue) for numerical rank.
TOL_RANK = 1e-8

#: Residual below which a convex fit counts as an exact mixed-unitary decomposition.
EPS_MU = 1e-7

#: A witness value on the target at or below -DELTA_WIT counts as separation.
DELTA_WIT = 1e-4

#: Slack allowed on a witness's minimum over unitary conjugations.
TAU_WIT = 1e-8

#: Residual below which a nonnegative cone fit counts as exact membership.
EPS_CONE = 1e-9

# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass
class FWConfig:
    """Budgets and seeding for Frank-Wolfe fits and unitary line searches.

    Parameters
    ----------
    max_iters : int
        Frank-Wolfe iteration budget.
    starts : int
        Number of multistart initializations per linear-minimization call.
    lmo_steps : int
        Riemannian gradient step cap inside each linear-minimization call.
    seed : int
        Base seed; every random draw in a run derives deterministically from it.
    correct_every : int
        Re-optimize convex weights over the active atoms every this many
        iterations (0 disables the corrective step).
    stall_iters : int
        Declare a stall after this many iterations without residual progress,
        provided the duality-gap bound shows the target is out of reach.
    """

    max_iters: int = 5000
    starts: int = 16
    lmo_steps: int = 500
    seed: int = 0
    correct_every: int = 10
    stall_iters: int = 50


@dataclass
class WitnessConfig:
    """Budgets for the cutting-plane witness search."""

    max_cuts: int = 120
    starts: int = 16
    lmo_steps: int = 500
    seed: int = 0


@dataclass
class RunConfig:
    """Top-level configuration shared by the command-line entry points.

    Parameters
    ----------
    tol : float
        Generic comparison tolerance for report-level checks.
    fw_iters, starts, seed : int
        Forwarded into :class:`FWConfig` / :class:`WitnessConfig`.
    grid : str
        Time-grid specification ``"start:end:points"`` with an optional
        ``":log"`` suffix for logarithmic spacing.
    nmax : int
        Largest channel power examined by index searches.
    """

    tol: float = 1e-8
    fw_iters: int = 5000
    starts: int = 16
    seed: int = 0
    grid: str = "1e-3:10:64:log"
    nmax: int = 12

    def fw_config(self) -> FWConfig:
        return FWConfig(max_iters=self.fw_iters, starts=self.starts, seed=self.seed)

    def witness_config(self) -> WitnessConfig:
        return WitnessConfig(starts=self.starts, seed=self.seed)


def parse_grid(spec: str):
    """Parse ``"start:end:points[:log]"`` into a strictly increasing array.

    >>> parse_grid("1:3:3")
    array([1., 2., 3.])
    """
    import numpy as np

    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise ValueError(f"grid spec must be start:end:points[:log], got {spec!r}")
    start, end = float(parts[0]), float(parts[1])
    points = int(parts[2])
    if points < 1:
        raise ValueError("grid needs at least one point")
    if len(parts) == 4:
        if parts[3] != "log":
            raise ValueError(f"unknown grid scale {parts[3]!r}")
        if start <= 0 or end <= 0:
            raise ValueError("log grid requires positive endpoints")
        grid = np.geomspace(start, end, points)
    else:
        grid = np.linspace(start, end, points)
    if points > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    return grid
