"""Recovery sequences: sharp jumps smoothed by scaled optimal profiles.

A piecewise-constant target u in BV((a, b); {-1, +1}) with jumps at x_1 < ... <
x_M is approximated by u_eps equal to the target outside windows of half-width
eps*T around each jump and to the rescaled transition profile v((t - x_m)/eps)
inside (negated for down-jumps; for even wells the negated profile has the same
energy as the reflected one and keeps the discrete target/-target symmetry
exact). Admissibility requires the windows to be disjoint and inside (a, b):
eps*T must stay below half the minimal gap between consecutive jumps and the
interval endpoints.

The scaled energy of u_eps concentrates one profile energy per jump, so
F_eps(u_eps) / (m_k * #jumps) -> 1; gamma_sweep tabulates that ratio along an
eps list.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline, make_interp_spline

from .core import DoubleWell, Grid1D, GridFunction1D, make_grid
from .energy import EnergyParams, energy_F_eps
from .errors import ConfigurationError, GapConditionError
from .profile import ProfileResult


@dataclass(frozen=True)
class JumpFunction:
    """Piecewise +-1 function on (a, b): sorted interior jumps, left value.

    A node placed exactly on a jump takes the right limit.
    """

    interval: tuple[float, float]
    jumps: tuple[float, ...]
    first_value: int = -1

    def __post_init__(self) -> None:
        a, b = self.interval
        if not a < b:
            raise ConfigurationError(f"interval must satisfy a < b, got {self.interval}")
        if self.first_value not in (-1, 1):
            raise ConfigurationError(f"first_value must be -1 or +1, got {self.first_value}")
        xs = tuple(float(x) for x in self.jumps)
        if any(not a < x < b for x in xs):
            raise ConfigurationError(f"jumps must lie strictly inside {self.interval}")
        if any(x2 <= x1 for x1, x2 in zip(xs, xs[1:])):
            raise ConfigurationError("jumps must be strictly increasing")
        object.__setattr__(self, "jumps", xs)

    @property
    def count(self) -> int:
        return len(self.jumps)

    def min_gap(self) -> float:
        """Smallest distance between consecutive breakpoints, endpoints included."""
        a, b = self.interval
        pts = (a,) + self.jumps + (b,)
        return float(min(x2 - x1 for x1, x2 in zip(pts, pts[1:])))

    def orientation(self, m: int) -> int:
        """+1 for an up-jump (-1 -> +1) at jumps[m], -1 for a down-jump."""
        return -self.first_value * (-1) ** m

    def values_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flips = np.searchsorted(self.jumps, t, side="right")
        return self.first_value * (-1.0) ** flips


def sample_jump_function(target: JumpFunction, grid: Grid1D) -> GridFunction1D:
    """Nodal +-1 samples of the target (right limits at nodes on jumps)."""
    return GridFunction1D(grid, target.values_at(grid.nodes))


def _profile_spline(values: np.ndarray, nodes: np.ndarray, k: int):
    """Interpolant used to resample the solved profile onto recovery grids:
    cubic for k <= 2, degree 2k-1 for larger k so the resampling error stays
    below the order-2 stencil error of the recovery grid."""
    if k <= 2:
        return CubicSpline(nodes, values)
    return make_interp_spline(nodes, values, k=2 * k - 1)


@dataclass(frozen=True)
class Recovery1D:
    """A recovery field with its construction data."""

    u: GridFunction1D
    target: JumpFunction
    eps: float
    T: float
    k: int
    windows: tuple  # (center, lo, hi, orientation)


def build_recovery_1d(
    target: JumpFunction,
    eps: float,
    profile: ProfileResult | GridFunction1D,
    grid: Grid1D | None = None,
    *,
    k: int | None = None,
    grid_density: int = 16,
) -> Recovery1D:
    """Assemble u_eps: the target outside, scaled profile inside each window.

    `profile` is a clamped minimizer on [-T, T] (ProfileResult, or a
    GridFunction1D plus explicit k). The default grid resolves eps with
    h = eps/grid_density. Raises GapConditionError naming the violating pair
    when eps*T is not below half the minimal jump gap.
    """
    if isinstance(profile, ProfileResult):
        k = profile.problem.k
        pgrid = profile.minimizer.grid
        pvalues = profile.minimizer.values
    else:
        if k is None:
            raise ConfigurationError("k is required when profile is a bare GridFunction1D")
        pgrid = profile.grid
        pvalues = profile.values
    if abs(pgrid.a + pgrid.b) > 1e-12 * max(1.0, abs(pgrid.b)):
        raise ConfigurationError(f"profile must live on a symmetric interval [-T, T], got [{pgrid.a}, {pgrid.b}]")
    T = pgrid.b
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")

    a, b = target.interval
    pts = (a,) + target.jumps + (b,)
    for x1, x2 in zip(pts, pts[1:]):
        if eps * T >= 0.5 * (x2 - x1):
            raise GapConditionError(
                f"window half-width eps*T = {eps * T:g} must be < half the gap ({(x2 - x1) / 2:g}) between {x1:g} and {x2:g}"
            )

    if grid is None:
        n = int(np.ceil((b - a) * grid_density / eps)) + 1
        grid = make_grid(a, b, n)
    elif grid.h > eps:
        raise ConfigurationError(f"recovery grid spacing h={grid.h:g} does not resolve eps={eps:g}")

    spline = _profile_spline(pvalues, pgrid.nodes, k)
    t = grid.nodes
    values = target.values_at(t)
    windows = []
    for m, x in enumerate(target.jumps):
        orient = target.orientation(m)
        mask = np.abs(t - x) <= eps * T
        s = (t[mask] - x) / eps
        values[mask] = orient * spline(s)
        windows.append((x, x - eps * T, x + eps * T, orient))
    return Recovery1D(
        u=GridFunction1D(grid, values), target=target, eps=eps, T=T, k=k, windows=tuple(windows)
    )


@dataclass(frozen=True)
class GammaSweep:
    """Energy of the recovery field along an eps list, against m_k * #jumps."""

    k: int
    target: JumpFunction
    mk_value: float
    rows: tuple  # (eps, energy, ratio)

    def csv_text(self) -> str:
        lines = ["eps,energy,ratio"]
        for eps, energy, ratio in self.rows:
            lines.append(f"{eps!r},{energy!r},{ratio!r}")
        return "\n".join(lines) + "\n"

    def gnuplot_text(self) -> str:
        """Two columns: log10(eps) and ratio."""
        lines = ["# log10(eps)  ratio"]
        for eps, _, ratio in self.rows:
            lines.append(f"{float(np.log10(eps))!r}  {ratio!r}")
        return "\n".join(lines) + "\n"

    def json_payload(self) -> dict:
        return {
            "k": self.k,
            "jumps": list(self.target.jumps),
            "first_value": self.target.first_value,
            "interval": list(self.target.interval),
            "mk_value": self.mk_value,
            "rows": [{"eps": e, "energy": en, "ratio": r} for e, en, r in self.rows],
        }


def gamma_sweep(
    target: JumpFunction,
    well: DoubleWell,
    eps_list,
    profile: ProfileResult,
    *,
    mk_value: float | None = None,
    grid_density: int = 16,
) -> GammaSweep:
    """Tabulate F_eps(u_eps) and F_eps / (m_k * #jumps) along decreasing eps.

    mk_value defaults to the profile's own energy (the matching m_k estimate).
    With no jumps all energies vanish and the ratio is defined as 0.
    """
    eps_list = sorted((float(e) for e in eps_list), reverse=True)
    if not eps_list or eps_list[-1] <= 0:
        raise ConfigurationError("eps_list must be nonempty and positive")
    k = profile.problem.k
    if mk_value is None:
        mk_value = profile.value
    T = profile.minimizer.grid.b
    # validate every eps before computing anything
    for eps in eps_list:
        if target.count and eps * T >= 0.5 * target.min_gap():
            raise GapConditionError(
                f"eps={eps:g} violates the window condition eps*T < min_gap/2 = {target.min_gap() / 2:g}"
            )
    rows = []
    for eps in eps_list:
        if target.count == 0:
            grid = make_grid(*target.interval, int(np.ceil(grid_density / eps)) + 1)
            u = sample_jump_function(target, grid)
            energy = energy_F_eps(u, EnergyParams(k, eps, well))
            rows.append((eps, energy, 0.0))
            continue
        rec = build_recovery_1d(target, eps, profile, grid_density=grid_density)
        energy = energy_F_eps(rec.u, EnergyParams(k, eps, well))
        rows.append((eps, energy, energy / (mk_value * target.count)))
    return GammaSweep(k=k, target=target, mk_value=mk_value, rows=tuple(rows))
