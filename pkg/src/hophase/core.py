"""Grids, double-well potentials, and finite-difference calculus on (a, b).

Everything downstream (energies, profile solves, diagnostics, recovery) is built
on three primitives defined here:

* uniform 1-D grids and nodal grid functions,
* double-well potentials W with the growth bound
  W(z) >= alpha * min((z - 1)^2, (z + 1)^2, beta),
* order-2 finite-difference stencils for the k-th derivative (centered in the
  interior, shifted one-sided windows near the boundary) together with composite
  trapezoid quadrature.

Stencil weights are generated by solving the small Vandermonde-type system
sum_j w_j * o_j^r / r! = delta_{r,k} in exact rational arithmetic, so the
resulting stencil annihilates polynomials of degree <= k - 1 and reproduces the
k-th derivative of polynomials of degree <= len(offsets) - 1 up to a single
rounding to float.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from math import factorial

import numpy as np
import scipy.sparse as sp

from ._exact import solve_rational
from .errors import ConfigurationError, ExtrapolationError

K_MAX = 5


# ---------------------------------------------------------------------------
# grids and grid functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid with n nodes on [a, b], spacing h = (b - a)/(n - 1)."""

    a: float
    b: float
    n: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or not self.a < self.b:
            raise ConfigurationError(f"grid interval must be finite with a < b, got ({self.a}, {self.b})")
        if self.n < 2:
            raise ConfigurationError(f"grid needs at least 2 nodes, got n={self.n}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.linspace(self.a, self.b, self.n)
        x.flags.writeable = False
        return x


def make_grid(a: float, b: float, n: int) -> Grid1D:
    """Validated Grid1D constructor (degenerate or reversed intervals are rejected)."""
    return Grid1D(float(a), float(b), int(n))


@dataclass(frozen=True)
class GridFunction1D:
    """Nodal values of a function on a Grid1D. Values must be finite."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ConfigurationError(f"values shape {v.shape} does not match grid with n={self.grid.n}")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("grid function values must be finite")
        object.__setattr__(self, "values", v)


def grid_function(grid: Grid1D, f) -> GridFunction1D:
    """Sample a callable (or accept an array) onto the grid."""
    vals = f(grid.nodes) if callable(f) else np.asarray(f, dtype=float)
    return GridFunction1D(grid, vals)


# ---------------------------------------------------------------------------
# double wells
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DoubleWell:
    """Double-well potential W with wells at -1 and +1.

    W is continuous, nonnegative, piecewise C^1 (one-sided derivatives at kinks;
    required for gradient-based minimization), vanishes exactly at z = -1 and
    z = +1, and satisfies the growth bound

        W(z) >= alpha * min((z - 1)^2, (z + 1)^2, beta).

    Kinds: "quartic" W(z) = (1 - z^2)^2 (alpha = 1/4, beta = 1),
    "piecewise_quadratic" W(z) = (|z| - 1)^2 (alpha = beta = 1), and
    "tabulated" (linear interpolation of a strictly increasing table; queries
    outside the table range raise ExtrapolationError).
    """

    kind: str
    alpha: float
    beta: float
    table_z: np.ndarray | None = field(default=None, compare=False)
    table_w: np.ndarray | None = field(default=None, compare=False)

    def value(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "quartic":
            return (1.0 - z * z) ** 2
        if self.kind == "piecewise_quadratic":
            return (np.abs(z) - 1.0) ** 2
        if self.kind == "tabulated":
            self._check_range(z)
            return np.interp(z, self.table_z, self.table_w)
        raise ConfigurationError(f"unknown well kind {self.kind!r}")

    def derivative(self, z):
        """dW/dz; at kinks the right-hand one-sided derivative is used."""
        z = np.asarray(z, dtype=float)
        if self.kind == "quartic":
            return 4.0 * z * (z * z - 1.0)
        if self.kind == "piecewise_quadratic":
            return np.where(z >= 0.0, 2.0 * (z - 1.0), 2.0 * (z + 1.0))
        if self.kind == "tabulated":
            self._check_range(z)
            slopes = np.diff(self.table_w) / np.diff(self.table_z)
            idx = np.clip(np.searchsorted(self.table_z, z, side="right") - 1, 0, len(slopes) - 1)
            return slopes[idx]
        raise ConfigurationError(f"unknown well kind {self.kind!r}")

    def _check_range(self, z: np.ndarray) -> None:
        lo, hi = self.table_z[0], self.table_z[-1]
        if np.any(z < lo) or np.any(z > hi):
            bad = float(np.asarray(z).ravel()[np.argmax((z < lo) | (z > hi))])
            raise ExtrapolationError(f"z={bad} outside tabulated range [{lo}, {hi}]")

    def check_growth_bound(self, lo: float = -3.0, hi: float = 3.0, samples: int = 10_000) -> bool:
        """Growth inequality at `samples` points in [lo, hi] (allows round-off slack)."""
        if self.kind == "tabulated":
            lo = max(lo, float(self.table_z[0]))
            hi = min(hi, float(self.table_z[-1]))
        z = np.linspace(lo, hi, samples)
        bound = self.alpha * np.minimum(np.minimum((z - 1.0) ** 2, (z + 1.0) ** 2), self.beta)
        return bool(np.all(self.value(z) >= bound - 1e-12))


def quartic_well() -> DoubleWell:
    """The default quartic well W(z) = (1 - z^2)^2."""
    return DoubleWell(kind="quartic", alpha=0.25, beta=1.0)


def piecewise_quadratic_well() -> DoubleWell:
    """W(z) = (|z| - 1)^2: continuous, C^1 except at z = 0."""
    return DoubleWell(kind="piecewise_quadratic", alpha=1.0, beta=1.0)


def tabulated_well(z: np.ndarray, w: np.ndarray, alpha: float = 0.25, beta: float = 1.0) -> DoubleWell:
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if z.ndim != 1 or z.shape != w.shape or z.size < 2:
        raise ConfigurationError("table must be two equal-length 1-D columns with >= 2 rows")
    if not np.all(np.diff(z) > 0):
        raise ConfigurationError("table abscissae must be strictly increasing")
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w)) and np.all(w >= 0)):
        raise ConfigurationError("table values must be finite and nonnegative")
    if z[0] > -1.0 or z[-1] < 1.0:
        raise ConfigurationError("table must cover [-1, 1]")
    well = DoubleWell(kind="tabulated", alpha=alpha, beta=beta, table_z=z, table_w=w)
    for zero in (-1.0, 1.0):
        if abs(float(well.value(zero))) > 1e-8:
            raise ConfigurationError(f"tabulated well must vanish at z={zero}")
    return well


def tabulated_well_from_csv(path, alpha: float = 0.25, beta: float = 1.0) -> DoubleWell:
    """Load a two-column (z, W) CSV; rows starting with '#' are skipped."""
    zs, ws = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            zs.append(float(row[0]))
            ws.append(float(row[1]))
    return tabulated_well(np.array(zs), np.array(ws), alpha=alpha, beta=beta)


# ---------------------------------------------------------------------------
# finite-difference stencils
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StencilK:
    """Weights for the k-th derivative at offset nodes; apply as sum(w u)/h^k."""

    k: int
    offsets: tuple[int, ...]
    weights: tuple[float, ...]
    accuracy_order: int


@lru_cache(maxsize=None)
def _weights_exact(k: int, offsets: tuple[int, ...]) -> tuple[float, ...]:
    m = len(offsets)
    a = [[Fraction(o) ** r / factorial(r) for o in offsets] for r in range(m)]
    b = [Fraction(1) if r == k else Fraction(0) for r in range(m)]
    return tuple(float(w) for w in solve_rational(a, b))


def make_stencil(k: int, offsets: tuple[int, ...]) -> StencilK:
    """Order-k derivative stencil on the given integer offsets.

    Needs len(offsets) >= k + 2 (or the symmetric centered window) for
    second-order accuracy; exact on polynomials of degree <= len(offsets) - 1.
    """
    if not 1 <= k <= K_MAX:
        raise ConfigurationError(f"derivative order must be in 1..{K_MAX}, got {k}")
    offsets = tuple(int(o) for o in offsets)
    if len(set(offsets)) != len(offsets):
        raise ConfigurationError("stencil offsets must be distinct")
    if len(offsets) < k + 1:
        raise ConfigurationError(f"need at least {k + 1} offsets for derivative order {k}")
    weights = _weights_exact(k, offsets)
    symmetric = sorted(offsets) == sorted(-o for o in offsets)
    # exact on degree <= len-1; for symmetric windows the degree-len moment
    # also cancels when len - k is odd, buying one extra order
    acc = len(offsets) - k + (1 if symmetric and (len(offsets) - k) % 2 == 1 else 0)
    return StencilK(k=k, offsets=offsets, weights=weights, accuracy_order=acc)


def centered_stencil(k: int) -> StencilK:
    """Narrowest centered stencil of accuracy order >= 2 for the k-th derivative."""
    r = (k + 1) // 2
    return make_stencil(k, tuple(range(-r, r + 1)))


def stencil_radius(k: int) -> int:
    return (k + 1) // 2


@lru_cache(maxsize=None)
def _derivative_matrix_scaled(n: int, k: int):
    """CSR matrix of h-independent stencil weights: D_h = matrix / h^k.

    Interior rows use the centered stencil; the r rows nearest each boundary
    use the shifted (k+2)-point window anchored at the boundary, which stays
    second-order accurate.
    """
    if not 1 <= k <= K_MAX:
        raise ConfigurationError(f"derivative order must be in 1..{K_MAX}, got {k}")
    if n < 2 * k + 3:
        raise ConfigurationError(f"need n >= {2 * k + 3} nodes for derivative order {k}, got {n}")
    r = stencil_radius(k)
    mat = sp.lil_matrix((n, n))
    center = centered_stencil(k)
    for i in range(n):
        if r <= i <= n - 1 - r:
            offs, w = center.offsets, center.weights
        elif i < r:
            offs = tuple(j - i for j in range(k + 2))
            w = _weights_exact(k, offs)
        else:
            offs = tuple(n - 1 - (k + 1) + j - i for j in range(k + 2))
            w = _weights_exact(k, offs)
        for o, wj in zip(offs, w):
            mat[i, i + o] = wj
    return mat.tocsr()


def derivative_matrix(grid: Grid1D, k: int):
    """Sparse nodal k-th derivative operator on the grid (includes the 1/h^k scale)."""
    return _derivative_matrix_scaled(grid.n, k) * grid.h ** (-k)


def apply_derivative(values: np.ndarray, h: float, k: int) -> np.ndarray:
    """k-th derivative of raw nodal values with spacing h."""
    return (_derivative_matrix_scaled(len(values), k) @ values) * h ** (-k)


def derivative_k(u: GridFunction1D, k: int) -> GridFunction1D:
    """Nodal k-th derivative of u, order-2 accurate up to the boundary."""
    return GridFunction1D(u.grid, apply_derivative(u.values, u.grid.h, k))


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def trapezoid_weights(grid: Grid1D) -> np.ndarray:
    w = np.full(grid.n, grid.h)
    w[0] = w[-1] = 0.5 * grid.h
    return w


def quadrature(f: GridFunction1D) -> float:
    """Composite trapezoid rule over the grid interval."""
    return float(np.dot(trapezoid_weights(f.grid), f.values))
