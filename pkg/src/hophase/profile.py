"""Optimal transition-profile problems for higher-order double-well energies.

The optimal transition constant of order k is approximated through a family of
finite-interval minimizations of the unscaled energy

    E(v) = integral W(v) + (v^(k))^2 dt .

Three endpoint regimes are supported on [-T, T] (half problems on (0, T)):

* clamped    -- v(-T) = -1, v(T) = +1 and v^(l)(+-T) = 0 for l = 1..k-1,
                discretized by pinning the k nodes nearest each endpoint to the
                well value, i.e. exactly the grid functions that extend by a
                constant outside the window without losing smoothness;
* relaxed    -- |v(-T) + 1| <= eta, |v(T) - 1| <= eta, |v^(l)(+-T)| <= 1/N.
                The k boundary-layer nodes at each end are parameterized by the
                endpoint jet z = (v, v', ..., v^(k-1)) through its Taylor
                polynomial, so the constraints become a literal box in z and
                the clamped problem is the degenerate box z = (-+1, 0, ..., 0);
* half       -- one-sided excursion problems on (0, T): start within eta of the
                well `sign` with derivative bounds 1/N, end pinned on one of
                the two branches sign + 2*eta*branch; the driver scans a
                geometric grid of horizons T and both branches and returns the
                minimum, which lower-bounds no transition and certifies that
                leaving a well costs a definite amount of energy.

Minimization is limited-memory quasi-Newton descent (scipy's L-BFGS-B) with the
exact algebraic gradient of the discrete energy; bounds realize the relaxed and
half boxes by projection. A callback asserts the energy history is nonincreasing
at every iteration. Clamped solves warm-start through a coarse-to-fine grid
continuation, and for even wells the final iterate is replaced by its odd part
whenever that does not increase the energy.

Also here: Hermite bridges (the minimal integral of (v^(k))^2 needed to bend
given endpoint data flat over a buffer, a closed-form quadratic form), gluing a
profile to a constant by such a bridge, and m_k estimation tables over (T, n)
product grids with checkpointing and an optional process pool.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import minimize

from ._exact import solve_rational
from .core import (
    K_MAX,
    DoubleWell,
    Grid1D,
    GridFunction1D,
    apply_derivative,
    derivative_matrix,
    trapezoid_weights,
)
from .energy import energy_profile
from .errors import ConfigurationError, InvariantViolation

REGIMES = ("clamped", "relaxed", "half")


# ---------------------------------------------------------------------------
# problem and result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProfileProblem:
    """One finite-interval transition problem.

    clamped/relaxed live on [-T, T]; half lives on (0, T). eta and N are only
    meaningful (and required) for the relaxed and half regimes; sign and branch
    only for half.
    """

    k: int
    T: float
    n: int
    well: DoubleWell
    regime: str = "clamped"
    eta: float | None = None
    N: int | None = None
    sign: int = 1
    branch: int = 1
    tol: float = 1e-7
    max_iter: int = 20000
    lbfgs_memory: int = 30

    def __post_init__(self) -> None:
        if not 1 <= self.k <= K_MAX:
            raise ConfigurationError(f"k must be in 1..{K_MAX}, got {self.k}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ConfigurationError(f"T must be positive, got {self.T}")
        if self.n < 2 * self.k + 3:
            raise ConfigurationError(f"need n >= {2 * self.k + 3} for k={self.k}, got {self.n}")
        if self.regime not in REGIMES:
            raise ConfigurationError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.regime in ("relaxed", "half"):
            if self.eta is None or not 0 < self.eta < math.sqrt(self.well.beta):
                raise ConfigurationError(
                    f"relaxed/half regimes need eta in (0, sqrt(beta)) = (0, {math.sqrt(self.well.beta):g}), got {self.eta}"
                )
            if self.N is None or self.N < 1:
                raise ConfigurationError(f"relaxed/half regimes need N >= 1, got {self.N}")
        if self.regime == "half":
            if self.sign not in (-1, 1) or self.branch not in (-1, 1):
                raise ConfigurationError("half regime needs sign and branch in {-1, +1}")
        if not self.tol > 0 or self.max_iter < 1:
            raise ConfigurationError("tol must be positive and max_iter >= 1")

    @property
    def grid(self) -> Grid1D:
        if self.regime == "half":
            return Grid1D(0.0, self.T, self.n)
        return Grid1D(-self.T, self.T, self.n)


@dataclass(frozen=True)
class ProfileResult:
    """Solver output: minimizer, recomputed energy, and convergence data.

    value is energy_profile(minimizer) recomputed through the public energy
    routine; grad_norm is the max-norm of the projected gradient at the
    solution; constraint_violation is measured in the problem's own encoding
    (pinned nodes / jet boxes), where feasibility is exact by construction.
    """

    problem: ProfileProblem
    minimizer: GridFunction1D
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    constraint_violation: float
    energy_history: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# variable encodings
# ---------------------------------------------------------------------------


class _Encoding:
    """Maps optimizer variables x to full nodal vectors u and back.

    clamped: x = interior values, boundary layers pinned to -+1.
    relaxed: x = [z_left, interior, z_right]; each layer is the Taylor
             polynomial of its endpoint jet z evaluated at the layer nodes.
    half:    x = [z_left, interior]; the final node is pinned to the branch
             value sign + 2*eta*branch.
    """

    def __init__(self, pb: ProfileProblem):
        self.pb = pb
        k, n, h = pb.k, pb.n, pb.grid.h
        # Taylor maps layer values <- jet; row j is the node at offset j*h
        # (left) or (j - k + 1)*h (right, so the last row sits at the endpoint).
        self.b_left = np.array([[(j * h) ** l / factorial(l) for l in range(k)] for j in range(k)])
        self.b_right = np.array([[((j - k + 1) * h) ** l / factorial(l) for l in range(k)] for j in range(k)])
        if pb.regime == "half":
            self.branch_value = pb.sign + 2.0 * pb.eta * pb.branch
        self.n_free = {
            "clamped": n - 2 * k,
            "relaxed": n,
            "half": k + (n - 1 - k),
        }[pb.regime]

    def assemble(self, x: np.ndarray) -> np.ndarray:
        pb = self.pb
        k, n = pb.k, pb.n
        u = np.empty(n)
        if pb.regime == "clamped":
            u[:k] = -1.0
            u[n - k :] = 1.0
            u[k : n - k] = x
        elif pb.regime == "relaxed":
            u[:k] = self.b_left @ x[:k]
            u[k : n - k] = x[k : n - k]
            u[n - k :] = self.b_right @ x[n - k :]
        else:
            u[:k] = self.b_left @ x[:k]
            u[k : n - 1] = x[k:]
            u[n - 1] = self.branch_value
        return u

    def reduce_gradient(self, g: np.ndarray) -> np.ndarray:
        pb = self.pb
        k, n = pb.k, pb.n
        if pb.regime == "clamped":
            return g[k : n - k]
        if pb.regime == "relaxed":
            return np.concatenate([self.b_left.T @ g[:k], g[k : n - k], self.b_right.T @ g[n - k :]])
        return np.concatenate([self.b_left.T @ g[:k], g[k : n - 1]])

    def jet_boxes(self) -> np.ndarray:
        """Box half-widths for one endpoint jet: eta for the value, 1/N for
        the k-1 derivative components."""
        pb = self.pb
        rad = np.full(pb.k, 1.0 / pb.N if pb.N else 0.0)
        rad[0] = pb.eta if pb.eta else 0.0
        return rad

    def bounds(self):
        pb = self.pb
        if pb.regime == "clamped":
            return None
        k, n = pb.k, pb.n
        rad = self.jet_boxes()
        free = [(None, None)] * (self.n_free - (2 * k if pb.regime == "relaxed" else k))
        if pb.regime == "relaxed":
            left = [(-1.0 - rad[0], -1.0 + rad[0])] + [(-r, r) for r in rad[1:]]
            right = [(1.0 - rad[0], 1.0 + rad[0])] + [(-r, r) for r in rad[1:]]
            return left + free + right
        left = [(pb.sign - rad[0], pb.sign + rad[0])] + [(-r, r) for r in rad[1:]]
        return left + free

    def x_from_values(self, values: np.ndarray) -> np.ndarray:
        """Warm-start vector reproducing `values` as closely as the box allows."""
        pb = self.pb
        k, n = pb.k, pb.n
        if pb.regime == "clamped":
            return values[k : n - k].copy()
        z_left = np.linalg.solve(self.b_left, values[:k])
        if pb.regime == "relaxed":
            z_right = np.linalg.solve(self.b_right, values[n - k :])
            x = np.concatenate([z_left, values[k : n - k], z_right])
        else:
            x = np.concatenate([z_left, values[k : n - 1]])
        for i, (lo, hi) in enumerate(self.bounds()):
            if lo is not None:
                x[i] = min(max(x[i], lo), hi)
        return x

    def constraint_violation(self, x: np.ndarray, u: np.ndarray) -> float:
        pb = self.pb
        k, n = pb.k, pb.n
        if pb.regime == "clamped":
            return float(max(np.max(np.abs(u[:k] + 1.0)), np.max(np.abs(u[n - k :] - 1.0))))
        viol = 0.0
        bounds = self.bounds()
        for xi, (lo, hi) in zip(x, bounds):
            if lo is not None:
                viol = max(viol, lo - xi, xi - hi)
        if pb.regime == "half":
            viol = max(viol, abs(u[n - 1] - self.branch_value))
        return float(max(viol, 0.0))


# ---------------------------------------------------------------------------
# objective and descent loop
# ---------------------------------------------------------------------------


class _Objective:
    def __init__(self, pb: ProfileProblem, enc: _Encoding):
        self.enc = enc
        self.well = pb.well
        grid = pb.grid
        self.tw = trapezoid_weights(grid)
        self.mat = derivative_matrix(grid, pb.k)
        self.mat_t = self.mat.T.tocsr()

    def energy(self, u: np.ndarray) -> float:
        d = self.mat @ u
        return float(np.dot(self.tw, self.well.value(u) + d * d))

    def fun(self, x: np.ndarray):
        u = self.enc.assemble(x)
        d = self.mat @ u
        f = float(np.dot(self.tw, self.well.value(u) + d * d))
        g_u = self.tw * self.well.derivative(u) + 2.0 * (self.mat_t @ (self.tw * d))
        return f, self.enc.reduce_gradient(g_u)


def _projected_grad_inf(x, g, bounds) -> float:
    if bounds is None:
        return float(np.max(np.abs(g))) if len(g) else 0.0
    pg = np.asarray(g, dtype=float).copy()
    for i, (lo, hi) in enumerate(bounds):
        if lo is not None and x[i] <= lo:
            pg[i] = min(pg[i], 0.0)
        if hi is not None and x[i] >= hi:
            pg[i] = max(pg[i], 0.0)
    return float(np.max(np.abs(pg))) if len(pg) else 0.0


def _descend(pb: ProfileProblem, obj: _Objective, x0: np.ndarray):
    """Run L-BFGS-B from x0, asserting descent; returns (x, history, nit)."""
    bounds = obj.enc.bounds()
    history = [obj.fun(x0)[0]]

    def callback(xk):
        fk = obj.fun(xk)[0]
        if fk > history[-1] + 1e-10 * (1.0 + abs(history[-1])):
            raise InvariantViolation(
                f"descent violated: energy rose from {history[-1]!r} to {fk!r} at iteration {len(history)}"
            )
        history.append(fk)

    res = minimize(
        obj.fun,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        callback=callback,
        options={
            "maxiter": pb.max_iter,
            "maxfun": max(20000, 5 * pb.max_iter),
            "ftol": 1e-16,
            "gtol": pb.tol,
            "maxcor": pb.lbfgs_memory,
        },
    )
    return np.asarray(res.x, dtype=float), np.asarray(history), int(res.nit)


def _result_from(pb: ProfileProblem, enc: _Encoding, obj: _Objective, x: np.ndarray, history, nit) -> ProfileResult:
    u = enc.assemble(x)
    _, g = obj.fun(x)
    pg = _projected_grad_inf(x, g, enc.bounds())
    minimizer = GridFunction1D(pb.grid, u)
    return ProfileResult(
        problem=pb,
        minimizer=minimizer,
        value=energy_profile(minimizer, pb.k, pb.well),
        grad_norm=pg,
        iterations=nit,
        converged=pg <= pb.tol,
        constraint_violation=enc.constraint_violation(x, u),
        energy_history=np.asarray(history),
    )


# ---------------------------------------------------------------------------
# initial guesses
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _odd_ramp_coeffs(k: int) -> tuple[float, ...]:
    """Odd degree-(2k-1) polynomial with s(1) = 1, s^(l)(1) = 0 for l < k."""
    degs = [2 * j + 1 for j in range(k)]
    a = [[Fraction(factorial(m) // factorial(m - l)) if l <= m else Fraction(0) for m in degs] for l in range(k)]
    b = [Fraction(1)] + [Fraction(0)] * (k - 1)
    sol = solve_rational(a, b)
    coeffs = [Fraction(0)] * (2 * k)
    for m, c in zip(degs, sol):
        coeffs[m] = c
    return tuple(float(c) for c in coeffs)


def default_initial_profile(pb: ProfileProblem) -> np.ndarray:
    """Deterministic start: Hermite-smoothed odd ramp (clamped/relaxed) or the
    straight line between the endpoint targets (half)."""
    t = pb.grid.nodes
    if pb.regime == "half":
        bv = pb.sign + 2.0 * pb.eta * pb.branch
        return pb.sign + (bv - pb.sign) * t / pb.T
    w = min(1.0, pb.T)
    return npoly.polyval(np.clip(t / w, -1.0, 1.0), _odd_ramp_coeffs(pb.k))


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def _continuation_levels(pb: ProfileProblem) -> list[int]:
    ns = [pb.n]
    floor = max(2 * pb.k + 3, 65)
    while (ns[0] - 1) % 2 == 0 and (ns[0] - 1) // 2 + 1 >= floor:
        ns.insert(0, (ns[0] - 1) // 2 + 1)
    return ns


def solve_clamped(
    pb: ProfileProblem,
    start: np.ndarray | GridFunction1D | ProfileResult | None = None,
    *,
    restarts: int = 0,
    seed: int = 0,
    continuation: bool = True,
) -> ProfileResult:
    """Minimize the clamped transition problem on [-T, T].

    Descends from the smoothed odd ramp through a coarse-to-fine grid
    continuation (each level warm-starts the next); `start` (nodal values on
    the problem grid) replaces the ramp and skips continuation. With
    restarts > 0, that many seeded random perturbations of the ramp are also
    descended on the final grid and the lowest minimum is reported: the
    infimum is global, so only upper bounds plus stability across restarts are
    certified. Finally the iterate is replaced by its odd part when that does
    not increase the energy (even wells: the minimizer is expected odd).
    """
    if pb.regime != "clamped":
        raise ConfigurationError(f"solve_clamped needs regime='clamped', got {pb.regime!r}")
    if isinstance(start, ProfileResult):
        start = start.minimizer.values
    elif isinstance(start, GridFunction1D):
        start = start.values

    levels = [pb.n] if (start is not None or not continuation) else _continuation_levels(pb)
    u_prev = None
    nodes_prev = None
    total_nit = 0
    for n_level in levels:
        pb_l = replace(pb, n=n_level)
        enc = _Encoding(pb_l)
        obj = _Objective(pb_l, enc)
        if u_prev is None:
            u0 = np.asarray(start, dtype=float) if start is not None else default_initial_profile(pb_l)
            if u0.shape != (n_level,):
                raise ConfigurationError(f"start values must have shape ({n_level},), got {u0.shape}")
        else:
            u0 = np.interp(pb_l.grid.nodes, nodes_prev, u_prev)
        x, history, nit = _descend(pb_l, obj, enc.x_from_values(u0))
        total_nit += nit
        u_prev = enc.assemble(x)
        nodes_prev = pb_l.grid.nodes

    enc = _Encoding(pb)
    obj = _Objective(pb, enc)

    best_x, best_f = x, obj.fun(x)[0]
    if restarts:
        base = default_initial_profile(pb)
        t = pb.grid.nodes
        for r in range(1, restarts + 1):
            rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
            bump = sum(
                rng.normal(0.0, 0.2 / m) * np.sin(np.pi * m * (t + pb.T) / (2 * pb.T)) for m in range(1, 5)
            )
            xr, hr, nr = _descend(pb, obj, enc.x_from_values(base + bump))
            total_nit += nr
            fr = obj.fun(xr)[0]
            if fr < best_f:
                best_x, best_f, history = xr, fr, hr

    # odd-part replacement: keep whenever the energy does not increase
    u = enc.assemble(best_x)
    u_odd = 0.5 * (u - u[::-1])
    x_odd = enc.x_from_values(u_odd)
    if obj.fun(x_odd)[0] <= best_f * (1.0 + 1e-12) + 1e-15:
        best_x = x_odd

    return _result_from(pb, enc, obj, best_x, history, total_nit)


def solve_relaxed(pb: ProfileProblem, start: np.ndarray | GridFunction1D | ProfileResult | None = None) -> ProfileResult:
    """Minimize the relaxed problem; by default warm-started from the clamped
    minimizer of the same (k, T, n), which is feasible (center of the jet
    boxes), so the relaxed value never exceeds the clamped one by descent."""
    if pb.regime != "relaxed":
        raise ConfigurationError(f"solve_relaxed needs regime='relaxed', got {pb.regime!r}")
    if start is None:
        start = solve_clamped(replace(pb, regime="clamped", eta=None, N=None))
    if isinstance(start, ProfileResult):
        start = start.minimizer.values
    elif isinstance(start, GridFunction1D):
        start = start.values
    enc = _Encoding(pb)
    obj = _Objective(pb, enc)
    x, history, nit = _descend(pb, obj, enc.x_from_values(np.asarray(start, dtype=float)))
    return _result_from(pb, enc, obj, x, history, nit)


@dataclass(frozen=True)
class RelaxedFamily:
    """Relaxed minima over an (eta, N) grid with descent-chained warm starts."""

    clamped: ProfileResult
    results: dict


def relaxed_family(
    k: int,
    T: float,
    n: int,
    well: DoubleWell,
    etas,
    Ns,
    *,
    tol: float = 1e-7,
    max_iter: int = 20000,
) -> RelaxedFamily:
    """Solve the relaxed problem over all (eta, N) pairs, tightest boxes first.

    Each solve warm-starts from the best already-solved point that is feasible
    for its box (the clamped minimizer always is; so are the results at smaller
    eta or larger N). Descent then guarantees the orderings

        value(eta, N) <= clamped,  nondecreasing in N,  nonincreasing in eta

    structurally rather than merely numerically.
    """
    clamped = solve_clamped(ProfileProblem(k=k, T=T, n=n, well=well, tol=tol, max_iter=max_iter))
    etas = sorted(set(float(e) for e in etas))
    Ns = sorted(set(int(N) for N in Ns), reverse=True)
    results: dict = {}
    for i, eta in enumerate(etas):
        for j, N in enumerate(Ns):
            pb = ProfileProblem(
                k=k, T=T, n=n, well=well, regime="relaxed", eta=eta, N=N, tol=tol, max_iter=max_iter
            )
            enc = _Encoding(pb)
            obj = _Objective(pb, enc)
            candidates = [clamped.minimizer.values]
            if i > 0:
                candidates.append(results[(etas[i - 1], N)].minimizer.values)
            if j > 0:
                candidates.append(results[(eta, Ns[j - 1])].minimizer.values)
            xs = [enc.x_from_values(c) for c in candidates]
            x0 = min(xs, key=lambda xc: obj.fun(xc)[0])
            x, history, nit = _descend(pb, obj, x0)
            results[(eta, N)] = _result_from(pb, enc, obj, x, history, nit)
    return RelaxedFamily(clamped=clamped, results=results)


@dataclass(frozen=True)
class HalfScan:
    """Minimum of a one-sided excursion problem over horizons and branches."""

    value: float
    T_opt: float
    branch_opt: int
    best: ProfileResult
    rows: tuple  # (T, branch, value, converged)


def solve_half(
    k: int,
    well: DoubleWell,
    eta: float,
    N: int,
    T_bar: float,
    sign: int = 1,
    *,
    nodes_per_unit: float = 40.0,
    n_cap: int = 801,
    t_points: int = 16,
    tol: float = 1e-7,
    max_iter: int = 4000,
) -> HalfScan:
    """Scan the half problem m_k^sign(eta, N, T_bar): infimum over horizons
    0 < T <= T_bar (geometric 16-point grid from T_bar/100) and both endpoint
    branches sign +- 2*eta of the constrained excursion energy.

    The scan is a screening tool (64 solves per sign for the default grid), so
    its resolution and iteration defaults are deliberately coarser than the
    clamped solver's; descent truncation can only overestimate the infimum,
    which is the safe direction for the positivity claims this feeds. Rows
    record per-solve convergence honestly.
    """
    rows = []
    best: ProfileResult | None = None
    for T in np.geomspace(T_bar / 100.0, T_bar, t_points):
        n = int(np.clip(round(T * nodes_per_unit) + 1, max(4 * k + 9, 2 * k + 3), n_cap))
        for branch in (-1, 1):
            pb = ProfileProblem(
                k=k, T=float(T), n=n, well=well, regime="half",
                eta=eta, N=N, sign=sign, branch=branch, tol=tol, max_iter=max_iter,
            )
            enc = _Encoding(pb)
            obj = _Objective(pb, enc)
            x, history, nit = _descend(pb, obj, enc.x_from_values(default_initial_profile(pb)))
            res = _result_from(pb, enc, obj, x, history, nit)
            rows.append((float(T), branch, res.value, res.converged))
            if best is None or res.value < best.value:
                best = res
    return HalfScan(
        value=best.value,
        T_opt=best.problem.T,
        branch_opt=best.problem.branch,
        best=best,
        rows=tuple(rows),
    )


@dataclass(frozen=True)
class MStar:
    """min over both wells of the half-problem minima: a positive lower
    barrier for leaving either well under the relaxed endpoint constraints."""

    value: float
    plus: HalfScan
    minus: HalfScan


def mstar_k(k: int, well: DoubleWell, eta: float, N: int, T_bar: float, **kwargs) -> MStar:
    plus = solve_half(k, well, eta, N, T_bar, sign=1, **kwargs)
    minus = solve_half(k, well, eta, N, T_bar, sign=-1, **kwargs)
    return MStar(value=min(plus.value, minus.value), plus=plus, minus=minus)


# ---------------------------------------------------------------------------
# Hermite bridges
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HermiteBridge:
    """Minimizer of integral_0^L (v^(k))^2 with prescribed left jet, flat right.

    The Euler-Lagrange equation v^(2k) = 0 makes the minimizer the unique
    degree-(2k-1) Hermite interpolant; theta is its energy, an exact quadratic
    form in the jet (computed in rational arithmetic, rounded once).
    """

    k: int
    length: float
    coeffs: np.ndarray
    theta: float

    def __call__(self, t):
        return npoly.polyval(np.asarray(t, dtype=float), self.coeffs)


def hermite_extension(k: int, z, length: float = 1.0) -> HermiteBridge:
    """Bridge with v^(l)(0) = z[l] (l = 0..k-1) and v^(l)(length) = 0."""
    if not 1 <= k <= K_MAX:
        raise ConfigurationError(f"k must be in 1..{K_MAX}, got {k}")
    z = np.asarray(z, dtype=float)
    if z.shape != (k,) or not np.all(np.isfinite(z)):
        raise ConfigurationError(f"jet must be {k} finite values, got shape {z.shape}")
    if not length > 0:
        raise ConfigurationError(f"bridge length must be positive, got {length}")
    length_f = Fraction(float(length))
    c = [Fraction(float(v)) / factorial(l) for l, v in enumerate(z)] + [Fraction(0)] * k
    # conditions p^(l)(L) = 0, l = 0..k-1, solved for c_k..c_{2k-1}
    a = [
        [Fraction(factorial(m) // factorial(m - l)) * length_f ** (m - l) for m in range(k, 2 * k)]
        for l in range(k)
    ]
    rhs = [
        -sum(
            Fraction(factorial(m) // factorial(m - l)) * length_f ** (m - l) * c[m]
            for m in range(l, k)
        )
        for l in range(k)
    ]
    for m, cm in enumerate(solve_rational(a, rhs), start=k):
        c[m] = cm
    # theta = integral of (p^(k))^2: p^(k) = sum_q a_q t^q with a_q = c_{k+q} (k+q)!/q!
    aq = [c[k + q] * (factorial(k + q) // factorial(q)) for q in range(k)]
    theta = sum(
        aq[q] * aq[r] * length_f ** (q + r + 1) / (q + r + 1) for q in range(k) for r in range(k)
    )
    return HermiteBridge(k=k, length=float(length), coeffs=np.array([float(v) for v in c]), theta=float(theta))


@dataclass(frozen=True)
class GlueResult:
    """Profile extended to a constant by a Hermite bridge over a buffer."""

    extended: GridFunction1D
    theta: float
    added_energy: float
    bridge: HermiteBridge


def glue_to_constant(v: GridFunction1D, side: str, k: int, well: DoubleWell, target: float | None = None) -> GlueResult:
    """Extend v beyond one endpoint so it reaches the constant `target` (the
    nearest well by default) with k-1 flat derivatives, over a buffer of
    m = round(1/h) grid cells (unit length up to h/2). The added energy is
    theta plus the trapezoid quadrature of W along the bridge."""
    if side not in ("left", "right"):
        raise ConfigurationError(f"side must be 'left' or 'right', got {side!r}")
    g = v.grid
    h = g.h
    idx = 0 if side == "left" else g.n - 1
    endpoint_value = float(v.values[idx])
    if target is None:
        target = 1.0 if endpoint_value >= 0 else -1.0
    jet = np.empty(k)
    jet[0] = endpoint_value - target
    for l in range(1, k):
        d = apply_derivative(v.values, h, l)[idx]
        jet[l] = d if side == "right" else -d
    m = max(int(round(1.0 / h)), k + 2)
    bridge = hermite_extension(k, jet, length=m * h)
    s = np.arange(m + 1) * h
    buffer_values = target + bridge(s)
    w = np.full(m + 1, h)
    w[0] = w[-1] = 0.5 * h
    added = bridge.theta + float(np.dot(w, well.value(buffer_values)))
    if side == "right":
        grid = Grid1D(g.a, g.b + m * h, g.n + m)
        values = np.concatenate([v.values, buffer_values[1:]])
    else:
        grid = Grid1D(g.a - m * h, g.b, g.n + m)
        values = np.concatenate([buffer_values[1:][::-1], v.values])
    return GlueResult(extended=GridFunction1D(grid, values), theta=bridge.theta, added_energy=added, bridge=bridge)


# ---------------------------------------------------------------------------
# m_k tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MkRow:
    k: int
    T: float
    n: int
    value: float
    grad_norm: float
    converged: bool
    iterations: int


@dataclass
class MkTable:
    """Clamped minima over a (T, n) product grid with a refinement estimate.

    estimate is the value at (T_max, n_max); uncertainty adds the absolute
    differences to the previous T and n levels (None when the grid has a
    single level in both directions). Monotonicity in T within a fixed-n row
    family is flagged beyond 10*tol plus an O(h^2) discretization allowance —
    h varies with T at fixed n, so the continuum monotonicity can be masked
    near convergence; drivers that need strict monotonicity should scale n
    with T and warm-start (see relaxed_family / the acceptance suite).
    """

    k: int
    rows: list[MkRow]
    estimate: float
    uncertainty: float | None
    violations: list[str]
    tol: float

    def csv_text(self) -> str:
        lines = ["k,T,n,value,grad_norm,converged,iterations"]
        for r in self.rows:
            lines.append(f"{r.k},{r.T!r},{r.n},{r.value!r},{r.grad_norm!r},{r.converged},{r.iterations}")
        return "\n".join(lines) + "\n"

    def json_payload(self) -> dict:
        return {
            "k": self.k,
            "estimate": self.estimate,
            "uncertainty": self.uncertainty,
            "violations": list(self.violations),
            "rows": [
                {
                    "k": r.k,
                    "T": r.T,
                    "n": r.n,
                    "value": r.value,
                    "grad_norm": r.grad_norm,
                    "converged": r.converged,
                    "iterations": r.iterations,
                }
                for r in self.rows
            ],
        }


def _solve_cell(args) -> tuple:
    k, T, n, well, tol, max_iter = args
    res = solve_clamped(ProfileProblem(k=k, T=T, n=n, well=well, tol=tol, max_iter=max_iter))
    return (k, T, n, res.value, res.grad_norm, res.converged, res.iterations)


def estimate_mk(
    k: int,
    well: DoubleWell,
    T_list,
    n_list,
    *,
    tol: float = 1e-7,
    max_iter: int = 20000,
    jobs: int = 1,
    checkpoint: str | os.PathLike | None = None,
) -> MkTable:
    """Solve the clamped problem over the (T, n) product grid and tabulate.

    Results merge deterministically in (T, n) key order regardless of worker
    scheduling. `checkpoint` names a JSON file of completed cells: existing
    entries are reused, new ones appended after each batch, so long sweeps can
    resume.
    """
    T_list = [float(T) for T in T_list]
    n_list = [int(n) for n in n_list]
    if not T_list or sorted(T_list) != T_list or len(set(T_list)) != len(T_list) or min(T_list) <= 0:
        raise ConfigurationError("T_list must be nonempty, strictly increasing, and positive")
    if not n_list or sorted(n_list) != n_list or len(set(n_list)) != len(n_list):
        raise ConfigurationError("n_list must be nonempty and strictly increasing")

    done: dict[tuple, MkRow] = {}
    if checkpoint is not None and os.path.exists(checkpoint):
        with open(checkpoint) as fh:
            payload = json.load(fh)
        if payload.get("k") != k:
            raise ConfigurationError(f"checkpoint {checkpoint} is for k={payload.get('k')}, not k={k}")
        for rec in payload.get("rows", []):
            row = MkRow(**rec)
            done[(row.T, row.n)] = row

    keys = [(T, n) for T in T_list for n in n_list]
    pending = [key for key in keys if key not in done]
    tasks = [(k, T, n, well, tol, max_iter) for (T, n) in pending]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            outs = list(pool.map(_solve_cell, tasks))
    else:
        outs = [_solve_cell(t) for t in tasks]
    for (T, n), out in zip(pending, outs):
        done[(T, n)] = MkRow(k=out[0], T=out[1], n=out[2], value=out[3], grad_norm=out[4], converged=out[5], iterations=out[6])
        if checkpoint is not None:
            _write_checkpoint(checkpoint, k, done)

    rows = [done[key] for key in keys]
    value = {key: done[key].value for key in keys}

    violations = []
    for n in n_list:
        for t_prev, t_next in zip(T_list, T_list[1:]):
            h2 = (2 * t_prev / (n - 1)) ** 2 + (2 * t_next / (n - 1)) ** 2
            slack = 10.0 * tol + h2 * (1.0 + abs(value[(t_prev, n)]))
            if value[(t_next, n)] > value[(t_prev, n)] + slack:
                violations.append(
                    f"value(T={t_next:g}, n={n}) = {value[(t_next, n)]!r} exceeds value(T={t_prev:g}, n={n}) = {value[(t_prev, n)]!r}"
                )

    estimate = value[(T_list[-1], n_list[-1])]
    unc = None
    if len(T_list) > 1 or len(n_list) > 1:
        unc = 0.0
        if len(T_list) > 1:
            unc += abs(estimate - value[(T_list[-2], n_list[-1])])
        if len(n_list) > 1:
            unc += abs(estimate - value[(T_list[-1], n_list[-2])])
    return MkTable(k=k, rows=rows, estimate=estimate, uncertainty=unc, violations=violations, tol=tol)


def _write_checkpoint(path, k: int, done: dict) -> None:
    payload = {
        "k": k,
        "rows": [
            {
                "k": r.k,
                "T": r.T,
                "n": r.n,
                "value": r.value,
                "grad_norm": r.grad_norm,
                "converged": r.converged,
                "iterations": r.iterations,
            }
            for _, r in sorted(done.items())
        ],
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
    os.replace(tmp, path)
