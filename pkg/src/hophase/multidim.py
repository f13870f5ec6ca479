"""Two-dimensional recovery fields and energies on the unit square.

The planar energy replaces (u^(k))^2 with the operator norm of the symmetric
k-tensor of k-th partials,

    F_eps(u) = integral of (1/eps) W(u) + eps^(2k-1) ||D^k u||^2,

and its minimal cost per unit interface length is the 1-D profile constant, so
F_eps of a recovery field should approach m_k * (interface length). Recovery
fields compose a solved 1-D profile with the signed distance from an analytic
interface (a line or a circle), u = v(-d/eps): d is negative inside the phase
E = {u = +1}, and the profile transitions on [-T, T], so u is exactly +-1
outside the tube |d| <= eps*T.

Symmetric 2-tensors of order k are stored by multiplicity: component j holds
the mixed partial with j derivatives in y (there are C(k, j) equal copies
inside the full tensor). The operator norm of a symmetric tensor is attained
on the diagonal, sup over unit w of |<T, w x ... x w>|, which in the plane is
a one-dimensional maximization over the angle: dense sampling followed by
golden-section refinement gives the norm to 1e-6 relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from .core import DoubleWell, Grid1D, GridFunction1D, K_MAX, derivative_matrix, trapezoid_weights
from .errors import ConfigurationError, GapConditionError
from .profile import ProfileResult
from .recovery import _profile_spline

# ---------------------------------------------------------------------------
# grids and interfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid2D:
    """n x n uniform nodes on the closed unit square, spacing h = 1/(n-1)."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ConfigurationError(f"grid needs at least 2 nodes per axis, got n={self.n}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    @property
    def axis(self) -> Grid1D:
        return Grid1D(0.0, 1.0, self.n)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.linspace(0.0, 1.0, self.n)
        x.flags.writeable = False
        return x


@dataclass(frozen=True)
class GridFunction2D:
    """Nodal values on a Grid2D; values[ix, iy] = u(x_ix, y_iy)."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n, self.grid.n):
            raise ConfigurationError(
                f"values shape {v.shape} does not match grid {self.grid.n} x {self.grid.n}"
            )
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("grid function values must be finite")
        object.__setattr__(self, "values", v)


def grid_function_2d(grid: Grid2D, f) -> GridFunction2D:
    """Sample a callable f(x, y) (or accept an array) onto the grid."""
    if callable(f):
        X, Y = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
        return GridFunction2D(grid, f(X, Y))
    return GridFunction2D(grid, np.asarray(f, dtype=float))


@dataclass(frozen=True)
class LineInterface:
    """Straight interface through `point` with unit normal `normal`; the
    phase E = {u = +1} is the half-plane the normal points away from."""

    point: tuple
    normal: tuple

    def __post_init__(self) -> None:
        p = (float(self.point[0]), float(self.point[1]))
        nx, ny = float(self.normal[0]), float(self.normal[1])
        norm = math.hypot(nx, ny)
        if norm == 0.0 or not math.isfinite(norm):
            raise ConfigurationError("line normal must be nonzero and finite")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "normal", (nx / norm, ny / norm))
        if not (0.0 <= p[0] <= 1.0 and 0.0 <= p[1] <= 1.0):
            raise ConfigurationError(f"line anchor point must lie in the unit square, got {p}")

    @property
    def reach(self) -> float:
        """Distance from the anchor point to the domain boundary."""
        px, py = self.point
        return min(px, py, 1.0 - px, 1.0 - py)


@dataclass(frozen=True)
class CircleInterface:
    """Circular interface; the phase E = {u = +1} is the inside."""

    center: tuple
    radius: float

    def __post_init__(self) -> None:
        c = (float(self.center[0]), float(self.center[1]))
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ConfigurationError(f"circle radius must be positive, got {self.radius}")
        clearance = min(c[0], c[1], 1.0 - c[0], 1.0 - c[1])
        if not clearance > self.radius:
            raise ConfigurationError(
                f"circle (center {c}, radius {self.radius}) must lie strictly inside the "
                f"unit square with clearance > radius (clearance {clearance:g})"
            )

    @property
    def reach(self) -> float:
        return self.radius


def signed_distance(shape, point):
    """Signed distance from the interface, negative inside E = {u = +1}.
    `point` is an array-like with trailing dimension 2 (a single point or a
    whole field of them); exact analytic values."""
    pt = np.asarray(point, dtype=float)
    x, y = pt[..., 0], pt[..., 1]
    if isinstance(shape, LineInterface):
        px, py = shape.point
        nx, ny = shape.normal
        d = (x - px) * nx + (y - py) * ny
    elif isinstance(shape, CircleInterface):
        cx, cy = shape.center
        d = np.hypot(x - cx, y - cy) - shape.radius
    else:
        raise ConfigurationError(f"unknown interface shape {type(shape).__name__}")
    return float(d) if d.ndim == 0 else d


def interface_length(shape) -> float:
    """Length of the interface inside the unit square: full circumference for
    circles (they sit strictly inside), clipped segment length for lines."""
    if isinstance(shape, CircleInterface):
        return 2.0 * math.pi * shape.radius
    if not isinstance(shape, LineInterface):
        raise ConfigurationError(f"unknown interface shape {type(shape).__name__}")
    px, py = shape.point
    nx, ny = shape.normal
    tx, ty = -ny, nx  # unit tangent
    t_lo, t_hi = -math.inf, math.inf
    for p0, tau in ((px, tx), (py, ty)):
        if abs(tau) < 1e-15:
            if not 0.0 <= p0 <= 1.0:
                return 0.0
            continue
        t1, t2 = (0.0 - p0) / tau, (1.0 - p0) / tau
        t_lo = max(t_lo, min(t1, t2))
        t_hi = min(t_hi, max(t1, t2))
    return max(t_hi - t_lo, 0.0)


# ---------------------------------------------------------------------------
# symmetric k-tensors in the plane
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TensorK2:
    """Symmetric k-tensor over R^2 stored by multiplicity: comps[j] is the
    component with j indices equal to 2 (the partial with j y-derivatives)."""

    k: int
    comps: tuple

    def __post_init__(self) -> None:
        if not 1 <= self.k <= K_MAX:
            raise ConfigurationError(f"tensor order must lie in [1, {K_MAX}], got {self.k}")
        c = tuple(float(v) for v in self.comps)
        if len(c) != self.k + 1:
            raise ConfigurationError(f"order-{self.k} tensor needs {self.k + 1} components, got {len(c)}")
        if not all(math.isfinite(v) for v in c):
            raise ConfigurationError("tensor components must be finite")
        object.__setattr__(self, "comps", c)


def _diagonal_values(comps, k: int, theta):
    """<T, w^(x)k> for w = (cos theta, sin theta); comps may be scalars or
    node arrays, theta a matching array."""
    c, s = np.cos(theta), np.sin(theta)
    out = 0.0
    for j in range(k + 1):
        out = out + math.comb(k, j) * comps[j] * c ** (k - j) * s**j
    return out


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _opnorm_field(comps, k: int, angles: int = 720, refine: int = 40, chunk: int = 8192) -> np.ndarray:
    """sup_|w|=1 |<T, w^(x)k>| per node: dense angular scan on [0, pi) (the
    absolute value makes antipodes redundant) then vectorized golden-section
    refinement around each node's best angle."""
    flat = np.stack([np.asarray(c, dtype=float).ravel() for c in comps])
    m = flat.shape[1]
    thetas = np.linspace(0.0, np.pi, angles, endpoint=False)
    coef = np.empty((angles, k + 1))
    for j in range(k + 1):
        coef[:, j] = math.comb(k, j) * np.cos(thetas) ** (k - j) * np.sin(thetas) ** j
    best_val = np.zeros(m)
    best_th = np.zeros(m)
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        p = np.abs(coef @ flat[:, lo:hi])
        idx = np.argmax(p, axis=0)
        best_val[lo:hi] = p[idx, np.arange(hi - lo)]
        best_th[lo:hi] = thetas[idx]

    # golden-section maximization of |P| on the bracket around each best angle
    delta = np.pi / angles
    a = best_th - delta
    b = best_th + delta
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = np.abs(_diagonal_values(flat, k, c))
    fd = np.abs(_diagonal_values(flat, k, d))
    for _ in range(refine):
        take_c = fc > fd
        b = np.where(take_c, d, b)
        a = np.where(take_c, a, c)
        c_new = b - _GOLDEN * (b - a)
        d_new = a + _GOLDEN * (b - a)
        fc_new = np.where(take_c, np.abs(_diagonal_values(flat, k, c_new)), fd)
        fd_new = np.where(take_c, fc, np.abs(_diagonal_values(flat, k, d_new)))
        c, d, fc, fd = c_new, d_new, fc_new, fd_new
    return np.maximum(best_val, np.maximum(fc, fd))


def operator_norm(T: TensorK2) -> float:
    """Operator norm sup_|w|=1 |<T, w^(x)k>|, within 1e-6 relative."""
    comps = [np.array([v]) for v in T.comps]
    return float(_opnorm_field(comps, T.k)[0])


def rotate_tensor(T: TensorK2, angle: float) -> TensorK2:
    """Rotate by the planar rotation R(angle): the rotated tensor satisfies
    <T', w^(x)k> = <T, (R^t w)^(x)k>, computed by substituting R^t w into the
    homogeneous form and re-reading coefficients by multiplicity."""
    k = T.k
    c, s = math.cos(angle), math.sin(angle)
    total = np.zeros(k + 1)
    for j in range(k + 1):
        # (c*x + s*y)^(k-j) and (-s*x + c*y)^j, coefficients over y-degree
        pa = np.array([math.comb(k - j, i) * c ** (k - j - i) * s**i for i in range(k - j + 1)])
        pb = np.array([math.comb(j, i) * (-s) ** (j - i) * c**i for i in range(j + 1)])
        total += math.comb(k, j) * T.comps[j] * np.convolve(pa, pb)
    return TensorK2(k, tuple(total[m] / math.comb(k, m) for m in range(k + 1)))


@lru_cache(maxsize=64)
def _axis_matrix(n: int, k: int):
    """CSR matrix of the k-th derivative along one axis of the unit square
    (identity for k = 0)."""
    if k == 0:
        return sp.identity(n, format="csr")
    return derivative_matrix(Grid1D(0.0, 1.0, n), k)


def tensor_components(u: GridFunction2D, k: int) -> list:
    """All k-th partial fields by multiplicity: comps[j] = d^k u / dx^(k-j) dy^j."""
    if not 1 <= k <= K_MAX:
        raise ConfigurationError(f"derivative order must lie in [1, {K_MAX}], got {k}")
    n = u.grid.n
    U = u.values
    comps = []
    for j in range(k + 1):
        ax = _axis_matrix(n, k - j)
        ay = _axis_matrix(n, j)
        comps.append(np.asarray((ay @ (ax @ U).T).T))
    return comps


def tensor_Dk_at(u: GridFunction2D, node: tuple, k: int) -> TensorK2:
    """The symmetric tensor of k-th partials at one node (ix, iy); boundary
    nodes use the same one-sided stencils as the full-field evaluation."""
    ix, iy = int(node[0]), int(node[1])
    n = u.grid.n
    if not (0 <= ix < n and 0 <= iy < n):
        raise ConfigurationError(f"node {node} outside grid with n={n}")
    comps = []
    for j in range(k + 1):
        rx = _axis_matrix(n, k - j)[ix].toarray().ravel()
        ry = _axis_matrix(n, j)[iy].toarray().ravel()
        comps.append(float(rx @ u.values @ ry))
    return TensorK2(k, tuple(comps))


# ---------------------------------------------------------------------------
# energy and recovery
# ---------------------------------------------------------------------------


def energy_F_eps_2d(u: GridFunction2D, eps: float, k: int, well: DoubleWell) -> float:
    """Tensor-product trapezoid quadrature of (1/eps) W(u) + eps^(2k-1) ||D^k u||^2."""
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    comps = tensor_components(u, k)
    norm2 = _opnorm_field(comps, k) ** 2
    integrand = well.value(u.values) / eps + eps ** (2 * k - 1) * norm2.reshape(u.values.shape)
    w = trapezoid_weights(u.grid.axis)
    return float(w @ integrand @ w)


def build_recovery_2d(
    shape,
    eps: float,
    profile: ProfileResult | GridFunction1D,
    grid: Grid2D,
    *,
    k: int | None = None,
) -> GridFunction2D:
    """Compose the profile with the signed distance: u = v(-d/eps) inside the
    tube |d| <= eps*T, constants +-1 outside (+1 on the side where d < 0).
    Raises GapConditionError when the tube width reaches the shape's reach."""
    if isinstance(profile, ProfileResult):
        k = profile.problem.k
        pgrid = profile.minimizer.grid
        pvalues = profile.minimizer.values
    elif isinstance(profile, GridFunction1D):
        if k is None:
            raise ConfigurationError("k is required when profile is a bare GridFunction1D")
        pgrid = profile.grid
        pvalues = profile.values
    else:
        raise ConfigurationError(f"profile must be a ProfileResult or GridFunction1D, got {type(profile).__name__}")
    if abs(pgrid.a + pgrid.b) > 1e-12 * max(1.0, abs(pgrid.b)):
        raise ConfigurationError(
            f"profile must live on a symmetric interval [-T, T], got [{pgrid.a}, {pgrid.b}]"
        )
    T = pgrid.b
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    if eps * T >= shape.reach:
        raise GapConditionError(
            f"tube half-width eps*T = {eps * T:g} must be < the interface reach {shape.reach:g}"
        )

    X, Y = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
    d = signed_distance(shape, np.stack([X, Y], axis=-1))
    s = -d / eps
    values = np.where(s > 0.0, 1.0, -1.0)
    mask = np.abs(s) <= T
    spline = _profile_spline(pvalues, pgrid.nodes, k)
    values[mask] = spline(s[mask])
    return GridFunction2D(grid, values)


# ---------------------------------------------------------------------------
# field serialization
# ---------------------------------------------------------------------------

_HEADER = np.dtype([("n", "<i8"), ("h", "<f8"), ("eps", "<f8"), ("k", "<i8")])


def write_field_binary(path, u: GridFunction2D, eps: float, k: int) -> None:
    """Flat binary layout: header (n: int64, h: f64, eps: f64, k: int64
    little-endian) followed by row-major float64 nodal values."""
    header = np.zeros(1, dtype=_HEADER)
    header["n"], header["h"], header["eps"], header["k"] = u.grid.n, u.grid.h, eps, k
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def read_field_binary(path):
    """Inverse of write_field_binary: returns (GridFunction2D, eps, k)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.itemsize:
        raise ConfigurationError(f"{path}: truncated field file")
    header = np.frombuffer(raw[: _HEADER.itemsize], dtype=_HEADER)[0]
    n, h, eps, k = int(header["n"]), float(header["h"]), float(header["eps"]), int(header["k"])
    grid = Grid2D(n)
    if abs(h - grid.h) > 1e-12 * grid.h:
        raise ConfigurationError(f"{path}: header spacing {h} inconsistent with n={n} on the unit square")
    values = np.frombuffer(raw[_HEADER.itemsize :], dtype="<f8")
    if values.size != n * n:
        raise ConfigurationError(f"{path}: expected {n * n} values, found {values.size}")
    return GridFunction2D(grid, values.reshape(n, n).copy()), eps, k


def write_field_csv(path, u: GridFunction2D, max_n: int = 512) -> None:
    """x,y,value rows for small grids (n <= max_n; use the binary layout above that)."""
    if u.grid.n > max_n:
        raise ConfigurationError(f"CSV export limited to n <= {max_n} (got n={u.grid.n}); use write_field_binary")
    nodes = [float(x) for x in u.grid.nodes]
    with open(path, "w") as fh:
        fh.write("x,y,u\n")
        for ix in range(u.grid.n):
            for iy in range(u.grid.n):
                fh.write(f"{nodes[ix]!r},{nodes[iy]!r},{float(u.values[ix, iy])!r}\n")
