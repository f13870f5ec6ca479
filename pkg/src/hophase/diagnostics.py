"""Well-set diagnostics and interpolation-inequality probes.

Well sets classify where a field u sits near a well at scale eta:

    A_plus / A_minus:  |u -+ 1| <= eta,
    A_eta_N:           additionally |u^(l)| <= 1/(N eps^l) for l = 1..k-1,

with nonstrict comparisons throughout and half-open node-cell interval
assembly. The derivative thresholds mirror the scaling of a transition of
width eps: inside a genuine plateau every rescaled derivative is small, while
inside a transition layer the l-th derivative is of order eps^-l, so A_eta_N
isolates plateaus. Maximal gaps between A_eta_N runs of opposite wells are the
effective transitions (same-well gaps are oscillations); project_BV collapses
u onto the piecewise +-1 function with one jump per effective transition.

Interpolation probes estimate the best constant in the Gagliardo-Nirenberg
style inequality on an interval I (theta = (k - ell)/k):

    ||v^(ell)|| <= r_k ( ||v||^theta ||v^(k)||^(1-theta) + |I|^-ell ||v|| )

and in its eps-split quadratic consequence (Young's inequality with
p = 1/theta, q = 1/(1-theta)):

    eps^(2*ell-1) ||v^(ell)||^2
        <= R_k ( (1/eps)||v||^2 + eps^(2k-1)||v^(k)||^2
                 + eps^(2*ell-1)|I|^(-2*ell) ||v||^2 ),

by maximizing the corresponding ratios over a seeded ensemble of random
trigonometric polynomials plus adversarial members (near-polynomials of degree
< k, boundary layers, near-constants) that stress individual terms. The
reported maxima are empirical estimates r_hat, R_hat — lower bounds for the
true constants, never certificates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid1D, GridFunction1D, apply_derivative, trapezoid_weights
from .errors import ConfigurationError, DiagnosticError
from .recovery import JumpFunction, sample_jump_function

# ---------------------------------------------------------------------------
# well sets and transition counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WellPartition:
    """Well sets of one field as node labels and assembled intervals.

    labels_well / labels_refined hold +1, -1 (near the respective well) or 0
    per node; A_plus / A_minus / A_eta_N are maximal nonzero runs as half-open
    node cells clipped to the grid interval; transitions are ((t0, t1), kind)
    gaps between A_eta_N runs, kind "effective" (opposite wells) or
    "oscillation" (same well).
    """

    grid: Grid1D
    eta: float
    N: int
    eps: float
    labels_well: np.ndarray
    labels_refined: np.ndarray
    A_plus: tuple
    A_minus: tuple
    A_eta_N: tuple
    transitions: tuple

    @property
    def effective_transitions(self) -> tuple:
        return tuple(tr for tr in self.transitions if tr[1] == "effective")


def _runs(labels: np.ndarray):
    """Maximal constant nonzero runs as (i0, i1, label), i1 inclusive."""
    runs = []
    start = None
    for i, lab in enumerate(labels):
        if lab == 0 or (start is not None and lab != labels[start]):
            if start is not None:
                runs.append((start, i - 1, int(labels[start])))
            start = i if lab != 0 else None
        elif start is None:
            start = i
    if start is not None:
        runs.append((start, len(labels) - 1, int(labels[start])))
    return runs


def _intervals(runs, grid: Grid1D, label: int | None = None) -> tuple:
    out = []
    for i0, i1, lab in runs:
        if label is None or lab == label:
            out.append((float(grid.nodes[i0]), float(min(grid.nodes[i1] + grid.h, grid.b))))
    return tuple(out)


def well_sets(u: GridFunction1D, eps: float, eta: float, N: int, k: int) -> WellPartition:
    """Classify nodes into well sets at tolerance eta and refined derivative
    thresholds 1/(N eps^l), l = 1..k-1, and assemble intervals and transitions."""
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    if not 0 < eta < 1:
        raise ConfigurationError(f"eta must lie in (0, 1) for disjoint well sets, got {eta}")
    if N < 1:
        raise ConfigurationError(f"N must be >= 1, got {N}")
    v = u.values
    labels_well = np.zeros(u.grid.n, dtype=int)
    labels_well[np.abs(v - 1.0) <= eta] = 1
    labels_well[np.abs(v + 1.0) <= eta] = -1

    small = np.ones(u.grid.n, dtype=bool)
    for ell in range(1, k):
        dl = apply_derivative(v, u.grid.h, ell)
        small &= np.abs(dl) <= 1.0 / (N * eps**ell)
    labels_refined = np.where(small, labels_well, 0)

    runs_w = _runs(labels_well)
    runs_r = _runs(labels_refined)
    transitions = []
    for (_, i1, lab1), (j0, _, lab2) in zip(runs_r, runs_r[1:]):
        kind = "effective" if lab1 != lab2 else "oscillation"
        transitions.append(((float(u.grid.nodes[i1]), float(u.grid.nodes[j0])), kind))
    return WellPartition(
        grid=u.grid,
        eta=eta,
        N=N,
        eps=eps,
        labels_well=labels_well,
        labels_refined=labels_refined,
        A_plus=_intervals(runs_w, u.grid, 1),
        A_minus=_intervals(runs_w, u.grid, -1),
        A_eta_N=_intervals(runs_r, u.grid),
        transitions=tuple(transitions),
    )


def count_transitions(u: GridFunction1D, eps: float, eta: float, N: int, k: int) -> int:
    """Number of effective transitions (gaps between A_eta_N runs of opposite wells)."""
    return len(well_sets(u, eps, eta, N, k).effective_transitions)


@dataclass(frozen=True)
class BVProjection:
    """Piecewise +-1 shadow of a field and its L1 distance to it."""

    jump: JumpFunction
    l1_distance: float
    partition: WellPartition


def project_BV(u: GridFunction1D, eps: float, eta: float, N: int, k: int) -> BVProjection:
    """Collapse u onto a piecewise +-1 function with one jump per effective
    transition, placed at the transition midpoint. Raises DiagnosticError when
    A_eta_N is empty (nothing to project onto)."""
    part = well_sets(u, eps, eta, N, k)
    runs = _runs(part.labels_refined)
    if not runs:
        raise DiagnosticError(
            f"refined well set (eta={eta}, N={N}) is empty: no nodes within eta of a well "
            "with small rescaled derivatives; cannot project"
        )
    first_value = runs[0][2]
    jumps = tuple(0.5 * (t0 + t1) for (t0, t1), kind in part.transitions if kind == "effective")
    jf = JumpFunction(interval=(u.grid.a, u.grid.b), jumps=jumps, first_value=first_value)
    diff = np.abs(u.values - sample_jump_function(jf, u.grid).values)
    l1 = float(np.dot(trapezoid_weights(u.grid), diff))
    return BVProjection(jump=jf, l1_distance=l1, partition=part)


# ---------------------------------------------------------------------------
# interpolation probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleSpec:
    """Random trigonometric ensemble: frequencies 0..max_freq, coefficient law
    'gaussian' | 'uniform' | 'decay' (gaussian damped by 1/(1+m)^2)."""

    max_freq: int = 12
    law: str = "gaussian"
    amplitude: float = 1.0
    include_adversarial: bool = True

    def __post_init__(self) -> None:
        if self.max_freq < 1:
            raise ConfigurationError(f"max_freq must be >= 1, got {self.max_freq}")
        if self.law not in ("gaussian", "uniform", "decay"):
            raise ConfigurationError(f"unknown coefficient law {self.law!r}")


def _sample_trig(spec: EnsembleSpec, rng: np.random.Generator, tau: np.ndarray) -> np.ndarray:
    m = np.arange(spec.max_freq + 1)
    if spec.law == "gaussian":
        a, b = rng.standard_normal(m.size), rng.standard_normal(m.size)
    elif spec.law == "uniform":
        a, b = rng.uniform(-1, 1, m.size), rng.uniform(-1, 1, m.size)
    else:
        damp = 1.0 / (1.0 + m) ** 2
        a, b = rng.standard_normal(m.size) * damp, rng.standard_normal(m.size) * damp
    phase = 2.0 * np.pi * np.outer(m, tau)
    return spec.amplitude * (a @ np.cos(phase) + b @ np.sin(phase))


def _adversarial_members(tau: np.ndarray, k: int) -> list:
    """Fixed members that stress individual terms of the inequality: a
    near-polynomial of degree < k (tiny k-th derivative), boundary layers
    (large derivatives localized at the ends), and a near-constant."""
    return [
        ("near-poly", tau ** max(k - 1, 1) + 1e-3 * np.sin(40.0 * np.pi * tau)),
        ("layer-left", np.exp(-tau / 0.02)),
        ("layer-right", np.exp(-(1.0 - tau) / 0.02)),
        ("near-const", 1.0 + 1e-3 * np.sin(30.0 * np.pi * tau)),
    ]


def _l2(values: np.ndarray, grid: Grid1D) -> float:
    return float(np.sqrt(np.dot(trapezoid_weights(grid), values * values)))


def interp_ratio(v: GridFunction1D, k: int, ell: int) -> float:
    """||v^(ell)|| / ( ||v||^theta ||v^(k)||^(1-theta) + |I|^-ell ||v|| ),
    theta = (k - ell)/k, discrete L2 norms. Zero fields give ratio 0."""
    if not 1 <= ell < k:
        raise ConfigurationError(f"need 1 <= ell < k, got ell={ell}, k={k}")
    g = v.grid
    theta = (k - ell) / k
    nv = _l2(v.values, g)
    if nv == 0.0:
        return 0.0
    nl = _l2(apply_derivative(v.values, g.h, ell), g)
    nk = _l2(apply_derivative(v.values, g.h, k), g)
    length = g.b - g.a
    return nl / (nv**theta * nk ** (1.0 - theta) + length ** (-ell) * nv)


def split_ratio(v: GridFunction1D, eps: float, k: int, ell: int) -> float:
    """eps^(2*ell-1)||v^(ell)||^2 over the three-term eps-split right-hand side."""
    if not 1 <= ell < k:
        raise ConfigurationError(f"need 1 <= ell < k, got ell={ell}, k={k}")
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    g = v.grid
    nv2 = _l2(v.values, g) ** 2
    if nv2 == 0.0:
        return 0.0
    nl2 = _l2(apply_derivative(v.values, g.h, ell), g) ** 2
    nk2 = _l2(apply_derivative(v.values, g.h, k), g) ** 2
    length = g.b - g.a
    den = nv2 / eps + eps ** (2 * k - 1) * nk2 + eps ** (2 * ell - 1) * length ** (-2 * ell) * nv2
    return eps ** (2 * ell - 1) * nl2 / den


HISTOGRAM_EDGES = np.linspace(0.0, 3.0, 31)


@dataclass(frozen=True)
class ProbeReport:
    """Max ratio over the ensemble, who attained it, and a fixed-bin histogram."""

    kind: str
    k: int
    ell: int
    interval: tuple
    samples: int
    seed: int
    max_ratio: float
    argmax_label: str
    histogram: tuple
    edges: tuple

    def json_payload(self) -> dict:
        return {
            "kind": self.kind,
            "k": self.k,
            "ell": self.ell,
            "interval": list(self.interval),
            "samples": self.samples,
            "seed": self.seed,
            "max_ratio": self.max_ratio,
            "argmax": self.argmax_label,
            "histogram": list(self.histogram),
            "bin_edges": list(self.edges),
        }


def _ensemble(spec: EnsembleSpec, grid: Grid1D, samples: int, seed: int, k: int):
    """Yield (label, field) pairs; sample i uses seed sequence (seed, i)."""
    tau = (grid.nodes - grid.a) / (grid.b - grid.a)
    for i in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        yield f"sample-{i}", GridFunction1D(grid, _sample_trig(spec, rng, tau))
    if spec.include_adversarial:
        for label, vals in _adversarial_members(tau, k):
            yield label, GridFunction1D(grid, vals)


def _report(kind, k, ell, grid, samples, seed, ratios, labels) -> ProbeReport:
    ratios = np.asarray(ratios)
    hist, _ = np.histogram(
        np.clip(ratios, HISTOGRAM_EDGES[0], HISTOGRAM_EDGES[-1]), bins=HISTOGRAM_EDGES
    )
    best = int(np.argmax(ratios))
    return ProbeReport(
        kind=kind,
        k=k,
        ell=ell,
        interval=(grid.a, grid.b),
        samples=samples,
        seed=seed,
        max_ratio=float(ratios[best]),
        argmax_label=labels[best],
        histogram=tuple(int(c) for c in hist),
        edges=tuple(float(e) for e in HISTOGRAM_EDGES),
    )


def interp_probe(
    ensemble: EnsembleSpec | None,
    k: int,
    ell: int,
    interval: tuple = (0.0, 1.0),
    samples: int = 200,
    *,
    n: int = 4097,
    seed: int = 0,
) -> ProbeReport:
    """Maximize interp_ratio over the seeded ensemble (per-sample seeds derive
    from (seed, index), so reports are reproducible). ensemble=None uses the
    default EnsembleSpec."""
    spec = ensemble or EnsembleSpec()
    grid = Grid1D(float(interval[0]), float(interval[1]), n)
    ratios, labels = [], []
    for label, v in _ensemble(spec, grid, samples, seed, k):
        ratios.append(interp_ratio(v, k, ell))
        labels.append(label)
    return _report("interp", k, ell, grid, samples, seed, ratios, labels)


def interp_split_probe(
    ensemble: EnsembleSpec | None,
    k: int,
    ell: int,
    eps_list,
    interval: tuple = (0.0, 1.0),
    samples: int = 200,
    *,
    n: int = 4097,
    seed: int = 0,
) -> ProbeReport:
    """Maximize split_ratio over the ensemble and an eps grid."""
    spec = ensemble or EnsembleSpec()
    eps_list = [float(e) for e in eps_list]
    if not eps_list or min(eps_list) <= 0:
        raise ConfigurationError("eps_list must be nonempty and positive")
    grid = Grid1D(float(interval[0]), float(interval[1]), n)
    ratios, labels = [], []
    for label, v in _ensemble(spec, grid, samples, seed, k):
        for eps in eps_list:
            ratios.append(split_ratio(v, eps, k, ell))
            labels.append(f"{label} eps={eps:g}")
    return _report("interp-split", k, ell, grid, samples, seed, ratios, labels)
