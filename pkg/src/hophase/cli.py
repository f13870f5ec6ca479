"""Batch front-end: profile tables, recovery sweeps, probes, and 2-D runs.

Subcommands mirror the library drivers one-to-one:

    mk-table     clamped minima over a (T, n) grid -> m_k estimate
    gamma-1d     recovery-sequence energy sweep over decreasing eps
    gamma-2d     one 2-D recovery field (line or circle) and its energy
    probe-interp empirical interpolation-inequality constants
    diagnose     well sets / transition count / BV projection of a recovery field
    hermite      one Hermite bridge and its exact energy theta

Every parameter has a default matching the shipped verification runs and can
be overridden from a TOML or JSON config (--config); unknown keys are
rejected before any computation starts. All randomness flows from --seed,
which is recorded in every report, and outputs carry no timestamps, so
repeated runs with the same config and seed are byte-identical.

Exit codes: 0 success, 1 validation error, 2 numerical invariant violation
(including m_k monotonicity violations beyond tolerance), 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .core import (
    DoubleWell,
    K_MAX,
    piecewise_quadratic_well,
    quartic_well,
    tabulated_well_from_csv,
)
from .diagnostics import EnsembleSpec, interp_probe, interp_split_probe, project_BV, well_sets
from .errors import ConfigurationError, DiagnosticError, InvariantViolation
from .multidim import (
    CircleInterface,
    Grid2D,
    LineInterface,
    build_recovery_2d,
    energy_F_eps_2d,
    interface_length,
    write_field_binary,
)
from .profile import ProfileProblem, estimate_mk, hermite_extension, solve_clamped
from .recovery import JumpFunction, build_recovery_1d, gamma_sweep

# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_DEFAULTS = {
    "mk-table": {
        "k": [1],
        "T": [10.0],
        "n": [4001],
        "well": "quartic",
        "tol": 1e-7,
        "max_iter": 20000,
        "checkpoint": "",
    },
    "gamma-1d": {
        "k": 1,
        "jumps": [0.5],
        "first_value": -1,
        "interval": [0.0, 1.0],
        "eps": [0.03125, 0.015625, 0.0078125],
        "T": 5.0,
        "profile_n": 2001,
        "grid_density": 16,
        "well": "quartic",
        "tol": 1e-7,
        "max_iter": 20000,
    },
    "gamma-2d": {
        "k": 1,
        "shape": "circle",
        "center": [0.5, 0.5],
        "radius": 0.25,
        "point": [0.5, 0.5],
        "normal": [0.0, 1.0],
        "eps": 0.015625,
        "n": 513,
        "T": 5.0,
        "profile_n": 2001,
        "well": "quartic",
        "tol": 1e-7,
        "max_iter": 20000,
        "write_field": False,
    },
    "probe-interp": {
        "k": 2,
        "ell": 1,
        "samples": 200,
        "interval": [0.0, 1.0],
        "n": 4097,
        "max_freq": 12,
        "law": "gaussian",
        "amplitude": 1.0,
        "adversarial": True,
        "split": True,
        "eps": [0.1, 0.01, 0.001],
    },
    "diagnose": {
        "k": 1,
        "jumps": [0.3, 0.6],
        "first_value": -1,
        "interval": [0.0, 1.0],
        "eps": 0.001,
        "eta": 0.2,
        "N": 2,
        "T": 5.0,
        "profile_n": 2001,
        "grid_density": 16,
        "well": "quartic",
        "tol": 1e-7,
        "max_iter": 20000,
    },
    "hermite": {
        "k": 2,
        "jet": [1.0, 0.0],
        "length": 1.0,
    },
}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    if path.endswith(".toml"):
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    if path.endswith(".json"):
        with open(path) as fh:
            return json.load(fh)
    raise ConfigurationError(f"config must be a .toml or .json file, got {path!r}")


def _merge_config(command: str, overrides: dict) -> dict:
    defaults = _DEFAULTS[command]
    unknown = sorted(set(overrides) - set(defaults))
    if unknown:
        raise ConfigurationError(
            f"unknown config keys for {command}: {', '.join(unknown)} "
            f"(valid: {', '.join(sorted(defaults))})"
        )
    return {**defaults, **overrides}


def _well_from_spec(spec: str) -> DoubleWell:
    if spec == "quartic":
        return quartic_well()
    if spec == "piecewise-quadratic":
        return piecewise_quadratic_well()
    if spec.endswith(".csv"):
        return tabulated_well_from_csv(spec)
    raise ConfigurationError(
        f"well must be 'quartic', 'piecewise-quadratic', or a .csv path, got {spec!r}"
    )


def _check_k(k: int) -> int:
    k = int(k)
    if not 1 <= k <= K_MAX:
        raise ConfigurationError(f"k must lie in 1..{K_MAX}, got {k}")
    return k


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _write_text(args, name: str, text: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, name)
    with open(path, "w") as fh:
        fh.write(text)
    print(f"wrote {path}")
    return path


def _emit(args, stem: str, payload: dict, csv_text: str | None) -> None:
    if args.format == "csv" and csv_text is not None:
        _write_text(args, f"{stem}.csv", csv_text)
    else:
        _write_text(args, f"{stem}.json", json.dumps(payload, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_mk_table(cfg: dict, args) -> int:
    well = _well_from_spec(cfg["well"])
    k_list = [_check_k(k) for k in cfg["k"]]
    if not k_list:
        raise ConfigurationError("k list must be nonempty")
    tables = []
    for k in k_list:
        checkpoint = cfg["checkpoint"] or None
        if checkpoint and len(k_list) > 1:
            checkpoint = f"{checkpoint}.k{k}"
        tables.append(
            estimate_mk(
                k,
                well,
                cfg["T"],
                cfg["n"],
                tol=cfg["tol"],
                max_iter=cfg["max_iter"],
                jobs=args.jobs,
                checkpoint=checkpoint,
            )
        )
    payload = {
        "seed": args.seed,
        "well": cfg["well"],
        "tables": [t.json_payload() for t in tables],
    }
    csv_lines = ["k,T,n,value,grad_norm,converged,iterations"]
    for t in tables:
        csv_lines.extend(t.csv_text().splitlines()[1:])
    _emit(args, "mk_table", payload, "\n".join(csv_lines) + "\n")
    violations = [v for t in tables for v in t.violations]
    for t in tables:
        print(f"m_{t.k} estimate {t.estimate!r} (uncertainty {t.uncertainty!r})")
    if violations:
        for v in violations:
            print(f"monotonicity violation: {v}", file=sys.stderr)
        return 2
    return 0


def _target_from(cfg: dict) -> JumpFunction:
    interval = tuple(float(x) for x in cfg["interval"])
    if len(interval) != 2:
        raise ConfigurationError(f"interval must have two endpoints, got {cfg['interval']!r}")
    return JumpFunction(
        interval=interval,
        jumps=tuple(float(x) for x in cfg["jumps"]),
        first_value=int(cfg["first_value"]),
    )


def _solve_profile(cfg: dict, well: DoubleWell):
    pb = ProfileProblem(
        k=_check_k(cfg["k"]),
        T=float(cfg["T"]),
        n=int(cfg["profile_n"]),
        well=well,
        tol=cfg["tol"],
        max_iter=cfg["max_iter"],
    )
    return solve_clamped(pb)


def cmd_gamma_1d(cfg: dict, args) -> int:
    well = _well_from_spec(cfg["well"])
    target = _target_from(cfg)
    eps_list = [float(e) for e in cfg["eps"]]
    T = float(cfg["T"])
    # validation precedes the (expensive) profile solve
    if not eps_list or min(eps_list) <= 0:
        raise ConfigurationError("eps list must be nonempty and positive")
    if target.count:
        gap = target.min_gap()
        bad = [e for e in eps_list if e * T >= 0.5 * gap]
        if bad:
            raise ConfigurationError(
                f"eps values {bad} violate the window condition eps*T < min_gap/2 = {gap / 2:g}"
            )
    profile = _solve_profile(cfg, well)
    sweep = gamma_sweep(target, well, eps_list, profile, grid_density=int(cfg["grid_density"]))
    payload = {"seed": args.seed, "well": cfg["well"], **sweep.json_payload()}
    _emit(args, "gamma1d", payload, sweep.csv_text())
    _write_text(args, "gamma1d.dat", sweep.gnuplot_text())
    final_eps, _, final_ratio = sweep.rows[-1]
    print(f"final ratio {final_ratio!r} at eps={final_eps!r}")
    return 0


def _shape_from(cfg: dict):
    if cfg["shape"] == "circle":
        return CircleInterface(center=tuple(cfg["center"]), radius=float(cfg["radius"]))
    if cfg["shape"] == "line":
        return LineInterface(point=tuple(cfg["point"]), normal=tuple(cfg["normal"]))
    raise ConfigurationError(f"shape must be 'circle' or 'line', got {cfg['shape']!r}")


def cmd_gamma_2d(cfg: dict, args) -> int:
    well = _well_from_spec(cfg["well"])
    shape = _shape_from(cfg)
    eps = float(cfg["eps"])
    grid = Grid2D(int(cfg["n"]))
    k = _check_k(cfg["k"])
    T = float(cfg["T"])
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    if grid.h > eps / 8.0:
        raise ConfigurationError(
            f"grid spacing h={grid.h:g} must be <= eps/8 = {eps / 8:g} to resolve the tube"
        )
    if eps * T >= shape.reach:
        raise ConfigurationError(
            f"tube half-width eps*T = {eps * T:g} must be < the interface reach {shape.reach:g}"
        )
    profile = _solve_profile(cfg, well)
    u = build_recovery_2d(shape, eps, profile, grid)
    energy = energy_F_eps_2d(u, eps, k, well)
    length = interface_length(shape)
    ratio = energy / (profile.value * length)
    shape_desc = (
        {"shape": "circle", "center": list(shape.center), "radius": shape.radius}
        if isinstance(shape, CircleInterface)
        else {"shape": "line", "point": list(shape.point), "normal": list(shape.normal)}
    )
    payload = {
        "seed": args.seed,
        "well": cfg["well"],
        "k": k,
        "eps": eps,
        "n": grid.n,
        **shape_desc,
        "energy": energy,
        "mk": profile.value,
        "interface_length": length,
        "ratio": ratio,
    }
    csv_text = (
        "k,eps,n,shape,energy,mk,interface_length,ratio\n"
        f"{k},{eps!r},{grid.n},{cfg['shape']},{energy!r},{profile.value!r},{length!r},{ratio!r}\n"
    )
    _emit(args, "gamma2d", payload, csv_text)
    if cfg["write_field"]:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "gamma2d_field.bin")
        write_field_binary(path, u, eps, k)
        print(f"wrote {path}")
    print(f"energy {energy!r}, target {profile.value * length!r}, ratio {ratio!r}")
    return 0


def cmd_probe_interp(cfg: dict, args) -> int:
    k = _check_k(cfg["k"])
    ell = int(cfg["ell"])
    spec = EnsembleSpec(
        max_freq=int(cfg["max_freq"]),
        law=cfg["law"],
        amplitude=float(cfg["amplitude"]),
        include_adversarial=bool(cfg["adversarial"]),
    )
    interval = tuple(float(x) for x in cfg["interval"])
    report = interp_probe(
        spec, k, ell, interval, int(cfg["samples"]), n=int(cfg["n"]), seed=args.seed
    )
    payload = {"seed": args.seed, "interp": report.json_payload()}
    reports = [report]
    if cfg["split"]:
        split = interp_split_probe(
            spec, k, ell, cfg["eps"], interval, int(cfg["samples"]), n=int(cfg["n"]), seed=args.seed
        )
        payload["interp_split"] = split.json_payload()
        reports.append(split)
    csv_lines = ["kind,k,ell,samples,seed,max_ratio,argmax"]
    for r in reports:
        csv_lines.append(f"{r.kind},{r.k},{r.ell},{r.samples},{r.seed},{r.max_ratio!r},{r.argmax_label}")
    _emit(args, "probe_interp", payload, "\n".join(csv_lines) + "\n")
    for r in reports:
        print(f"{r.kind}: max ratio {r.max_ratio!r} attained by {r.argmax_label}")
    return 0


def cmd_diagnose(cfg: dict, args) -> int:
    well = _well_from_spec(cfg["well"])
    target = _target_from(cfg)
    eps = float(cfg["eps"])
    eta = float(cfg["eta"])
    N = int(cfg["N"])
    k = _check_k(cfg["k"])
    profile = _solve_profile(cfg, well)
    rec = build_recovery_1d(target, eps, profile, grid_density=int(cfg["grid_density"]))
    part = well_sets(rec.u, eps, eta, N, k)
    proj = project_BV(rec.u, eps, eta, N, k)
    true_jumps = list(target.jumps)
    est_jumps = list(proj.jump.jumps)
    max_err = (
        max(abs(a - b) for a, b in zip(est_jumps, true_jumps))
        if len(est_jumps) == len(true_jumps) and est_jumps
        else None
    )
    payload = {
        "seed": args.seed,
        "well": cfg["well"],
        "k": k,
        "eps": eps,
        "eta": eta,
        "N": N,
        "true_jumps": true_jumps,
        "transition_count": len(part.effective_transitions),
        "transitions": [{"t0": t0, "t1": t1, "kind": kind} for (t0, t1), kind in part.transitions],
        "estimated_jumps": est_jumps,
        "max_jump_error": max_err,
        "l1_distance": proj.l1_distance,
    }
    csv_lines = ["t0,t1,kind"]
    for (t0, t1), kind in part.transitions:
        csv_lines.append(f"{t0!r},{t1!r},{kind}")
    _emit(args, "diagnose", payload, "\n".join(csv_lines) + "\n")
    print(
        f"{len(part.effective_transitions)} effective transitions "
        f"(target has {target.count} jumps), L1 distance {proj.l1_distance!r}"
    )
    return 0


def cmd_hermite(cfg: dict, args) -> int:
    bridge = hermite_extension(_check_k(cfg["k"]), cfg["jet"], float(cfg["length"]))
    payload = {
        "seed": args.seed,
        "k": bridge.k,
        "jet": [float(z) for z in cfg["jet"]],
        "length": bridge.length,
        "theta": bridge.theta,
        "coefficients": [float(c) for c in bridge.coeffs],
    }
    csv_text = (
        "k,length,theta,coefficients\n"
        f"{bridge.k},{bridge.length!r},{bridge.theta!r},"
        + " ".join(repr(float(c)) for c in bridge.coeffs)
        + "\n"
    )
    _emit(args, "hermite", payload, csv_text)
    print(f"theta {bridge.theta!r}")
    return 0


_COMMANDS = {
    "mk-table": (cmd_mk_table, "tabulate clamped profile minima and estimate m_k"),
    "gamma-1d": (cmd_gamma_1d, "energy sweep of 1-D recovery fields over decreasing eps"),
    "gamma-2d": (cmd_gamma_2d, "energy of one 2-D recovery field (line or circle interface)"),
    "probe-interp": (cmd_probe_interp, "empirical interpolation-inequality constants"),
    "diagnose": (cmd_diagnose, "well sets, transition count, and BV projection"),
    "hermite": (cmd_hermite, "one Hermite bridge and its exact energy theta"),
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract reserves 2 for
    numerical invariant violations, so remap usage errors to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML or JSON parameter file")
    common.add_argument("--seed", type=_u64, default=0, help="master seed (default 0)")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory (default .)")
    common.add_argument(
        "--jobs",
        type=int,
        default=max(1, os.cpu_count() or 1),
        help="worker processes for sweeps (default: available parallelism)",
    )
    common.add_argument("--format", choices=("csv", "json"), default="json", help="report format")

    parser = _Parser(prog="hophase", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (func, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args.command, _load_config(args.config))
        return args.func(cfg, args)
    except (InvariantViolation, DiagnosticError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
