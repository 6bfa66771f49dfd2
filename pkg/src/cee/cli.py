"""Command-line front end.

Subcommands: interp, covext, mimo, three, shape, reduce, check. Results go
to ``--out`` as JSON (17 significant digits) plus CSV tables. Exit codes:
0 success, 2 infeasible data, 3 numerical failure, 4 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import apps
from .errors import CeeError, InfeasibleError, InputError, NumericalError
from .interp import (
    InterpolationProblem,
    NormalizationRecord,
    covariance_problem,
    denormalize_jets,
    load_problem,
    normalize,
    pick_test,
    problem_from_dict,
    problem_to_dict,
    validate,
)
from .matrix import (
    MatrixCeeParameters,
    MatrixCeeSolution,
    MatrixPrior,
    coeffs_to_state,
    matrix_diagnose,
    solve_matrix_cee,
)
from .poly import Polynomial
from .scalar import (
    CeeParameters,
    CeeSolution,
    SpectralPrior,
    covariance_uU,
    diagnose,
    lags_to_jet,
    positive_degree_estimate,
    solve_cee,
)

log = logging.getLogger(__name__)

RESIDUAL_KEYS = ("cee_residual", "reduced_residual", "interpolation_residual", "positivity_residual",
                 "spectral_identity_residual")


# ---------------------------------------------------------------- serialization


def _fmt(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x} cannot be serialized")
    return format(x, ".17g")


def _dump(obj, indent: int = 0) -> str:
    pad, inner = " " * indent, " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}{json.dumps(str(k))}: {_dump(v, indent + 2)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_dump(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _dump(v, indent + 2) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _dump(obj.tolist(), indent)
    if isinstance(obj, complex):
        return _dump({"re": obj.real, "im": obj.imag}, indent)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _dump(obj) + "\n"


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: list, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    atomic_write(path, buf.getvalue())
    return Path(path)


def _cplx(x):
    x = np.asarray(x)
    if np.iscomplexobj(x):
        if x.ndim == 0:
            return {"re": float(x.real), "im": float(x.imag)}
        return [_cplx(v) for v in x]
    return x.tolist()


def _uncplx(x):
    if isinstance(x, dict):
        return complex(x["re"], x["im"])
    if isinstance(x, list):
        return [_uncplx(v) for v in x]
    return x


# ---------------------------------------------------------------- solution <-> JSON


def _diag_json(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        out[k] = v.tolist() if isinstance(v, np.ndarray) else v
    return out


def solution_to_dict(sol) -> dict:
    rec = sol.record
    record = {"alpha": rec.alpha, "scale": rec.scale,
              "congruence": None if rec.congruence is None else rec.congruence.tolist()}
    path = None
    if sol.path is not None:
        path = {"steps": sol.path.steps, "rejected": sol.path.rejected,
                "lambdas": sol.path.lambdas.tolist(), "endpoint_residual": sol.path.residual_norm,
                "trace_csv": "pole_trajectory.csv"}
    if isinstance(sol, CeeSolution):
        return {
            "kind": "scalar_solution",
            "problem": problem_to_dict(sol.problem),
            "record": record,
            "prior": sol.prior.vec.tolist(),
            "u": sol.params.u.tolist(),
            "U": sol.params.U.tolist(),
            "params_source": sol.params.source,
            "P": sol.P.tolist(),
            "p": sol.p.tolist(),
            "a": sol.a.tail(sol.n).tolist(),
            "b": sol.b.tail(sol.n).tolist(),
            "rho": sol.rho,
            "original_rho": sol.original_rho if rec.alpha == 0.0 else None,
            "interpolant": {"num": sol.original_interpolant.num.coeffs.tolist(),
                            "den": sol.original_interpolant.den.coeffs.tolist()},
            "diagnostics": _diag_json(sol.diagnostics),
            "path": path,
        }
    out = {
        "kind": "matrix_solution",
        "problem": problem_to_dict(sol.problem),
        "record": record,
        "prior": sol.prior.coeffs.tolist(),
        "prior_scalar": None if sol.prior.scalar is None else sol.prior.scalar.vec.tolist(),
        "u": sol.params.u.tolist(),
        "U": sol.params.U.tolist(),
        "P": sol.P.tolist(),
        "p": sol.p.tolist(),
        "A": sol.A_coeffs[1:].tolist(),
        "B": sol.B_coeffs[1:].tolist(),
        "R": sol.R.tolist(),
        "diagnostics": _diag_json(sol.diagnostics),
        "path": path,
    }
    if rec.alpha == 0.0:
        A, R = sol.original_system()
        out["original"] = {"A": A[1:].tolist(), "R": R.tolist()}
    return out


def _record_from(d) -> NormalizationRecord:
    K = d.get("congruence")
    return NormalizationRecord(alpha=d["alpha"], scale=d["scale"], congruence=None if K is None else np.array(K))


def solution_from_dict(d: dict):
    """Rebuild a solution object from its JSON form (no re-solve)."""
    kind = d.get("kind")
    problem = problem_from_dict(d["problem"])
    rec = _record_from(d["record"])
    if kind == "scalar_solution":
        prior = SpectralPrior(np.array(d["prior"]))
        params = CeeParameters(np.array(d["u"], dtype=float), np.array(d["U"], dtype=float), d.get("params_source", "general"))
        return CeeSolution(P=np.array(d["P"]), p=np.array(d["p"]), a=Polynomial.monic(np.array(d["a"])),
                           b=Polynomial.monic(np.array(d["b"])), rho=float(d["rho"]), prior=prior, params=params,
                           problem=problem, record=rec)
    if kind == "matrix_solution":
        if d.get("prior_scalar") is not None:
            prior = MatrixPrior.from_scalar(SpectralPrior(np.array(d["prior_scalar"])), problem.ell)
        else:
            prior = MatrixPrior(np.array(d["prior"]))
        u, U = np.array(d["u"]), np.array(d["U"])
        params = MatrixCeeParameters(u=u, U=U, T=np.zeros(0), That=np.zeros(0), L=np.zeros(0))
        return MatrixCeeSolution(P=np.array(d["P"]), p=np.array(d["p"]), A=coeffs_to_state(np.array(d["A"])),
                                 B=coeffs_to_state(np.array(d["B"])), R=np.array(d["R"]), prior=prior,
                                 params=params, problem=problem, record=rec)
    raise InputError("not a solution file (missing 'kind')")


# ---------------------------------------------------------------- plot data


def _vdb(x):
    return 10.0 * np.log10(np.maximum(x, 1e-300))


def emit_plots(sol, grid: int, out: Path) -> list:
    """Write frequency-response, pole-trajectory and singular-value tables."""
    out = Path(out)
    theta = np.linspace(0.0, np.pi, grid)
    z = np.exp(1j * theta)
    paths = []
    if isinstance(sol, CeeSolution):
        v = sol.prior.poly(z) / sol.a(z)
        rows = zip(theta, _vdb(sol.spectral_density(theta)), np.angle(v))
        paths.append(write_csv(out / "frequency_response.csv", ["theta", "magnitude_db", "phase"], rows))
    else:
        filt = apps.filter_from_solution(sol)
        sv = np.array([np.linalg.svd(filt(zz), compute_uv=False) for zz in z])
        header = ["theta"] + [f"sv{i + 1}_db" for i in range(sv.shape[1])]
        paths.append(write_csv(out / "frequency_response.csv", header, np.column_stack([theta, _vdb(sv**2)])))
    lams, traj = sol.pole_trajectory()
    rows = [(lam, i, r.real, r.imag) for lam, rs in zip(lams, traj) for i, r in enumerate(rs)]
    paths.append(write_csv(out / "pole_trajectory.csv", ["lambda", "root_index", "re", "im"], rows))
    s = np.linalg.svd(sol.P, compute_uv=False) if sol.P.size else np.zeros(0)
    rows = [(i + 1, x, x / s[0] if s[0] > 0 else 0.0) for i, x in enumerate(s)]
    paths.append(write_csv(out / "singular_values.csv", ["index", "singular_value", "relative"], rows))
    return paths


# ---------------------------------------------------------------- config


@dataclass
class JobConfig:
    subcommand: str
    inputs: list
    prior: str | None
    rank_tol: float
    residual_tol: float
    out: Path
    seed: int
    grid_points: int | None

    def __post_init__(self):
        if not (self.rank_tol > 0 and self.residual_tol > 0):
            raise InputError("tolerances must be positive")
        if self.grid_points is not None and self.grid_points < 2:
            raise InputError("--grid-points must be at least 2")


def _parse_root(tok: str) -> complex:
    tok = tok.strip()
    if "@" in tok:
        r, th = tok.split("@")
        return complex(float(r) * np.exp(1j * float(th)))
    return complex(tok.replace("i", "j"))


def parse_prior(spec: str | None, n: int, ell: int | None = None):
    """``max-entropy``, ``coeffs:s1,...,sn``, ``zeros:z1,...`` (``r@theta`` allowed) or a JSON file."""
    if spec is None or spec == "max-entropy":
        pr = SpectralPrior.max_entropy(n)
    elif spec.startswith("coeffs:"):
        pr = SpectralPrior(np.array([float(x) for x in spec[7:].split(",")]))
    elif spec.startswith("zeros:"):
        pr = SpectralPrior.from_zeros([_parse_root(x) for x in spec[6:].split(",")])
    else:
        path = Path(spec)
        if not path.exists():
            raise InputError(f"unknown prior specification {spec!r}")
        d = json.loads(path.read_text())
        if "Sigma" in d:
            if ell is None:
                raise InputError("matrix prior given for scalar data")
            return MatrixPrior(np.array(d["Sigma"], dtype=float))
        if "sigma" in d:
            pr = SpectralPrior(np.array(d["sigma"], dtype=float))
        elif "zeros" in d:
            pr = SpectralPrior.from_zeros([_uncplx(z) if isinstance(z, dict) else _parse_root(str(z)) for z in d["zeros"]])
        else:
            raise InputError(f"{spec}: prior file needs 'sigma', 'zeros' or 'Sigma'")
    if pr.n != n:
        raise InputError(f"prior has degree {pr.n}, data require {n}")
    return pr if ell is None else MatrixPrior.from_scalar(pr, ell)


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InputError(f"{path}: no such file") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _check_residuals(diag: dict, tol: float) -> None:
    bad = {k: diag[k] for k in RESIDUAL_KEYS if k in diag and diag[k] > tol}
    if bad:
        raise NumericalError(f"residuals above --residual-tol {tol:g}: {bad}")


def _finish(sol, cfg: JobConfig, extra: dict | None = None) -> dict:
    d = solution_to_dict(sol)
    if extra:
        d.update(extra)
    atomic_write(cfg.out / "solution.json", dumps(d))
    emit_plots(sol, cfg.grid_points or 512, cfg.out)
    _check_residuals(sol.diagnostics, cfg.residual_tol)
    return d


# ---------------------------------------------------------------- subcommands


def cmd_interp(cfg: JobConfig) -> dict:
    problem = load_problem(cfg.inputs[0])
    if problem.is_matrix:
        raise InputError("matrix data: use the 'mimo' subcommand")
    prior = parse_prior(cfg.prior, problem.n)
    return _finish(solve_cee(problem, prior, rank_tol=cfg.rank_tol), cfg)


def _read_sequence(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".json":
        d = _read_json(path)
        if "c" in d:
            return np.array(d["c"], dtype=float)
        if "r" in d:
            return lags_to_jet(d["r"])
        raise InputError(f"{path}: expected key 'c' (normalized) or 'r' (raw lags)")
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=1)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    return lags_to_jet(data)


def cmd_covext(cfg: JobConfig) -> dict:
    c = _read_sequence(cfg.inputs[0])
    if abs(c[0] - 0.5) > 1e-12:
        raise InputError("normalized sequence must start with 1/2")
    n = len(c) - 1
    prior = parse_prior(cfg.prior, n)
    sol = solve_cee(covariance_problem(c), prior, rank_tol=cfg.rank_tol, params=covariance_uU(c))
    est = positive_degree_estimate(c, seed=cfg.seed)
    return _finish(sol, cfg, {"positive_degree_estimate": est})


def cmd_mimo(cfg: JobConfig) -> dict:
    d = _read_json(cfg.inputs[0])
    if "C" in d:
        problem = apps.covariance_data(np.array(d["C"], dtype=float))
    else:
        problem = problem_from_dict(d)
    if not problem.is_matrix:
        raise InputError("scalar data: use 'interp' or 'covext'")
    prior = parse_prior(cfg.prior, problem.n, problem.ell)
    return _finish(solve_matrix_cee(problem, prior, rank_tol=cfg.rank_tol), cfg)


def _load_bank(path) -> apps.FilterBank:
    d = _read_json(path)
    try:
        nodes = [complex(b.get("re", 0.0), b.get("im", 0.0)) for b in d["bank"]]
        mults = [int(b.get("multiplicity", 1)) for b in d["bank"]]
    except (KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"{path}: malformed bank ({exc})") from exc
    return apps.FilterBank(tuple(nodes), tuple(mults))


def cmd_three(cfg: JobConfig) -> dict:
    if len(cfg.inputs) != 2:
        raise InputError("three needs a time-series CSV and a bank JSON")
    try:
        y = np.loadtxt(cfg.inputs[0], delimiter=",", ndmin=1)
    except (OSError, ValueError) as exc:
        raise InputError(f"{cfg.inputs[0]}: {exc}") from exc
    bank = _load_bank(cfg.inputs[1])
    n = sum(bank.multiplicities) - 1
    ell = None if y.ndim == 1 else y.shape[1]
    prior = parse_prior(cfg.prior, n, ell)
    sol, table = apps.three_estimate(y, bank, prior, rank_tol=cfg.rank_tol)
    header = ["theta", "density"] if ell is None else ["theta"] + [f"sv{i + 1}" for i in range(ell)]
    write_csv(cfg.out / "spectrum.csv", header, table)
    return _finish(sol, cfg)


def load_plant(path) -> apps.PlantSpec:
    d = _read_json(path)
    try:
        num = Polynomial.from_roots([_uncplx(z) if isinstance(z, dict) else _parse_root(str(z)) for z in d["zeros"]])
        den = Polynomial.from_roots([_uncplx(z) if isinstance(z, dict) else _parse_root(str(z)) for z in d["poles"]])
        sz = [_uncplx(z) if isinstance(z, dict) else _parse_root(str(z)) for z in d["spectral_zeros"]]
        bands = [tuple(float(v) for v in b) for b in d.get("bands", [])]
        return apps.PlantSpec(num, den, float(d["gamma"]), sz, float(d.get("gain", 1.0)), bands)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: malformed plant ({exc})") from exc


def cmd_shape(cfg: JobConfig) -> dict:
    plant = load_plant(cfg.inputs[0])
    res = apps.sensitivity_shape(plant, cfg.grid_points or 2048)
    d = {
        "kind": "sensitivity_design",
        "S_num": res.S_num.coeffs[::-1].tolist(),
        "S_den": res.S_den.coeffs[::-1].tolist(),
        "C_num": res.C_num.coeffs[::-1].tolist(),
        "C_den": res.C_den.coeffs[::-1].tolist(),
        "coefficient_order": "descending powers of z",
        "report": res.report,
        "solution": solution_to_dict(res.solution),
    }
    atomic_write(cfg.out / "shape.json", dumps(d))
    tab = apps.frequency_table(res, cfg.grid_points or 2048)
    write_csv(cfg.out / "frequency_response.csv", ["theta", "magnitude_db", "phase"], tab)
    if not res.report["all_ok"]:
        log.warning("design does not meet all specifications: %s", res.report)
    return d


def cmd_reduce(cfg: JobConfig) -> dict:
    src = solution_from_dict(_read_json(cfg.inputs[0]))
    # reduce the data in their original coordinates so the comparison table keeps the data scale
    problem = src.problem if src.record.is_identity else denormalize_jets(src.problem, src.record)
    res = apps.model_reduce_pipeline(problem, src.prior, cfg.rank_tol, cfg.grid_points or 512)
    plan = res.plan
    d = {
        "kind": "reduction",
        "degree": plan.degree,
        "singular_values": plan.singular_values.tolist(),
        "removed_zeros": _cplx(np.asarray(plan.removed_zeros, dtype=complex)),
        "warnings": list(plan.warnings),
        "reduced": solution_to_dict(res.reduced),
    }
    atomic_write(cfg.out / "reduced.json", dumps(d))
    write_csv(cfg.out / "comparison.csv", ["theta", "full", "reduced"], res.table)
    return d


def cmd_check(cfg: JobConfig) -> dict:
    d = _read_json(cfg.inputs[0])
    if d.get("kind") in ("scalar_solution", "matrix_solution"):
        sol = solution_from_dict(d)
        tol = d["diagnostics"].get("rank_tol", cfg.rank_tol)
        diag = diagnose(sol, tol) if isinstance(sol, CeeSolution) else matrix_diagnose(sol, tol)
        diffs = {k: abs(diag[k] - d["diagnostics"][k]) for k in RESIDUAL_KEYS if k in diag and k in d["diagnostics"]}
        worst = max(diffs.values(), default=0.0)
        out = {"kind": "check", "reproduced": diffs, "max_difference": worst, "ok": worst <= 1e-12}
        print(dumps(out), end="")
        if worst > 1e-12:
            raise NumericalError(f"stored residuals not reproduced (max difference {worst:.3g})")
        return out
    if "c" in d or "r" in d:
        problem = covariance_problem(_read_sequence(cfg.inputs[0]))
    elif "C" in d:
        problem = apps.covariance_data(np.array(d["C"], dtype=float))
    else:
        problem = problem_from_dict(d)
    problem = validate(problem)
    pr = pick_test(problem if problem.is_normalized else normalize(problem)[0])
    out = {"kind": "check", "feasible": pr.feasible, "min_pick_eigenvalue": pr.min_eig, "n": problem.n}
    print(dumps(out), end="")
    if not pr.feasible:
        raise InfeasibleError(f"Pick matrix not positive definite (min eigenvalue {pr.min_eig:.3g})")
    return out


COMMANDS = {
    "interp": (cmd_interp, "general scalar interpolation problem (JSON)"),
    "covext": (cmd_covext, "rational covariance extension (JSON with 'c' or 'r', or CSV of raw lags)"),
    "mimo": (cmd_mimo, "matrix interpolation problem or covariance sequence (JSON)"),
    "three": (cmd_three, "THREE spectral estimate from a time series CSV and a bank JSON"),
    "shape": (cmd_shape, "sensitivity shaping from a plant JSON"),
    "reduce": (cmd_reduce, "rank-based model reduction of a stored solution"),
    "check": (cmd_check, "validate a problem (Pick test) or re-verify a stored solution"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cee", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("inputs", nargs="+")
        p.add_argument("--prior", default=None, help="max-entropy | coeffs:s1,..,sn | zeros:z1,.. | prior JSON")
        p.add_argument("--rank-tol", type=float, default=1e-2)
        p.add_argument("--residual-tol", type=float, default=1e-8)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--grid-points", type=int, default=None)
        p.add_argument("--out", type=Path, default=Path("."))
    return parser


def _configure_logging() -> None:
    """``CEE_LOG=debug`` (or info, warning, ...) turns on path-trace logging."""
    level = os.environ.get("CEE_LOG")
    if level:
        logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO),
                            format="%(name)s %(levelname)s %(message)s")


def run(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else InputError.exit_code
    try:
        cfg = JobConfig(args.subcommand, args.inputs, args.prior, args.rank_tol, args.residual_tol,
                        args.out, args.seed, args.grid_points)
        COMMANDS[cfg.subcommand][0](cfg)
    except CeeError as exc:
        print(f"cee {args.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"cee {args.subcommand}: numerical failure: {exc}", file=sys.stderr)
        return NumericalError.exit_code
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
