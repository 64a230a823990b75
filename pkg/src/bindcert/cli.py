"""Command line interface: solve-onebody, verify-lemma1, verify-theorem, sweep.

Exit codes: 0 success, 1 config error, 2 numerical non-convergence,
3 hypothesis-check failure.  All randomness is seeded (flag > environment >
config); reports carry no timestamps, so identical seeds reproduce identical
bytes.  Every flag has an environment mirror with the BINDCERT_ prefix
(BINDCERT_CONFIG, BINDCERT_OUT, BINDCERT_SEED, BINDCERT_JOBS, BINDCERT_FORMAT).
"""

from __future__ import annotations

import argparse
import copy
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bernstein import BernsteinFunction, exponential_inequality_check, lemma1_check, lemma1_gap
from .config import (
    ConfigError,
    JobConfig,
    build_grids,
    build_instance,
    build_kinetic,
    build_potential,
    load_job_config,
)
from .eigensolve import NumericsError
from .fock import HypothesisViolation, theorem_verify
from .onebody import (
    binding_certificate,
    converge_study,
    export_eigenvector,
    ground_state,
)
from .operators import BernsteinKinetic
from .report import CertificateRecord, canonical_digest, emit_convergence_csv, emit_json

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_UNCONVERGED = 2
EXIT_HYPOTHESIS = 3

ENV_PREFIX = "BINDCERT_"


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bindcert",
        description="binding-energy positivity certificates on periodic lattices",
    )
    parser.add_argument("--version", action="version", version=f"bindcert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("solve-onebody", "solve K(p)+V and emit a binding certificate"),
        ("verify-lemma1", "randomized scan of the Bernstein midpoint inequalities"),
        ("verify-theorem", "end-to-end energy comparison on a coupled instance"),
        ("sweep", "run a parameter sweep of one-body solves"),
    ):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", type=Path, default=None, help="job file (TOML)")
        cmd.add_argument("--out", type=Path, default=None, help="output directory")
        cmd.add_argument("--seed", type=int, default=None, help="override [solver].seed")
        cmd.add_argument("--jobs", type=int, default=None, help="sweep fan-out width")
        cmd.add_argument("--format", choices=("json", "csv"), default=None,
                         help="also emit convergence CSV when 'csv'")
        if name == "verify-lemma1":
            cmd.add_argument("--flip-comparator", action="store_true",
                             help="self-test: run with a sign-flipped comparator "
                                  "(must be caught and exit 3)")
    return parser


def _settings(args) -> dict:
    config = args.config or (_env("CONFIG") and Path(_env("CONFIG")))
    if not config:
        raise ConfigError("no --config given (or BINDCERT_CONFIG)", None)
    out = args.out or (_env("OUT") and Path(_env("OUT")))
    seed = args.seed if args.seed is not None else (
        int(_env("SEED")) if _env("SEED") else None)
    jobs = args.jobs if args.jobs is not None else (
        int(_env("JOBS")) if _env("JOBS") else None)
    fmt = args.format or _env("FORMAT") or "json"
    if fmt not in ("json", "csv"):
        raise ConfigError(f"unknown format {fmt!r}", None)
    return {"config": config, "out": out, "seed": seed, "jobs": jobs or 2, "format": fmt}


def _finalize(cfg: JobConfig, settings) -> dict:
    resolved = copy.deepcopy(cfg.resolved)
    if settings["seed"] is not None:
        resolved["solver"]["seed"] = settings["seed"]
    if settings["out"] is not None:
        resolved["output"]["dir"] = str(settings["out"])
    return resolved


def _out_dir(resolved) -> Path:
    out = Path(resolved["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, data: bytes) -> None:
    path.write_bytes(data)
    print(f"wrote {path}")


def _digest_of(resolved, *sections) -> str:
    return canonical_digest({s: resolved[s] for s in sections if s in resolved})


def _solve_records(cfg: JobConfig, resolved) -> tuple[list[CertificateRecord], object, int]:
    """Shared solve pipeline: returns (records, study, exit_code)."""
    cfg = JobConfig(cfg.path, cfg.raw_text, resolved)
    grids = build_grids(cfg)
    kinetic = build_kinetic(cfg)
    potential = build_potential(cfg)
    solver = resolved["solver"]
    study = converge_study(
        kinetic, potential, grids,
        tol=solver["tol"], max_iter=solver["max_iter"], seed=solver["seed"],
        dealias=solver["dealias"],
    )
    last = study.rows[-1].result
    digest = _digest_of(resolved, "grid", "grids", "kinetic", "bernstein",
                        "potential", "solver", "certificate")
    cert = binding_certificate(
        study.final, resolved["certificate"]["tol"],
        source={"inputs_digest": digest, "lattice_digest": last.meta["digest"],
                "solver_tol": solver["tol"]},
    )
    values = last.to_values()
    values.update(
        e0=cert.e0,
        e0_last_grid=last.eigenvalue,
        lower_bound=cert.lower_bound,
        certificate_tol=cert.tol,
        seed=float(solver["seed"]),
        solver_tol=solver["tol"],
    )
    record = CertificateRecord(
        kind="binding",
        inputs_digest=digest,
        values=values,
        passed=study.converged,
        tolerances={"residual": solver["tol"]},
        flags={
            "binding_positive": cert.binding_positive,
            "converged": study.converged,
            "extrapolated": study.extrapolated is not None,
            "aliasing_warning": bool(study.aliasing_warnings),
        },
    )
    code = EXIT_OK if study.converged else EXIT_UNCONVERGED
    return [record], study, code


def cmd_solve_onebody(cfg: JobConfig, settings) -> int:
    resolved = _finalize(cfg, settings)
    out = _out_dir(resolved)
    records, study, code = _solve_records(cfg, resolved)
    _write(out / "solve_onebody.json", emit_json(records))
    _write(out / "resolved_config.json",
           canonical_json_bytes(resolved))
    if len(study.rows) > 1 or settings["format"] == "csv":
        _write(out / "convergence.csv", emit_convergence_csv(study))
    vector_path = resolved["output"]["eigenvector"]
    if vector_path:
        work = JobConfig(cfg.path, cfg.raw_text, resolved)
        grid = build_grids(work)[-1]
        solver = resolved["solver"]
        _, psi = ground_state(build_kinetic(work), build_potential(work), grid,
                              tol=solver["tol"], max_iter=solver["max_iter"],
                              seed=solver["seed"], dealias=solver["dealias"])
        export_eigenvector(out / vector_path, psi, grid)
        print(f"wrote {out / vector_path}")
    return code


def canonical_json_bytes(resolved) -> bytes:
    import json

    return json.dumps(resolved, sort_keys=True, separators=(",", ":")).encode("utf-8")


def cmd_verify_lemma1(cfg: JobConfig, settings, flip: bool) -> int:
    resolved = _finalize(cfg, settings)
    out = _out_dir(resolved)
    params = resolved["lemma1"]
    seed = resolved["solver"]["seed"]
    rng = np.random.default_rng(seed)
    gap_fn = (lambda b, p, k: -lemma1_gap(b, p, k)) if flip else lemma1_gap

    per_grid = 10
    n_batches = max(1, params["triples"] // (per_grid * per_grid))
    bound = params["momentum_bound"]

    def ball(n, dim):
        raw = rng.standard_normal((n, dim))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        return raw * bound * rng.uniform(0.0, 1.0, (n, 1)) ** (1.0 / dim)

    worst = -np.inf
    pairs = 0
    for _ in range(n_batches):
        dim = int(rng.integers(1, 4))
        n_atoms = int(rng.integers(0, params["max_atoms"] + 1))
        atoms = tuple(
            (float(t), float(w))
            for t, w in zip(rng.uniform(1e-3, 10.0, n_atoms), rng.uniform(1e-3, 10.0, n_atoms))
        )
        bern = BernsteinFunction(0.0, float(rng.uniform(0.0, 10.0)), atoms)
        rep = lemma1_check(bern, ball(per_grid, dim), ball(per_grid, dim), gap_fn=gap_fn)
        worst = max(worst, rep.max_violation)
        pairs += rep.n_checked

    n_exp = params["exp_samples"]
    t = rng.uniform(0.0, params["t_max"], n_exp)
    p = ball(n_exp, 3)
    k = ball(n_exp, 3)
    exp_vals = exponential_inequality_check(t, p, k)
    if flip:
        exp_vals = -exp_vals
    exp_max = float(exp_vals.max())

    lemma_tol = 1e-12
    passed = worst <= lemma_tol and exp_max <= 0.0
    record = CertificateRecord(
        kind="lemma1",
        inputs_digest=_digest_of(resolved, "lemma1", "solver"),
        values={
            "lemma_max_gap": float(worst),
            "lemma_pairs": float(pairs),
            "exp_max": exp_max,
            "exp_samples": float(n_exp),
            "seed": float(seed),
        },
        passed=passed,
        tolerances={"lemma_max_gap": lemma_tol, "exp_max": 0.0},
        flags={"comparator_flipped": flip},
    )
    _write(out / "verify_lemma1.json", emit_json([record]))
    return EXIT_OK if passed else EXIT_HYPOTHESIS


def cmd_verify_theorem(cfg: JobConfig, settings) -> int:
    resolved = _finalize(cfg, settings)
    out = _out_dir(resolved)
    work = JobConfig(cfg.path, cfg.raw_text, resolved)
    instance = build_instance(work)
    solver = resolved["solver"]
    nelson = resolved["nelson"]
    digest = _digest_of(resolved, "grid", "bernstein", "potential", "nelson", "solver")

    onebody_result, onebody_vec = ground_state(
        BernsteinKinetic(instance.kinetic_shape), instance.potential, instance.grid,
        tol=solver["tol"], max_iter=solver["max_iter"], seed=solver["seed"],
    )
    try:
        report = theorem_verify(
            instance, onebody_result, onebody_vec,
            tol_h2=nelson["tol_h2"], tol_h3=nelson["tol_h3"],
            tol=solver["tol"], seed=solver["seed"],
        )
    except HypothesisViolation as exc:
        record = CertificateRecord(
            kind="hypothesis",
            inputs_digest=digest,
            values={"violation": float(exc.value)},
            passed=False,
            tolerances={exc.kind: float(exc.tolerance)},
            flags={"check_" + exc.kind: False},
        )
        _write(out / "verify_theorem.json", emit_json([record]))
        print(f"hypothesis check {exc.kind} failed: {exc.value:.3e}", file=sys.stderr)
        return EXIT_HYPOTHESIS

    slack_tol = 1e-9
    hypothesis_record = CertificateRecord(
        kind="hypothesis",
        inputs_digest=digest,
        values={
            "h2_commutator": report.h2_norm,
            "h3_margin": report.h3_report.max_violation,
            "trial_norm_error": report.trial.norm_error,
            "trial_kinetic_margin": report.trial.kinetic_margin,
            "trial_potential_error": report.trial.potential_error,
        },
        passed=(
            report.h2_norm <= nelson["tol_h2"]
            and report.h3_report.passed
            and report.trial.norm_error <= 1e-12
            and report.trial.kinetic_margin <= 1e-10
            and report.trial.potential_error <= 1e-12
        ),
        tolerances={
            "h2_commutator": nelson["tol_h2"],
            "h3_margin": nelson["tol_h3"],
            "trial_norm_error": 1e-12,
            "trial_kinetic_margin": 1e-10,
            "trial_potential_error": 1e-12,
        },
        flags={"continuum_unbounded": report.continuum_unbounded},
    )
    theorem_record = CertificateRecord(
        kind="theorem",
        inputs_digest=digest,
        values={
            "E0": report.E0,
            "EV": report.EV,
            "e0": report.e0,
            "slack": report.slack,
            "variational_bound": report.trial.variational_bound,
            "seed": float(solver["seed"]),
        },
        passed=bool(report.slack >= -slack_tol and report.converged
                    and hypothesis_record.passed),
        tolerances={"slack": slack_tol},
        flags={"converged": report.converged},
    )
    _write(out / "verify_theorem.json", emit_json([theorem_record, hypothesis_record]))
    if not report.converged:
        return EXIT_UNCONVERGED
    return EXIT_OK if theorem_record.passed else EXIT_HYPOTHESIS


def _set_by_path(resolved, dotted: str, value) -> None:
    section, _, key = dotted.partition(".")
    if not key or section not in resolved or key not in resolved[section]:
        raise ConfigError(f"sweep parameter {dotted!r} does not name a config key", None)
    resolved[section][key] = value


def cmd_sweep(cfg: JobConfig, settings) -> int:
    resolved = _finalize(cfg, settings)
    out = _out_dir(resolved)
    sweep = resolved["sweep"]
    if not sweep["parameter"] or not sweep["values"]:
        raise ConfigError("[sweep] needs 'parameter' and a nonempty 'values' array", None)

    def run_one(value):
        local = copy.deepcopy(resolved)
        _set_by_path(local, sweep["parameter"], value)
        return _solve_records(cfg, local)

    with ThreadPoolExecutor(max_workers=settings["jobs"]) as pool:
        outcomes = list(pool.map(run_one, sweep["values"]))

    records: list[CertificateRecord] = []
    code = EXIT_OK
    for recs, _, job_code in outcomes:
        records.extend(recs)
        code = max(code, job_code)
    _write(out / "sweep.json", emit_json(records))
    return code


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        settings = _settings(args)
        cfg = load_job_config(settings["config"])
        if args.command == "solve-onebody":
            return cmd_solve_onebody(cfg, settings)
        if args.command == "verify-lemma1":
            return cmd_verify_lemma1(cfg, settings, args.flip_comparator)
        if args.command == "verify-theorem":
            return cmd_verify_theorem(cfg, settings)
        if args.command == "sweep":
            return cmd_sweep(cfg, settings)
        raise ConfigError(f"unknown command {args.command!r}", None)
    except ConfigError as exc:
        where = f"{getattr(args, 'config', None) or 'config'}"
        line = f":{exc.line}" if exc.line else ""
        print(f"{where}{line}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED


if __name__ == "__main__":
    sys.exit(main())
