"""Command-line experiment runner.

Subcommands: factorize, diagonal, stability, counterexample, channels,
posdef-check.  Each reads an optional ``key = value`` config file, writes CSV
reports plus a plain-text summary into the output directory, and exits 0 on a
pass verdict, 1 on a fail verdict, 2 on input errors.  Identical configs and
seeds produce byte-identical CSV output.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .linops import op_norm, psd_sqrt, range_projection
from .nests import Nest, channel_nest, standard_nest
from .amplitude import default_probes, diagonal
from .factor import canonical_factor
from .stability import (
    channel_assembly,
    channel_volterra_family,
    counterexample_family,
    counterexample_instance,
    exp_volterra_matrix,
    exp_volterra_operator,
    gap_term_sweep,
    posdef_projection,
    regular_convergence_check,
    stability_harness,
    uniformity_diagnostic,
    volterra_family,
)
from .serialize import (
    DIAGONAL_HEADER,
    FACTOR_HEADER,
    STABILITY_HEADER,
    convergence_rows,
    diagonal_rows,
    factorization_rows,
    fmt,
    read_matrix_csv,
    write_csv,
)

__all__ = ["ConfigError", "ExperimentConfig", "main", "parse_config", "run",
           "serialize_config"]

COMMANDS = (
    "factorize",
    "diagonal",
    "stability",
    "counterexample",
    "channels",
    "posdef-check",
)

OPERATORS = ("volterra", "volterra_factor", "identity", "diagonal", "csv")

MAX_DIM = 1024
MAX_SCHEDULE = 12


class ConfigError(ValueError):
    """Bad configuration: unknown key, malformed value, or out-of-range
    setting."""


@dataclass
class ExperimentConfig:
    command: str
    operator: str = "volterra"
    kappa: float = 0.3
    n: int = 128
    csv_path: str = ""
    diag_values: tuple[float, ...] = (4.0, 1.0)
    nest: str = "standard"
    channels: int = 8
    schedule: int = 5
    alphas: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    eps: float | None = None
    tol: float | None = None
    n_max: int = 32
    trunc: int = 64
    cases: int = 50
    out: str = "out"
    seed: int = 0


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def _parse_optional_float(text: str) -> float | None:
    return None if text == "auto" else float(text)


def _show_optional(value) -> str:
    return "auto" if value is None else fmt(value)


def _show_list(values) -> str:
    return ", ".join(fmt(v) for v in values)


# key -> (parse, show, help)
SCHEMA = {
    "command": (str, str, "one of: " + ", ".join(COMMANDS)),
    "operator": (str, str, "builtin operator: " + ", ".join(OPERATORS)),
    "kappa": (float, fmt, "kernel weight for the volterra operators, 0 < kappa < 1"),
    "n": (int, str, "grid size / operator dimension (per channel for the channels command), 2..1024"),
    "csv_path": (str, str, "matrix CSV path for operator = csv"),
    "diag_values": (_parse_float_list, _show_list, "diagonal entries for operator = diagonal"),
    "nest": (str, str, "nest kind: standard or channel"),
    "channels": (int, str, "number of channel blocks, 1..64"),
    "schedule": (int, str, "refinement count, 2..12"),
    "alphas": (_parse_float_list, _show_list, "family parameters, ascending"),
    "eps": (_parse_optional_float, _show_optional,
            "Cauchy threshold for the diagonal refinement; auto = 1e-8 * (1 + norm)"),
    "tol": (_parse_optional_float, _show_optional,
            "pass threshold for stability verdicts; auto scales with the operator norm"),
    "n_max": (int, str, "largest member index for the counterexample command"),
    "trunc": (int, str, "truncation dimension for the counterexample command"),
    "cases": (int, str, "number of seeded cases for posdef-check, 1..1000"),
    "out": (str, str, "output directory"),
    "seed": (int, str, "seed for probe vectors and sampled operators"),
}


def parse_config(text: str, command: str | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines into a config.

    ``#`` starts a comment; blank lines are skipped.  Unknown keys, duplicate
    keys and malformed values raise :class:`ConfigError` naming the line.  A
    command must come from the file or the ``command`` argument (and must
    agree when both are present).
    """
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parse = SCHEMA[key][0]
        try:
            values[key] = parse(val)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: bad value {val!r} for key {key!r}"
            ) from None
    file_command = values.pop("command", None)
    if command is not None and file_command is not None and command != file_command:
        raise ConfigError(
            f"config file says command = {file_command}, invoked as {command}"
        )
    final_command = command if command is not None else file_command
    if final_command is None:
        raise ConfigError("command required (none in config, none given)")
    cfg = ExperimentConfig(command=str(final_command), **values)
    validate_config(cfg)
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    """Render a config as text that parses back to an equal config."""
    lines = []
    for key, (_, show, _) in SCHEMA.items():
        lines.append(f"{key} = {show(getattr(cfg, _FIELD_BY_KEY[key]))}")
    return "\n".join(lines) + "\n"


_FIELD_BY_KEY = {key: key for key in SCHEMA}


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if cfg.operator not in OPERATORS:
        raise ConfigError(f"unknown operator {cfg.operator!r}")
    if not 2 <= cfg.n <= MAX_DIM:
        raise ConfigError(f"n must lie in 2..{MAX_DIM}, got {cfg.n}")
    if not 2 <= cfg.schedule <= MAX_SCHEDULE:
        raise ConfigError(f"schedule must lie in 2..{MAX_SCHEDULE}, got {cfg.schedule}")
    if not 1 <= cfg.channels <= 64:
        raise ConfigError(f"channels must lie in 1..64, got {cfg.channels}")
    if not 1 <= cfg.cases <= 1000:
        raise ConfigError(f"cases must lie in 1..1000, got {cfg.cases}")
    if cfg.nest not in ("standard", "channel"):
        raise ConfigError(f"nest must be standard or channel, got {cfg.nest!r}")
    if len(cfg.alphas) < 1 or any(
        b <= a for a, b in zip(cfg.alphas[:-1], cfg.alphas[1:])
    ):
        raise ConfigError(f"alphas must be strictly ascending, got {cfg.alphas}")
    if any(a < 1.0 for a in cfg.alphas):
        raise ConfigError("alphas must be at least 1")
    if cfg.n_max < 2:
        raise ConfigError(f"n_max must be at least 2, got {cfg.n_max}")
    if cfg.trunc < cfg.n_max + 1:
        raise ConfigError(
            f"trunc must exceed n_max, got trunc={cfg.trunc}, n_max={cfg.n_max}"
        )
    if cfg.seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {cfg.seed}")
    if not cfg.diag_values:
        raise ConfigError("diag_values must not be empty")


def _build_operator(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.operator == "volterra":
        return exp_volterra_operator(cfg.kappa, cfg.n)
    if cfg.operator == "volterra_factor":
        return exp_volterra_matrix(cfg.kappa, cfg.n)
    if cfg.operator == "identity":
        return np.eye(cfg.n)
    if cfg.operator == "diagonal":
        return np.diag(np.asarray(cfg.diag_values, dtype=float))
    if cfg.operator == "csv":
        if not cfg.csv_path:
            raise ConfigError("operator = csv requires csv_path")
        a = read_matrix_csv(cfg.csv_path)
        if not 2 <= a.shape[0] <= MAX_DIM:
            raise ConfigError(
                f"matrix dimension {a.shape[0]} outside 2..{MAX_DIM}"
            )
        return a
    raise ConfigError(f"unknown operator {cfg.operator!r}")


def _build_nest(cfg: ExperimentConfig, dim: int) -> Nest:
    if cfg.nest == "standard":
        return standard_nest(dim)
    if dim % cfg.channels != 0:
        raise ConfigError(
            f"channel nest needs channels ({cfg.channels}) dividing dim ({dim})"
        )
    return channel_nest([standard_nest(dim // cfg.channels)] * cfg.channels)


def _write_summary(outdir: Path, lines: list[str]) -> None:
    (outdir / "summary.txt").write_text("\n".join(lines) + "\n")


def _verdict_line(ok: bool) -> str:
    return f"verdict = {'pass' if ok else 'fail'}"


def _run_factorize(cfg: ExperimentConfig, outdir: Path) -> int:
    c = _build_operator(cfg)
    nest = _build_nest(cfg, c.shape[0])
    probes = default_probes(nest.dim, cfg.seed)
    rep = canonical_factor(c, nest, cfg.schedule, eps=cfg.eps, probes=probes)
    write_csv(outdir / "factorize.csv", FACTOR_HEADER, factorization_rows(rep))
    bound = op_norm(rep.sqrt_c) ** 2 * rep.admissibility[0] + 1e-9
    ok = (
        rep.diag_report.verdict != "diverged"
        and rep.triangularity <= 1e-10
        and rep.residual <= bound
    )
    _write_summary(outdir, [
        f"command = {cfg.command}",
        f"seed = {cfg.seed}",
        _verdict_line(ok),
        f"diagonal verdict = {rep.diag_report.verdict}",
        f"residual = {fmt(rep.residual)}",
        f"residual bound = {fmt(bound)}",
        f"admissibility defect = {fmt(rep.admissibility[0])}",
        f"rank defect = {rep.admissibility[1]}",
        f"triangularity defect = {fmt(rep.triangularity)}",
        f"cholesky distance = {fmt(rep.history[-1].cholesky_distance)}",
    ])
    return 0 if ok else 1


def _run_diagonal(cfg: ExperimentConfig, outdir: Path) -> int:
    w = _build_operator(cfg)
    nest = _build_nest(cfg, w.shape[0])
    probes = default_probes(nest.dim, cfg.seed)
    rep = diagonal(w, nest, cfg.schedule, eps=cfg.eps, probes=probes)
    write_csv(outdir / "diagonal.csv", DIAGONAL_HEADER, diagonal_rows(rep))
    norm_bound = op_norm(w) + 1e-9
    norm_ok = all(r.norm <= norm_bound for r in rep.history)
    intertwining_ok = all(r.intertwining <= 1e-10 for r in rep.history)
    ok = rep.verdict != "diverged" and norm_ok and intertwining_ok
    _write_summary(outdir, [
        f"command = {cfg.command}",
        f"seed = {cfg.seed}",
        _verdict_line(ok),
        f"diagonal verdict = {rep.verdict}",
        f"cauchy defect = {fmt(rep.cauchy_history[-1] if rep.cauchy_history else float('nan'))}",
        f"cauchy eps = {fmt(rep.eps)}",
        f"norm bound ({fmt(norm_bound)}) holds = {norm_ok}",
        f"intertwining defect = {fmt(max(r.intertwining for r in rep.history))}",
    ])
    return 0 if ok else 1


def _build_family(cfg: ExperimentConfig):
    if cfg.nest == "standard":
        return volterra_family(cfg.kappa, cfg.alphas, cfg.n), standard_nest(cfg.n)
    if cfg.n % cfg.channels != 0:
        raise ConfigError(
            f"channel nest needs channels ({cfg.channels}) dividing n ({cfg.n})"
        )
    return channel_volterra_family(
        cfg.kappa, cfg.alphas, cfg.n // cfg.channels, cfg.channels
    )


def _run_stability(cfg: ExperimentConfig, outdir: Path) -> int:
    fam, nest = _build_family(cfg)
    probes = default_probes(nest.dim, cfg.seed)
    harness = stability_harness(
        fam, nest, cfg.schedule, eps=cfg.tol, probes=probes
    )
    write_csv(outdir / "stability.csv", STABILITY_HEADER, convergence_rows(harness))
    reg = regular_convergence_check(fam, nest, probes=probes, tol=cfg.tol)
    uni = uniformity_diagnostic(fam, nest, cfg.schedule, probes=probes)
    uni_header = ["alpha"] + [f"step{j + 1}" for j in range(uni.shape[1])]
    uni_rows = [[alpha] + list(row) for alpha, row in zip(fam.alphas, uni)]
    uni_rows.append(["sup"] + list(uni.max(axis=0)))
    write_csv(outdir / "uniformity.csv", uni_header, uni_rows)
    sweep = gap_term_sweep(fam, nest, cfg.schedule, probes=probes)
    write_csv(
        outdir / "gap_terms.csv",
        ["range", "alpha", "max_pairing", "term1", "term2", "term3", "term4",
         "bound_margin"],
        sweep,
    )
    margin_ok = all(r.bound_margin >= -1e-10 for r in harness.rows)
    ok = harness.passed and reg.passed and margin_ok
    _write_summary(outdir, [
        f"command = {cfg.command}",
        f"seed = {cfg.seed}",
        _verdict_line(ok),
        f"harness verdict = {harness.verdict}"
        + (f" ({harness.failure})" if harness.failure else ""),
        f"regular convergence verdict = {reg.verdict}"
        + (f" ({reg.failure})" if reg.failure else ""),
        f"pairing defect = {fmt(harness.rows[-1].max_pairing)}",
        f"bound margin = {fmt(min(r.bound_margin for r in harness.rows))}",
        f"uniformity sup = {fmt(float(uni.max(axis=0)[-1])) if uni.size else 'nan'}",
    ])
    return 0 if ok else 1


def _run_counterexample(cfg: ExperimentConfig, outdir: Path) -> int:
    n_values = []
    n = 2
    while n <= cfg.n_max:
        n_values.append(n)
        n *= 2
    fam, nest = counterexample_family(n_values, cfg.trunc)
    rows = []
    worst_gap = 0.0
    worst_agreement = 0.0
    bound_ok = True
    for n in n_values:
        inst = counterexample_instance(n, cfg.trunc)
        measured = range_projection(inst.w_n, inst.m)
        agreement = op_norm(measured.matrix - inst.p_n.matrix)
        phi1 = np.zeros(cfg.trunc)
        phi1[0] = 1.0
        proj_gap = float(np.linalg.norm((measured.matrix - inst.p.matrix) @ phi1))
        proj_gap_closed = float(np.sqrt(1.0 - 1.0 / (1.0 + n * n / 4.0)))
        op_gap = op_norm(inst.w_n - inst.w)
        op_gap_bound = 2.0 / n
        rows.append([n, op_gap, op_gap_bound, proj_gap, proj_gap_closed, agreement])
        bound_ok = bound_ok and op_gap <= op_gap_bound + 1e-12
        worst_gap = max(worst_gap, abs(proj_gap - proj_gap_closed))
        worst_agreement = max(worst_agreement, agreement)
    write_csv(
        outdir / "counterexample.csv",
        ["n", "op_gap", "op_gap_bound", "proj_gap", "proj_gap_closed",
         "projection_agreement"],
        rows,
    )
    probes = default_probes(nest.dim, cfg.seed)
    reg = regular_convergence_check(fam, nest, probes=probes, tol=cfg.tol)
    # The family is built to defeat regular convergence: reproducing the
    # escape is the pass condition here.
    ok = (
        bound_ok
        and worst_gap <= 1e-10
        and worst_agreement <= 1e-10
        and reg.verdict == "fail"
    )
    _write_summary(outdir, [
        f"command = {cfg.command}",
        f"seed = {cfg.seed}",
        _verdict_line(ok),
        f"operator gap bound 2/n holds = {bound_ok}",
        f"projection gap closed-form defect = {fmt(worst_gap)}",
        f"projection agreement defect = {fmt(worst_agreement)}",
        f"regular convergence verdict = {reg.verdict}"
        + (f" ({reg.failure})" if reg.failure else ""),
        f"projection defect at largest member = {fmt(reg.rows[-1].proj_defect)}",
    ])
    return 0 if ok else 1


def _run_channels(cfg: ExperimentConfig, outdir: Path) -> int:
    base = exp_volterra_operator(cfg.kappa, cfg.n)
    blocks = [base / l for l in range(1, cfg.channels + 1)]
    nests = [standard_nest(cfg.n)] * cfg.channels
    asm = channel_assembly(blocks, nests, cfg.schedule, eps=cfg.eps)
    rows = []
    for l, (rep, mineig) in enumerate(
        zip(asm.channel_reports, asm.channel_min_eigenvalues), start=1
    ):
        rows.append([
            str(l), rep.residual, rep.admissibility[0], rep.triangularity, mineig,
        ])
    rows.append([
        "global",
        asm.report.residual,
        asm.report.admissibility[0],
        asm.report.triangularity,
        asm.min_eigenvalue,
    ])
    write_csv(
        outdir / "channels.csv",
        ["channel", "residual", "admissibility_defect", "triangularity_defect",
         "min_eigenvalue"],
        rows,
    )
    fam, cnest = channel_volterra_family(cfg.kappa, cfg.alphas, cfg.n, cfg.channels)
    probes = default_probes(cnest.dim, cfg.seed)
    harness = stability_harness(fam, cnest, cfg.schedule, eps=cfg.tol, probes=probes)
    residual_gap = abs(
        asm.report.residual - max(r.residual for r in asm.channel_reports)
    )
    ok = (
        asm.report.triangularity <= 1e-10
        and residual_gap <= 1e-12
        and asm.commutation_defect <= 1e-12
        and asm.assembly_defect <= 1e-10
        and harness.passed
    )
    _write_summary(outdir, [
        f"command = {cfg.command}",
        f"seed = {cfg.seed}",
        _verdict_line(ok),
        f"triangularity defect = {fmt(asm.report.triangularity)}",
        f"residual assembly gap = {fmt(residual_gap)}",
        f"assembly defect = {fmt(asm.assembly_defect)}",
        f"channel commutation defect = {fmt(asm.commutation_defect)}",
        f"global min eigenvalue = {fmt(asm.min_eigenvalue)}",
        f"first channel min eigenvalue = {fmt(asm.channel_min_eigenvalues[0])}",
        f"harness verdict = {harness.verdict}"
        + (f" ({harness.failure})" if harness.failure else ""),
    ])
    return 0 if ok else 1


def _run_posdef_check(cfg: ExperimentConfig, outdir: Path) -> int:
    rng = np.random.default_rng(cfg.seed)
    max_dim = min(cfg.n, 32)
    rows = []
    worst = 0.0
    worst_law = 0.0
    for case in range(cfg.cases):
        dim = int(rng.integers(2, max_dim + 1))
        a = rng.standard_normal((dim, dim))
        c = a.T @ a
        c += (0.05 * np.trace(c) / dim) * np.eye(dim)
        nest = standard_nest(dim)
        sqrt_c = psd_sqrt(c)
        formula_defect = 0.0
        idem = 0.0
        sym = 0.0
        for j, s in enumerate(nest.grid):
            p_formula = posdef_projection(c, nest, float(s), sqrt_c=sqrt_c)
            p_svd = range_projection(sqrt_c, nest.projections[j])
            formula_defect = max(
                formula_defect, op_norm(p_formula.matrix - p_svd.matrix)
            )
            d = p_formula.defects()
            idem = max(idem, d["idempotence"])
            sym = max(sym, d["symmetry"])
        rows.append([case, dim, formula_defect, idem, sym])
        worst = max(worst, formula_defect)
        worst_law = max(worst_law, idem, sym)
    write_csv(
        outdir / "posdef_check.csv",
        ["case", "dim", "formula_defect", "idempotence_defect", "symmetry_defect"],
        rows,
    )
    ok = worst <= 1e-9 and worst_law <= 1e-10
    _write_summary(outdir, [
        f"command = {cfg.command}",
        f"seed = {cfg.seed}",
        _verdict_line(ok),
        f"cases = {cfg.cases}",
        f"formula defect = {fmt(worst)}",
        f"projection law defect = {fmt(worst_law)}",
    ])
    return 0 if ok else 1


_RUNNERS = {
    "factorize": _run_factorize,
    "diagonal": _run_diagonal,
    "stability": _run_stability,
    "counterexample": _run_counterexample,
    "channels": _run_channels,
    "posdef-check": _run_posdef_check,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute one configured experiment; returns the exit code."""
    validate_config(cfg)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[cfg.command](cfg, outdir)


def _epilog() -> str:
    lines = ["config keys (key = value per line, # comments):"]
    defaults = ExperimentConfig(command="factorize")
    for key, (_, show, help_text) in SCHEMA.items():
        if key == "command":
            continue
        lines.append(f"  {key:<12} {help_text} (default: {show(getattr(defaults, key))})")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nestfactor",
        description="Nest-relative diagonals, triangular factorization, and "
        "stability experiments.",
        epilog=_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="path to a key = value config file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="seed (overrides config)")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text() if args.config else ""
        cfg = parse_config(text, command=args.command)
        if args.out is not None:
            cfg = replace(cfg, out=args.out)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        return run(cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error in {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
