"""Batch command line: ``bhconst {constants,certify,table,verify-forms,crossover}``.

Exit codes: 0 everything certified / passed, 2 usage or configuration
error, 3 a claim was refuted or left inconclusive, 4 the empirical suite
found a ratio above its bound.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

from . import bounds, forms
from .precision import (
    DEFAULT_PRECISION,
    MIN_PRECISION,
    Field,
    Ordering,
    compare_strict,
    d_constant,
    decide,
    euler_gamma,
    interval_from_decimal,
    log2_d,
    sqrt2,
    two_over_sqrt_pi,
)
from .report import VerificationReport
from .sequences import BaseConstants, ConfigError, SequenceSpec, load_base, m_sequence

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CERTIFICATION = 3
EXIT_ORACLE = 4

COMMANDS = ("constants", "certify", "table", "verify-forms", "crossover")
DEFAULT_SEED = 20240601
DEFAULT_N_MAX = 2**20


@dataclass
class RunConfig:
    command: str
    field: Optional[str] = None
    precision_bits: int = DEFAULT_PRECISION
    n_max: int = DEFAULT_N_MAX
    base_path: Optional[str] = None
    seed: int = DEFAULT_SEED
    trials: Optional[int] = None
    output_path: str = "-"
    output_format: str = "structured"
    # certify
    prefactor: Optional[str] = None
    exponent: Optional[str] = None
    threshold: int = 1
    non_strict: bool = False
    # verify-forms
    arity: int = 2
    dim: int = 2
    # crossover
    claim_a: str = "theorem"
    claim_b: str = "envelope"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.field is not None:
            Field.parse(self.field)
        if self.precision_bits < MIN_PRECISION:
            raise ConfigError(f"--precision-bits must be >= {MIN_PRECISION}")
        if self.n_max < 2:
            raise ConfigError("--n-max must be >= 2")
        if self.output_format not in ("structured", "tabular"):
            raise ConfigError("--format must be 'structured' or 'tabular'")
        if self.trials is not None and self.trials < 1:
            raise ConfigError("--trials must be positive")
        if self.base_path is not None and not Path(self.base_path).is_file():
            raise ConfigError(f"base file {self.base_path} is not readable")
        if self.command == "verify-forms" and (self.arity < 1 or self.dim < 1):
            raise ConfigError("--arity and --dim must be positive")
        if self.exponent is not None and self.prefactor is None:
            raise ConfigError("--exponent needs --prefactor")

    def field_or(self, default: Field) -> Field:
        return Field.parse(self.field) if self.field is not None else default


# -- commands -----------------------------------------------------------------------


def _interval_record(name: str, value) -> dict:
    return {
        "name": name,
        "lo": value.lower_decimal(),
        "hi": value.upper_decimal(),
        "precision_bits": value.precision_bits,
    }


def run_constants(cfg: RunConfig) -> VerificationReport:
    p = cfg.precision_bits
    report = VerificationReport("constants", {"precision_bits": p})
    for name, value in (
        ("euler_gamma", euler_gamma(p)),
        ("D_real", d_constant(Field.REAL, p)),
        ("D_complex", d_constant(Field.COMPLEX, p)),
        ("log2_D_real", log2_d(Field.REAL, p)),
        ("log2_D_complex", log2_d(Field.COMPLEX, p)),
        ("sqrt2", sqrt2(p)),
        ("two_over_sqrt_pi", two_over_sqrt_pi(p)),
    ):
        report.records.append(_interval_record(name, value))
    for field in Field:
        printed = bounds.exponent_for(field)
        outcome, used = decide(
            lambda q, f=field, e=printed: compare_strict(log2_d(f, q), interval_from_decimal(e, q)), p
        )
        record = {
            "name": f"log2_D_{field.value} < {printed}",
            "lo": "",
            "hi": "",
            "precision_bits": used,
            "status": "certified" if outcome is Ordering.LESS else outcome.value,
        }
        report.records.append(record)
        if outcome is not Ordering.LESS:
            report.failures.append({"check": record["name"], "outcome": outcome.value})
    report.assumptions.append(
        "the printed exponents are read as one-sided upper bounds of log2(D), verified above"
    )
    return report


def _load_override(cfg: RunConfig) -> Optional[BaseConstants]:
    return load_base(cfg.base_path) if cfg.base_path else None


def _certify_jobs(cfg: RunConfig) -> list[tuple[bounds.BoundClaim, SequenceSpec]]:
    field = cfg.field_or(Field.REAL)
    override = _load_override(cfg)
    if cfg.prefactor is not None:
        claim = bounds.BoundClaim(
            field,
            cfg.prefactor,
            cfg.exponent or bounds.exponent_for(field),
            cfg.threshold,
            "command line",
            strict=not cfg.non_strict,
        )
        seq = SequenceSpec.j(override) if override is not None else SequenceSpec.m(field)
        return [(claim, seq)]
    jobs = []
    for claim in bounds.envelope_claims():
        if claim.field is not field:
            continue
        if claim.symbolic:
            jobs.append((claim, SequenceSpec.m(field)))
        else:
            jobs.append((claim, SequenceSpec.j(bounds.base_for_row(*bounds.headline_row(claim), override))))
    if field is Field.REAL:
        jobs.append((bounds.theorem_claim(), SequenceSpec.j(bounds.theorem_base())))
    return sorted(jobs, key=lambda job: (job[0].field.value, job[0].threshold))


def run_certify(cfg: RunConfig) -> VerificationReport:
    report = VerificationReport(
        "certify",
        {"field": cfg.field_or(Field.REAL).value, "n_max": cfg.n_max, "precision_bits": cfg.precision_bits},
    )
    for claim, seq in _certify_jobs(cfg):
        result = bounds.certify_envelope(claim, seq, cfg.n_max, cfg.precision_bits)
        record = result.to_record()
        record["sequence"] = seq.kind.value
        record["base_provenance"] = (
            "; ".join(sorted(set(seq.base.provenance.values()))) if seq.base is not None else ""
        )
        report.records.append(record)
        report.assumptions.extend(result.assumptions)
        if result.status is not bounds.Status.CERTIFIED:
            report.failures.append(
                {"claim": claim.describe(), "status": result.status.value,
                 "witness_n": result.witness.n if result.witness else None, "reason": result.reason}
            )
    return report


def run_table(cfg: RunConfig) -> VerificationReport:
    fields_ = [Field.parse(cfg.field)] if cfg.field is not None else list(Field)
    report = VerificationReport(
        "table",
        {"fields": [f.value for f in fields_], "n_max": cfg.n_max, "precision_bits": cfg.precision_bits},
    )
    override = _load_override(cfg)
    for field in fields_:
        for check in bounds.recompute_tables(field, cfg.n_max, cfg.precision_bits, override):
            record = check.to_record()
            report.records.append(record)
            report.assumptions.extend(check.certification.assumptions)
            if check.status is not bounds.Status.CERTIFIED:
                report.failures.append(
                    {"claim": check.claim.describe(), "status": check.status.value,
                     "printed": check.printed, "recomputed_rounded": record["recomputed_rounded"]}
                )
    report.assumptions.append("table bases are implied from the printed prefactors unless --base replaces them")
    return report


def run_verify_forms(cfg: RunConfig) -> VerificationReport:
    field = cfg.field_or(Field.REAL)
    trials = cfg.trials if cfg.trials is not None else 1000
    bound = m_sequence(cfg.arity, field, cfg.precision_bits)
    extra = []
    if field is Field.REAL and cfg.arity == 2 and cfg.dim == 2:
        extra.append(forms.littlewood_form())
    result = forms.verify_batch(cfg.arity, cfg.dim, field, trials, cfg.seed, bound, extra_forms=extra)
    report = VerificationReport(
        "verify-forms",
        {"field": field.value, "n": cfg.arity, "N": cfg.dim, "trials": trials, "seed": cfg.seed},
    )
    record = result.to_record()
    record["bound_label"] = f"M_{cfg.arity} = {result.bound_label}"
    report.records.append(record)
    report.failures.extend(result.violations)
    if field is Field.COMPLEX:
        report.assumptions.append(
            "complex sup norms are ascent lower bounds, so complex ratios are upper estimates (smoke test only)"
        )
    report.assumptions.append("sup over the open polydisc equals the max over its closure")
    return report


def _parse_claim(spec: str, field: Field) -> bounds.BoundClaim:
    """``envelope``, ``theorem``, ``headline``, ``table:K0`` or ``PREFACTOR,EXPONENT,THRESHOLD``."""
    spec = spec.strip()
    if spec == "envelope":
        return next(c for c in bounds.envelope_claims() if c.field is field and c.symbolic)
    if spec == "headline":
        return next(c for c in bounds.envelope_claims() if c.field is field and not c.symbolic)
    if spec == "theorem":
        if field is not Field.REAL:
            raise ConfigError("the theorem claim is for real scalars")
        return bounds.theorem_claim()
    if spec.startswith("table:"):
        k0 = int(spec.split(":", 1)[1])
        for claim, _ in bounds.paper_tables():
            if claim.field is field and claim.threshold == 2**k0:
                return claim
        raise ConfigError(f"no printed {field.value} table row for k0={k0}")
    parts = spec.split(",")
    if len(parts) != 3:
        raise ConfigError(f"cannot parse claim {spec!r}")
    return bounds.BoundClaim(field, parts[0], parts[1], int(parts[2]), "command line")


def run_crossover(cfg: RunConfig) -> VerificationReport:
    field = cfg.field_or(Field.REAL)
    a, b = _parse_claim(cfg.claim_a, field), _parse_claim(cfg.claim_b, field)
    n = bounds.crossover(a, b, cfg.precision_bits)
    report = VerificationReport("crossover", {"field": field.value, "precision_bits": cfg.precision_bits})
    report.records.append(
        {"claim_a": a.describe(), "claim_b": b.describe(), "crossover_n": "" if n is None else n}
    )
    return report


RUNNERS = {
    "constants": run_constants,
    "certify": run_certify,
    "table": run_table,
    "verify-forms": run_verify_forms,
    "crossover": run_crossover,
}


def run(cfg: RunConfig) -> tuple[int, VerificationReport]:
    cfg.validate()
    start = time.perf_counter()
    report = RUNNERS[cfg.command](cfg)
    report.elapsed_seconds = time.perf_counter() - start
    report.write(cfg.output_path, cfg.output_format)
    if report.passed:
        return EXIT_OK, report
    return (EXIT_ORACLE if cfg.command == "verify-forms" else EXIT_CERTIFICATION), report


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bhconst",
        description="Certify upper bounds for the multilinear Bohnenblust-Hille constants.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with any of the options below; flags override it")
    parser.add_argument("--field", choices=[f.value for f in Field],
                        help="scalar field (default: real; `table` does both)")
    parser.add_argument("--precision-bits", dest="precision_bits", type=int,
                        help=f"starting precision, doubled up to 1024 on inconclusive comparisons (default {DEFAULT_PRECISION})")
    parser.add_argument("--n-max", dest="n_max", type=int, help=f"largest n to certify (default 2^20 = {DEFAULT_N_MAX})")
    parser.add_argument("--base", dest="base_path", help="base-constant JSON file replacing the bundled one")
    parser.add_argument("--seed", type=int, help=f"master seed for random forms (default {DEFAULT_SEED})")
    parser.add_argument("--trials", type=int, help="number of random forms (default 1000)")
    parser.add_argument("--out", dest="output_path", help="report path, '-' for stdout (default)")
    parser.add_argument("--format", dest="output_format", choices=("structured", "tabular"),
                        help="report format (default structured)")
    parser.add_argument("--prefactor", help="certify: custom prefactor (decimal, sqrt(2) or 2/sqrt(pi))")
    parser.add_argument("--exponent", help="certify: custom exponent (default: the printed one)")
    parser.add_argument("--threshold", type=int, help="certify: claim holds for n > threshold (default 1)")
    parser.add_argument("--non-strict", dest="non_strict", action="store_true", default=None,
                        help="certify: read the custom claim as <= instead of <")
    parser.add_argument("--arity", type=int, help="verify-forms: n (default 2)")
    parser.add_argument("--dim", type=int, help="verify-forms: N (default 2)")
    parser.add_argument("--claim-a", dest="claim_a",
                        help="crossover: envelope, headline, theorem, table:K0 or P,E,T (default theorem)")
    parser.add_argument("--claim-b", dest="claim_b", help="crossover: second claim (default envelope)")
    return parser


def config_from_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    values: dict = {}
    config_path = args.pop("config")
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        known = {f.name for f in fields(RunConfig)}
        unknown = set(loaded) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    values.update({k: v for k, v in args.items() if v is not None})
    return RunConfig(**values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = config_from_args(argv)
        code, _ = run(cfg)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_USAGE if exc.code else EXIT_OK
    except (ConfigError, ValueError) as exc:
        print(f"bhconst: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
