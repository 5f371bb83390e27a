"""Certification of the printed envelopes, the large-n theorem and the prefactor tables.

Every claim has the shape ``K_n < P (n-1)^E for n > T`` (or ``<=`` for the
two first-order envelopes).  What is certified is always the statement for
the upper-bound sequence (M or J) that dominates K_n, never for K_n itself.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dataclass_field
from decimal import Context, Decimal
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .precision import (
    DEFAULT_PRECISION,
    MAX_PRECISION,
    CertifiedInterval,
    DomainError,
    Field,
    Ordering,
    compare_strict,
    d_constant,
    decide,
    exact,
    interval_from_decimal,
    log2_d,
    pow_interval,
    sqrt2,
    two_over_sqrt_pi,
)
from .sequences import (
    LEAD_NAMES,
    BaseConstants,
    Block,
    ConfigError,
    SequenceKind,
    SequenceSpec,
    block_of,
    bundled_base,
    evaluate,
)

SCOPE_NOTE = (
    "certified statements concern the upper-bound sequence (M_n or J_n); "
    "the optimal constants K_n are only bounded through it"
)
MONOTONE_ASSUMPTION = (
    "K_n <= J_{2^k} for n in B_k relies on the optimal constants being "
    "nondecreasing in n; assumed, not tested"
)

_SYMBOLIC: dict[str, Callable[[int], CertifiedInterval]] = {
    "sqrt(2)": sqrt2,
    "2/sqrt(pi)": two_over_sqrt_pi,
}


class Status(str, enum.Enum):
    CERTIFIED = "certified"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class BoundClaim:
    """``K_n < prefactor * (n-1)^exponent`` for every ``n > threshold``.

    ``prefactor`` is a decimal numeral or one of the symbolic constants
    ``sqrt(2)`` and ``2/sqrt(pi)``.  ``strict=False`` turns ``<`` into ``<=``.
    """

    field: Field
    prefactor: str
    exponent: str
    threshold: int
    source: str = ""
    strict: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "field", Field.parse(self.field))
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")
        if self.prefactor_interval(64).lo <= 0:
            raise ValueError(f"prefactor must be positive, got {self.prefactor}")
        e = Fraction(self.exponent)
        interval_from_decimal(self.exponent)
        if not 0 < e < 1:
            raise ValueError(f"exponent must lie in (0, 1), got {self.exponent}")

    @property
    def symbolic(self) -> bool:
        return self.prefactor in _SYMBOLIC

    @property
    def decimals(self) -> Optional[int]:
        """Number of printed decimals of the prefactor (None when symbolic)."""
        if self.symbolic:
            return None
        return max(0, -Decimal(self.prefactor).as_tuple().exponent)

    def prefactor_interval(self, precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
        if self.prefactor in _SYMBOLIC:
            return _SYMBOLIC[self.prefactor](precision_bits)
        return interval_from_decimal(self.prefactor, precision_bits)

    def exponent_interval(self, precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
        return interval_from_decimal(self.exponent, precision_bits)

    def value_at(self, n: int, precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
        """P * (n-1)^E."""
        base = exact(n - 1, precision_bits)
        return self.prefactor_interval(precision_bits) * pow_interval(base, self.exponent_interval(precision_bits))

    def scaled(self, factor: Union[str, Fraction]) -> "BoundClaim":
        if self.symbolic:
            raise ValueError("cannot rescale a symbolic prefactor")
        value = Fraction(self.prefactor) * Fraction(factor)
        return BoundClaim(
            self.field, _fraction_to_decimal(value), self.exponent, self.threshold, self.source, self.strict
        )

    def describe(self) -> str:
        rel = "<" if self.strict else "<="
        return f"K_n {rel} {self.prefactor}*(n-1)^{self.exponent} for n > {self.threshold}"


def _fraction_to_decimal(value: Fraction) -> str:
    """Exact decimal for fractions with a terminating expansion, else 40 digits."""
    d = Context(prec=40).divide(Decimal(value.numerator), Decimal(value.denominator))
    return format(d, "f")


@dataclass(frozen=True)
class Witness:
    n: int
    sequence_value: CertifiedInterval
    bound_value: CertifiedInterval


@dataclass
class CertResult:
    claim: BoundClaim
    status: Status
    precision_used: int
    witness: Optional[Witness] = None
    blocks_checked: int = 0
    reason: str = ""
    assumptions: list[str] = dataclass_field(default_factory=list)

    def __post_init__(self) -> None:
        if self.status is Status.REFUTED and self.witness is None:
            raise ValueError("a refutation needs a witness")

    def to_record(self) -> dict:
        record = {
            "field": self.claim.field.value,
            "claim": self.claim.describe(),
            "prefactor": self.claim.prefactor,
            "exponent": self.claim.exponent,
            "threshold": self.claim.threshold,
            "source": self.claim.source,
            "status": self.status.value,
            "precision_bits": self.precision_used,
            "blocks_checked": self.blocks_checked,
            "reason": self.reason,
        }
        if self.witness is not None:
            record["witness_n"] = self.witness.n
            record["witness_sequence_lo"] = self.witness.sequence_value.lower_decimal()
            record["witness_sequence_hi"] = self.witness.sequence_value.upper_decimal()
            record["witness_bound_lo"] = self.witness.bound_value.lower_decimal()
            record["witness_bound_hi"] = self.witness.bound_value.upper_decimal()
        return record


# -- claims ---------------------------------------------------------------

REAL_EXPONENT = "0.526322"
COMPLEX_EXPONENT = "0.304975"


def exponent_for(field: Union[Field, str]) -> str:
    return REAL_EXPONENT if Field.parse(field) is Field.REAL else COMPLEX_EXPONENT


def envelope_claims() -> list[BoundClaim]:
    """First-order envelopes plus the two headline large-n refinements."""
    return [
        BoundClaim(Field.REAL, "sqrt(2)", REAL_EXPONENT, 1, "envelope (real)", strict=False),
        BoundClaim(Field.COMPLEX, "2/sqrt(pi)", COMPLEX_EXPONENT, 1, "envelope (complex)", strict=False),
        BoundClaim(Field.REAL, "1.30379", REAL_EXPONENT, 2**8, "headline refinement (real)"),
        BoundClaim(Field.COMPLEX, "0.99137", COMPLEX_EXPONENT, 2**15, "headline refinement (complex)"),
    ]


def theorem_claim() -> BoundClaim:
    return BoundClaim(Field.REAL, "1.338887", REAL_EXPONENT, 16, "theorem, n > 16")


_REAL_TABLE = [(6, "1.310883"), (7, "1.306156"), (8, "1.303787")]
_COMPLEX_TABLE = [
    (3, "1.02960973695"),
    (4, "1.01089344604"),
    (5, "1.00123230777"),
    (6, "0.99632125476"),
    (14, "0.99137409768"),
    (15, "0.99136434217"),
    (25, "0.99135459597"),
    (50, "0.99135458644"),
]


def paper_tables() -> list[tuple[BoundClaim, str]]:
    """Printed refinement rows as (claim, printed prefactor); threshold is 2^k0."""
    rows = []
    for field, table in ((Field.REAL, _REAL_TABLE), (Field.COMPLEX, _COMPLEX_TABLE)):
        for k0, printed in table:
            claim = BoundClaim(field, printed, exponent_for(field), 2**k0, f"table row k0={k0}")
            rows.append((claim, printed))
    return rows


def table_k0(claim: BoundClaim) -> int:
    k0 = claim.threshold.bit_length() - 1
    if 2**k0 != claim.threshold:
        raise ValueError("table rows have power-of-two thresholds")
    return k0


# -- prefactors and bases ---------------------------------------------------


def prefactor(k0: int, base: BaseConstants, precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    """C_{2^k0} / D^(k0-1)."""
    if base.k0 != k0:
        raise ConfigError(f"base is configured for k0={base.k0}, not {k0}")
    return base.value(2**k0, precision_bits) / d_constant(base.field, precision_bits) ** (k0 - 1)


def diana_bound(k0: int, precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    """Upper bound 4 D^(k0-4) on the real C_{2^k0}, valid for k0 >= 4."""
    if k0 < 4:
        raise DomainError("the bound 4*D^(k0-4) only applies for k0 >= 4")
    return 4 * d_constant(Field.REAL, precision_bits) ** (k0 - 4)


def theorem_base() -> BaseConstants:
    """Real base for k0 = 4 with C_16 replaced by its upper bound 4."""
    return BaseConstants(
        Field.REAL, 4, {16: "4"}, {16: "upper bound 4*D^(k0-4) at k0=4 (C_16 <= 4)"}
    )


IMPLIED_DIGITS = 32


def implied_base(
    field: Union[Field, str],
    table: Sequence[tuple[BoundClaim, str]],
    precision_bits: int = DEFAULT_PRECISION,
) -> list[BaseConstants]:
    """Invert ``P = C_{2^k0} / D^(k0-1)`` for each printed row.

    C_{2^k0} is the enclosure of P * D^(k0-1), rounded down to 32
    significant digits and then lowered by one unit in the last digit, so
    that the recomputed prefactor sits strictly below the printed one.
    """
    field = Field.parse(field)
    bases = []
    for claim, printed in table:
        if claim.field is not field:
            raise ConfigError("table rows must share one field")
        k0 = table_k0(claim)
        enclosure = interval_from_decimal(printed, precision_bits) * d_constant(field, precision_bits) ** (k0 - 1)
        floor = Decimal(enclosure.lower_decimal(IMPLIED_DIGITS))
        value = Context(prec=IMPLIED_DIGITS + 4).subtract(
            floor, Decimal(1).scaleb(floor.adjusted() - IMPLIED_DIGITS + 1)
        )
        bases.append(
            BaseConstants(
                field,
                k0,
                {2**k0: format(value, "f")},
                {2**k0: f"implied from printed table: prefactor {printed} times D^{k0 - 1}"},
            )
        )
    return bases


def shipped_bases() -> list[BaseConstants]:
    """Every base file bundled under ``bhconst/data``."""
    bases = [theorem_base()]
    for field in Field:
        bases.extend(implied_base(field, [row for row in paper_tables() if row[0].field is field]))
    return bases


def base_for_row(claim: BoundClaim, printed: str, override: Optional[BaseConstants] = None) -> BaseConstants:
    """User-supplied base when it matches (field, k0), else the bundled implied one."""
    k0 = table_k0(claim)
    if override is not None and override.field is claim.field and override.k0 == k0:
        return override
    try:
        return bundled_base(claim.field, k0)
    except ConfigError:
        return implied_base(claim.field, [(claim, printed)])[0]


# -- certification -------------------------------------------------------------


def _exact_tie(claim: BoundClaim, seq: SequenceSpec, n: int) -> bool:
    # M_2 is the lead constant and (2-1)^E = 1, so "<=" holds with equality.
    return (
        not claim.strict
        and seq.kind is SequenceKind.M
        and n == 2
        and claim.prefactor == LEAD_NAMES[claim.field]
    )


def _checks_for_block(k: int, first: int, n_max: int, seq: SequenceSpec) -> list[tuple[int, int]]:
    """(n where the bound is evaluated, n whose sequence value dominates the block)."""
    block = Block(k)
    lo = max(block.first, first)
    if seq.kind is SequenceKind.J and k <= seq.base.k0:
        # inside the base region there is no block structure; check every n
        return [(n, n) for n in range(lo, min(block.last, n_max) + 1)]
    return [(lo, block.last)]


def certify_envelope(
    claim: BoundClaim,
    seq: SequenceSpec,
    n_max: int,
    precision_bits: int = DEFAULT_PRECISION,
    cap: int = MAX_PRECISION,
) -> CertResult:
    """Certify ``sequence_n < P (n-1)^E`` for every ``threshold < n <= n_max``.

    The sequences are dominated on each block B_k by their value at 2^k and
    the bound is increasing in n, so one comparison at the block's left end
    covers the whole block.
    """
    if claim.field is not seq.field:
        raise ConfigError("claim and sequence use different scalar fields")
    assumptions = [SCOPE_NOTE]
    if seq.kind is SequenceKind.J:
        assumptions.append(MONOTONE_ASSUMPTION)

    def exponent_check(p: int) -> Ordering:
        return compare_strict(log2_d(claim.field, p), claim.exponent_interval(p))

    outcome, used = decide(exponent_check, precision_bits, cap)
    if outcome is not Ordering.LESS:
        return CertResult(
            claim, Status.INCONCLUSIVE, used,
            reason=f"exponent {claim.exponent} not certified above log2(D)",
            assumptions=assumptions,
        )

    first = claim.threshold + 1
    if first > n_max:
        return CertResult(claim, Status.CERTIFIED, used, reason="empty range", assumptions=assumptions)

    blocks = 0
    for k in range(block_of(first).k, block_of(n_max).k + 1):
        blocks += 1
        for n_bound, n_seq in _checks_for_block(k, first, n_max, seq):
            if _exact_tie(claim, seq, n_bound):
                assumptions.append("n=2: M_2 equals the symbolic prefactor exactly")
                continue

            def compare(p: int) -> Ordering:
                return compare_strict(evaluate(n_seq, seq, p), claim.value_at(n_bound, p))

            outcome, p = decide(compare, precision_bits, cap)
            used = max(used, p)
            if outcome is Ordering.LESS:
                continue
            witness = Witness(n_bound, evaluate(n_seq, seq, p), claim.value_at(n_bound, p))
            if outcome is Ordering.GREATER:
                return CertResult(
                    claim, Status.REFUTED, used, witness, blocks,
                    reason=f"sequence exceeds the bound at n={n_bound}", assumptions=assumptions,
                )
            return CertResult(
                claim, Status.INCONCLUSIVE, used, witness, blocks,
                reason=f"comparison undecided at n={n_bound} up to {cap} bits", assumptions=assumptions,
            )
    return CertResult(claim, Status.CERTIFIED, used, blocks_checked=blocks, assumptions=assumptions)


def crossover(
    claim_a: BoundClaim,
    claim_b: BoundClaim,
    precision_bits: int = DEFAULT_PRECISION,
    scan_cap: int = 2**30,
) -> Optional[int]:
    """Smallest n beyond both thresholds where claim_a's bound is certified below claim_b's."""
    if claim_a.field is not claim_b.field:
        raise ConfigError("crossover needs claims over the same field")
    start = max(claim_a.threshold, claim_b.threshold) + 1
    if start > scan_cap:
        return None

    if Fraction(claim_a.exponent) == Fraction(claim_b.exponent):
        outcome, _ = decide(
            lambda p: compare_strict(claim_a.prefactor_interval(p), claim_b.prefactor_interval(p)),
            precision_bits,
        )
        return start if outcome is Ordering.LESS else None

    def below(n: int) -> bool:
        outcome, _ = decide(
            lambda p: compare_strict(claim_a.value_at(n, p), claim_b.value_at(n, p)), precision_bits
        )
        return outcome is Ordering.LESS

    if below(start):
        return start
    if Fraction(claim_a.exponent) > Fraction(claim_b.exponent) or not below(scan_cap):
        # a grows faster: once above, it stays above
        return None
    lo, hi = start, scan_cap  # below(lo) false, below(hi) true
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if below(mid):
            hi = mid
        else:
            lo = mid
    return hi


# -- table regression ------------------------------------------------------------


@dataclass
class RowCheck:
    """Recomputation of one printed prefactor."""

    claim: BoundClaim
    printed: str
    kind: str
    recomputed: CertifiedInterval
    rounded: Optional[str]
    digits_match: Optional[bool]
    below_printed: bool
    within_last_place: bool
    certification: CertResult
    base_provenance: str = ""

    @property
    def status(self) -> Status:
        if self.certification.status is not Status.CERTIFIED:
            return self.certification.status
        ok = self.below_printed and self.within_last_place and self.digits_match is not False
        return Status.CERTIFIED if ok else Status.REFUTED

    def to_record(self) -> dict:
        record = self.certification.to_record()
        record.update(
            {
                "kind": self.kind,
                "printed_prefactor": self.printed,
                "recomputed_lo": self.recomputed.lower_decimal(),
                "recomputed_hi": self.recomputed.upper_decimal(),
                "recomputed_rounded": self.rounded if self.rounded is not None else "",
                "digits_match": "" if self.digits_match is None else str(self.digits_match).lower(),
                "below_printed": str(self.below_printed).lower(),
                "within_last_place": str(self.within_last_place).lower(),
                "base_provenance": self.base_provenance,
                "status": self.status.value,
            }
        )
        return record


def _directed_checks(recomputed: CertifiedInterval, printed: str, precision_bits: int) -> tuple[bool, bool]:
    decimals = max(0, -Decimal(printed).as_tuple().exponent)
    printed_iv = interval_from_decimal(printed, precision_bits)
    ulp = exact(Fraction(1, 10**decimals), precision_bits)
    below = recomputed.hi <= printed_iv.lo
    within = compare_strict(recomputed, printed_iv + ulp) is Ordering.LESS
    return below, within


def _rounded(compute: Callable[[int], CertifiedInterval], decimals: int, precision_bits: int, cap: int):
    p = precision_bits
    while True:
        value = compute(p)
        r = value.rounded(decimals)
        if r is not None or p >= cap:
            return value, r
        p = min(2 * p, cap)


def check_row(
    claim: BoundClaim,
    printed: str,
    kind: str,
    base: Optional[BaseConstants],
    n_max: int,
    precision_bits: int = DEFAULT_PRECISION,
) -> RowCheck:
    """Recompute one printed prefactor and certify its claim.

    ``kind`` is ``table`` (digits must match after round-half-even),
    ``theorem`` (same, with C_16 replaced by 4), ``headline`` (printed value
    is a one-sided rounding of a table row) or ``envelope`` (symbolic).
    """
    if kind == "envelope":
        seq = SequenceSpec.m(claim.field)
        result = certify_envelope(claim, seq, n_max, precision_bits)
        recomputed = evaluate(2, seq, precision_bits)
        return RowCheck(claim, printed, kind, recomputed, None, None, True, True, result, "M_2")

    seq = SequenceSpec.j(base)
    k0 = base.k0
    compute = lambda p: prefactor(k0, base, p)
    if kind in ("table", "theorem"):
        recomputed, rounded = _rounded(compute, claim.decimals, precision_bits, MAX_PRECISION)
        digits_match = rounded == printed
    else:
        recomputed, rounded, digits_match = compute(precision_bits), None, None
    below, within = _directed_checks(recomputed, printed, precision_bits)
    result = certify_envelope(claim, seq, max(n_max, claim.threshold << 20), precision_bits)
    provenance = "; ".join(sorted(set(base.provenance.values())))
    return RowCheck(claim, printed, kind, recomputed, rounded, digits_match, below, within, result, provenance)


def printed_claims(field: Union[Field, str]) -> list[tuple[BoundClaim, str, str]]:
    """Every printed claim for one field as (claim, printed prefactor, kind)."""
    field = Field.parse(field)
    rows = []
    for claim in envelope_claims():
        if claim.field is field:
            kind = "envelope" if claim.symbolic else "headline"
            rows.append((claim, claim.prefactor, kind))
    if field is Field.REAL:
        rows.append((theorem_claim(), theorem_claim().prefactor, "theorem"))
    rows.extend((c, p, "table") for c, p in paper_tables() if c.field is field)
    return sorted(rows, key=lambda r: (r[0].field.value, r[0].threshold, r[2]))


def headline_row(claim: BoundClaim) -> tuple[BoundClaim, str]:
    """Table row the headline refinement is a rounding of."""
    for row in paper_tables():
        if row[0].field is claim.field and row[0].threshold == claim.threshold:
            return row
    raise ConfigError(f"no table row with threshold {claim.threshold}")


def recompute_tables(
    field: Union[Field, str],
    n_max: int = 2**20,
    precision_bits: int = DEFAULT_PRECISION,
    override: Optional[BaseConstants] = None,
) -> list[RowCheck]:
    checks = []
    for claim, printed, kind in printed_claims(field):
        if kind == "envelope":
            base = None
        elif kind == "theorem":
            base = theorem_base()
        elif kind == "headline":
            base = base_for_row(*headline_row(claim), override)
        else:
            base = base_for_row(claim, printed, override)
        checks.append(check_row(claim, printed, kind, base, n_max, precision_bits))
    return checks
