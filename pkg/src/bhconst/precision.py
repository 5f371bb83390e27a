"""Certified real arithmetic backed by MPFR directed rounding.

Every endpoint is produced by a correctly rounded MPFR operation in the
outward direction (lower endpoints rounded toward -inf, upper endpoints
toward +inf), so each interval encloses the exact value of the expression
that produced it.
"""

from __future__ import annotations

import enum
import functools
import math
import re
from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_FLOOR, ROUND_HALF_EVEN, Context, Decimal
from fractions import Fraction
from typing import Callable, Union

import gmpy2
from gmpy2 import mpfr, mpq

DEFAULT_PRECISION = 128
MAX_PRECISION = 1024
MIN_PRECISION = 32

# Euler-Mascheroni constant, first 320 decimals (truncated, not rounded).
_GAMMA_DIGITS = (
    "5772156649015328606065120900824024310421593359399235988057672348"
    "8486772677766467093694706329174674951463144724980708248096050401"
    "4486542836224173997644923536253500333742937337737673942792595258"
    "2470949160087352039481656708532331517766115286211995015079847937"
    "4508570574002992135478614669402960432542151905877553526733139925"
)
_GAMMA_LITERAL = Fraction(int(_GAMMA_DIGITS), 10 ** len(_GAMMA_DIGITS))
_GAMMA_ULP = Fraction(1, 10 ** len(_GAMMA_DIGITS))
# a few guard bits below the literal's accuracy
GAMMA_MAX_PRECISION = math.floor(len(_GAMMA_DIGITS) * math.log2(10)) - 4
# digits the start-up cross-check must confirm
GAMMA_CHECK_DIGITS = 64

_DECIMAL_RE = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")


class Field(str, enum.Enum):
    """Scalar field of the multilinear forms."""

    REAL = "real"
    COMPLEX = "complex"

    @classmethod
    def parse(cls, value: Union[str, "Field"]) -> "Field":
        if isinstance(value, Field):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown field {value!r}; expected 'real' or 'complex'") from None


class Ordering(str, enum.Enum):
    LESS = "certified_less"
    GREATER = "certified_greater"
    INCONCLUSIVE = "inconclusive"


class DecimalParseError(ValueError):
    pass


class InsufficientDigitsError(ValueError):
    pass


class DomainError(ValueError):
    pass


@functools.lru_cache(maxsize=None)
def _context(precision: int, upward: bool) -> gmpy2.context:
    return gmpy2.context(
        precision=precision,
        round=gmpy2.RoundUp if upward else gmpy2.RoundDown,
    )


def _down(precision: int) -> gmpy2.context:
    return _context(precision, False)


def _up(precision: int) -> gmpy2.context:
    return _context(precision, True)


def _as_fraction(x: mpfr) -> Fraction:
    num, den = x.as_integer_ratio()
    return Fraction(int(num), int(den))


def _as_decimal(x: mpfr) -> Decimal:
    """Exact decimal expansion of a finite binary float."""
    num, den = (int(v) for v in x.as_integer_ratio())
    e = den.bit_length() - 1  # den is a power of two
    coefficient = num * 5**e
    return Decimal(coefficient).scaleb(-e, Context(prec=len(str(coefficient)) + 2))


Scalar = Union[int, Fraction, str]


@dataclass(frozen=True)
class CertifiedInterval:
    """Closed interval ``[lo, hi]`` with outward-rounded MPFR endpoints."""

    lo: mpfr
    hi: mpfr
    precision_bits: int

    def __post_init__(self) -> None:
        if self.precision_bits < 2:
            raise ValueError("precision_bits must be >= 2")
        if not (gmpy2.is_finite(self.lo) and gmpy2.is_finite(self.hi)):
            raise ValueError("interval endpoints must be finite")
        if self.lo > self.hi:
            raise ValueError(f"empty interval: lo={self.lo} > hi={self.hi}")

    # -- construction -------------------------------------------------

    @classmethod
    def enclose(cls, value: Union[int, Fraction], precision_bits: int) -> "CertifiedInterval":
        """Tightest ``precision_bits`` enclosure of an exact rational."""
        q = mpq(value.numerator, value.denominator) if isinstance(value, Fraction) else mpq(value)
        return cls(
            mpfr(q, precision_bits, _down(precision_bits)),
            mpfr(q, precision_bits, _up(precision_bits)),
            precision_bits,
        )

    @classmethod
    def coerce(cls, value: Union["CertifiedInterval", Scalar], precision_bits: int) -> "CertifiedInterval":
        if isinstance(value, CertifiedInterval):
            return value
        if isinstance(value, str):
            return interval_from_decimal(value, precision_bits)
        if isinstance(value, (int, Fraction)):
            return cls.enclose(value, precision_bits)
        raise TypeError(f"cannot build an interval from {type(value).__name__}")

    # -- inspection ---------------------------------------------------

    @property
    def width(self) -> mpfr:
        return _up(self.precision_bits).sub(self.hi, self.lo)

    @property
    def midpoint(self) -> Fraction:
        return (_as_fraction(self.lo) + _as_fraction(self.hi)) / 2

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, value: Union["CertifiedInterval", int, Fraction, mpfr]) -> bool:
        if isinstance(value, CertifiedInterval):
            return self.lo <= value.lo and value.hi <= self.hi
        if isinstance(value, mpfr):
            value = _as_fraction(value)
        return _as_fraction(self.lo) <= value <= _as_fraction(self.hi)

    def __contains__(self, value) -> bool:
        return self.contains(value)

    def overlaps(self, other: "CertifiedInterval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersection(self, other: "CertifiedInterval") -> "CertifiedInterval":
        if not self.overlaps(other):
            raise ValueError("intervals are disjoint")
        return CertifiedInterval(
            max(self.lo, other.lo), min(self.hi, other.hi),
            max(self.precision_bits, other.precision_bits),
        )

    def lower_decimal(self, digits: int = 30) -> str:
        """Lower endpoint rounded down to ``digits`` significant digits."""
        ctx = Context(prec=digits, rounding=ROUND_FLOOR)
        return str(ctx.plus(_as_decimal(self.lo)))

    def upper_decimal(self, digits: int = 30) -> str:
        """Upper endpoint rounded up to ``digits`` significant digits."""
        ctx = Context(prec=digits, rounding=ROUND_CEILING)
        return str(ctx.plus(_as_decimal(self.hi)))

    def rounded(self, decimals: int) -> Union[str, None]:
        """Round-half-even to ``decimals`` places, or None if the endpoints disagree."""
        quantum = Decimal(1).scaleb(-decimals)
        ctx = Context(prec=decimals + 64, rounding=ROUND_HALF_EVEN)
        lo = _as_decimal(self.lo).quantize(quantum, context=ctx)
        hi = _as_decimal(self.hi).quantize(quantum, context=ctx)
        return str(lo) if lo == hi else None

    def __float__(self) -> float:
        return float(self.midpoint)

    def __str__(self) -> str:
        return f"[{self.lower_decimal(20)}, {self.upper_decimal(20)}]"

    def __repr__(self) -> str:
        return f"CertifiedInterval({self.lower_decimal(25)}, {self.upper_decimal(25)}, bits={self.precision_bits})"

    # -- arithmetic ---------------------------------------------------

    def _prec(self, other: "CertifiedInterval") -> int:
        return max(self.precision_bits, other.precision_bits)

    def __neg__(self) -> "CertifiedInterval":
        return CertifiedInterval(-self.hi, -self.lo, self.precision_bits)

    def __add__(self, other) -> "CertifiedInterval":
        other = CertifiedInterval.coerce(other, self.precision_bits)
        p = self._prec(other)
        return CertifiedInterval(_down(p).add(self.lo, other.lo), _up(p).add(self.hi, other.hi), p)

    __radd__ = __add__

    def __sub__(self, other) -> "CertifiedInterval":
        other = CertifiedInterval.coerce(other, self.precision_bits)
        p = self._prec(other)
        return CertifiedInterval(_down(p).sub(self.lo, other.hi), _up(p).sub(self.hi, other.lo), p)

    def __rsub__(self, other) -> "CertifiedInterval":
        return CertifiedInterval.coerce(other, self.precision_bits) - self

    def __mul__(self, other) -> "CertifiedInterval":
        other = CertifiedInterval.coerce(other, self.precision_bits)
        p = self._prec(other)
        down, up = _down(p), _up(p)
        pairs = [(a, b) for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return CertifiedInterval(
            min(down.mul(a, b) for a, b in pairs),
            max(up.mul(a, b) for a, b in pairs),
            p,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "CertifiedInterval":
        other = CertifiedInterval.coerce(other, self.precision_bits)
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError("divisor interval contains zero")
        p = self._prec(other)
        down, up = _down(p), _up(p)
        pairs = [(a, b) for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return CertifiedInterval(
            min(down.div(a, b) for a, b in pairs),
            max(up.div(a, b) for a, b in pairs),
            p,
        )

    def __rtruediv__(self, other) -> "CertifiedInterval":
        return CertifiedInterval.coerce(other, self.precision_bits) / self

    def __pow__(self, exponent) -> "CertifiedInterval":
        if isinstance(exponent, int):
            return _int_power(self, exponent)
        return pow_interval(self, CertifiedInterval.coerce(exponent, self.precision_bits))

    def exp(self) -> "CertifiedInterval":
        p = self.precision_bits
        return CertifiedInterval(_down(p).exp(self.lo), _up(p).exp(self.hi), p)

    def log(self) -> "CertifiedInterval":
        if self.lo <= 0:
            raise DomainError("log of an interval that is not strictly positive")
        p = self.precision_bits
        return CertifiedInterval(_down(p).log(self.lo), _up(p).log(self.hi), p)

    def log2(self) -> "CertifiedInterval":
        return log2_interval(self)

    def sqrt(self) -> "CertifiedInterval":
        if self.lo < 0:
            raise DomainError("sqrt of an interval with negative part")
        p = self.precision_bits
        return CertifiedInterval(_down(p).sqrt(self.lo), _up(p).sqrt(self.hi), p)


def _int_power(x: CertifiedInterval, k: int) -> CertifiedInterval:
    p = x.precision_bits
    if k < 0:
        return 1 / _int_power(x, -k)
    if k == 0:
        return CertifiedInterval(mpfr(1), mpfr(1), p)
    down, up = _down(p), _up(p)
    if k % 2 == 1 or x.lo >= 0:
        return CertifiedInterval(down.pow(x.lo, k), up.pow(x.hi, k), p)
    if x.hi <= 0:
        return CertifiedInterval(down.pow(x.hi, k), up.pow(x.lo, k), p)
    return CertifiedInterval(mpfr(0), max(up.pow(x.lo, k), up.pow(x.hi, k)), p)


def interval_from_decimal(s: str, precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    """Enclose the exact rational value of a decimal numeral."""
    if not isinstance(s, str) or not _DECIMAL_RE.fullmatch(s.strip()):
        raise DecimalParseError(f"not a decimal numeral: {s!r}")
    return CertifiedInterval.enclose(Fraction(s.strip()), precision_bits)


def exact(value: Union[int, Fraction], precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    return CertifiedInterval.enclose(value, precision_bits)


def log2_interval(x: CertifiedInterval) -> CertifiedInterval:
    if x.lo <= 0:
        raise DomainError("log2 of an interval that is not strictly positive")
    p = x.precision_bits
    return CertifiedInterval(_down(p).log2(x.lo), _up(p).log2(x.hi), p)


def pow_interval(base: CertifiedInterval, exponent: CertifiedInterval) -> CertifiedInterval:
    """Enclosure of ``base ** exponent`` for a strictly positive base.

    ``exponent * log(base)`` is bilinear in the two arguments, so the
    extremes sit at the four corners.
    """
    if base.lo <= 0:
        raise DomainError("pow requires a strictly positive base")
    p = max(base.precision_bits, exponent.precision_bits)
    down, up = _down(p), _up(p)
    corners = [(b, e) for b in (base.lo, base.hi) for e in (exponent.lo, exponent.hi)]
    return CertifiedInterval(
        min(down.pow(b, e) for b, e in corners),
        max(up.pow(b, e) for b, e in corners),
        p,
    )


def compare_strict(a: CertifiedInterval, b: CertifiedInterval) -> Ordering:
    if a.hi < b.lo:
        return Ordering.LESS
    if a.lo > b.hi:
        return Ordering.GREATER
    return Ordering.INCONCLUSIVE


def decide(
    compare: Callable[[int], Ordering],
    precision_bits: int = DEFAULT_PRECISION,
    cap: int = MAX_PRECISION,
) -> tuple[Ordering, int]:
    """Re-run ``compare`` at doubling precision until it is conclusive or the cap is hit."""
    p = precision_bits
    while True:
        outcome = compare(p)
        if outcome is not Ordering.INCONCLUSIVE or p >= cap:
            return outcome, p
        p = min(2 * p, cap)


# -- constants ---------------------------------------------------------


@functools.lru_cache(maxsize=64)
def pi_interval(precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    p = precision_bits
    return CertifiedInterval(_down(p).const_pi(), _up(p).const_pi(), p)


def sqrt2(precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    return exact(2, precision_bits).sqrt()


def two_over_sqrt_pi(precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    return 2 / pi_interval(precision_bits).sqrt()


def _bernoulli(m: int) -> list[Fraction]:
    """B_0..B_m (with B_1 = +1/2), Akiyama-Tanigawa."""
    out = []
    a = [Fraction(0)] * (m + 1)
    for i in range(m + 1):
        a[i] = Fraction(1, i + 1)
        for j in range(i, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    return out


def gamma_series_enclosure(
    precision_bits: int = DEFAULT_PRECISION, shift: int = 40, terms: int = 40
) -> CertifiedInterval:
    """Euler-Mascheroni constant from the asymptotic expansion of digamma.

    gamma = H_{N-1} - psi(N) with psi(N) = ln N - 1/(2N) - sum B_2k / (2k N^2k);
    for real N > 0 the truncation error is bounded by the first omitted term.
    Independent of the embedded literal.
    """
    N = shift
    bern = _bernoulli(2 * terms + 2)
    harmonic = sum(Fraction(1, j) for j in range(1, N))
    tail = sum(bern[2 * k] / (2 * k * Fraction(N) ** (2 * k)) for k in range(1, terms + 1))
    remainder = abs(bern[2 * terms + 2]) / ((2 * terms + 2) * Fraction(N) ** (2 * terms + 2))
    exact_part = harmonic + Fraction(1, 2 * N) + tail
    p = precision_bits
    core = exact(exact_part, p) - exact(N, p).log()
    slack = exact(remainder, p)
    return CertifiedInterval(_down(p).sub(core.lo, slack.hi), _up(p).add(core.hi, slack.hi), p)


@functools.lru_cache(maxsize=None)
def _verified_literal() -> bool:
    bits = math.ceil(GAMMA_CHECK_DIGITS * math.log2(10)) + 16
    series = gamma_series_enclosure(bits)
    literal = CertifiedInterval(
        mpfr(mpq(_GAMMA_LITERAL.numerator, _GAMMA_LITERAL.denominator), bits, _down(bits)),
        mpfr(mpq((_GAMMA_LITERAL + _GAMMA_ULP).numerator, (_GAMMA_LITERAL + _GAMMA_ULP).denominator), bits, _up(bits)),
        bits,
    )
    if series.width > mpfr(10) ** -GAMMA_CHECK_DIGITS or not series.overlaps(literal):
        raise RuntimeError(
            "embedded Euler-Mascheroni literal disagrees with the series enclosure; aborting"
        )
    return True


@functools.lru_cache(maxsize=64)
def euler_gamma(precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    if precision_bits < MIN_PRECISION:
        raise ValueError(f"precision_bits must be >= {MIN_PRECISION}")
    if precision_bits > GAMMA_MAX_PRECISION:
        raise InsufficientDigitsError(
            f"insufficient digits: the embedded constant supports at most "
            f"{GAMMA_MAX_PRECISION} bits, {precision_bits} requested"
        )
    _verified_literal()
    p = precision_bits
    lo = _GAMMA_LITERAL
    hi = _GAMMA_LITERAL + _GAMMA_ULP
    return CertifiedInterval(
        mpfr(mpq(lo.numerator, lo.denominator), p, _down(p)),
        mpfr(mpq(hi.numerator, hi.denominator), p, _up(p)),
        p,
    )


@functools.lru_cache(maxsize=64)
def d_constant(field: Union[Field, str], precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    """Doubling factor: e^(1 - gamma/2)/sqrt 2 (real) or e^(1/2 - gamma/2) (complex)."""
    field = Field.parse(field)
    if precision_bits < MIN_PRECISION:
        raise ValueError(f"precision_bits must be >= {MIN_PRECISION}")
    half_gamma = euler_gamma(precision_bits) / 2
    if field is Field.REAL:
        return (1 - half_gamma).exp() / sqrt2(precision_bits)
    return (Fraction(1, 2) - half_gamma).exp()


def log2_d(field: Union[Field, str], precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    return log2_interval(d_constant(field, precision_bits))
