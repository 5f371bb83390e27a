"""Recursive upper-bound sequences for the multilinear BH constants.

Two kinds of sequence are evaluated here, never conflated:

* ``M``: M_1 = 1, M_2 = lead, M_n = D * M_{n/2} (n even), D * M_{(n+1)/2} (n odd).
  ``lead`` is sqrt 2 for real scalars and 2/sqrt(pi) for complex scalars.
* ``J``: J_n = C_n for n <= 2^k0, D * J_{n/2} for even n > 2^k0, and
  D * J_{(n-1)/2}^((n-1)/2n) * J_{(n+1)/2}^((n+1)/2n) for odd n > 2^k0,
  where C_n are externally supplied base constants.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Union

from .precision import (
    DEFAULT_PRECISION,
    CertifiedInterval,
    DomainError,
    Field,
    d_constant,
    exact,
    interval_from_decimal,
    pow_interval,
    sqrt2,
    two_over_sqrt_pi,
)

BASE_SCHEMA = "bhconst.base/1"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Block:
    """B_k = {2^(k-1)+1, ..., 2^k}."""

    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise DomainError("block index must be >= 1")

    @property
    def first(self) -> int:
        return 2 ** (self.k - 1) + 1

    @property
    def last(self) -> int:
        return 2**self.k

    def __contains__(self, n: int) -> bool:
        return self.first <= n <= self.last


def block_of(n: int) -> Block:
    if n < 2:
        raise DomainError(f"blocks cover n >= 2, got {n}")
    return Block((n - 1).bit_length())


# -- base constants ----------------------------------------------------


def _reject_float(token: str):
    raise ConfigError(f"binary float {token!r} in base config; decimal values must be strings")


@dataclass(frozen=True)
class BaseConstants:
    """Configured prefix C_1..C_{2^k0} of a base constant sequence.

    Entries may be sparse: evaluating the J recursion only touches the
    entries it needs, and a missing one raises ConfigError.
    """

    field: Field
    k0: int
    values: Mapping[int, str]
    provenance: Mapping[int, str] = dataclass_field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "field", Field.parse(self.field))
        if self.k0 < 0:
            raise ConfigError("k0 must be >= 0")
        top = 2**self.k0
        for n, value in self.values.items():
            if not 1 <= n <= top:
                raise ConfigError(f"base entry n={n} outside 1..{top}")
            if not isinstance(value, str):
                raise ConfigError(f"base entry n={n} must be a decimal string")
            interval_from_decimal(value)
            if Fraction(value.strip()) < 1:
                raise ConfigError(f"base entry C_{n}={value} is below 1")

    @property
    def is_complete(self) -> bool:
        return len(self.values) == 2**self.k0

    @cached_property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    def value(self, n: int, precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
        try:
            return interval_from_decimal(self.values[n], precision_bits)
        except KeyError:
            raise ConfigError(
                f"base constant C_{n} is not configured (field={self.field.value}, k0={self.k0})"
            ) from None

    def to_dict(self) -> dict:
        return {
            "schema": BASE_SCHEMA,
            "field": self.field.value,
            "k0": self.k0,
            "entries": [
                {"n": n, "value": self.values[n], "provenance": self.provenance.get(n, "")}
                for n in sorted(self.values)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> "BaseConstants":
        if data.get("schema") != BASE_SCHEMA:
            raise ConfigError(f"unsupported base schema {data.get('schema')!r}")
        try:
            entries = data["entries"]
            values = {int(e["n"]): e["value"] for e in entries}
            provenance = {int(e["n"]): str(e.get("provenance", "")) for e in entries}
            return cls(Field.parse(data["field"]), int(data["k0"]), values, provenance)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed base config: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "BaseConstants":
        return cls.from_dict(json.loads(text, parse_float=_reject_float))


def load_base(path: Union[str, Path]) -> BaseConstants:
    return BaseConstants.from_json(Path(path).read_text())


def save_base(base: BaseConstants, path: Union[str, Path]) -> None:
    Path(path).write_text(base.to_json())


def bundled_base_name(field: Union[Field, str], k0: int) -> str:
    return f"base_{Field.parse(field).value}_k{k0}.json"


def bundled_base(field: Union[Field, str], k0: int) -> BaseConstants:
    """Base constants shipped with the package for one (field, k0)."""
    resource = resources.files("bhconst") / "data" / bundled_base_name(field, k0)
    if not resource.is_file():
        raise ConfigError(f"no bundled base for field={Field.parse(field).value}, k0={k0}")
    return BaseConstants.from_json(resource.read_text())


# -- sequences ----------------------------------------------------------


class SequenceKind(str, enum.Enum):
    M = "M"
    J = "J"


@dataclass(frozen=True)
class SequenceSpec:
    field: Field
    kind: SequenceKind
    base: Optional[BaseConstants] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "field", Field.parse(self.field))
        object.__setattr__(self, "kind", SequenceKind(self.kind))
        if self.kind is SequenceKind.J:
            if self.base is None:
                raise ConfigError("a J sequence needs base constants")
            if self.base.field is not self.field:
                raise ConfigError("base constants belong to the other scalar field")

    @classmethod
    def m(cls, field: Union[Field, str]) -> "SequenceSpec":
        return cls(Field.parse(field), SequenceKind.M)

    @classmethod
    def j(cls, base: BaseConstants) -> "SequenceSpec":
        return cls(base.field, SequenceKind.J, base)

    @property
    def cache_tag(self) -> str:
        return self.base.fingerprint if self.base is not None else "-"


LEAD_NAMES = {Field.REAL: "sqrt(2)", Field.COMPLEX: "2/sqrt(pi)"}


def lead_constant(field: Union[Field, str], precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    """M_2: sqrt 2 for real scalars, 2/sqrt(pi) for complex scalars."""
    if Field.parse(field) is Field.REAL:
        return sqrt2(precision_bits)
    return two_over_sqrt_pi(precision_bits)


# (kind, field, base fingerprint, n, precision) -> interval.  Inserts are
# idempotent, so concurrent writers can only store identical values.
_CACHE: dict[tuple, CertifiedInterval] = {}


def clear_cache() -> None:
    _CACHE.clear()


def cache_size() -> int:
    return len(_CACHE)


def m_sequence(
    n: int, field: Union[Field, str], precision_bits: int = DEFAULT_PRECISION, memo: bool = True
) -> CertifiedInterval:
    field = Field.parse(field)
    if n < 1:
        raise DomainError("M_n is defined for n >= 1")
    if n == 1:
        return exact(1, precision_bits)
    if n == 2:
        return lead_constant(field, precision_bits)
    key = (SequenceKind.M, field, "-", n, precision_bits)
    if memo and key in _CACHE:
        return _CACHE[key]
    half = n // 2 if n % 2 == 0 else (n + 1) // 2
    value = d_constant(field, precision_bits) * m_sequence(half, field, precision_bits, memo)
    if memo:
        _CACHE.setdefault(key, value)
    return value


def j_sequence(
    n: int, spec: SequenceSpec, precision_bits: int = DEFAULT_PRECISION, memo: bool = True
) -> CertifiedInterval:
    if spec.kind is not SequenceKind.J:
        raise ConfigError("j_sequence needs a J sequence spec")
    if n < 1:
        raise DomainError("J_n is defined for n >= 1")
    base = spec.base
    if n <= 2**base.k0:
        return base.value(n, precision_bits)
    key = (SequenceKind.J, spec.field, spec.cache_tag, n, precision_bits)
    if memo and key in _CACHE:
        return _CACHE[key]
    d = d_constant(spec.field, precision_bits)
    if n % 2 == 0:
        value = d * j_sequence(n // 2, spec, precision_bits, memo)
    else:
        left = j_sequence((n - 1) // 2, spec, precision_bits, memo)
        right = j_sequence((n + 1) // 2, spec, precision_bits, memo)
        value = (
            d
            * pow_interval(left, exact(Fraction(n - 1, 2 * n), precision_bits))
            * pow_interval(right, exact(Fraction(n + 1, 2 * n), precision_bits))
        )
    if memo:
        _CACHE.setdefault(key, value)
    return value


def evaluate(n: int, spec: SequenceSpec, precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    if spec.kind is SequenceKind.M:
        return m_sequence(n, spec.field, precision_bits)
    return j_sequence(n, spec, precision_bits)


def closed_form_m(n: int, field: Union[Field, str], precision_bits: int = DEFAULT_PRECISION) -> CertifiedInterval:
    """lead * D^(k-1) for n in B_k."""
    k = block_of(n).k
    return lead_constant(field, precision_bits) * d_constant(field, precision_bits) ** (k - 1)
