"""Desk-scale checks of the BH inequality on explicit n-linear forms.

Plain floating point throughout; this is a sanity oracle, not a proof.
The real sup norm is exact (vertex enumeration); the complex sup norm is
a lower bound from alternating maximization, so complex ratios are upper
estimates and only serve as smoke tests.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .precision import CertifiedInterval, Field

DEFAULT_VERTEX_CAP = 22
ASCENT_RESTARTS = 16
ASCENT_TOL = 1e-10
ASCENT_MAX_SWEEPS = 500
RATIO_RTOL = 1e-12
TENSOR_SCHEMA = "bhconst.tensor/1"


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CoefficientTensor:
    """Coefficients U(e_i1, ..., e_in) of an n-linear form on K^N."""

    field: Field
    coefficients: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "field", Field.parse(self.field))
        dtype = float if self.field is Field.REAL else complex
        coeffs = np.array(self.coefficients, dtype=dtype)
        if coeffs.ndim < 1 or len(set(coeffs.shape)) != 1 or coeffs.shape[0] < 1:
            raise ValueError(f"coefficients must be an N x ... x N array, got shape {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def n(self) -> int:
        return self.coefficients.ndim

    @property
    def N(self) -> int:
        return self.coefficients.shape[0]

    def __call__(self, *vectors: np.ndarray) -> complex:
        out = self.coefficients
        for z in vectors:
            out = np.tensordot(z, out, axes=(0, 0))
        return out.item()

    def scaled(self, t: float) -> "CoefficientTensor":
        return CoefficientTensor(self.field, self.coefficients * t, self.seed)

    def permuted(self, order: Sequence[int]) -> "CoefficientTensor":
        return CoefficientTensor(self.field, np.transpose(self.coefficients, order), self.seed)

    def to_dict(self) -> dict:
        flat = self.coefficients.ravel()  # row-major
        if self.field is Field.REAL:
            entries = [repr(float(c)) for c in flat]
        else:
            entries = [[repr(float(c.real)), repr(float(c.imag))] for c in flat]
        return {"schema": TENSOR_SCHEMA, "field": self.field.value, "n": self.n, "N": self.N, "coefficients": entries}

    @classmethod
    def from_dict(cls, data: dict) -> "CoefficientTensor":
        if data.get("schema") != TENSOR_SCHEMA:
            raise ValueError(f"unsupported tensor schema {data.get('schema')!r}")
        field, n, N = Field.parse(data["field"]), int(data["n"]), int(data["N"])
        raw = data["coefficients"]
        if len(raw) != N**n:
            raise ValueError(f"expected {N**n} coefficients, got {len(raw)}")
        if field is Field.REAL:
            values = [float(_decimal_str(c)) for c in raw]
        else:
            values = [complex(float(_decimal_str(re)), float(_decimal_str(im))) for re, im in raw]
        return cls(field, np.array(values).reshape((N,) * n))


def _decimal_str(value) -> str:
    if not isinstance(value, str):
        raise ValueError("tensor coefficients must be decimal strings")
    return value


def load_tensor(path: Union[str, Path]) -> CoefficientTensor:
    return CoefficientTensor.from_dict(json.loads(Path(path).read_text()))


def save_tensor(form: CoefficientTensor, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(form.to_dict(), indent=2) + "\n")


def littlewood_form() -> CoefficientTensor:
    """The 2x2 bilinear form z1 w1 + z1 w2 + z2 w1 - z2 w2."""
    return CoefficientTensor(Field.REAL, [[1.0, 1.0], [1.0, -1.0]])


# -- the two sides of the inequality ---------------------------------------------


def mixed_norm_lhs(form: CoefficientTensor) -> float:
    """l_p norm of the coefficients with p = 2n/(n+1)."""
    n = form.n
    p = 2 * n / (n + 1)
    a = np.abs(form.coefficients).ravel()
    scale = a.max()
    if scale == 0:
        return 0.0
    return float(scale * np.sum((a / scale) ** p) ** ((n + 1) / (2 * n)))


def _sign_vectors(N: int, halve: bool = False) -> np.ndarray:
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=N)))
    # first coordinate fixed to +1 when U(-z, ...) = -U(z, ...) makes the rest redundant
    return signs[signs[:, 0] > 0] if halve else signs


def sup_norm_real_exact(form: CoefficientTensor, cap: int = DEFAULT_VERTEX_CAP) -> float:
    """max |U| over [-1, 1]^N in every slot.

    The maximum of a multilinear form over a product of cubes is attained
    at vertices.  The first n-1 slots are enumerated (the first one halved
    by odd symmetry); the last slot is solved in closed form, since
    max over signs of sum g_i s_i is sum |g_i|.
    """
    if form.field is not Field.REAL:
        raise ValueError("exact vertex enumeration needs a real form")
    n, N = form.n, form.N
    if n * N > cap:
        raise OracleSizeError(f"n*N = {n * N} exceeds the vertex enumeration cap {cap}")
    partial = form.coefficients[np.newaxis, ...]  # leading axis indexes sign patterns
    for slot in range(n - 1):
        signs = _sign_vectors(N, halve=slot == 0)
        # contract the next coefficient axis against every sign pattern
        partial = np.einsum("a i ..., b i -> a b ...", partial, signs)
        partial = partial.reshape((-1,) + partial.shape[2:])
    return float(np.abs(partial).sum(axis=-1).max())


def sup_norm_real_grid(form: CoefficientTensor, resolution: float = 1 / 8) -> float:
    """Brute-force max |U| over a uniform grid on [-1, 1] in every coordinate."""
    steps = int(round(2 / resolution))
    axis = np.linspace(-1.0, 1.0, steps + 1)
    n, N = form.n, form.N
    grid = np.array(list(itertools.product(axis, repeat=N)))  # points of one slot
    partial = form.coefficients[np.newaxis, ...]
    for _ in range(n):
        partial = np.einsum("a i ..., b i -> a b ...", partial, grid)
        partial = partial.reshape((-1,) + partial.shape[2:])
    return float(np.abs(partial).max())


@dataclass
class AscentRun:
    value: float
    history: list[float]
    sweeps: int
    cap_reached: bool
    point: list[np.ndarray] = dataclass_field(repr=False, default_factory=list)


def _partial_gradient(coeffs: np.ndarray, z: list[np.ndarray], slot: int) -> np.ndarray:
    out = coeffs
    # contract every other slot, highest axis first so indices stay valid
    for j in reversed(range(len(z))):
        if j != slot:
            out = np.tensordot(out, z[j], axes=([j], [0]))
    return out


def complex_ascent(
    form: CoefficientTensor,
    start: Sequence[np.ndarray],
    tol: float = ASCENT_TOL,
    max_sweeps: int = ASCENT_MAX_SWEEPS,
) -> AscentRun:
    """Alternating maximization of |U| over the closed polydisc from one start.

    With every slot but j fixed, U = sum_i g_i z_j[i] and the best z_j puts
    each coordinate at the conjugate phase of g_i, giving sum |g_i|.
    Coordinates with g_i = 0 keep their previous phase.
    """
    coeffs = form.coefficients.astype(complex)
    z = [np.asarray(v, dtype=complex).copy() for v in start]
    value = abs(np.tensordot(_partial_gradient(coeffs, z, form.n - 1), z[-1], axes=1))
    history = [value]
    for sweep in range(1, max_sweeps + 1):
        for slot in range(form.n):
            g = _partial_gradient(coeffs, z, slot)
            mag = np.abs(g)
            nz = mag > 0
            z[slot][nz] = np.conj(g[nz]) / mag[nz]
        new = abs(np.tensordot(_partial_gradient(coeffs, z, form.n - 1), z[-1], axes=1))
        history.append(new)
        if new - value < tol:
            return AscentRun(max(new, value), history, sweep, False, z)
        value = new
    return AscentRun(value, history, max_sweeps, True, z)


def sup_norm_complex_ascent(
    form: CoefficientTensor,
    restarts: int = ASCENT_RESTARTS,
    tol: float = ASCENT_TOL,
    seed: int = 0,
    max_sweeps: int = ASCENT_MAX_SWEEPS,
) -> float:
    """Lower bound on sup |U| over the complex polydisc (best of seeded restarts)."""
    rng = np.random.default_rng(seed)
    n, N = form.n, form.N
    best = 0.0
    for r in range(restarts):
        if r == 0:
            start = [np.ones(N, dtype=complex) for _ in range(n)]
        else:
            start = [np.exp(2j * np.pi * rng.random(N)) for _ in range(n)]
        best = max(best, complex_ascent(form, start, tol, max_sweeps).value)
    return best


def sup_norm_complex_grid(form: CoefficientTensor, steps: int = 128) -> float:
    """Max |U| over unimodular points whose phases lie on a grid of 2*pi/steps.

    The first coordinate of the first slot is pinned to 1 (|U| is invariant
    under a global phase).  Only feasible for tiny n*N.
    """
    n, N = form.n, form.N
    phases = np.exp(2j * np.pi * np.arange(steps) / steps)
    first = np.array([(1.0,) + p for p in itertools.product(phases, repeat=N - 1)])
    grid = np.array(list(itertools.product(phases, repeat=N)))
    partial = form.coefficients.astype(complex)[np.newaxis, ...]
    for slot in range(n):
        pts = first if slot == 0 else grid
        partial = np.einsum("a i ..., b i -> a b ...", partial, pts)
        partial = partial.reshape((-1,) + partial.shape[2:])
    return float(np.abs(partial).max())


# -- ratios -----------------------------------------------------------------------


@dataclass(frozen=True)
class RatioSample:
    lhs: float
    sup_norm: float
    ratio: float
    form_seed: Optional[int] = None


def sup_norm(form: CoefficientTensor, **ascent) -> float:
    if form.field is Field.REAL:
        return sup_norm_real_exact(form)
    return sup_norm_complex_ascent(form, **ascent)


def bh_ratio(form: CoefficientTensor, **ascent) -> RatioSample:
    if not np.any(form.coefficients):
        raise ValueError("the zero form has no BH ratio")
    lhs = mixed_norm_lhs(form)
    sup = sup_norm(form, **ascent)
    return RatioSample(lhs, sup, lhs / sup, form.seed)


def random_form(n: int, N: int, field: Union[Field, str], seed: int) -> CoefficientTensor:
    """Real: i.i.d. uniform on [-1, 1].  Complex: i.i.d. uniform on the unit disc."""
    field = Field.parse(field)
    rng = np.random.default_rng(seed)
    shape = (N,) * n
    if field is Field.REAL:
        coeffs = rng.uniform(-1.0, 1.0, size=shape)
    else:
        radius = np.sqrt(rng.uniform(0.0, 1.0, size=shape))
        coeffs = radius * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, size=shape))
    return CoefficientTensor(field, coeffs, seed)


def trial_seed(seed: int, trial: int) -> int:
    """Per-trial seed derived from (master seed, trial index) only."""
    return int(np.random.SeedSequence([seed, trial]).generate_state(1, dtype=np.uint32)[0])


@dataclass
class BatchResult:
    n: int
    N: int
    field: Field
    trials: int
    seed: int
    bound: float
    bound_label: str
    max_ratio: float
    argmax_seed: Optional[int]
    argmax_trial: int
    violations: list[dict]

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_record(self) -> dict:
        return {
            "field": self.field.value,
            "n": self.n,
            "N": self.N,
            "trials": self.trials,
            "seed": self.seed,
            "bound": repr(self.bound),
            "bound_label": self.bound_label,
            "max_ratio": repr(self.max_ratio),
            "argmax_trial": self.argmax_trial,
            "argmax_seed": "" if self.argmax_seed is None else self.argmax_seed,
            "violations": len(self.violations),
            "status": "pass" if self.passed else "violated",
        }


def _bound_value(bound) -> tuple[float, str]:
    if isinstance(bound, CertifiedInterval):
        # lower endpoint: the strictest reading of the certified bound
        return float(bound.lo), f"[{bound.lower_decimal(20)}, {bound.upper_decimal(20)}]"
    if hasattr(bound, "value_at"):
        raise TypeError("pass the bound's value at the arity being tested, not the claim")
    return float(bound), repr(float(bound))


def verify_batch(
    n: int,
    N: int,
    field: Union[Field, str],
    trials: int,
    seed: int,
    bound: Union[CertifiedInterval, float],
    extra_forms: Sequence[CoefficientTensor] = (),
    rtol: float = RATIO_RTOL,
    **ascent,
) -> BatchResult:
    """Check ``lhs / sup <= bound`` on ``trials`` seeded random forms.

    ``extra_forms`` are evaluated first (trial indices 0, 1, ...).  A ratio
    above ``bound * (1 + rtol)`` is recorded as a violation together with
    the seed that reproduces it.
    """
    field = Field.parse(field)
    limit, label = _bound_value(bound)
    forms = list(extra_forms)
    forms += [random_form(n, N, field, trial_seed(seed, t)) for t in range(trials - len(forms))]
    best, best_trial, best_seed = -1.0, -1, None
    violations = []
    for t, form in enumerate(forms):
        options = dict(ascent)
        if form.field is Field.COMPLEX:
            options.setdefault("seed", trial_seed(seed, t))
        sample = bh_ratio(form, **options)
        if sample.ratio > best:
            best, best_trial, best_seed = sample.ratio, t, form.seed
        if sample.ratio > limit * (1 + rtol):
            violations.append({"trial": t, "seed": form.seed, "ratio": repr(sample.ratio)})
    return BatchResult(n, N, field, len(forms), seed, limit, label, best, best_seed, best_trial, violations)
