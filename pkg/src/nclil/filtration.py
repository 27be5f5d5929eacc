"""Filtered matrix-algebra models and their conditional expectations.

A model is a tower of unital subalgebras N_0 = C*1 <= N_1 <= ... <= N_n
inside a matrix algebra of total dimension m^n, together with the
trace-preserving conditional expectations E_k onto each level.  Three
concrete realizations are provided:

- "tensor":   N_k = M_{m^k} (x) 1, so E_k is a normalized partial trace
              over the last n-k tensor factors.
- "pinching": N_k is M_{m^k} embedded with multiplicity, i.e. block
              diagonal matrices diag(y, ..., y) with m^{n-k} repeated
              blocks of size m^k.  E_k pinches to the block diagonal and
              averages the blocks.
- "diagonal": the commutative algebra of functions on m^n sample points,
              stored as vectors; E_k averages over the cells determined by
              the first k coordinates.

All three satisfy the module property, trace preservation, the tower rule,
positivity and L_p contractivity, which verify_ce_axioms samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import operators as op
from .errors import ConfigError, ShapeError
from .operators import Operator
from .rng import stream_rng

DENSE_DIM_CAP = 4096       # dense kinds refuse to build beyond this
DIAGONAL_DIM_CAP = 1 << 24
CE_AXIOM_TOL = 1e-8

_KINDS = ("tensor", "pinching", "diagonal")


@dataclass(frozen=True)
class AlgebraModel:
    """A concrete filtration: kind, site dimension m, depth n."""

    kind: str
    m: int
    n: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}, expected one of {_KINDS}")
        if self.m < 2:
            raise ConfigError(f"site dimension must be >= 2, got {self.m}")
        if self.n < 1:
            raise ConfigError(f"depth must be >= 1, got {self.n}")
        dim = self.m ** self.n
        cap = DIAGONAL_DIM_CAP if self.kind == "diagonal" else DENSE_DIM_CAP
        if dim > cap:
            raise ConfigError(f"total dimension {dim} exceeds the {self.kind} cap {cap}")

    @property
    def dim(self) -> int:
        return self.m ** self.n

    @property
    def levels(self) -> range:
        return range(self.n + 1)

    def level_dim(self, k: int) -> int:
        return self.m ** k

    def to_json(self) -> dict:
        return {"kind": self.kind, "m": self.m, "n": self.n}

    @staticmethod
    def from_json(obj: dict) -> "AlgebraModel":
        return AlgebraModel(str(obj["kind"]), int(obj["m"]), int(obj["n"]))


def _check_level(model: AlgebraModel, k: int):
    if not 0 <= k <= model.n:
        raise ConfigError(f"level {k} outside 0..{model.n}")


def _check_element(model: AlgebraModel, x: Operator):
    if x.dim != model.dim:
        raise ShapeError(f"operator dim {x.dim} does not match model dim {model.dim}")
    if model.kind == "diagonal" and not x.diagonal:
        raise ShapeError("diagonal models act on diagonally stored operators")
    if model.kind != "diagonal" and x.diagonal:
        raise ShapeError(f"{model.kind} model needs dense storage")


def conditional_expectation(model: AlgebraModel, x: Operator, k: int) -> Operator:
    """Trace-preserving conditional expectation of x onto level k."""
    _check_level(model, k)
    _check_element(model, x)
    if k == model.n:
        return x
    m = model.m
    if model.kind == "diagonal":
        cells = model.level_dim(k)
        width = model.dim // cells
        v = x.data.reshape(cells, width)
        means = v.mean(axis=1)
        out = np.repeat(means, width)
        return Operator(out, hermitian=x.hermitian, diagonal=True)
    da = model.level_dim(k)        # kept part
    db = model.dim // da           # averaged part
    t = x.data.reshape(da, db, da, db)
    if model.kind == "tensor":
        y = np.einsum("ajbj->ab", t) / db
        out = np.kron(y, np.eye(db))
    else:  # pinching: blocks of size m^k on the diagonal, then average them
        t = x.data.reshape(db, da, db, da)
        y = np.einsum("iaib->ab", t) / db
        out = np.kron(np.eye(db), y)
    return Operator(out, hermitian=x.hermitian)


def random_level_element(model: AlgebraModel, k: int, rng: np.random.Generator,
                         hermitian: bool = True, positive: bool = False) -> Operator:
    """Random element of the level-k subalgebra, O(1)-normalized."""
    _check_level(model, k)
    d = model.level_dim(k)
    rest = model.dim // d
    if model.kind == "diagonal":
        v = rng.standard_normal(d)
        if positive:
            v = np.abs(v)
        return Operator(np.repeat(v, rest), hermitian=True, diagonal=True)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    y = (g + g.conj().T) / (2.0 * np.sqrt(d))
    if positive:
        y = y @ y.conj().T  # hermitian square, psd
        y = 0.5 * (y + y.conj().T)
    if not hermitian and not positive:
        y = g / np.sqrt(d)
    if model.kind == "tensor":
        out = np.kron(y, np.eye(rest))
    else:
        out = np.kron(np.eye(rest), y)
    return Operator(out, hermitian=hermitian or positive)


def random_full_element(model: AlgebraModel, rng: np.random.Generator,
                        hermitian: bool = True) -> Operator:
    return random_level_element(model, model.n, rng, hermitian=hermitian)


@dataclass
class CEAxiomReport:
    """Worst-case residuals over sampled axiom checks."""

    model: AlgebraModel
    samples: int
    module_property: float = 0.0
    trace_preservation: float = 0.0
    tower: float = 0.0
    positivity: float = 0.0
    contraction: float = 0.0
    tol: float = CE_AXIOM_TOL

    @property
    def worst(self) -> float:
        return max(self.module_property, self.trace_preservation, self.tower,
                   self.positivity, self.contraction)

    @property
    def passed(self) -> bool:
        return self.worst <= self.tol

    def to_json(self) -> dict:
        return {
            "model": self.model.to_json(),
            "samples": self.samples,
            "module_property": self.module_property,
            "trace_preservation": self.trace_preservation,
            "tower": self.tower,
            "positivity": self.positivity,
            "contraction": self.contraction,
            "worst": self.worst,
            "passed": self.passed,
        }


def _opnorm(x: Operator) -> float:
    return op.lp_norm(x, np.inf)


def verify_ce_axioms(model: AlgebraModel, samples: int = 100, seed: int = 0,
                     ps: Sequence[float] = (1.0, 2.0, 4.0, np.inf)) -> CEAxiomReport:
    """Sample the conditional-expectation axioms and report worst residuals.

    Per sample: draw levels j <= k, a full random x, and a, b in level k;
    check E_k(a x b) = a E_k(x) b, tau(E_k x) = tau(x), E_j E_k = E_j,
    E_k(x* x) >= 0, and ||E_k x||_p <= ||x||_p for each p.
    """
    if samples < 1:
        raise ConfigError("need at least one sample")
    rep = CEAxiomReport(model=model, samples=samples)
    rng = stream_rng(seed, label=f"ce-axioms-{model.kind}-{model.m}-{model.n}")
    for _ in range(samples):
        k = int(rng.integers(0, model.n + 1))
        j = int(rng.integers(0, k + 1))
        x = random_full_element(model, rng, hermitian=True)
        a = random_level_element(model, k, rng)
        b = random_level_element(model, k, rng)
        ex = conditional_expectation(model, x, k)

        lhs = conditional_expectation(model, a @ x @ b, k)
        rhs = a @ ex @ b
        rep.module_property = max(rep.module_property, _opnorm(lhs - rhs))

        rep.trace_preservation = max(
            rep.trace_preservation,
            abs(complex(op.normalized_trace(ex)) - complex(op.normalized_trace(x))))

        ejk = conditional_expectation(model, ex, j)
        ej = conditional_expectation(model, x, j)
        rep.tower = max(rep.tower, _opnorm(ejk - ej))

        sq = x @ x if model.kind == "diagonal" else op.symmetrize(x.adjoint() @ x)
        esq = conditional_expectation(model, sq, k)
        rep.positivity = max(rep.positivity, max(0.0, -op.min_eigenvalue(esq)))

        for p in ps:
            gap = op.lp_norm(ex, p) - op.lp_norm(x, p)
            rep.contraction = max(rep.contraction, gap)
    return rep
