"""Tail and moment inequalities for matrix martingales.

Every checker reports both sides of its inequality plus the hypothesis
diagnostics, so a failed run distinguishes "hypothesis violated" from
"bound violated".  Bounds that rest on a positive-operator certificate
(column maximal norms, constructive Chebyshev) return the certificate so
callers can re-verify domination independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import operators as op
from .errors import ConfigError, HypothesisViolation, NclilError
from .filtration import AlgebraModel, conditional_expectation
from .martingales import MartingalePath, iterlog
from .operators import Operator

CENTER_TOL = 1e-9       # hypothesis i: |tau(x_n)|
BRACKET_TOL = 1e-9      # hypothesis iii: negative part allowed in D^2 - bracket
HOLD_TOL = 1e-10        # slack on log-scale inequality comparisons
FEAS_TOL = 1e-8         # certificate domination slack
_EXP_CAP = 700.0        # beyond this, report inf and keep the log form


def _log_mean_exp(values: np.ndarray, weights_log: float) -> float:
    top = float(np.max(values))
    return top + math.log(float(np.mean(np.exp(values - top)))) + weights_log


@dataclass(frozen=True)
class ExpIneqParams:
    """Scale data for the exponential moment bound.

    M bounds every difference norm, D2 dominates the final bracket, eps
    sets the Taylor slack, and lam is the tilt.  The tilt must stay in
    [0, sqrt(eps)/(M(1+eps))]; outside it the quadratic comparison that
    drives the bound is simply false, so construction fails fast.
    """

    M: float
    D2: float
    eps: float
    lam: float

    def __post_init__(self):
        if self.M <= 0 or self.D2 <= 0:
            raise ConfigError("M and D2 must be positive")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        cap = self.admissible_max
        if not -1e-15 <= self.lam <= cap * (1.0 + 1e-12) + 1e-300:
            raise HypothesisViolation(
                "lambda", f"tilt {self.lam} outside the admissible range [0, {cap}]")

    @property
    def admissible_max(self) -> float:
        return math.sqrt(self.eps) / (self.M * (1.0 + self.eps))


@dataclass(frozen=True)
class ExpMomentResult:
    log_lhs: float
    log_rhs: float
    lhs: float
    rhs: float
    holds: bool
    margin: float
    checks: dict


def _partial_values(path: MartingalePath, n: int) -> np.ndarray:
    """Spectral values of x_n: eigenvalues (dense) or per-path sums (ensemble).

    Cached on the path, since sweeps evaluate many tilts per martingale.
    """
    cache = path.meta.setdefault("_spectral_values", {})
    if n not in cache:
        x = path.partial(n)
        if x.diagonal:
            cache[n] = np.asarray(x.data, dtype=np.float64)
        else:
            cache[n] = op.eigenvalues(x)
    return cache[n]


def exp_moment_sides(path: MartingalePath, n: int, params: ExpIneqParams) -> ExpMomentResult:
    """Both sides of tau(exp(lam x_n)) <= exp((1+eps) lam^2 D2).

    Hypotheses are re-validated on the supplied path and reported by name:
    (i) tau(x_n) = 0, (ii) ||d_k|| <= M for k <= n, (iii) the bracket at n
    is dominated by D2.  Evaluation happens in log space, so the check
    stays meaningful when either side overflows a float.
    """
    if not 1 <= n <= path.horizon:
        raise ConfigError(f"step {n} outside 1..{path.horizon}")
    vals = _partial_values(path, n)
    center = abs(float(np.mean(vals)))
    if center > CENTER_TOL:
        raise HypothesisViolation("i", f"tau(x_n) = {center:.3e} is not zero")
    worst_d = float(np.max(path.dnorm[:n]))
    if worst_d > params.M * (1.0 + 1e-12):
        raise HypothesisViolation("ii", f"difference norm {worst_d} exceeds M = {params.M}")
    # the bracket is psd, so domination by D2*identity is exactly a
    # comparison of its top eigenvalue, which s2 already records
    bracket_gap = params.D2 - path.s2_of(n)
    if bracket_gap < -BRACKET_TOL * (1.0 + params.D2):
        raise HypothesisViolation("iii", f"bracket exceeds D2 by {-bracket_gap:.3e}")

    log_lhs = _log_mean_exp(params.lam * vals, 0.0)
    log_rhs = (1.0 + params.eps) * params.lam ** 2 * params.D2
    holds = log_lhs <= log_rhs + HOLD_TOL
    lhs = math.exp(log_lhs) if log_lhs < _EXP_CAP else math.inf
    rhs = math.exp(log_rhs) if log_rhs < _EXP_CAP else math.inf
    return ExpMomentResult(
        log_lhs=log_lhs, log_rhs=log_rhs, lhs=lhs, rhs=rhs, holds=bool(holds),
        margin=log_rhs - log_lhs,
        checks={"center": center, "max_dnorm": worst_d, "bracket_gap": float(bracket_gap)})


@dataclass(frozen=True)
class ColumnNormBounds:
    """Two-sided enclosure of the column maximal norm of a finite family.

    ``upper`` comes from a positive certificate a >= x_i* x_i via
    ||a||_{p/2}^{1/2}; ``certificate`` is a^{1/2}, so the factorization
    x_i = (x_i a^{-1/2}) a^{1/2} realizes the bound with contractive left
    factors.  ``lower`` is max_i ||x_i||_p, valid because a single column
    already embeds in the mixed norm.
    """

    lower: float
    upper: float
    certificate: Operator
    p: float
    iterations: int
    candidate: str

    @property
    def gap_ratio(self) -> float:
        if self.upper == 0.0:
            return 1.0
        return self.lower / self.upper


def _feasibilize(a: Operator, cons: Sequence[Operator], rounds: int = 60) -> Operator:
    """Push a up by positive parts of its worst violation until it dominates."""
    for _ in range(rounds):
        worst_gap, worst = 0.0, None
        for c in cons:
            gap = op.min_eigenvalue(a - c)
            if gap < worst_gap:
                worst_gap, worst = gap, c
        if worst is None or worst_gap > -1e-12:
            return a
        a = a + op.pos_part(worst - a)
    return a


def _is_feasible(a: Operator, cons: Sequence[Operator], scale: float) -> bool:
    return all(op.min_eigenvalue(a - c) >= -FEAS_TOL * (1.0 + scale) for c in cons)


def column_maximal_norm_bounds(xs: Sequence[Operator], p: float, max_iters: int = 500,
                               shrink: float = 0.9, rel_tol: float = 1e-6) -> ColumnNormBounds:
    """Certified enclosure of || (x_i)_i ||_{L_p(l_inf)} for p >= 2.

    Upper bounds are searched over positive operators dominating every
    x_i* x_i: the full sum (always feasible) and a feasibilized version of
    the last column seed a shrink-and-repair descent that only ever steps
    to certified-feasible iterates, so the final upper bound never relies
    on the optimizer having converged.
    """
    if len(xs) == 0:
        raise ConfigError("need at least one operator")
    p = float(p)
    if p < 2.0:
        raise ConfigError(f"p must be >= 2, got {p}")
    cons = []
    seen = set()
    for x in xs:
        c = op.symmetrize(x.adjoint() @ x)
        key = c.data.tobytes()
        if key not in seen:      # duplicated columns add no constraint
            seen.add(key)
            cons.append(c)
    scale = max(op.lp_norm(c, np.inf) for c in cons)

    def objective(a: Operator) -> float:
        return op.lp_norm(a, p / 2.0) ** 0.5

    candidates = [("sum", sum(cons))]
    last = _feasibilize(cons[-1], cons)
    if _is_feasible(last, cons, scale):
        candidates.append(("last-column", last))
    name, best = min(candidates, key=lambda kv: objective(kv[1]))
    best_obj = objective(best)
    iters = 0
    for iters in range(1, max_iters + 1):
        trial = _feasibilize(shrink * best, cons)
        if not _is_feasible(trial, cons, scale):
            break
        obj = objective(trial)
        if obj >= best_obj * (1.0 - rel_tol):
            break
        best, best_obj = trial, obj
    cert = op.psd_sqrt(best)
    lower = max(op.lp_norm(x, p) for x in xs)
    if lower > best_obj * (1.0 + 1e-8) + 1e-12:
        raise NclilError("certified lower bound exceeds certified upper bound")
    return ColumnNormBounds(lower=lower, upper=best_obj, certificate=cert, p=p,
                            iterations=iters, candidate=name)


@dataclass(frozen=True)
class DoobCheck:
    upper: float
    lower: float
    rhs: float
    p: float
    holds: bool
    verdict: str            # "holds" | "inconclusive-certificate" | "certified-violation"
    bounds: ColumnNormBounds

    @property
    def certified_violation(self) -> bool:
        return self.verdict == "certified-violation"


def doob_consequence_check(path: MartingalePath, p: float, first: int = 1,
                           last: int | None = None) -> DoobCheck:
    """Check ||(x_m)_{m<=n}||_{L_p(l_inf)} <= 2^{2/p} ||x_n||_p for p >= 4.

    A failed upper bound is only ever reported as inconclusive unless the
    certified lower bound itself crosses the right-hand side, which is the
    one situation a numerical search is entitled to call a violation.
    """
    if p < 4.0:
        raise ConfigError(f"p must be >= 4, got {p}")
    if path.md_residual > 1e-9:
        raise NclilError(f"input is not a martingale (residual {path.md_residual:.3e})")
    last = path.horizon if last is None else int(last)
    if not 1 <= first <= last <= path.horizon:
        raise ConfigError(f"range {first}..{last} outside 1..{path.horizon}")
    family = [path.partial(i) for i in range(first, last + 1)]
    bounds = column_maximal_norm_bounds(family, p)
    rhs = 2.0 ** (2.0 / p) * op.lp_norm(family[-1], p)
    tol = FEAS_TOL * (1.0 + rhs)
    if bounds.upper <= rhs + tol:
        verdict = "holds"
    elif bounds.lower > rhs + tol:
        verdict = "certified-violation"
    else:
        verdict = "inconclusive-certificate"
    return DoobCheck(upper=bounds.upper, lower=bounds.lower, rhs=rhs, p=p,
                     holds=verdict == "holds", verdict=verdict, bounds=bounds)


@dataclass(frozen=True)
class DualDoobCheck:
    lhs: float
    rhs: float
    cp: float
    p: float
    holds: bool


def dual_doob_check(model: AlgebraModel, positives: Sequence[Operator], p: float,
                    levels: Sequence[int] | None = None) -> DualDoobCheck:
    """Check ||sum_i E_i(a_i)||_p <= 2^{2(p-1)/p} ||sum_i a_i||_p, p in [1, 2].

    The a_i must be positive; levels defaults to 1..len(a) and must be
    nondecreasing within the model's tower.  At p = 1 the constant is 1
    and both sides agree by trace preservation.
    """
    if not 1.0 <= p <= 2.0:
        raise ConfigError(f"p must lie in [1, 2], got {p}")
    if len(positives) == 0:
        raise ConfigError("need at least one operator")
    if levels is None:
        levels = list(range(1, len(positives) + 1))
    levels = [int(k) for k in levels]
    if len(levels) != len(positives):
        raise ConfigError("one level per operator required")
    if any(b < a for a, b in zip(levels, levels[1:])):
        raise ConfigError("levels must be nondecreasing")
    for a in positives:
        if not a.hermitian:
            raise NclilError("summands must be hermitian")
        floor = -1e-10 * (1.0 + op.lp_norm(a, np.inf))
        if op.min_eigenvalue(a) < floor:
            raise NclilError("summands must be positive semidefinite")
    projected = sum(conditional_expectation(model, a, k) for a, k in zip(positives, levels))
    total = sum(positives)
    lhs = op.lp_norm(projected, p)
    cp = 2.0 ** (2.0 * (p - 1.0) / p)
    rhs = cp * op.lp_norm(total, p)
    return DualDoobCheck(lhs=lhs, rhs=rhs, cp=cp, p=p,
                         holds=bool(lhs <= rhs + FEAS_TOL * (1.0 + rhs)))


@dataclass(frozen=True)
class ProbcResult:
    """Constructive substitute for a maximal tail probability.

    e is the spectral projection of the dominator onto (-inf, t]; every
    compressed column satisfies ||x_i e|| <= t, and s = tau(1 - e) plays
    the role of the exceptional probability.
    """

    s: float
    e: op.Projection
    threshold: float
    max_compressed: float


def probc_upper(xs: Sequence[Operator], t: float, dominator: Operator) -> ProbcResult:
    if t <= 0:
        raise ConfigError(f"threshold must be positive, got {t}")
    if len(xs) == 0:
        raise ConfigError("need at least one operator")
    b = dominator
    if not b.hermitian:
        raise NclilError("dominator must be hermitian")
    scale = op.lp_norm(b, np.inf)
    if op.min_eigenvalue(b) < -1e-10 * (1.0 + scale):
        raise NclilError("dominator must be positive semidefinite")
    bsq = b @ b
    for x in xs:
        gap = op.min_eigenvalue(op.symmetrize(bsq) - op.symmetrize(x.adjoint() @ x))
        if gap < -FEAS_TOL * (1.0 + scale * scale):
            raise NclilError(f"dominator fails to dominate the family (gap {gap:.3e})")
    e = op.spectral_projection(b, -math.inf, t)
    s = max(0.0, 1.0 - e.trace)    # rounding must not produce negative mass
    worst = 0.0
    for x in xs:
        compressed = x @ e
        worst = max(worst, op.lp_norm(compressed, np.inf))
    if worst > t + FEAS_TOL * (1.0 + t):
        raise NclilError(f"compression failed: ||x e|| = {worst} > t = {t}")
    return ProbcResult(s=float(s), e=e, threshold=float(t), max_compressed=float(worst))


@dataclass(frozen=True)
class ChebyshevResult:
    probc_s: float
    rhs: float
    holds: bool
    residual: float
    threshold: float
    p: float


def chebyshev_bound(xs: Sequence[Operator], t: float, p: float,
                    bounds: ColumnNormBounds | None = None) -> ChebyshevResult:
    """Constructive Chebyshev: tau(1 - e) <= t^{-p} ||certificate||_p^p.

    With b the certificate and e its spectral projection below t, the
    claim is the per-eigenvalue identity 1_{(t, inf)}(b) <= (b/t)^p traced
    out, so the residual rhs - s must never go below -1e-10.
    """
    if bounds is None:
        bounds = column_maximal_norm_bounds(xs, p=max(p, 2.0))
    pr = probc_upper(xs, t, bounds.certificate)
    norm_b = op.lp_norm(bounds.certificate, p) if p != bounds.p else bounds.upper
    if norm_b == 0.0:
        rhs = 0.0
    else:
        log_rhs = p * (math.log(norm_b) - math.log(t))
        rhs = math.exp(log_rhs) if log_rhs < _EXP_CAP else math.inf
    residual = rhs - pr.s
    return ChebyshevResult(probc_s=pr.s, rhs=rhs, holds=bool(residual >= -HOLD_TOL),
                           residual=float(residual), threshold=float(t), p=float(p))


@dataclass(frozen=True)
class ScalarBoundResult:
    lhs: float
    rhs: float
    log_lhs: float
    log_rhs: float
    holds: bool


def scalar_power_exp_bound(u: float, p: float) -> ScalarBoundResult:
    """Check |u|^p <= p^p e^{-p} (e^u + e^{-u}) in log space.

    Valid for every real u and p >= 1 because x^p e^{-x} peaks at x = p;
    log-space evaluation keeps the comparison exact-enough out to u of
    order 1e5 where both sides overflow.
    """
    if p < 1.0:
        raise ConfigError(f"p must be >= 1, got {p}")
    u = float(u)
    au = abs(u)
    log_rhs = p * math.log(p) - p + au + math.log1p(math.exp(-2.0 * au))
    log_lhs = -math.inf if au == 0.0 else p * math.log(au)
    holds = log_lhs <= log_rhs + HOLD_TOL
    lhs = math.exp(log_lhs) if log_lhs < _EXP_CAP else math.inf
    rhs = math.exp(log_rhs) if log_rhs < _EXP_CAP else math.inf
    return ScalarBoundResult(lhs=lhs, rhs=rhs, log_lhs=log_lhs, log_rhs=log_rhs,
                             holds=bool(holds))


@dataclass(frozen=True)
class BlockBound:
    """Tail bound for one eta-adic block of a normalized martingale.

    The tilt lam optimizes the exponential Chebyshev step against the
    block's squared normalizer, for which the closed form substitutes the
    eta-adic surrogate ell = ln(eta^(2n)) = 2 n ln(eta); that choice makes
    bound_exact = 8 exp(-c*ell) and bound_final = ell^{-c} with
    c = beta^2 (1+delta)^2 / (4 (1+eps)), and the summability of
    bound_final over n is exactly c > 1.  The prefactor 8 absorbs the
    union over the block and the two-sided truncation losses; it is what
    bound_exact <= bound_final has to pay for, so the comparison needs
    c (ell - ln ell) >= ln 8, an index condition reported as gate_ell
    alongside the p >= 4 and alpha-cap gates.
    lam_iterlog is the tilt the iterated-logarithm normalizer would give;
    its ratio to lam is reported because the two differ by orders of
    magnitude and only the surrogate keeps the closed-form chain valid.
    """

    n: int
    eta: float
    delta: float
    eps: float
    beta: float
    ell: float
    lam: float
    p: float
    c: float
    bound_exact: float
    bound_final: float
    exact_le_final: bool
    gate_p: bool
    gate_ell: bool = False
    gate_alpha: bool | None = None
    alpha_cap: float = 0.0
    mid: float | None = None
    chain_exact_le_mid: bool | None = None
    chain_mid_le_final: bool | None = None
    lam_iterlog: float | None = None
    tilt_ratio: float | None = None

    @property
    def valid(self) -> bool:
        """Gates under which the closed-form bound is actually licensed."""
        return self.gate_p and self.gate_ell and self.gate_alpha is not False


def block_tail_bound(n: int, eta: float, delta: float, eps: float, beta: float = 2.0,
                     s2_next: float | None = None,
                     alpha_next: float | None = None) -> BlockBound:
    if n < 1:
        raise ConfigError(f"block index must be >= 1, got {n}")
    if not 1.0 < eta < 2.0:
        raise ConfigError(f"eta must lie in (1, 2), got {eta}")
    if delta <= 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    if not 0.0 < eps <= 1.0:
        raise ConfigError(f"eps must lie in (0, 1], got {eps}")
    if beta <= 0:
        raise ConfigError(f"beta must be positive, got {beta}")
    ell = 2.0 * n * math.log(eta)
    lam = beta * (1.0 + delta) * ell / (2.0 * (1.0 + eps))
    p = lam * beta * (1.0 + delta)
    c = beta ** 2 * (1.0 + delta) ** 2 / (4.0 * (1.0 + eps))
    exponent = (1.0 + eps) * lam ** 2 / ell - beta * (1.0 + delta) * lam
    bound_exact = 8.0 * math.exp(exponent)
    bound_final = ell ** (-c)
    alpha_cap = 2.0 * math.sqrt(eps) / (beta * (1.0 + delta))
    gate_alpha = None if alpha_next is None else bool(alpha_next <= alpha_cap)
    mid = None
    chain_left = None
    chain_right = None
    lam_iterlog = None
    ratio = None
    if s2_next is not None:
        if s2_next <= 0:
            raise ConfigError("bracket value must be positive")
        u2 = iterlog(s2_next)
        lam_iterlog = beta * (1.0 + delta) * u2 / (2.0 * (1.0 + eps))
        ratio = lam_iterlog / lam
        if s2_next > 1.0:
            mid = math.log(s2_next) ** (-c)
            chain_left = bool(bound_exact <= mid * (1.0 + 1e-12))
            chain_right = bool(mid <= bound_final * (1.0 + 1e-12))
    return BlockBound(
        n=n, eta=eta, delta=delta, eps=eps, beta=beta, ell=ell, lam=lam, p=p, c=c,
        bound_exact=bound_exact, bound_final=bound_final,
        exact_le_final=bool(bound_exact <= bound_final * (1.0 + 1e-12)),
        gate_p=bool(p >= 4.0),
        gate_ell=bool(c * (ell - math.log(ell)) >= math.log(8.0)),
        gate_alpha=gate_alpha, alpha_cap=alpha_cap,
        mid=mid, chain_exact_le_mid=chain_left, chain_mid_le_final=chain_right,
        lam_iterlog=lam_iterlog, tilt_ratio=ratio)
