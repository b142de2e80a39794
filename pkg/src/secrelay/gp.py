"""Geometric programming in posynomial form, plus monomial condensation.

The solver works in log space: with ``x = exp(y)`` every posynomial becomes a
log-sum-exp function, the program is convex, and a standard barrier method
with damped Newton steps solves it.  Monomial equality constraints are
eliminated by variable substitution before solving.  ``condense`` implements
the arithmetic/geometric-mean monomial under-estimator used by the successive
approximation loops.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "GpError",
    "GpInfeasibleError",
    "GpUnboundedError",
    "Posynomial",
    "GpProblem",
    "GpSolution",
    "CondensationCoeffs",
    "solve_gp",
    "condense",
    "successive_condensation",
    "fit_affine",
]


class GpError(Exception):
    """Base class for geometric-program failures."""


class GpInfeasibleError(GpError):
    def __init__(self, message: str, violated_index: int | None = None):
        super().__init__(message)
        self.violated_index = violated_index


class GpUnboundedError(GpError):
    pass


# ---------------------------------------------------------------------------
# Posynomials
# ---------------------------------------------------------------------------

def _norm_exps(exps: Mapping[str, float]) -> tuple[tuple[str, float], ...]:
    return tuple(sorted((v, float(e)) for v, e in exps.items() if e != 0.0))


@dataclass(frozen=True)
class Posynomial:
    """Sum of monomial terms ``coef * prod(x_v ** e_v)`` with positive coefs."""

    terms: tuple[tuple[float, tuple[tuple[str, float], ...]], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a posynomial needs at least one term")
        for coef, _ in self.terms:
            if not (np.isfinite(coef) and coef > 0):
                raise ValueError(f"term coefficients must be positive and finite, got {coef}")

    @classmethod
    def monomial(cls, coef: float, exps: Mapping[str, float] | None = None) -> "Posynomial":
        return cls(terms=((float(coef), _norm_exps(exps or {})),))

    @classmethod
    def constant(cls, value: float) -> "Posynomial":
        return cls.monomial(value)

    @classmethod
    def from_terms(cls, terms: Sequence[tuple[float, Mapping[str, float]]]) -> "Posynomial":
        return cls(terms=tuple((float(c), _norm_exps(e)) for c, e in terms))

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def variables(self) -> set[str]:
        return {v for _, exps in self.terms for v, _ in exps}

    def evaluate(self, point: Mapping[str, float]) -> float:
        total = 0.0
        for coef, exps in self.terms:
            val = coef
            for v, e in exps:
                val *= point[v] ** e
            total += val
        return total

    def __add__(self, other: "Posynomial") -> "Posynomial":
        return Posynomial(terms=self.terms + other.terms)

    def __mul__(self, other: "Posynomial") -> "Posynomial":
        out = []
        for c1, e1 in self.terms:
            d1 = dict(e1)
            for c2, e2 in other.terms:
                merged = dict(d1)
                for v, e in e2:
                    merged[v] = merged.get(v, 0.0) + e
                out.append((c1 * c2, _norm_exps(merged)))
        return Posynomial(terms=tuple(out))

    def scaled(self, factor: float) -> "Posynomial":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return Posynomial(terms=tuple((c * factor, e) for c, e in self.terms))

    def monomial_power(self, p: float) -> "Posynomial":
        if not self.is_monomial:
            raise ValueError("only monomials can be raised to arbitrary powers")
        coef, exps = self.terms[0]
        return Posynomial(terms=((coef**p, _norm_exps({v: e * p for v, e in exps})),))

    def substitute(self, var: str, replacement: "Posynomial") -> "Posynomial":
        """Replace ``var`` by a monomial expression of other variables."""
        if not replacement.is_monomial:
            raise ValueError("substitution requires a monomial replacement")
        rc, rexps = replacement.terms[0]
        out = []
        for coef, exps in self.terms:
            d = dict(exps)
            e_v = d.pop(var, 0.0)
            if e_v != 0.0:
                coef = coef * rc**e_v
                for v, e in rexps:
                    d[v] = d.get(v, 0.0) + e * e_v
            out.append((coef, _norm_exps(d)))
        return Posynomial(terms=tuple(out))


@dataclass(frozen=True)
class GpProblem:
    """minimize objective s.t. each inequality <= 1, each (monomial) equality == 1."""

    objective: Posynomial
    inequalities: tuple[Posynomial, ...] = ()
    equalities: tuple[Posynomial, ...] = ()

    def __post_init__(self):
        for eq in self.equalities:
            if not eq.is_monomial:
                raise ValueError("equality constraints must be monomials")

    def variables(self) -> list[str]:
        vs: set[str] = set(self.objective.variables())
        for c in self.inequalities:
            vs |= c.variables()
        for c in self.equalities:
            vs |= c.variables()
        return sorted(vs)


@dataclass(frozen=True)
class GpSolution:
    x: dict[str, float]
    objective: float
    gap: float
    outer_iterations: int
    newton_iterations: int


@dataclass(frozen=True)
class CondensationCoeffs:
    """Affine-fit coefficients linearizing the two effective-jamming terms.

    ``c1 * p + c2`` models the phase-1 term and ``c3 * p + c4`` the phase-2
    term; relative fit errors over the sampled power range are kept for
    diagnostics.  All four coefficients must be positive for use in a GP.
    """

    c1: float
    c2: float
    c3: float
    c4: float
    fit_error_1: float = 0.0
    fit_error_2: float = 0.0

    @property
    def all_positive(self) -> bool:
        return min(self.c1, self.c2, self.c3, self.c4) > 0.0


def fit_affine(xs, ys) -> tuple[float, float, float]:
    """Least-squares affine fit ``y ~ slope * x + intercept``.

    Returns (slope, intercept, max relative error over the samples).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    a = np.column_stack([xs, np.ones_like(xs)])
    (slope, intercept), *_ = np.linalg.lstsq(a, ys, rcond=None)
    pred = slope * xs + intercept
    denom = np.maximum(np.abs(ys), np.finfo(float).tiny)
    relerr = float(np.max(np.abs(pred - ys) / denom))
    return float(slope), float(intercept), relerr


# ---------------------------------------------------------------------------
# Log-space machinery
# ---------------------------------------------------------------------------

class _LogPosy:
    """Posynomial compiled to exponent matrix / log-coef vector form."""

    def __init__(self, posy: Posynomial, var_index: Mapping[str, int]):
        n = len(var_index)
        t = len(posy.terms)
        self.a = np.zeros((t, n))
        self.b = np.zeros(t)
        for i, (coef, exps) in enumerate(posy.terms):
            self.b[i] = np.log(coef)
            for v, e in exps:
                self.a[i, var_index[v]] = e

    def value(self, y: np.ndarray) -> float:
        return float(logsumexp(self.a @ y + self.b))

    def value_grad_hess(self, y: np.ndarray):
        z = self.a @ y + self.b
        zmax = z.max()
        w = np.exp(z - zmax)
        s = w.sum()
        w /= s
        f = float(np.log(s) + zmax)
        g = self.a.T @ w
        h = self.a.T @ (w[:, None] * self.a) - np.outer(g, g)
        return f, g, h


class _BarrierEvaluator:
    """Objective and inequality posynomials stacked into one term matrix.

    All per-segment log-sum-exps, softmax weights, gradients, and Hessians
    come out of a handful of matrix products and ``reduceat`` reductions, so
    the cost per barrier evaluation does not grow with the number of
    constraints in Python-loop terms.
    """

    def __init__(self, obj: _LogPosy, ineqs: list[_LogPosy]):
        mats = [obj.a] + [c.a for c in ineqs]
        self.a_all = np.vstack(mats)
        self.b_all = np.concatenate([obj.b] + [c.b for c in ineqs])
        lens = np.array([m.shape[0] for m in mats], dtype=np.intp)
        self.reps = lens
        self.starts = np.zeros(len(mats), dtype=np.intp)
        np.cumsum(lens[:-1], out=self.starts[1:])
        self.m = len(ineqs)

    def seg_values(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-segment log-sum-exp values and per-term softmax weights."""
        z = self.a_all @ y + self.b_all
        zmax = np.maximum.reduceat(z, self.starts)
        ez = np.exp(z - np.repeat(zmax, self.reps))
        sums = np.add.reduceat(ez, self.starts)
        return np.log(sums) + zmax, ez / np.repeat(sums, self.reps)

    def constraint_values(self, y: np.ndarray) -> np.ndarray:
        return self.seg_values(y)[0][1:]

    def seg_grads(self, w: np.ndarray) -> np.ndarray:
        """Per-segment gradients (rows) from the softmax weights."""
        return np.add.reduceat(self.a_all * w[:, None], self.starts, axis=0)

    def barrier_value(self, y: np.ndarray, t_barrier: float) -> float:
        f, _ = self.seg_values(y)
        cons = f[1:]
        if cons.size and cons.max() >= 0:
            return np.inf
        val = t_barrier * f[0]
        if cons.size:
            val -= float(np.log(-cons).sum())
        return val

    def barrier_full(self, y: np.ndarray, t_barrier: float):
        f, w = self.seg_values(y)
        cons = f[1:]
        n = y.size
        if cons.size and cons.max() >= 0:
            return np.inf, np.zeros(n), np.zeros((n, n))
        coef = np.empty(self.m + 1)
        coef[0] = t_barrier
        coef[1:] = -1.0 / cons
        omega = w * np.repeat(coef, self.reps)
        grad = self.a_all.T @ omega
        gmat = self.seg_grads(w)
        dyad = np.empty(self.m + 1)
        dyad[0] = -t_barrier
        dyad[1:] = 1.0 / cons**2 + 1.0 / cons
        hess = self.a_all.T @ (omega[:, None] * self.a_all) + gmat.T @ (
            dyad[:, None] * gmat
        )
        value = t_barrier * f[0] - (float(np.log(-cons).sum()) if cons.size else 0.0)
        return value, grad, hess


_Y_BOUND = 400.0  # |log x| beyond this means the program is effectively unbounded


def _damped_newton(f_full, f_value, y0: np.ndarray, tol: float, max_iters: int = 80):
    """Minimize a smooth convex function.

    ``f_full(y)`` returns (value, gradient, Hessian); ``f_value(y)`` just the
    value, for the backtracking line search.
    """
    y = y0.copy()
    f, g, h = f_full(y)
    iters = 0
    for _ in range(max_iters):
        iters += 1
        lam = 0.0
        n = len(y)
        while True:
            try:
                step = np.linalg.solve(h + lam * np.eye(n), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and g @ step < 0:
                break
            lam = max(10.0 * lam, 1e-10 * max(1.0, np.abs(np.diag(h)).max()))
            if lam > 1e20:
                step = -g
                break
        decrement = -(g @ step)
        if decrement / 2.0 <= tol:
            break
        t = 1.0
        accepted = False
        for _ in range(60):
            y_new = y + t * step
            if np.all(np.isfinite(y_new)) and np.abs(y_new).max() < _Y_BOUND:
                f_new = f_value(y_new)
                if np.isfinite(f_new) and f_new <= f - 0.25 * t * decrement:
                    y = y_new
                    f, g, h = f_full(y_new)
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
        if np.abs(y).max() >= _Y_BOUND * 0.99:
            raise GpUnboundedError("iterates diverged; program appears unbounded")
    return y, f, iters


def _eliminate_equalities(problem: GpProblem):
    """Substitute monomial equalities away; returns (reduced problem, recover fn)."""
    obj = problem.objective
    ineqs = list(problem.inequalities)
    pending = list(problem.equalities)
    substitutions: list[tuple[str, Posynomial]] = []

    while pending:
        eq = pending.pop(0)
        coef, exps = eq.terms[0]
        if not exps:
            if abs(coef - 1.0) > 1e-9:
                raise GpInfeasibleError(
                    f"equality constraint reduces to constant {coef} != 1"
                )
            continue
        # solve for the variable with the largest exponent magnitude
        var, e_v = max(exps, key=lambda ve: abs(ve[1]))
        rest = {v: -e / e_v for v, e in exps if v != var}
        repl = Posynomial.monomial(coef ** (-1.0 / e_v), rest)
        substitutions.append((var, repl))
        obj = obj.substitute(var, repl)
        ineqs = [c.substitute(var, repl) for c in ineqs]
        pending = [c.substitute(var, repl) for c in pending]

    reduced = GpProblem(objective=obj, inequalities=tuple(ineqs))

    def recover(x: dict[str, float]) -> dict[str, float]:
        out = dict(x)
        for var, repl in reversed(substitutions):
            out[var] = repl.evaluate(out)
        return out

    return reduced, recover


def _phase_one(batch: _BarrierEvaluator, y0: np.ndarray):
    """Find strictly feasible y for F_i(y) < 0, or prove infeasibility."""
    n = len(y0)
    vals = batch.constraint_values(y0)
    ys = np.concatenate([y0, [vals.max() + 1.0]])
    best = (float(vals.max()), y0)

    for t in [1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8]:

        def value(yy):
            y, s = yy[:n], yy[n]
            floor = s + 2.0  # cap s >= -2 so the phase-1 objective stays bounded
            if floor <= 0:
                return np.inf
            slack = s - batch.constraint_values(y)
            if slack.min() <= 0:
                return np.inf
            return t * s - np.log(floor) - float(np.log(slack).sum())

        def full(yy):
            y, s = yy[:n], yy[n]
            floor = s + 2.0
            bad = (np.inf, np.zeros(n + 1), np.zeros((n + 1, n + 1)))
            if floor <= 0:
                return bad
            f_seg, w = batch.seg_values(y)
            slack = s - f_seg[1:]
            if slack.min() <= 0:
                return bad
            inv = 1.0 / slack
            inv2 = inv * inv
            f = t * s - np.log(floor) - float(np.log(slack).sum())
            gmat = batch.seg_grads(w)[1:]  # per-constraint gradients
            g = np.empty(n + 1)
            g[:n] = gmat.T @ inv
            g[n] = t - 1.0 / floor - inv.sum()
            seg_c = np.concatenate([[0.0], inv])
            omega = w * np.repeat(seg_c, batch.reps)
            h = np.zeros((n + 1, n + 1))
            h[:n, :n] = (
                batch.a_all.T @ (omega[:, None] * batch.a_all)
                + gmat.T @ ((inv2 - inv)[:, None] * gmat)
            )
            h[:n, n] = h[n, :n] = -(gmat.T @ inv2)
            h[n, n] = inv2.sum() + 1.0 / floor**2
            return f, g, h

        ys, _, _ = _damped_newton(full, value, ys, tol=1e-10)
        y = ys[:n]
        worst = float(batch.constraint_values(y).max())
        if worst < best[0]:
            best = (worst, y.copy())
        if worst < -1e-6:
            return best[1]
    if best[0] < 0:
        return best[1]
    # infeasible: report the most violated constraint
    vals = batch.constraint_values(best[1])
    idx = int(np.argmax(vals))
    raise GpInfeasibleError(
        f"no feasible point found (constraint {idx} at {np.exp(vals[idx]):.4g} > 1)",
        violated_index=idx,
    )


def solve_gp(
    problem: GpProblem,
    init: Mapping[str, float] | None = None,
    tol: float = 1e-9,
) -> GpSolution:
    """Solve a geometric program to high accuracy.

    ``init`` is an optional strictly positive starting point (missing
    variables default to 1); if it is not strictly feasible a uniform
    shrinking heuristic and then an explicit phase-1 solve are tried.

    Raises :class:`GpInfeasibleError` (with the violated constraint index) or
    :class:`GpUnboundedError`.
    """
    reduced, recover = _eliminate_equalities(problem)
    variables = reduced.variables()
    var_index = {v: i for i, v in enumerate(variables)}
    n = len(variables)

    obj = _LogPosy(reduced.objective, var_index)
    ineqs = [_LogPosy(c, var_index) for c in reduced.inequalities]

    y0 = np.zeros(n)
    if n == 0:
        # everything was pinned by equalities; just check the constants
        for idx, c in enumerate(ineqs):
            if c.value(y0) > 1e-9:
                raise GpInfeasibleError(
                    f"constraint {idx} is violated by the equality-pinned point",
                    violated_index=idx,
                )
        full = recover({})
        return GpSolution(
            x=full,
            objective=float(problem.objective.evaluate(full)),
            gap=0.0,
            outer_iterations=0,
            newton_iterations=0,
        )
    if init:
        for v, x in init.items():
            if v in var_index:
                if x <= 0:
                    raise ValueError(f"initial point must be strictly positive, {v}={x}")
                y0[var_index[v]] = np.log(x)

    batch = _BarrierEvaluator(obj, ineqs)
    if ineqs:
        if batch.constraint_values(y0).max() >= 0:
            # scale-everything heuristic (down, then up), then full phase 1
            found = False
            for j in range(1, 13):
                for direction in (-1.0, 1.0):
                    y_try = y0 + direction * j * np.log(10.0)
                    if batch.constraint_values(y_try).max() < 0:
                        y0, found = y_try, True
                        break
                if found:
                    break
            if not found:
                y0 = _phase_one(batch, y0)

    m = max(len(ineqs), 1)
    t_barrier = 1.0
    y = y0
    newton_total = 0
    outer = 0
    while True:
        outer += 1
        y, _, its = _damped_newton(
            lambda yy: batch.barrier_full(yy, t_barrier),
            lambda yy: batch.barrier_value(yy, t_barrier),
            y,
            tol=1e-8,
        )
        newton_total += its
        gap = m / t_barrier
        if gap <= tol or not ineqs:
            break
        if t_barrier > 1e14:
            break
        t_barrier *= 25.0

    x = {v: float(np.exp(y[var_index[v]])) for v in variables}
    full = recover(x)
    value = problem.objective.evaluate(full)
    return GpSolution(
        x=full,
        objective=float(value),
        gap=float(gap if ineqs else 0.0),
        outer_iterations=outer,
        newton_iterations=newton_total,
    )


# ---------------------------------------------------------------------------
# Condensation
# ---------------------------------------------------------------------------

def condense(posy: Posynomial, point: Mapping[str, float]) -> Posynomial:
    """Best monomial under-estimator of a posynomial at a point.

    Uses the weighted AM-GM inequality with weights equal to each term's share
    of the posynomial value at ``point``: the result touches ``posy`` at
    ``point`` and lies at or below it everywhere on the positive orthant.
    """
    shares = []
    for coef, exps in posy.terms:
        val = coef
        for v, e in exps:
            p = point[v]
            if p <= 0:
                raise ValueError(f"condensation point must be strictly positive, {v}={p}")
            val *= p**e
        shares.append(val)
    total = sum(shares)
    if total <= 0 or not np.isfinite(total):
        raise ValueError("posynomial value at the condensation point must be positive finite")

    log_coef = 0.0
    exps_out: dict[str, float] = {}
    for (coef, exps), share in zip(posy.terms, shares):
        w = share / total
        if w <= 0:
            continue
        log_coef += w * (np.log(coef) - np.log(w))
        for v, e in exps:
            exps_out[v] = exps_out.get(v, 0.0) + w * e
    return Posynomial.monomial(float(np.exp(log_coef)), exps_out)


@dataclass(frozen=True)
class SuccessiveResult:
    point: dict[str, float]
    objective: float
    trace: tuple[float, ...] = field(repr=False)
    iterations: int = 0
    converged: bool = False


def successive_condensation(
    build: Callable[[Mapping[str, float]], tuple[GpProblem, dict[str, float]]],
    exact_objective: Callable[[Mapping[str, float]], float],
    x0: Mapping[str, float],
    tol: float = 1e-6,
    max_iters: int = 50,
    gp_tol: float = 1e-9,
) -> SuccessiveResult:
    """Iterate condensed-GP solves until the exact objective stalls.

    ``build(point)`` returns the condensed problem at ``point`` together with
    a strictly feasible initial dict for it.  A candidate step is accepted
    only if the exact objective does not increase, so the recorded trace is
    monotonically non-increasing; the loop stops on relative improvement below
    ``tol`` or on a rejected step.  ``gp_tol`` is the duality-gap target of
    the inner solves; the accept test uses the exact objective, so a coarser
    inner gap trades inner iterations against outer ones.
    """
    x = dict(x0)
    current = float(exact_objective(x))
    trace = [current]
    converged = False
    iters = 0
    for _ in range(max_iters):
        iters += 1
        problem, start = build(x)
        sol = solve_gp(problem, init=start, tol=gp_tol)
        candidate = {v: sol.x[v] for v in x if v in sol.x}
        cand_val = float(exact_objective(candidate))
        if not np.isfinite(cand_val) or cand_val > current * (1.0 + 1e-12) + 1e-300:
            converged = True
            break
        improvement = current - cand_val
        x, current = candidate, cand_val
        trace.append(current)
        if improvement <= tol * max(abs(current), 1e-12):
            converged = True
            break
    return SuccessiveResult(
        point=x,
        objective=current,
        trace=tuple(trace),
        iterations=iters,
        converged=converged,
    )
