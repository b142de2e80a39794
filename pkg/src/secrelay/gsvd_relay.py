"""Multi-stream relaying over GSVD-matched subchannels, with optional jamming.

Both hops are diagonalized jointly with the eavesdropper's channel: a
generalized SVD of (hop channel, eavesdropper channel) yields transmit
directions that are simultaneously parallel for the legitimate receiver and
the eavesdropper, so rates reduce to products over scalar subchannels and
power allocation becomes a (condensed) geometric program.

The jamming variant points additional covariance from the destination
(phase 1) and the source (phase 2) along the dual GSVD directions that are
strong toward the eavesdropper and weak toward the protected receiver; rates
then need colored-noise log-determinants, and the power split is polished by
a projected-Newton ascent with analytic gradients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gp import GpProblem, Posynomial, condense, solve_gp, successive_condensation
from .numerics import colored_logdet, gsvd
from .scenario import ChannelSet

__all__ = [
    "StreamPlan",
    "JamPlan",
    "PcjOperators",
    "PcjPowers",
    "PcjRates",
    "SimpleAllocation",
    "RefineResult",
    "stream_plan",
    "closed_form_rate_terms",
    "simple_rate",
    "uniform_powers",
    "optimize_simple",
    "jam_plan",
    "pcj_operators",
    "pcj_mutual_info",
    "refine_pcj",
]


# ---------------------------------------------------------------------------
# Stream plan (no jamming)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StreamPlan:
    """Paired eigen-subchannels of the two hops.

    ``precoder_src``/``precoder_relay`` map the shared ``streams`` symbols to
    transmit antennas (Frobenius-normalized, so column energies are spending
    weights and the per-stream power budget upper-bounds radiated power).
    The four gain vectors are per-unit-power channel power gains of stream i
    toward the relay / eavesdropper (phase 1) and the destination /
    eavesdropper (phase 2); each hop's pair of gain vectors comes from one
    GSVD, so the corresponding receive directions are orthonormal.
    """

    precoder_src: np.ndarray
    precoder_relay: np.ndarray
    gain_sr: np.ndarray
    gain_se: np.ndarray
    gain_rd: np.ndarray
    gain_re: np.ndarray
    streams: int
    norm_src: float  # Frobenius norm of the phase-1 triangular factor's inverse
    norm_relay: float


def _normalized_precoder(factors) -> tuple[np.ndarray, float]:
    r_inv = np.linalg.solve(factors.r, np.eye(factors.k, dtype=np.complex128))
    scale = float(np.linalg.norm(r_inv))
    t = factors.psi[:, : factors.k] @ r_inv / scale
    return t, scale


def stream_plan(ch: ChannelSet) -> StreamPlan:
    """Joint diagonalization of both hops against the eavesdropper."""
    f1 = gsvd(ch.h_ar, ch.h_ae)
    f2 = gsvd(ch.h_rb, ch.h_re)
    s = min(f1.k, f2.k)
    t_src, c1 = _normalized_precoder(f1)
    t_rel, c2 = _normalized_precoder(f2)
    # keep the strongest (trailing) streams of each hop, paired in order
    return StreamPlan(
        precoder_src=t_src[:, f1.k - s :],
        precoder_relay=t_rel[:, f2.k - s :],
        gain_sr=(f1.s1[f1.k - s :] / c1) ** 2,
        gain_se=(f1.s2[f1.k - s :] / c1) ** 2,
        gain_rd=(f2.s1[f2.k - s :] / c2) ** 2,
        gain_re=(f2.s2[f2.k - s :] / c2) ** 2,
        streams=s,
        norm_src=c1,
        norm_relay=c2,
    )


def closed_form_rate_terms(
    plan: StreamPlan, info1: np.ndarray, info2: np.ndarray, noise_power: float
) -> tuple[float, float, float]:
    """Half-log2 information terms (relay, destination, eavesdropper).

    Products over scalar subchannels; the eavesdropper maximum-ratio-combines
    the two phases of each stream.
    """
    info1 = np.asarray(info1, dtype=float)
    info2 = np.asarray(info2, dtype=float)
    relay = 0.5 * float(np.sum(np.log2(1.0 + info1 * plan.gain_sr / noise_power)))
    dest = 0.5 * float(np.sum(np.log2(1.0 + info2 * plan.gain_rd / noise_power)))
    eve = 0.5 * float(
        np.sum(
            np.log2(
                1.0 + (info1 * plan.gain_se + info2 * plan.gain_re) / noise_power
            )
        )
    )
    return relay, dest, eve


def simple_rate(
    plan: StreamPlan, info1: np.ndarray, info2: np.ndarray, noise_power: float
) -> float:
    relay, dest, eve = closed_form_rate_terms(plan, info1, info2, noise_power)
    return max(min(relay, dest) - min(relay, eve), 0.0)


def uniform_powers(plan: StreamPlan, total_power: float) -> np.ndarray:
    return np.full(plan.streams, total_power / plan.streams)


@dataclass(frozen=True)
class SimpleAllocation:
    info1: np.ndarray
    info2: np.ndarray
    rate: float
    raw_rate: float
    iterations: int
    converged: bool
    #: exact surrogate objective after each accepted condensation step
    trace: tuple[float, ...] = ()


def optimize_simple(
    plan: StreamPlan, total_power: float, noise_power: float, tol: float = 1e-6
) -> SimpleAllocation:
    """Per-stream power allocation by successive monomial condensation.

    Maximizing the rate is minimizing ``eve_product / min(relay_product,
    dest_product)``; the products in the denominator are condensed factor by
    factor around the current point, giving a GP whose solution never
    degrades the exact objective.  The uniform split is kept as a fallback
    candidate, so the result is never worse than uniform.
    """
    s = plan.streams
    if total_power <= 0 or noise_power <= 0:
        raise ValueError("total_power and noise_power must be positive")
    p1 = [f"a{i}" for i in range(s)]
    p2 = [f"r{i}" for i in range(s)]
    floor = 1e-12 * total_power

    def point_arrays(point) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.array([point[v] for v in p1]),
            np.array([point[v] for v in p2]),
        )

    def exact(point) -> float:
        a, r = point_arrays(point)
        relay, dest, eve = closed_form_rate_terms(plan, a, r, noise_power)
        return 2.0 ** (-2.0 * (min(relay, dest) - eve))

    def noisy_factor(gains_vars) -> Posynomial:
        terms = [(1.0, {})]
        terms.extend((g / noise_power, {v: 1.0}) for g, v in gains_vars if g > 0.0)
        return Posynomial.from_terms(terms)

    def build(point):
        eve_prod = Posynomial.constant(1.0)
        for i in range(s):
            eve_prod = eve_prod * noisy_factor(
                [(plan.gain_se[i], p1[i]), (plan.gain_re[i], p2[i])]
            )
        relay_mono = Posynomial.constant(1.0)
        dest_mono = Posynomial.constant(1.0)
        for i in range(s):
            relay_mono = relay_mono * condense(
                noisy_factor([(plan.gain_sr[i], p1[i])]), point
            )
            dest_mono = dest_mono * condense(
                noisy_factor([(plan.gain_rd[i], p2[i])]), point
            )
        mu = Posynomial.monomial(1.0, {"mu": 1.0})
        ineqs = [
            relay_mono.monomial_power(-1.0) * mu.monomial_power(-1.0),
            dest_mono.monomial_power(-1.0) * mu.monomial_power(-1.0),
            Posynomial.from_terms([(1.0 / total_power, {v: 1.0}) for v in p1]),
            Posynomial.from_terms([(1.0 / total_power, {v: 1.0}) for v in p2]),
        ]
        for v in p1 + p2:
            ineqs.append(Posynomial.monomial(floor, {v: -1.0}))
        init = {v: max(0.99 * point[v], 1.01 * floor) for v in p1 + p2}
        a = np.array([init[v] for v in p1])
        r = np.array([init[v] for v in p2])
        relay, dest, _ = closed_form_rate_terms(plan, a, r, noise_power)
        init["mu"] = 1.5 * 2.0 ** (-2.0 * min(relay, dest))
        return (
            GpProblem(objective=mu * eve_prod, inequalities=tuple(ineqs)),
            init,
        )

    # condensation is a local method and the uniform start overcommits to
    # streams the eavesdropper hears better than the legitimate nodes, so a
    # second start that starves those streams is tried when they exist
    starts = [np.full(s, 0.9 * total_power / s)]
    favored = np.minimum(plan.gain_sr, plan.gain_rd) > plan.gain_se + plan.gain_re
    if favored.any() and not favored.all():
        starts.append(
            np.where(favored, 0.9 * total_power / favored.sum(), 10.0 * floor)
        )

    a = r = None
    res = None
    for start_powers in starts:
        start = {v: float(p) for vs in (p1, p2) for v, p in zip(vs, start_powers)}
        attempt = successive_condensation(
            build, exact, start, tol=tol, max_iters=60, gp_tol=1e-7
        )
        cand_a, cand_r = point_arrays(attempt.point)
        if res is None or simple_rate(plan, cand_a, cand_r, noise_power) > simple_rate(
            plan, a, r, noise_power
        ):
            a, r, res = cand_a, cand_r, attempt

    # never return something worse than the uniform split
    uni = uniform_powers(plan, total_power)
    if simple_rate(plan, uni, uni, noise_power) > simple_rate(plan, a, r, noise_power):
        a, r = uni.copy(), uni.copy()
    relay, dest, eve = closed_form_rate_terms(plan, a, r, noise_power)
    raw = min(relay, dest) - min(relay, eve)
    return SimpleAllocation(
        info1=a,
        info2=r,
        rate=max(raw, 0.0),
        raw_rate=min(relay, dest) - eve,
        iterations=res.iterations,
        converged=res.converged,
        trace=res.trace,
    )


# ---------------------------------------------------------------------------
# Jamming design
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JamPlan:
    """Jamming precoders: strong toward the eavesdropper, weak toward the
    protected receiver (destination->relay in phase 1, source->destination in
    phase 2), from GSVDs with the roles reversed."""

    jam_dest: np.ndarray  # nb x kb, phase-1 jammer at the destination
    jam_src: np.ndarray  # na x ka, phase-2 jammer at the source


def jam_plan(ch: ChannelSet) -> JamPlan:
    fb = gsvd(ch.h_be, ch.h_br)
    fa = gsvd(ch.h_ae, ch.h_ab)
    tb, _ = _normalized_precoder(fb)
    ta, _ = _normalized_precoder(fa)
    return JamPlan(jam_dest=tb, jam_src=ta)


@dataclass(frozen=True)
class PcjOperators:
    """Effective matrices: signal and jamming as seen by every receiver."""

    sig_relay: np.ndarray  # h_ar @ precoder_src
    sig_eve1: np.ndarray  # h_ae @ precoder_src
    sig_dest: np.ndarray  # h_rb @ precoder_relay
    sig_eve2: np.ndarray  # h_re @ precoder_relay
    jam_relay: np.ndarray  # h_br @ jam_dest (phase-1 leakage into the relay)
    jam_eve1: np.ndarray  # h_be @ jam_dest
    jam_dest_leak: np.ndarray  # h_ab @ jam_src (phase-2 leakage into the destination)
    jam_eve2: np.ndarray  # h_ae @ jam_src


def pcj_operators(ch: ChannelSet, plan: StreamPlan, jams: JamPlan) -> PcjOperators:
    return PcjOperators(
        sig_relay=ch.h_ar @ plan.precoder_src,
        sig_eve1=ch.h_ae @ plan.precoder_src,
        sig_dest=ch.h_rb @ plan.precoder_relay,
        sig_eve2=ch.h_re @ plan.precoder_relay,
        jam_relay=ch.h_br @ jams.jam_dest,
        jam_eve1=ch.h_be @ jams.jam_dest,
        jam_dest_leak=ch.h_ab @ jams.jam_src,
        jam_eve2=ch.h_ae @ jams.jam_src,
    )


@dataclass(frozen=True)
class PcjPowers:
    info1: np.ndarray  # (s,)
    jam1: np.ndarray  # (kb,)
    info2: np.ndarray  # (s,)
    jam2: np.ndarray  # (ka,)

    @property
    def phase1_total(self) -> float:
        return float(self.info1.sum() + self.jam1.sum())

    @property
    def phase2_total(self) -> float:
        return float(self.info2.sum() + self.jam2.sum())


@dataclass(frozen=True)
class PcjRates:
    relay_info: float
    dest_info: float
    eve_info: float
    forwardable: float  # what the relay chain can deliver
    intercepted: float  # what the eavesdropper extracts (capped by the relay)
    rate: float
    raw_rate: float


def _cov(mat: np.ndarray, powers: np.ndarray) -> np.ndarray:
    c = (mat * powers) @ mat.conj().T
    return 0.5 * (c + c.conj().T)


def pcj_mutual_info(ops: PcjOperators, powers: PcjPowers, noise_power: float) -> PcjRates:
    """Colored-noise mutual informations of the jammed two-phase transmission.

    The eavesdropper stacks her two phase observations (the relay repeats the
    same symbols), so her term uses the 2x2-block signal covariance against a
    block-diagonal jamming-plus-thermal noise covariance.
    """
    nr = ops.sig_relay.shape[0]
    nb = ops.sig_dest.shape[0]
    ne = ops.sig_eve1.shape[0]
    eye = np.eye

    noise_relay = noise_power * eye(nr) + _cov(ops.jam_relay, powers.jam1)
    relay_info = 0.5 * colored_logdet(_cov(ops.sig_relay, powers.info1), noise_relay)

    noise_dest = noise_power * eye(nb) + _cov(ops.jam_dest_leak, powers.jam2)
    dest_info = 0.5 * colored_logdet(_cov(ops.sig_dest, powers.info2), noise_dest)

    top = ops.sig_eve1 * np.sqrt(powers.info1)
    bottom = ops.sig_eve2 * np.sqrt(powers.info2)
    stacked = np.vstack([top, bottom])
    sig_eve = stacked @ stacked.conj().T
    sig_eve = 0.5 * (sig_eve + sig_eve.conj().T)
    noise_eve = np.zeros((2 * ne, 2 * ne), dtype=np.complex128)
    noise_eve[:ne, :ne] = noise_power * eye(ne) + _cov(ops.jam_eve1, powers.jam1)
    noise_eve[ne:, ne:] = noise_power * eye(ne) + _cov(ops.jam_eve2, powers.jam2)
    eve_info = 0.5 * colored_logdet(sig_eve, noise_eve)

    forwardable = min(relay_info, dest_info)
    intercepted = min(relay_info, eve_info)
    raw = forwardable - intercepted
    return PcjRates(
        relay_info=relay_info,
        dest_info=dest_info,
        eve_info=eve_info,
        forwardable=forwardable,
        intercepted=intercepted,
        rate=max(raw, 0.0),
        raw_rate=forwardable - eve_info,
    )


# ---------------------------------------------------------------------------
# Projected-Newton refinement of the jammed design
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RefineResult:
    powers: PcjPowers
    rates: PcjRates
    iterations: int
    converged: bool
    stalled: bool
    chosen: str  # which candidate won: "refined" | "seed" | "no-jam"
    trace: tuple[float, ...]  # ascent objective at every accepted iterate
    budget_overshoot: float  # worst constraint excess over all iterates


class _PcjObjective:
    """Secrecy-rate surrogate of the jammed design with analytic gradients.

    The no-jam optimum balances the two hops, which puts the exact objective
    ``min(relay, dest) - eve`` right on its kink; ascent therefore works on a
    softmin of the two delivered-information terms (understating the true
    minimum by at most ``ln 2 / beta`` bits), while candidate selection at
    the end always uses the exact clamped rate.
    """

    def __init__(self, ops: PcjOperators, noise_power: float, beta: float = 200.0):
        self.ops = ops
        self.noise = noise_power
        self.beta = beta
        self.s = ops.sig_relay.shape[1]
        self.kb = ops.jam_relay.shape[1]
        self.ka = ops.jam_dest_leak.shape[1]
        self.dim = 2 * self.s + self.kb + self.ka

    def split(self, theta: np.ndarray) -> PcjPowers:
        s, kb, ka = self.s, self.kb, self.ka
        return PcjPowers(
            info1=theta[:s],
            jam1=theta[s : s + kb],
            info2=theta[s + kb : 2 * s + kb],
            jam2=theta[2 * s + kb :],
        )

    def _softmin(self, a: float, b: float) -> float:
        return min(a, b) - math.log1p(math.exp(-self.beta * abs(a - b))) / self.beta

    def smooth_value(self, theta: np.ndarray) -> float:
        r = pcj_mutual_info(self.ops, self.split(theta), self.noise)
        return self._softmin(r.relay_info, r.dest_info) - r.eve_info

    def smooth_gradient(self, theta: np.ndarray) -> np.ndarray:
        """Power-space gradient; meaningful only where all powers are positive.

        The eavesdropper combines both phases of a stream coherently, so her
        information has root-power cross terms: the power-space slope of a
        stream with zero power in one phase but nonzero power in the other is
        genuinely infinite.  Ascent therefore runs in amplitude coordinates
        (see amp_gradient); this view exists for finite-difference checks.
        """
        q = np.sqrt(np.maximum(theta, 0.0))
        t_ar, t_rb, gq_relay, gq_dest, gq_eve = self._amp_core(q)
        w1 = self._weight(t_ar, t_rb)
        gq = w1 * gq_relay + (1.0 - w1) * gq_dest - gq_eve
        return gq / (2.0 * np.maximum(q, 1e-150))

    def amp_value(self, q: np.ndarray) -> float:
        return self.smooth_value(q * q)

    def amp_gradient(self, q: np.ndarray) -> np.ndarray:
        t_ar, t_rb, gq_relay, gq_dest, gq_eve = self._amp_core(q)
        w1 = self._weight(t_ar, t_rb)
        return w1 * gq_relay + (1.0 - w1) * gq_dest - gq_eve

    def _weight(self, t_ar: float, t_rb: float) -> float:
        return 1.0 / (1.0 + math.exp(min(self.beta * (t_ar - t_rb), 500.0)))

    def _amp_core(self, q: np.ndarray):
        """Hop informations and amplitude-space gradients (finite everywhere)."""
        ops, noise = self.ops, self.noise
        s, kb, ka = self.s, self.kb, self.ka
        q1, qj1 = q[:s], q[s : s + kb]
        q2, qj2 = q[s + kb : 2 * s + kb], q[2 * s + kb :]
        p = PcjPowers(info1=q1 * q1, jam1=qj1 * qj1, info2=q2 * q2, jam2=qj2 * qj2)
        ln4 = 2.0 * math.log(2.0)
        nr = ops.sig_relay.shape[0]
        nb = ops.sig_dest.shape[0]
        ne = ops.sig_eve1.shape[0]

        c_r = noise * np.eye(nr) + _cov(ops.jam_relay, p.jam1)
        m_r = c_r + _cov(ops.sig_relay, p.info1)
        c_b = noise * np.eye(nb) + _cov(ops.jam_dest_leak, p.jam2)
        m_b = c_b + _cov(ops.sig_dest, p.info2)

        c_e = np.zeros((2 * ne, 2 * ne), dtype=np.complex128)
        c_e[:ne, :ne] = noise * np.eye(ne) + _cov(ops.jam_eve1, p.jam1)
        c_e[ne:, ne:] = noise * np.eye(ne) + _cov(ops.jam_eve2, p.jam2)
        stacked = np.vstack([ops.sig_eve1 * q1, ops.sig_eve2 * q2])
        m_e = c_e + stacked @ stacked.conj().T
        m_e = 0.5 * (m_e + m_e.conj().T)

        c_r_inv = np.linalg.inv(c_r)
        m_r_inv = np.linalg.inv(0.5 * (m_r + m_r.conj().T))
        c_b_inv = np.linalg.inv(c_b)
        m_b_inv = np.linalg.inv(0.5 * (m_b + m_b.conj().T))
        ce1_inv = np.linalg.inv(c_e[:ne, :ne])
        ce2_inv = np.linalg.inv(c_e[ne:, ne:])
        m_e_inv = np.linalg.inv(m_e)

        def diag_quad(mat, inv):
            return np.real(np.einsum("ij,ij->j", mat.conj(), inv @ mat))

        gq_relay = np.zeros(self.dim)
        gq_relay[:s] = 2.0 * q1 * diag_quad(ops.sig_relay, m_r_inv) / ln4
        gq_relay[s : s + kb] = (
            2.0
            * qj1
            * (diag_quad(ops.jam_relay, m_r_inv) - diag_quad(ops.jam_relay, c_r_inv))
            / ln4
        )

        gq_dest = np.zeros(self.dim)
        gq_dest[s + kb : 2 * s + kb] = 2.0 * q2 * diag_quad(ops.sig_dest, m_b_inv) / ln4
        gq_dest[2 * s + kb :] = (
            2.0
            * qj2
            * (
                diag_quad(ops.jam_dest_leak, m_b_inv)
                - diag_quad(ops.jam_dest_leak, c_b_inv)
            )
            / ln4
        )

        gq_eve = np.zeros(self.dim)
        sol = m_e_inv @ stacked  # columns are M^-1 h_i
        gq_eve[:s] = (
            2.0
            * np.real(np.einsum("ij,ij->j", ops.sig_eve1.conj(), sol[:ne, :]))
            / ln4
        )
        gq_eve[s + kb : 2 * s + kb] = (
            2.0
            * np.real(np.einsum("ij,ij->j", ops.sig_eve2.conj(), sol[ne:, :]))
            / ln4
        )
        gq_eve[s : s + kb] = (
            2.0
            * qj1
            * (
                diag_quad(ops.jam_eve1, m_e_inv[:ne, :ne])
                - diag_quad(ops.jam_eve1, ce1_inv)
            )
            / ln4
        )
        gq_eve[2 * s + kb :] = (
            2.0
            * qj2
            * (
                diag_quad(ops.jam_eve2, m_e_inv[ne:, ne:])
                - diag_quad(ops.jam_eve2, ce2_inv)
            )
            / ln4
        )

        relay_info = 0.5 * colored_logdet(m_r - c_r, c_r)
        dest_info = 0.5 * colored_logdet(m_b - c_b, c_b)
        return relay_info, dest_info, gq_relay, gq_dest, gq_eve


def _project_budget(x: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto the nonnegative simplex cap {x >= 0, sum <= budget}."""
    x = np.maximum(x, 0.0)
    if x.sum() <= budget:
        return x
    u = np.sort(x)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, x.size + 1)
    rho = np.nonzero(u * idx > (css - budget))[0][-1]
    theta = (css[rho] - budget) / (rho + 1.0)
    return np.maximum(x - theta, 0.0)


def _project_amp_ball(q: np.ndarray, budget: float) -> np.ndarray:
    """Project onto {q >= 0, sum(q^2) <= budget} (clip, then radial rescale)."""
    q = np.maximum(q, 0.0)
    total = float(q @ q)
    if total <= budget:
        return q
    return q * math.sqrt(budget / total)


def refine_pcj(
    ch: ChannelSet,
    total_power: float,
    noise_power: float,
    budget: str = "global",
    max_iters: int = 100,
    grad_tol: float = 1e-6,
) -> RefineResult:
    """Jammed multi-stream design: seed jamming, then projected-Newton ascent.

    Starts from the no-jam optimizer's powers with a small uniform jamming
    seed (a zero jamming start is a stationary boundary point) and ascends
    the smoothed secrecy rate in amplitude (root-power) coordinates, where
    the eavesdropper's two-phase combining is differentiable and each trace
    budget becomes a Euclidean ball: analytic gradients, a finite-difference
    Hessian of the gradient, a diagonal response-scale preconditioner, and a
    monotone line search with step expansion.  The returned allocation is the
    best of the refined point, the seed, and the pure no-jam allocation, so
    jamming can never make things worse.
    """
    if budget not in ("global", "individual"):
        raise ValueError(f"unknown budget {budget!r}")
    plan = stream_plan(ch)
    jams = jam_plan(ch)
    ops = pcj_operators(ch, plan, jams)
    obj = _PcjObjective(ops, noise_power)
    s, kb, ka = obj.s, obj.kb, obj.ka

    # the information streams' own budget: the whole phase budget when power
    # is pooled, half of it when each node is capped separately
    info_budget = total_power if budget == "global" else total_power / 2.0
    base = optimize_simple(plan, info_budget, noise_power)
    no_jam = np.concatenate([base.info1, np.zeros(kb), base.info2, np.zeros(ka)])

    eps = 1e-3 * total_power
    seed = no_jam.copy()
    seed[s : s + kb] = eps / kb
    seed[2 * s + kb :] = eps / ka
    if budget == "global":
        # shrink the information powers just enough to fit beside the seed
        for sl in (slice(0, s), slice(s + kb, 2 * s + kb)):
            excess = seed[sl].sum() + eps - total_power
            if excess > 0:
                seed[sl] *= (seed[sl].sum() - excess) / seed[sl].sum()

    if budget == "global":
        groups = ((slice(0, s + kb), total_power), (slice(s + kb, obj.dim), total_power))
    else:
        half = total_power / 2.0
        groups = (
            (slice(0, s), half),
            (slice(s, s + kb), half),
            (slice(s + kb, 2 * s + kb), half),
            (slice(2 * s + kb, obj.dim), half),
        )

    def project(q: np.ndarray) -> np.ndarray:
        out = np.empty_like(q)
        for sl, cap in groups:
            out[sl] = _project_amp_ball(q[sl], cap)
        return out

    def overshoot(q: np.ndarray) -> float:
        worst = max(max(float(q[sl] @ q[sl]) - cap for sl, cap in groups), 0.0)
        return max(worst, -float(min(q.min(), 0.0)) ** 2)

    # per-coordinate amplitude scale at which the objective starts responding:
    # the level where a knob's strongest effect crosses the thermal floor
    col_power = lambda m: np.einsum("ij,ij->j", m.conj(), m).real
    response = np.concatenate(
        [
            np.maximum(col_power(ops.sig_relay), col_power(ops.sig_eve1)),
            np.maximum(col_power(ops.jam_relay), col_power(ops.jam_eve1)),
            np.maximum(col_power(ops.sig_dest), col_power(ops.sig_eve2)),
            np.maximum(col_power(ops.jam_dest_leak), col_power(ops.jam_eve2)),
        ]
    )
    floor = np.sqrt(noise_power / np.maximum(response, 1e-300))

    def fd_hessian(qv: np.ndarray, grad: np.ndarray) -> np.ndarray:
        delta = 1e-4 * np.maximum(qv, floor)
        hess = np.empty((obj.dim, obj.dim))
        for j in range(obj.dim):
            probe = qv.copy()
            probe[j] += delta[j]
            hess[:, j] = (obj.amp_gradient(probe) - grad) / delta[j]
        return 0.5 * (hess + hess.T)

    def make_direction(hess: np.ndarray, qv: np.ndarray, grad: np.ndarray) -> np.ndarray:
        # precondition by the response scales before regularizing: raw
        # curvatures still differ by many orders of magnitude across knobs
        scale = np.maximum(qv, floor)
        neg = -(scale[:, None] * hess * scale[None, :])
        gs = scale * grad
        w = np.linalg.eigvalsh(neg)
        tau = max(1e-10 * max(abs(w[-1]), 1.0), -1.5 * w[0] if w[0] < 0 else 0.0)
        try:
            direction = scale * np.linalg.solve(neg + tau * np.eye(obj.dim), gs)
        except np.linalg.LinAlgError:
            direction = scale * gs
        if not np.all(np.isfinite(direction)) or grad @ direction <= 0:
            direction = scale * gs
        # keep the widest line-search probe finite even for wild directions
        dnorm = np.linalg.norm(direction)
        cap = 1e6 * math.sqrt(total_power)
        if dnorm > cap:
            direction *= cap / dnorm
        return direction

    def line_search(
        qv: np.ndarray, val: float, direction: np.ndarray
    ) -> tuple[bool, np.ndarray, float]:
        step = 1.0
        for _ in range(40):
            cand = project(qv + step * direction)
            cand_val = obj.amp_value(cand)
            if cand_val > val + 1e-14:
                # expand while it keeps paying off, then keep the best
                while step < 1024.0:
                    wider = project(qv + 2.0 * step * direction)
                    wider_val = obj.amp_value(wider)
                    if wider_val <= cand_val:
                        break
                    step *= 2.0
                    cand, cand_val = wider, wider_val
                return True, cand, cand_val
            step *= 0.5
        return False, qv, val

    q = project(np.sqrt(seed))
    value = obj.amp_value(q)
    trace = [value]
    worst_overshoot = overshoot(q)
    iterations = 0
    converged = False
    stalled = False
    hess: np.ndarray | None = None
    hess_age = 0
    for _ in range(max_iters):
        iterations += 1
        grad = obj.amp_gradient(q)
        proj_grad = q - project(q + grad)
        if np.linalg.norm(proj_grad) < grad_tol:
            converged = True
            break
        # the finite-difference Hessian costs `dim` gradient evaluations, so
        # reuse it for a few steps and refresh on staleness or a failed step
        if hess is None or hess_age >= 4:
            hess = fd_hessian(q, grad)
            hess_age = 0
        improved, q_new, val_new = line_search(q, value, make_direction(hess, q, grad))
        if not improved and hess_age > 0:
            hess = fd_hessian(q, grad)
            hess_age = 0
            improved, q_new, val_new = line_search(
                q, value, make_direction(hess, q, grad)
            )
        if not improved:
            stalled = True
            break
        q, value = q_new, val_new
        hess_age += 1
        trace.append(value)
        worst_overshoot = max(worst_overshoot, overshoot(q))

    candidates = {
        "refined": q * q,
        "seed": project(np.sqrt(seed)) ** 2,
        "no-jam": no_jam,
    }
    best_name, best_rate, best_theta = None, -math.inf, None
    for name, th in candidates.items():
        r = pcj_mutual_info(ops, obj.split(th), noise_power).rate
        if r > best_rate + 1e-15:
            best_name, best_rate, best_theta = name, r, th
    powers = obj.split(best_theta)
    return RefineResult(
        powers=powers,
        rates=pcj_mutual_info(ops, powers, noise_power),
        iterations=iterations,
        converged=converged,
        stalled=stalled,
        chosen=best_name,
        trace=tuple(trace),
        budget_overshoot=worst_overshoot,
    )
