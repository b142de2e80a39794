"""Fixed-target-rate relaying with orthogonal information/jamming subspaces.

When the eavesdropper's channels are unknown, nothing can be steered away
from her specifically.  Instead each phase's signal space is split into an
information subspace (top singular directions of the legitimate hop) and its
orthogonal complement: the information power is the minimum needed to hit a
target rate, and everything left over is spent jamming uniformly across the
complement, where receive beamforming guarantees the legitimate link never
sees it.  Full cooperation (``fcj``) jams from the active transmitter and
the idle helper; partial cooperation (``pcj``) keeps only the helper's
jamming; ``none`` is the jamming-free baseline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import colored_logdet, water_fill_capacity, water_fill_min_power
from .scenario import ChannelSet

__all__ = [
    "SubspacePlan",
    "JammingAllocation",
    "MinPowerResult",
    "DimensionCost",
    "SelectionResult",
    "MiReport",
    "DimBoundReport",
    "plan_for_dimension",
    "min_power_for_rate",
    "select_dimension",
    "allocate",
    "mi_difference",
    "jamming_dim_bound_check",
]

MODES = ("fcj", "pcj", "none")
BUDGETS = ("global", "individual")
CRITERIA = ("power-times-dimension", "power-only")


@dataclass(frozen=True)
class SubspacePlan:
    """Beamformers splitting each phase into information and jamming spaces."""

    k: int
    combine_relay: np.ndarray  # (nr, k) receive combiner, first hop
    combine_dest: np.ndarray  # (nb, k) receive combiner, second hop
    info_source: np.ndarray  # (na, k) information precoder, phase 1
    info_relay: np.ndarray  # (nr, k) information precoder, phase 2
    jam_source_own: np.ndarray  # (na, na-k) transmitter jamming, phase 1
    jam_relay_own: np.ndarray  # (nr, nr-k) transmitter jamming, phase 2
    jam_dest_helper: np.ndarray  # (nb, nb-k or 0) helper jamming, phase 1
    jam_source_helper: np.ndarray  # (na, na-k or 0) helper jamming, phase 2
    info_gains_hop1: np.ndarray  # squared top-k singular values of h_ar
    info_gains_hop2: np.ndarray  # squared top-k singular values of h_rb
    mode: str  # "fcj" | "pcj" | "none"


@dataclass(frozen=True)
class MinPowerResult:
    power1: float
    power2: float
    feasible: bool


@dataclass(frozen=True)
class DimensionCost:
    """One candidate subspace dimension and what it would cost."""

    dim: int
    power1: float
    power2: float
    feasible: bool
    cost: float


@dataclass(frozen=True)
class JammingAllocation:
    """Diagonal covariances for one plan: water-filled info, uniform jamming."""

    info1: np.ndarray
    info2: np.ndarray
    jam_own1: np.ndarray
    jam_helper1: np.ndarray
    jam_own2: np.ndarray
    jam_helper2: np.ndarray
    target_rate: float
    outage: bool
    unused_power: tuple[float, float]  # residual with nowhere to go, per phase

    @property
    def phase1_total(self) -> float:
        return float(self.info1.sum() + self.jam_own1.sum() + self.jam_helper1.sum())

    @property
    def phase2_total(self) -> float:
        return float(self.info2.sum() + self.jam_own2.sum() + self.jam_helper2.sum())


@dataclass(frozen=True)
class SelectionResult:
    k: int
    plan: SubspacePlan
    allocation: JammingAllocation
    surveyed: tuple[DimensionCost, ...]


@dataclass(frozen=True)
class MiReport:
    info_dest: float
    info_eve: float
    delta_raw: float
    delta: float


@dataclass(frozen=True)
class DimBoundReport:
    dimension: int
    lower: int
    upper: int
    within: bool


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")


def _check_budget(budget: str) -> None:
    if budget not in BUDGETS:
        raise ValueError(f"unknown budget {budget!r}")


def max_streams(ch: ChannelSet, tol: float = 1e-10) -> int:
    """Largest usable information dimension: the weaker hop's rank."""
    r1 = np.linalg.matrix_rank(ch.h_ar, tol=tol * max(1.0, np.abs(ch.h_ar).max()))
    r2 = np.linalg.matrix_rank(ch.h_rb, tol=tol * max(1.0, np.abs(ch.h_rb).max()))
    return int(min(r1, r2))


def plan_for_dimension(ch: ChannelSet, dim: int, mode: str = "fcj") -> SubspacePlan:
    """Build all beamformers for an information subspace of a given dimension.

    The information directions are the top singular directions of each hop;
    a transmitter's own jamming lives in its remaining right singular
    directions, and a helper's jamming in the null space of its channel as
    seen through the receiver's combiner, so neither can disturb the
    legitimate links.  A helper with no spare directions simply gets an
    empty jammer.
    """
    _check_mode(mode)
    if dim < 1:
        raise ValueError("information dimension must be at least 1")
    s = max_streams(ch)
    if dim > s:
        raise ValueError(f"dimension {dim} exceeds the usable maximum {s}")

    u1, sv1, v1h = np.linalg.svd(ch.h_ar, full_matrices=True)
    u2, sv2, v2h = np.linalg.svd(ch.h_rb, full_matrices=True)
    combine_relay = u1[:, :dim]
    combine_dest = u2[:, :dim]
    info_source = v1h.conj().T[:, :dim]
    info_relay = v2h.conj().T[:, :dim]
    jam_source_own = v1h.conj().T[:, dim:]
    jam_relay_own = v2h.conj().T[:, dim:]

    # helper jamming: trailing right singular directions of the channel as
    # seen through the receive combiner; these have zero singular value, so
    # the combined output is exactly protected
    _, _, vbr = np.linalg.svd(combine_relay.conj().T @ ch.h_br, full_matrices=True)
    jam_dest_helper = vbr.conj().T[:, dim:]
    _, _, vab = np.linalg.svd(combine_dest.conj().T @ ch.h_ab, full_matrices=True)
    jam_source_helper = vab.conj().T[:, dim:]

    return SubspacePlan(
        k=dim,
        combine_relay=combine_relay,
        combine_dest=combine_dest,
        info_source=info_source,
        info_relay=info_relay,
        jam_source_own=jam_source_own,
        jam_relay_own=jam_relay_own,
        jam_dest_helper=jam_dest_helper,
        jam_source_helper=jam_source_helper,
        info_gains_hop1=sv1[:dim] ** 2,
        info_gains_hop2=sv2[:dim] ** 2,
        mode=mode,
    )


def min_power_for_rate(
    plan: SubspacePlan,
    target_rate: float,
    noise_power: float,
    info_budget: float | None = None,
) -> MinPowerResult:
    """Cheapest per-phase information powers that exactly hit the target rate.

    Each hop's effective channel is diagonal with the top singular values,
    so the inner problem is plain minimum-power water-filling.  When an
    information budget is given, needing more than it makes the result
    infeasible (the link would be in outage).
    """
    wf1 = water_fill_min_power(plan.info_gains_hop1, target_rate, noise_power)
    wf2 = water_fill_min_power(plan.info_gains_hop2, target_rate, noise_power)
    feasible = wf1.feasible and wf2.feasible
    if info_budget is not None:
        feasible = feasible and wf1.total <= info_budget and wf2.total <= info_budget
    return MinPowerResult(power1=wf1.total, power2=wf2.total, feasible=feasible)


def _info_budget(total_power: float, budget: str) -> float:
    # under individual constraints each phase's power is split evenly between
    # its two transmitting nodes, so the information transmitter gets half
    return total_power if budget == "global" else total_power / 2.0


def select_dimension(
    ch: ChannelSet,
    target_rate: float,
    noise_power: float,
    total_power: float,
    mode: str = "fcj",
    budget: str = "global",
    criterion: str = "power-times-dimension",
) -> SelectionResult:
    """Pick the information dimension by exhaustive search over candidates.

    The default criterion charges each candidate its total information power
    times its dimension, trading transmit power against the size of the
    jamming space it leaves; ``power-only`` is the naive baseline that
    ignores the dimension factor.  If no dimension can reach the target rate
    within budget, the result is an outage allocation at dimension 1.
    """
    _check_mode(mode)
    _check_budget(budget)
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    if total_power <= 0 or noise_power <= 0:
        raise ValueError("total_power and noise_power must be positive")

    cap = _info_budget(total_power, budget)
    s = max_streams(ch)
    surveyed = []
    best: tuple[float, int] | None = None
    for i in range(1, s + 1):
        plan_i = plan_for_dimension(ch, i, mode)
        need = min_power_for_rate(plan_i, target_rate, noise_power, cap)
        total = need.power1 + need.power2
        cost = total * i if criterion == "power-times-dimension" else total
        surveyed.append(
            DimensionCost(
                dim=i,
                power1=need.power1,
                power2=need.power2,
                feasible=need.feasible,
                cost=cost,
            )
        )
        # strict comparison breaks ties toward the smaller dimension
        if need.feasible and (best is None or cost < best[0]):
            best = (cost, i)

    k = best[1] if best is not None else 1
    plan = plan_for_dimension(ch, k, mode)
    allocation = allocate(plan, target_rate, noise_power, total_power, budget)
    return SelectionResult(
        k=k, plan=plan, allocation=allocation, surveyed=tuple(surveyed)
    )


def _uniform(entries: int, amount: float) -> np.ndarray:
    if entries == 0:
        return np.zeros(0)
    return np.full(entries, amount / entries)


def allocate(
    plan: SubspacePlan,
    target_rate: float,
    noise_power: float,
    total_power: float,
    budget: str = "global",
) -> JammingAllocation:
    """Water-fill the information power, then spread the rest as jamming.

    Under the pooled budget the whole phase residual is split uniformly over
    every active jamming direction of that phase; under individual budgets
    each node spreads its own residual over its own directions.  Partial
    cooperation silences the transmitters' jammers.  The jamming-free
    baseline has nowhere else to put the residual, so its transmitters raise
    the information water level until their budget is gone.  Residual power
    with no direction to use it is reported, not silently dropped.
    """
    _check_budget(budget)
    k = plan.k
    wf1 = water_fill_min_power(plan.info_gains_hop1, target_rate, noise_power)
    wf2 = water_fill_min_power(plan.info_gains_hop2, target_rate, noise_power)
    cap = _info_budget(total_power, budget)
    feasible = wf1.feasible and wf2.feasible and wf1.total <= cap and wf2.total <= cap

    own1 = plan.jam_source_own.shape[1]
    own2 = plan.jam_relay_own.shape[1]
    helper1 = plan.jam_dest_helper.shape[1]
    helper2 = plan.jam_source_helper.shape[1]

    if not feasible:
        return JammingAllocation(
            info1=np.zeros(k),
            info2=np.zeros(k),
            jam_own1=np.zeros(own1),
            jam_helper1=np.zeros(helper1),
            jam_own2=np.zeros(own2),
            jam_helper2=np.zeros(helper2),
            target_rate=target_rate,
            outage=True,
            unused_power=(0.0, 0.0),
        )

    info = [wf1.powers, wf2.powers]
    jam_own = (np.zeros(own1), np.zeros(own2))
    jam_helper = (np.zeros(helper1), np.zeros(helper2))
    unused = [0.0, 0.0]
    gains = (plan.info_gains_hop1, plan.info_gains_hop2)
    for phase, (wf, own_dims, helper_dims) in enumerate(
        ((wf1, own1, helper1), (wf2, own2, helper2))
    ):
        if plan.mode == "none":
            info[phase] = water_fill_capacity(gains[phase], cap, noise_power).powers
            if budget == "individual":
                unused[phase] = total_power / 2.0  # the idle helper's share
            continue
        if budget == "global":
            residual = max(total_power - wf.total, 0.0)
            if plan.mode == "fcj":
                dims = own_dims + helper_dims
                if dims:
                    share = residual / dims
                    jam_own[phase][:] = share
                    jam_helper[phase][:] = share
                else:
                    unused[phase] = residual
            else:
                if helper_dims:
                    jam_helper[phase][:] = residual / helper_dims
                else:
                    unused[phase] = residual
        else:
            half = total_power / 2.0
            own_residual = max(half - wf.total, 0.0)
            if plan.mode == "fcj" and own_dims:
                jam_own[phase][:] = own_residual / own_dims
            else:
                unused[phase] += own_residual
            if helper_dims:
                jam_helper[phase][:] = half / helper_dims
            else:
                unused[phase] += half

    return JammingAllocation(
        info1=info[0],
        info2=info[1],
        jam_own1=jam_own[0],
        jam_helper1=jam_helper[0],
        jam_own2=jam_own[1],
        jam_helper2=jam_helper[1],
        target_rate=target_rate,
        outage=False,
        unused_power=(unused[0], unused[1]),
    )


def _jam_cov(noise_power: float, terms: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    ne = terms[0][0].shape[0]
    cov = noise_power * np.eye(ne, dtype=np.complex128)
    for reach, powers in terms:
        if reach.shape[1]:
            cov = cov + (reach * powers) @ reach.conj().T
    return 0.5 * (cov + cov.conj().T)


def mi_difference(
    ch: ChannelSet,
    plan: SubspacePlan,
    alloc: JammingAllocation,
    noise_power: float,
) -> MiReport:
    """Legitimate-vs-eavesdropper information gap under a subspace plan.

    The legitimate terms use the combined, jamming-free effective channels.
    The eavesdropper coherently stacks both phases of the repeated streams
    against the colored jamming-plus-thermal noise of each phase.  Both
    sides are capped by the fixed codebook rate, and the eavesdropper
    additionally by what the relay could decode — bits the relay never
    forwarded cannot be the message.
    """
    eff1 = plan.combine_relay.conj().T @ ch.h_ar @ plan.info_source
    eff2 = plan.combine_dest.conj().T @ ch.h_rb @ plan.info_relay
    eye_k = noise_power * np.eye(plan.k, dtype=np.complex128)
    relay_info = 0.5 * colored_logdet((eff1 * alloc.info1) @ eff1.conj().T, eye_k)
    dest_info = 0.5 * colored_logdet((eff2 * alloc.info2) @ eff2.conj().T, eye_k)
    info_dest = min(relay_info, dest_info, alloc.target_rate)

    top = ch.h_ae @ plan.info_source * np.sqrt(alloc.info1)
    bottom = ch.h_re @ plan.info_relay * np.sqrt(alloc.info2)
    stacked = np.vstack([top, bottom])
    ne = top.shape[0]
    noise1 = _jam_cov(
        noise_power,
        [
            (ch.h_ae @ plan.jam_source_own, alloc.jam_own1),
            (ch.h_be @ plan.jam_dest_helper, alloc.jam_helper1),
        ],
    )
    noise2 = _jam_cov(
        noise_power,
        [
            (ch.h_re @ plan.jam_relay_own, alloc.jam_own2),
            (ch.h_ae @ plan.jam_source_helper, alloc.jam_helper2),
        ],
    )
    colored = np.zeros((2 * ne, 2 * ne), dtype=np.complex128)
    colored[:ne, :ne] = noise1
    colored[ne:, ne:] = noise2
    eve_stacked = 0.5 * colored_logdet(stacked @ stacked.conj().T, colored)
    info_eve = min(eve_stacked, relay_info, alloc.target_rate)

    delta_raw = info_dest - info_eve
    return MiReport(
        info_dest=info_dest,
        info_eve=info_eve,
        delta_raw=delta_raw,
        delta=max(delta_raw, 0.0),
    )


def jamming_dim_bound_check(ch: ChannelSet, plan: SubspacePlan) -> DimBoundReport:
    """Measure the phase-1 jamming space the eavesdropper actually sees.

    With full cooperation she faces the union of the transmitter's and the
    helper's jamming images, which spans at least the transmitter's spare
    dimensions and at most twice that (saturated by her antenna count).
    """
    if plan.mode != "fcj":
        raise ValueError("the dimension bound applies to full-cooperation plans")
    na_spare = plan.jam_source_own.shape[1]
    ne = ch.h_ae.shape[0]
    images = np.hstack(
        [ch.h_ae @ plan.jam_source_own, ch.h_be @ plan.jam_dest_helper]
    )
    if images.shape[1] == 0:
        dimension = 0
    else:
        sv = np.linalg.svd(images, compute_uv=False)
        dimension = int(np.sum(sv > 1e-10 * max(sv[0], 1.0)))
    lower = min(na_spare, ne)
    upper = min(2 * na_spare, ne)
    return DimBoundReport(
        dimension=dimension,
        lower=lower,
        upper=upper,
        within=lower <= dimension <= upper,
    )
