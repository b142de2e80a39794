"""Single-stream transmission through a single-antenna relay, with cooperative jamming.

Phase 1: the source beamforms one stream to the relay while the destination
jams the eavesdropper from the null space of its own channel to the relay.
Phase 2: the relay retransmits (repetition coding, so the eavesdropper
maximum-ratio-combines the two phases) while the source jams from the null
space of the effective relay-to-destination direction.

Power allocation across the four transmit powers is a geometric program after
two substitutions: the eavesdropper's jammed SINR in each phase equals
``power / effective_inverse_gain``, and each effective inverse gain is (for a
single-antenna eavesdropper, exactly) an affine function of the jamming power
spent on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gp import CondensationCoeffs, GpProblem, Posynomial, solve_gp
from .numerics import (
    HermitianPencil,
    max_rank1_gen_eigvec,
    null_basis,
    principal_gen_eigvec,
    unit_phase,
)
from .scenario import ChannelSet

__all__ = [
    "InfeasibleRateError",
    "PowerAllocation",
    "SinrBreakdown",
    "BeamformerSet",
    "SingleStreamResult",
    "PowerMinResult",
    "RankOneCheck",
    "info_beamformer",
    "dest_jam_direction",
    "source_jam_direction",
    "link_sinrs",
    "secrecy_rate_from_sinrs",
    "maximize_rate",
    "minimize_power",
    "rank_one_optimality_check",
]

_BLIND_TOL = 1e-14  # relative gain below which the eavesdropper's tap is ignored
_FLAT_TOL = 1e-9  # relative spread below which jamming is declared ineffective


class InfeasibleRateError(Exception):
    """The requested secrecy rate exceeds what jamming can ever deliver."""


# ---------------------------------------------------------------------------
# Result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerAllocation:
    """Transmit powers (mW): info + jamming for each of the two phases."""

    source_info: float
    dest_jam: float
    relay_info: float
    source_jam: float

    def __post_init__(self):
        for name in ("source_info", "dest_jam", "relay_info", "source_jam"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def phase1_total(self) -> float:
        return self.source_info + self.dest_jam

    @property
    def phase2_total(self) -> float:
        return self.relay_info + self.source_jam

    @property
    def peak_phase(self) -> float:
        return max(self.phase1_total, self.phase2_total)

    def scaled(self, factor: float) -> "PowerAllocation":
        return PowerAllocation(
            source_info=self.source_info * factor,
            dest_jam=self.dest_jam * factor,
            relay_info=self.relay_info * factor,
            source_jam=self.source_jam * factor,
        )


@dataclass(frozen=True)
class SinrBreakdown:
    """Post-combining SINRs of the four relevant receivers."""

    source_relay: float
    relay_dest: float
    eve_phase1: float
    eve_phase2: float

    @property
    def eve_combined(self) -> float:
        """Eavesdropper SINR after maximum-ratio combining both phases."""
        return self.eve_phase1 + self.eve_phase2


@dataclass(frozen=True)
class BeamformerSet:
    """Unit-norm transmit vectors; jam entries are None when no null space exists."""

    info: np.ndarray
    dest_jam: np.ndarray | None
    source_jam: np.ndarray | None


@dataclass(frozen=True)
class SingleStreamResult:
    allocation: PowerAllocation
    beams: BeamformerSet
    sinr: SinrBreakdown
    rate: float
    lower_bound: float
    iterations: int
    converged: bool
    coeffs: CondensationCoeffs | None


@dataclass(frozen=True)
class PowerMinResult:
    allocation: PowerAllocation
    rate: float
    peak_power: float
    scale_applied: float


@dataclass(frozen=True)
class RankOneCheck:
    samples: int
    max_violation: float
    passed: bool


# ---------------------------------------------------------------------------
# Transmit vectors
# ---------------------------------------------------------------------------

def _require_single_antenna_relay(ch: ChannelSet):
    if ch.h_ar.shape[0] != 1:
        raise ValueError(
            f"single-stream design requires a single-antenna relay, got {ch.h_ar.shape[0]}"
        )


def info_beamformer(ch: ChannelSet, source_power: float, noise_power: float) -> np.ndarray:
    """Source beamformer maximizing the relay-vs-eavesdropper rate ratio.

    Dominant generalized eigenvector of the pencil built from the two
    phase-1 receive correlation matrices at the given transmit power.
    """
    _require_single_antenna_relay(ch)
    if source_power <= 0 or noise_power <= 0:
        raise ValueError("source_power and noise_power must be positive")
    na = ch.h_ar.shape[1]
    snr = source_power / noise_power
    eye = np.eye(na)
    a = eye + snr * ch.h_ar.conj().T @ ch.h_ar
    b = eye + snr * ch.h_ae.conj().T @ ch.h_ae
    vec, _ = principal_gen_eigvec(HermitianPencil(a=a, b=b))
    return vec


def dest_jam_direction(
    ch: ChannelSet, beamformer: np.ndarray, jam_power: float, noise_power: float
) -> np.ndarray | None:
    """Destination's phase-1 jamming vector, zero-forced away from the relay.

    Within the null space of the destination-to-relay channel, the direction
    maximizes the damage to the eavesdropper's MMSE reception of the info
    stream; ``jam_power`` enters through the power-dependent loading term.
    A destination with a single antenna has no null space and returns None.
    """
    basis = null_basis(ch.h_br)
    if basis.shape[1] == 0:
        return None
    b = ch.h_be @ basis
    target = ch.h_ae @ beamformer
    a = b.conj().T @ target
    if np.linalg.norm(a) == 0.0:
        return None
    gram = b.conj().T @ b
    if jam_power > 0:
        w = np.linalg.solve(
            (noise_power / jam_power) * np.eye(basis.shape[1]) + gram, a
        )
    else:
        w = a
    w = w / np.linalg.norm(w)
    return unit_phase(basis @ w)


def source_jam_direction(
    ch: ChannelSet, jam_power: float, noise_power: float
) -> np.ndarray | None:
    """Source's phase-2 jamming vector, zero-forced away from the destination.

    The destination combines phase 2 with a filter matched to the
    relay-to-destination channel, so only the projection of the source's
    direct channel onto that filter must be nulled.
    """
    row = ch.h_rb.conj().T @ ch.h_ab  # effective 1 x na constraint
    basis = null_basis(row)
    if basis.shape[1] == 0:
        return None
    b = ch.h_ae @ basis
    a = basis.conj().T @ ch.h_ae.conj().T @ ch.h_re[:, 0]
    if np.linalg.norm(a) == 0.0:
        return None
    gram = b.conj().T @ b
    if jam_power > 0:
        w = np.linalg.solve(
            (noise_power / jam_power) * np.eye(basis.shape[1]) + gram, a
        )
    else:
        w = a
    w = w / np.linalg.norm(w)
    return unit_phase(basis @ w)


# ---------------------------------------------------------------------------
# SINR evaluation
# ---------------------------------------------------------------------------

def _mmse_sinr(signal: np.ndarray, power: float, jam: np.ndarray | None, jam_power: float,
               noise_power: float) -> float:
    """Post-MMSE SINR of ``sqrt(power) * signal`` against white noise + one jam tap."""
    n = signal.shape[0]
    cov = noise_power * np.eye(n, dtype=np.complex128)
    if jam is not None and jam_power > 0:
        cov = cov + jam_power * np.outer(jam, jam.conj())
    return float(power * np.real(signal.conj() @ np.linalg.solve(cov, signal)))


def link_sinrs(ch: ChannelSet, alloc: PowerAllocation, noise_power: float) -> SinrBreakdown:
    """Exact SINRs for an allocation, rebuilding every transmit vector.

    Each transmitter uses its locally optimal vector at the allocated powers;
    zero-forcing leakage is kept in the formulas (it is zero up to roundoff).
    """
    _require_single_antenna_relay(ch)
    beams = design_beams(ch, alloc, noise_power)
    t_info, t_dj, t_sj = beams.info, beams.dest_jam, beams.source_jam

    # relay receive (single antenna, matched filter trivial)
    sig_r = (ch.h_ar @ t_info).item()
    jam_r = (ch.h_br @ t_dj).item() if t_dj is not None else 0.0
    denom = noise_power + alloc.dest_jam * abs(jam_r) ** 2
    source_relay = alloc.source_info * abs(sig_r) ** 2 / denom

    # destination receive, matched to the relay channel
    h = ch.h_rb[:, 0]
    leak = (h.conj() @ (ch.h_ab @ t_sj)).item() if t_sj is not None else 0.0
    num = alloc.relay_info * np.linalg.norm(h) ** 4
    den = noise_power * np.linalg.norm(h) ** 2 + alloc.source_jam * abs(leak) ** 2
    relay_dest = float(num / den) if den > 0 else 0.0

    eve_phase1 = _mmse_sinr(
        ch.h_ae @ t_info, alloc.source_info,
        ch.h_be @ t_dj if t_dj is not None else None, alloc.dest_jam, noise_power,
    )
    eve_phase2 = _mmse_sinr(
        ch.h_re[:, 0], alloc.relay_info,
        ch.h_ae @ t_sj if t_sj is not None else None, alloc.source_jam, noise_power,
    )
    return SinrBreakdown(
        source_relay=float(source_relay),
        relay_dest=relay_dest,
        eve_phase1=eve_phase1,
        eve_phase2=eve_phase2,
    )


def design_beams(ch: ChannelSet, alloc: PowerAllocation, noise_power: float) -> BeamformerSet:
    """All transmit vectors implied by an allocation."""
    t_info = info_beamformer(ch, max(alloc.source_info, noise_power * 1e-12), noise_power)
    t_dj = dest_jam_direction(ch, t_info, alloc.dest_jam, noise_power)
    t_sj = source_jam_direction(ch, alloc.source_jam, noise_power)
    return BeamformerSet(info=t_info, dest_jam=t_dj, source_jam=t_sj)


def secrecy_rate_from_sinrs(s: SinrBreakdown) -> float:
    """Achievable secrecy rate of the repetition-coded two-phase scheme.

    Positive only when the relay decodes at least as well as the combined
    eavesdropper; the destination-vs-relay order decides which hop limits.
    """
    eve = s.eve_combined
    if not (
        (eve <= s.source_relay < s.relay_dest)
        or (s.source_relay >= max(s.relay_dest, eve))
    ):
        return 0.0
    rate = 0.5 * math.log2(
        (1.0 + min(s.source_relay, s.relay_dest)) / (1.0 + eve)
    )
    return max(rate, 0.0)


# ---------------------------------------------------------------------------
# Effective inverse jamming gains and their affine fits
# ---------------------------------------------------------------------------

def _phase1_jam_geometry(ch: ChannelSet, beamformer: np.ndarray):
    basis = null_basis(ch.h_br)
    target = ch.h_ae @ beamformer
    b = ch.h_be @ basis
    return target, b, b.conj().T @ target


def _phase2_jam_geometry(ch: ChannelSet):
    basis = null_basis(ch.h_rb.conj().T @ ch.h_ab)
    target = ch.h_re[:, 0]
    b = ch.h_ae @ basis
    return target, b, b.conj().T @ target


def _jammed_gain(target, b, a, jam_power: float, noise_power: float) -> float:
    """Eavesdropper's effective channel gain under optimally-directed jamming.

    Equals ``noise * sinr / info_power``; decreases from ``||target||^2`` at
    zero jamming toward its saturation value as jamming grows.
    """
    base = float(np.linalg.norm(target) ** 2)
    if a.shape[0] == 0 or np.linalg.norm(a) == 0.0 or jam_power <= 0:
        return base
    gram = b.conj().T @ b
    m = (noise_power / jam_power) * np.eye(a.shape[0]) + gram
    red = float(np.real(a.conj() @ np.linalg.solve(m, a)))
    return max(base - red, 0.0)


def _saturated_gain(target, b, a) -> float:
    """Limit of :func:`_jammed_gain` as jamming power grows without bound."""
    base = float(np.linalg.norm(target) ** 2)
    if a.shape[0] == 0 or np.linalg.norm(a) == 0.0:
        return base
    gram = b.conj().T @ b
    red = float(np.real(a.conj() @ np.linalg.pinv(gram) @ a))
    return max(base - red, 0.0)


@dataclass(frozen=True)
class _JamFit:
    """Affine model of one phase's effective inverse gain vs jamming power."""

    mode: str  # "affine" | "constant" | "blind"
    slope: float = 0.0
    intercept: float = 0.0
    fit_error: float = 0.0


def _fit_inverse_gain(target, b, a, cap: float, noise_power: float,
                      channel_scale: float, jamming: bool) -> _JamFit:
    base = float(np.linalg.norm(target) ** 2)
    if base < _BLIND_TOL * max(1.0, channel_scale):
        return _JamFit(mode="blind")
    intercept = noise_power / base  # inverse gain at zero jamming, exact
    flat = _JamFit(mode="constant", intercept=intercept)
    if not jamming or a.shape[0] == 0 or np.linalg.norm(a) == 0.0:
        return flat

    powers = np.geomspace(1e-2 * cap, cap, 16)
    gains = np.array([_jammed_gain(target, b, a, p, noise_power) for p in powers])
    if (gains.max() - gains.min()) < _FLAT_TOL * gains.max():
        return flat
    inv = noise_power / np.maximum(gains, 1e-300)
    # pin the intercept and regress only the slope: a free intercept sits many
    # orders below the sampled values and lstsq happily returns it negative
    slope = float((inv - intercept) @ powers / (powers @ powers))
    if slope <= 0:
        return flat
    pred = slope * powers + intercept
    err = float(np.max(np.abs(pred - inv) / np.maximum(inv, np.finfo(float).tiny)))
    return _JamFit(mode="affine", slope=slope, intercept=intercept, fit_error=err)


# ---------------------------------------------------------------------------
# Rate maximization
# ---------------------------------------------------------------------------

def _denominator_posy(fit1: _JamFit, fit2: _JamFit) -> Posynomial:
    """GP model of (1 + eve SINR) / relay SINR up to the constant gain factor."""
    terms: list[tuple[float, dict]] = [(1.0, {"info1": -1.0})]
    if fit1.mode == "affine":
        terms.append((1.0, {"ejam1": -1.0}))
    elif fit1.mode == "constant":
        terms.append((1.0 / fit1.intercept, {}))
    if fit2.mode == "affine":
        terms.append((1.0, {"info1": -1.0, "info2": 1.0, "ejam2": -1.0}))
    elif fit2.mode == "constant":
        terms.append((1.0 / fit2.intercept, {"info1": -1.0, "info2": 1.0}))
    return Posynomial.from_terms(terms)


def _phase_budget_constraints(fit: _JamFit, info: str, ejam: str, cap: float,
                              joint: bool) -> list[Posynomial]:
    """Inequalities for one phase: joint (sum <= cap) or per-node (<= cap each)."""
    out: list[Posynomial] = []
    if fit.mode == "affine":
        if joint:
            denom = cap + fit.intercept / fit.slope
            out.append(
                Posynomial.from_terms(
                    [(1.0 / denom, {info: 1.0}), (1.0 / (fit.slope * denom), {ejam: 1.0})]
                )
            )
        else:
            out.append(Posynomial.monomial(1.0 / cap, {info: 1.0}))
            out.append(
                Posynomial.monomial(1.0 / (fit.slope * cap + fit.intercept), {ejam: 1.0})
            )
        out.append(Posynomial.monomial(fit.intercept, {ejam: -1.0}))  # jam power >= 0
    else:
        out.append(Posynomial.monomial(1.0 / cap, {info: 1.0}))
    return out


def _recover_jam_power(fit: _JamFit, value: float | None) -> float:
    if fit.mode != "affine" or value is None:
        return 0.0
    return max((value - fit.intercept) / fit.slope, 0.0)


def _coeffs_from_fits(fit1: _JamFit, fit2: _JamFit) -> CondensationCoeffs | None:
    if fit1.mode == "affine" and fit2.mode == "affine":
        return CondensationCoeffs(
            c1=fit1.slope, c2=fit1.intercept, c3=fit2.slope, c4=fit2.intercept,
            fit_error_1=fit1.fit_error, fit_error_2=fit2.fit_error,
        )
    return None


def _zero_rate_result(ch: ChannelSet, cap: float, noise_power: float) -> SingleStreamResult:
    alloc = PowerAllocation(source_info=cap, dest_jam=0.0, relay_info=cap, source_jam=0.0)
    sinr = link_sinrs(ch, alloc, noise_power)
    return SingleStreamResult(
        allocation=alloc,
        beams=design_beams(ch, alloc, noise_power),
        sinr=sinr,
        rate=secrecy_rate_from_sinrs(sinr),
        lower_bound=0.0,
        iterations=0,
        converged=True,
        coeffs=None,
    )


def maximize_rate(
    ch: ChannelSet,
    total_power: float,
    noise_power: float,
    budget: str = "global",
    jamming: bool = True,
    max_iters: int = 10,
) -> SingleStreamResult:
    """Secrecy-rate-maximizing power split for the single-stream scheme.

    ``budget`` is "global" (the two transmitters of a phase share
    ``total_power``) or "individual" (each node gets ``total_power / 2``).
    The info beamformer depends on its own power, so the GP solve is wrapped
    in a fixed-point loop that re-derives the beamformer until it settles.
    With ``jamming=False`` both jamming powers are pinned to zero.
    """
    _require_single_antenna_relay(ch)
    if budget not in ("global", "individual"):
        raise ValueError(f"unknown budget {budget!r}")
    if total_power <= 0 or noise_power <= 0:
        raise ValueError("total_power and noise_power must be positive")

    joint = budget == "global"
    cap = total_power if joint else total_power / 2.0
    gain_rd = float(np.linalg.norm(ch.h_rb[:, 0]) ** 2)
    scale_ae = max(1.0, float(np.linalg.norm(ch.h_ae) ** 2))
    scale_re = max(1.0, float(np.linalg.norm(ch.h_re) ** 2))

    t2_target, t2_b, t2_a = _phase2_jam_geometry(ch)
    fit2 = _fit_inverse_gain(t2_target, t2_b, t2_a, cap, noise_power, scale_re, jamming)

    p_info1 = cap
    prev = None
    powers = None
    fits = None
    iterations = 0
    converged = False
    for _ in range(max_iters):
        iterations += 1
        beam = info_beamformer(ch, p_info1, noise_power)
        if prev is not None and np.linalg.norm(beam - prev) < 1e-6:
            converged = True
            break
        prev = beam

        gain_sr = float(abs((ch.h_ar @ beam).item()) ** 2)
        if gain_sr <= 1e-300 or gain_rd <= 1e-300:
            return _zero_rate_result(ch, cap, noise_power)
        t1_target, t1_b, t1_a = _phase1_jam_geometry(ch, beam)
        fit1 = _fit_inverse_gain(t1_target, t1_b, t1_a, cap, noise_power, scale_ae, jamming)
        fits = (fit1, fit2)

        ineqs = _phase_budget_constraints(fit1, "info1", "ejam1", cap, joint)
        ineqs += _phase_budget_constraints(fit2, "info2", "ejam2", cap, joint)
        balance = Posynomial.monomial(gain_sr / gain_rd, {"info1": 1.0, "info2": -1.0})
        init = {"info1": 0.4 * cap, "info2": 0.4 * cap * gain_sr / gain_rd}
        if fit1.mode == "affine":
            init["ejam1"] = fit1.slope * 0.4 * cap + fit1.intercept
        if fit2.mode == "affine":
            init["ejam2"] = fit2.slope * 0.4 * cap + fit2.intercept
        sol = solve_gp(
            GpProblem(
                objective=_denominator_posy(fit1, fit2),
                inequalities=tuple(ineqs),
                equalities=(balance,),
            ),
            init=init,
        )
        powers = sol.x
        p_info1 = powers["info1"]

    alloc = PowerAllocation(
        source_info=powers["info1"],
        dest_jam=_recover_jam_power(fits[0], powers.get("ejam1")),
        relay_info=powers["info2"],
        source_jam=_recover_jam_power(fits[1], powers.get("ejam2")),
    )
    sinr = link_sinrs(ch, alloc, noise_power)
    lower = min(sinr.source_relay, sinr.relay_dest) / (1.0 + sinr.eve_combined)
    return SingleStreamResult(
        allocation=alloc,
        beams=design_beams(ch, alloc, noise_power),
        sinr=sinr,
        rate=secrecy_rate_from_sinrs(sinr),
        lower_bound=max(0.5 * math.log2(lower), 0.0) if lower > 0 else 0.0,
        iterations=iterations,
        converged=converged,
        coeffs=_coeffs_from_fits(*fits),
    )


# ---------------------------------------------------------------------------
# Power minimization
# ---------------------------------------------------------------------------

def _rate_ceiling(ch: ChannelSet, beam: np.ndarray, noise_power: float) -> float:
    """Supremum of the achievable secrecy rate as all powers scale up together."""
    gain_sr = float(abs((ch.h_ar @ beam).item()) ** 2)
    gain_rd = float(np.linalg.norm(ch.h_rb[:, 0]) ** 2)
    if gain_sr <= 0 or gain_rd <= 0:
        return 0.0
    t1_target, t1_b, t1_a = _phase1_jam_geometry(ch, beam)
    t2_target, t2_b, t2_a = _phase2_jam_geometry(ch)
    sat = _saturated_gain(t1_target, t1_b, t1_a)
    sat += (gain_sr / gain_rd) * _saturated_gain(t2_target, t2_b, t2_a)
    if sat <= 0:
        return math.inf
    return 0.5 * math.log2(gain_sr / sat) if gain_sr > sat else 0.0


def minimize_power(
    ch: ChannelSet,
    target_rate: float,
    noise_power: float,
    budget: str = "global",
    max_iters: int = 10,
) -> PowerMinResult:
    """Smallest per-phase peak power that supports a target secrecy rate.

    Solves the GP dual of :func:`maximize_rate` (minimize the peak phase
    power subject to the modeled rate), then scales the recovered physical
    powers up by bisection until the exact rate meets the target within 1e-6.

    Raises :class:`InfeasibleRateError` when the target exceeds the
    jamming-saturated rate ceiling.
    """
    _require_single_antenna_relay(ch)
    if budget not in ("global", "individual"):
        raise ValueError(f"unknown budget {budget!r}")
    if target_rate < 0 or noise_power <= 0:
        raise ValueError("target_rate must be >= 0 and noise_power positive")
    if target_rate == 0.0:
        alloc = PowerAllocation(0.0, 0.0, 0.0, 0.0)
        return PowerMinResult(allocation=alloc, rate=0.0, peak_power=0.0, scale_applied=1.0)

    joint = budget == "global"
    gain_rd = float(np.linalg.norm(ch.h_rb[:, 0]) ** 2)
    if gain_rd <= 0:
        raise InfeasibleRateError("destination is unreachable from the relay")
    scale_ae = max(1.0, float(np.linalg.norm(ch.h_ae) ** 2))
    scale_re = max(1.0, float(np.linalg.norm(ch.h_re) ** 2))
    t2_target, t2_b, t2_a = _phase2_jam_geometry(ch)

    # power-independent feasibility ceiling, checked at the high-power beamformer
    probe = info_beamformer(ch, 1e6 * noise_power, noise_power)
    ceiling = _rate_ceiling(ch, probe, noise_power)
    if target_rate >= ceiling - 1e-9:
        raise InfeasibleRateError(
            f"target {target_rate:.4g} above the jamming-saturated ceiling {ceiling:.4g}"
        )

    kappa = 2.0 ** (2.0 * target_rate) * noise_power
    p_info1 = noise_power * 1e6  # beamformer fixed point starts high-power
    alloc = None
    iterations = 0
    prev = None
    for _ in range(max_iters):
        iterations += 1
        beam = info_beamformer(ch, max(p_info1, noise_power * 1e-9), noise_power)
        if prev is not None and np.linalg.norm(beam - prev) < 1e-6:
            break
        prev = beam
        gain_sr = float(abs((ch.h_ar @ beam).item()) ** 2)
        if gain_sr <= 0:
            raise InfeasibleRateError("relay is unreachable from the source")
        t1_target, t1_b, t1_a = _phase1_jam_geometry(ch, beam)
        # fit around the scale the solution is expected to live at
        fit_cap = max(kappa / gain_sr * 100.0, noise_power)
        fit1 = _fit_inverse_gain(t1_target, t1_b, t1_a, fit_cap, noise_power, scale_ae, True)
        fit2 = _fit_inverse_gain(t2_target, t2_b, t2_a, fit_cap, noise_power, scale_re, True)

        rate_terms: list[tuple[float, dict]] = [(kappa / gain_sr, {"info1": -1.0})]
        phase1 = [(1.0, {"info1": 1.0, "peak": -1.0})]
        phase2 = [(1.0, {"info2": 1.0, "peak": -1.0})]
        ineqs: list[Posynomial] = []
        if fit1.mode == "affine":
            rate_terms.append((kappa / gain_sr, {"ejam1": -1.0}))
            phase1.append((1.0, {"ejam1": 1.0, "peak": -1.0}))
            ineqs.append(Posynomial.monomial(fit1.intercept, {"ejam1": -1.0}))
        elif fit1.mode == "constant":
            rate_terms.append((kappa / (gain_sr * fit1.intercept), {}))
        if fit2.mode == "affine":
            rate_terms.append(
                (kappa / gain_sr, {"info1": -1.0, "info2": 1.0, "ejam2": -1.0})
            )
            phase2.append((1.0, {"ejam2": 1.0, "peak": -1.0}))
            ineqs.append(Posynomial.monomial(fit2.intercept, {"ejam2": -1.0}))
        elif fit2.mode == "constant":
            rate_terms.append(
                (kappa / (gain_sr * fit2.intercept), {"info1": -1.0, "info2": 1.0})
            )
        if joint:
            ineqs.append(Posynomial.from_terms(phase1))
            ineqs.append(Posynomial.from_terms(phase2))
        else:
            for term in phase1 + phase2:
                ineqs.append(Posynomial.from_terms([term]))
        ineqs.append(Posynomial.from_terms(rate_terms))
        balance = Posynomial.monomial(gain_sr / gain_rd, {"info1": 1.0, "info2": -1.0})

        start = max(kappa / gain_sr * 4.0, noise_power)
        init = {"info1": start, "info2": start * gain_sr / gain_rd}
        if fit1.mode == "affine":
            init["ejam1"] = fit1.slope * start + fit1.intercept
        if fit2.mode == "affine":
            init["ejam2"] = fit2.slope * start + fit2.intercept
        init["peak"] = 2.0 * max(
            init["info1"] + init.get("ejam1", 0.0),
            init["info2"] + init.get("ejam2", 0.0),
        )
        sol = solve_gp(
            GpProblem(
                objective=Posynomial.monomial(1.0, {"peak": 1.0}),
                inequalities=tuple(ineqs),
                equalities=(balance,),
            ),
            init=init,
        )
        alloc = PowerAllocation(
            source_info=sol.x["info1"],
            dest_jam=_recover_jam_power(fit1, sol.x.get("ejam1")),
            relay_info=sol.x["info2"],
            source_jam=_recover_jam_power(fit2, sol.x.get("ejam2")),
        )
        p_info1 = alloc.source_info

    def exact_rate(a: PowerAllocation) -> float:
        return secrecy_rate_from_sinrs(link_sinrs(ch, a, noise_power))

    # the affine model is approximate: rescale all powers together until the
    # exact rate meets the target
    slack = 1e-6
    scale = 1.0
    if exact_rate(alloc) < target_rate - slack:
        hi = 1.0
        for _ in range(60):
            hi *= 2.0
            if exact_rate(alloc.scaled(hi)) >= target_rate - slack:
                break
        else:
            raise InfeasibleRateError("rate target unreachable by uniform power scaling")
        lo = hi / 2.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if exact_rate(alloc.scaled(mid)) >= target_rate - slack / 2.0:
                hi = mid
            else:
                lo = mid
        scale = hi
        alloc = alloc.scaled(scale)
    return PowerMinResult(
        allocation=alloc,
        rate=exact_rate(alloc),
        peak_power=alloc.peak_phase,
        scale_applied=scale,
    )


# ---------------------------------------------------------------------------
# Rank-one jamming optimality
# ---------------------------------------------------------------------------

def rank_one_optimality_check(
    ch: ChannelSet,
    source_power: float,
    jam_power: float,
    noise_power: float,
    seed: int = 0,
    samples: int = 64,
    tol: float = 1e-9,
) -> RankOneCheck:
    """Sampling check that a rank-one phase-1 jamming covariance is optimal.

    Draws random positive semidefinite jamming covariances inside the
    destination's zero-forcing subspace with the same power budget and
    verifies none yields a lower eavesdropper SINR than the rank-one design.
    """
    _require_single_antenna_relay(ch)
    beam = info_beamformer(ch, source_power, noise_power)
    basis = null_basis(ch.h_br)
    m = basis.shape[1]
    target = ch.h_ae @ beam
    if m == 0 or jam_power <= 0:
        return RankOneCheck(samples=0, max_violation=0.0, passed=True)
    b = ch.h_be @ basis
    a = b.conj().T @ target
    best = source_power * _jammed_gain(target, b, a, jam_power, noise_power) / noise_power

    rng = np.random.default_rng(seed)
    ne = target.shape[0]
    worst = -math.inf
    for _ in range(samples):
        root = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        q = root @ root.conj().T
        q *= jam_power / np.real(np.trace(q))
        cov = noise_power * np.eye(ne, dtype=np.complex128) + b @ q @ b.conj().T
        sinr = float(source_power * np.real(target.conj() @ np.linalg.solve(cov, target)))
        worst = max(worst, best - sinr)
    return RankOneCheck(samples=samples, max_violation=worst, passed=worst <= tol)
