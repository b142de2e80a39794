"""Dense linear-algebra kernels shared by the beamforming and power-allocation code.

Everything here works on plain numpy arrays (complex128 internally).  The
routines are deterministic: repeated calls with the same inputs return
bit-identical results.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "NumericsError",
    "DegenerateInputError",
    "IllConditionedError",
    "GsvdFactors",
    "HermitianPencil",
    "WaterFillResult",
    "gsvd",
    "principal_gen_eigvec",
    "max_rank1_gen_eigvec",
    "null_basis",
    "water_fill_min_power",
    "water_fill_capacity",
    "logdet_psd",
    "colored_logdet",
    "unit_phase",
]

#: Condition-number ceiling for matrices we are willing to Cholesky-invert.
COND_LIMIT = 1e12

#: Relative asymmetry tolerated before an input is rejected as non-Hermitian.
HERM_TOL = 1e-10


class NumericsError(Exception):
    """Base class for numerical-kernel failures."""


class DegenerateInputError(NumericsError):
    """An input was structurally empty (zero stack, zero vector, ...)."""


class IllConditionedError(NumericsError):
    """A matrix that must be (well-conditioned) positive definite is not."""


def _as_complex_matrix(x, name: str) -> np.ndarray:
    m = np.asarray(x, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got ndim={m.ndim}")
    return m


def _check_hermitian(m: np.ndarray, name: str) -> np.ndarray:
    asym = np.linalg.norm(m - m.conj().T)
    scale = max(np.linalg.norm(m), 1.0)
    if asym > HERM_TOL * scale:
        raise NumericsError(f"{name} is not Hermitian (relative asymmetry {asym / scale:.2e})")
    return 0.5 * (m + m.conj().T)


def unit_phase(v: np.ndarray) -> np.ndarray:
    """Rotate a vector so its first non-negligible entry is real and >= 0.

    This pins down the free complex phase of eigenvectors and null-space basis
    columns, which makes downstream results reproducible.
    """
    v = np.asarray(v, dtype=np.complex128)
    mags = np.abs(v)
    peak = mags.max(initial=0.0)
    if peak == 0.0:
        return v
    idx = int(np.argmax(mags > 1e-12 * peak))
    pivot = v[idx]
    if pivot == 0:
        return v
    return v * (pivot.conjugate() / abs(pivot))


# ---------------------------------------------------------------------------
# Generalized SVD
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GsvdFactors:
    """Joint factorization of two matrices with a common column space.

    ``u^H h1 psi = S1 [r, 0]`` and ``v^H h2 psi = S2 [r, 0]`` where ``S1``/``S2``
    are the rectangular diagonal matrices built from the ``s1``/``s2`` vectors
    (see :meth:`s1_matrix`): ``s1`` is nondecreasing, ``s2`` nonincreasing and
    ``s1**2 + s2**2 == 1`` entrywise.  ``k`` is the numerical rank of the
    stacked matrix ``[h1; h2]`` and ``r`` is k-by-k upper triangular and
    nonsingular.
    """

    u: np.ndarray
    v: np.ndarray
    psi: np.ndarray
    r: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    k: int

    def s1_matrix(self) -> np.ndarray:
        """S1 as an (n1, k) rectangular diagonal matrix (right-aligned)."""
        n1 = self.u.shape[0]
        out = np.zeros((n1, self.k))
        lead = max(self.k - n1, 0)
        for j in range(lead, self.k):
            out[j - lead, j] = self.s1[j]
        return out

    def s2_matrix(self) -> np.ndarray:
        """S2 as an (n2, k) rectangular diagonal matrix (top-left aligned)."""
        n2 = self.v.shape[0]
        out = np.zeros((n2, self.k))
        for j in range(min(n2, self.k)):
            out[j, j] = self.s2[j]
        return out


def gsvd(h1, h2, tol: float = 1e-10) -> GsvdFactors:
    """Generalized SVD of a pair of matrices with equal column counts.

    The factorization is computed from a rank-revealing SVD of the stacked
    matrix followed by a cosine-sine decomposition of the orthonormal factor's
    two row blocks, which keeps it well behaved for rank-deficient inputs.

    Parameters
    ----------
    h1, h2 : array_like
        Matrices with shapes (n1, n) and (n2, n).
    tol : float
        Relative rank cutoff for the stacked matrix, in (0, 1e-4].

    Raises
    ------
    DegenerateInputError
        If the stacked matrix has numerical rank zero.
    """
    h1 = _as_complex_matrix(h1, "h1")
    h2 = _as_complex_matrix(h2, "h2")
    if h1.shape[1] != h2.shape[1]:
        raise ValueError(f"column counts differ: {h1.shape[1]} vs {h2.shape[1]}")
    if not 0.0 < tol <= 1e-4:
        raise ValueError(f"tol must be in (0, 1e-4], got {tol}")
    n1, n = h1.shape
    n2 = h2.shape[0]

    stacked = np.vstack([h1, h2])
    p, sig, wh = np.linalg.svd(stacked, full_matrices=False)
    smax = sig[0] if sig.size else 0.0
    k = int(np.count_nonzero(sig > tol * smax)) if smax > 0 else 0
    if k == 0:
        raise DegenerateInputError("stacked matrix has numerical rank zero")

    q = p[:, :k]
    t = sig[:k, None] * wh[:k, :]  # k x n, full row rank
    q1, q2 = q[:n1, :], q[n1:, :]

    # CS decomposition of (q1, q2): SVD the bottom block, then orthonormalize
    # the rotated top block.  Columns of q1 @ z are mutually orthogonal with
    # nondecreasing norms, so a QR factorization is diagonal up to roundoff.
    v, s2_vals, z2h = np.linalg.svd(q2, full_matrices=True)
    z = z2h.conj().T
    s2 = np.zeros(k)
    s2[: min(n2, k)] = np.clip(s2_vals[: min(n2, k)], 0.0, 1.0)

    x = q1 @ z
    lead = max(k - n1, 0)  # columns forced to zero when the top block is wide
    u, r_diag = _graded_qr(x[:, lead:])
    s1 = np.zeros(k)
    s1[lead:] = r_diag

    # [r, 0] @ psi^H factorization of z^H t via a reversed QR.
    a = z.conj().T @ t
    b = a[::-1, :]
    qb, rb = np.linalg.qr(b.conj().T, mode="complete")
    rb_k = rb[:k, :]
    r = rb_k.conj().T[::-1, ::-1]
    psi = qb.copy()
    psi[:, :k] = qb[:, :k][:, ::-1]

    return GsvdFactors(u=u, v=v, psi=psi, r=r, s1=s1, s2=s2, k=k)


def _graded_qr(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormalize columns that are already mutually orthogonal.

    Returns (q, norms) with q unitary (n1-by-n1) such that ``q^H x`` is
    diagonal with nonnegative real entries ``norms`` up to roundoff.  Columns
    are processed from the largest norm down (they arrive graded
    nondecreasing), so numerically dead columns never contaminate live ones;
    dead slots are filled from an orthonormal completion.
    """
    n1, cols = x.shape
    q = np.zeros((n1, n1), dtype=np.complex128)
    norms = np.linalg.norm(x, axis=0) if cols else np.zeros(0)
    assigned: list[int] = []
    for j in range(cols - 1, -1, -1):
        if norms[j] <= 1e-9:
            continue
        r = x[:, j].astype(np.complex128, copy=True)
        for _ in range(2):  # twice-is-enough reorthogonalization
            for i in assigned:
                r -= q[:, i] * (q[:, i].conj() @ r)
        d = np.linalg.norm(r)
        if d <= 1e-12 * norms[j]:
            continue
        qj = r / d
        overlap = qj.conj() @ x[:, j]
        if abs(overlap) > 0:
            qj *= overlap / abs(overlap)
        q[:, j] = qj
        assigned.append(j)
    free = [j for j in range(n1) if j >= cols or j not in assigned]
    if free:
        if assigned:
            fill = null_basis(q[:, assigned].conj().T)
        else:
            fill = np.eye(n1, dtype=np.complex128)
        for slot, col in zip(free, fill.T):
            q[:, slot] = col
    return q, norms


# ---------------------------------------------------------------------------
# Generalized eigenproblems for Hermitian pencils
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HermitianPencil:
    """Pair (a, b) of Hermitian matrices with b positive definite."""

    a: np.ndarray
    b: np.ndarray


def _checked_cholesky(b: np.ndarray, name: str = "b") -> np.ndarray:
    b = _check_hermitian(_as_complex_matrix(b, name), name)
    w = np.linalg.eigvalsh(b)
    if w[0] <= 0.0:
        raise IllConditionedError(f"{name} is not positive definite (min eig {w[0]:.3e})")
    if w[-1] / w[0] > COND_LIMIT:
        raise IllConditionedError(
            f"{name} condition number {w[-1] / w[0]:.3e} exceeds {COND_LIMIT:.0e}"
        )
    return np.linalg.cholesky(b)


def principal_gen_eigvec(pencil: HermitianPencil) -> tuple[np.ndarray, float]:
    """Dominant generalized eigenpair of ``a x = lambda b x``.

    Returns the unit-norm eigenvector (phase-fixed via :func:`unit_phase`)
    together with the largest generalized eigenvalue.  Solved by Cholesky
    reduction of ``b`` to an ordinary Hermitian eigenproblem.
    """
    a = _check_hermitian(_as_complex_matrix(pencil.a, "a"), "a")
    el = _checked_cholesky(pencil.b)
    tmp = solve_triangular(el, a, lower=True)
    c = solve_triangular(el, tmp.conj().T, lower=True).conj().T
    c = 0.5 * (c + c.conj().T)
    w, y = np.linalg.eigh(c)
    x = solve_triangular(el.conj().T, y[:, -1], lower=False)
    x = x / np.linalg.norm(x)
    return unit_phase(x), float(w[-1])


def max_rank1_gen_eigvec(a_vec, b) -> np.ndarray:
    """Maximizer of ``|a^H x|^2 / (x^H b x)`` over unit vectors.

    For a rank-one numerator the dominant generalized eigenvector has the
    closed form ``b^{-1} a / ||b^{-1} a||``, which is returned exactly.
    """
    a_vec = np.asarray(a_vec, dtype=np.complex128).reshape(-1)
    nrm = np.linalg.norm(a_vec)
    if nrm == 0.0:
        raise DegenerateInputError("rank-one direction vector is zero")
    el = _checked_cholesky(b)
    x = solve_triangular(
        el.conj().T, solve_triangular(el, a_vec, lower=True), lower=False
    )
    return x / np.linalg.norm(x)


def null_basis(m, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the (right) null space of ``m``.

    Columns are phase-fixed.  A full-column-rank input yields a basis with
    zero columns; the rank is decided at relative tolerance ``tol``.
    """
    m = _as_complex_matrix(m, "m")
    n = m.shape[1]
    if m.shape[0] == 0 or not np.any(m):
        basis = np.eye(n, dtype=np.complex128)
        return basis
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    rank = int(np.count_nonzero(s > tol * s[0])) if s.size else 0
    basis = vh[rank:, :].conj().T
    for j in range(basis.shape[1]):
        basis[:, j] = unit_phase(basis[:, j])
    return basis


# ---------------------------------------------------------------------------
# Water filling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaterFillResult:
    powers: np.ndarray
    level: float
    feasible: bool

    @property
    def total(self) -> float:
        return float(self.powers.sum())


def water_fill_min_power(gains, target_rate: float, noise_power: float) -> WaterFillResult:
    """Minimum-total-power allocation hitting an exact sum-rate target.

    Minimizes ``sum(p_i)`` subject to ``0.5 * sum(log2(1 + g_i p_i / noise))``
    equal to ``target_rate``.  The optimal allocation is water filling,
    ``p_i = max(0, level - noise / g_i)``; the level is found by bisection
    (relative tolerance well below 1e-10).

    Returns an infeasible result (all-zero powers) when no positive gains are
    available but a positive rate is demanded.
    """
    gains = np.asarray(gains, dtype=float).reshape(-1)
    if np.any(gains < 0):
        raise ValueError("gains must be nonnegative")
    if noise_power <= 0:
        raise ValueError("noise_power must be positive")
    if target_rate < 0:
        raise ValueError("target_rate must be nonnegative")

    powers = np.zeros_like(gains)
    if target_rate == 0.0:
        return WaterFillResult(powers=powers, level=0.0, feasible=True)
    pos = gains > 0
    if not np.any(pos):
        return WaterFillResult(powers=powers, level=0.0, feasible=False)

    g = gains[pos]
    floors = noise_power / g  # water level at which each channel activates

    def rate(level: float) -> float:
        act = level > floors
        if not np.any(act):
            return 0.0
        return float(0.5 * np.sum(np.log2(level / floors[act])))

    lo = float(floors.min())
    hi = lo * 2.0
    while rate(hi) < target_rate:
        hi *= 2.0
        if hi > 1e300:
            return WaterFillResult(powers=powers, level=0.0, feasible=False)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rate(mid) < target_rate:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    level = 0.5 * (lo + hi)
    powers[pos] = np.maximum(0.0, level - floors)
    return WaterFillResult(powers=powers, level=level, feasible=True)


def water_fill_capacity(gains, total_power: float, noise_power: float) -> WaterFillResult:
    """Rate-maximizing allocation of a fixed power budget (classic water filling).

    Maximizes ``0.5 * sum(log2(1 + g_i p_i / noise))`` subject to
    ``sum(p_i) = total_power``.  The level is exact (closed form over the
    active set), so the budget is spent to machine precision.  Channels with
    zero gain never receive power; with no positive gains at all the budget
    is simply unspendable and the powers stay zero.
    """
    gains = np.asarray(gains, dtype=float).reshape(-1)
    if np.any(gains < 0):
        raise ValueError("gains must be nonnegative")
    if noise_power <= 0:
        raise ValueError("noise_power must be positive")
    if total_power < 0:
        raise ValueError("total_power must be nonnegative")

    powers = np.zeros_like(gains)
    pos = gains > 0
    if total_power == 0.0 or not np.any(pos):
        return WaterFillResult(powers=powers, level=0.0, feasible=total_power == 0.0)

    floors = np.sort(noise_power / gains[pos])
    # the water level with the m cheapest channels active; keep the largest m
    # whose level actually clears channel m's floor
    level = floors[0] + total_power
    for m in range(1, floors.size + 1):
        candidate = (total_power + floors[:m].sum()) / m
        if candidate <= floors[m - 1]:
            break
        level = candidate
    powers[pos] = np.maximum(0.0, level - noise_power / gains[pos])
    return WaterFillResult(powers=powers, level=level, feasible=True)


# ---------------------------------------------------------------------------
# Log determinants
# ---------------------------------------------------------------------------

def logdet_psd(m) -> float:
    """``log2 det(I + M)`` for a Hermitian positive semidefinite ``M``.

    Evaluated through a Cholesky factorization of ``I + M`` for accuracy; the
    input is rejected if its relative asymmetry exceeds 1e-10.
    """
    m = _check_hermitian(_as_complex_matrix(m, "m"), "m")
    eye = np.eye(m.shape[0], dtype=np.complex128)
    try:
        el = np.linalg.cholesky(eye + m)
    except np.linalg.LinAlgError as exc:
        raise NumericsError("I + M is not positive definite; M must be PSD") from exc
    return float(2.0 * np.sum(np.log2(np.real(np.diag(el)))))


def colored_logdet(signal_cov, noise_cov) -> float:
    """``log2 det(I + noise^{-1} signal)`` via Cholesky whitening.

    ``signal_cov`` must be Hermitian PSD and ``noise_cov`` Hermitian positive
    definite (e.g. thermal noise plus jamming covariance).
    """
    s = _check_hermitian(_as_complex_matrix(signal_cov, "signal_cov"), "signal_cov")
    el = _checked_cholesky(noise_cov, "noise_cov")
    white = solve_triangular(el, s, lower=True)
    white = solve_triangular(el, white.conj().T, lower=True).conj().T
    return logdet_psd(0.5 * (white + white.conj().T))
