"""Network geometry, fading draws and unit conversions for the relay scenario.

A scenario is four nodes on a plane (source, destination, relay, eavesdropper)
with antenna counts per node.  Channel matrices have i.i.d. circularly
symmetric complex Gaussian entries whose variance is ``d**-alpha`` for link
distance ``d`` -- i.e. distance-dependent average path gain, no shadowing.

Randomness is counter-based (Philox) and fully determined by a 64-bit seed, so
trials can be distributed across workers and still reproduce exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NetworkGeometry",
    "ChannelSet",
    "dbm_to_linear",
    "linear_to_dbm",
    "trial_seed",
    "make_rng",
    "draw_channels",
]

_MASK64 = (1 << 64) - 1


def dbm_to_linear(dbm: float) -> float:
    """dBm -> linear power in mW (all internal powers are mW)."""
    return 10.0 ** (dbm / 10.0)


def linear_to_dbm(mw: float) -> float:
    if mw <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(mw)


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def trial_seed(seed_base: int, trial: int) -> int:
    """Stable 64-bit per-trial seed derived from the experiment seed.

    Output number ``trial`` of a splitmix64 stream seeded at ``seed_base``:
    pure integer mixing, identical on every platform and independent of
    execution order, with no collisions across trials of one experiment.
    """
    step = (trial & _MASK64) * 0x9E3779B97F4A7C15
    return _splitmix64((seed_base + step) & _MASK64)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) for one 64-bit seed."""
    return np.random.Generator(np.random.Philox(seed & _MASK64))


@dataclass(frozen=True)
class NetworkGeometry:
    """Node positions (km), antenna counts and the path-loss exponent."""

    alice: tuple[float, float] = (-0.5, 0.0)
    bob: tuple[float, float] = (0.5, 0.0)
    relay: tuple[float, float] = (0.0, 0.0)
    eve: tuple[float, float] = (0.0, -0.5)
    antennas: tuple[int, int, int, int] = (4, 4, 1, 1)  # (na, nb, nr, ne)
    path_loss_exponent: float = 3.0

    def __post_init__(self):
        if any(n < 1 for n in self.antennas):
            raise ValueError(f"antenna counts must be >= 1, got {self.antennas}")
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be positive")

    @property
    def na(self) -> int:
        return self.antennas[0]

    @property
    def nb(self) -> int:
        return self.antennas[1]

    @property
    def nr(self) -> int:
        return self.antennas[2]

    @property
    def ne(self) -> int:
        return self.antennas[3]

    def distance(self, a: str, b: str) -> float:
        pa, pb = getattr(self, a), getattr(self, b)
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    def link_variance(self, a: str, b: str) -> float:
        """Per-entry channel variance for the a -> b link (d ** -alpha)."""
        d = self.distance(a, b)
        if d <= 0:
            raise ValueError(f"nodes {a} and {b} are co-located; variance undefined")
        return d ** (-self.path_loss_exponent)


@dataclass(frozen=True)
class ChannelSet:
    """One fading realization: all seven channel matrices of the two phases.

    Naming is source->destination: ``h_ar`` is source-to-relay, ``h_re`` is
    relay-to-eavesdropper, etc.  Shapes follow (rx antennas, tx antennas).
    """

    h_ar: np.ndarray  # (nr, na)
    h_ae: np.ndarray  # (ne, na)
    h_rb: np.ndarray  # (nb, nr)
    h_re: np.ndarray  # (ne, nr)
    h_br: np.ndarray  # (nr, nb)
    h_be: np.ndarray  # (ne, nb)
    h_ab: np.ndarray  # (nb, na)
    seed: int = field(default=0, compare=False)


# Draw order is part of the reproducibility contract: changing it would change
# every seeded experiment.
_LINKS = (
    ("h_ar", "alice", "relay", "nr", "na"),
    ("h_ae", "alice", "eve", "ne", "na"),
    ("h_rb", "relay", "bob", "nb", "nr"),
    ("h_re", "relay", "eve", "ne", "nr"),
    ("h_br", "bob", "relay", "nr", "nb"),
    ("h_be", "bob", "eve", "ne", "nb"),
    ("h_ab", "alice", "bob", "nb", "na"),
)


def draw_channels(geometry: NetworkGeometry, seed: int) -> ChannelSet:
    """Draw one independent realization of all channel matrices.

    Entries are i.i.d. CN(0, d**-alpha); the real and imaginary parts each get
    half the variance.  The same (geometry, seed) pair always produces the
    same matrices.
    """
    rng = make_rng(seed)
    mats = {}
    for name, src, dst, rx, tx in _LINKS:
        var = geometry.link_variance(src, dst)
        rows = getattr(geometry, rx)
        cols = getattr(geometry, tx)
        std = math.sqrt(var / 2.0)
        mats[name] = std * (
            rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
        )
    return ChannelSet(seed=seed, **mats)
