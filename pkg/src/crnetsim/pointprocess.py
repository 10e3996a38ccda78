"""Sampling of the three correlated Poisson processes.

Secondary users are static; primary transmitter/receiver pairs are redrawn
independently each slot. Primary points are sampled on a region padded by
max(R_p, R_i, r_i) so that opportunity checks near the window edge see an
unbiased primary field.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .geometry import BoxRegion, SpatialIndex

_MIN_CELL = 1e-9  # grid indexes need a positive cell size even for zero radii


@dataclass(frozen=True)
class SimulationParams:
    """Physical model scalars. Lengths in km, times in s, densities in km^-2."""

    lambda_s: float
    lambda_pt: float
    r_p: float        # secondary transmission range
    r_i: float        # secondary interference range
    R_p: float        # primary transmission range
    R_i: float        # primary interference range
    T_s: float = 1.0  # slot length
    tau: float = 0.0  # propagation delay per hop

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("lambda_s", "lambda_pt", "r_i", "R_p", "R_i"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.r_p <= 0:
            raise ValueError("r_p must be > 0")
        if self.T_s <= 0:
            raise ValueError("T_s must be > 0")
        if not (0 <= self.tau <= self.T_s):
            raise ValueError("tau must satisfy 0 <= tau <= T_s")

    @property
    def primary_padding(self) -> float:
        return max(self.R_p, self.R_i, self.r_i)

    def replace(self, **kwargs) -> "SimulationParams":
        from dataclasses import replace
        return replace(self, **kwargs)


def _label_key(label: str) -> int:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SeededRng:
    """Splittable RNG root: child streams are keyed by (label, indices).

    Identical (master_seed, labels) always yield identical streams, regardless
    of evaluation order or worker count.
    """

    master_seed: int
    key: tuple[int, ...] = field(default=())

    def child(self, label: str, *indices: int) -> "SeededRng":
        return SeededRng(self.master_seed, self.key + (_label_key(label),) + tuple(indices))

    def generator(self, label: str = "", *indices: int) -> np.random.Generator:
        key = self.key
        if label or indices:
            key = key + (_label_key(label),) + tuple(indices)
        # SeedSequence silently drops zero entropy words, so zero indices would
        # alias their parent stream; map every word to 2k+1 (never zero) and
        # length-prefix so distinct key tuples give distinct entropy
        entropy = tuple(2 * k + 1 for k in (self.master_seed, len(key)) + key)
        return np.random.default_rng(np.random.SeedSequence(entropy=entropy))


@dataclass
class SecondaryNetwork:
    """Static secondary point set with its grid index (cell size r_p)."""

    points: np.ndarray
    region: BoxRegion
    index: SpatialIndex

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass
class PrimarySlotRealization:
    """One slot's primary transmitter/receiver pairs (rx[i] pairs with tx[i])."""

    slot: int
    tx_points: np.ndarray
    rx_points: np.ndarray
    tx_index: SpatialIndex
    rx_index: SpatialIndex

    @property
    def n_pairs(self) -> int:
        return len(self.tx_points)


def sample_poisson_points(lam: float, region: BoxRegion,
                          rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson sample on a box: Poisson count, then uniform points."""
    if lam < 0:
        raise ValueError("density must be >= 0")
    n = int(rng.poisson(lam * region.area))
    x = rng.uniform(region.x_min, region.x_max, n)
    y = rng.uniform(region.y_min, region.y_max, n)
    return np.column_stack((x, y))


def sample_uniform_disk(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """n offsets uniform over the disk of given radius (r = R*sqrt(u))."""
    u = rng.random(n)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    r = radius * np.sqrt(u)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def sample_primary_slot(params: SimulationParams, region: BoxRegion, slot: int,
                        rng: SeededRng) -> PrimarySlotRealization:
    """Primary tx/rx pairs for one slot, on the padded region.

    Receivers are displaced uniformly over the disk of radius R_p around
    their transmitter. Distinct slots use distinct child streams and are
    mutually independent.
    """
    if slot < 0:
        raise ValueError("slot must be >= 0")
    gen = rng.generator("primary-slot", slot)
    padded = region.padded(params.primary_padding)
    tx = sample_poisson_points(params.lambda_pt, padded, gen)
    rx = tx + sample_uniform_disk(gen, len(tx), params.R_p)
    tx_index = SpatialIndex(tx, max(params.R_i, _MIN_CELL))
    rx_index = SpatialIndex(rx, max(params.r_i, _MIN_CELL))
    return PrimarySlotRealization(slot, tx, rx, tx_index, rx_index)


def sample_secondary_network(params: SimulationParams, region: BoxRegion,
                             rng: SeededRng) -> SecondaryNetwork:
    """Static secondary user sample; grid index cell size equals r_p."""
    gen = rng.generator("secondary")
    points = sample_poisson_points(params.lambda_s, region, gen)
    index = SpatialIndex(points, params.r_p)
    return SecondaryNetwork(points, region, index)
