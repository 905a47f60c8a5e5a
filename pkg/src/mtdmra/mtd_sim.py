"""Measurement synthesis, patch extraction, and latent group recovery.

A 1d measurement of length L*M is a sum of copies of a length-L signal
anchored at positions that are at least L apart, plus noise.  Anchors are
restricted to {0, ..., L*(M-1)} so every copy fits inside the measurement.
Cutting the measurement into M consecutive length-L patches, each patch is
exactly the projected, shifted padded signal for a recoverable group
element.  The 2d case is the same story with L x L copies on an LM x LM
grid, anchors separated by at least L in sup-norm, and M^2 patches.

Patch indices are 0-based here.  In 1d the element of patch k is
(g1, g2) where g2 is the anchor offset inside patch k (or L when patch k
holds no anchor) and g1 is the previous patch's offset when that offset is
in {0..L-1}, else 0.  In 2d the element of patch (i, j) collects the
offsets of patches (i, j), (i, j-1), (i-1, j), (i-1, j-1) in that order;
out-of-range neighbors count as empty, and an empty diagonal neighbor is
encoded (0, 0) because a (L, L) shift would leak the copy into the
bottom-right projection block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hardcore2d
from .core import (
    ConfigError,
    EmptyInput,
    NoiseSpec,
    OverlapViolation,
    ShapeError,
    Signal1D,
    Signal2D,
    as_generator,
    check_lambda,
)


# --- value types ------------------------------------------------------------


@dataclass(frozen=True)
class PlacementConfig1D:
    """Sorted admissible anchor positions for a 1d measurement."""

    anchors: np.ndarray
    lam: float
    L: int
    M: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.anchors, dtype=np.int64).copy()
        if arr.ndim != 1:
            raise ShapeError(f"anchors must be a vector, got shape {arr.shape}")
        arr.sort()
        if arr.size:
            if arr[0] < 0 or arr[-1] > self.L * (self.M - 1):
                raise OverlapViolation(
                    f"anchors must lie in [0, {self.L * (self.M - 1)}], got range [{arr[0]}, {arr[-1]}]"
                )
            gaps = np.diff(arr)
            if gaps.size and gaps.min() < self.L:
                raise OverlapViolation(f"anchor gap {gaps.min()} is below the minimum separation {self.L}")
        arr.setflags(write=False)
        object.__setattr__(self, "anchors", arr)

    @property
    def q(self) -> int:
        return int(self.anchors.size)


@dataclass(frozen=True)
class PlacementConfig2D:
    """Admissible anchor coordinates for a 2d measurement, sorted row-major."""

    anchors: np.ndarray
    lam: float
    L: int
    M: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.anchors, dtype=np.int64).reshape(-1, 2).copy()
        order = np.lexsort((arr[:, 1], arr[:, 0]))
        arr = arr[order]
        cap = self.L * (self.M - 1)
        if arr.size and (arr.min() < 0 or arr.max() > cap):
            raise OverlapViolation(f"anchors must lie in [0, {cap}]^2")
        _check_separation_2d(arr, self.L)
        arr.setflags(write=False)
        object.__setattr__(self, "anchors", arr)

    @property
    def q(self) -> int:
        return int(self.anchors.shape[0])


def _check_separation_2d(anchors: np.ndarray, L: int) -> None:
    q = anchors.shape[0]
    if q < 2:
        return
    # chunked pairwise sup-norm check keeps memory bounded for large q
    step = 512
    for start in range(0, q, step):
        block = anchors[start : start + step]
        diff = np.abs(block[:, None, :] - anchors[None, :, :]).max(axis=2)
        rows = np.arange(start, start + block.shape[0])
        diff[np.arange(block.shape[0]), rows] = L  # ignore self-distance
        bad = np.nonzero(diff < L)
        if bad[0].size:
            i, j = int(rows[bad[0][0]]), int(bad[1][0])
            raise OverlapViolation(
                f"anchors {tuple(anchors[i])} and {tuple(anchors[j])} are closer than {L} in sup-norm"
            )


@dataclass(frozen=True)
class Measurement1D:
    """Length L*M measurement vector."""

    values: np.ndarray
    L: int
    M: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64).copy()
        if arr.shape != (self.L * self.M,):
            raise ShapeError(f"measurement must have shape ({self.L * self.M},), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class Measurement2D:
    """LM x LM measurement image."""

    values: np.ndarray
    L: int
    M: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64).copy()
        side = self.L * self.M
        if arr.shape != (side, side):
            raise ShapeError(f"measurement must have shape ({side}, {side}), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


@dataclass
class PatchSet:
    """Bag of patches, optionally carrying the latent group elements.

    ``patches`` has shape (N, L) in 1d, (M, M, L, L) for a 2d patch grid,
    or (N, L, L) for unordered 2d samples.  ``latent`` matches the patch
    order when present.
    """

    patches: np.ndarray
    L: int
    two_d: bool = False
    latent: object = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.patches, dtype=np.float64)
        if self.two_d:
            if arr.ndim == 4:
                ok = arr.shape[2] == arr.shape[3] == self.L
            elif arr.ndim == 3:
                ok = arr.shape[1] == arr.shape[2] == self.L
            else:
                ok = False
        else:
            ok = arr.ndim == 2 and arr.shape[1] == self.L
        if not ok:
            raise ShapeError(f"patch array shape {arr.shape} inconsistent with L={self.L}, two_d={self.two_d}")
        self.patches = arr

    @property
    def grid_shape(self):
        return self.patches.shape[:2] if self.two_d and self.patches.ndim == 4 else None

    @property
    def n_patches(self) -> int:
        if self.two_d and self.patches.ndim == 4:
            return self.patches.shape[0] * self.patches.shape[1]
        return self.patches.shape[0]

    def as_vectors(self) -> np.ndarray:
        """Patches flattened to shape (N, dim), grid order row-major."""
        if self.two_d:
            return self.patches.reshape(self.n_patches, self.L * self.L)
        return self.patches


# --- 1d pipeline ------------------------------------------------------------


def sample_placements_1d(L: int, M: int, lam: float, rng=None) -> PlacementConfig1D:
    """Draw anchors with geometric start and geometric gaps, truncated to fit.

    The first anchor is a zero-indexed geometric draw; each following anchor
    sits L plus a fresh geometric draw after the previous one.  Anchors
    beyond L*(M-1) are discarded.
    """
    lam = check_lambda(lam)
    if L < 1 or M < 1:
        raise ConfigError(f"need L >= 1 and M >= 1, got L={L}, M={M}")
    gen = as_generator(rng)
    cap = L * (M - 1)
    mean_step = L + (1.0 - lam) / lam
    anchors: list[np.ndarray] = []
    last = -L  # so the first step contributes t_1 = g_1
    while last <= cap:
        n = max(16, int((cap - last) / mean_step * 1.25) + 16)
        gaps = gen.geometric(lam, size=n).astype(np.int64) - 1
        # iterates t_i = t_{i-1} + L + gap_i from the current last anchor
        t = last + np.cumsum(gaps + L)
        anchors.append(t)
        last = int(t[-1])
    t_all = np.concatenate(anchors)
    return PlacementConfig1D(anchors=t_all[t_all <= cap], lam=lam, L=L, M=M)


def synthesize_1d(
    x: Signal1D, placements: PlacementConfig1D, noise: NoiseSpec = NoiseSpec(), rng=None
) -> Measurement1D:
    """Superpose one signal copy per anchor and add isotropic noise."""
    L, M = placements.L, placements.M
    if x.L != L:
        raise ShapeError(f"signal length {x.L} does not match placement L={L}")
    z = np.zeros(L * M)
    for t in placements.anchors:
        z[t : t + L] += x.values
    if noise.sigma > 0.0:
        z = z + noise.sigma * as_generator(rng).standard_normal(z.shape)
    return Measurement1D(values=z, L=L, M=M)


def extract_patches_1d(z: Measurement1D) -> PatchSet:
    """Cut a measurement into its M consecutive length-L patches."""
    return PatchSet(patches=z.values.reshape(z.M, z.L), L=z.L)


def latent_groups_1d(placements: PlacementConfig1D, L: int | None = None, M: int | None = None) -> np.ndarray:
    """Ground-truth group element per patch, shape (M, 2).

    Row k holds (g1, g2) for patch k.  Both entries are derived from the
    per-patch anchor offsets; a patch without an anchor has offset L.
    """
    L = placements.L if L is None else int(L)
    M = placements.M if M is None else int(M)
    omega = np.full(M + 1, L, dtype=np.int64)
    omega[0] = 0
    patch = placements.anchors // L
    omega[patch + 1] = placements.anchors % L
    g1 = np.where(omega[:-1] < L, omega[:-1], 0)
    g2 = omega[1:]
    return np.stack([g1, g2], axis=1)


# --- 2d pipeline ------------------------------------------------------------


def sample_placements_2d(
    L: int,
    M: int,
    lam: float,
    rng=None,
    sampler: str = "glauber",
    burn_in: int | None = None,
    thin: int | None = None,
) -> PlacementConfig2D:
    """Draw one admissible 2d anchor configuration from the hard-core law.

    ``sampler`` is "exact" (enumeration-backed, small grids only) or
    "glauber" (heat-bath chain with the module's documented defaults).
    """
    graph = hardcore2d.conflict_graph(L, M)
    if sampler == "exact":
        exact = hardcore2d.enumerate_exact(graph, lam)
        config = hardcore2d.sample_exact(exact, 1, rng)[0]
    elif sampler == "glauber":
        config = hardcore2d.sample_glauber(graph, lam, n_samples=1, rng=rng, burn_in=burn_in, thin=thin)[0]
    else:
        raise ConfigError(f"unknown sampler {sampler!r}; expected 'exact' or 'glauber'")
    return PlacementConfig2D(anchors=config, lam=lam, L=L, M=M)


def synthesize_2d(
    x: Signal2D, placements: PlacementConfig2D, noise: NoiseSpec = NoiseSpec(), rng=None
) -> Measurement2D:
    """Superpose one image copy per anchor and add isotropic noise."""
    L, M = placements.L, placements.M
    if x.L != L:
        raise ShapeError(f"signal side {x.L} does not match placement L={L}")
    z = np.zeros((L * M, L * M))
    for r, c in placements.anchors:
        z[r : r + L, c : c + L] += x.values
    if noise.sigma > 0.0:
        z = z + noise.sigma * as_generator(rng).standard_normal(z.shape)
    return Measurement2D(values=z, L=L, M=M)


def extract_patches_2d(z: Measurement2D) -> PatchSet:
    """Cut a measurement into its M x M grid of L x L patches."""
    grid = z.values.reshape(z.M, z.L, z.M, z.L).transpose(0, 2, 1, 3)
    return PatchSet(patches=grid, L=z.L, two_d=True)


def latent_groups_2d(placements: PlacementConfig2D, L: int | None = None, M: int | None = None) -> np.ndarray:
    """Ground-truth group element per patch, shape (M, M, 4, 2).

    Entry (i, j) stacks the four shift pairs for patch (i, j): its own
    anchor offset, then the offsets of the left, top, and top-left
    neighbors, with empties encoded as described in the module docstring.
    """
    L = placements.L if L is None else int(L)
    M = placements.M if M is None else int(M)
    omega = np.full((M + 1, M + 1, 2), L, dtype=np.int64)
    if placements.q:
        patch = placements.anchors // L
        omega[patch[:, 0] + 1, patch[:, 1] + 1] = placements.anchors % L
    g1 = omega[1:, 1:]
    g2 = omega[1:, :-1]
    g3 = omega[:-1, 1:]
    g4 = omega[:-1, :-1].copy()
    empty4 = (g4[..., 0] == L) & (g4[..., 1] == L)
    g4[empty4] = 0
    return np.stack([g1, g2, g3, g4], axis=2)


def measurement_from_anchors_1d(x: Signal1D, anchors, M: int, lam: float = 0.5) -> Measurement1D:
    """Noiseless measurement from explicit anchors; convenience for tests."""
    cfg = PlacementConfig1D(anchors=np.asarray(list(anchors), dtype=np.int64), lam=lam, L=x.L, M=M)
    return synthesize_1d(x, cfg)


__all__ = [
    "PlacementConfig1D",
    "PlacementConfig2D",
    "Measurement1D",
    "Measurement2D",
    "PatchSet",
    "sample_placements_1d",
    "synthesize_1d",
    "extract_patches_1d",
    "latent_groups_1d",
    "sample_placements_2d",
    "synthesize_2d",
    "extract_patches_2d",
    "latent_groups_2d",
    "measurement_from_anchors_1d",
]
