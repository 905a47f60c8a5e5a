"""Shared value types, error taxonomy, and reproducible random streams.

Every stochastic routine in this package takes an explicit generator or a
:class:`SeedSpec`.  Substreams are derived by label so that experiment
harnesses can hand independent streams to trials, noise draws, and placement
draws without coordination; results are then bit-reproducible regardless of
scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


# --- error taxonomy ---------------------------------------------------------


class MtdError(Exception):
    """Base class for all package-specific errors."""


class PaddingViolation(MtdError, ValueError):
    """A padded signal has a nonzero entry where zeros are required."""


class InvalidLambda(MtdError, ValueError):
    """A rate or activity parameter lies outside its open interval."""


class OverlapViolation(MtdError, ValueError):
    """Anchor placements violate the minimum separation rule."""


class ShapeError(MtdError, ValueError):
    """An array argument has the wrong shape or dimension."""


class EnumerationTooLarge(MtdError, ValueError):
    """Exact enumeration was requested beyond the supported vertex count."""


class NoInteriorPatches(MtdError, ValueError):
    """The requested interior margin leaves no patches to pool over."""


class InsufficientSamples(MtdError, ValueError):
    """Too few samples or conditional hits to form the requested estimate."""


class UnsupportedOrder(MtdError, ValueError):
    """A moment order outside the implemented range was requested."""


class EmptyInput(MtdError, ValueError):
    """An operation received an empty collection."""


class SubsampleEmpty(MtdError, ValueError):
    """Subsampling stride exceeds the number of available patches."""


class ConfigError(MtdError, ValueError):
    """An experiment or CLI configuration is malformed."""


class DegenerateFit(MtdError, ValueError):
    """A regression was requested on unusable data."""


class NonConvergence(MtdError, RuntimeError):
    """An iterative solver hit its iteration cap without converging."""


class IllConditioned(MtdError, RuntimeError):
    """A linear system was too ill-conditioned to solve reliably."""


class ConvergenceFailure(MtdError, RuntimeError):
    """An iterative eigen-solve failed to reach tolerance."""


# --- random streams ---------------------------------------------------------


@dataclass(frozen=True)
class SeedSpec:
    """Addressable random stream: a master seed plus a derivation path.

    ``stream_id`` is a tuple of integer labels.  Deriving with a fresh label
    appends to the path, so nested harnesses (experiment -> trial -> noise)
    get mutually independent streams.  Streams are realized with the Philox
    counter-based generator, so materializing the same spec twice yields
    identical draws.
    """

    master_seed: int
    stream_id: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        object.__setattr__(self, "stream_id", tuple(int(s) for s in self.stream_id))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.stream_id)
        return np.random.Generator(np.random.Philox(seq))


def derive_stream(master: SeedSpec, label: int) -> SeedSpec:
    """Return the substream of ``master`` addressed by ``label``."""
    return SeedSpec(master.master_seed, master.stream_id + (int(label),))


def as_generator(seed) -> np.random.Generator:
    """Accept a SeedSpec, Generator, int, or None and return a Generator."""
    if seed is None:
        return np.random.default_rng()
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.generator()
    if isinstance(seed, (int, np.integer)):
        return SeedSpec(int(seed)).generator()
    raise ConfigError(f"cannot interpret {seed!r} as a random stream")


# --- parameter validation ---------------------------------------------------


def check_lambda(lam: float) -> float:
    """Validate a rate/activity parameter strictly inside (0, 1)."""
    lam = float(lam)
    if not 0.0 < lam < 1.0 or not np.isfinite(lam):
        raise InvalidLambda(f"lambda must lie strictly in (0, 1), got {lam}")
    return lam


def check_activity(lam: float) -> float:
    """Validate a hard-core activity parameter, lambda > 0."""
    lam = float(lam)
    if not lam > 0.0 or not np.isfinite(lam):
        raise InvalidLambda(f"activity must be positive and finite, got {lam}")
    return lam


def _frozen_array(values, shape_check, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if not shape_check(arr):
        raise ShapeError(f"{what}: bad shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{what}: entries must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


# --- signal types -----------------------------------------------------------


@dataclass(frozen=True)
class Signal1D:
    """Real signal of length L, L >= 1."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(self.values, lambda a: a.ndim == 1 and a.size >= 1, "Signal1D")
        object.__setattr__(self, "values", arr)

    @property
    def L(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Signal2D:
    """Real L x L image, L >= 1."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(
            self.values,
            lambda a: a.ndim == 2 and a.shape[0] == a.shape[1] and a.shape[0] >= 1,
            "Signal2D",
        )
        object.__setattr__(self, "values", arr)

    @property
    def L(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class PaddedSignal1D:
    """Length-2L vector whose second half is identically zero."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(
            self.values, lambda a: a.ndim == 1 and a.size >= 2 and a.size % 2 == 0, "PaddedSignal1D"
        )
        validate_padded_1d(arr)
        object.__setattr__(self, "values", arr)

    @property
    def L(self) -> int:
        return self.values.shape[0] // 2


@dataclass(frozen=True)
class PaddedSignal2D:
    """2L x 2L image supported on the top-left L x L block."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(
            self.values,
            lambda a: a.ndim == 2
            and a.shape[0] == a.shape[1]
            and a.shape[0] >= 2
            and a.shape[0] % 2 == 0,
            "PaddedSignal2D",
        )
        validate_padded_2d(arr)
        object.__setattr__(self, "values", arr)

    @property
    def L(self) -> int:
        return self.values.shape[0] // 2


def validate_padded_1d(values: np.ndarray) -> None:
    """Raise PaddingViolation unless the second half of ``values`` is zero."""
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.size % 2 != 0:
        raise ShapeError(f"padded 1d signal must have even length, got shape {arr.shape}")
    half = arr.size // 2
    bad = np.nonzero(arr[half:] != 0.0)[0]
    if bad.size:
        raise PaddingViolation(f"entry {half + bad[0]} of padded signal is nonzero")


def validate_padded_2d(values: np.ndarray) -> None:
    """Raise PaddingViolation unless ``values`` vanishes off the top-left quadrant."""
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2 != 0:
        raise ShapeError(f"padded 2d signal must be square with even side, got shape {arr.shape}")
    half = arr.shape[0] // 2
    mask = np.zeros_like(arr, dtype=bool)
    mask[:half, :half] = True
    bad = np.nonzero((arr != 0.0) & ~mask)
    if bad[0].size:
        raise PaddingViolation(f"entry ({bad[0][0]}, {bad[1][0]}) of padded signal is nonzero")


# --- noise ------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """Isotropic Gaussian noise level; sigma = 0 means exact synthesis."""

    sigma: float = 0.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ConfigError(f"sigma must be finite and nonnegative, got {self.sigma}")
        object.__setattr__(self, "sigma", float(self.sigma))


# --- distribution helpers ---------------------------------------------------


def tv_distance(p, q) -> float:
    """Total variation distance, half the l1 distance.

    Accepts two probability vectors of equal length or two mappings from
    outcomes to probabilities (union support, missing outcomes count as 0).
    """
    if isinstance(p, dict) or isinstance(q, dict):
        keys = set(p) | set(q)
        return 0.5 * float(sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys))
    pa, qa = np.asarray(p, dtype=np.float64), np.asarray(q, dtype=np.float64)
    if pa.shape != qa.shape:
        raise ShapeError(f"tv_distance needs equal shapes, got {pa.shape} and {qa.shape}")
    return 0.5 * float(np.abs(pa - qa).sum())


def empirical_distribution(outcomes) -> dict:
    """Relative frequencies of hashable outcomes."""
    outcomes = list(outcomes)
    if not outcomes:
        raise EmptyInput("no outcomes to tabulate")
    counts: dict = {}
    for o in outcomes:
        counts[o] = counts.get(o, 0) + 1
    n = len(outcomes)
    return {o: c / n for o, c in counts.items()}


# --- group element helpers --------------------------------------------------
#
# 1d group elements are pairs (g1, g2) with g1 in {0..L-1} and g2 in {0..L};
# they are stored as plain tuples (or rows of integer arrays in bulk paths).
# 2d group elements are 4-tuples of coordinate pairs; the first three lie in
# {0..L-1}^2 union {(L, L)} and the fourth in {0..L-1}^2 union {(0, 0)}.


def check_group_element_1d(g, L: int) -> tuple[int, int]:
    if len(g) != 2:
        raise ShapeError(f"1d group element must have two components, got {len(g)}")
    g1, g2 = int(g[0]), int(g[1])
    if not 0 <= g1 <= L - 1:
        raise ShapeError(f"g1 must lie in [0, {L - 1}], got {g1}")
    if not 0 <= g2 <= L:
        raise ShapeError(f"g2 must lie in [0, {L}], got {g2}")
    return g1, g2


def check_group_element_2d(g, L: int):
    if len(g) != 4:
        raise ShapeError("2d group element must have four components")
    out = []
    for idx, comp in enumerate(g):
        a, b = int(comp[0]), int(comp[1])
        in_box = 0 <= a <= L - 1 and 0 <= b <= L - 1
        empty = (a, b) == ((L, L) if idx < 3 else (0, 0))
        if not (in_box or empty):
            raise ShapeError(f"component {idx + 1} of 2d group element out of range: {(a, b)}")
        out.append((a, b))
    return tuple(out)


__all__ = [
    "MtdError",
    "PaddingViolation",
    "InvalidLambda",
    "OverlapViolation",
    "ShapeError",
    "EnumerationTooLarge",
    "NoInteriorPatches",
    "InsufficientSamples",
    "UnsupportedOrder",
    "EmptyInput",
    "SubsampleEmpty",
    "ConfigError",
    "DegenerateFit",
    "NonConvergence",
    "IllConditioned",
    "ConvergenceFailure",
    "SeedSpec",
    "derive_stream",
    "as_generator",
    "check_lambda",
    "check_activity",
    "Signal1D",
    "Signal2D",
    "PaddedSignal1D",
    "PaddedSignal2D",
    "validate_padded_1d",
    "validate_padded_2d",
    "NoiseSpec",
    "tv_distance",
    "empirical_distribution",
    "check_group_element_1d",
    "check_group_element_2d",
]
