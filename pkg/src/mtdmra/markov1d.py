"""The per-patch offset chain for 1d measurements and its exact analysis.

The anchor offset of patch k (or L when patch k holds no anchor) evolves as
a Markov chain on {0, ..., L}: from offset i < L the next offset is i plus
a zero-indexed geometric draw, truncated to L; a patch without an anchor
behaves like offset 0 because nothing spills into its successor.  Group
pairs (g1, g2) are a deterministic function of two consecutive offsets, so
the stationary pair law, mixing rate, and spectral gap of the offset chain
govern everything downstream.

Total variation conventions: distribution comparisons elsewhere use half
the l1 distance; the mixing curves here report the full l1 gap, matching
the analytic envelope constant 2 * (L + 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ConfigError,
    ConvergenceFailure,
    ShapeError,
    as_generator,
    check_lambda,
)

ENVELOPE_FACTOR = 2  # envelope constant is ENVELOPE_FACTOR * (L + 1)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic (L+1) x (L+1) matrix of the offset chain."""

    entries: np.ndarray
    L: int
    lam: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.entries, dtype=np.float64).copy()
        if arr.shape != (self.L + 1, self.L + 1):
            raise ShapeError(f"transition matrix must be ({self.L + 1}, {self.L + 1}), got {arr.shape}")
        if np.any(arr < 0) or np.max(np.abs(arr.sum(axis=1) - 1.0)) > 1e-12:
            raise ShapeError("rows must be probability vectors")
        if np.max(np.abs(arr[self.L] - arr[0])) > 1e-15:
            raise ShapeError("the no-anchor row must equal row 0")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)


@dataclass(frozen=True)
class GroupDistribution1D:
    """Probability law over group pairs (g1, g2), stored on its support."""

    probabilities: dict
    L: int

    def __post_init__(self) -> None:
        total = float(sum(self.probabilities.values()))
        if any(p < -1e-15 for p in self.probabilities.values()) or abs(total - 1.0) > 1e-9:
            raise ShapeError(f"probabilities must sum to 1, got {total}")
        clean = {
            (int(g[0]), int(g[1])): float(p)
            for g, p in sorted(self.probabilities.items())
            if p > 0.0
        }
        object.__setattr__(self, "probabilities", clean)


def transition_matrix(L: int, lam: float) -> TransitionMatrix:
    """Offset-chain transition matrix for signal length L and rate lam.

    Row i < L carries lam * (1-lam)^(j-i) for i <= j < L and mass
    (1-lam)^(L-i) on the no-anchor state L; row L repeats row 0.
    """
    lam = check_lambda(lam)
    if L < 1:
        raise ConfigError(f"need L >= 1, got {L}")
    P = np.zeros((L + 1, L + 1))
    for i in range(L):
        j = np.arange(i, L)
        P[i, j] = lam * (1.0 - lam) ** (j - i)
        P[i, L] = (1.0 - lam) ** (L - i)
    P[L] = P[0]
    return TransitionMatrix(entries=P, L=L, lam=lam)


def rho_closed_form(L: int, lam: float) -> np.ndarray:
    """Stationary law of the offset chain: uniform lam mass below L."""
    lam = check_lambda(lam)
    denom = 1.0 + (L - 1) * lam
    rho = np.full(L + 1, lam / denom)
    rho[L] = (1.0 - lam) / denom
    return rho


def stationary_eigen(p: TransitionMatrix, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Stationary law found by power iteration on the left action."""
    rho = np.full(p.L + 1, 1.0 / (p.L + 1))
    for _ in range(max_iter):
        nxt = rho @ p.entries
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - rho)) <= tol:
            return nxt
        rho = nxt
    raise ConvergenceFailure(f"power iteration did not reach tolerance {tol} in {max_iter} steps")


def stationary_closed_form(L: int, lam: float) -> GroupDistribution1D:
    """Closed-form stationary law of the group pair (g1, g2).

    With D = 1 + (L-1) * lam the five admissible cases are
    (0, L): (1-lam)^L / D; (x, L), 0<x<L: lam (1-lam)^(L-x) / D;
    (0, y), y<L: lam (1-lam)^y / D; (x, y), 0<x<=y<L: lam^2 (1-lam)^(y-x) / D.
    """
    lam = check_lambda(lam)
    if L < 1:
        raise ConfigError(f"need L >= 1, got {L}")
    D = 1.0 + (L - 1) * lam
    probs: dict = {(0, L): (1.0 - lam) ** L / D}
    for x in range(1, L):
        probs[(x, L)] = lam * (1.0 - lam) ** (L - x) / D
    for y in range(L):
        probs[(0, y)] = lam * (1.0 - lam) ** y / D
    for x in range(1, L):
        for y in range(x, L):
            probs[(x, y)] = lam**2 * (1.0 - lam) ** (y - x) / D
    return GroupDistribution1D(probabilities=probs, L=L)


def pair_distribution(p: TransitionMatrix, rho: np.ndarray) -> GroupDistribution1D:
    """Group-pair law induced by one stationary step of the offset chain.

    Pushes the two-step law rho(prev) * P(prev, cur) through the offset-to-
    group encoding: g1 collapses the no-anchor offset to 0, g2 is the
    current offset.
    """
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape != (p.L + 1,):
        raise ShapeError(f"rho must have shape ({p.L + 1},), got {rho.shape}")
    probs: dict = {}
    for prev in range(p.L + 1):
        g1 = prev if prev < p.L else 0
        for cur in range(p.L + 1):
            mass = rho[prev] * p.entries[prev, cur]
            if mass > 0.0:
                key = (g1, cur)
                probs[key] = probs.get(key, 0.0) + mass
    return GroupDistribution1D(probabilities=probs, L=p.L)


def simulate_chain(L: int, lam: float, M: int, rng=None) -> np.ndarray:
    """Simulate M steps of the offset chain and return group pairs (M, 2).

    Starts from offset 0, matching a measurement whose wait for the first
    anchor begins at position 0.
    """
    lam = check_lambda(lam)
    if M < 1:
        raise ConfigError(f"need M >= 1, got {M}")
    gen = as_generator(rng)
    jumps = (gen.geometric(lam, size=M) - 1).tolist()
    omega = np.empty(M + 1, dtype=np.int64)
    omega[0] = 0
    base = 0
    out = omega[1:]
    for k in range(M):
        nxt = base + jumps[k]
        if nxt >= L:
            out[k] = L
            base = 0
        else:
            out[k] = nxt
            base = nxt
    g1 = np.where(omega[:-1] < L, omega[:-1], 0)
    return np.stack([g1, omega[1:]], axis=1)


def minorization_beta(L: int, lam: float) -> float:
    """Common overlap of all transition rows: (1-lam)^(L-1)."""
    lam = check_lambda(lam)
    return (1.0 - lam) ** (L - 1)


def beta_from_matrix(p: TransitionMatrix) -> float:
    """Columnwise minimum mass of the matrix; cross-check for the formula."""
    return float(p.entries.min(axis=0).sum())


def mixing_rate(L: int, lam: float) -> float:
    """Contraction factor 1 - (1-lam)^(L-1) of the offset chain."""
    return 1.0 - minorization_beta(L, lam)


def decay_exponent(L: int, lam: float) -> float:
    """Exponential mixing exponent gamma = -log(1 - (1-lam)^(L-1))."""
    rate = mixing_rate(L, lam)
    return float(np.inf) if rate == 0.0 else -float(np.log(rate))


def tv_mixing_curve(p: TransitionMatrix, kmax: int) -> np.ndarray:
    """Exact l1 gap to stationarity per start state, shape (L+1, kmax+1).

    Entry (s, k) is the full l1 distance between the k-step law started at
    offset s and the stationary law.
    """
    if kmax < 0:
        raise ConfigError(f"need kmax >= 0, got {kmax}")
    rho = rho_closed_form(p.L, p.lam)
    dist = np.eye(p.L + 1)
    curves = np.empty((p.L + 1, kmax + 1))
    for k in range(kmax + 1):
        curves[:, k] = np.abs(dist - rho).sum(axis=1)
        if k < kmax:
            dist = dist @ p.entries
    return curves


def mixing_envelope(L: int, lam: float, kmax: int, constant: float | None = None) -> np.ndarray:
    """Analytic envelope C * (1 - (1-lam)^(L-1))^k, default C = 2 (L+1)."""
    if constant is None:
        constant = float(ENVELOPE_FACTOR * (L + 1))
    rate = mixing_rate(L, lam)
    k = np.arange(kmax + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        vals = constant * rate**k
    return vals


def empirical_envelope_constant(curves: np.ndarray, L: int, lam: float, floor: float = 1e-13) -> float:
    """Smallest C with every curve below C * rate^k; logged beside the default.

    Curve values at or below ``floor`` are rounding noise left over from
    repeated matrix products and are excluded, otherwise the ratio against
    rate^k diverges once the exact curve has decayed past machine precision.
    """
    rate = mixing_rate(L, lam)
    kmax = curves.shape[1] - 1
    k = np.arange(kmax + 1, dtype=np.float64)
    if rate == 0.0:
        return float(curves[:, 0].max())
    ratios = np.where(curves > floor, curves / rate**k, 0.0)
    return float(ratios.max())


def spectral_gap(p: TransitionMatrix) -> float:
    """One minus the second-largest eigenvalue modulus.

    The second eigenvalue of this family is complex for some (L, lam), so
    the moduli come from a dense eigenvalue solve rather than iteration.
    """
    eigs = np.linalg.eigvals(p.entries)
    order = np.argsort(-np.abs(eigs))
    top = eigs[order[0]]
    if abs(top - 1.0) > 1e-9:
        raise ConvergenceFailure(f"leading eigenvalue {top} is not 1; matrix is not stochastic")
    if p.L == 0 or len(eigs) == 1:
        return 1.0
    return float(1.0 - np.abs(eigs[order[1]]))


def group_pair_histogram(pairs: np.ndarray, L: int) -> dict:
    """Relative frequencies of (g1, g2) rows of an integer array."""
    arr = np.asarray(pairs, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ShapeError(f"expected an (M, 2) array, got {arr.shape}")
    codes = arr[:, 0] * (L + 1) + arr[:, 1]
    counts = np.bincount(codes, minlength=L * (L + 1) + L + 1)
    total = arr.shape[0]
    out: dict = {}
    for code in np.nonzero(counts)[0]:
        out[(int(code) // (L + 1), int(code) % (L + 1))] = counts[code] / total
    return out


__all__ = [
    "ENVELOPE_FACTOR",
    "TransitionMatrix",
    "GroupDistribution1D",
    "transition_matrix",
    "rho_closed_form",
    "stationary_eigen",
    "stationary_closed_form",
    "pair_distribution",
    "simulate_chain",
    "minorization_beta",
    "beta_from_matrix",
    "mixing_rate",
    "decay_exponent",
    "tv_mixing_curve",
    "mixing_envelope",
    "empirical_envelope_constant",
    "spectral_gap",
    "group_pair_histogram",
]
