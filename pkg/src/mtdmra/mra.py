"""Alignment model induced on patches: group action, projection, moments.

A patch of a measurement is, up to noise, a projection of a cyclically
shifted copy (1d) or four shifted copies (2d) of the zero-padded signal.
This module implements that forward map, the induced model over group
elements, and exact population moments up to order three, with closed-form
Gaussian noise corrections.

Conventions.  The 1d group element is a pair (g1, g2); g1 shifts the copy
whose second half is kept, g2 the copy whose first half is kept.  The 2d
element is a quadruple of coordinate shifts applied to four padded copies,
projected onto the top-left, top-right, bottom-left, and bottom-right
quadrant blocks respectively.  2d tensors are formed after flattening each
patch to length L^2 in row-major order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    EmptyInput,
    NoiseSpec,
    PaddedSignal1D,
    PaddedSignal2D,
    ShapeError,
    Signal1D,
    Signal2D,
    UnsupportedOrder,
    as_generator,
)

MAX_MOMENT_ORDER = 3


# --- padding, action, projection -------------------------------------------


def pad_1d(x: Signal1D) -> PaddedSignal1D:
    """Append L zeros to a length-L signal."""
    return PaddedSignal1D(np.concatenate([x.values, np.zeros(x.L)]))


def pad_2d(x: Signal2D) -> PaddedSignal2D:
    """Embed an L x L image in the top-left block of a 2L x 2L zero image."""
    out = np.zeros((2 * x.L, 2 * x.L))
    out[: x.L, : x.L] = x.values
    return PaddedSignal2D(out)


def act_1d(shift: int, values: np.ndarray) -> np.ndarray:
    """Cyclic shift: output[i] = input[(i - shift) mod n]."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"act_1d expects a vector, got shape {arr.shape}")
    return np.roll(arr, int(shift))


def act_2d(shift: tuple[int, int], values: np.ndarray) -> np.ndarray:
    """Double cyclic shift: output[i, j] = input[(i - a) mod n, (j - b) mod n]."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"act_2d expects a square image, got shape {arr.shape}")
    return np.roll(np.roll(arr, int(shift[0]), axis=0), int(shift[1]), axis=1)


def project_1d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sum of the second half of ``a`` and the first half of ``b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size % 2 != 0:
        raise ShapeError(f"project_1d expects two equal even-length vectors, got {a.shape} and {b.shape}")
    half = a.size // 2
    return a[half:] + b[:half]


def project_2d(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Sum of the four quadrant blocks, one from each input image.

    Takes the top-left block of ``a``, top-right of ``b``, bottom-left of
    ``c``, and bottom-right of ``d``.
    """
    imgs = [np.asarray(v, dtype=np.float64) for v in (a, b, c, d)]
    shape = imgs[0].shape
    if any(v.shape != shape for v in imgs) or len(shape) != 2 or shape[0] != shape[1] or shape[0] % 2:
        raise ShapeError("project_2d expects four equal square images with even side")
    half = shape[0] // 2
    return imgs[0][:half, :half] + imgs[1][:half, half:] + imgs[2][half:, :half] + imgs[3][half:, half:]


def forward_clean_1d(g, padded: PaddedSignal1D) -> np.ndarray:
    """Noiseless patch produced by group element ``g`` acting on the padded signal."""
    return project_1d(act_1d(g[0], padded.values), act_1d(g[1], padded.values))


def forward_clean_2d(g, padded: PaddedSignal2D) -> np.ndarray:
    """Noiseless 2d patch produced by the four shifted copies under ``g``."""
    return project_2d(
        act_2d(g[0], padded.values),
        act_2d(g[1], padded.values),
        act_2d(g[2], padded.values),
        act_2d(g[3], padded.values),
    )


def forward_1d(g, x: Signal1D, noise: NoiseSpec = NoiseSpec(), rng=None) -> np.ndarray:
    """One noisy 1d sample: forward_clean_1d plus isotropic Gaussian noise."""
    clean = forward_clean_1d(g, pad_1d(x))
    if noise.sigma == 0.0:
        return clean
    return clean + noise.sigma * as_generator(rng).standard_normal(clean.shape)


def forward_2d(g, x: Signal2D, noise: NoiseSpec = NoiseSpec(), rng=None) -> np.ndarray:
    """One noisy 2d sample: forward_clean_2d plus isotropic Gaussian noise."""
    clean = forward_clean_2d(g, pad_2d(x))
    if noise.sigma == 0.0:
        return clean
    return clean + noise.sigma * as_generator(rng).standard_normal(clean.shape)


# --- induced model ----------------------------------------------------------


@dataclass(frozen=True)
class InducedModelSpec:
    """Signal plus a distribution over group elements plus a noise level.

    ``pi`` maps group elements (1d pairs or 2d quadruples of pairs) to
    probabilities.  Probabilities must be nonnegative and sum to one within
    1e-9; they are renormalized exactly on construction.
    """

    signal: Signal1D | Signal2D
    pi: dict
    noise: NoiseSpec = NoiseSpec()

    def __post_init__(self) -> None:
        if not self.pi:
            raise EmptyInput("pi has empty support")
        total = float(sum(self.pi.values()))
        if any(p < 0 for p in self.pi.values()) or abs(total - 1.0) > 1e-9:
            raise ShapeError(f"pi must be a probability vector, mass sums to {total}")
        norm = {g: float(p) / total for g, p in self.pi.items() if p > 0}
        object.__setattr__(self, "pi", norm)

    @property
    def two_d(self) -> bool:
        return isinstance(self.signal, Signal2D)

    @property
    def dim(self) -> int:
        return self.signal.L ** 2 if self.two_d else self.signal.L


def support_patches(spec: InducedModelSpec) -> tuple[list, np.ndarray, np.ndarray]:
    """Clean patch vector for each support element of ``spec.pi``.

    Returns (elements, probabilities, patch matrix of shape (K, dim)); 2d
    patches are flattened row-major.  Iteration order is the sorted support,
    so downstream reductions are deterministic.
    """
    elements = sorted(spec.pi.keys())
    probs = np.array([spec.pi[g] for g in elements])
    if spec.two_d:
        padded = pad_2d(spec.signal)
        rows = [forward_clean_2d(g, padded).ravel() for g in elements]
    else:
        padded = pad_1d(spec.signal)
        rows = [forward_clean_1d(g, padded) for g in elements]
    return elements, probs, np.asarray(rows)


def sample_iid(spec: InducedModelSpec, M: int, rng=None):
    """Draw M independent noisy samples from the induced model.

    Returns a PatchSet whose ``latent`` records the drawn group elements.
    """
    from .mtd_sim import PatchSet

    if M < 1:
        raise EmptyInput(f"need at least one sample, got M={M}")
    gen = as_generator(rng)
    elements, probs, clean = support_patches(spec)
    idx = gen.choice(len(elements), size=M, p=probs)
    patches = clean[idx]
    if spec.noise.sigma > 0.0:
        patches = patches + spec.noise.sigma * gen.standard_normal(patches.shape)
    L = spec.signal.L
    if spec.two_d:
        patches = patches.reshape(M, L, L)
    latent = [elements[i] for i in idx]
    return PatchSet(patches=patches, L=L, two_d=spec.two_d, latent=latent)


# --- moment tensors ---------------------------------------------------------


@dataclass(frozen=True)
class MomentTensor:
    """Dense symmetric tensor of shape (dims,) * order."""

    order: int
    dims: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.order <= MAX_MOMENT_ORDER:
            raise UnsupportedOrder(f"moment order must be in 1..{MAX_MOMENT_ORDER}, got {self.order}")
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.shape != (self.dims,) * self.order:
            raise ShapeError(f"entries shape {arr.shape} does not match order {self.order}, dims {self.dims}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    def to_json_dict(self) -> dict:
        return {
            "order": self.order,
            "dims": self.dims,
            "entries": [float(v) for v in self.entries.ravel()],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "MomentTensor":
        order, dims = int(data["order"]), int(data["dims"])
        entries = np.array(data["entries"], dtype=np.float64).reshape((dims,) * order)
        return cls(order=order, dims=dims, entries=entries)


def _weighted_power(probs: np.ndarray, rows: np.ndarray, order: int) -> np.ndarray:
    if order == 1:
        return np.einsum("k,ki->i", probs, rows)
    if order == 2:
        return np.einsum("k,ki,kj->ij", probs, rows, rows)
    return np.einsum("k,ki,kj,kl->ijl", probs, rows, rows, rows)


def clean_moment(spec: InducedModelSpec, n: int) -> MomentTensor:
    """Order-n population moment of the noiseless induced model."""
    if not 1 <= n <= MAX_MOMENT_ORDER:
        raise UnsupportedOrder(f"moment order must be in 1..{MAX_MOMENT_ORDER}, got {n}")
    _, probs, rows = support_patches(spec)
    return MomentTensor(order=n, dims=spec.dim, entries=_weighted_power(probs, rows, n))


def noisy_population_moment(spec: InducedModelSpec, n: int) -> MomentTensor:
    """Order-n population moment of the noisy induced model.

    Gaussian corrections: order 2 gains sigma^2 I; order 3 gains sigma^2
    times the first moment paired with the identity over the three
    symmetrized index placements.  Order 1 is unchanged.
    """
    base = clean_moment(spec, n)
    sigma2 = spec.noise.sigma ** 2
    if sigma2 == 0.0 or n == 1:
        return base
    d = spec.dim
    if n == 2:
        return MomentTensor(order=2, dims=d, entries=base.entries + sigma2 * np.eye(d))
    m1 = clean_moment(spec, 1).entries
    eye = np.eye(d)
    corr = (
        np.einsum("i,jl->ijl", m1, eye)
        + np.einsum("j,il->ijl", m1, eye)
        + np.einsum("l,ij->ijl", m1, eye)
    )
    return MomentTensor(order=3, dims=d, entries=base.entries + sigma2 * corr)


__all__ = [
    "MAX_MOMENT_ORDER",
    "pad_1d",
    "pad_2d",
    "act_1d",
    "act_2d",
    "project_1d",
    "project_2d",
    "forward_clean_1d",
    "forward_clean_2d",
    "forward_1d",
    "forward_2d",
    "InducedModelSpec",
    "support_patches",
    "sample_iid",
    "MomentTensor",
    "clean_moment",
    "noisy_population_moment",
]
