"""Hard-core anchor model on the 2d grid: exact law, Glauber sampling, mixing.

Anchors live on the square grid {0, ..., L*(M-1)}^2 and two positions
conflict when their sup-norm distance is below L.  The placement law is
the hard-core model with activity lam on that conflict graph: a
configuration eta has weight lam^|eta| when independent, 0 otherwise.

Small graphs (at most 25 vertices) admit exact enumeration, which backs
both an exact sampler and the oracles used in tests.  Larger graphs are
sampled with a single-site heat-bath (Glauber) chain using documented
defaults: burn-in of 200 sweeps and one sweep of thinning, where a sweep
is |V| single-site updates.

There is no closed-form stationary patch law in 2d; `empirical_pi_2d`
pools group elements over interior patches, and `mixing_diagnostic`
measures how fast conditional patch laws forget a distant patch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ConfigError,
    EmptyInput,
    EnumerationTooLarge,
    InsufficientSamples,
    NoInteriorPatches,
    as_generator,
    check_activity,
)

ENUMERATION_CAP = 25
BURN_IN_SWEEPS = 200
THIN_SWEEPS = 1
EMPTY_OFFSET_4 = (0, 0)  # empty diagonal neighbor encodes as the zero shift


# --- conflict graph ---------------------------------------------------------


@dataclass(frozen=True)
class ConflictGraph:
    """Anchor grid with sup-norm adjacency below L."""

    L: int
    M: int
    n_side: int
    neighbors: list

    @property
    def n_vertices(self) -> int:
        return self.n_side * self.n_side

    def coords(self, v: int) -> tuple[int, int]:
        return divmod(v, self.n_side)

    def vertex(self, r: int, c: int) -> int:
        return r * self.n_side + c


def conflict_graph(L: int, M: int) -> ConflictGraph:
    """Build the conflict graph for signal side L and patch grid side M."""
    if L < 1 or M < 1:
        raise ConfigError(f"need L >= 1 and M >= 1, got L={L}, M={M}")
    n_side = L * (M - 1) + 1
    reach = L - 1
    neighbors: list[list[int]] = []
    for r in range(n_side):
        for c in range(n_side):
            nb = []
            for rr in range(max(0, r - reach), min(n_side, r + reach + 1)):
                for cc in range(max(0, c - reach), min(n_side, c + reach + 1)):
                    if (rr, cc) != (r, c):
                        nb.append(rr * n_side + cc)
            neighbors.append(nb)
    return ConflictGraph(L=L, M=M, n_side=n_side, neighbors=neighbors)


# --- exact law by enumeration ------------------------------------------------


@dataclass(frozen=True)
class HardCoreExact:
    """Full enumeration of the hard-core law on a small conflict graph."""

    graph: ConflictGraph
    lam: float
    configs: list  # each config is a sorted tuple of vertex ids
    weights: np.ndarray
    partition_value: float

    @property
    def probabilities(self) -> np.ndarray:
        return self.weights / self.partition_value

    def config_coords(self, idx: int) -> np.ndarray:
        cfg = self.configs[idx]
        return np.array([self.graph.coords(v) for v in cfg], dtype=np.int64).reshape(-1, 2)

    def occupancy_distribution(self) -> np.ndarray:
        """Law of the anchor count q, indexed 0..max occupancy."""
        sizes = np.array([len(c) for c in self.configs])
        probs = self.probabilities
        out = np.zeros(sizes.max() + 1 if sizes.size else 1)
        np.add.at(out, sizes, probs)
        return out


def enumerate_exact(graph: ConflictGraph, lam: float, cap: int = ENUMERATION_CAP) -> HardCoreExact:
    """Enumerate every independent set with its hard-core weight.

    Depth-first over vertices in id order; a vertex may be occupied only
    when none of its already-decided neighbors is occupied.  Raises
    EnumerationTooLarge beyond ``cap`` vertices.
    """
    lam = check_activity(lam)
    n = graph.n_vertices
    if n > cap:
        raise EnumerationTooLarge(f"graph has {n} vertices, enumeration is capped at {cap}")
    configs: list[tuple[int, ...]] = []
    weights: list[float] = []
    blocked = [0] * n
    chosen: list[int] = []
    neighbors = graph.neighbors

    def walk(v: int) -> None:
        if v == n:
            configs.append(tuple(chosen))
            weights.append(lam ** len(chosen))
            return
        # unoccupied branch first keeps configs in lexicographic order
        walk(v + 1)
        if blocked[v] == 0:
            chosen.append(v)
            for w in neighbors[v]:
                blocked[w] += 1
            walk(v + 1)
            for w in neighbors[v]:
                blocked[w] -= 1
            chosen.pop()

    walk(0)
    w = np.array(weights)
    return HardCoreExact(
        graph=graph, lam=lam, configs=configs, weights=w, partition_value=float(w.sum())
    )


def sample_exact(exact: HardCoreExact, n_samples: int, rng=None) -> list[np.ndarray]:
    """Draw configurations from the exact law; each is an (q, 2) coord array."""
    if n_samples < 1:
        raise EmptyInput(f"need n_samples >= 1, got {n_samples}")
    gen = as_generator(rng)
    idx = gen.choice(len(exact.configs), size=n_samples, p=exact.probabilities)
    return [exact.config_coords(int(i)) for i in idx]


# --- Glauber sampler ---------------------------------------------------------


def sample_glauber(
    graph: ConflictGraph,
    lam: float,
    n_samples: int,
    rng=None,
    burn_in: int | None = None,
    thin: int | None = None,
) -> list[np.ndarray]:
    """Heat-bath samples of the hard-core law; each is an (q, 2) coord array.

    One update picks a uniform vertex and resamples its occupancy from the
    conditional law: probability lam / (1 + lam) when no neighbor is
    occupied, else 0.  ``burn_in`` and ``thin`` are counted in single-site
    updates and default to 200 sweeps and 1 sweep.
    """
    lam = check_activity(lam)
    if n_samples < 1:
        raise EmptyInput(f"need n_samples >= 1, got {n_samples}")
    n = graph.n_vertices
    if burn_in is None:
        burn_in = BURN_IN_SWEEPS * n
    if thin is None:
        thin = THIN_SWEEPS * n
    if thin < 1:
        raise ConfigError(f"thin must be >= 1 updates, got {thin}")
    gen = as_generator(rng)
    p_occ = lam / (1.0 + lam)
    occ = [0] * n
    occupied: set[int] = set()
    neighbors = graph.neighbors
    total = burn_in + n_samples * thin
    samples: list[np.ndarray] = []
    next_capture = burn_in + thin
    done = 0
    block = 1 << 16
    n_side = graph.n_side
    while done < total:
        take = min(block, total - done)
        vs = gen.integers(0, n, size=take).tolist()
        us = gen.random(size=take).tolist()
        for v, u in zip(vs, us):
            free = True
            for w in neighbors[v]:
                if occ[w]:
                    free = False
                    break
            if free and u < p_occ:
                if not occ[v]:
                    occ[v] = 1
                    occupied.add(v)
            elif occ[v]:
                occ[v] = 0
                occupied.discard(v)
            done += 1
            if done == next_capture:
                coords = np.array(
                    sorted(divmod(v2, n_side) for v2 in occupied), dtype=np.int64
                ).reshape(-1, 2)
                samples.append(coords)
                next_capture += thin
    return samples[:n_samples]


# --- group elements from configurations --------------------------------------


def encode_group(anchors, L: int, patch: tuple[int, int]):
    """Group element of one patch, read directly off a configuration.

    ``anchors`` is an iterable of (row, col) anchor coordinates; ``patch``
    is a 0-based patch index (i, j).  Scans the four relevant patch blocks
    for an anchor and encodes empties per the patch-model convention.
    """
    pts = [(int(r), int(c)) for r, c in anchors]

    def offset(pi: int, pj: int):
        if pi < 0 or pj < 0:
            return (L, L)
        base_r, base_c = pi * L, pj * L
        for r, c in pts:
            if base_r <= r < base_r + L and base_c <= c < base_c + L:
                return (r - base_r, c - base_c)
        return (L, L)

    i, j = patch
    g1 = offset(i, j)
    g2 = offset(i, j - 1)
    g3 = offset(i - 1, j)
    g4 = offset(i - 1, j - 1)
    if g4 == (L, L):
        g4 = EMPTY_OFFSET_4
    return (g1, g2, g3, g4)


def _offset_map(anchors, L: int) -> dict:
    """Patch index -> anchor offset for every anchored patch."""
    out = {}
    for r, c in anchors:
        out[(int(r) // L, int(c) // L)] = (int(r) % L, int(c) % L)
    return out


def group_of_patch(offsets: dict, L: int, i: int, j: int):
    """Group element of patch (i, j) from a precomputed offset map."""
    empty = (L, L)
    g1 = offsets.get((i, j), empty)
    g2 = offsets.get((i, j - 1), empty) if j >= 1 else empty
    g3 = offsets.get((i - 1, j), empty) if i >= 1 else empty
    g4 = offsets.get((i - 1, j - 1), empty) if i >= 1 and j >= 1 else empty
    if g4 == empty:
        g4 = EMPTY_OFFSET_4
    return (g1, g2, g3, g4)


@dataclass(frozen=True)
class EmpiricalGroupDistribution2D:
    """Pooled relative frequencies of 2d group elements."""

    counts: dict
    total: int
    L: int

    def probabilities(self) -> dict:
        return {g: c / self.total for g, c in sorted(self.counts.items())}


def interior_range(M: int, margin: int) -> range:
    """0-based patch indices at least ``margin`` patches from every edge."""
    r = range(margin, M - margin)
    if len(r) <= 0:
        raise NoInteriorPatches(f"margin {margin} leaves no interior patches for M={M}")
    return r


def empirical_pi_2d(
    configs, L: int, M: int, interior_margin: int = 2
) -> EmpiricalGroupDistribution2D:
    """Pool group elements of interior patches over sampled configurations."""
    configs = list(configs)
    if not configs:
        raise EmptyInput("no configurations given")
    rng_int = interior_range(M, interior_margin)
    counts: dict = {}
    for cfg in configs:
        offsets = _offset_map(cfg, L)
        for i in rng_int:
            for j in rng_int:
                g = group_of_patch(offsets, L, i, j)
                counts[g] = counts.get(g, 0) + 1
    total = len(configs) * len(rng_int) ** 2
    return EmpiricalGroupDistribution2D(counts=counts, total=total, L=L)


# --- spatial mixing diagnostic ------------------------------------------------


@dataclass(frozen=True)
class DecayRow:
    """One separation's estimated conditional deviation."""

    separation: int
    deviation: float
    se: float
    n_cells: int
    n_pairs: int


def _axis_pairs(rng_int: range, d: int) -> list:
    """Ordered interior patch-index pairs at sup-norm separation d, both axes."""
    pairs = []
    for i in rng_int:
        for j in rng_int:
            if j + d in rng_int:
                pairs.append(((i, j), (i, j + d)))
                pairs.append(((i, j + d), (i, j)))
            if i + d in rng_int:
                pairs.append(((i, j), (i + d, j)))
                pairs.append(((i + d, j), (i, j)))
    return pairs


def _max_conditional_deviation(pair_records: dict, base: dict, min_hits: int):
    """Max over conditioning values with enough hits of the sup deviation."""
    support = set(base)
    best = None
    cells = 0
    for psi, hist in pair_records.items():
        hits = sum(hist.values())
        if hits < min_hits:
            continue
        cells += 1
        dev = max(abs(hist.get(phi, 0) / hits - base.get(phi, 0.0)) for phi in support | set(hist))
        best = dev if best is None else max(best, dev)
    return best, cells


def mixing_diagnostic(
    graph: ConflictGraph,
    lam: float,
    separations,
    n_samples: int,
    rng=None,
    sampler: str = "glauber",
    min_hits: int = 100,
    interior_margin: int = 2,
    n_blocks: int = 8,
    burn_in: int | None = None,
    thin: int | None = None,
) -> list[DecayRow]:
    """Estimate how fast a patch's group law forgets a patch d away.

    Samples configurations, then for each separation d pools axis-aligned
    interior patch pairs and computes the max over conditioning values psi
    (with at least ``min_hits`` hits) of max over phi of
    |P_hat(g = phi | g' = psi) - pi_hat(phi)|.  Standard errors come from
    splitting the configurations into ``n_blocks`` blocks.
    """
    separations = sorted(set(int(d) for d in separations))
    if not separations or separations[0] < 1:
        raise ConfigError("separations must be positive integers")
    rng_int = interior_range(graph.M, interior_margin)
    if max(separations) >= len(rng_int):
        raise ConfigError(
            f"separation {max(separations)} has no interior pairs for M={graph.M}, margin={interior_margin}"
        )
    if sampler == "exact":
        configs = sample_exact(enumerate_exact(graph, lam), n_samples, rng)
    elif sampler == "glauber":
        configs = sample_glauber(graph, lam, n_samples, rng, burn_in=burn_in, thin=thin)
    else:
        raise ConfigError(f"unknown sampler {sampler!r}")

    grids = []
    for cfg in configs:
        offsets = _offset_map(cfg, graph.L)
        grids.append(
            {(i, j): group_of_patch(offsets, graph.L, i, j) for i in rng_int for j in rng_int}
        )

    base_counts: dict = {}
    for grid in grids:
        for g in grid.values():
            base_counts[g] = base_counts.get(g, 0) + 1
    base_total = len(grids) * len(rng_int) ** 2
    base = {g: c / base_total for g, c in base_counts.items()}

    rows = []
    block_size = max(1, len(grids) // n_blocks)
    for d in separations:
        pairs = _axis_pairs(rng_int, d)
        records: dict = {}
        block_records = [dict() for _ in range(n_blocks)]
        for idx, grid in enumerate(grids):
            b = min(idx // block_size, n_blocks - 1)
            for k_from, k_to in pairs:
                psi, phi = grid[k_from], grid[k_to]
                hist = records.setdefault(psi, {})
                hist[phi] = hist.get(phi, 0) + 1
                bh = block_records[b].setdefault(psi, {})
                bh[phi] = bh.get(phi, 0) + 1
        dev, cells = _max_conditional_deviation(records, base, min_hits)
        if dev is None:
            raise InsufficientSamples(
                f"no conditioning value reached {min_hits} hits at separation {d}"
            )
        block_devs = []
        block_min = max(1, min_hits // n_blocks)
        for br in block_records:
            bdev, _ = _max_conditional_deviation(br, base, block_min)
            if bdev is not None:
                block_devs.append(bdev)
        se = float(np.std(block_devs, ddof=1) / math.sqrt(len(block_devs))) if len(block_devs) > 1 else float("nan")
        rows.append(
            DecayRow(separation=d, deviation=float(dev), se=se, n_cells=cells, n_pairs=len(pairs) * len(grids))
        )
    return rows


__all__ = [
    "ENUMERATION_CAP",
    "BURN_IN_SWEEPS",
    "THIN_SWEEPS",
    "ConflictGraph",
    "conflict_graph",
    "HardCoreExact",
    "enumerate_exact",
    "sample_exact",
    "sample_glauber",
    "encode_group",
    "group_of_patch",
    "EmpiricalGroupDistribution2D",
    "interior_range",
    "empirical_pi_2d",
    "DecayRow",
    "mixing_diagnostic",
]
