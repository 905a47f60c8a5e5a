"""Moment estimators, error-decay experiments, and signal recovery.

The estimators consume patch sets from either pipeline (measurement patches
or iid samples of the induced model) through the same code path.  All
accumulations run in a fixed chunked order so results are bit-reproducible
across runs and thread counts; experiment trials draw from derived
substreams addressed by trial index, never from a shared stream.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConfigError,
    DegenerateFit,
    EmptyInput,
    IllConditioned,
    NoiseSpec,
    NonConvergence,
    SeedSpec,
    ShapeError,
    Signal1D,
    Signal2D,
    SubsampleEmpty,
    UnsupportedOrder,
    derive_stream,
)
from .markov1d import decay_exponent, stationary_closed_form
from .mra import (
    MAX_MOMENT_ORDER,
    InducedModelSpec,
    MomentTensor,
    clean_moment,
    forward_clean_1d,
    forward_clean_2d,
    noisy_population_moment,
    pad_1d,
    pad_2d,
    sample_iid,
)
from .mtd_sim import (
    PatchSet,
    extract_patches_1d,
    extract_patches_2d,
    sample_placements_1d,
    sample_placements_2d,
    synthesize_1d,
    synthesize_2d,
)
from . import hardcore2d

CHUNK = 1 << 16
DEFAULT_SUBSAMPLE_FACTOR = 3.0  # subsample constant c defaults to this over gamma

# stream labels inside experiment harnesses
_SIGNAL_STREAM = 0
_PI_STREAM = 1
_TRIAL_STREAM = 2


# --- feature maps -------------------------------------------------------------


@dataclass(frozen=True)
class FeatureMap:
    """What an experiment estimates: a moment tensor or the signal itself."""

    kind: str = "moment"  # "moment" | "identity"
    order: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("moment", "identity"):
            raise ConfigError(f"feature kind must be 'moment' or 'identity', got {self.kind!r}")
        if self.kind == "moment" and not 1 <= self.order <= MAX_MOMENT_ORDER:
            raise UnsupportedOrder(f"feature order must be in 1..{MAX_MOMENT_ORDER}, got {self.order}")

    def describe(self) -> str:
        return f"moment({self.order})" if self.kind == "moment" else "identity"


# --- empirical moments ---------------------------------------------------------


def _power_rows(rows: np.ndarray, order: int) -> np.ndarray:
    """Per-sample tensor powers, flattened to shape (N, dim**order)."""
    n, d = rows.shape
    if order == 1:
        return rows
    if order == 2:
        return np.einsum("ki,kj->kij", rows, rows).reshape(n, d * d)
    return np.einsum("ki,kj,kl->kijl", rows, rows, rows).reshape(n, d**3)


def empirical_moment(patches: PatchSet, n: int) -> MomentTensor:
    """Average order-n tensor power of the patch vectors."""
    mean, _ = empirical_moment_stats(patches, n)
    return mean


def empirical_moment_stats(
    patches: PatchSet, n: int, n_blocks: int | None = None
) -> tuple[MomentTensor, np.ndarray]:
    """Empirical moment plus per-entry standard errors.

    With ``n_blocks`` set, standard errors come from contiguous block means,
    which stays honest for serially dependent patch sequences; otherwise
    they use the iid formula.  Accumulation order is fixed (chunks of 2^16
    in sequence), so results do not depend on threading.
    """
    if not 1 <= n <= MAX_MOMENT_ORDER:
        raise UnsupportedOrder(f"moment order must be in 1..{MAX_MOMENT_ORDER}, got {n}")
    rows = patches.as_vectors()
    total = rows.shape[0]
    if total == 0:
        raise EmptyInput("patch set is empty")
    d = rows.shape[1]
    dim_out = d**n
    s = np.zeros(dim_out)
    q = np.zeros(dim_out)
    for start in range(0, total, CHUNK):
        p = _power_rows(rows[start : start + CHUNK], n)
        s += p.sum(axis=0)
        q += (p * p).sum(axis=0)
    mean = s / total
    if n_blocks is None or n_blocks < 2 or total < 2 * n_blocks:
        var = np.maximum(q / total - mean * mean, 0.0)
        se = np.sqrt(var / total)
    else:
        bounds = np.linspace(0, total, n_blocks + 1).astype(int)
        block_means = np.empty((n_blocks, dim_out))
        for b in range(n_blocks):
            seg = _power_rows(rows[bounds[b] : bounds[b + 1]], n)
            block_means[b] = seg.mean(axis=0)
        se = block_means.std(axis=0, ddof=1) / math.sqrt(n_blocks)
    shape = (d,) * n
    return MomentTensor(order=n, dims=d, entries=mean.reshape(shape)), se.reshape(shape)


# --- subsampling ---------------------------------------------------------------


def subsample(patches: PatchSet, m: int) -> PatchSet:
    """Keep every m-th patch (every m-th grid row and column in 2d)."""
    m = int(m)
    if m < 1:
        raise ConfigError(f"stride must be >= 1, got {m}")
    if m == 1:
        return patches
    if patches.two_d and patches.patches.ndim == 4:
        kept = patches.patches[m - 1 :: m, m - 1 :: m]
        latent = patches.latent
        if isinstance(latent, np.ndarray):
            latent = latent[m - 1 :: m, m - 1 :: m]
        n_kept = kept.shape[0] * kept.shape[1]
    else:
        kept = patches.patches[m - 1 :: m]
        latent = patches.latent
        if isinstance(latent, np.ndarray):
            latent = latent[m - 1 :: m]
        elif isinstance(latent, list):
            latent = latent[m - 1 :: m]
        n_kept = kept.shape[0]
    if n_kept == 0:
        raise SubsampleEmpty(f"stride {m} leaves no patches out of {patches.n_patches}")
    return PatchSet(patches=kept, L=patches.L, two_d=patches.two_d, latent=latent)


def subsample_stride(L: int, lam: float, M: int, c: float | None = None, two_d: bool = False) -> int:
    """Stride ceil(c log M); c defaults to 3 over the 1d mixing exponent.

    In 2d there is no analytic exponent, so ``c`` must be given explicitly.
    """
    if c is None:
        if two_d:
            raise ConfigError("2d subsampling needs an explicit constant c")
        gamma = decay_exponent(L, lam)
        c = 0.0 if math.isinf(gamma) else DEFAULT_SUBSAMPLE_FACTOR / gamma
    if M < 1:
        raise ConfigError(f"need M >= 1, got {M}")
    return max(1, math.ceil(c * math.log(M)))


# --- line fits -----------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    n: int


def linear_fit(x, y) -> FitResult:
    """Ordinary least squares line with coefficient of determination."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise DegenerateFit(f"need two 1d arrays with at least 2 points, got shapes {x.shape}, {y.shape}")
    if np.ptp(x) == 0.0:
        raise DegenerateFit("all x values are identical")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(slope=float(slope), intercept=float(intercept), r2=r2, n=x.size)


def loglog_fit(x, y) -> FitResult:
    """Least squares line through (log x, log y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DegenerateFit("log-log fit needs strictly positive values")
    return linear_fit(np.log(x), np.log(y))


# --- mse experiment -------------------------------------------------------------


@dataclass(frozen=True)
class MseExperimentConfig:
    """Declarative description of an error-decay experiment."""

    model: str  # "1d" | "2d"
    L: int
    sigma: float
    M_list: tuple
    gap_lambda: float | None = None
    activity_lambda: float | None = None
    m_rule: str = "none"  # "none" | "log"
    c: float | None = None
    feature: FeatureMap = field(default_factory=FeatureMap)
    recovery_orders: tuple = (1, 2, 3)
    trials: int = 50
    seed: int = 0
    signal: tuple | None = None
    pi_samples: int = 2000

    def __post_init__(self) -> None:
        if self.model not in ("1d", "2d"):
            raise ConfigError(f"model must be '1d' or '2d', got {self.model!r}")
        if self.model == "1d" and self.gap_lambda is None:
            raise ConfigError("1d experiments need gap_lambda")
        if self.model == "2d" and self.activity_lambda is None:
            raise ConfigError("2d experiments need activity_lambda")
        if self.m_rule not in ("none", "log"):
            raise ConfigError(f"m_rule must be 'none' or 'log', got {self.m_rule!r}")
        if not self.M_list or any(int(m) < 1 for m in self.M_list):
            raise ConfigError("M_list must hold positive integers")
        if self.trials < 2:
            raise ConfigError("need at least 2 trials for standard errors")
        object.__setattr__(self, "M_list", tuple(int(m) for m in self.M_list))
        object.__setattr__(self, "recovery_orders", tuple(int(n) for n in self.recovery_orders))
        if self.signal is not None:
            object.__setattr__(self, "signal", tuple(float(v) for v in np.asarray(self.signal).ravel()))

    @classmethod
    def from_dict(cls, data: dict) -> "MseExperimentConfig":
        data = dict(data)
        feature = data.pop("feature", "moment(1)")
        if isinstance(feature, str):
            feature = _parse_feature(feature)
        elif isinstance(feature, dict):
            feature = FeatureMap(**feature)
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(feature=feature, **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _parse_feature(text: str) -> FeatureMap:
    text = text.strip()
    if text == "identity":
        return FeatureMap(kind="identity")
    if text.startswith("moment(") and text.endswith(")"):
        return FeatureMap(kind="moment", order=int(text[len("moment(") : -1]))
    raise ConfigError(f"cannot parse feature {text!r}")


@dataclass(frozen=True)
class MseRow:
    M: int
    m: int
    m_eff: int
    trials: int
    mse_mtd: float
    se_mtd: float
    mse_mra: float
    se_mra: float


@dataclass
class MseCurve:
    rows: list
    model: str
    feature: str
    sigma: float
    meta: dict


def _resolve_signal(cfg, master: SeedSpec):
    if cfg.signal is not None:
        arr = np.asarray(cfg.signal, dtype=np.float64)
        if cfg.model == "2d":
            return Signal2D(arr.reshape(cfg.L, cfg.L))
        return Signal1D(arr.reshape(cfg.L))
    gen = derive_stream(master, _SIGNAL_STREAM).generator()
    if cfg.model == "2d":
        return Signal2D(gen.standard_normal((cfg.L, cfg.L)))
    return Signal1D(gen.standard_normal(cfg.L))


def _resolve_pi(cfg, master: SeedSpec) -> dict:
    if cfg.model == "1d":
        return stationary_closed_form(cfg.L, cfg.gap_lambda).probabilities
    ref_m = max(cfg.M_list)
    graph = hardcore2d.conflict_graph(cfg.L, ref_m)
    configs = hardcore2d.sample_glauber(
        graph, cfg.activity_lambda, cfg.pi_samples, derive_stream(master, _PI_STREAM).generator()
    )
    margin = min(2, (ref_m - 1) // 2)
    return hardcore2d.empirical_pi_2d(configs, cfg.L, ref_m, interior_margin=margin).probabilities()


def _mtd_patches(cfg, M: int, trial_seed: SeedSpec, signal) -> PatchSet:
    noise = NoiseSpec(cfg.sigma)
    if cfg.model == "1d":
        placements = sample_placements_1d(cfg.L, M, cfg.gap_lambda, derive_stream(trial_seed, 0).generator())
        z = synthesize_1d(signal, placements, noise, derive_stream(trial_seed, 1).generator())
        return extract_patches_1d(z)
    placements = sample_placements_2d(cfg.L, M, cfg.activity_lambda, derive_stream(trial_seed, 0).generator())
    z = synthesize_2d(signal, placements, noise, derive_stream(trial_seed, 1).generator())
    return extract_patches_2d(z)


def _estimate(cfg, patches: PatchSet, pi: dict, signal) -> np.ndarray:
    if cfg.feature.kind == "moment":
        return empirical_moment(patches, cfg.feature.order).entries
    moments = [empirical_moment(patches, n) for n in cfg.recovery_orders]
    init = np.zeros(patches.L**2 if patches.two_d else patches.L)
    result = recover_signal(moments, pi, cfg.sigma, patches.L, init, two_d=patches.two_d)
    return result.estimate


def mse_experiment(config, threads: int = 1) -> MseCurve:
    """Mean squared estimation error versus sample count, two generators.

    For each M the measurement pipeline and an iid sampler of the induced
    model are run side by side with matched effective sample counts: with
    the log subsampling rule the measurement patches are thinned to stride
    m and the iid series uses the thinned count.  Errors are squared
    Frobenius distances to the exact population target (or to the signal
    for the identity feature).
    """
    cfg = config if isinstance(config, MseExperimentConfig) else MseExperimentConfig.from_dict(config)
    master = SeedSpec(cfg.seed)
    signal = _resolve_signal(cfg, master)
    pi = _resolve_pi(cfg, master)
    spec = InducedModelSpec(signal=signal, pi=pi, noise=NoiseSpec(cfg.sigma))
    if cfg.feature.kind == "moment":
        target = noisy_population_moment(spec, cfg.feature.order).entries.ravel()
    else:
        target = signal.values.ravel()

    two_d = cfg.model == "2d"
    lam = cfg.activity_lambda if two_d else cfg.gap_lambda
    trial_root = derive_stream(master, _TRIAL_STREAM)

    def stride_for(M: int) -> int:
        if cfg.m_rule == "none":
            return 1
        return subsample_stride(cfg.L, lam, M, cfg.c, two_d=two_d)

    def run_trial(mi: int, M: int, m: int, m_eff: int, trial: int) -> tuple[float, float]:
        tseed = derive_stream(derive_stream(trial_root, mi), trial)
        patches = _mtd_patches(cfg, M, tseed, signal)
        if m > 1:
            patches = subsample(patches, m)
        est = _estimate(cfg, patches, pi, signal)
        err_mtd = float(np.sum((est.ravel() - target) ** 2))
        iid = sample_iid(spec, m_eff, derive_stream(tseed, 2).generator())
        est2 = _estimate(cfg, iid, pi, signal)
        err_mra = float(np.sum((est2.ravel() - target) ** 2))
        return err_mtd, err_mra

    rows = []
    for mi, M in enumerate(cfg.M_list):
        m = stride_for(M)
        n_patches = M * M if two_d else M
        m_eff = (M // m) ** 2 if two_d else M // m
        if m_eff < 1:
            raise SubsampleEmpty(f"stride {m} leaves no patches at M={M}")
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(lambda t: run_trial(mi, M, m, m_eff, t), range(cfg.trials)))
        else:
            results = [run_trial(mi, M, m, m_eff, t) for t in range(cfg.trials)]
        errs = np.array(results)  # (trials, 2) in trial order
        mse = errs.mean(axis=0)
        se = errs.std(axis=0, ddof=1) / math.sqrt(cfg.trials)
        rows.append(
            MseRow(
                M=M,
                m=m,
                m_eff=m_eff,
                trials=cfg.trials,
                mse_mtd=float(mse[0]),
                se_mtd=float(se[0]),
                mse_mra=float(mse[1]),
                se_mra=float(se[1]),
            )
        )
    meta = {
        "signal": [float(v) for v in signal.values.ravel()],
        "seed": cfg.seed,
        "lambda": lam,
        "m_rule": cfg.m_rule,
        "c": cfg.c,
        "L": cfg.L,
    }
    return MseCurve(rows=rows, model=cfg.model, feature=cfg.feature.describe(), sigma=cfg.sigma, meta=meta)


def fit_rate(curve: MseCurve) -> dict:
    """Log-log slope of each mse series against M; needs 4 positive rows."""
    if len(curve.rows) < 4:
        raise DegenerateFit(f"need at least 4 rows to fit a rate, got {len(curve.rows)}")
    M = [r.M for r in curve.rows]
    out = {}
    for series in ("mtd", "mra"):
        y = [getattr(r, f"mse_{series}") for r in curve.rows]
        if any(v <= 0 for v in y):
            raise DegenerateFit(f"series {series} has nonpositive mse values")
        out[series] = loglog_fit(M, y)
    return out


# --- noise scaling ---------------------------------------------------------------


@dataclass(frozen=True)
class SigmaScalingConfig:
    L: int
    gap_lambda: float
    orders: tuple = (1, 2, 3)
    sigma_list: tuple = (1.0, 2.0, 4.0, 8.0, 16.0)
    M: int = 4096
    trials: int = 100
    seed: int = 0
    source: str = "mtd"  # "mtd" | "mra"
    signal: tuple | None = None

    def __post_init__(self) -> None:
        if self.source not in ("mtd", "mra"):
            raise ConfigError(f"source must be 'mtd' or 'mra', got {self.source!r}")
        if any(s <= 0 for s in self.sigma_list):
            raise ConfigError("sigma_list must be positive for log fitting")
        object.__setattr__(self, "orders", tuple(int(n) for n in self.orders))
        object.__setattr__(self, "sigma_list", tuple(float(s) for s in self.sigma_list))
        if self.signal is not None:
            object.__setattr__(self, "signal", tuple(float(v) for v in np.asarray(self.signal).ravel()))

    @classmethod
    def from_dict(cls, data: dict) -> "SigmaScalingConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class SigmaRow:
    order: int
    sigma: float
    mse: float
    se: float


@dataclass
class SigmaScalingResult:
    rows: list
    fits: dict
    meta: dict


def sigma_scaling_experiment(config, threads: int = 1) -> SigmaScalingResult:
    """Fixed-M mse of order-n moments as the noise level grows.

    One patch set per (sigma, trial) serves every requested order.  The
    returned fits map order -> log-log slope of mse against sigma.
    """
    cfg = config if isinstance(config, SigmaScalingConfig) else SigmaScalingConfig.from_dict(config)
    master = SeedSpec(cfg.seed)
    if cfg.signal is not None:
        signal = Signal1D(np.asarray(cfg.signal, dtype=np.float64))
    else:
        signal = Signal1D(derive_stream(master, _SIGNAL_STREAM).generator().standard_normal(cfg.L))
    pi = stationary_closed_form(cfg.L, cfg.gap_lambda).probabilities
    trial_root = derive_stream(master, _TRIAL_STREAM)

    def run_trial(si: int, sigma: float, trial: int) -> list:
        tseed = derive_stream(derive_stream(trial_root, si), trial)
        noise_spec = InducedModelSpec(signal=signal, pi=pi, noise=NoiseSpec(sigma))
        if cfg.source == "mtd":
            placements = sample_placements_1d(cfg.L, cfg.M, cfg.gap_lambda, derive_stream(tseed, 0).generator())
            z = synthesize_1d(signal, placements, NoiseSpec(sigma), derive_stream(tseed, 1).generator())
            patches = extract_patches_1d(z)
        else:
            patches = sample_iid(noise_spec, cfg.M, derive_stream(tseed, 0).generator())
        errs = []
        for n in cfg.orders:
            target = noisy_population_moment(noise_spec, n).entries.ravel()
            est = empirical_moment(patches, n).entries.ravel()
            errs.append(float(np.sum((est - target) ** 2)))
        return errs

    rows = []
    for si, sigma in enumerate(cfg.sigma_list):
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(lambda t: run_trial(si, sigma, t), range(cfg.trials)))
        else:
            results = [run_trial(si, sigma, t) for t in range(cfg.trials)]
        errs = np.array(results)  # (trials, n_orders)
        mse = errs.mean(axis=0)
        se = errs.std(axis=0, ddof=1) / math.sqrt(cfg.trials)
        for oi, n in enumerate(cfg.orders):
            rows.append(SigmaRow(order=n, sigma=sigma, mse=float(mse[oi]), se=float(se[oi])))
    fits = {}
    for n in cfg.orders:
        pts = [(r.sigma, r.mse) for r in rows if r.order == n]
        fits[n] = loglog_fit([p[0] for p in pts], [p[1] for p in pts])
    meta = {
        "signal": [float(v) for v in signal.values],
        "seed": cfg.seed,
        "L": cfg.L,
        "lambda": cfg.gap_lambda,
        "M": cfg.M,
        "source": cfg.source,
        "trials": cfg.trials,
    }
    return SigmaScalingResult(rows=rows, fits=fits, meta=meta)


# --- signal recovery --------------------------------------------------------------


@dataclass(frozen=True)
class GaussNewtonOptions:
    max_iter: int = 200
    grad_tol: float = 1e-10
    fd_step: float = 1e-6
    max_halvings: int = 40
    strict: bool = False


@dataclass
class RecoveryResult:
    estimate: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    jacobian_rank: int


def _as_pi_dict(pi) -> dict:
    if isinstance(pi, dict):
        return pi
    probs = getattr(pi, "probabilities", None)
    if callable(probs):
        return probs()
    if isinstance(probs, dict):
        return probs
    raise ConfigError(f"cannot interpret {type(pi).__name__} as a group distribution")


def moment_residual(x: np.ndarray, observed, pi, sigma: float, L: int, two_d: bool = False) -> np.ndarray:
    """Weighted stacked difference between model and observed moments.

    Each order-n block is scaled by 1/sqrt(dim**n) so no order dominates
    by entry count alone.
    """
    x = np.asarray(x, dtype=np.float64)
    signal = Signal2D(x.reshape(L, L)) if two_d else Signal1D(x.reshape(L))
    spec = InducedModelSpec(signal=signal, pi=_as_pi_dict(pi), noise=NoiseSpec(sigma))
    parts = []
    for tensor in observed:
        pred = noisy_population_moment(spec, tensor.order)
        if pred.dims != tensor.dims:
            raise ShapeError(f"observed order-{tensor.order} tensor has dims {tensor.dims}, model has {pred.dims}")
        w = 1.0 / math.sqrt(float(tensor.dims**tensor.order))
        parts.append(w * (pred.entries - tensor.entries).ravel())
    return np.concatenate(parts)


def recover_signal(
    moments,
    pi,
    sigma: float,
    L: int,
    init,
    options: GaussNewtonOptions | None = None,
    two_d: bool = False,
) -> RecoveryResult:
    """Damped Gauss-Newton inversion of the moment map.

    Finite-difference Jacobian with per-coordinate step fd_step * (1+|x_i|),
    least-squares step, and backtracking halving on the squared residual.
    Stops when the gradient norm falls below ``grad_tol``; hitting the
    iteration cap returns converged=False (or raises under strict).
    """
    opts = options or GaussNewtonOptions()
    moments = list(moments)
    if not moments:
        raise EmptyInput("no observed moments given")
    x = np.asarray(init, dtype=np.float64).ravel().copy()
    n_params = L * L if two_d else L
    if x.size != n_params:
        raise ShapeError(f"init has {x.size} entries, expected {n_params}")
    pi_dict = _as_pi_dict(pi)

    def resid(v: np.ndarray) -> np.ndarray:
        return moment_residual(v, moments, pi_dict, sigma, L, two_d)

    r = resid(x)
    cost = float(r @ r)
    rank = n_params
    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        jac = np.empty((r.size, n_params))
        for i in range(n_params):
            step = opts.fd_step * (1.0 + abs(x[i]))
            xs = x.copy()
            xs[i] += step
            jac[:, i] = (resid(xs) - r) / step
        grad = jac.T @ r
        if np.max(np.abs(grad)) <= opts.grad_tol:
            return RecoveryResult(x, math.sqrt(cost), iterations - 1, True, rank)
        direction, _, rank, _ = np.linalg.lstsq(jac, -r, rcond=None)
        improved = False
        scale = 1.0
        for _ in range(opts.max_halvings):
            cand = x + scale * direction
            rc = resid(cand)
            cc = float(rc @ rc)
            if cc < cost:
                x, r, cost = cand, rc, cc
                improved = True
                break
            scale *= 0.5
        if not improved:
            if rank < n_params:
                raise IllConditioned(
                    f"jacobian rank {rank} below parameter count {n_params}; no descent step found"
                )
            if opts.strict:
                raise NonConvergence(f"line search stalled at iteration {iterations}")
            return RecoveryResult(x, math.sqrt(cost), iterations, False, rank)
    if opts.strict:
        raise NonConvergence(f"no convergence within {opts.max_iter} iterations")
    return RecoveryResult(x, math.sqrt(cost), opts.max_iter, False, rank)


def forward_operator_basis(g, L: int, two_d: bool = False) -> np.ndarray:
    """Matrix of the linear map signal -> clean patch for one group element."""
    if two_d:
        dim = L * L
        cols = []
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = 1.0
            cols.append(forward_clean_2d(g, pad_2d(Signal2D(e.reshape(L, L)))).ravel())
        return np.array(cols).T
    cols = []
    for i in range(L):
        e = np.zeros(L)
        e[i] = 1.0
        cols.append(forward_clean_1d(g, pad_1d(Signal1D(e))))
    return np.array(cols).T


def grid_residual_argmin(
    signal: Signal1D, pi, sigma: float, orders, lo: float, hi: float, step: float
) -> tuple[np.ndarray, float]:
    """Brute-force the weighted moment residual over a cartesian grid.

    Supports L = 2 (the grid is two-dimensional).  Returns the minimizing
    grid point and its squared residual; used as an identifiability oracle
    against the iterative recovery.
    """
    if signal.L != 2:
        raise ConfigError(f"grid search is implemented for L=2 only, got L={signal.L}")
    pi_dict = _as_pi_dict(pi)
    elements = sorted(pi_dict.keys())
    probs = np.array([pi_dict[g] for g in elements])
    ops = np.array([forward_operator_basis(g, 2) for g in elements])  # (K, 2, 2)
    axis = np.arange(lo, hi + step / 2, step)
    grid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    v = np.einsum("kde,ne->nkd", ops, grid)  # clean patch per grid point and element

    spec = InducedModelSpec(signal=signal, pi=pi_dict, noise=NoiseSpec(sigma))
    total = np.zeros(grid.shape[0])
    for n in orders:
        target = noisy_population_moment(spec, n).entries
        w = 1.0 / float(2**n)
        if n == 1:
            pred = np.einsum("k,nkd->nd", probs, v)
        elif n == 2:
            pred = np.einsum("k,nkd,nke->nde", probs, v, v)
            if sigma > 0:
                pred = pred + sigma**2 * np.eye(2)
        elif n == 3:
            pred = np.einsum("k,nkd,nke,nkf->ndef", probs, v, v, v)
            if sigma > 0:
                m1 = np.einsum("k,nkd->nd", probs, v)
                eye = np.eye(2)
                pred = pred + sigma**2 * (
                    np.einsum("nd,ef->ndef", m1, eye)
                    + np.einsum("ne,df->ndef", m1, eye)
                    + np.einsum("nf,de->ndef", m1, eye)
                )
        else:
            raise UnsupportedOrder(f"grid oracle supports orders 1..3, got {n}")
        diff = pred.reshape(grid.shape[0], -1) - target.ravel()
        total += w * np.sum(diff * diff, axis=1)
    best = int(np.argmin(total))
    return grid[best], float(total[best])


# --- serial dependence ---------------------------------------------------------


@dataclass(frozen=True)
class CovRow:
    lag: int
    cov_norm: float
    se_norm: float
    max_abs_z: float


def covariance_decay(patches: PatchSet, feature: FeatureMap, lags, n_blocks: int = 20) -> list[CovRow]:
    """Cross-covariance of patch features at each lag, with block noise bands.

    1d patch sequences only.  For each lag the series is split into
    ``n_blocks`` contiguous blocks; each block yields one cross-covariance
    matrix, and the row reports the Frobenius norm of the block mean, the
    block-spread of that norm, and the largest entrywise |mean|/se ratio.
    """
    if patches.two_d:
        raise ShapeError("covariance decay is defined for 1d patch sequences")
    if feature.kind == "identity":
        rows = patches.as_vectors()
    else:
        rows = _power_rows(patches.as_vectors(), feature.order)
    lags = sorted(set(int(d) for d in lags))
    if not lags or lags[0] < 0:
        raise ConfigError("lags must be nonnegative integers")
    n = rows.shape[0]
    if n < n_blocks * (max(lags) + 2):
        raise EmptyInput(f"{n} patches is too few for lags up to {max(lags)} with {n_blocks} blocks")
    out = []
    for d in lags:
        a = rows[: n - d]
        b = rows[d:]
        bounds = np.linspace(0, a.shape[0], n_blocks + 1).astype(int)
        covs = []
        for i in range(n_blocks):
            sa = a[bounds[i] : bounds[i + 1]]
            sb = b[bounds[i] : bounds[i + 1]]
            ma, mb = sa.mean(axis=0), sb.mean(axis=0)
            covs.append(sa.T @ sb / sa.shape[0] - np.outer(ma, mb))
        covs = np.array(covs)
        mean = covs.mean(axis=0)
        se = covs.std(axis=0, ddof=1) / math.sqrt(n_blocks)
        norms = np.linalg.norm(covs.reshape(n_blocks, -1), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, np.abs(mean) / se, np.where(np.abs(mean) > 0, np.inf, 0.0))
        out.append(
            CovRow(
                lag=d,
                cov_norm=float(np.linalg.norm(mean)),
                se_norm=float(norms.std(ddof=1) / math.sqrt(n_blocks)),
                max_abs_z=float(z.max()),
            )
        )
    return out


__all__ = [
    "FeatureMap",
    "empirical_moment",
    "empirical_moment_stats",
    "subsample",
    "subsample_stride",
    "DEFAULT_SUBSAMPLE_FACTOR",
    "FitResult",
    "linear_fit",
    "loglog_fit",
    "MseExperimentConfig",
    "MseRow",
    "MseCurve",
    "mse_experiment",
    "fit_rate",
    "SigmaScalingConfig",
    "SigmaRow",
    "SigmaScalingResult",
    "sigma_scaling_experiment",
    "GaussNewtonOptions",
    "RecoveryResult",
    "moment_residual",
    "recover_signal",
    "forward_operator_basis",
    "grid_residual_argmin",
    "CovRow",
    "covariance_decay",
]
