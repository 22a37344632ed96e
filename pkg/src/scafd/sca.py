"""Second-order component analysis model and T2/KDE fault monitoring.

Offline: z-score the training block, expand each sample to second order,
train the orthogonality-constrained autoencoder by manifold conjugate
gradient, then fit the monitoring statistics — inverse feature covariance,
per-sample T2 values, a Gaussian-KDE density of those values, and the
control limit covering probability 1 - zeta.

Online: scale/expand/encode a new sample, compute its T2, and alarm when it
exceeds the control limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import DEFAULT_ACTIVATIONS, ActivationPair
from .data import DataMatrix, Scaler, apply_scaler, expand_second_order, fit_scaler
from .manifold import StiefelPoint
from .optimizer import CgConfig, CgTrace, cg_optimize, init_product_point

DEFAULT_ZETA = 0.01
_RIDGE_SCALE = 1e-8
_CDF_GRID_POINTS = 4096
_BISECT_ITERS = 100
_KDE_CHUNK = 1 << 22  # cap on query*sample products evaluated at once


@dataclass
class DetectionReport:
    """Per-sample monitoring outcome plus summary rates (percent)."""

    t2: np.ndarray
    flags: np.ndarray
    mdr: float | None = None
    far: float | None = None

    def __post_init__(self) -> None:
        self.t2 = np.asarray(self.t2, dtype=float)
        self.flags = np.asarray(self.flags, dtype=bool)
        if self.t2.shape != self.flags.shape:
            raise ValueError("t2 and flags must have equal length")
        for name, rate in (("mdr", self.mdr), ("far", self.far)):
            if rate is not None and not 0.0 <= rate <= 100.0:
                raise ValueError(f"{name} must be a percentage in [0, 100]")


@dataclass
class MonitoringStats:
    """T2 machinery fitted on training features."""

    sigma_g_inv: np.ndarray
    g_mean: np.ndarray
    t2_train: np.ndarray
    kde_bandwidth: float
    control_limit: float
    zeta: float


@dataclass
class ScaModel:
    """Everything needed to score new samples: weights, scaler, T2 limit."""

    scaler: Scaler
    w: np.ndarray
    w_tilde: StiefelPoint
    sigma_g_inv: np.ndarray
    g_mean: np.ndarray
    t2_train: np.ndarray
    kde_bandwidth: float
    control_limit: float
    zeta: float = DEFAULT_ZETA
    encoder_activation: str = "tanh"
    decoder_activation: str = "identity"

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=float)
        self.sigma_g_inv = np.asarray(self.sigma_g_inv, dtype=float)
        self.g_mean = np.asarray(self.g_mean, dtype=float).ravel()
        self.t2_train = np.asarray(self.t2_train, dtype=float).ravel()
        if self.w.shape != self.w_tilde.shape:
            raise ValueError("encoder and decoder shapes differ")
        if self.g_mean.shape[0] != self.w.shape[1]:
            raise ValueError("feature mean length must equal p")
        asym = np.linalg.norm(self.sigma_g_inv - self.sigma_g_inv.T)
        if asym > 1e-10:
            raise ValueError(f"sigma_g_inv must be symmetric, asymmetry {asym:.3e}")
        if not self.control_limit > 0:
            raise ValueError("control limit must be positive")
        if not self.kde_bandwidth > 0:
            raise ValueError("KDE bandwidth must be positive")

    @property
    def n_variables(self) -> int:
        return self.scaler.n_variables

    @property
    def n_components(self) -> int:
        return self.w.shape[1]

    def activations(self) -> ActivationPair:
        return ActivationPair.from_names(
            self.encoder_activation, self.decoder_activation
        )

    def encode_batch(self, X: DataMatrix) -> np.ndarray:
        """Features (p x m) of raw process samples: enc(W^T expand(scale(X)))."""
        if X.n_variables != self.n_variables:
            raise ValueError(
                f"model expects {self.n_variables} variables, data has "
                f"{X.n_variables}"
            )
        expanded = expand_second_order(apply_scaler(self.scaler, X))
        enc = self.activations().encoder
        return enc.fn(self.w.T @ expanded.values)


def t2(model_or_sigma_inv, g: np.ndarray) -> float:
    """Quadratic form g^T Sigma_g^{-1} g of a single feature (deviation) vector.

    The monitoring pipeline passes deviations from the training feature mean;
    this function itself applies no shift.
    """
    sigma_inv = getattr(model_or_sigma_inv, "sigma_g_inv", model_or_sigma_inv)
    g = np.asarray(g, dtype=float).ravel()
    if g.shape[0] != sigma_inv.shape[0]:
        raise ValueError(
            f"feature length {g.shape[0]} does not match covariance "
            f"dimension {sigma_inv.shape[0]}"
        )
    return float(g @ sigma_inv @ g)


def t2_batch(G: np.ndarray, sigma_inv: np.ndarray) -> np.ndarray:
    """T2 of every column of a p x m feature matrix."""
    G = np.asarray(G, dtype=float)
    return np.einsum("pm,pq,qm->m", G, sigma_inv, G)


def kde_pdf(
    t2_samples: np.ndarray, h: float, query: float | np.ndarray
) -> float | np.ndarray:
    """Gaussian kernel density of the T2 sample at the query point(s)."""
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    samples = np.asarray(t2_samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("need at least one sample")
    q = np.atleast_1d(np.asarray(query, dtype=float))
    scale = 1.0 / (np.sqrt(2.0 * np.pi) * h * samples.size)
    out = np.empty_like(q)
    step = max(1, _KDE_CHUNK // samples.size)
    for lo in range(0, q.size, step):
        block = q[lo : lo + step, None] - samples[None, :]
        out[lo : lo + step] = scale * np.exp(-(block * block) / (2.0 * h * h)).sum(axis=1)
    return float(out[0]) if np.isscalar(query) or np.ndim(query) == 0 else out


def silverman_bandwidth(t2_samples: np.ndarray) -> float:
    """Rule-of-thumb bandwidth 1.06 * sigma * N^(-1/5) with a degenerate floor."""
    samples = np.asarray(t2_samples, dtype=float).ravel()
    if samples.size < 2:
        raise ValueError("need at least 2 samples for a bandwidth")
    sigma = float(samples.std(ddof=1))
    if sigma > 0:
        return 1.06 * sigma * samples.size ** (-0.2)
    return 1e-6 * max(1.0, float(abs(samples.mean())))


def control_limit(
    t2_samples: np.ndarray,
    zeta: float,
    h: float | None = None,
    lower_tail: bool = False,
) -> float:
    """T2 threshold whose KDE-estimated coverage on [0, max+5h] is 1 - zeta.

    The KDE density is integrated by cumulative trapezoid on a 4096-point
    grid, normalized by the total grid mass (Gaussian kernels leak some mass
    below zero, so the raw half-line integral falls short of one), and the
    crossing is refined by bisection inside the bracketing grid cell.  With
    ``lower_tail=True`` the threshold is instead the zeta-quantile — the
    literal lower-tail reading of the significance level.
    """
    samples = np.asarray(t2_samples, dtype=float).ravel()
    if not 0.0 < zeta <= 0.5:
        raise ValueError(f"zeta must lie in (0, 0.5], got {zeta}")
    if samples.size < 10:
        raise ValueError(f"need at least 10 samples, got {samples.size}")
    if h is None:
        h = silverman_bandwidth(samples)
    if not h > 0:
        raise ValueError("bandwidth must be positive")

    grid = np.linspace(0.0, float(samples.max()) + 5.0 * h, _CDF_GRID_POINTS)
    dens = np.asarray(kde_pdf(samples, h, grid))
    widths = np.diff(grid)
    cdf = np.concatenate(
        [[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * widths)]
    )
    total = cdf[-1]
    if not total > 0:
        raise ValueError("estimated density carries no mass on the grid")
    coverage = zeta if lower_tail else 1.0 - zeta
    target = coverage * total

    idx = int(np.searchsorted(cdf, target))
    if idx >= cdf.size:
        return float(grid[-1])
    if idx == 0:
        return float(grid[0])
    lo, hi = float(grid[idx - 1]), float(grid[idx])
    base, d_lo = cdf[idx - 1], dens[idx - 1]

    def partial_mass(t: float) -> float:
        return base + 0.5 * (d_lo + float(kde_pdf(samples, h, t))) * (t - lo)

    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if partial_mass(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fit_monitoring_stats(G: np.ndarray, zeta: float = DEFAULT_ZETA) -> MonitoringStats:
    """Fit the T2 machinery on a p x m block of training features.

    The feature covariance (sample covariance, m-1 divisor) gets a ridge of
    1e-8 * trace / p before inversion.  T2 is the Mahalanobis-style quadratic
    form of the deviation from the training feature mean; without the
    centering, a saturated near-constant feature coordinate turns its
    (ridge-floored) inverse variance into a huge constant that drowns the
    informative coordinates.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2:
        raise ValueError("features must be a p x m matrix")
    p, m = G.shape
    if m < 2:
        raise ValueError("need at least 2 feature samples")
    g_mean = G.mean(axis=1)
    sigma = np.atleast_2d(np.cov(G, ddof=1))
    ridge = _RIDGE_SCALE * float(np.trace(sigma)) / p
    sigma = sigma + ridge * np.eye(p)
    try:
        sigma_inv = np.linalg.inv(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"feature covariance is singular beyond ridge repair: {exc}")
    if not np.all(np.isfinite(sigma_inv)):
        raise ValueError("feature covariance inverse is non-finite")
    sigma_inv = 0.5 * (sigma_inv + sigma_inv.T)
    t2_train = t2_batch(G - g_mean[:, None], sigma_inv)
    h = silverman_bandwidth(t2_train)
    tau = control_limit(t2_train, zeta, h=h)
    return MonitoringStats(
        sigma_g_inv=sigma_inv,
        g_mean=g_mean,
        t2_train=t2_train,
        kde_bandwidth=h,
        control_limit=tau,
        zeta=zeta,
    )


def train(
    X_train: DataMatrix,
    p: int,
    cfg: CgConfig | None = None,
    zeta: float = DEFAULT_ZETA,
    activations: ActivationPair = DEFAULT_ACTIVATIONS,
) -> tuple[ScaModel, CgTrace]:
    """Fit a second-order component analysis monitor on normal training data."""
    if cfg is None:
        cfg = CgConfig()
    if p < 1:
        raise ValueError("p must be at least 1")
    if X_train.n_samples < p + 2:
        raise ValueError(
            f"need at least p+2 = {p + 2} samples, got {X_train.n_samples}"
        )
    scaler = fit_scaler(X_train)
    expanded = expand_second_order(apply_scaler(scaler, X_train))
    N = expanded.values.shape[0]
    if p > N:
        raise ValueError(f"p={p} exceeds expanded dimension {N}")

    rng = np.random.default_rng(cfg.seed)
    # A start can still collapse every feature onto a tanh plateau, leaving a
    # singular feature covariance.  Retry from the next draw of the same
    # stream instead of failing outright; give up after cfg.restarts tries.
    last_err: ValueError | None = None
    for attempt in range(cfg.restarts):
        point, trace = cg_optimize(
            init_product_point(N, p, rng), expanded.values, cfg, activations
        )
        codes = activations.encoder.fn(point.w.T @ expanded.values)
        try:
            stats = fit_monitoring_stats(codes, zeta)
            break
        except ValueError as err:
            last_err = err
    else:
        raise ValueError(
            f"all {cfg.restarts} starts produced degenerate features"
        ) from last_err
    model = ScaModel(
        scaler=scaler,
        w=point.w,
        w_tilde=point.w_tilde,
        sigma_g_inv=stats.sigma_g_inv,
        g_mean=stats.g_mean,
        t2_train=stats.t2_train,
        kde_bandwidth=stats.kde_bandwidth,
        control_limit=stats.control_limit,
        zeta=zeta,
        encoder_activation=activations.encoder.name,
        decoder_activation=activations.decoder.name,
    )
    return model, trace


def encode(model: ScaModel, x: np.ndarray) -> np.ndarray:
    """Feature vector of a single raw sample (length-n input, length-p output)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != model.n_variables:
        raise ValueError(
            f"model expects {model.n_variables} variables, sample has {x.shape[0]}"
        )
    return model.encode_batch(DataMatrix(x[:, None]))[:, 0]


def monitor(model, X_new: DataMatrix) -> DetectionReport:
    """Score a data block with any fitted monitor exposing encode_batch/limits."""
    G = model.encode_batch(X_new)
    values = t2_batch(G - model.g_mean[:, None], model.sigma_g_inv)
    return DetectionReport(t2=values, flags=values > model.control_limit)


def detect(model: ScaModel, X_new: DataMatrix) -> DetectionReport:
    """Per-sample T2 and alarm flags for new process data (rates left unset)."""
    return monitor(model, X_new)


def score(flags: np.ndarray, normal_count: int) -> tuple[float, float]:
    """(missed detection rate, false alarm rate) in percent.

    The first ``normal_count`` samples are ground-truth normal, the rest are
    faulty: FAR is the alarm share among the normal head, MDR the silent
    share among the faulty tail.
    """
    flags = np.asarray(flags, dtype=bool).ravel()
    if normal_count > flags.size:
        raise ValueError(
            f"normal_count {normal_count} exceeds sample count {flags.size}"
        )
    if normal_count <= 0:
        raise ValueError("normal_count must be positive")
    if normal_count == flags.size:
        raise ValueError("no faulty segment: normal_count equals sample count")
    normal, faulty = flags[:normal_count], flags[normal_count:]
    far = 100.0 * float(normal.sum()) / normal.size
    mdr = 100.0 * float((~faulty).sum()) / faulty.size
    return mdr, far
