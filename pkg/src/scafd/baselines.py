"""PCA, kernel PCA, and plain/second-order autoencoder monitors.

All four share the T2/KDE machinery from :mod:`scafd.sca`; each model type
only supplies its own feature map.  The autoencoder deliberately has no
orthogonality constraint and trains by full-batch gradient descent, so the
constraint stays the experimental variable when comparing against the
manifold-trained model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activations import DEFAULT_ACTIVATIONS, ActivationPair
from .data import DataMatrix, Scaler, apply_scaler, expand_second_order, fit_scaler
from .sca import DEFAULT_ZETA, DetectionReport, fit_monitoring_stats, monitor

_EIG_RANK_TOL = 1e-10
_LR_FLOOR = 1e-16
_FLAT_WINDOW = 10


@dataclass
class PcaModel:
    """Linear monitor: top-p eigenvectors of the scaled sample covariance."""

    scaler: Scaler
    loading: np.ndarray
    eigenvalues: np.ndarray
    sigma_g_inv: np.ndarray
    g_mean: np.ndarray
    t2_train: np.ndarray
    kde_bandwidth: float
    control_limit: float
    zeta: float = DEFAULT_ZETA

    def __post_init__(self) -> None:
        self.loading = np.asarray(self.loading, dtype=float)
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float).ravel()
        p = self.loading.shape[1]
        err = np.linalg.norm(self.loading.T @ self.loading - np.eye(p))
        if err > 1e-10:
            raise ValueError(f"loading columns not orthonormal: {err:.3e}")
        top = self.eigenvalues[:p]
        if np.any(np.diff(top) > 1e-12):
            raise ValueError("retained eigenvalues must be descending")

    @property
    def n_components(self) -> int:
        return self.loading.shape[1]

    def encode_batch(self, X: DataMatrix) -> np.ndarray:
        scaled = apply_scaler(self.scaler, X)
        return self.loading.T @ scaled.values


@dataclass
class KpcaModel:
    """Gaussian-kernel PCA monitor with a double-centered Gram matrix."""

    scaler: Scaler
    train_scaled: np.ndarray       # n x m scaled training samples
    alphas: np.ndarray             # m x p projection coefficients (whitened)
    eigenvalues: np.ndarray        # top-p Gram eigenvalues, descending
    kernel_width: float
    gram_col_means: np.ndarray     # column means of the uncentered Gram
    gram_mean: float
    sigma_g_inv: np.ndarray
    g_mean: np.ndarray
    t2_train: np.ndarray
    kde_bandwidth: float
    control_limit: float
    zeta: float = DEFAULT_ZETA

    def __post_init__(self) -> None:
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float).ravel()
        if np.any(self.eigenvalues <= 0):
            raise ValueError("retained Gram eigenvalues must be positive")
        if np.any(np.diff(self.eigenvalues) > 1e-12):
            raise ValueError("retained Gram eigenvalues must be descending")

    @property
    def n_components(self) -> int:
        return self.alphas.shape[1]

    def encode_batch(self, X: DataMatrix) -> np.ndarray:
        scaled = apply_scaler(self.scaler, X).values
        # Kernel rows against the training block, then double centering.
        sq = (
            np.sum(scaled**2, axis=0)[:, None]
            + np.sum(self.train_scaled**2, axis=0)[None, :]
            - 2.0 * scaled.T @ self.train_scaled
        )
        k = np.exp(-np.maximum(sq, 0.0) / self.kernel_width)
        k_centered = (
            k
            - k.mean(axis=1, keepdims=True)
            - self.gram_col_means[None, :]
            + self.gram_mean
        )
        return (k_centered @ self.alphas).T


@dataclass
class AeModel:
    """Unconstrained autoencoder monitor (optionally on expanded inputs)."""

    scaler: Scaler
    w_enc: np.ndarray
    b_enc: np.ndarray
    w_dec: np.ndarray
    b_dec: np.ndarray
    sigma_g_inv: np.ndarray
    g_mean: np.ndarray
    t2_train: np.ndarray
    kde_bandwidth: float
    control_limit: float
    zeta: float = DEFAULT_ZETA
    encoder_activation: str = "tanh"
    decoder_activation: str = "identity"
    expand_inputs: bool = False

    def __post_init__(self) -> None:
        for name in ("w_enc", "b_enc", "w_dec", "b_dec"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            setattr(self, name, arr)

    @property
    def n_components(self) -> int:
        return self.w_enc.shape[1]

    def activations(self) -> ActivationPair:
        return ActivationPair.from_names(
            self.encoder_activation, self.decoder_activation
        )

    def encode_batch(self, X: DataMatrix) -> np.ndarray:
        inputs = apply_scaler(self.scaler, X)
        mat = expand_second_order(inputs).values if self.expand_inputs else inputs.values
        enc = self.activations().encoder
        return enc.fn(self.w_enc.T @ mat + self.b_enc[:, None])


@dataclass
class AeTrace:
    """Cost/gradient-norm history of the autoencoder gradient descent."""

    cost_per_iter: list[float] = field(default_factory=list)
    grad_norm_per_iter: list[float] = field(default_factory=list)
    iterations: int = 0


def pca_fit(
    X: DataMatrix,
    n_components: int | None = None,
    energy: float | None = None,
    zeta: float = DEFAULT_ZETA,
) -> PcaModel:
    """Fit the PCA monitor; pick p explicitly or by cumulative eigenvalue energy."""
    if (n_components is None) == (energy is None):
        raise ValueError("specify exactly one of n_components or energy")
    if X.n_samples < 2:
        raise ValueError("need at least 2 samples")
    scaler = fit_scaler(X)
    scaled = apply_scaler(scaler, X).values
    cov = np.atleast_2d(np.cov(scaled, ddof=1))
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]

    if energy is not None:
        if not 0.0 < energy <= 1.0:
            raise ValueError("energy must lie in (0, 1]")
        fractions = np.cumsum(vals) / vals.sum()
        p = int(np.searchsorted(fractions, energy) + 1)
        p = min(p, vals.size)
    else:
        p = int(n_components)
    if p < 1 or p > vals.size:
        raise ValueError(f"p={p} out of range for {vals.size} variables")
    if vals[p - 1] <= _EIG_RANK_TOL * max(vals[0], 1e-300):
        raise ValueError(
            f"covariance is rank-deficient: eigenvalue {p} is "
            f"{vals[p - 1]:.3e} against leading {vals[0]:.3e}"
        )

    loading = vecs[:, :p]
    scores = loading.T @ scaled
    stats = fit_monitoring_stats(scores, zeta)
    return PcaModel(
        scaler=scaler,
        loading=loading,
        eigenvalues=vals,
        sigma_g_inv=stats.sigma_g_inv,
        g_mean=stats.g_mean,
        t2_train=stats.t2_train,
        kde_bandwidth=stats.kde_bandwidth,
        control_limit=stats.control_limit,
        zeta=zeta,
    )


def gaussian_gram(X: np.ndarray, width: float) -> np.ndarray:
    """Gram matrix exp(-||x_i - x_j||^2 / width) over the columns of X."""
    sq = np.sum(X**2, axis=0)
    dist = sq[:, None] + sq[None, :] - 2.0 * X.T @ X
    return np.exp(-np.maximum(dist, 0.0) / width)


def center_gram(K: np.ndarray) -> np.ndarray:
    """Double centering K - 1K - K1 + 1K1 with 1 = ones/m."""
    col = K.mean(axis=0, keepdims=True)
    row = K.mean(axis=1, keepdims=True)
    return K - row - col + K.mean()


def kpca_fit(
    X: DataMatrix, p: int, zeta: float = DEFAULT_ZETA
) -> KpcaModel:
    """Fit the Gaussian-kernel PCA monitor with width 10 * n * mean-std.

    The mean per-variable standard deviation is computed on the scaled data
    actually fed to the kernel, so it is 1 up to the sample-std convention.
    Features are whitened so the training feature covariance is the identity.
    """
    if X.n_samples < p + 1:
        raise ValueError(f"need at least p+1 = {p + 1} samples")
    scaler = fit_scaler(X)
    scaled = apply_scaler(scaler, X).values
    n, m = scaled.shape
    delta_bar = float(scaled.std(axis=1, ddof=1).mean())
    width = 10.0 * n * delta_bar

    K = gaussian_gram(scaled, width)
    Kc = center_gram(K)
    vals, vecs = np.linalg.eigh(0.5 * (Kc + Kc.T))
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    if p < 1 or p > m:
        raise ValueError(f"p={p} out of range for {m} samples")
    if vals[p - 1] <= _EIG_RANK_TOL * max(vals[0], 1e-300):
        raise ValueError(
            f"p={p} exceeds the numerically positive rank of the centered Gram"
        )
    top_vals, top_vecs = vals[:p], vecs[:, :p]
    # Whitened projection: training features are sqrt(m-1) * eigenvectors,
    # so their sample covariance is the identity.
    alphas = top_vecs * (np.sqrt(m - 1.0) / top_vals)[None, :]

    features = (Kc @ alphas).T
    stats = fit_monitoring_stats(features, zeta)
    return KpcaModel(
        scaler=scaler,
        train_scaled=scaled,
        alphas=alphas,
        eigenvalues=top_vals,
        kernel_width=width,
        gram_col_means=K.mean(axis=0),
        gram_mean=float(K.mean()),
        sigma_g_inv=stats.sigma_g_inv,
        g_mean=stats.g_mean,
        t2_train=stats.t2_train,
        kde_bandwidth=stats.kde_bandwidth,
        control_limit=stats.control_limit,
        zeta=zeta,
    )


def ae_cost_grad(
    params: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
    X: np.ndarray,
    activations: ActivationPair,
) -> tuple[float, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Reconstruction cost and analytic gradients for the biased autoencoder."""
    w_enc, b_enc, w_dec, b_dec = params
    enc, dec = activations.encoder, activations.decoder
    pre_codes = w_enc.T @ X + b_enc[:, None]
    codes = enc.fn(pre_codes)
    pre_recon = w_dec @ codes + b_dec[:, None]
    err = dec.fn(pre_recon) - X
    value = float(np.sum(err * err))
    D = 2.0 * err * dec.deriv(pre_recon)
    g_w_dec = D @ codes.T
    g_b_dec = D.sum(axis=1)
    dcodes = (w_dec.T @ D) * enc.deriv(pre_codes)
    g_w_enc = X @ dcodes.T
    g_b_enc = dcodes.sum(axis=1)
    return value, (g_w_enc, g_b_enc, g_w_dec, g_b_dec)


def _gradient_descent(
    X: np.ndarray,
    p: int,
    rng: np.random.Generator,
    activations: ActivationPair,
    max_iters: int,
    tol: float,
    lr: float,
) -> tuple[tuple[np.ndarray, ...], AeTrace]:
    n = X.shape[0]
    params = (
        rng.standard_normal((n, p)) / np.sqrt(n),
        np.zeros(p),
        rng.standard_normal((n, p)) / np.sqrt(n),
        np.zeros(n),
    )
    f, grads = ae_cost_grad(params, X, activations)
    if not np.isfinite(f):
        raise FloatingPointError("autoencoder cost diverged at initialization")
    gnorm = float(np.sqrt(sum(np.sum(g * g) for g in grads)))
    trace = AeTrace(cost_per_iter=[f], grad_norm_per_iter=[gnorm])
    for _ in range(max_iters):
        costs = trace.cost_per_iter
        if len(costs) > _FLAT_WINDOW:
            drop = costs[-1 - _FLAT_WINDOW] - costs[-1]
            if drop <= tol * max(1.0, abs(costs[-1 - _FLAT_WINDOW])):
                break
        stepped = False
        while lr >= _LR_FLOOR:
            candidate = tuple(p_ - lr * g_ for p_, g_ in zip(params, grads))
            try:
                f_new, grads_new = ae_cost_grad(candidate, X, activations)
            except FloatingPointError:
                f_new = np.inf
            if np.isfinite(f_new) and f_new <= f:
                params, f, grads = candidate, f_new, grads_new
                stepped = True
                break
            lr *= 0.5  # halve on cost increase, keep the reduced step
        if not stepped:
            break
        gnorm = float(np.sqrt(sum(np.sum(g * g) for g in grads)))
        trace.cost_per_iter.append(f)
        trace.grad_norm_per_iter.append(gnorm)
        trace.iterations += 1
    return params, trace


def ae_train(
    X: DataMatrix,
    p: int,
    max_iters: int = 2000,
    tol: float = 1e-9,
    lr: float = 1.0,
    seed: int = 0,
    zeta: float = DEFAULT_ZETA,
    activations: ActivationPair = DEFAULT_ACTIVATIONS,
    expand_inputs: bool = False,
) -> tuple[AeModel, AeTrace]:
    """Train the unconstrained autoencoder monitor by monotone gradient descent."""
    if X.n_samples < 2:
        raise ValueError("need at least 2 samples")
    if p < 1:
        raise ValueError("p must be at least 1")
    scaler = fit_scaler(X)
    inputs = apply_scaler(scaler, X)
    mat = expand_second_order(inputs).values if expand_inputs else inputs.values

    rng = np.random.default_rng(seed)
    params, trace = _gradient_descent(mat, p, rng, activations, max_iters, tol, lr)
    w_enc, b_enc, w_dec, b_dec = params
    codes = activations.encoder.fn(w_enc.T @ mat + b_enc[:, None])
    stats = fit_monitoring_stats(codes, zeta)
    model = AeModel(
        scaler=scaler,
        w_enc=w_enc,
        b_enc=b_enc,
        w_dec=w_dec,
        b_dec=b_dec,
        sigma_g_inv=stats.sigma_g_inv,
        g_mean=stats.g_mean,
        t2_train=stats.t2_train,
        kde_bandwidth=stats.kde_bandwidth,
        control_limit=stats.control_limit,
        zeta=zeta,
        encoder_activation=activations.encoder.name,
        decoder_activation=activations.decoder.name,
        expand_inputs=expand_inputs,
    )
    return model, trace


def sae_train(
    X: DataMatrix,
    p: int,
    max_iters: int = 2000,
    tol: float = 1e-9,
    lr: float = 1.0,
    seed: int = 0,
    zeta: float = DEFAULT_ZETA,
    activations: ActivationPair = DEFAULT_ACTIVATIONS,
) -> tuple[AeModel, AeTrace]:
    """Autoencoder over second-order expanded inputs, still unconstrained."""
    return ae_train(
        X,
        p,
        max_iters=max_iters,
        tol=tol,
        lr=lr,
        seed=seed,
        zeta=zeta,
        activations=activations,
        expand_inputs=True,
    )


def monitor_with(model, X_new: DataMatrix) -> DetectionReport:
    """Score new data with any fitted monitor (shared T2 code path)."""
    return monitor(model, X_new)
