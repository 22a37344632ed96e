"""Reconstruction cost and geometric conjugate gradient on St(N,p) x E(N,p).

The objective is the squared Frobenius reconstruction error of a one-layer
autoencoder whose decoder weight is constrained to orthonormal columns:

    f(w, w_tilde) = || X - dec( w_tilde @ enc(w^T X) ) ||_F^2

Minimization runs a nonlinear conjugate gradient on the product manifold:
Riemannian gradients via tangent projection, Armijo backtracking along the
retracted curve, projection-based vector transport of the previous gradient
and direction, and a Liu-Storey style direction parameter with a descent
safeguard.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .activations import DEFAULT_ACTIVATIONS, ActivationPair
from .manifold import (
    ProductPoint,
    StiefelPoint,
    TangentPair,
    inner,
    norm,
    random_stiefel,
    retract,
    riemannian_grad,
    transport,
)

_MAX_BACKTRACKS = 60
_GAMMA_DEN_FLOOR = 1e-18
_FLAT_WINDOW = 5


class LineSearchError(RuntimeError):
    """No admissible Armijo step was found along the given direction."""


@dataclass
class CgConfig:
    """Stopping and step-control knobs for the manifold conjugate gradient."""

    max_iters: int = 500
    grad_tol: float = 1e-5
    cost_rel_tol: float = 1e-9
    armijo_c1: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    seed: int = 0
    # Maximum independent initializations tried when a fit collapses to
    # constant features (singular feature covariance).  The first run that
    # yields usable monitoring statistics wins; no cost-based selection.
    restarts: int = 3

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")
        if not 0 < self.armijo_c1 < 1:
            raise ValueError("armijo_c1 must lie in (0, 1)")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")


@dataclass
class CgTrace:
    """Per-iteration record of the optimization run."""

    cost_per_iter: list[float] = field(default_factory=list)
    grad_norm_per_iter: list[float] = field(default_factory=list)
    iterations: int = 0
    wall_time: float = 0.0


def _check_shapes(point: ProductPoint, X: np.ndarray) -> None:
    if X.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    if point.shape[0] != X.shape[0]:
        raise ValueError(
            f"parameter rows {point.shape[0]} do not match data rows {X.shape[0]}"
        )


def cost(
    point: ProductPoint,
    X: np.ndarray,
    activations: ActivationPair = DEFAULT_ACTIVATIONS,
) -> float:
    """Squared Frobenius reconstruction error of X under the autoencoder."""
    X = np.asarray(X, dtype=float)
    _check_shapes(point, X)
    codes = activations.encoder.fn(point.w.T @ X)
    recon = activations.decoder.fn(point.w_tilde.matrix @ codes)
    err = recon - X
    value = float(np.sum(err * err))
    if not np.isfinite(value):
        raise FloatingPointError("non-finite reconstruction cost")
    return value


def euclidean_grad(
    point: ProductPoint,
    X: np.ndarray,
    activations: ActivationPair = DEFAULT_ACTIVATIONS,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the cost with respect to (w, w_tilde).

    With G = enc(w^T X), E = dec(w_tilde G) - X and D = 2 E * dec'(w_tilde G):
    d/d w_tilde = D G^T and d/d w = X (enc'(w^T X) * (w_tilde^T D))^T.
    """
    X = np.asarray(X, dtype=float)
    _check_shapes(point, X)
    enc, dec = activations.encoder, activations.decoder
    pre_codes = point.w.T @ X
    codes = enc.fn(pre_codes)
    pre_recon = point.w_tilde.matrix @ codes
    err = dec.fn(pre_recon) - X
    D = 2.0 * err * dec.deriv(pre_recon)
    grad_wt = D @ codes.T
    grad_w = X @ (enc.deriv(pre_codes) * (point.w_tilde.matrix.T @ D)).T
    if not (np.all(np.isfinite(grad_w)) and np.all(np.isfinite(grad_wt))):
        raise FloatingPointError("non-finite gradient")
    return grad_w, grad_wt


def move(point: ProductPoint, direction: TangentPair, t: float) -> ProductPoint:
    """Step along the retracted curve: free factor linearly, Stiefel by retraction."""
    return ProductPoint(
        w=point.w + t * direction.dw,
        w_tilde=retract(point.w_tilde, direction.dh, t),
    )


def line_search(
    point: ProductPoint,
    direction: TangentPair,
    X: np.ndarray,
    cfg: CgConfig,
    activations: ActivationPair = DEFAULT_ACTIVATIONS,
    grad: TangentPair | None = None,
    f0: float | None = None,
) -> tuple[float, float, ProductPoint]:
    """Armijo backtracking from cfg.initial_step along a descent direction.

    Returns (t, cost at t, point at t) for the largest tried step satisfying
    f(t) <= f(0) + c1 * t * <grad, direction>.  Raises ValueError when the
    direction is not descent and LineSearchError when 60 backtracks fail.
    """
    if grad is None:
        grad = riemannian_grad(point, euclidean_grad(point, X, activations))
    if f0 is None:
        f0 = cost(point, X, activations)
    slope = inner(grad, direction)
    if not slope < 0:
        raise ValueError(f"not a descent direction: <grad, dir> = {slope:.3e}")
    t = cfg.initial_step
    for _ in range(_MAX_BACKTRACKS + 1):
        candidate = move(point, direction, t)
        try:
            f_t = cost(candidate, X, activations)
        except FloatingPointError:
            f_t = np.inf
        if f_t <= f0 + cfg.armijo_c1 * t * slope:
            return t, f_t, candidate
        t *= cfg.backtrack_factor
    raise LineSearchError(
        f"no Armijo step after {_MAX_BACKTRACKS} backtracks (f0={f0:.6e}, "
        f"slope={slope:.3e})"
    )


def init_product_point(
    N: int, p: int, rng: np.random.Generator
) -> ProductPoint:
    """Tied random start: one orthonormal draw shared by encoder and decoder.

    Starting from W = W_tilde makes the initial map a symmetric
    projection-like autoencoder.  Untied Gaussian encoder starts were prone
    to collapsing single features onto tanh saturation plateaus, which the
    optimizer then never leaves.
    """
    w_tilde = random_stiefel(N, p, rng)
    return ProductPoint(w=w_tilde.matrix.copy(), w_tilde=w_tilde)


def cg_optimize(
    init: ProductPoint,
    X: np.ndarray,
    cfg: CgConfig | None = None,
    activations: ActivationPair = DEFAULT_ACTIVATIONS,
) -> tuple[ProductPoint, CgTrace]:
    """Minimize the reconstruction cost by conjugate gradient on the manifold.

    Stops when the Riemannian gradient norm falls below grad_tol, when the
    relative cost improvement over the last 5 iterations drops below
    cost_rel_tol, or at max_iters.  The direction parameter follows the
    Liu-Storey quotient <G_k, G_k - G_{k-1}> / <H_{k-1}, G_{k-1}> with both
    previous vectors transported to the current point; the denominator is
    negative along descent directions, so the conjugate weight is the
    clamped magnitude max(0, -quotient), and any non-descent combination
    falls back to steepest descent.
    """
    if cfg is None:
        cfg = CgConfig()
    X = np.asarray(X, dtype=float)
    start = time.perf_counter()

    point = init
    f = cost(point, X, activations)
    grad = riemannian_grad(point, euclidean_grad(point, X, activations))
    gnorm = norm(grad)
    trace = CgTrace(cost_per_iter=[f], grad_norm_per_iter=[gnorm])
    direction = -grad

    for _ in range(cfg.max_iters):
        if gnorm <= cfg.grad_tol:
            break
        costs = trace.cost_per_iter
        if len(costs) > _FLAT_WINDOW:
            drop = costs[-1 - _FLAT_WINDOW] - costs[-1]
            if drop <= cfg.cost_rel_tol * max(1.0, abs(costs[-1 - _FLAT_WINDOW])):
                break
        if inner(direction, grad) >= 0:
            direction = -grad
        try:
            _, f_new, new_point = line_search(
                point, direction, X, cfg, activations, grad=grad, f0=f
            )
        except LineSearchError:
            if inner(direction + grad, direction + grad) == 0.0:
                raise  # already steepest descent
            direction = -grad
            _, f_new, new_point = line_search(
                point, direction, X, cfg, activations, grad=grad, f0=f
            )

        prev_grad, prev_dir = grad, direction
        point, f = new_point, f_new
        grad = riemannian_grad(point, euclidean_grad(point, X, activations))
        gnorm = norm(grad)
        trace.cost_per_iter.append(f)
        trace.grad_norm_per_iter.append(gnorm)
        trace.iterations += 1

        prev_grad_t = transport(point.w_tilde, prev_grad)
        prev_dir_t = transport(point.w_tilde, prev_dir)
        den = inner(prev_dir_t, prev_grad_t)
        beta = 0.0
        if abs(den) > _GAMMA_DEN_FLOOR:
            quotient = inner(grad, grad - prev_grad_t) / den
            beta = max(0.0, -quotient)
        direction = -grad + beta * prev_dir_t
        # the combination can drift off the tangent space at large norms
        direction = transport(point.w_tilde, direction)
        if inner(direction, grad) >= 0:
            direction = -grad

    trace.wall_time = time.perf_counter() - start
    return point, trace


def trace_rows(trace: CgTrace) -> list[tuple[int, float, float]]:
    """(iteration, cost, gradient norm) triples for CSV export."""
    return [
        (k, c, g)
        for k, (c, g) in enumerate(
            zip(trace.cost_per_iter, trace.grad_norm_per_iter)
        )
    ]
