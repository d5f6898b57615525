"""Linear receive beamforming for uplink multi-user SIMO.

Conventions: the channel is an (antennas x users) complex matrix whose
column k is user k's channel; a combiner is a (users x antennas)
matrix whose row k is user k's receive filter, applied as a plain
(non-conjugated) row-times-vector product.  The ZF/MMSE closed forms
below produce exactly this row layout, so combiner @ channel is the
effective user-coupling matrix.  Rates are log base 2 (bps/Hz), unit
transmit power per user and white circularly-symmetric noise assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import SingularChannelError

_GRAM_COND_LIMIT = 1e12
_ROW_NORM_SLACK = 1e-12

LOG2 = np.log(2.0)


def _as_channel(channel) -> np.ndarray:
    h = np.asarray(channel, dtype=np.complex128)
    if h.ndim != 2:
        raise ValueError("channel must be a 2D (antennas x users) matrix")
    if not (np.isfinite(h.real).all() and np.isfinite(h.imag).all()):
        raise ValueError("channel must be finite")
    return h


def mmse_combiner(channel_est, noise_power: float) -> np.ndarray:
    """Regularized pseudo-inverse combiner (Gram + noise_power * I) \\ H^H.

    With noise_power == 0 this is exactly the zero-forcing combiner
    (same solve path), which requires at least as many antennas as
    users and a well-conditioned Gram matrix.
    """
    h = _as_channel(channel_est)
    if noise_power < 0:
        raise ValueError("noise power must be >= 0")
    antennas, users = h.shape
    gram = h.conj().T @ h + noise_power * np.eye(users)
    if noise_power == 0:
        if antennas < users:
            raise SingularChannelError("zero-forcing needs antennas >= users")
        if not np.isfinite(np.linalg.cond(gram)) or np.linalg.cond(gram) > _GRAM_COND_LIMIT:
            raise SingularChannelError("channel Gram matrix is too ill-conditioned")
    try:
        return np.linalg.solve(gram, h.conj().T)
    except np.linalg.LinAlgError as exc:
        raise SingularChannelError("channel Gram matrix is singular") from exc


def zf_combiner(channel_est) -> np.ndarray:
    """Zero-forcing combiner: (H^H H)^-1 H^H, yielding W @ H = I.

    Returned unprojected; apply `power_project` explicitly when the
    per-user power constraint matters.
    """
    return mmse_combiner(channel_est, 0.0)


def sinr(combiner, channel, noise_power: float) -> np.ndarray:
    """Per-user SINR of `combiner` rows against the true `channel`.

    gamma_k = |row_k . h_k|^2 / (sum_{i != k} |row_k . h_i|^2
              + noise_power * ||row_k||^2); scale-invariant in each row.
    """
    w = np.asarray(combiner, dtype=np.complex128)
    h = _as_channel(channel)
    if noise_power < 0:
        raise ValueError("noise power must be >= 0")
    if w.ndim != 2 or w.shape != (h.shape[1], h.shape[0]):
        raise ValueError("combiner must be (users x antennas) matching the channel")
    coupling = w @ h
    desired = np.abs(np.diag(coupling)) ** 2
    interference = (np.abs(coupling) ** 2).sum(axis=1) - desired
    noise = noise_power * (np.abs(w) ** 2).sum(axis=1)
    denom = interference + noise
    if noise_power == 0 and ((denom == 0) & (desired == 0)).any():
        raise ValueError("0/0 SINR: zero filter row with zero noise power")
    # a zero filter row with positive noise power carries no signal: 0
    gammas = np.zeros_like(desired)
    np.divide(desired, denom, out=gammas, where=denom > 0)
    gammas[(denom == 0) & (desired > 0)] = np.inf
    return gammas


def _uniform_weights(users: int) -> np.ndarray:
    return np.full(users, 1.0 / users)


def _check_weights(weights, users: int) -> np.ndarray:
    if weights is None:
        return _uniform_weights(users)
    a = np.asarray(weights, dtype=np.float64)
    if a.shape != (users,):
        raise ValueError("one weight per user required")
    if (a < 0).any() or abs(a.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    return a


def sum_rate(combiner, channel, noise_power: float, weights=None) -> float:
    """Weighted sum rate sum_k weights_k * log2(1 + sinr_k) in bps/Hz.

    Its negative is the training-style loss when the combiner was
    derived from an estimate but evaluated against the true channel.
    """
    gammas = sinr(combiner, channel, noise_power)
    w = _check_weights(weights, gammas.size)
    terms = np.where(w > 0, w * np.log1p(gammas) / LOG2, 0.0)
    return float(terms.sum())


def power_project(combiner) -> np.ndarray:
    """Clip each filter row to unit Euclidean norm; rows within the bound
    pass through untouched, so the projection is idempotent."""
    w = np.asarray(combiner, dtype=np.complex128)
    norms_sq = (np.abs(w) ** 2).sum(axis=1)
    scale = np.ones_like(norms_sq)
    over = norms_sq > 1.0 + _ROW_NORM_SLACK
    scale[over] = 1.0 / np.sqrt(norms_sq[over])
    return w * scale[:, None]


def lookahead_update(slow, fast, coeff: float) -> np.ndarray:
    """Slow-weights interpolation slow + coeff * (fast - slow).

    coeff 0 and 1 return exact copies of the respective endpoint.
    """
    s = np.asarray(slow)
    f = np.asarray(fast)
    if s.shape != f.shape:
        raise ValueError(f"shape mismatch: {s.shape} vs {f.shape}")
    if not (0.0 <= coeff <= 1.0):
        raise ValueError("interpolation coefficient must be in [0, 1]")
    if coeff == 0.0:
        return s.copy()
    if coeff == 1.0:
        return f.copy()
    return s + coeff * (f - s)


def _rate_and_gradient(w, h, noise_power, weights):
    """Sum rate plus its gradient packed as a complex array G with
    G = dJ/dRe(W) + 1j * dJ/dIm(W), so W + lr * G is a real-space
    gradient-ascent step."""
    coupling = w @ h  # (users, users)
    diag = np.diag(coupling)
    desired = np.abs(diag) ** 2
    interference = (np.abs(coupling) ** 2).sum(axis=1) - desired
    noise = noise_power * (np.abs(w) ** 2).sum(axis=1)
    denom = interference + noise
    gamma = desired / denom
    rate = float(np.where(weights > 0, weights * np.log1p(gamma) / LOG2, 0.0).sum())

    h_rows = h.conj().T  # row i = conj(h_i)^T
    d_desired = diag[:, None] * h_rows
    d_denom = coupling @ h_rows - d_desired + noise_power * w
    coeff = weights / (LOG2 * (1.0 + gamma))
    grad = 2.0 * coeff[:, None] * (d_desired * denom[:, None] - desired[:, None] * d_denom) / (denom**2)[:, None]
    return rate, grad


def sum_rate_gradient(combiner, channel, noise_power: float, weights=None) -> np.ndarray:
    """Analytic gradient of `sum_rate` w.r.t. the combiner, packed as
    complex (real part = d/dRe, imaginary part = d/dIm)."""
    w = np.asarray(combiner, dtype=np.complex128)
    h = _as_channel(channel)
    alpha = _check_weights(weights, h.shape[1])
    if noise_power <= 0:
        raise ValueError("gradient needs noise power > 0")
    return _rate_and_gradient(w, h, noise_power, alpha)[1]


def finite_difference_gradient(combiner, channel, noise_power, weights=None, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of `sum_rate` over the 2*users*antennas
    real parameters, packed like `sum_rate_gradient`."""
    w = np.asarray(combiner, dtype=np.complex128).copy()
    grad = np.zeros_like(w)
    for k in range(w.shape[0]):
        for m in range(w.shape[1]):
            for part, bump in ((1.0, 1.0), (1.0j, 1.0j)):
                orig = w[k, m]
                w[k, m] = orig + step * bump
                up = sum_rate(w, channel, noise_power, weights)
                w[k, m] = orig - step * bump
                down = sum_rate(w, channel, noise_power, weights)
                w[k, m] = orig
                slope = (up - down) / (2.0 * step)
                grad[k, m] += slope * part
    return grad


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.flatnonzero(u * np.arange(1, v.size + 1) > (css - 1.0))[-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class OptimizerConfig:
    """Projected-gradient-ascent settings for direct sum-rate maximization.

    gradient "fd" recomputes central differences each step (slow, exact
    contract); "analytic" uses the closed-form gradient, which the test
    suite checks against finite differences.  Every `lookahead_every`
    steps the slow weights absorb the fast iterate with coefficient
    `lookahead_coeff` and the fast iterate restarts there.
    """

    step_size: float = 0.05
    iterations: int = 300
    lookahead_every: int = 13
    lookahead_coeff: float = 0.5
    gradient: str = "fd"
    fd_step: float = 1e-6
    optimize_weights: bool = False
    seed: int | None = None  # reserved for the "random" initializer
    init: str = "mmse"

    def __post_init__(self):
        if self.gradient not in ("fd", "analytic"):
            raise ValueError("gradient must be 'fd' or 'analytic'")
        if self.init not in ("mmse", "random"):
            raise ValueError("init must be 'mmse' or 'random'")
        if not (0.0 <= self.lookahead_coeff <= 1.0):
            raise ValueError("lookahead coefficient must be in [0, 1]")
        if self.iterations < 0 or self.step_size <= 0:
            raise ValueError("iterations must be >= 0 and step size > 0")


@dataclass
class OptimizeResult:
    combiner: np.ndarray
    trace: np.ndarray  # best-so-far rate per iteration (monotone)
    weights: np.ndarray

    @property
    def rate(self) -> float:
        return float(self.trace[-1])


def optimize_sum_rate(
    channel_est,
    channel_true,
    noise_power: float,
    config: OptimizerConfig | None = None,
    initial=None,
    weights=None,
) -> OptimizeResult:
    """Directly maximize the weighted sum rate over the combiner.

    Projected gradient ascent starting from the power-projected MMSE
    combiner of the channel estimate; the objective is evaluated
    against the true channel, so with an imperfect estimate this plays
    the role the training loss plays for a learned beamformer.  The
    returned trace is the best rate seen up to each iteration and is
    non-decreasing by construction.

    `initial` overrides the starting combiner; `config.optimize_weights`
    co-optimizes the user weights on the probability simplex.
    """
    cfg = config or OptimizerConfig()
    h_est = _as_channel(channel_est)
    h_true = _as_channel(channel_true)
    if h_est.shape != h_true.shape:
        raise ValueError("estimate and true channel must share a shape")
    antennas, users = h_true.shape
    if antennas > 16 or users > 4:
        raise ValueError("optimizer is desk-scale: antennas <= 16, users <= 4")
    if noise_power <= 0:
        raise ValueError("optimization needs noise power > 0")
    alpha = _check_weights(weights, users)

    if initial is not None:
        fast = power_project(np.asarray(initial, dtype=np.complex128))
    elif cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        fast = power_project(
            (rng.standard_normal((users, antennas)) + 1j * rng.standard_normal((users, antennas)))
            / np.sqrt(2 * antennas)
        )
    else:
        fast = power_project(mmse_combiner(h_est, noise_power))
    slow = fast.copy()

    def rate_of(w, a):
        return sum_rate(w, h_true, noise_power, a)

    best_rate = rate_of(fast, alpha)
    best_w = fast.copy()
    best_alpha = alpha.copy()
    trace = [best_rate]
    for step in range(1, cfg.iterations + 1):
        if cfg.gradient == "analytic":
            grad = _rate_and_gradient(fast, h_true, noise_power, alpha)[1]
        else:
            grad = finite_difference_gradient(fast, h_true, noise_power, alpha, step=cfg.fd_step)
        fast = power_project(fast + cfg.step_size * grad)
        if cfg.optimize_weights:
            gammas = sinr(fast, h_true, noise_power)
            alpha = _project_simplex(alpha + cfg.step_size * np.log1p(gammas) / LOG2)
        if cfg.lookahead_every and step % cfg.lookahead_every == 0:
            slow = lookahead_update(slow, fast, cfg.lookahead_coeff)
            fast = slow.copy()
        current = rate_of(fast, alpha)
        if current > best_rate:
            best_rate = current
            best_w = fast.copy()
            best_alpha = alpha.copy()
        trace.append(best_rate)
    return OptimizeResult(combiner=best_w, trace=np.asarray(trace), weights=best_alpha)


def sweep_optimizer_config(iterations: int = 100) -> OptimizerConfig:
    """Optimizer settings used by the benchmark sweep: analytic gradient
    for tractable batch sizes, otherwise the standard defaults."""
    return replace(OptimizerConfig(), gradient="analytic", iterations=iterations)
