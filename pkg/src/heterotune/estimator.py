"""Power/time prediction for unobserved configurations.

The model treats each application as one row of an applications x
configurations matrix generated by a latent-factor Gaussian:

    y_i = W z_i + mu + eps,   z_i ~ N(0, I_K),   eps ~ N(0, sigma^2 I)

Offline rows (the training set) are fully observed; the target application
contributes only its sampled cells.  Fitting proceeds in two stages, both
per quantity (power in the linear domain, time in the log domain by
default):

1. a ridge-stabilized least-squares fit of the sampled cells on a full
   quadratic basis of the unified coordinates fills in a dense initial row;
2. expectation-maximization refines W, mu and sigma^2 over the training
   rows plus the target row, treating the target's unsampled cells as
   missing. Parameters are initialized from the stage-1 completion, and the
   E-step conditions the target's latent vector on its sampled cells only,
   so exact low-rank structure is recovered exactly.

Columns are z-scored with training-view statistics before EM and restored
after; sampled cells always pass through to the output unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .dataset import SamplePlan, SampleSet, TrainingMatrix, mask_application
from .energy import total_energy_row
from .errors import InsufficientSamplesError, RankDeficiencyError
from .platforms import PlatformSpec

SIGMA2_FLOOR = 1e-12

FEATURES_UNIFIED = "unified-quadratic"   # cores, frequency index, memory
FEATURES_SINGLE = "single-quadratic"     # one parallelism knob (workgroup size)


@dataclass(frozen=True)
class EstimatorParams:
    """Knobs of the two-stage estimator.

    ``min_samples`` must be at least the size of the regression basis:
    10 for the three-predictor basis, 3 for the single-predictor one.
    """

    latent_dim: int = 5
    max_iters: int = 500
    tol: float = 1e-6
    min_samples: int = 10
    ridge: float = 0.0
    log_time: bool = True

    def __post_init__(self) -> None:
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")


@dataclass
class EstimatorState:
    """Fitted factor-model parameters, in the z-scored column space."""

    loadings: np.ndarray          # (n_configs, K)
    latent: np.ndarray            # (n_rows, K); last row is the target app
    mean: np.ndarray              # (n_configs,)
    noise_var: float
    col_mean: np.ndarray
    col_scale: np.ndarray
    ll_history: np.ndarray
    n_iters: int
    converged: bool
    sigma2_floored: bool


@dataclass(frozen=True)
class PredictionResult:
    """Per-configuration estimates and the selected configuration."""

    power: np.ndarray
    time: np.ndarray
    energy: np.ndarray
    chosen: int
    provenance: tuple[str, ...]   # 'observed-sample' | 'predicted' per config
    clamped: tuple[int, ...] = ()
    converged: bool = True


def quadratic_features(predictors: Sequence[float]) -> np.ndarray:
    """Full quadratic basis of a predictor vector.

    For (c, f, m) the basis is [1, c, f, m, c*f, c*m, f*m, c^2, f^2, m^2];
    for a single predictor w it degenerates to [1, w, w^2].
    """
    x = np.asarray(predictors, dtype=float)
    parts = [np.ones(1), x]
    cross = [x[i] * x[j] for i in range(x.size) for j in range(i + 1, x.size)]
    if cross:
        parts.append(np.array(cross))
    parts.append(x**2)
    return np.concatenate(parts)


def feature_matrix(matrix: TrainingMatrix, mode: str = FEATURES_UNIFIED) -> np.ndarray:
    """Stack the quadratic basis of every configuration of a matrix."""
    if mode == FEATURES_UNIFIED:
        rows = [
            quadratic_features((u.equiv_cores, float(u.freq_index), u.equiv_mem))
            for u in matrix.unified
        ]
    elif mode == FEATURES_SINGLE:
        rows = [quadratic_features((float(c.cores),)) for c in matrix.configs]
    else:
        raise ValueError(f"unknown feature mode {mode!r}")
    return np.asarray(rows)


def init_regression(
    observed_idx: Sequence[int],
    observed_values: Sequence[float],
    features: np.ndarray,
    params: EstimatorParams | None = None,
) -> np.ndarray:
    """Fill a row by least squares on the quadratic basis.

    Fits the observed cells, evaluates at every configuration, then puts the
    measured values back at the observed cells.  Raises
    InsufficientSamplesError when there are fewer observations than basis
    functions and RankDeficiencyError when the design matrix is singular and
    no ridge is configured.
    """
    params = params or EstimatorParams()
    idx = np.asarray(observed_idx, dtype=int)
    y = np.asarray(observed_values, dtype=float)
    n_feat = features.shape[1]
    if idx.size < n_feat:
        raise InsufficientSamplesError(
            f"insufficient samples: regression basis has {n_feat} functions, got {idx.size}"
        )
    X = features[idx]
    # Center/scale the non-constant columns so the ridge penalty is
    # scale-free; the intercept is carried by the mean of y.
    mu = X[:, 1:].mean(axis=0)
    sd = X[:, 1:].std(axis=0)
    sd = np.where(sd > 1e-12, sd, 1.0)
    Xc = (X[:, 1:] - mu) / sd
    y_mean = y.mean()
    yc = y - y_mean
    if params.ridge == 0.0:
        design = np.hstack([np.ones((idx.size, 1)), Xc])
        if np.linalg.matrix_rank(design) < n_feat:
            raise RankDeficiencyError(
                "design matrix is rank-deficient; set a positive ridge to proceed"
            )
        beta, *_ = np.linalg.lstsq(Xc, yc, rcond=None)
    else:
        a = np.vstack([Xc, np.sqrt(params.ridge) * np.eye(n_feat - 1)])
        b = np.concatenate([yc, np.zeros(n_feat - 1)])
        beta, *_ = np.linalg.lstsq(a, b, rcond=None)
    all_c = (features[:, 1:] - mu) / sd
    row = y_mean + all_c @ beta
    row[idx] = y
    return row


def _loglik(
    dense: np.ndarray,
    y_obs: np.ndarray,
    obs: np.ndarray,
    W: np.ndarray,
    mu: np.ndarray,
    s2: float,
) -> float:
    """Observed-data log-likelihood, evaluated through an orthonormal basis
    of the loadings so the result stays stable as sigma^2 collapses."""
    total = 0.0
    for Wb, rows in ((W, dense - mu), (W[obs], (y_obs - mu[obs])[None, :])):
        if rows.shape[0] == 0 or rows.shape[1] == 0:
            continue
        d = rows.shape[1]
        u, sv, _ = np.linalg.svd(Wb, full_matrices=False)
        lam = sv**2
        proj = rows @ u                       # (n, K)
        perp = rows - proj @ u.T              # exact complement, no cancellation
        quad = (proj**2 / (lam + s2)).sum(axis=1) + (perp**2).sum(axis=1) / s2
        logdet = np.log(lam + s2).sum() + (d - lam.size) * np.log(s2)
        total += -0.5 * (rows.shape[0] * (d * np.log(2.0 * np.pi) + logdet) + quad.sum())
    return float(total)


def em_fit(
    training_rows: np.ndarray,
    observed_idx: Sequence[int],
    observed_values: Sequence[float],
    initial_row: np.ndarray,
    params: EstimatorParams | None = None,
) -> tuple[EstimatorState, np.ndarray]:
    """Fit the factor model and complete the target row.

    ``training_rows`` are fully observed; the target application enters with
    its sampled cells (``observed_idx``/``observed_values``) plus the dense
    regression row used only to initialize parameters.  Each iteration runs
    the E-step under the current parameters and conditional maximizations of
    mean, loadings and noise variance, so the observed-data log-likelihood
    never decreases.  Non-convergence at ``max_iters`` is flagged on the
    returned state, not raised; a collapsing noise variance is clamped at
    SIGMA2_FLOOR (and flagged), which keeps the noiseless case well-posed.
    """
    params = params or EstimatorParams()
    Yt = np.asarray(training_rows, dtype=float)
    n_train, D = Yt.shape
    obs = np.asarray(observed_idx, dtype=int)
    y_obs_raw = np.asarray(observed_values, dtype=float)
    N = n_train + 1

    # z-score columns with training-view statistics
    col_mean = Yt.mean(axis=0)
    col_scale = Yt.std(axis=0)
    col_scale = np.where(col_scale > 1e-12, col_scale, 1.0)
    Ys = (Yt - col_mean) / col_scale
    y_obs = (y_obs_raw - col_mean[obs]) / col_scale[obs]
    init_s = (np.asarray(initial_row, dtype=float) - col_mean) / col_scale

    K = max(1, min(params.latent_dim, D - 1, N - 1))
    # The raw regression row carries misfit in directions no training row
    # supports; stacking it as-is plants spurious components that EM then
    # spends hundreds of iterations unlearning.  Keep only its projection
    # onto the training block's rank-K principal subspace.
    tr_mean = Ys.mean(axis=0)
    _, sv_tr, vt_tr = np.linalg.svd(Ys - tr_mean, full_matrices=False)
    lam_tr = sv_tr**2 / max(n_train, 1)
    k_proj = int(np.count_nonzero(lam_tr > max(1e-9 * lam_tr[0], 1e-12)))
    basis = vt_tr[: max(1, min(K, k_proj))]
    init_proj = (init_s - tr_mean) @ basis.T @ basis + tr_mean
    stacked = np.vstack([Ys, init_proj])
    mu = stacked.mean(axis=0)
    centered = stacked - mu
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    lam = sv**2 / N
    s2 = float(lam[K:].mean()) if lam.size > K else SIGMA2_FLOOR
    s2 = max(s2, SIGMA2_FLOOR)
    # Drop directions the initial spectrum cannot support: loading columns
    # born at (near) zero norm otherwise collapse through |w|^2 ~ sigma^2,
    # where the latent posterior of the partially observed row blows up.
    supported = lam[:K] - s2 > max(1e-9 * lam[0], 1e-10)
    K = max(1, int(np.count_nonzero(supported)))
    W = vt[:K].T * np.sqrt(np.maximum(lam[:K] - s2, SIGMA2_FLOOR))

    miss = np.setdiff1d(np.arange(D), obs)
    eye_k = np.eye(K)
    floored = s2 <= SIGMA2_FLOOR

    def e_step(W, mu, s2):
        M = W.T @ W + s2 * eye_k
        Minv = np.linalg.inv(M)
        Dc = Ys - mu
        m_dense = Dc @ W @ Minv                      # (n_train, K)
        sz_dense = s2 * Minv
        Wo = W[obs]
        Mo_inv = np.linalg.inv(Wo.T @ Wo + s2 * eye_k)
        m_t = Mo_inv @ Wo.T @ (y_obs - mu[obs]) if obs.size else np.zeros(K)
        sz_t = s2 * Mo_inv if obs.size else eye_k.copy()
        e_y = W @ m_t + mu
        e_y[obs] = y_obs
        cov_yz_miss = W[miss] @ sz_t                 # (|U|, K)
        var_y_miss = (cov_yz_miss * W[miss]).sum(axis=1) + s2
        return m_dense, sz_dense, m_t, sz_t, e_y, cov_yz_miss, var_y_miss

    ll_hist = [_loglik(Ys, y_obs, obs, W, mu, s2)]
    converged = False
    it = 0
    for it in range(1, params.max_iters + 1):
        m_dense, sz_dense, m_t, sz_t, e_y, cov_yz_miss, var_y_miss = e_step(W, mu, s2)

        sum_m = m_dense.sum(axis=0) + m_t
        A = n_train * sz_dense + m_dense.T @ m_dense + sz_t + np.outer(m_t, m_t)

        # Joint M-step over (mu, W) via the intercept-augmented latent
        # vector [1, z]; decoupled conditional updates of mean and loadings
        # zig-zag badly when one factor dominates the spectrum.
        A_aug = np.empty((K + 1, K + 1))
        A_aug[0, 0] = N
        A_aug[0, 1:] = sum_m
        A_aug[1:, 0] = sum_m
        A_aug[1:, 1:] = A
        B_aug = np.empty((D, K + 1))
        B_aug[:, 0] = Ys.sum(axis=0) + e_y
        B_aug[:, 1:] = Ys.T @ m_dense + np.outer(e_y, m_t)
        B_aug[miss, 1:] += cov_yz_miss
        sol = np.linalg.solve(A_aug, B_aug.T).T
        mu_new, W_new = sol[:, 0], sol[:, 1:]

        # CM step for the isotropic noise variance.  The uniform treatment
        # below is exact for known cells; missing cells additionally carry
        # their own posterior variance and their covariance with z.
        R = Ys - mu_new - m_dense @ W_new.T
        total = (R**2).sum() + n_train * ((W_new @ sz_dense) * W_new).sum()
        r_t = e_y - mu_new - W_new @ m_t
        total += (r_t**2).sum() + ((W_new @ sz_t) * W_new).sum()
        if miss.size:
            total += var_y_miss.sum() - 2.0 * (W_new[miss] * cov_yz_miss).sum()
        s2_new = total / (N * D)
        if s2_new <= SIGMA2_FLOOR:
            s2_new = SIGMA2_FLOOR
            floored = True

        W, mu, s2 = W_new, mu_new, float(s2_new)
        ll = _loglik(Ys, y_obs, obs, W, mu, s2)
        ll_hist.append(ll)
        if abs(ll - ll_hist[-2]) / max(abs(ll_hist[-2]), 1.0) < params.tol:
            converged = True
            break

    # final E-step under converged parameters gives the completion
    m_dense, _, m_t, _, e_y, _, _ = e_step(W, mu, s2)
    completed = (W @ m_t + mu) * col_scale + col_mean
    completed[obs] = y_obs_raw

    state = EstimatorState(
        loadings=W,
        latent=np.vstack([m_dense, m_t]),
        mean=mu,
        noise_var=s2,
        col_mean=col_mean,
        col_scale=col_scale,
        ll_history=np.asarray(ll_hist),
        n_iters=it,
        converged=converged,
        sigma2_floored=floored,
    )
    return state, completed


def complete_row(
    training_rows: np.ndarray,
    observed_idx: Sequence[int],
    observed_values: Sequence[float],
    features: np.ndarray,
    params: EstimatorParams | None = None,
    log_domain: bool = False,
) -> tuple[EstimatorState, np.ndarray]:
    """Regression-initialized EM completion of one row, optionally in the
    log domain (used for execution times, which span decades)."""
    params = params or EstimatorParams()
    y = np.asarray(observed_values, dtype=float)
    rows = np.asarray(training_rows, dtype=float)
    if log_domain:
        if (y <= 0).any() or (rows <= 0).any():
            raise ValueError("log-domain completion requires positive values")
        rows = np.log(rows)
        y = np.log(y)
    initial = init_regression(observed_idx, y, features, params)
    state, completed = em_fit(rows, observed_idx, y, initial, params)
    if log_domain:
        completed = np.exp(completed)
        completed[np.asarray(observed_idx, dtype=int)] = observed_values
    return state, completed


def predict_energy(
    power_row: np.ndarray,
    time_row: np.ndarray,
    system: Sequence[PlatformSpec],
    observed_idx: Sequence[int] = (),
    static_included: bool = False,
    min_observed_time: float | None = None,
    converged: bool = True,
) -> PredictionResult:
    """Score every configuration's whole-system energy and pick the minimum.

    Non-positive predicted times are clamped to a small fraction of the
    smallest observed time and flagged rather than aborting the pipeline.
    Ties resolve to the lowest configuration index.
    """
    power_row = np.asarray(power_row, dtype=float).copy()
    time_row = np.asarray(time_row, dtype=float).copy()
    clamped: list[int] = []
    bad = time_row <= 0
    if bad.any():
        fallback = (min_observed_time if min_observed_time is not None else 1.0) * 1e-3
        clamped = [int(i) for i in np.flatnonzero(bad)]
        time_row[bad] = fallback
    if static_included:
        energy = power_row * time_row
    else:
        energy = total_energy_row(power_row, time_row, system)
    chosen = int(np.argmin(energy))
    obs = set(int(i) for i in observed_idx)
    provenance = tuple(
        "observed-sample" if j in obs else "predicted" for j in range(energy.size)
    )
    return PredictionResult(
        power=power_row,
        time=time_row,
        energy=energy,
        chosen=chosen,
        provenance=provenance,
        clamped=tuple(clamped),
        converged=converged,
    )


def _predict_from_rows(
    matrix: TrainingMatrix,
    train_power: np.ndarray,
    train_time: np.ndarray,
    samples: SampleSet,
    params: EstimatorParams,
    feature_mode: str,
) -> PredictionResult:
    if len(samples.config_indices) < params.min_samples:
        raise InsufficientSamplesError(
            f"got {len(samples.config_indices)} samples, need >= {params.min_samples}"
        )
    if np.isnan(train_power).any() or np.isnan(train_time).any():
        raise ValueError("training rows must be fully observed")
    feats = feature_matrix(matrix, feature_mode)
    idx = samples.config_indices

    def _complete(rows, values, log_domain):
        try:
            return complete_row(rows, idx, values, feats, params, log_domain=log_domain)
        except RankDeficiencyError:
            # Common, not exceptional: a two-level predictor (e.g. memory
            # controllers) makes its square exactly collinear whenever the
            # draw misses the other platform, so fall back to a light ridge
            # rather than aborting; EM refines past the init anyway.
            fallback = replace(params, ridge=max(params.ridge, 1e-8))
            return complete_row(rows, idx, values, feats, fallback, log_domain=log_domain)

    p_state, power_row = _complete(train_power, samples.power, False)
    t_state, time_row = _complete(train_time, samples.time, params.log_time)
    return predict_energy(
        power_row,
        time_row,
        matrix.system,
        observed_idx=idx,
        static_included=matrix.static_augmented,
        min_observed_time=float(np.min(train_time)),
        converged=p_state.converged and t_state.converged,
    )


def predict_best_config(
    matrix: TrainingMatrix,
    app_id: int,
    plan: SamplePlan,
    params: EstimatorParams | None = None,
    feature_mode: str = FEATURES_UNIFIED,
) -> PredictionResult:
    """End-to-end holistic prediction for one application of the matrix.

    Leave-one-application-out masking, regression-initialized EM completion
    of the power and time rows, then whole-system energy minimization over
    every configuration of every platform.
    """
    params = params or EstimatorParams()
    view, samples = mask_application(matrix, app_id, plan)
    return _predict_from_rows(
        matrix, view.power, view.time, samples, params, feature_mode
    )


def predict_new_app(
    matrix: TrainingMatrix,
    samples: SampleSet,
    params: EstimatorParams | None = None,
    feature_mode: str = FEATURES_UNIFIED,
) -> PredictionResult:
    """Prediction for an application that is not part of the training
    matrix: every training row participates, no masking."""
    params = params or EstimatorParams()
    return _predict_from_rows(
        matrix, matrix.power, matrix.time, samples, params, feature_mode
    )
