"""Gaussian-process regression with a squared-exponential kernel.

One model serves all n output dimensions: the inputs, kernel and cached
Cholesky factorization are shared, and only the target columns differ.
New points enter the training set through a cost gate that compares the
candidate target with the current prediction, so redundant samples are
never stored.

Noise enters the covariance exactly once, as sigma_n^2 on the diagonal of
the training Gram matrix. Cross-covariances (train/query) use the
noise-free kernel, which preserves exact interpolation as the noise
variance goes to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.spatial.distance import cdist

from . import systems
from .systems import DimensionMismatchError, as_state

# Relative diagonal jitter, always applied on top of the noise variance so
# the factorization survives duplicate or near-duplicate inputs.
JITTER_SCALE = 1e-10

# Extension pivots below this trigger a full refactorization.
_PIVOT_FLOOR = 1e-8

# A zero acceptance threshold means "accept everything with nonzero cost".
_CBAR_FLOOR = 1e-12


class NumericalError(RuntimeError):
    """Factorization failed despite jitter; carries a condition report."""


class FitError(ValueError):
    """Hyperparameter fitting is impossible on the given data."""


@dataclass(frozen=True)
class Hyperparameters:
    """Squared-exponential kernel hyperparameters.

    Attributes
    ----------
    signal_variance : float
        Kernel amplitude sigma_k^2 (> 0), squared output units.
    length_scale : float
        The l dividing the squared distance in the exponent (> 0),
        squared input units.
    noise_variance : float
        Observation noise sigma_n^2 (>= 0).
    """

    signal_variance: float = 1.0
    length_scale: float = 3.0
    noise_variance: float = 0.4

    def __post_init__(self):
        if self.signal_variance <= 0:
            raise ValueError(f"signal_variance must be > 0, got {self.signal_variance}")
        if self.length_scale <= 0:
            raise ValueError(f"length_scale must be > 0, got {self.length_scale}")
        if self.noise_variance < 0:
            raise ValueError(f"noise_variance must be >= 0, got {self.noise_variance}")

    def to_dict(self):
        return {
            "sk2": self.signal_variance,
            "l": self.length_scale,
            "sn2": self.noise_variance,
        }

    @staticmethod
    def from_dict(d):
        return Hyperparameters(d["sk2"], d["l"], d["sn2"])


#: Hand-tuned defaults that work on meter-scale teaching data.
DEFAULT_HYPER = Hyperparameters(signal_variance=1.0, length_scale=3.0, noise_variance=0.4)


class Prediction(NamedTuple):
    """Predictive mean over all output dims and the shared scalar variance."""

    mean: np.ndarray
    variance: float


class AddResult(NamedTuple):
    added: bool
    cost: float


def kernel(xi, xj, hyper: Hyperparameters) -> float:
    """Noise-free squared-exponential covariance between two states."""
    xi = as_state(xi)
    xj = as_state(xj, xi.size)
    d2 = float(np.sum((xi - xj) ** 2))
    return hyper.signal_variance * math.exp(-d2 / (2.0 * hyper.length_scale))


def kernel_matrix(A, B, hyper: Hyperparameters) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d2 = cdist(A, B, "sqeuclidean")
    return hyper.signal_variance * np.exp(-d2 / (2.0 * hyper.length_scale))


class GpModel:
    """Exact GP over a shared input set with incremental point insertion.

    The lower Cholesky factor of (K_XX + sigma_n^2 I + jitter I) is cached
    and extended by one row per accepted point; a full refactorization is
    the fallback when the extension pivot degenerates.

    Thread contract: predict() is read-only and may run concurrently;
    incremental_add() and other mutations require exclusive access.
    """

    def __init__(self, dim: int, hyper: Hyperparameters = DEFAULT_HYPER):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self.hyper = hyper
        self._X = np.empty((0, self.dim))
        self._Y = np.empty((0, self.dim))
        self._L = np.empty((0, 0))
        self._alpha = np.empty((0, self.dim))

    # -- construction ----------------------------------------------------

    @classmethod
    def from_data(cls, X, Y, hyper: Hyperparameters = DEFAULT_HYPER) -> "GpModel":
        """Build a model from batch data with a from-scratch factorization."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape != Y.shape:
            raise DimensionMismatchError(f"inputs {X.shape} vs outputs {Y.shape}")
        model = cls(X.shape[1], hyper)
        model._X = X.copy()
        model._Y = Y.copy()
        model._refactorize()
        return model

    def copy(self) -> "GpModel":
        other = GpModel(self.dim, self.hyper)
        other._X = self._X.copy()
        other._Y = self._Y.copy()
        other._L = self._L.copy()
        other._alpha = self._alpha.copy()
        return other

    # -- state -----------------------------------------------------------

    @property
    def size(self) -> int:
        return self._X.shape[0]

    @property
    def is_empty(self) -> bool:
        return self.size == 0

    @property
    def inputs(self) -> np.ndarray:
        return self._X.copy()

    @property
    def outputs(self) -> np.ndarray:
        return self._Y.copy()

    def _diag_term(self) -> float:
        return self.hyper.noise_variance + JITTER_SCALE * self.hyper.signal_variance

    def _refactorize(self):
        K = kernel_matrix(self._X, self._X, self.hyper)
        K[np.diag_indices_from(K)] += self._diag_term()
        try:
            self._L = np.linalg.cholesky(K)
        except np.linalg.LinAlgError as exc:
            cond = float(np.linalg.cond(K))
            raise NumericalError(
                f"training covariance is not positive definite despite jitter "
                f"(T={self.size}, cond~{cond:.3e})"
            ) from exc
        self._alpha = cho_solve((self._L, True), self._Y)

    # -- queries ----------------------------------------------------------

    def predict(self, x) -> Prediction:
        """Predictive mean and variance at a query state.

        An empty model returns the zero-mean prior: mean 0, variance equal
        to the signal variance.
        """
        x = as_state(x, self.dim)
        if self.is_empty:
            return Prediction(np.zeros(self.dim), self.hyper.signal_variance)
        ks = kernel_matrix(self._X, x[None, :], self.hyper)[:, 0]
        mean = ks @ self._alpha
        v = solve_triangular(self._L, ks, lower=True)
        var = self.hyper.signal_variance - float(v @ v)
        return Prediction(mean, max(var, 0.0))

    # -- mutation ----------------------------------------------------------

    def incremental_add(self, x_new, lam_new, cbar: float) -> AddResult:
        """Gate a candidate training pair on prediction-error cost.

        The cost is the Euclidean norm, across all output dimensions, of
        the difference between the candidate target and the current
        predictive mean. The pair is stored only when the cost exceeds
        `cbar`, i.e. when the model cannot already reproduce it.
        """
        x_new = as_state(x_new, self.dim)
        lam_new = as_state(lam_new, self.dim)
        cbar = max(float(cbar), _CBAR_FLOOR)
        cost = float(np.linalg.norm(lam_new - self.predict(x_new).mean))
        if cost <= cbar:
            return AddResult(False, cost)
        self._append(x_new, lam_new)
        return AddResult(True, cost)

    def _append(self, x_new, lam_new):
        if self.is_empty:
            self._X = x_new[None, :].copy()
            self._Y = lam_new[None, :].copy()
            self._refactorize()
            return
        b = kernel_matrix(self._X, x_new[None, :], self.hyper)[:, 0]
        d = self.hyper.signal_variance + self._diag_term()
        row = solve_triangular(self._L, b, lower=True)
        pivot_sq = d - float(row @ row)
        self._X = np.vstack([self._X, x_new])
        self._Y = np.vstack([self._Y, lam_new])
        if pivot_sq <= 0 or math.sqrt(pivot_sq) < _PIVOT_FLOOR:
            self._refactorize()
            return
        T = self._L.shape[0]
        L = np.zeros((T + 1, T + 1))
        L[:T, :T] = self._L
        L[T, :T] = row
        L[T, T] = math.sqrt(pivot_sq)
        self._L = L
        self._alpha = cho_solve((self._L, True), self._Y)

    def reset(self):
        """Drop all training data, keeping dimension and hyperparameters."""
        self._X = np.empty((0, self.dim))
        self._Y = np.empty((0, self.dim))
        self._L = np.empty((0, 0))
        self._alpha = np.empty((0, self.dim))

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "hyper": self.hyper.to_dict(),
            "dim": self.dim,
            "inputs": self._X.tolist(),
            "outputs": self._Y.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "GpModel":
        hyper = Hyperparameters.from_dict(d["hyper"])
        inputs = d.get("inputs", [])
        if len(inputs) == 0:
            return GpModel(d["dim"], hyper)
        model = GpModel.from_data(inputs, d["outputs"], hyper)
        return model

    def __repr__(self):
        return f"<GpModel dim={self.dim} T={self.size}>"


def marginal_log_likelihood(X, Y, hyper: Hyperparameters) -> float:
    """Gaussian evidence of the targets, summed over output dimensions."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    T, n = Y.shape
    if T < 1:
        raise ValueError("need at least one training point")
    K = kernel_matrix(X, X, hyper)
    K[np.diag_indices_from(K)] += hyper.noise_variance + JITTER_SCALE * hyper.signal_variance
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"covariance not positive definite (T={T}, cond~{float(np.linalg.cond(K)):.3e})"
        ) from exc
    alpha = cho_solve((L, True), Y)
    logdet = float(np.sum(np.log(np.diag(L))))
    quad = float(np.sum(Y * alpha))
    return -0.5 * quad - n * logdet - 0.5 * n * T * math.log(2.0 * math.pi)


def fit_hyperparameters(X, Y, init: Hyperparameters, budget: int = 90) -> Hyperparameters:
    """Maximize the marginal log-likelihood by coordinate search in log space.

    Derivative-free: each coordinate (log signal variance, log length
    scale, log noise variance) is probed with multiplicative steps that
    shrink whenever a full sweep fails to improve. `budget` caps the
    number of likelihood evaluations; 0 returns `init` unchanged. The
    result never has a lower likelihood than `init`.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] < 2:
        raise FitError("need at least two training points to fit hyperparameters")
    if np.ptp(X, axis=0).max() == 0:
        raise FitError("all training inputs are identical; length scale is unidentifiable")
    if budget <= 0:
        return init

    # Noise is searched in log space, so an exactly-zero init gets a floor.
    theta = np.log([
        init.signal_variance,
        init.length_scale,
        max(init.noise_variance, 1e-12),
    ])

    def likelihood(t):
        return marginal_log_likelihood(X, Y, Hyperparameters(*np.exp(t)))

    best = likelihood(theta)
    evals = 1
    step = math.log(4.0)
    while evals < budget and step > 1e-3:
        improved = False
        for i in range(3):
            for sign in (1.0, -1.0):
                if evals >= budget:
                    break
                cand = theta.copy()
                cand[i] += sign * step
                try:
                    ll = likelihood(cand)
                except NumericalError:
                    evals += 1
                    continue
                evals += 1
                if ll > best:
                    theta, best = cand, ll
                    improved = True
                    break
        if not improved:
            step *= 0.5
    sk2, l, sn2 = np.exp(theta)
    return Hyperparameters(sk2, l, sn2)


class GpField(systems.DynamicalSystem):
    """A dynamical system whose field is the predictive mean of a GP.

    Used for originals learned directly from demonstrations. No
    equilibrium can be verified for such a field, so the stability flag is
    always unstable-unknown and convergence claims downstream are refused.
    """

    kind = "gp-learned"

    def __init__(self, model: GpModel, goal):
        self.model = model
        super().__init__(goal, stability=systems.UNSTABLE_UNKNOWN)
        if self.dimension != model.dim:
            raise DimensionMismatchError(
                f"goal dimension {self.dimension} vs model dimension {model.dim}"
            )

    def _field(self, x):
        return self.model.predict(x).mean

    def parameters(self):
        return {"model": self.model.to_dict()}


systems.register_kind("gp-learned", lambda d: GpField(GpModel.from_dict(d["parameters"]["model"]), d["goal"]))
