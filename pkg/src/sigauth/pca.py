"""Correlation-matrix PCA via SVD, plus projection of feature vectors.

The model standardizes features with the population mean and the square roots
of the covariance diagonal, forms the correlation matrix by the elementwise
quotient corr_ij = cov_ij / (s_i * s_j), and keeps the leading singular
vectors covering a target share of the spectrum.  Constant (zero-variance)
columns are dropped behind a recorded keep-mask that projection re-applies.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFeatureError, DimensionMismatchError

VARIANCE_EPS = 1e-12
SYMMETRY_TOL = 1e-9

DEFAULT_VARIANCE_TARGET = 0.95
DEFAULT_MAX_COMPONENTS = 32


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Fitted standardize-and-project model.

    ``mu`` and ``keep`` live in the original feature space; ``sigma``,
    ``corr``, ``basis`` and ``singular_values`` are over the kept columns.
    """

    mu: np.ndarray               # (D0,)
    keep: np.ndarray             # (D0,) bool column mask
    sigma: np.ndarray            # (D,)
    corr: np.ndarray             # (D, D)
    basis: np.ndarray            # (D, k)
    singular_values: np.ndarray  # (D,) nonincreasing
    k: int

    @property
    def n_features(self) -> int:
        return self.mu.shape[0]

    def to_dict(self) -> dict:
        return {
            "mu": self.mu.tolist(),
            "keep": [bool(b) for b in self.keep],
            "sigma": self.sigma.tolist(),
            "corr": self.corr.tolist(),
            "basis": self.basis.tolist(),
            "singular_values": self.singular_values.tolist(),
            "k": int(self.k),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(
            mu=np.asarray(d["mu"], dtype=float),
            keep=np.asarray(d["keep"], dtype=bool),
            sigma=np.asarray(d["sigma"], dtype=float),
            corr=np.asarray(d["corr"], dtype=float),
            basis=np.asarray(d["basis"], dtype=float),
            singular_values=np.asarray(d["singular_values"], dtype=float),
            k=int(d["k"]),
        )


def pca_model_id(model: PcaModel) -> str:
    """Content hash identifying a fitted model (used as the store reference)."""
    canonical = json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def correlation_from_covariance(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature std (sqrt of the diagonal) and the correlation matrix.

    Raises DEGENERATE_FEATURE naming the first column whose variance is
    effectively zero; the caller must drop or jitter that column.
    """
    cov = np.asarray(cov, dtype=float)
    diag = np.diag(cov)
    bad = np.where(diag <= VARIANCE_EPS)[0]
    if bad.size:
        raise DegenerateFeatureError(
            "feature column %d has (near-)zero variance" % bad[0], column=int(bad[0])
        )
    sigma = np.sqrt(diag)
    corr = cov / np.outer(sigma, sigma)
    return sigma, corr


def fit_pca(
    corr: np.ndarray,
    variance_target: float,
    max_components: int | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """SVD the correlation matrix and keep the smallest spectrum-covering basis.

    Returns (basis, singular_values, k) where k is the least component count
    whose cumulative singular-value share reaches ``variance_target`` (capped
    at ``max_components`` when given).  Each basis column is sign-fixed so its
    largest-magnitude entry is positive.
    """
    corr = np.asarray(corr, dtype=float)
    if not 0.0 < variance_target <= 1.0:
        raise ValueError("variance_target must be in (0, 1]")
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ValueError("correlation matrix must be square")
    if np.max(np.abs(corr - corr.T)) > SYMMETRY_TOL:
        raise ValueError("correlation matrix is not symmetric")

    u, s, _ = np.linalg.svd(corr)
    ratios = np.cumsum(s) / np.sum(s)
    k = int(np.searchsorted(ratios, variance_target - 1e-15) + 1)
    k = min(k, corr.shape[0])
    if max_components is not None:
        k = min(k, int(max_components))

    basis = u[:, :k].copy()
    for j in range(k):
        lead = np.argmax(np.abs(basis[:, j]))
        if basis[lead, j] < 0:
            basis[:, j] = -basis[:, j]
    return basis, s, k


def build_model(
    mu: np.ndarray,
    cov: np.ndarray,
    variance_target: float = DEFAULT_VARIANCE_TARGET,
    max_components: int | None = DEFAULT_MAX_COMPONENTS,
) -> PcaModel:
    """Fit a full model from population mean and covariance.

    Zero-variance columns are dropped (mask recorded on the model) before the
    correlation step, so downstream projection stays total.
    """
    mu = np.asarray(mu, dtype=float)
    cov = np.asarray(cov, dtype=float)
    diag = np.diag(cov)
    keep = diag > VARIANCE_EPS
    if not np.any(keep):
        raise DegenerateFeatureError("all feature columns are constant", column=0)
    reduced = cov[np.ix_(keep, keep)]
    sigma, corr = correlation_from_covariance(reduced)
    basis, singular_values, k = fit_pca(corr, variance_target, max_components)
    return PcaModel(
        mu=mu, keep=keep, sigma=sigma, corr=corr,
        basis=basis, singular_values=singular_values, k=k,
    )


def project(model: PcaModel, x) -> np.ndarray:
    """Standardize a feature vector and project it onto the retained basis."""
    x = np.asarray(getattr(x, "values", x), dtype=float)
    if x.shape != (model.n_features,):
        raise DimensionMismatchError(
            "expected feature vector of length %d, got %s"
            % (model.n_features, x.shape)
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("feature vector contains non-finite values")
    z = (x[model.keep] - model.mu[model.keep]) / model.sigma
    return z @ model.basis


def project_rows(model: PcaModel, rows: np.ndarray) -> np.ndarray:
    """Vectorized ``project`` over the rows of an (N, D0) matrix."""
    rows = np.asarray(getattr(rows, "values", rows), dtype=float)
    z = (rows[:, model.keep] - model.mu[model.keep]) / model.sigma
    return z @ model.basis
