"""GP surrogate: data container, output transform, exact GP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gp import (VAR_FLOOR, CholeskyError, FitConfig, GpModel, Posterior, build_model, fit,
                 log_marginal_likelihood, lml_and_grad, matern52, matern52_ard, posterior,
                 psd_cholesky, robust_cholesky)
from .transform import PowerTransform

__all__ = ["Dataset", "PowerTransform", "FitConfig", "GpModel", "Posterior", "CholeskyError",
           "VAR_FLOOR", "build_model", "fit", "log_marginal_likelihood", "lml_and_grad",
           "matern52", "matern52_ard", "posterior", "psd_cholesky", "robust_cholesky",
           "to_unit", "from_unit"]


def to_unit(x, bounds) -> np.ndarray:
    bounds = np.asarray(bounds, dtype=float)
    return (np.asarray(x, dtype=float) - bounds[:, 0]) / (bounds[:, 1] - bounds[:, 0])


def from_unit(u, bounds) -> np.ndarray:
    bounds = np.asarray(bounds, dtype=float)
    return bounds[:, 0] + np.asarray(u, dtype=float) * (bounds[:, 1] - bounds[:, 0])


@dataclass(frozen=True, eq=False)
class Dataset:
    """Evaluated points in original and unit-cube coordinates."""

    inputs_raw: np.ndarray
    inputs_unit: np.ndarray
    targets_raw: np.ndarray
    targets_tf: np.ndarray
    bounds: np.ndarray
    transform: PowerTransform

    @classmethod
    def from_raw(cls, x_raw, y_raw, bounds) -> "Dataset":
        x_raw = np.atleast_2d(np.asarray(x_raw, dtype=float))
        y_raw = np.asarray(y_raw, dtype=float).ravel()
        bounds = np.asarray(bounds, dtype=float)
        if bounds.shape != (x_raw.shape[1], 2):
            raise ValueError(f"bounds must have shape ({x_raw.shape[1]}, 2)")
        if np.any(bounds[:, 0] >= bounds[:, 1]):
            raise ValueError("every lower bound must be below its upper bound")
        if x_raw.shape[0] != y_raw.size:
            raise ValueError(f"{x_raw.shape[0]} inputs but {y_raw.size} targets")
        tf = PowerTransform.fit(y_raw)
        return cls(x_raw, to_unit(x_raw, bounds), y_raw, tf.apply(y_raw), bounds, tf)

    def __len__(self) -> int:
        return self.targets_raw.size

    @property
    def dim(self) -> int:
        return self.inputs_raw.shape[1]
