"""Estimator-style wrappers around the identification chain.

These follow the scikit-learn conventions (constructor params mirrored as
attributes, fit/transform/predict, fitted attributes with a trailing
underscore) so the chain composes with standard tooling.  Data is a 2-D
float array with samples along axis 0; each column is one recorded trial of
the same length and sample rate.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import ParameterError
from .signal import (
    Trace,
    TraceUnit,
    aggregate_trials,
    butterworth_lowpass,
    calibrate_linear,
    estimate_from_trace,
)

__all__ = ["as_trial_matrix", "ZeroPhaseLowpass", "LogDecrementEstimator",
           "LinearCalibration"]


def as_trial_matrix(X) -> np.ndarray:
    """Validate trial data: finite 2-D float array, samples along axis 0.

    A single 1-D trace is accepted and reshaped to one column.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    if X.ndim != 2:
        raise ParameterError(f"expected 1-D or 2-D data, got shape {X.shape}")
    if X.shape[0] < 2:
        raise ParameterError("need at least 2 samples per trial")
    if not np.all(np.isfinite(X)):
        raise ParameterError("data must be finite")
    return X


class ZeroPhaseLowpass(TransformerMixin, BaseEstimator):
    """Column-wise zero-phase Butterworth low-pass as a transformer."""

    def __init__(self, cutoff_hz: float = 10.0, order: int = 2,
                 sample_rate_hz: float = 100.0):
        self.cutoff_hz = cutoff_hz
        self.order = order
        self.sample_rate_hz = sample_rate_hz

    def fit(self, X, y=None):
        as_trial_matrix(X)
        return self

    def transform(self, X) -> np.ndarray:
        X = as_trial_matrix(X)
        out = np.empty_like(X)
        for j in range(X.shape[1]):
            trace = Trace(self.sample_rate_hz, X[:, j], TraceUnit.ANGLE_RAD)
            out[:, j] = butterworth_lowpass(trace, self.cutoff_hz,
                                            self.order).values
        return out


class LogDecrementEstimator(BaseEstimator):
    """Joint stiffness and damping from free-decay trials.

    fit runs the full chain (low-pass, peak detection, decrement,
    coefficients) on every column of X and aggregates across columns.
    Fitted attributes: estimates_ (per trial), aggregate_, stiffness_k_,
    damping_b_.
    """

    def __init__(self, inertia_A: float | None = None,
                 sample_rate_hz: float = 100.0, cutoff_hz: float = 10.0,
                 filter_order: int = 2, min_prominence_frac: float = 0.10):
        self.inertia_A = inertia_A
        self.sample_rate_hz = sample_rate_hz
        self.cutoff_hz = cutoff_hz
        self.filter_order = filter_order
        self.min_prominence_frac = min_prominence_frac

    def fit(self, X, y=None):
        if self.inertia_A is None:
            raise ParameterError("inertia_A must be set before fitting")
        X = as_trial_matrix(X)
        estimates = []
        for j in range(X.shape[1]):
            trace = Trace(self.sample_rate_hz, X[:, j], TraceUnit.ANGLE_RAD)
            estimates.append(estimate_from_trace(
                trace, self.inertia_A, cutoff_hz=self.cutoff_hz,
                filter_order=self.filter_order,
                min_prominence_frac=self.min_prominence_frac))
        self.estimates_ = estimates
        self.aggregate_ = aggregate_trials(estimates)
        self.stiffness_k_ = self.aggregate_.stiffness_k
        self.damping_b_ = self.aggregate_.damping_b
        return self


class LinearCalibration(RegressorMixin, BaseEstimator):
    """Least-squares line from a raw sensor channel to a reference unit."""

    def fit(self, X, y):
        X = as_trial_matrix(X)
        if X.shape[1] != 1:
            raise ParameterError("calibration expects a single raw channel")
        y = np.asarray(y, dtype=float).ravel()
        # the common sample rate is irrelevant to the fit; tag with 1 Hz
        fit = calibrate_linear(Trace(1.0, X[:, 0], TraceUnit.VOLTAGE_MV),
                               Trace(1.0, y, TraceUnit.ANGLE_DEG))
        self.slope_ = fit.slope
        self.intercept_ = fit.intercept
        self.r_squared_ = fit.r_squared
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "slope_"):
            raise NotFittedError("LinearCalibration is not fitted yet")
        X = as_trial_matrix(X)
        return self.slope_ * X[:, 0] + self.intercept_
