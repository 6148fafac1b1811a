"""Constant-velocity Kalman filter on ``[xc, yc, w, h, vxc, vyc, vw, vh]``.

All noise standard deviations scale with the current box height. Platform
motion is removed from predicted states by ``apply_platform_compensation``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigInvalid, InvalidMeasurement, NumericalFailure
from .geometry import AffineTransform2D, Box2D

NDIM = 4
_F = np.eye(2 * NDIM)
_F[:NDIM, NDIM:] = np.eye(NDIM)
_H = np.eye(NDIM, 2 * NDIM)


@dataclass
class KalmanConfig:
    position_weight: float = 1.0 / 20
    velocity_weight: float = 1.0 / 160
    dt: float = 1.0

    def __post_init__(self):
        if not self.position_weight > 0:
            raise ConfigInvalid("position_weight must be > 0")
        if not self.velocity_weight > 0:
            raise ConfigInvalid("velocity_weight must be > 0")
        if self.dt != 1.0:
            raise ConfigInvalid("dt is fixed at 1 frame")


@dataclass(frozen=True, eq=False)
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray

    def copy(self) -> KalmanState:
        return KalmanState(self.mean.copy(), self.covariance.copy())


def _height(mean: np.ndarray) -> float:
    # Noise model must stay positive even if a box collapses.
    return max(float(mean[3]), 1e-3)


def initiate(measurement: Box2D, cfg: KalmanConfig | None = None) -> KalmanState:
    cfg = cfg or KalmanConfig()
    z = measurement.to_xyah()
    if not np.all(np.isfinite(z)) or measurement.w <= 0 or measurement.h <= 0:
        raise InvalidMeasurement(f"cannot start a track from {measurement!r}")
    mean = np.r_[z, np.zeros(NDIM)]
    h = measurement.h
    std = np.r_[
        np.full(NDIM, 2.0 * cfg.position_weight * h),
        np.full(NDIM, 10.0 * cfg.velocity_weight * h),
    ]
    return KalmanState(mean, np.diag(std**2))


def predict(state: KalmanState, cfg: KalmanConfig | None = None) -> KalmanState:
    cfg = cfg or KalmanConfig()
    h = _height(state.mean)
    std = np.r_[
        np.full(NDIM, cfg.position_weight * h),
        np.full(NDIM, cfg.velocity_weight * h),
    ]
    mean = _F @ state.mean
    cov = _F @ state.covariance @ _F.T + np.diag(std**2)
    return KalmanState(mean, 0.5 * (cov + cov.T))


def _block_linear(m: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(NDIM), m)


def apply_platform_compensation(state: KalmanState, T: AffineTransform2D) -> KalmanState:
    """Map a predicted state from frame k-1 image coordinates into frame k.

    The 2x2 linear part acts on each of the (x, y), (w, h), (vx, vy), (vw, vh)
    pairs; the translation only moves the centre.
    """
    M = _block_linear(T.m)
    mean = M @ state.mean
    mean[:2] += T.t
    cov = M @ state.covariance @ M.T
    return KalmanState(mean, 0.5 * (cov + cov.T))


def project(state: KalmanState, cfg: KalmanConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Measurement-space mean and innovation covariance."""
    cfg = cfg or KalmanConfig()
    h = _height(state.mean)
    r = np.full(NDIM, (cfg.position_weight * h) ** 2)
    mean = _H @ state.mean
    cov = _H @ state.covariance @ _H.T + np.diag(r)
    return mean, cov


def update(state: KalmanState, measurement: Box2D, cfg: KalmanConfig | None = None) -> KalmanState:
    cfg = cfg or KalmanConfig()
    z = measurement.to_xyah()
    proj_mean, proj_cov = project(state, cfg)
    try:
        chol = scipy.linalg.cho_factor(proj_cov, lower=True, check_finite=True)
        gain = scipy.linalg.cho_solve(chol, (state.covariance @ _H.T).T, check_finite=True).T
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"innovation covariance solve failed: {e}") from e
    innovation = z - proj_mean
    mean = state.mean + gain @ innovation
    # Joseph form keeps the posterior symmetric PSD.
    r = proj_cov - _H @ state.covariance @ _H.T
    ikh = np.eye(2 * NDIM) - gain @ _H
    cov = ikh @ state.covariance @ ikh.T + gain @ r @ gain.T
    cov = 0.5 * (cov + cov.T)
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise NumericalFailure("non-finite posterior")
    return KalmanState(mean, cov)


def state_to_box(state: KalmanState) -> Box2D:
    xc, yc, w, h = state.mean[:NDIM]
    return Box2D.from_center(xc, yc, w, h)


def state_to_tlwh(state: KalmanState) -> np.ndarray:
    xc, yc, w, h = state.mean[:NDIM]
    w = max(w, 0.0)
    h = max(h, 0.0)
    return np.array([xc - w / 2.0, yc - h / 2.0, w, h])
