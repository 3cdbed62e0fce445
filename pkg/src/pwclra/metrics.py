"""Error metrics and SNR bookkeeping."""

from __future__ import annotations

import numpy as np

from .channel import ChannelRealization
from .errors import CalibrationError, UndefinedMetricError


def nmse_per_user(estimates, truth) -> np.ndarray:
    """``||H_hat_k - H_k||_F^2 / ||H_k||_F^2`` for every user."""
    est = np.asarray(estimates)
    ref = np.asarray(truth)
    if est.shape != ref.shape:
        raise UndefinedMetricError(f"shape mismatch {est.shape} vs {ref.shape}")
    if ref.ndim == 2:
        est, ref = est[None], ref[None]
    energy = np.sum(np.abs(ref) ** 2, axis=(1, 2))
    if np.any(energy == 0):
        raise UndefinedMetricError("a true channel has zero energy")
    return np.sum(np.abs(est - ref) ** 2, axis=(1, 2)) / energy


def nmse(estimates, truth) -> float:
    """User-averaged normalized mean-square error (linear)."""
    return float(np.mean(nmse_per_user(estimates, truth)))


def to_db(x: float) -> float:
    return float(10 * np.log10(x)) if x > 0 else float("-inf")


def cascaded_energy(channels: ChannelRealization, v=None) -> np.ndarray:
    """``||H_k^tot(v)||_F^2`` per user; ``v`` defaults to all-ones."""
    if v is None:
        v = np.ones(channels.h_rb.shape[1])
    return np.sum(np.abs(channels.h_tot(v)) ** 2, axis=(1, 2))


def user_snr(channels: ChannelRealization, power: float, sigma2: float, v=None) -> np.ndarray:
    """Per-user SNR ``rho_k = P ||H_k^tot(v)||^2 / sigma2`` (``inf`` without noise)."""
    e = cascaded_energy(channels, v)
    if sigma2 == 0:
        return np.full(e.shape, np.inf)
    return power * e / sigma2


def snr_to_power(snr_db: float, channels: ChannelRealization, sigma2: float,
                 reference_v=None) -> float:
    """Transmit power making the user-averaged ``rho_k`` equal ``snr_db``."""
    mean_energy = float(np.mean(cascaded_energy(channels, reference_v)))
    if mean_energy <= 0:
        raise CalibrationError("cascaded channel has zero energy; cannot calibrate power")
    return 10 ** (snr_db / 10) * sigma2 / mean_energy
