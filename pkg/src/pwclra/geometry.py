"""Explicit 3-D element positions for uniform linear and planar arrays.

Conventions: ULAs extend along the global y-axis and UPAs span the y-z
plane.  Both are centered on their placement point.  Elements of a UPA are
ordered with y as the outer (slow) index so that contiguous index blocks
form spatially compact sub-arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError


class ArrayKind(str, Enum):
    ULA = "ULA"
    UPA = "UPA"


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions of an antenna (or reflecting-element) array.

    Attributes
    ----------
    element_positions : np.ndarray
        ``(n, 3)`` array of coordinates in meters.
    kind : ArrayKind
    spacing : float
        Distance between adjacent elements in meters.
    reference_point : np.ndarray
        Placement coordinate (array center) in meters.
    shape : tuple of int
        ``(n,)`` for a ULA, ``(n_y, n_z)`` for a UPA.
    """

    element_positions: np.ndarray
    kind: ArrayKind
    spacing: float
    reference_point: np.ndarray
    shape: tuple

    @property
    def n_elements(self) -> int:
        return self.element_positions.shape[0]

    def __len__(self) -> int:
        return self.n_elements


def _centered_offsets(n: int, spacing: float) -> np.ndarray:
    return (np.arange(n) - (n - 1) / 2.0) * spacing


def ula(n: int, spacing: float, center) -> ArrayGeometry:
    """Uniform linear array of ``n`` elements along the y-axis."""
    if n < 1:
        raise ConfigurationError(f"array needs at least one element, got {n}")
    if spacing <= 0:
        raise ConfigurationError(f"element spacing must be positive, got {spacing}")
    center = np.asarray(center, dtype=float).reshape(3)
    pos = np.tile(center, (n, 1))
    pos[:, 1] += _centered_offsets(n, spacing)
    return ArrayGeometry(pos, ArrayKind.ULA, float(spacing), center, (n,))


def upa(n_y: int, n_z: int, spacing: float, center) -> ArrayGeometry:
    """Uniform planar array of ``n_y * n_z`` elements in the y-z plane."""
    if n_y < 1 or n_z < 1:
        raise ConfigurationError(f"UPA needs positive dimensions, got {n_y}x{n_z}")
    if spacing <= 0:
        raise ConfigurationError(f"element spacing must be positive, got {spacing}")
    center = np.asarray(center, dtype=float).reshape(3)
    yy, zz = np.meshgrid(_centered_offsets(n_y, spacing), _centered_offsets(n_z, spacing),
                         indexing="ij")
    pos = np.tile(center, (n_y * n_z, 1))
    pos[:, 1] += yy.ravel()
    pos[:, 2] += zz.ravel()
    return ArrayGeometry(pos, ArrayKind.UPA, float(spacing), center, (n_y, n_z))


def aperture(geom: ArrayGeometry) -> float:
    """Largest distance between two elements of the array."""
    p = geom.element_positions
    lo, hi = p.min(axis=0), p.max(axis=0)
    return float(np.linalg.norm(hi - lo))
