"""System configuration of the RIS-assisted multi-user uplink."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError
from .geometry import ArrayGeometry, ArrayKind, ula, upa

SPEED_OF_LIGHT = 299_792_458.0

USER_MODELS = ("near-field", "gaussian")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """All parameters of one simulated system.

    Powers are linear (watts), lengths are meters.  ``user_positions`` of
    ``None`` means user centers are drawn per realization, with x uniform in
    ``user_x_range_m`` and fixed y/z from ``user_yz_m``.
    """

    n_bs: int = 32
    n_rf: int = 4
    m_ris: int = 64
    q_pieces: int = 4
    k_users: int = 4
    l_user: int = 2
    t_pilot: int | None = None
    power: float = 1.0
    sigma2: float = dbm_to_watts(-169.0)
    f_c: float = 50e9
    bs_position: tuple = (50.0, 20.0, 5.0)
    ris_position: tuple = (0.0, 0.0, 10.0)
    user_positions: tuple | None = None
    user_x_range_m: tuple = (20.0, 30.0)
    user_yz_m: tuple = (-20.0, 5.0)
    n_nlos_rb: int = 3
    n_nlos_ur: int = 3
    nlos_gain: complex = 1.0
    user_model: str = "near-field"
    user_gaussian_variance: float = 1.0
    ris_geometry: ArrayKind = ArrayKind.ULA
    ris_upa_shape: tuple | None = None
    scatterer_clearance_m: float = 1.0
    rng_seed: int = 0
    spacing_fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "ris_geometry", ArrayKind(self.ris_geometry))
        if self.t_pilot is None:
            object.__setattr__(self, "t_pilot", self.k_users * self.l_user)
        self.validate()

    # derived quantities
    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    @property
    def spacing(self) -> float:
        return self.spacing_fraction * self.wavelength

    @property
    def b_groups(self) -> int:
        return self.n_bs // self.n_rf

    @property
    def m_sub(self) -> int:
        return self.m_ris // self.q_pieces

    @property
    def overhead(self) -> int:
        return self.q_pieces * self.b_groups + self.m_ris

    def validate(self) -> None:
        for name in ("n_bs", "n_rf", "m_ris", "q_pieces", "k_users", "l_user", "t_pilot"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.n_bs % self.n_rf:
            raise ConfigurationError(
                f"N={self.n_bs} is not a multiple of N_RF={self.n_rf}")
        if self.m_ris % self.q_pieces:
            raise ConfigurationError(
                f"M={self.m_ris} is not a multiple of Q={self.q_pieces}")
        if self.t_pilot < self.k_users * self.l_user:
            raise ConfigurationError(
                f"pilot length T={self.t_pilot} is shorter than K*L={self.k_users * self.l_user}")
        if self.power <= 0 or not math.isfinite(self.power):
            raise ConfigurationError(f"transmit power must be positive, got {self.power}")
        if self.sigma2 < 0:
            raise ConfigurationError(f"noise variance must be >= 0, got {self.sigma2}")
        if self.f_c <= 0:
            raise ConfigurationError(f"carrier frequency must be positive, got {self.f_c}")
        if self.n_nlos_rb < 0 or self.n_nlos_ur < 0:
            raise ConfigurationError("NLoS path counts must be >= 0")
        if self.user_model not in USER_MODELS:
            raise ConfigurationError(
                f"unknown user model {self.user_model!r}; expected one of {USER_MODELS}")
        if self.ris_geometry is ArrayKind.UPA:
            if self.ris_upa_shape is None:
                raise ConfigurationError("UPA RIS needs ris_upa_shape = (n_y, n_z)")
            n_y, n_z = self.ris_upa_shape
            if n_y * n_z != self.m_ris:
                raise ConfigurationError(
                    f"UPA shape {n_y}x{n_z} does not hold M={self.m_ris} elements")
        if self.user_positions is not None and len(self.user_positions) != self.k_users:
            raise ConfigurationError(
                f"{len(self.user_positions)} user positions given for K={self.k_users}")

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    # geometry builders
    def bs_array(self) -> ArrayGeometry:
        return ula(self.n_bs, self.spacing, self.bs_position)

    def ris_array(self) -> ArrayGeometry:
        if self.ris_geometry is ArrayKind.UPA:
            n_y, n_z = self.ris_upa_shape
            return upa(n_y, n_z, self.spacing, self.ris_position)
        return ula(self.m_ris, self.spacing, self.ris_position)

    def user_array(self, center) -> ArrayGeometry:
        return ula(self.l_user, self.spacing, center)

    def draw_user_centers(self, rng: np.random.Generator) -> np.ndarray:
        if self.user_positions is not None:
            return np.asarray(self.user_positions, dtype=float).reshape(self.k_users, 3)
        lo, hi = self.user_x_range_m
        xs = rng.uniform(lo, hi, size=self.k_users)
        y, z = self.user_yz_m
        return np.column_stack([xs, np.full(self.k_users, y), np.full(self.k_users, z)])
