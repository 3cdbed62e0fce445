"""Scenario files, sweep points and the built-in desk-scale presets.

A scenario file is a flat YAML mapping whose keys carry their units
(``snr_db``, ``d_x_rb_m``, ``f_c_hz``, ``sigma2_dbm``).  The five sweep keys
(``q_pieces``, ``snr_db``, ``d_x_rb_m``, ``m_ris``, ``geometry``) take a
scalar or a list; their Cartesian product, in that nesting order, is the
list of sweep points.  Unknown keys are errors.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import yaml

from .config import SystemConfig, dbm_to_watts
from .errors import ConfigurationError
from .geometry import ArrayKind

METHODS = ("PW-CLRA-LS", "PW-CLRA-MMSE", "PW-CLRA-JO", "CLRA-LS", "CLRA-JO", "2D-LS",
           "APPROX")
SWEEP_KEYS = ("q_pieces", "snr_db", "d_x_rb_m", "m_ris", "geometry")
RANK_MODES = ("mdl", "true")

BS_Y_M, BS_Z_M = 20.0, 5.0


@dataclass(frozen=True)
class SweepPoint:
    index: int
    q_pieces: int
    snr_db: float
    d_x_rb_m: float
    m_ris: int
    geometry: str


@dataclass(frozen=True)
class Scenario:
    """One Monte-Carlo experiment.

    ``sigma2_dbm=None`` runs noiselessly with unit transmit power.  With
    ``power_reference_d_x_rb_m`` set, the transmit power of every point is
    calibrated once at that BS distance (averaged over
    ``calibration_draws`` seeded realizations) instead of per trial.
    ``APPROX`` rows report the normalized piece-wise approximation error of
    the true channel at per-piece rank ``approx_rank``.
    """

    name: str
    methods: tuple = ("PW-CLRA-LS", "PW-CLRA-MMSE", "PW-CLRA-JO")
    trials: int = 10
    base_seed: int = 0
    q_pieces: tuple = (4,)
    snr_db: tuple = (10.0,)
    d_x_rb_m: tuple = (50.0,)
    m_ris: tuple = (64,)
    geometry: tuple = ("ULA",)
    n_bs: int = 32
    n_rf: int = 4
    k_users: int = 4
    l_user: int = 2
    f_c_hz: float = 50e9
    sigma2_dbm: float | None = -169.0
    user_model: str = "near-field"
    n_nlos_rb: int = 3
    n_nlos_ur: int = 3
    nlos_gain: float = 1.0
    upa_n_z: int = 2
    power_reference_d_x_rb_m: float | None = None
    calibration_draws: int = 8
    ridge: str = "lmmse"
    rank_mode: str = "mdl"
    adaptive_beams: bool = True
    t_max: int = 10
    approx_rank: int = 1

    def __post_init__(self):
        for key in SWEEP_KEYS:
            object.__setattr__(self, key, _as_tuple(getattr(self, key)))
        object.__setattr__(self, "methods", _as_tuple(self.methods))
        object.__setattr__(self, "q_pieces", tuple(int(q) for q in self.q_pieces))
        object.__setattr__(self, "m_ris", tuple(int(m) for m in self.m_ris))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "d_x_rb_m", tuple(float(d) for d in self.d_x_rb_m))
        object.__setattr__(self, "geometry", tuple(str(g).upper() for g in self.geometry))
        self.validate()

    def validate(self) -> None:
        if not self.name:
            raise ConfigurationError("scenario needs a name")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if not self.methods:
            raise ConfigurationError("scenario lists no methods")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigurationError(f"unknown method {m!r}; expected one of {METHODS}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigurationError("methods are listed twice")
        for key in SWEEP_KEYS:
            if not getattr(self, key):
                raise ConfigurationError(f"sweep axis {key} is empty")
        for g in self.geometry:
            if g not in (k.value for k in ArrayKind):
                raise ConfigurationError(f"unknown geometry {g!r}")
        if self.rank_mode not in RANK_MODES:
            raise ConfigurationError(f"rank_mode must be one of {RANK_MODES}")
        if self.ridge not in ("lmmse", "snr"):
            raise ConfigurationError(f"ridge must be 'lmmse' or 'snr', got {self.ridge!r}")
        if self.calibration_draws < 1:
            raise ConfigurationError("calibration_draws must be >= 1")
        for point in self.points():
            self.system_config(point)

    @property
    def noiseless(self) -> bool:
        return self.sigma2_dbm is None

    @property
    def sigma2(self) -> float:
        return 0.0 if self.noiseless else dbm_to_watts(self.sigma2_dbm)

    def points(self) -> list[SweepPoint]:
        axes = [getattr(self, key) for key in SWEEP_KEYS]
        return [SweepPoint(i, *vals) for i, vals in enumerate(itertools.product(*axes))]

    def system_config(self, point: SweepPoint, d_x_rb_m: float | None = None) -> SystemConfig:
        """System parameters of ``point`` (optionally at another BS distance)."""
        d_x = point.d_x_rb_m if d_x_rb_m is None else d_x_rb_m
        upa = point.geometry == ArrayKind.UPA.value
        if upa and point.m_ris % self.upa_n_z:
            raise ConfigurationError(
                f"M={point.m_ris} does not fill a UPA with {self.upa_n_z} rows")
        return SystemConfig(
            n_bs=self.n_bs, n_rf=self.n_rf, m_ris=point.m_ris, q_pieces=point.q_pieces,
            k_users=self.k_users, l_user=self.l_user, sigma2=self.sigma2, f_c=self.f_c_hz,
            bs_position=(d_x, BS_Y_M, BS_Z_M), n_nlos_rb=self.n_nlos_rb,
            n_nlos_ur=self.n_nlos_ur, nlos_gain=self.nlos_gain, user_model=self.user_model,
            ris_geometry=point.geometry,
            ris_upa_shape=(point.m_ris // self.upa_n_z, self.upa_n_z) if upa else None,
        )

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in SWEEP_KEYS + ("methods",):
            out[key] = list(out[key])
        return out


def _as_tuple(v) -> tuple:
    if isinstance(v, (list, tuple)):
        return tuple(v)
    return (v,)


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigurationError("scenario file must hold a mapping")
    known = {f.name for f in fields(Scenario)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown scenario keys: {', '.join(unknown)}")
    try:
        return Scenario(**data)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_scenario(path) -> Scenario:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(data)


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.to_dict(), sort_keys=False)


PW = ("PW-CLRA-LS", "PW-CLRA-MMSE", "PW-CLRA-JO")
CLRA = ("CLRA-LS", "CLRA-JO")

PRESETS = {
    "fig2-desk": Scenario("fig2-desk", methods=("APPROX",), trials=50,
                          q_pieces=(1, 2, 4, 8), sigma2_dbm=None, approx_rank=1),
    "fig4-desk": Scenario("fig4-desk", methods=PW + CLRA, trials=100, q_pieces=(1, 2, 4, 8)),
    "fig5-desk": Scenario("fig5-desk", methods=PW + CLRA + ("2D-LS",), trials=100,
                          snr_db=tuple(range(-20, 21, 5))),
    "fig6-desk": Scenario("fig6-desk", methods=PW + CLRA, trials=100,
                          d_x_rb_m=(10.0, 20.0, 30.0, 40.0, 50.0),
                          power_reference_d_x_rb_m=50.0),
    "fig7-desk": Scenario("fig7-desk", methods=PW + CLRA, trials=100, m_ris=(32, 48, 64)),
    "fig8-desk": Scenario("fig8-desk", methods=PW + CLRA, trials=100, q_pieces=(1, 2, 4, 8),
                          geometry=("UPA",)),
}


def resolve_scenario(name_or_path) -> Scenario:
    """A preset by name, otherwise a scenario file."""
    if str(name_or_path) in PRESETS:
        return PRESETS[str(name_or_path)]
    if not Path(name_or_path).exists():
        raise ConfigurationError(
            f"{name_or_path!r} is neither a preset ({', '.join(PRESETS)}) nor a file")
    return load_scenario(name_or_path)
