"""Pilot books, two-phase training designs and observation simulation.

Subframes are numbered from 0.  Phase I occupies subframes
``g*B + b`` for group ``g < Q`` and combiner slice ``b < B``; phase II
occupies ``m0 + m`` with ``m0 = Q*B`` and ``m < M``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .errors import ConfigurationError, ProtocolError


def dft_like_matrix(x: int, y: int | None = None) -> np.ndarray:
    """First ``y`` columns of the unitary ``x``-point DFT matrix."""
    y = x if y is None else y
    if y > x or x < 1 or y < 0:
        raise ConfigurationError(f"cannot take {y} columns of a {x}-point DFT")
    a = np.arange(x)[:, None]
    b = np.arange(y)[None, :]
    return np.exp(-2j * np.pi * a * b / x) / np.sqrt(x)


@dataclass(frozen=True)
class PilotBook:
    """Orthogonal pilots ``X[k]`` of shape ``(K, L, T)``, reused in every subframe."""

    pilots: np.ndarray
    power: float

    @property
    def t_pilot(self) -> int:
        return self.pilots.shape[2]

    def for_subframe(self, z: int) -> np.ndarray:
        return self.pilots


def gen_pilots(k: int, l: int, t: int, power: float) -> PilotBook:
    """Rows of a scaled ``T``-point DFT matrix, one row per (user, antenna).

    Satisfies ``X_k X_k^H = P*T*I`` and ``X_k X_j^H = 0`` for ``k != j``.
    """
    if t < k * l:
        raise ConfigurationError(f"pilot length T={t} is shorter than K*L={k * l}")
    if power <= 0:
        raise ConfigurationError(f"pilot power must be positive, got {power}")
    rows = np.sqrt(power * t) * dft_like_matrix(t).T[: k * l]
    return PilotBook(rows.reshape(k, l, t), float(power))


def phase1_combiner(g: int, b: int, n: int, n_rf: int) -> np.ndarray:
    """Combiner slice ``sqrt(N) * Phi_N[:, b*N_RF:(b+1)*N_RF]``.

    The same slices are reused in every group ``g``.
    """
    if g < 0:
        raise ConfigurationError(f"group index must be >= 0, got {g}")
    if n % n_rf:
        raise ConfigurationError(f"N={n} is not a multiple of N_RF={n_rf}")
    if not 0 <= b < n // n_rf:
        raise ConfigurationError(f"slice index {b} out of range for B={n // n_rf}")
    return np.sqrt(n) * dft_like_matrix(n)[:, b * n_rf:(b + 1) * n_rf]


def phase1_reflection(g: int, q: int, m_sub: int) -> np.ndarray:
    """Piece-constant reflection ``sqrt(Q) * Phi_Q[q, g]`` on every piece ``q``."""
    if not 0 <= g < q:
        raise ConfigurationError(f"group index {g} out of range for Q={q}")
    return np.repeat(np.sqrt(q) * dft_like_matrix(q)[:, g], m_sub)


def phase2_basis(n: int, n_rf: int, beams=None) -> np.ndarray:
    """Orthonormal ``N x N_RF`` DFT slice used by the phase-II combiner.

    ``beams=None`` takes the first ``N_RF`` DFT columns; otherwise the
    listed column indices are used.
    """
    if beams is None:
        return dft_like_matrix(n, n_rf)
    beams = np.asarray(beams, dtype=int)
    if beams.shape != (n_rf,) or len(set(beams.tolist())) != n_rf:
        raise ConfigurationError(f"need {n_rf} distinct beam indices, got {beams.tolist()}")
    if beams.min() < 0 or beams.max() >= n:
        raise ConfigurationError(f"beam indices must lie in [0, {n})")
    return dft_like_matrix(n)[:, beams]


def phase2_design(m: int, n: int, n_rf: int, m_ris: int,
                  beams=None) -> tuple[np.ndarray, np.ndarray]:
    """Combiner ``sqrt(N) * Phi_[N, N_RF]`` and reflection ``sqrt(M) * Phi_M[:, m]``."""
    if not 0 <= m < m_ris:
        raise ConfigurationError(f"phase-II subframe {m} out of range for M={m_ris}")
    comb = np.sqrt(n) * phase2_basis(n, n_rf, beams)
    refl = np.sqrt(m_ris) * dft_like_matrix(m_ris)[:, m]
    return comb, refl


def select_phase2_beams(phase1_matrices, n_rf: int) -> np.ndarray:
    """The ``N_RF`` DFT beams collecting the most phase-I energy, ascending.

    Ties go to the lower beam index.
    """
    n = phase1_matrices[0].shape[0]
    phi = dft_like_matrix(n)
    energy = sum(np.sum(np.abs(phi.conj().T @ m) ** 2, axis=1) for m in phase1_matrices)
    order = np.argsort(-energy, kind="stable")
    return np.sort(order[:n_rf])


@dataclass(frozen=True)
class TrainingDesign:
    """Per-subframe combiners ``(Z, N, N_RF)`` and reflections ``(Z, M)``."""

    combiners: np.ndarray
    reflections: np.ndarray
    n_bs: int
    n_rf: int
    m_ris: int
    q_pieces: int
    phase2_beams: tuple | None = None

    @property
    def b_groups(self) -> int:
        return self.n_bs // self.n_rf

    @property
    def m0(self) -> int:
        return self.q_pieces * self.b_groups

    @property
    def overhead(self) -> int:
        return self.combiners.shape[0]

    @property
    def m_sub(self) -> int:
        return self.m_ris // self.q_pieces

    @property
    def phase2_basis(self) -> np.ndarray:
        return phase2_basis(self.n_bs, self.n_rf, self.phase2_beams)


def build_design(n: int, n_rf: int, m_ris: int, q: int, phase2_beams=None) -> TrainingDesign:
    """Full two-phase design with ``Z = Q*N/N_RF + M`` subframes."""
    if n % n_rf:
        raise ConfigurationError(f"N={n} is not a multiple of N_RF={n_rf}")
    if q < 1 or m_ris % q:
        raise ConfigurationError(f"M={m_ris} is not a multiple of Q={q}")
    b_groups = n // n_rf
    m_sub = m_ris // q
    combs, refls = [], []
    for g in range(q):
        v = phase1_reflection(g, q, m_sub)
        for b in range(b_groups):
            combs.append(phase1_combiner(g, b, n, n_rf))
            refls.append(v)
    for m in range(m_ris):
        c, v = phase2_design(m, n, n_rf, m_ris, phase2_beams)
        combs.append(c)
        refls.append(v)
    if phase2_beams is not None:
        phase2_beams = tuple(int(i) for i in phase2_beams)
    return TrainingDesign(np.stack(combs), np.stack(refls), n, n_rf, m_ris, q, phase2_beams)


def complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circularly-symmetric Gaussian samples with the given per-entry variance."""
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def simulate_subframe(channels: ChannelRealization, v: np.ndarray, c: np.ndarray,
                      pilots: np.ndarray, sigma2: float,
                      rng: np.random.Generator | None) -> np.ndarray:
    """Received ``N_RF x T`` block ``C^H (sum_k H_k^tot(v) X_k + U)``."""
    h_tot = channels.h_tot(v)
    rx = np.einsum("knl,klt->nt", h_tot, pilots)
    if sigma2 > 0:
        rx = rx + complex_gaussian(rng, rx.shape, sigma2)
    return c.conj().T @ rx


def despread(y_z: np.ndarray, x_k: np.ndarray, power: float, t: int) -> np.ndarray:
    """User-specific ``N_RF x L`` observation ``Y_z X_k^H / (P T)``."""
    return y_z @ x_k.conj().T / (power * t)


@dataclass(frozen=True)
class ObservationSet:
    """Despread observations ``y[z, k]`` of shape ``(Z, K, N_RF, L)``."""

    y: np.ndarray
    sigma2: float
    power: float
    t_pilot: int
    design: TrainingDesign

    @property
    def m0(self) -> int:
        return self.design.m0

    @property
    def k_users(self) -> int:
        return self.y.shape[1]

    @property
    def l_user(self) -> int:
        return self.y.shape[3]

    @property
    def noise_variance(self) -> float:
        """Per-entry variance of the despread noise before combining."""
        return self.sigma2 / (self.power * self.t_pilot)

    @property
    def phase2_noise_variance(self) -> float:
        """Per-entry noise variance of the processed phase-II projections."""
        return self.noise_variance / self.design.m_ris


def simulate_subframes(channels: ChannelRealization, design: TrainingDesign,
                       pilots: PilotBook, sigma2: float, rng: np.random.Generator | None,
                       subframes) -> np.ndarray:
    """Despread observations ``(len(subframes), K, N_RF, L)``, simulated in order."""
    x = pilots.pilots
    k_users = x.shape[0]
    if channels.k_users != k_users:
        raise ProtocolError(f"{channels.k_users} channels but {k_users} pilot sets")
    subframes = list(subframes)
    out = np.empty((len(subframes), k_users, design.n_rf, x.shape[1]), dtype=complex)
    for i, z in enumerate(subframes):
        y_z = simulate_subframe(channels, design.reflections[z], design.combiners[z],
                                x, sigma2, rng)
        for k in range(k_users):
            out[i, k] = despread(y_z, x[k], pilots.power, pilots.t_pilot)
    return out


def simulate_observations(channels: ChannelRealization, design: TrainingDesign,
                          pilots: PilotBook, sigma2: float,
                          rng: np.random.Generator | None) -> ObservationSet:
    """Run all ``Z`` subframes sequentially and despread every user."""
    y = simulate_subframes(channels, design, pilots, sigma2, rng, range(design.overhead))
    return ObservationSet(y, float(sigma2), pilots.power, pilots.t_pilot, design)
