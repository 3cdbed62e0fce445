"""Mixed LoS/NLoS near-field channels and derived effective channels.

Index sets are 0-based throughout: piece ``q`` covers RIS columns
``q*M_sub ... (q+1)*M_sub - 1``.  The per-user effective channel is an
``N x (M*L)`` matrix whose ``l``-th ``N x M`` block is
``H_RB @ diag(H_UR[:, l])``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig
from .errors import ConfigurationError, DegenerateGeometryError

_MAX_SCATTERER_DRAWS = 10_000


def near_field_response(source_positions, dest_positions, wavelength: float) -> np.ndarray:
    """Spherical-wavefront response between two point sets.

    Entry ``(n, m)`` is ``a * exp(-2j*pi*r/wavelength)`` with ``r`` the
    distance from source ``m`` to destination ``n`` and free-space gain
    ``a = wavelength**2 / (4*pi*r)**2``.

    Returns
    -------
    np.ndarray
        Complex matrix of shape ``(len(dest), len(source))``.
    """
    if wavelength <= 0:
        raise ConfigurationError(f"wavelength must be positive, got {wavelength}")
    src = np.atleast_2d(np.asarray(source_positions, dtype=float))
    dst = np.atleast_2d(np.asarray(dest_positions, dtype=float))
    r = np.linalg.norm(dst[:, None, :] - src[None, :, :], axis=-1)
    if np.any(r <= 0):
        raise DegenerateGeometryError("source and destination points coincide")
    gain = wavelength ** 2 / (4 * np.pi * r) ** 2
    return gain * np.exp(-2j * np.pi * r / wavelength)


def place_scatterers(rng: np.random.Generator, n: int, corner_a, corner_b,
                     avoid: np.ndarray, clearance: float) -> np.ndarray:
    """Uniform points in the axis-aligned box spanned by two corners.

    Draws are rejected until every point is at least ``clearance`` meters
    from all positions in ``avoid``.
    """
    lo = np.minimum(corner_a, corner_b)
    hi = np.maximum(corner_a, corner_b)
    out = np.empty((n, 3))
    for p in range(n):
        for _ in range(_MAX_SCATTERER_DRAWS):
            cand = rng.uniform(lo, hi)
            if np.min(np.linalg.norm(avoid - cand, axis=1)) >= clearance:
                out[p] = cand
                break
        else:
            raise DegenerateGeometryError(
                f"could not place scatterer {clearance} m away from all array elements")
    return out


def nlos_component(tx_positions, rx_positions, scatterers, wavelength: float,
                   gain: complex = 1.0) -> np.ndarray:
    """Sum of rank-one scatterer paths ``a_r a_t^H``, shape ``(|rx|, |tx|)``."""
    rx = np.atleast_2d(rx_positions)
    tx = np.atleast_2d(tx_positions)
    h = np.zeros((rx.shape[0], tx.shape[0]), dtype=complex)
    for s in np.atleast_2d(scatterers):
        a_r = near_field_response(s, rx, wavelength)[:, 0]
        a_t = near_field_response(tx, s, wavelength)[0]
        h += gain * np.outer(a_r, a_t.conj())
    return h


def gen_ris_bs_channel(config: SystemConfig, rng: np.random.Generator,
                       scatterers=None) -> tuple[np.ndarray, np.ndarray]:
    """RIS-to-BS channel split into its LoS and NLoS parts (each ``N x M``)."""
    bs = config.bs_array().element_positions
    ris = config.ris_array().element_positions
    lam = config.wavelength
    h_los = near_field_response(ris, bs, lam)
    if scatterers is None:
        scatterers = place_scatterers(rng, config.n_nlos_rb, config.ris_position,
                                      config.bs_position, np.vstack([bs, ris]),
                                      config.scatterer_clearance_m)
    scatterers = np.asarray(scatterers, dtype=float).reshape(-1, 3)
    h_nlos = nlos_component(ris, bs, scatterers, lam, config.nlos_gain)
    return h_los, h_nlos


def gen_user_ris_channel(config: SystemConfig, user_index: int, rng: np.random.Generator,
                         center=None) -> np.ndarray:
    """User-to-RIS channel ``H_UR_k`` of shape ``M x L``.

    The near-field model mirrors the RIS-BS construction in the user-to-RIS
    direction; the Gaussian model draws i.i.d. circularly-symmetric entries
    of variance ``config.user_gaussian_variance``.
    """
    if not 0 <= user_index < config.k_users:
        raise ConfigurationError(f"user index {user_index} out of range for K={config.k_users}")
    M, L = config.m_ris, config.l_user
    if config.user_model == "gaussian":
        scale = np.sqrt(config.user_gaussian_variance / 2)
        return scale * (rng.standard_normal((M, L)) + 1j * rng.standard_normal((M, L)))
    if center is None:
        if config.user_positions is not None:
            center = config.user_positions[user_index]
        else:
            center = config.draw_user_centers(rng)[user_index]
    ris = config.ris_array().element_positions
    ue = config.user_array(center).element_positions
    lam = config.wavelength
    h = near_field_response(ue, ris, lam)
    if config.n_nlos_ur:
        sc = place_scatterers(rng, config.n_nlos_ur, center, config.ris_position,
                              np.vstack([ue, ris]), config.scatterer_clearance_m)
        h = h + nlos_component(ue, ris, sc, lam, config.nlos_gain)
    return h


def effective_channel(h_rb: np.ndarray, h_ur_k: np.ndarray) -> np.ndarray:
    """Column-wise effective channel ``[H_RB diag(h_1) ... H_RB diag(h_L)]``."""
    h_ur_k = np.asarray(h_ur_k).reshape(h_rb.shape[1], -1)
    blocks = [h_rb * h_ur_k[:, l][None, :] for l in range(h_ur_k.shape[1])]
    return np.concatenate(blocks, axis=1)


def total_cascaded(h_eff_k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Cascaded ``N x L`` channel seen through reflection vector ``v``."""
    v = np.asarray(v).ravel()
    n, ml = h_eff_k.shape
    if ml % v.size:
        raise ConfigurationError(f"reflection length {v.size} does not divide {ml} columns")
    blocks = h_eff_k.reshape(n, ml // v.size, v.size)
    return blocks @ v


def mimo_ard(wavelength: float, n: int, m: int) -> float:
    """MIMO advanced Rayleigh distance ``wavelength * N * M`` in meters."""
    return wavelength * n * m


def partition_pieces(m: int, q: int) -> list[np.ndarray]:
    """Contiguous, equally sized column index sets covering ``range(m)``."""
    if q < 1 or m % q:
        raise ConfigurationError(f"M={m} cannot be split into Q={q} equal pieces")
    m_sub = m // q
    return [np.arange(i * m_sub, (i + 1) * m_sub) for i in range(q)]


def numerical_rank(a: np.ndarray, rtol: float = 1e-6) -> int:
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def truncation_error_sq(a: np.ndarray, rank: int) -> float:
    """Squared Frobenius error of the best rank-``rank`` approximation."""
    s = np.linalg.svd(a, compute_uv=False)
    if rank > s.size:
        raise ConfigurationError(f"rank {rank} exceeds min dimension {s.size}")
    return float(np.sum(s[rank:] ** 2))


def approximation_error_profile(h_eff_kl: np.ndarray, q: int, ranks) -> float:
    """Normalized piece-wise low-rank approximation error of one ``N x M`` block.

    ``ranks`` is either one rank used for every piece or a length-``q``
    sequence.
    """
    n, m = h_eff_kl.shape
    pieces = partition_pieces(m, q)
    ranks = np.broadcast_to(np.asarray(ranks, dtype=int), (q,))
    cap = min(n, m // q)
    if np.any(ranks > cap) or np.any(ranks < 0):
        raise ConfigurationError(f"piece ranks {list(ranks)} must lie in [0, {cap}]")
    total = np.linalg.norm(h_eff_kl) ** 2
    err = sum(truncation_error_sq(h_eff_kl[:, idx], int(r)) for idx, r in zip(pieces, ranks))
    return err / total


@dataclass
class PiecewiseDecomposition:
    """Per-piece orthonormal bases and coefficients of ``H_RB``."""

    bases: list
    coefficients: list
    index_sets: list

    @property
    def ranks(self) -> list[int]:
        return [b.shape[1] for b in self.bases]

    def reassemble(self) -> np.ndarray:
        return np.concatenate([s @ t for s, t in zip(self.bases, self.coefficients)], axis=1)


def piecewise_decomposition(h_rb: np.ndarray, q: int, ranks=None,
                            rtol: float = 1e-6) -> PiecewiseDecomposition:
    """Split ``H_RB`` into ``q`` column pieces and factor each as ``S_q T_q``.

    ``S_q`` holds the leading left singular vectors; without explicit
    ranks, each piece keeps singular values above ``rtol`` times its largest.
    """
    pieces = partition_pieces(h_rb.shape[1], q)
    if ranks is not None:
        ranks = np.broadcast_to(np.asarray(ranks, dtype=int), (q,))
    bases, coefs = [], []
    for i, idx in enumerate(pieces):
        block = h_rb[:, idx]
        u, s, _ = np.linalg.svd(block, full_matrices=False)
        r = int(ranks[i]) if ranks is not None else int(np.sum(s > rtol * s[0]))
        basis = u[:, :r]
        bases.append(basis)
        coefs.append(basis.conj().T @ block)
    return PiecewiseDecomposition(bases, coefs, pieces)


@dataclass
class ChannelRealization:
    """One draw of all channels of the system.

    ``h_ur`` has shape ``(K, M, L)``; ``h_eff`` has shape ``(K, N, M*L)``.
    """

    h_rb_los: np.ndarray
    h_rb_nlos: np.ndarray
    h_ur: np.ndarray
    user_centers: np.ndarray | None = None
    _h_eff: np.ndarray | None = field(default=None, repr=False)

    @property
    def h_rb(self) -> np.ndarray:
        return self.h_rb_los + self.h_rb_nlos

    @property
    def h_eff(self) -> np.ndarray:
        if self._h_eff is None:
            h_rb = self.h_rb
            self._h_eff = np.stack([effective_channel(h_rb, hk) for hk in self.h_ur])
        return self._h_eff

    @property
    def k_users(self) -> int:
        return self.h_ur.shape[0]

    def h_tot(self, v: np.ndarray) -> np.ndarray:
        """Cascaded channels for every user, shape ``(K, N, L)``."""
        return np.stack([total_cascaded(h, v) for h in self.h_eff])

    def h_ur_stacked(self) -> np.ndarray:
        """``[H_UR_1 ... H_UR_K]`` of shape ``M x (K*L)``."""
        return np.concatenate(list(self.h_ur), axis=1)


def generate_realization(config: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw user positions, scatterers and all channels for one trial."""
    los, nlos = gen_ris_bs_channel(config, rng)
    centers = None
    if config.user_model == "near-field":
        centers = config.draw_user_centers(rng)
    h_ur = np.stack([
        gen_user_ris_channel(config, k, rng, None if centers is None else centers[k])
        for k in range(config.k_users)
    ])
    return ChannelRealization(los, nlos, h_ur, centers)
