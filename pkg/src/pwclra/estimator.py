"""Piece-wise collaborative low-rank approximation (PW-CLRA) estimator.

Pipeline for one observation set:

1. ``phase1_process`` turns the first ``Q*B`` subframes into one
   ``N x KL`` matrix per piece whose column space lies in that piece's
   RIS-BS column space.
2. ``mdl_rank`` and ``estimate_subspace`` pick the rank and the basis.
3. ``phase2_process`` turns the last ``M`` subframes into per-(k, l)
   ``N_RF x M`` projections of the effective channel.
4. Coefficients are solved by LS, MMSE, or refined jointly across users by
   ``joint_optimize`` (JO).
5. ``assemble_estimate`` concatenates ``S_q T_[k,l,q]`` into full channels.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import partition_pieces
from .errors import (AssemblyError, ConfigurationError, InfeasibleRankError,
                     ProtocolError, RankEstimationError)
from .training import (ObservationSet, PilotBook, TrainingDesign, build_design,
                       dft_like_matrix, phase2_basis, select_phase2_beams,
                       simulate_subframes)

log = logging.getLogger(__name__)

METHODS = ("LS", "MMSE", "JO")
RIDGES = ("lmmse", "snr")
EIGEN_FLOOR = 1e-18
# relative to the largest coefficient-matrix norm of the piece
JO_ZERO_COLUMN = 1e-14
# objective increases below this fraction of sum_j ||T_j||^2 are rounding
JO_ROUNDING = 1e-9


@dataclass
class PiecewiseSubspaceEstimate:
    """Per-piece bases ``S_q`` (``N x r_q``), ranks and eigenvalue spectra."""

    bases: list
    ranks: list
    spectra: list
    mdl_ranks: list = field(default_factory=list)


@dataclass
class CoefficientEstimate:
    """Coefficient matrices ``coef[k][l][q]`` of shape ``r_q x M_sub``.

    For JO estimates ``a_mats[q]`` and ``scalings[q]`` (``(K*L, M_sub)``
    diagonal entries, user-major) reproduce ``coef`` exactly, and
    ``objective[q]`` holds the per-iteration objective values.
    """

    coef: list
    method: str
    a_mats: list | None = None
    scalings: list | None = None
    objective: list | None = None


@dataclass
class EstimateReport:
    """Estimated effective channels ``h_eff`` of shape ``(K, N, M*L)``."""

    h_eff: np.ndarray
    method: str
    overhead: int
    ranks: list
    coefficients: CoefficientEstimate | None = None

    def nmse_per_user(self, truth: np.ndarray) -> np.ndarray:
        from .metrics import nmse_per_user
        return nmse_per_user(self.h_eff, truth)


# ---------------------------------------------------------------------------
# phase I

def check_design(design: TrainingDesign) -> None:
    """Raise ``ProtocolError`` unless ``design`` is the standard two-phase design."""
    ref = build_design(design.n_bs, design.n_rf, design.m_ris, design.q_pieces,
                       design.phase2_beams)
    if (design.combiners.shape != ref.combiners.shape
            or design.reflections.shape != ref.reflections.shape
            or not np.allclose(design.combiners, ref.combiners, rtol=0, atol=1e-12)
            or not np.allclose(design.reflections, ref.reflections, rtol=0, atol=1e-12)):
        raise ProtocolError("training design does not match the two-phase PW-CLRA design")


def _check_observations(obs: ObservationSet) -> TrainingDesign:
    design = obs.design
    if obs.y.shape[0] != design.overhead:
        raise ProtocolError(
            f"{obs.y.shape[0]} subframes observed but the design has {design.overhead}")
    if obs.y.shape[2] != design.n_rf:
        raise ProtocolError(f"observations have {obs.y.shape[2]} RF chains, design {design.n_rf}")
    check_design(design)
    return design


def phase1_process(obs: ObservationSet) -> list[np.ndarray]:
    """Per-piece phase-I matrices ``M_q`` of shape ``N x (K*L)``.

    Columns are user-major (column ``k*L + l``).  Without noise ``M_q``
    equals ``H_RB[:, piece q] @ H_UR[piece q, :]``.
    """
    design = _check_observations(obs)
    return phase1_matrices(obs.y[: design.m0], design.n_bs, design.n_rf, design.q_pieces)


def phase1_matrices(y1: np.ndarray, n: int, n_rf: int, q: int) -> list[np.ndarray]:
    """:func:`phase1_process` on the raw ``(Q*B, K, N_RF, L)`` phase-I block."""
    b_groups = n // n_rf
    if y1.shape[0] != q * b_groups or y1.shape[2] != n_rf:
        raise ProtocolError(
            f"phase-I block of shape {y1.shape} does not match Q={q}, B={b_groups}, N_RF={n_rf}")
    k_users, l_user = y1.shape[1], y1.shape[3]
    y1 = y1.reshape(q, b_groups, k_users, n_rf, l_user)
    # stack the B combiner slices of each group: (Q, K, N, L)
    stacked = y1.transpose(0, 2, 1, 3, 4).reshape(q, k_users, n, l_user)
    phi_n = dft_like_matrix(n)
    w = np.einsum("ab,gkbl->gkal", phi_n, stacked) / np.sqrt(n)
    phi_q = dft_like_matrix(q)
    v = np.einsum("gkal,qg->qkal", w, phi_q.conj()) / np.sqrt(q)
    return [v[i].transpose(1, 0, 2).reshape(n, k_users * l_user) for i in range(q)]


def _spectrum(m_q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left singular vectors and eigenvalues of ``M M^H / KL``, descending."""
    u, s, _ = np.linalg.svd(m_q, full_matrices=False)
    return u, s ** 2 / m_q.shape[1]


def mdl_scores(eigenvalues, n_snapshots: int) -> np.ndarray:
    """Wax-Kailath MDL score for every candidate rank ``0 .. n-1``.

    Eigenvalues are scaled by the largest and floored at ``EIGEN_FLOOR`` so
    the score does not depend on the absolute channel scale.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
    n = lam.size
    top = lam[0] if lam[0] > 0 else 1.0
    lam = np.maximum(lam / top, EIGEN_FLOOR)
    scores = np.empty(n)
    for r in range(n):
        tail = lam[r:]
        log_gm = np.mean(np.log(tail))
        log_am = np.log(np.mean(tail))
        scores[r] = (-n_snapshots * (n - r) * (log_gm - log_am)
                     + 0.5 * r * (2 * n - r) * np.log(n_snapshots))
    return scores


def mdl_rank(m_q: np.ndarray, cap: int | None = None) -> int:
    """Subspace rank of ``m_q`` by minimum description length, at least 1.

    ``cap`` (typically ``N_RF``) bounds the result; exceeding it is logged.
    """
    n_dim, n_snap = m_q.shape
    if n_snap < 2:
        raise RankEstimationError(f"MDL needs at least 2 snapshot columns, got {n_snap}")
    _, lam = _spectrum(m_q)
    n = min(n_dim, n_snap)
    r = max(int(np.argmin(mdl_scores(lam[:n], n_snap))), 1)
    if cap is not None and r > cap:
        log.warning("MDL rank %d exceeds cap %d; capping", r, cap)
        r = cap
    return r


def estimate_subspace(m_q: np.ndarray, rank: int) -> np.ndarray:
    """Top-``rank`` eigenvectors of ``M M^H`` (orthonormal, descending)."""
    n_dim, n_snap = m_q.shape
    if not 0 <= rank <= min(n_dim, n_snap):
        raise InfeasibleRankError(
            f"rank {rank} must not exceed min(N, KL) = {min(n_dim, n_snap)}")
    u, _ = _spectrum(m_q)
    return u[:, :rank]


def estimate_subspaces(m1: list, ranks=None, cap: int | None = None) -> PiecewiseSubspaceEstimate:
    """Rank selection (MDL unless ``ranks`` given) and bases for every piece."""
    bases, used, spectra, mdl = [], [], [], []
    for i, m_q in enumerate(m1):
        _, lam = _spectrum(m_q)
        spectra.append(lam)
        r_mdl = mdl_rank(m_q, cap) if m_q.shape[1] >= 2 else 1
        mdl.append(r_mdl)
        r = r_mdl if ranks is None else int(np.broadcast_to(ranks, (len(m1),))[i])
        used.append(r)
        bases.append(estimate_subspace(m_q, r))
    return PiecewiseSubspaceEstimate(bases, used, spectra, mdl)


# ---------------------------------------------------------------------------
# phase II

def phase2_process(obs: ObservationSet) -> np.ndarray:
    """Phase-II projections ``V[k, l]`` of shape ``(K, L, N_RF, M)``.

    Without noise ``V[k, l] = Phi_[N, N_RF]^H H_eff[k, l]``; slice columns
    of a piece with :func:`piece_slice`.
    """
    design = _check_observations(obs)
    n, m = design.n_bs, design.m_ris
    w = obs.y[design.m0:]                      # (M, K, N_RF, L)
    phi_m = dft_like_matrix(m)
    v = np.einsum("mkal,pm->klap", w, phi_m.conj()) / np.sqrt(n * m)
    return v


def piece_slice(v2: np.ndarray, q: int, q_pieces: int) -> np.ndarray:
    """Columns of piece ``q``: ``(K, L, N_RF, M_sub)``."""
    idx = partition_pieces(v2.shape[-1], q_pieces)[q]
    return v2[..., idx]


def projection_matrix(basis: np.ndarray, combiner_basis: np.ndarray) -> np.ndarray:
    """``P_q = Phi_[N, N_RF]^H S_q``."""
    return combiner_basis.conj().T @ basis


def _combiner_basis(basis, n_rf, combiner_basis):
    if combiner_basis is None:
        return phase2_basis(basis.shape[0], n_rf)
    return combiner_basis


def estimate_t_ls(m2: np.ndarray, basis: np.ndarray, combiner_basis=None) -> np.ndarray:
    """Least-squares coefficients ``pinv(P_q) @ m2``.

    ``combiner_basis`` is the orthonormal phase-II combiner (first
    ``N_RF`` DFT columns when omitted).
    """
    n_rf = m2.shape[-2]
    r = basis.shape[1]
    if r > n_rf:
        raise InfeasibleRankError(
            f"rank {r} exceeds N_RF={n_rf}; the LS pseudo-inverse needs r_q <= N_RF")
    p = projection_matrix(basis, _combiner_basis(basis, n_rf, combiner_basis))
    return np.linalg.pinv(p) @ m2


def lmmse_ridge(m2: np.ndarray, p: np.ndarray, noise_variance: float) -> float:
    """Ridge ``sigma_n^2 / sigma_t^2`` of the linear MMSE coefficient estimate.

    ``sigma_t^2`` is the per-entry coefficient power, estimated from the
    observed energy ``||m2||^2 = sigma_t^2 tr(P^H P) M_sub + N_RF M_sub sigma_n^2``
    and floored at a tiny fraction of the observed energy.
    """
    if noise_variance <= 0:
        return 0.0
    n_rf, m_sub = m2.shape
    energy = np.linalg.norm(m2) ** 2 / m_sub
    signal = energy - n_rf * noise_variance
    trace = float(np.real(np.trace(p.conj().T @ p)))
    floor = 1e-12 * energy
    if trace <= 0:
        return np.inf
    return noise_variance * trace / max(signal, floor, np.finfo(float).tiny)


def estimate_t_mmse(m2: np.ndarray, basis: np.ndarray, rho: float | None, k_users: int,
                    l_user: int, form: str = "conventional",
                    combiner_basis=None, ridge: float | None = None) -> np.ndarray:
    """Regularized coefficients ``(P^H P + lam I)^{-1} P^H m2``.

    The ridge ``lam`` is ``ridge`` when given, else ``K*L / rho``.
    ``form="literal"`` applies the regularized inverse to ``m2`` directly
    (no ``P^H`` factor) and needs ``r_q == N_RF``.
    """
    n_rf = m2.shape[-2]
    r = basis.shape[1]
    if r > n_rf:
        raise InfeasibleRankError(f"rank {r} exceeds N_RF={n_rf}")
    p = projection_matrix(basis, _combiner_basis(basis, n_rf, combiner_basis))
    if ridge is None:
        if rho is None or not rho > 0:
            raise ConfigurationError(f"rho must be positive, got {rho}")
        lam = k_users * l_user / rho
    else:
        if not ridge >= 0:
            raise ConfigurationError(f"ridge must be >= 0, got {ridge}")
        lam = ridge
    gram = p.conj().T @ p + lam * np.eye(r)
    if form == "conventional":
        return np.linalg.solve(gram, p.conj().T @ m2)
    if form == "literal":
        if r != n_rf:
            raise InfeasibleRankError(
                f"literal MMSE form needs r_q == N_RF, got r_q={r}, N_RF={n_rf}")
        return np.linalg.solve(gram, m2)
    raise ConfigurationError(f"unknown MMSE form {form!r}")


def jo_objective(t_list, a: np.ndarray, d: np.ndarray) -> float:
    return float(sum(np.linalg.norm(t - a * d_j[None, :]) ** 2 for t, d_j in zip(t_list, d)))


def joint_optimize(t_list, t_max: int = 10):
    """Alternating fit of ``T_j ~= A @ diag(d_j)`` over all (user, antenna) pairs.

    ``t_list`` holds the MMSE coefficients, first entry (k=1, l=1).  Each
    iteration first sets every ``d_j[m]`` to the projection of
    ``T_j[:, m]`` on ``A[:, m]``, then refits ``A`` by least squares.  An
    iteration that would raise the objective (possible only through
    rounding) leaves the iterate unchanged, so the recorded objective is
    non-increasing.

    Returns
    -------
    a : np.ndarray
        ``r x M_sub`` common factor after ``t_max`` iterations.
    d : np.ndarray
        ``(len(t_list), M_sub)`` diagonal scalings.
    t_jo : list of np.ndarray
        ``A @ diag(d_j)`` for every ``j``.
    objective : list of float
        Objective after each iteration.
    """
    if t_max < 1:
        raise ConfigurationError(f"t_max must be >= 1, got {t_max}")
    t_arr = np.stack([np.asarray(t) for t in t_list])          # (J, r, M_sub)
    a = t_arr[0].copy()
    scale = max(float(np.max(np.linalg.norm(t_arr, axis=(1, 2)))), 0.0)
    total = float(np.sum(np.abs(t_arr) ** 2))
    objective = []
    d = d_prev = np.zeros((t_arr.shape[0], t_arr.shape[2]), dtype=complex)
    for _ in range(t_max):
        col_sq = np.sum(np.abs(a) ** 2, axis=0)                 # (M_sub,)
        live = np.sqrt(col_sq) > JO_ZERO_COLUMN * scale
        num = np.einsum("rm,jrm->jm", a.conj(), t_arr)
        d = np.where(live[None, :], num / np.where(live, col_sq, 1.0)[None, :], 0.0)
        energy = np.sum(np.abs(d) ** 2, axis=0)                 # (M_sub,)
        upd = energy > 0
        a_new = np.einsum("jrm,jm->rm", t_arr, d.conj()) / np.where(upd, energy, 1.0)[None, :]
        a_new = np.where(upd[None, :], a_new, a)
        obj = jo_objective(t_arr, a_new, d)
        if objective and obj > objective[-1]:
            # both updates are exact least-squares steps, so an increase is
            # rounding; keep the previous iterate
            if obj - objective[-1] > JO_ROUNDING * total:
                log.warning("JO objective rose by %.3g; keeping previous iterate",
                            obj - objective[-1])
            d = d_prev
            obj = objective[-1]
        else:
            a = a_new
        d_prev = d
        objective.append(obj)
    t_jo = [a * d_j[None, :] for d_j in d]
    return a, d, t_jo, objective


# ---------------------------------------------------------------------------
# acquisition

def acquire_observations(channels, n: int, n_rf: int, m_ris: int, q: int, pilots: PilotBook,
                         sigma2: float, rng: np.random.Generator | None,
                         adaptive_beams: bool = True) -> ObservationSet:
    """Simulate both training phases for one channel realization.

    With ``adaptive_beams`` the phase-II combiner uses the ``N_RF`` DFT beams
    that collected the most phase-I energy; otherwise the first ``N_RF``.
    Phase I is simulated before phase II on the same generator.
    """
    design = build_design(n, n_rf, m_ris, q)
    y1 = simulate_subframes(channels, design, pilots, sigma2, rng, range(design.m0))
    if adaptive_beams:
        beams = select_phase2_beams(phase1_matrices(y1, n, n_rf, q), n_rf)
        design = build_design(n, n_rf, m_ris, q, beams)
    y2 = simulate_subframes(channels, design, pilots, sigma2, rng,
                            range(design.m0, design.overhead))
    y = np.concatenate([y1, y2])
    return ObservationSet(y, float(sigma2), pilots.power, pilots.t_pilot, design)


# ---------------------------------------------------------------------------
# assembly and full pipeline

def assemble_estimate(bases, coef) -> np.ndarray:
    """Concatenate ``S_q @ coef[k][l][q]`` over pieces, then antennas.

    Returns an array of shape ``(K, N, M*L)``.
    """
    n_pieces = len(bases)
    out = []
    for k, per_user in enumerate(coef):
        blocks = []
        for l, per_ant in enumerate(per_user):
            if len(per_ant) != n_pieces or any(t is None for t in per_ant):
                raise AssemblyError(f"missing piece estimate for user {k}, antenna {l}")
            blocks.extend(s @ t for s, t in zip(bases, per_ant))
        out.append(np.concatenate(blocks, axis=1))
    return np.stack(out)


def _empty_coef(k_users, l_user, q):
    return [[[None] * q for _ in range(l_user)] for _ in range(k_users)]


def estimate_pwclra(obs: ObservationSet, methods=METHODS, rho=None, ranks=None,
                    mmse_form: str = "conventional", t_max: int = 10,
                    piece_order=None, subspace: PiecewiseSubspaceEstimate | None = None,
                    ridge: str = "lmmse"):
    """Run the full estimator and return ``({method: EstimateReport}, subspace)``.

    MMSE and JO regularize with the data-calibrated ridge of
    :func:`lmmse_ridge` (``ridge="lmmse"``) or with ``K*L / rho_k``
    (``ridge="snr"``, needs the per-user SNR ``rho``; ``np.inf`` turns MMSE
    into LS).  ``ranks`` overrides MDL.  ``piece_order`` permutes the order
    in which pieces are processed; results do not depend on it.
    """
    methods = tuple(methods)
    for meth in methods:
        if meth not in METHODS:
            raise ConfigurationError(f"unknown method {meth!r}; expected one of {METHODS}")
    design = _check_observations(obs)
    k_users, l_user = obs.k_users, obs.l_user
    q = design.q_pieces
    if subspace is None:
        subspace = estimate_subspaces(phase1_process(obs), ranks, cap=design.n_rf)
    v2 = phase2_process(obs)
    phi2 = design.phase2_basis
    need_mmse = "MMSE" in methods or "JO" in methods
    if ridge not in RIDGES:
        raise ConfigurationError(f"unknown ridge {ridge!r}; expected one of {RIDGES}")
    if need_mmse and ridge == "snr" and rho is None:
        raise ConfigurationError("the snr ridge needs the per-user SNR rho")
    if rho is not None:
        rho = np.broadcast_to(np.asarray(rho, dtype=float), (k_users,))
    noise2 = obs.phase2_noise_variance

    coefs = {meth: _empty_coef(k_users, l_user, q) for meth in methods}
    a_mats, scalings, objective = [None] * q, [None] * q, [None] * q
    order = range(q) if piece_order is None else piece_order
    for qi in order:
        basis = subspace.bases[qi]
        m2 = piece_slice(v2, qi, q)
        mmse = {}
        for k in range(k_users):
            for l in range(l_user):
                if "LS" in methods:
                    coefs["LS"][k][l][qi] = estimate_t_ls(m2[k, l], basis, phi2)
                if need_mmse:
                    lam = None
                    if ridge == "lmmse":
                        lam = lmmse_ridge(m2[k, l], projection_matrix(basis, phi2), noise2)
                    mmse[k, l] = estimate_t_mmse(
                        m2[k, l], basis, None if rho is None else rho[k], k_users, l_user,
                        form=mmse_form, combiner_basis=phi2, ridge=lam)
                    if "MMSE" in methods:
                        coefs["MMSE"][k][l][qi] = mmse[k, l]
        if "JO" in methods:
            keys = [(k, l) for k in range(k_users) for l in range(l_user)]
            a, d, t_jo, obj = joint_optimize([mmse[key] for key in keys], t_max)
            for (k, l), t in zip(keys, t_jo):
                coefs["JO"][k][l][qi] = t
            a_mats[qi], scalings[qi], objective[qi] = a, d, obj

    reports = {}
    for meth in methods:
        est = CoefficientEstimate(coefs[meth], meth)
        if meth == "JO":
            est.a_mats, est.scalings, est.objective = a_mats, scalings, objective
        h = assemble_estimate(subspace.bases, coefs[meth])
        reports[meth] = EstimateReport(h, meth, design.overhead, list(subspace.ranks), est)
    return reports, subspace
