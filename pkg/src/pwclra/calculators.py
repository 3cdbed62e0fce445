"""Closed-form training-overhead and complexity counts."""

from __future__ import annotations

from dataclasses import dataclass

from .baselines import OverheadReport
from .errors import ConfigurationError

# known printed values that disagree with the formula, keyed by (Q, N, N_RF, M)
PRINTED_PWCLRA = {(16, 128, 16, 256): 336}


def pwclra_overhead(q: int, n: int, n_rf: int, m: int, k_users: int | None = None,
                    l_user: int | None = None) -> OverheadReport:
    """Training overhead ``Q*N/N_RF + M`` of the two-phase protocol.

    With ``K`` and ``L`` the report also flags whether ``Q >= M/(K*L)``.
    """
    if q < 1 or m < 1:
        raise ConfigurationError(f"Q and M must be >= 1, got Q={q}, M={m}")
    if n_rf < 1 or n % n_rf:
        raise ConfigurationError(f"N={n} is not a multiple of N_RF={n_rf}")
    value = q * (n // n_rf) + m
    feasible = None
    if k_users is not None and l_user is not None:
        feasible = q * k_users * l_user >= m
    notes = []
    printed = PRINTED_PWCLRA.get((q, n, n_rf, m))
    if printed is not None and printed != value:
        notes.append(f"note: a printed value of {printed} for these inputs disagrees "
                     f"with the formula value {value}")
    return OverheadReport(value, f"{q}*{n}/{n_rf} + {m}", feasible, tuple(notes))


@dataclass(frozen=True)
class ComplexityCount:
    """Complex-multiplication counts of the estimator.

    ``delta_d`` and ``delta_a`` are the per-iteration costs of the scaling
    and common-factor updates; the three ``psi_*`` fields are the summands
    of the overall order ``Q N^3 + sum r_q^3 + t_max (delta_d + delta_a)``.
    """

    delta_d: int
    delta_a: int
    psi_subspace: int
    psi_inverse: int
    psi_joint: int

    @property
    def psi_total(self) -> int:
        return self.psi_subspace + self.psi_inverse + self.psi_joint


def complexity_estimate(q: int, n: int, k_users: int, l_user: int, m_sub: int, ranks,
                        t_max: int) -> ComplexityCount:
    """Exact integer counts for ``Q`` pieces with ranks ``ranks``."""
    ranks = [int(r) for r in ranks]
    if len(ranks) != q:
        raise ConfigurationError(f"{len(ranks)} ranks given for Q={q}")
    if min(ranks, default=0) < 0 or min(q, n, k_users, l_user, m_sub) < 1 or t_max < 0:
        raise ConfigurationError("sizes must be positive and ranks non-negative")
    kl = k_users * l_user
    delta_d = kl * m_sub * sum(3 * r + 1 for r in ranks)
    delta_a = kl * m_sub * sum(r + 2 for r in ranks)
    return ComplexityCount(delta_d, delta_a, q * n ** 3, sum(r ** 3 for r in ranks),
                           t_max * (delta_d + delta_a))
