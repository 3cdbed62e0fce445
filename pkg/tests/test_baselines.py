import numpy as np
import pytest

from helpers import random_realization, rel_err
from pwclra.baselines import BaselineConfig, clra_estimate, clra_overhead, oracle_2dls_estimate
from pwclra.channel import ChannelRealization
from pwclra.errors import ConfigurationError, OracleInfeasibleError
from pwclra.estimator import estimate_pwclra
from pwclra.metrics import nmse
from pwclra.training import build_design, gen_pilots, simulate_observations


def observe(ch, n, n_rf, m, q, sigma2=0.0, rng=None):
    k, _, l = ch.h_ur.shape
    return simulate_observations(ch, build_design(n, n_rf, m, q), gen_pilots(k, l, k * l, 1.0),
                                 sigma2, rng)


def test_clra_needs_single_piece(rng):
    ch = random_realization(rng, 8, 8, 1, 1)
    with pytest.raises(ConfigurationError):
        clra_estimate(observe(ch, 8, 4, 8, 2))
    with pytest.raises(ConfigurationError):
        clra_estimate(observe(ch, 8, 4, 8, 1), flavor="MMSE")


def test_clra_noiseless_exact(rng):
    # rank(H_RB) = 3 <= N_RF and K*L = 8 >= M
    ch = random_realization(rng, 16, 8, 4, 2, rank=3)
    obs = observe(ch, 16, 4, 8, 1)
    for flavor in ("LS", "JO"):
        rep = clra_estimate(obs, flavor, ranks=3)
        assert rep.method == f"CLRA-{flavor}"
        assert 10 * np.log10(nmse(rep.h_eff, ch.h_eff)) < -80


def test_clra_is_single_piece_pwclra(rng):
    ch = random_realization(rng, 16, 8, 2, 2, rank=2)
    obs = observe(ch, 16, 4, 8, 1, sigma2=1e-2, rng=rng)
    pw, _ = estimate_pwclra(obs, methods=("LS", "JO"))
    assert np.array_equal(clra_estimate(obs, "LS").h_eff, pw["LS"].h_eff)
    assert np.array_equal(clra_estimate(obs, "JO").h_eff, pw["JO"].h_eff)


def test_clra_jo_single_user_matches_mmse(rng):
    ch = random_realization(rng, 8, 4, 1, 1, rank=2)
    obs = observe(ch, 8, 4, 4, 1, sigma2=1e-2, rng=rng)
    pw, _ = estimate_pwclra(obs, methods=("MMSE",))
    jo = clra_estimate(obs, "JO")
    assert rel_err(jo.h_eff, pw["MMSE"].h_eff) < 1e-12


def test_oracle_noiseless_exact(rng):
    ch = random_realization(rng, 16, 12, 3, 2)
    rep = oracle_2dls_estimate(observe(ch, 16, 4, 12, 3), ch.h_rb)
    assert rep.method == "2D-LS"
    assert 10 * np.log10(nmse(rep.h_eff, ch.h_eff)) < -80


def test_oracle_matches_pwclra_ls_without_noise_or_nlos(rng):
    ch = random_realization(rng, 32, 16, 4, 2, rank=3)
    assert np.all(ch.h_rb_nlos == 0)
    obs = observe(ch, 32, 4, 16, 2)
    pw, _ = estimate_pwclra(obs, methods=("LS",), ranks=3)
    oracle = oracle_2dls_estimate(obs, ch.h_rb)
    assert rel_err(oracle.h_eff, pw["LS"].h_eff) < 1e-8


def test_oracle_infeasible(rng):
    ch = random_realization(rng, 8, 4, 1, 1)
    h_rb = ch.h_rb.copy()
    h_rb[:, 2] = 0
    obs = observe(ChannelRealization(h_rb, 0 * h_rb, ch.h_ur), 8, 4, 4, 1)
    with pytest.raises(OracleInfeasibleError):
        oracle_2dls_estimate(obs, h_rb)
    with pytest.raises(ConfigurationError):
        oracle_2dls_estimate(obs, h_rb[:, :3])


def test_clra_overhead_values():
    rep = clra_overhead(16, 4, 128, 16, 256)
    assert rep.value == 1152
    assert any("1104" in n for n in rep.notes)
    assert clra_overhead(1, 1, 4, 4, 1).value == 2
    assert clra_overhead(3, 5, 64, 8, 40).value - clra_overhead(3, 4, 64, 8, 40).value == 40
    assert clra_overhead(32, 1, 128, 16, 256, 4, 2).feasible
    assert not clra_overhead(31, 1, 128, 16, 256, 4, 2).feasible
    assert not clra_overhead(32, 1, 128, 16, 256, 4, 2, rank=17).feasible
    with pytest.raises(ConfigurationError):
        clra_overhead(0, 1, 4, 4, 1)


def test_baseline_config():
    assert BaselineConfig("CLRA-JO", 2, 3).b_r == 3
    with pytest.raises(ConfigurationError):
        BaselineConfig("CLRA-LS", 0, 1)
    with pytest.raises(ConfigurationError):
        BaselineConfig("OMP")
