import math

import numpy as np
import pytest

from pwclra import runner
from pwclra.errors import ConfigurationError, DegenerateGeometryError
from pwclra.runner import (CSV_FIELDS, CSV_SCHEMA, calibrated_power, metadata_path,
                           read_csv, rows_to_csv, run_scenario, write_csv, write_metadata)
from pwclra.scenario import (PRESETS, Scenario, dump_scenario, load_scenario,
                             resolve_scenario, scenario_from_dict)

NOISELESS = Scenario("exact", methods=("PW-CLRA-LS",), trials=1, q_pieces=8, sigma2_dbm=None,
                     user_model="gaussian", rank_mode="true")


def small(**kw):
    base = dict(name="small", methods=("PW-CLRA-LS", "PW-CLRA-JO"), trials=2, n_bs=8, n_rf=4,
                m_ris=(8,), q_pieces=(2,), k_users=2, l_user=1)
    base.update(kw)
    return Scenario(**base)


def test_scenario_file_roundtrip(tmp_path):
    sc = small(snr_db=[0, 10])
    path = tmp_path / "s.yaml"
    path.write_text(dump_scenario(sc))
    assert load_scenario(path) == sc
    assert resolve_scenario(path) == sc
    assert resolve_scenario("fig4-desk") is PRESETS["fig4-desk"]


def test_scenario_rejects_unknown_and_invalid(tmp_path):
    with pytest.raises(ConfigurationError, match="snr"):
        scenario_from_dict({"name": "x", "snr": 10})
    with pytest.raises(ConfigurationError):
        small(methods=("PW-CLRA-XX",))
    with pytest.raises(ConfigurationError):
        small(q_pieces=(3,))
    with pytest.raises(ConfigurationError):
        small(geometry=("UPA",), upa_n_z=3)
    with pytest.raises(ConfigurationError):
        small(trials=0)
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: [unclosed\n")
    with pytest.raises(ConfigurationError):
        load_scenario(bad)
    with pytest.raises(ConfigurationError):
        resolve_scenario(tmp_path / "missing.yaml")


def test_presets_are_valid():
    assert set(PRESETS) == {"fig2-desk", "fig4-desk", "fig5-desk", "fig6-desk", "fig7-desk",
                            "fig8-desk"}
    assert [p.snr_db for p in PRESETS["fig5-desk"].points()] == list(range(-20, 21, 5))
    assert PRESETS["fig8-desk"].system_config(PRESETS["fig8-desk"].points()[0]).ris_upa_shape \
        == (32, 2)


def test_noiseless_single_row():
    rows = run_scenario(NOISELESS)
    assert len(rows) == 1
    assert rows[0].nmse_db <= -80 and math.isinf(rows[0].snr_db)


def test_row_accounting_and_order():
    sc = small(snr_db=(0, 10), methods=("PW-CLRA-LS", "CLRA-JO", "2D-LS"), trials=3)
    rows = run_scenario(sc)
    assert len(rows) == 2 * 3 * 3
    keys = [(r.snr_db, sc.methods.index(r.method), r.trial) for r in rows]
    assert keys == sorted(keys)
    assert all(r.nmse_linear >= 0 and math.isfinite(r.nmse_linear) for r in rows)
    assert {r.Q for r in rows if r.method == "CLRA-JO"} == {1}
    assert all(r.runtime_seconds is None for r in rows)


def test_two_methods_two_rows_per_trial():
    rows = run_scenario(small(trials=4))
    for t in range(4):
        assert len([r for r in rows if r.trial == t]) == 2


def test_determinism_serial_vs_parallel():
    sc = small(snr_db=(0, 10), trials=3)
    a = rows_to_csv(run_scenario(sc))
    b = rows_to_csv(run_scenario(sc))
    c = rows_to_csv(run_scenario(sc, parallel=2))
    assert a == b == c
    d = rows_to_csv(run_scenario(sc.with_(base_seed=1)))
    assert d != a


def test_timing_column():
    rows = run_scenario(small(trials=1), timing=True)
    assert all(r.runtime_seconds >= 0 for r in rows)


def test_csv_and_metadata(tmp_path):
    sc = small()
    rows = run_scenario(sc)
    path = tmp_path / "out.csv"
    write_csv(rows, path)
    text = path.read_text().splitlines()
    assert text[0] == CSV_SCHEMA
    assert tuple(text[1].split(",")) == CSV_FIELDS
    back = read_csv(path)
    assert [r["nmse_linear"] for r in back] == [r.nmse_linear for r in rows]
    meta = write_metadata(sc, path)
    assert meta == metadata_path(path) and meta.name == "out.meta.txt"
    assert "all-ones" in meta.read_text()


def test_distance_sweep_uses_reference_power():
    sc = small(d_x_rb_m=(20.0, 50.0), power_reference_d_x_rb_m=50.0, calibration_draws=2)
    p0, p1 = (calibrated_power(sc, p) for p in sc.points())
    assert p0 == p1 > 0
    rows = run_scenario(sc)
    assert len(rows) == 2 * 2 * 2


def test_approx_rows():
    sc = small(methods=("APPROX",), q_pieces=(1, 2), sigma2_dbm=None, approx_rank=1)
    rows = run_scenario(sc)
    by_q = {}
    for r in rows:
        by_q.setdefault(r.Q, []).append(r.nmse_linear)
    assert all(a2 <= a1 + 1e-12 for a1, a2 in zip(by_q[1], by_q[2]))


def test_errors_carry_context(monkeypatch):
    def boom(*a, **k):
        raise DegenerateGeometryError("coincident points")
    monkeypatch.setattr(runner, "generate_realization", boom)
    with pytest.raises(DegenerateGeometryError, match="scenario small, point 0, trial 0"):
        run_scenario(small())


def test_plot_report(tmp_path):
    from pwclra.plotting import plot_results
    path = tmp_path / "r.csv"
    write_csv(run_scenario(small(snr_db=(0, 10))), path)
    png = plot_results(path)
    assert png.name == "r_nmse_vs_snr_db.png" and png.stat().st_size > 0
