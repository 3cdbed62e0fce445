"""Monte-Carlo orchestration and CSV emission.

Every (sweep point, trial) job draws from its own generators, derived from
``SeedSequence([base_seed, point_index, trial])`` and split into
independent streams for the channel, the PW-CLRA observations and the
CLRA observations.  Rows are sorted by (point, method, trial) before they
are written, so serial and parallel runs produce identical files.
"""

from __future__ import annotations

import csv
import io
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import clra_estimate, oracle_2dls_estimate
from .channel import approximation_error_profile, generate_realization, numerical_rank, \
    partition_pieces
from .errors import PwclraError
from .estimator import acquire_observations, estimate_pwclra
from .metrics import cascaded_energy, nmse, snr_to_power, to_db, user_snr
from .scenario import Scenario, SweepPoint, dump_scenario
from .training import gen_pilots

CSV_SCHEMA = "# pwclra-results v1"
CALIBRATION_KEY = 0xCA11B
SNR_CONVENTION = ("snr_db is the K-user average of P*||H_k^tot(v)||_F^2/sigma2 "
                  "with v the all-ones reflection vector")


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    method: str
    Q: int
    Z: int
    snr_db: float
    d_x_rb: float
    M: int
    geometry: str
    trial: int
    nmse_linear: float
    nmse_db: float
    runtime_seconds: float | None = None


CSV_FIELDS = tuple(f.name for f in fields(ResultRow))


def trial_streams(base_seed: int, point_index: int, trial: int) -> list[np.random.Generator]:
    """Channel, PW-CLRA-observation and CLRA-observation generators."""
    ss = np.random.SeedSequence([base_seed, point_index, trial])
    return [np.random.default_rng(s) for s in ss.spawn(3)]


def calibrated_power(scenario: Scenario, point: SweepPoint) -> float:
    """Transmit power calibrated at the reference distance.

    The calibration draws ignore the point's own distance and index, so
    points that differ only in ``d_x_rb_m`` share one power.
    """
    cfg = scenario.system_config(point, scenario.power_reference_d_x_rb_m)
    energies = []
    for draw in range(scenario.calibration_draws):
        rng = np.random.default_rng([scenario.base_seed, CALIBRATION_KEY, draw])
        energies.append(np.mean(cascaded_energy(generate_realization(cfg, rng))))
    mean_energy = float(np.mean(energies))
    return 10 ** (point.snr_db / 10) * scenario.sigma2 / mean_energy


def _true_ranks(h_rb: np.ndarray, q: int, cap: int) -> list[int]:
    return [min(numerical_rank(h_rb[:, idx]), cap) for idx in partition_pieces(h_rb.shape[1], q)]


def run_trial(scenario: Scenario, point: SweepPoint, trial: int,
              power: float | None = None, timing: bool = False) -> list[tuple]:
    """All method rows of one trial as ``(sort_key, ResultRow)`` pairs."""
    try:
        return _run_trial(scenario, point, trial, power, timing)
    except PwclraError as exc:
        raise type(exc)(f"scenario {scenario.name}, point {point.index}, "
                        f"trial {trial}: {exc}") from exc


def _run_trial(scenario, point, trial, power, timing):
    cfg = scenario.system_config(point)
    ch_rng, pw_rng, clra_rng = trial_streams(scenario.base_seed, point.index, trial)
    ch = generate_realization(cfg, ch_rng)
    sigma2 = scenario.sigma2
    if scenario.noiseless:
        power = 1.0
    elif power is None:
        power = snr_to_power(point.snr_db, ch, sigma2)
    pilots = gen_pilots(cfg.k_users, cfg.l_user, cfg.t_pilot, power)
    rho = user_snr(ch, power, sigma2)
    truth = ch.h_eff
    wanted = set(scenario.methods)
    results = {}                      # method -> (nmse, overhead, q, seconds)

    def acquire(q, rng):
        return acquire_observations(ch, cfg.n_bs, cfg.n_rf, cfg.m_ris, q, pilots, sigma2, rng,
                                    scenario.adaptive_beams)

    def ranks_for(q):
        if scenario.rank_mode == "true":
            return _true_ranks(ch.h_rb, q, cfg.n_rf)
        return None

    pw = [m for m in scenario.methods if m.startswith("PW-CLRA-")]
    obs_pw = None
    if pw or "2D-LS" in wanted:
        obs_pw = acquire(point.q_pieces, pw_rng)
    if pw:
        t0 = time.perf_counter()
        reports, _ = estimate_pwclra(obs_pw, methods=[m[8:] for m in pw], rho=rho,
                                     ranks=ranks_for(point.q_pieces), t_max=scenario.t_max,
                                     ridge=scenario.ridge)
        dt = time.perf_counter() - t0
        for m in pw:
            results[m] = (nmse(reports[m[8:]].h_eff, truth), obs_pw.design.overhead,
                          point.q_pieces, dt)
    clra = [m for m in scenario.methods if m.startswith("CLRA-")]
    if clra:
        obs_1 = obs_pw if point.q_pieces == 1 and obs_pw is not None else acquire(1, clra_rng)
        for m in clra:
            t0 = time.perf_counter()
            rep = clra_estimate(obs_1, m[5:], rho=rho, ranks=ranks_for(1),
                                t_max=scenario.t_max, ridge=scenario.ridge)
            results[m] = (nmse(rep.h_eff, truth), obs_1.design.overhead, 1,
                          time.perf_counter() - t0)
    if "2D-LS" in wanted:
        t0 = time.perf_counter()
        rep = oracle_2dls_estimate(obs_pw, ch.h_rb)
        results["2D-LS"] = (nmse(rep.h_eff, truth), obs_pw.design.overhead, point.q_pieces,
                            time.perf_counter() - t0)
    if "APPROX" in wanted:
        t0 = time.perf_counter()
        errs = [approximation_error_profile(block, point.q_pieces, scenario.approx_rank)
                for h in truth for block in np.split(h, cfg.l_user, axis=1)]
        results["APPROX"] = (float(np.mean(errs)), cfg.overhead, point.q_pieces,
                             time.perf_counter() - t0)

    snr = math.inf if scenario.noiseless else point.snr_db
    out = []
    for mi, m in enumerate(scenario.methods):
        err, z, q, dt = results[m]
        if not (math.isfinite(err) and err >= 0):
            raise PwclraError(f"{m} produced a non-finite NMSE")
        row = ResultRow(scenario.name, m, q, z, snr, point.d_x_rb_m, point.m_ris,
                        point.geometry, trial, err, to_db(err), dt if timing else None)
        out.append(((point.index, mi, trial), row))
    return out


def _job(args):
    return run_trial(*args)


def run_scenario(scenario: Scenario, parallel: int = 1, timing: bool = False,
                 progress=None) -> list[ResultRow]:
    """Run every (point, trial) job and return rows sorted by point, method, trial."""
    points = scenario.points()
    powers = {}
    if scenario.power_reference_d_x_rb_m is not None and not scenario.noiseless:
        for p in points:
            powers[p.index] = calibrated_power(scenario, p)
    jobs = [(scenario, p, t, powers.get(p.index), timing)
            for p in points for t in range(scenario.trials)]
    keyed = []
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            for res in pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * parallel))):
                keyed.extend(res)
                if progress:
                    progress()
    else:
        for job in jobs:
            keyed.extend(_job(job))
            if progress:
                progress()
    keyed.sort(key=lambda kr: kr[0])
    return [row for _, row in keyed]


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(CSV_SCHEMA + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(v) for v in astuple(r)])
    return buf.getvalue()


def write_csv(rows, path) -> None:
    Path(path).write_text(rows_to_csv(rows))


def read_csv(path) -> list[dict]:
    """Rows of a results file as dicts with numeric fields converted."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_SCHEMA:
        raise PwclraError(f"{path} is not a {CSV_SCHEMA[2:]} file")
    out = []
    for rec in csv.DictReader(lines[1:]):
        for key in ("Q", "Z", "M", "trial"):
            rec[key] = int(rec[key])
        for key in ("snr_db", "d_x_rb", "nmse_linear", "nmse_db"):
            rec[key] = float(rec[key])
        rec["runtime_seconds"] = (None if rec["runtime_seconds"] == "NA"
                                  else float(rec["runtime_seconds"]))
        out.append(rec)
    return out


def metadata_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.txt")


def metadata_text(scenario: Scenario) -> str:
    lines = [
        f"pwclra {__version__}",
        f"numpy {np.__version__}",
        f"python {platform.python_version()}",
        f"csv schema: {CSV_SCHEMA[2:]}",
        f"snr convention: {SNR_CONVENTION}",
        f"noise variance: {scenario.sigma2!r} W",
        "seeding: SeedSequence([base_seed, point_index, trial]) split into "
        "channel / PW-CLRA / CLRA streams",
        "",
        "sweep points:",
    ]
    for p in scenario.points():
        lines.append(f"  {p.index}: Q={p.q_pieces} snr_db={p.snr_db} d_x_rb_m={p.d_x_rb_m} "
                     f"M={p.m_ris} geometry={p.geometry}")
    lines += ["", "resolved scenario:", dump_scenario(scenario)]
    return "\n".join(lines)


def write_metadata(scenario: Scenario, csv_path) -> Path:
    path = metadata_path(csv_path)
    path.write_text(metadata_text(scenario))
    return path
