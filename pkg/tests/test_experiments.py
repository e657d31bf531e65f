import math

import numpy as np
import pytest
from scipy.special import ndtri

from cutofflab.exceptions import ConfigError, PreconditionError
from cutofflab.experiments import (
    Scenario,
    cutoff_sweep,
    exact_profile,
    profile_simulation,
    run_scenario,
)
from cutofflab.measures import IsotropicGaussian, gaussian_tv

WINDOW = math.log(ndtri(0.875) / ndtri(0.625))


def test_scenario_defaults_and_validation():
    sc = Scenario("s", "prox-gaussian", {"h": "0.5", "chains": "1e3"})
    assert sc.params["h"] == 0.5 and sc.params["chains"] == 1000
    with pytest.raises(ConfigError):
        Scenario("s", "prox-gaussian", {"bogus": 1})
    with pytest.raises(ConfigError):
        Scenario("s", "no-such-family")
    with pytest.raises(ConfigError):
        Scenario("s", "lmc-gaussian", {"h": 2.5})
    with pytest.raises(ConfigError):
        Scenario("s", "ou-mean-shift", eps="0.25, 1.5")
    assert Scenario("s", "ou-mean-shift").digest() != Scenario("s", "ou-mean-shift", seed=1).digest()


def test_cutoff_sweep_ratio_monotone_and_window_constant():
    ds = [10.0**k for k in range(2, 13)]
    rows, reports = cutoff_sweep(1.0, 1.0, ds, 0.25)
    ratios = [r.ratio for r in rows]
    assert all(a <= b for a, b in zip(ratios, ratios[1:])) and ratios[-1] <= 1
    assert max(abs(r.window - WINDOW) for r in rows) < 1e-9
    assert rows[4].ratio == pytest.approx(0.825536, abs=1e-6)
    assert rows[-1].ratio == pytest.approx(0.910013, abs=1e-6)
    assert all(r.holds for r in reports)


def test_cutoff_sweep_proximal_sampler():
    rows, reports = cutoff_sweep(1.0, 1.0, [1e2, 1e6, 1e12], 0.25, h=1.0)
    assert all(r.holds for r in reports)
    assert rows[-1].ratio > rows[0].ratio
    with pytest.raises(PreconditionError):
        cutoff_sweep(1.0, 1.0, [], 0.25)


def test_prox_simulation_agrees_with_recursion():
    sc = Scenario("p", "prox-gaussian", {"k_steps": 12, "chains": 20_000}, seed=5)
    res = profile_simulation(sc, threads=2)
    band = 3 * res.profile.stderr
    assert np.all(np.abs(res.profile.tv - res.exact.tv) <= band)
    assert res.exact.tv[1] == pytest.approx(0.6826894921370859, abs=1e-12)


def test_lmc_simulation_shows_bias_floor():
    sc = Scenario("l", "lmc-gaussian", {"k_steps": 40, "chains": 20_000, "m0": 0.0}, seed=2)
    res = profile_simulation(sc)
    floor = gaussian_tv(IsotropicGaussian.isotropic(0, 4 / 3), IsotropicGaussian.isotropic(0, 1))
    assert res.exact.tv[-1] == pytest.approx(floor, rel=1e-6)
    assert floor > 0.05
    assert abs(res.profile.tv[-1] - floor) <= 3 * res.profile.stderr[-1]


def test_zero_horizon_gives_single_point():
    sc = Scenario("z", "prox-gaussian", {"k_steps": 0, "chains": 1000}, seed=1)
    res = profile_simulation(sc)
    assert res.profile.times.tolist() == [0]
    ou = exact_profile(Scenario("z", "ou-general-gaussian", {"horizon": 0}))
    assert ou.times.tolist() == [0.0]


def test_simulation_rejects_closed_form_family():
    with pytest.raises(PreconditionError):
        profile_simulation(Scenario("o", "ou-mean-shift"))


def test_run_scenario_sweep_manifest(tmp_path):
    sc = Scenario("sweep", "ou-mean-shift", {"d_list": "1e2 1e4 1e6"})
    man = run_scenario(sc, tmp_path)
    assert man.ok and len(man.artifacts) == 3
    text = (tmp_path / "manifest.txt").read_text()
    assert "artifacts = sweep.csv, inequalities.csv, ratio_vs_d.svg" in text
    assert f"config_sha256 = {sc.digest()}" in text
    header = (tmp_path / "sweep.csv").read_text().splitlines()[0]
    assert header == "d,tmix_eps,tmix_1meps,ratio,window,window_bound,product_ratio"


def test_run_scenario_prox_general_records_acceptance(tmp_path):
    sc = Scenario("g", "prox-general", {"chains": 2000, "k_steps": 15}, seed=3)
    man = run_scenario(sc, tmp_path)
    assert man.ok
    assert "acceptance_rate = " in (tmp_path / "manifest.txt").read_text()
    assert 0 < man.acceptance_rate < 1


def test_run_scenario_is_byte_reproducible(tmp_path):
    sc = Scenario("r", "prox-gaussian", {"k_steps": 8, "chains": 3000, "oracle": "rejection"},
                  seed=9)
    run_scenario(sc, tmp_path / "a", threads=1)
    run_scenario(sc, tmp_path / "b", threads=3)
    for name in ("profile.csv", "inequalities.csv", "tv_profile.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_ou_general_reports_all_hold(tmp_path):
    man = run_scenario(Scenario("o", "ou-general-gaussian", eps=(0.1, 0.25)), tmp_path / "a")
    assert man.ok
    names = {r.name for r in man.reports}
    assert {"parabolic_reg_ld", "lpi_langevin", "mixing_bound_ld", "window_bound_ld"} <= names


def test_dirac_start_skips_kl_bound(tmp_path):
    # infinite initial KL: the mixing bound has nothing to say, the others still run
    man = run_scenario(Scenario("o", "ou-general-gaussian", {"s0sq": 0.0}), tmp_path)
    names = {r.name for r in man.reports}
    assert man.ok and "mixing_bound_ld" not in names and "lpi_langevin" in names
