import numpy as np
import pytest

import oracles
from mlbpso.control import POLYNOMIAL, constant_hm_matrix
from mlbpso.errors import ConfigurationError
from mlbpso.harness import (BASELINE, DYNAMIC, PER_PARTICLE_SEEDS, STATIC, CampaignConfig,
                            baseline_run, dynamic_fitness, evaluation_seed, make_surface,
                            run_campaign, static_controller, static_fitness)
from mlbpso.scenario import generate_layout
from mlbpso.sim import SimConfig, run


@pytest.fixture(scope="module")
def sc():
    return generate_layout(3, seed=1)


@pytest.fixture(scope="module")
def sim_cfg():
    return SimConfig(arrival_rate=4.0, duration=60)


def cfg(sc, sim_cfg, **kw):
    kw.setdefault("population", 4)
    kw.setdefault("iterations", 2)
    return CampaignConfig(scenario=sc, sim=sim_cfg, **kw)


def test_flat_surface_reproduces_baseline(sc, sim_cfg):
    c = cfg(sc, sim_cfg, mode=STATIC, surface=POLYNOMIAL)
    base = baseline_run(c)
    ev = static_fitness((6.0, 0.0, 0.0, 0.0), base.loads, c)
    assert ev.objectives == base.objectives
    assert ev.reports == base.reports


def test_static_polynomial_closed_form(sc, sim_cfg):
    c = cfg(sc, sim_cfg, mode=STATIC, surface=POLYNOMIAL)
    loads = np.linspace(0.1, 0.9, sc.n_cells)
    hm = static_controller((6.0, -4.0, 4.0, 2.0), loads, c)
    k, i = 2, 7
    assert hm[k, i] == pytest.approx(6 - 4 * loads[k] + 4 * loads[i] + 2 * loads[k] * loads[i])
    assert np.isinf(hm.diagonal()).all()


def test_replications_are_averaged(sc, sim_cfg):
    c = cfg(sc, sim_cfg, replications=3)
    base = baseline_run(c)
    seeds = c.baseline_seeds()
    assert len(set(seeds)) == 3
    reps = [run(sc, constant_hm_matrix(sc.n_cells, 6.0), sim_cfg, s) for s in seeds]
    assert base.objectives[0] == pytest.approx(np.mean([r.throughput_bps for r in reps]), rel=1e-15)
    assert base.objectives[1] == pytest.approx(np.mean([r.p_access for r in reps]), rel=1e-15)


def test_long_period_dynamic_equals_static(sc, sim_cfg):
    c = cfg(sc, sim_cfg, update_period=sim_cfg.duration + 1)
    base = baseline_run(c)
    pos = (40.0, 80.0)
    dyn = dynamic_fitness(pos, c, initial_loads=base.loads)
    stat = static_fitness(pos, base.loads, c)
    assert dyn.reports == stat.reports


def test_pinned_b_dimension(sc, sim_cfg):
    c = cfg(sc, sim_cfg)
    assert c.dim == 2 and c.bounds == ((1.0, 1.0), (120.0, 120.0))
    assert make_surface((3.0, 4.0), c).params == (3.0, 4.0, 6.0)
    free = cfg(sc, sim_cfg, pin_b=False)
    assert free.dim == 3
    assert cfg(sc, sim_cfg, surface=POLYNOMIAL).dim == 4


def test_config_validation_lists_fields(sc, sim_cfg):
    with pytest.raises(ConfigurationError) as err:
        cfg(sc, sim_cfg, mode="nope", replications=0)
    assert "mode" in str(err.value) and "replications" in str(err.value)
    with pytest.raises(ConfigurationError):
        cfg(sc, sim_cfg, lower=(1.0,), upper=(2.0,))
    with pytest.raises(ConfigurationError):
        CampaignConfig.from_dict({"scenario": sc.to_dict(), "bogus": 1})


def test_from_dict_resolves_scenario_path(tmp_path, sc):
    sc.save(tmp_path / "s.json")
    c = CampaignConfig.from_dict({"scenario": "s.json", "sim": {"duration": 10}}, base_dir=tmp_path)
    assert c.scenario == sc and c.sim.duration == 10


def test_seed_policies():
    a = [evaluation_seed(5, 0, p, it) for p in range(3) for it in range(3)]
    assert len(set(a)) == 1
    b = [evaluation_seed(5, 0, p, it, PER_PARTICLE_SEEDS) for p in range(3) for it in range(3)]
    assert len(set(b)) == 9
    assert evaluation_seed(5, 0) != evaluation_seed(6, 0) != evaluation_seed(5, 1)
    with pytest.raises(ConfigurationError):
        evaluation_seed(5, 0, policy="whatever")


def test_full_length_campaign_counts(sc):
    c = CampaignConfig(scenario=sc, sim=SimConfig(arrival_rate=3.0, duration=15))
    res = run_campaign(c)
    assert res.n_evaluations == 310 and res.n_iterated_evaluations == 300


def test_campaign_deterministic_and_archive_consistent(sc, sim_cfg):
    c = cfg(sc, sim_cfg, seed=3)
    a, b = run_campaign(c), run_campaign(c)
    assert a.archive.entries == b.archive.entries
    logged = [r.objectives for r in a.swarm.log if r.objectives is not None]
    assert set(a.archive.objectives) == oracles.brute_nondominated(logged)
    lo, hi = c.bounds
    for p in a.archive.positions:
        assert all(l <= x <= h for x, l, h in zip(p, lo, hi))


def test_per_particle_seed_campaign_differs(sc, sim_cfg):
    fixed = run_campaign(cfg(sc, sim_cfg, seed=3))
    varied = run_campaign(cfg(sc, sim_cfg, seed=3, seed_policy=PER_PARTICLE_SEEDS))
    assert fixed.baseline.objectives == varied.baseline.objectives
    # same swarm randomness, different simulation seeds
    assert fixed.swarm.log[0].position == varied.swarm.log[0].position
    assert fixed.swarm.log[0].objectives != varied.swarm.log[0].objectives


def test_parallel_matches_serial(sc, sim_cfg):
    serial = run_campaign(cfg(sc, sim_cfg, seed=8, mode=STATIC, surface=POLYNOMIAL))
    par = run_campaign(cfg(sc, sim_cfg, seed=8, mode=STATIC, surface=POLYNOMIAL, workers=2))
    assert serial.archive.entries == par.archive.entries
    assert [r.objectives for r in serial.swarm.log] == [r.objectives for r in par.swarm.log]


def test_baseline_mode_has_no_swarm(sc, sim_cfg):
    res = run_campaign(cfg(sc, sim_cfg, mode=BASELINE))
    assert res.swarm is None and res.n_evaluations == 0 and len(res.archive) == 0
    assert res.config.name == "planning"
    assert cfg(sc, sim_cfg, mode=DYNAMIC).name == "exp-dynamic"
