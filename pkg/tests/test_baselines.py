import numpy as np
import pytest

from mnpz import Instance
from mnpz.baselines import BaselineConfig, run_baseline, stationarity
from mnpz.oracle import brute_force_optimum

from conftest import random_instance


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(method="lbfgs"), dict(eps=0.0),
                                    dict(max_iters=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            BaselineConfig(**kw)


@pytest.mark.parametrize("method", ["pg", "pfg"])
def test_separable_fit(method):
    inst = Instance(np.eye(2), [1.0, 2.0])
    rep = run_baseline(inst, BaselineConfig(method))
    assert rep.status == "optimal"
    np.testing.assert_allclose(rep.x_final, [1.0, 2.0], atol=1e-8)
    g = inst.A.T @ (inst.A @ rep.x_final - inst.b)
    assert stationarity(inst, rep.x_final, g) <= 1e-8 * (1 + np.sqrt(5))


@pytest.mark.parametrize("method", ["pg", "pfg", "fw", "afw"])
def test_huge_eps_stops_immediately(method):
    inst = Instance(np.eye(2), [1.0, 2.0], [1.0, 1.0])
    rep = run_baseline(inst, BaselineConfig(method, eps=1e6))
    assert rep.major_cycles == 0
    np.testing.assert_array_equal(rep.x_final, [0.0, 0.0])


def test_fw_monotone_on_planted_optimum(rng):
    A = rng.uniform(-0.5, 0.5, (3, 2))
    inst = Instance(A, A @ np.ones(2), np.ones(2))
    rep = run_baseline(inst, BaselineConfig("fw", record_trace=True,
                                            max_iters=2000))
    objs = [ev.objective_after for ev in rep.trace]
    assert np.all(np.diff(objs) <= 1e-15)
    assert rep.objective < 1e-10


@pytest.mark.parametrize("method", ["fw", "afw"])
def test_fw_needs_bounds(method):
    with pytest.raises(ValueError, match="finite bounds"):
        run_baseline(Instance(np.eye(2), [1.0, 1.0]), BaselineConfig(method))


def test_afw_needs_vertex_start():
    inst = Instance(np.eye(2), [1.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        run_baseline(inst, BaselineConfig("afw", start=[0.5, 0.0]))


def test_pg_never_increases(rng):
    inst = random_instance(rng, 6, 12, capacitated=True)
    rep = run_baseline(inst, BaselineConfig("pg", record_trace=True))
    objs = [ev.objective_after for ev in rep.trace]
    assert np.all(np.diff(objs) <= 1e-14)


@pytest.mark.parametrize("method", ["pg", "pfg", "afw"])
@pytest.mark.parametrize("seed", range(6))
def test_reaches_oracle_optimum(method, seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 5, 8, capacitated=True, feasible=seed % 2 == 0)
    cert = brute_force_optimum(inst)
    rep = run_baseline(inst, BaselineConfig(method))
    assert rep.status == "optimal"
    assert rep.objective - cert.p_star <= 1e-6


@pytest.mark.parametrize("seed", [0, 2, 4])
def test_fw_reaches_oracle_optimum(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 5, 8, capacitated=True, feasible=True)
    cert = brute_force_optimum(inst)
    rep = run_baseline(inst, BaselineConfig("fw"))
    assert rep.objective - cert.p_star <= 1e-6


def test_fw_gap_shrinks_without_stationarity():
    # plain Frank-Wolfe zigzags near a face: the gap keeps falling while the
    # stationarity test is never met
    rng = np.random.default_rng(1)
    inst = random_instance(rng, 5, 8, capacitated=True, feasible=False)
    p = brute_force_optimum(inst).p_star
    gaps = [run_baseline(inst, BaselineConfig("fw", max_iters=k)).objective - p
            for k in (1000, 10000, 100000)]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    assert gaps[2] < 1e-5


def test_pfg_on_nnls():
    rng = np.random.default_rng(0)
    inst = random_instance(rng, 5, 8)
    cert = brute_force_optimum(inst)
    rep = run_baseline(inst, BaselineConfig("pfg"))
    assert rep.status == "optimal"
    assert rep.objective - cert.p_star <= 1e-6
