import numpy as np
import pytest

from mnpz import (
    CentroidMapping,
    GeneratorSpec,
    Instance,
    SolverConfig,
    UpdateRule,
    alpha_star,
    check_optimality,
    generate,
    make_iterate,
    solve,
)
from mnpz.iterate import InfeasiblePointError
from mnpz.solver import start_point
from mnpz.updates import UpdateContractError

from conftest import random_instance

CONFIGS = [(r, m) for r in ("pg", "coordinate") for m in ("oblivious",
                                                        "local_norm")]


def cfg(rule="pg", mapping="local_norm", **kw):
    return SolverConfig(rule=UpdateRule(rule), mapping=CentroidMapping(mapping),
                        **kw)


class TestAlphaStar:
    @pytest.mark.parametrize("x, w, u, expected", [
        ([0.5], [2.0], [1.0], 1.0 / 3.0),
        ([0.5], [-0.5], [np.inf], 0.5),
        ([0.5, 0.2], [0.7, 0.1], [1.0, 1.0], 1.0),
        ([0.0], [-1.0], [1.0], 0.0),
    ])
    def test_values(self, x, w, u, expected):
        assert alpha_star(x, w, u) == pytest.approx(expected, abs=1e-15)


class TestSolve:
    def test_origin_already_optimal(self):
        inst = Instance(np.eye(2), [-1.0, -2.0])
        rep = solve(inst)
        assert rep.status == "optimal"
        assert rep.major_cycles == 1 and rep.minor_cycles_total == 0
        assert not rep.trace[0].moved
        np.testing.assert_array_equal(rep.x_final, [0.0, 0.0])

    @pytest.mark.parametrize("rule, mapping", CONFIGS)
    def test_exact_fit(self, rule, mapping):
        inst = Instance(np.eye(2), [1.0, 2.0])
        rep = solve(inst, cfg(rule, mapping))
        np.testing.assert_allclose(rep.x_final, [1.0, 2.0])
        assert rep.objective == pytest.approx(0.0, abs=1e-28)

    def test_fw_requires_bounds(self):
        inst = Instance(np.eye(2), [1.0, 2.0])
        with pytest.raises(UpdateContractError, match="finite bounds"):
            solve(inst, cfg("fw"))

    def test_infeasible_start(self):
        inst = Instance(np.eye(2), [1.0, 2.0], [1.0, 1.0])
        with pytest.raises(InfeasiblePointError):
            solve(inst, cfg(start=np.array([2.0, 0.0])))

    @pytest.mark.parametrize("start", ["interior", "zero", None])
    def test_named_starts(self, start):
        inst = Instance(np.eye(3), [1.0, -1.0, 3.0], [1.0, 4.0, np.inf])
        rep = solve(inst, cfg(start=start))
        np.testing.assert_allclose(rep.x_final, [1.0, 0.0, 3.0])

    def test_interior_point(self):
        inst = Instance(np.eye(3), np.zeros(3), [1.0, 4.0, np.inf])
        np.testing.assert_array_equal(start_point(inst, "interior"),
                                      [0.5, 1.0, 1.0])
        with pytest.raises(ValueError):
            start_point(inst, "middle")

    def test_report_consistency(self, rng):
        inst = random_instance(rng, 6, 12)
        rep = solve(inst, cfg("coordinate"))
        r = inst.A @ rep.x_final - inst.b
        assert rep.objective == pytest.approx(0.5 * r @ r, abs=1e-10)
        kinds = [ev.cycle_kind for ev in rep.trace]
        assert kinds.count("major_update") == rep.major_cycles
        assert kinds.count("minor_centroid") == rep.minor_cycles_total
        assert sum(rep.minor_cycles_per_major()) <= rep.minor_cycles_total

    @pytest.mark.parametrize("rule, mapping", CONFIGS + [
        ("fw", "oblivious"), ("fw", "local_norm")])
    @pytest.mark.parametrize("seed", range(6))
    def test_trace_invariants(self, rule, mapping, seed):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, 4, 8, capacitated=(rule == "fw" or
                                                       seed % 2 == 1))
        rep = solve(inst, cfg(rule, mapping, opt_tol=1e-10))
        assert rep.status == "optimal"
        assert check_optimality(inst, make_iterate(inst, rep.x_final), 1e-10)
        prev = inst.objective(rep.x_start)
        for ev in rep.trace:
            assert ev.objective_after <= prev + 1e-12
            if ev.cycle_kind == "major_update" and ev.moved:
                assert ev.objective_after < prev
            prev = ev.objective_after
        assert all(c <= inst.n for c in rep.minor_cycles_per_major())
        # every clamped minor step reaches a new bound
        bound = sum(make_iterate(inst, rep.x_start).sizes[:2])
        for ev in rep.trace:
            now = ev.partition_sizes[0] + ev.partition_sizes[1]
            if ev.cycle_kind == "minor_centroid" and ev.alpha_star < 1.0:
                assert now > bound
            bound = now

    def test_iteration_cap(self):
        inst = generate(GeneratorSpec("rectangular", 10, 20, seed=1))
        rep = solve(inst, cfg("coordinate", max_major=3))
        assert rep.status == "iteration_cap" and rep.major_cycles == 3

    def test_time_limit(self):
        inst = generate(GeneratorSpec("rectangular", 30, 60, seed=1))
        rep = solve(inst, cfg("coordinate", time_limit=1e-9))
        assert rep.status == "time_limit"

    @pytest.mark.parametrize("kw", [dict(opt_tol=0.0), dict(snap_tol=-1.0),
                                    dict(max_major=0), dict(time_limit=0.0),
                                    dict(start="middle")])
    def test_invalid_config(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_local_norm_needs_few_minors_from_interior(self):
        inst = generate(GeneratorSpec("rectangular", 20, 40, seed=4))
        local = solve(inst, cfg("pg", "local_norm", start="interior"))
        obl = solve(inst, cfg("pg", "oblivious", start="interior"))
        assert local.objective == pytest.approx(obl.objective, rel=1e-9,
                                                abs=1e-20)
        assert local.minor_cycles_total < obl.minor_cycles_total
