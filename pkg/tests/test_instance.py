import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mnpz import GeneratorSpec, Instance, generate, incidence_instance
from mnpz.instance import (
    InstanceFormatError,
    load_instance,
    near_square_sizes,
    read_instance,
    save_instance,
    write_instance,
)
from mnpz.oracle import brute_force_optimum, enumerate_circuits


class TestInstance:
    def test_defaults_to_nnls(self):
        inst = Instance(np.eye(2), [1.0, 2.0])
        assert inst.is_nnls and not inst.all_bounded
        assert np.all(np.isinf(inst.u))

    def test_arrays_are_read_only(self):
        inst = Instance(np.eye(2), [1.0, 2.0])
        with pytest.raises(ValueError):
            inst.A[0, 0] = 5.0

    @pytest.mark.parametrize("A, b, u", [
        (np.eye(2), [1.0], None),
        (np.eye(2), [1.0, 2.0], [1.0]),
        (np.eye(2), [1.0, 2.0], [1.0, 0.0]),
        (np.eye(2), [1.0, np.nan], None),
        (np.zeros((0, 2)), [], None),
    ])
    def test_rejects_bad_shapes(self, A, b, u):
        with pytest.raises(ValueError):
            Instance(A, b, u)

    def test_objective(self):
        inst = Instance(np.eye(2), [1.0, 2.0])
        assert inst.objective(np.zeros(2)) == 2.5


class TestGenerator:
    def test_deterministic(self):
        spec = GeneratorSpec("rectangular", 2, 4, seed=11)
        a, b = generate(spec), generate(spec)
        assert a.A.tobytes() == b.A.tobytes()
        assert a.b.tobytes() == b.b.tobytes()

    def test_entry_range_and_bounds(self):
        inst = generate(GeneratorSpec("rectangular", 30, 60, capacitated=True,
                                      seed=3))
        assert np.all(np.abs(inst.A) <= 0.5)
        np.testing.assert_array_equal(inst.u, np.ones(60))

    def test_streams_are_independent(self):
        plain = generate(GeneratorSpec("rectangular", 4, 8, seed=5))
        planted = generate(GeneratorSpec("rectangular", 4, 8, feasibility=0.5,
                                         seed=5))
        np.testing.assert_array_equal(plain.A, planted.A)

    def test_empty_planted_support(self):
        # chi this small leaves the planted support empty for any seed
        inst = generate(GeneratorSpec("rectangular", 3, 6, feasibility=1e-12,
                                      seed=1))
        np.testing.assert_array_equal(inst.b, np.zeros(3))

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("shape, m, n", [("rectangular", 3, 6),
                                             ("near-square", 5, 5)])
    def test_planted_is_feasible(self, seed, shape, m, n):
        inst = generate(GeneratorSpec(shape, m, n, feasibility=1.0, seed=seed))
        assert brute_force_optimum(inst).p_star <= 1e-20

    @pytest.mark.parametrize("kw", [
        dict(shape="rectangular", m=3, n=5),
        dict(shape="near-square", m=10, n=12),
        dict(shape="near-square", m=10, n=9),
        dict(shape="square", m=3, n=3),
        dict(shape="rectangular", m=0, n=4),
        dict(shape="rectangular", m=2, n=4, feasibility=1.5),
    ])
    def test_invalid_spec(self, kw):
        with pytest.raises(ValueError):
            GeneratorSpec(**kw)

    def test_near_square_grid(self):
        assert near_square_sizes(100) == [102, 105, 110]


class TestIncidence:
    def test_triangle(self):
        inst = incidence_instance([(1, 2), (2, 3), (3, 1)], [0, 0, 0])
        np.testing.assert_array_equal(inst.A.sum(axis=0), 0.0)
        assert np.all(np.sort(inst.A, axis=0) == [[-1], [0], [1]])
        assert enumerate_circuits(inst.A).kappa == 1.0

    def test_single_arc_unit_flow(self):
        inst = incidence_instance([(1, 2)], [-1.0, 1.0])
        cert = brute_force_optimum(inst)
        np.testing.assert_allclose(cert.x_star, [1.0])
        assert cert.p_star < 1e-28

    def test_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            incidence_instance([(2, 2)], [0.0, 0.0])

    def test_node_out_of_range(self):
        with pytest.raises(ValueError):
            incidence_instance([(1, 4)], [0.0, 0.0])


class TestFormat:
    def test_round_trip(self):
        inst = generate(GeneratorSpec("rectangular", 3, 6, seed=2))
        inst = Instance(inst.A[:, :5], inst.b,
                        [1.0, np.inf, 2.5, np.inf, 0.125])
        assert read_instance(write_instance(inst)) == inst

    def test_file_round_trip(self, tmp_path):
        inst = generate(GeneratorSpec("rectangular", 2, 4, capacitated=True,
                                      seed=9))
        path = tmp_path / "i.mnp"
        save_instance(inst, path)
        assert path.read_text().splitlines()[:2] == ["MNP 1", "2 4"]
        assert load_instance(path) == inst

    def test_inf_token(self):
        inst = read_instance("MNP 1\n1 2\n1 2\n3\ninf 1\n")
        assert np.isinf(inst.u[0]) and inst.u[1] == 1.0

    @pytest.mark.parametrize("text, lineno", [
        ("MNP 2\n1 1\n1\n1\n1\n", 1),
        ("MNP 1\n1\n1\n1\n1\n", 2),
        ("MNP 1\n1 2\n1 x\n3\ninf 1\n", 3),
        ("MNP 1\n1 2\n1 2\n3\n", 5),
        ("MNP 1\n1 2\n1 2\n3\n1 1\n7\n", 6),
        ("MNP 1\n1 2\n1 2\n3\n1 -1\n", 5),
    ])
    def test_errors_name_line(self, text, lineno):
        with pytest.raises(InstanceFormatError) as exc:
            read_instance(text)
        assert exc.value.lineno == lineno
        assert "line %d" % lineno in str(exc.value)

    def test_extra_row_of_A(self):
        text = "MNP 1\n2 3\n1 2 3\n4 5 6\n7 8 9\n1 2\ninf inf inf\n"
        with pytest.raises(InstanceFormatError) as exc:
            read_instance(text)
        assert exc.value.lineno == 5


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_round_trip_exact(m, n, seed):
    rng = np.random.default_rng(seed)
    u = np.where(rng.random(n) < 0.5, np.inf, rng.uniform(0.1, 3.0, n))
    inst = Instance(rng.standard_normal((m, n)), rng.standard_normal(m), u)
    again = read_instance(write_instance(inst))
    assert again.A.tobytes() == inst.A.tobytes()
    assert again.u.tobytes() == inst.u.tobytes()
