import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from informativity.instances import random_instance
from informativity.oracle import (
    construct_counterexample,
    cross_validate,
    family_from_triple,
    model_check,
    model_status,
    parametrize,
    sample,
    sandwich_matrix,
    solve_perturbation,
)
from informativity.geometric import jstar, weakly_unobservable
from informativity.linalg import containment_residual, image_of
from informativity.problem import (
    DataSet,
    InconsistentDataError,
    NoisePattern,
    SystemStructure,
    build_reduction,
    membership_residual,
)
from informativity.properties import Property, Status

from conftest import fixture_path


class TestParametrize:
    def test_example3_shape(self, example3):
        fam = parametrize(build_reduction(*example3))
        assert fam.free_dims == (1, 1)
        for A in sample(fam, 3, seed=1):
            assert abs(A[1, 1]) <= 1e-12

    def test_sec5_shape(self, sec5):
        fam = parametrize(build_reduction(*sec5))
        fixed = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
        for A in sample(fam, 5, seed=2):
            assert np.allclose(A[:3, 1:], fixed)

    def test_singleton(self, rng):
        sys = SystemStructure(rng.standard_normal((2, 1)), np.zeros((0, 2)), np.zeros((0, 1)),
                              np.zeros((2, 0)), np.zeros((0, 0)))
        A = rng.standard_normal((2, 2))
        X = rng.standard_normal((2, 3))
        U = rng.standard_normal((1, 2))
        for t in range(2):
            X[:, t + 1] = A @ X[:, t] + sys.B @ U[:, t]
        fam = parametrize(build_reduction(sys, DataSet(U, X, np.zeros((0, 2)))))
        assert fam.free_dims == (0, 0)
        assert np.allclose(fam.A_particular, A)
        draws = sample(fam, 3)
        assert all(np.allclose(d, A) for d in draws)

    def test_inconsistent(self, example3):
        sys, data = example3
        bad = DataSet(data.U_minus, data.X, [[1.0, 0.0]])
        with pytest.raises(InconsistentDataError):
            parametrize(build_reduction(sys.replace(E=np.zeros((2, 1))), bad))

    @pytest.mark.parametrize("name", ["example3", "sec5"])
    def test_sample_residual_and_determinism(self, name):
        from informativity.problem import load_problem
        sys, data, _ = load_problem(fixture_path(name))
        fam = parametrize(build_reduction(sys, data))
        a = sample(fam, 10, seed=9)
        b = sample(fam, 10, seed=9)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        assert all(fam.residual(A) <= 1e-9 for A in a)

    @given(st.integers(0, 100_000), st.sampled_from(list(NoisePattern)))
    @settings(max_examples=25)
    def test_completeness(self, seed, pattern):
        inst = random_instance(np.random.default_rng(seed), pattern)
        red = build_reduction(inst.sys, inst.data)
        fam = family_from_triple(red.P, red.Q, red.R)
        rng = np.random.default_rng(seed)
        n = fam.n
        # project random matrices onto {Delta | Q Delta P = 0}
        Qp = np.linalg.pinv(red.Q) @ red.Q if red.Q.size else np.zeros((n, n))
        Pp = red.P @ np.linalg.pinv(red.P) if red.P.size else np.zeros((n, n))
        for _ in range(4):
            M = rng.standard_normal((n, n))
            delta = M - Qp @ M @ Pp
            scale = max(1.0, np.linalg.norm(red.Q) * np.linalg.norm(M) * np.linalg.norm(red.P))
            assert np.linalg.norm(red.Q @ delta @ red.P) <= 1e-9 * scale
            A0, res = solve_perturbation(fam, np.eye(n), delta)
            assert res <= 1e-8 * max(1.0, np.linalg.norm(delta))


class TestModelCheck:
    A_true = np.array([[0.0, 1.0], [2.0, 0.0]])

    def test_example3_true_system(self, example3):
        sys, _ = example3
        assert model_check(self.A_true, sys, Property.DETECTABILITY)
        assert model_check(self.A_true, sys, Property.OBSERVABILITY)

    def test_example3_zero_matrix(self, example3):
        sys, _ = example3
        assert not model_check(np.zeros((2, 2)), sys, Property.OBSERVABILITY)

    def test_marginal(self, example3):
        sys, _ = example3
        # unobservable mode exactly on the unit circle
        assert model_status(np.diag([0.5, 1.0]), sys, Property.DETECTABILITY) == "marginal"

    def test_defective_unobservable_mode(self):
        # Jordan block at 2 with the eigenvector in ker C
        A = np.array([[2.0, 1.0], [0.0, 2.0]])
        sys = SystemStructure(np.zeros((2, 0)), [[0.0, 1.0]], np.zeros((1, 0)),
                              np.zeros((2, 0)), np.zeros((1, 0)))
        assert model_status(A, sys, Property.DETECTABILITY) == "fails"

    @given(st.integers(0, 100_000))
    def test_strong_implies_plain(self, seed):
        rng = np.random.default_rng(seed)
        n, m, p = 3, 1, 2
        A = rng.integers(-2, 3, (n, n)).astype(float)
        sys = SystemStructure(rng.integers(-2, 3, (n, m)).astype(float), rng.integers(-2, 3, (p, n)).astype(float),
                              rng.integers(-1, 2, (p, m)).astype(float), np.zeros((n, 0)), np.zeros((p, 0)))
        if model_check(A, sys, Property.STRONG_OBSERVABILITY):
            assert model_check(A, sys, Property.OBSERVABILITY)
        if model_check(A, sys, Property.STRONG_CONTROLLABILITY):
            assert model_check(A, sys, Property.CONTROLLABILITY)


class TestCounterexamples:
    def test_example3_observability(self, example3):
        sys, data = example3
        cx = construct_counterexample(build_reduction(sys, data), sys, Property.OBSERVABILITY, data=data)
        assert cx.verified and cx.membership_residual <= 1e-9
        assert not model_check(cx.A_bad, sys, Property.OBSERVABILITY)

    def test_example4_controllability(self, example3):
        sys, data = example3
        cx = construct_counterexample(build_reduction(sys, data), sys, Property.CONTROLLABILITY, data=data)
        assert cx.verified and cx.certificate["kind"] == "precondition"

    def test_informative_returns_none(self, example3):
        sys, data = example3
        assert construct_counterexample(build_reduction(sys, data), sys, Property.DETECTABILITY) is None

    def test_json(self, example3):
        sys, data = example3
        cx = construct_counterexample(build_reduction(sys, data), sys, Property.OBSERVABILITY, data=data)
        doc = cx.to_json()
        assert doc["property"] == "observability" and len(doc["A_bad"]) == 2
        assert set(doc["certificate"]["lambda"]) == {"re", "im"}

    @given(st.integers(0, 100_000), st.sampled_from(list(NoisePattern)))
    @settings(max_examples=30)
    def test_self_verifying(self, seed, pattern):
        inst = random_instance(np.random.default_rng(seed), pattern)
        red = build_reduction(inst.sys, inst.data)
        for prop in Property:
            cx = construct_counterexample(red, inst.sys, prop, data=inst.data)
            if cx is not None and cx.verified:
                scale = max(1.0, np.linalg.norm(inst.data.X)) * max(1.0, np.linalg.norm(cx.A_bad))
                assert membership_residual(cx.A_bad, inst.sys, inst.data) <= 1e-8 * scale
                assert model_status(cx.A_bad, inst.sys, prop) == "fails"

    @given(st.integers(0, 100_000), st.sampled_from(list(NoisePattern)))
    @settings(max_examples=30)
    def test_sandwich_realization(self, seed, pattern):
        inst = random_instance(np.random.default_rng(seed), pattern)
        s = inst.sys
        red = build_reduction(s, inst.data)
        from informativity.rank_tests import triple_precondition
        if not triple_precondition(red.P, red.Q, s.B, s.C, s.D, Property.STRONG_OBSERVABILITY)[0]:
            return
        A_bar, PJ, _ = sandwich_matrix(red.P, red.Q, red.R, s.B, s.C, s.D)
        J, _ = jstar(red, s)
        assert PJ.dim == image_of(red.P, J).dim
        assert containment_residual(weakly_unobservable(A_bar, s.B, s.C, s.D), PJ) <= 1e-8
        assert family_from_triple(red.P, red.Q, red.R).contains(A_bar)


class TestCrossValidate:
    @pytest.mark.parametrize("name", ["example3", "sec5", "sec5_b2", "sec5_b3", "sec5_b4"])
    def test_fixtures_clean(self, name):
        from informativity.problem import load_problem
        sys, data, _ = load_problem(fixture_path(name))
        rep = cross_validate(sys, data, samples=200)
        assert rep["status"] == "ok" and rep["critical_disagreements"] == 0
        assert rep["schema_version"] == 1

    def test_corrupted_reduction_flagged(self, example3):
        sys, data = example3
        red = build_reduction(sys, data)
        # a consistent but wrong R describes a different family
        bad = red.replace(R=red.R + red.Q @ np.array([[0.0, 0.0], [0.0, 3.0]]) @ red.P)
        rep = cross_validate(sys, data, samples=50, reduction=bad)
        assert rep["status"] == "CRITICAL"

    @given(st.integers(0, 100_000), st.sampled_from(list(NoisePattern)))
    @settings(max_examples=10)
    def test_random_instances(self, seed, pattern):
        inst = random_instance(np.random.default_rng(seed), pattern)
        rep = cross_validate(inst.sys, inst.data, samples=100, seed=seed)
        assert rep["critical_disagreements"] == 0
        for entry in rep["properties"]:
            if entry["verdict"] == Status.NOT_INFORMATIVE.value:
                assert entry["counterexample"]["verified"]
