import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from samaqm.svm import (ConvergenceError, ModelFormatError, Sample, SvmModel, TrainConfig,
                        TrainingError, classify, decision_value, dual_objective, format_model,
                        kkt_violations, load_model, parse_model, rbf_gram, rbf_kernel, save_model,
                        smo_solve, smo_train)

import oracles

vec = st.lists(st.floats(-3, 3), min_size=5, max_size=5)
gammas = st.floats(1e-3, 10)

X2 = np.array([[0.0] * 5, [1.0] * 5])
Y2 = np.array([-1.0, 1.0])
TWO_POINT = TrainConfig(C=10, gamma=0.1)


def random_set(rng, n):
    X = rng.random((n, 5))
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    y[0], y[1] = -1.0, 1.0
    return X, y


def test_kernel_values():
    assert rbf_kernel([0.2] * 5, [0.2] * 5, 7.0) == 1.0
    assert rbf_kernel([0] * 5, [1, 0, 0, 0, 0], 1.0) == pytest.approx(math.exp(-1), abs=1e-12)
    assert rbf_kernel([0] * 5, [1] * 5, 1e-12) == pytest.approx(1.0)


def test_kernel_dimension_mismatch():
    with pytest.raises(ValueError):
        rbf_kernel([0] * 5, [0] * 4, 1.0)


@given(vec, vec, gammas)
def test_kernel_symmetric_and_bounded(x, z, g):
    k = rbf_kernel(x, z, g)
    assert k == rbf_kernel(z, x, g)
    assert 0.0 <= k <= 1.0
    assert rbf_kernel(x, x, g) == 1.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), gammas, st.integers(0, 2**32 - 1))
def test_gram_is_psd(n, g, seed):
    X = np.random.default_rng(seed).normal(size=(n, 5))
    K = rbf_gram(X, X, g)
    assert np.allclose(K, oracles.gram(X, g), atol=1e-12)
    assert np.linalg.eigvalsh(K).min() >= -1e-9


def test_two_point_closed_form():
    sol = smo_solve(X2, Y2, TWO_POINT)
    want = oracles.two_point_alpha(0.1, 5.0)
    assert want == pytest.approx(2 / (2 - 2 * math.exp(-0.5)))
    assert sol.alpha == pytest.approx([want, want], abs=1e-6)
    assert abs(sol.bias) < 1e-9
    m = sol.to_model()
    assert decision_value(m, X2[1]) == pytest.approx(1.0, abs=1e-3)
    assert decision_value(m, X2[0]) == pytest.approx(-1.0, abs=1e-3)


def test_separable_four_points():
    data = [Sample((0, 0, 0, 0, 0), -1), (Sample((0.1, 0, 0, 0, 0), -1)),
            Sample((5, 5, 5, 5, 5), 1), Sample((5, 5, 5, 5, 4.9), 1)]
    m = smo_train(data, TrainConfig(C=10, gamma=0.5))
    assert all(classify(m, s.x) == s.y for s in data)


def test_twelve_sample_set_matches_oracle():
    X, y = random_set(np.random.default_rng(12), 12)
    cfg = TrainConfig(C=1, gamma=1)
    sol = smo_solve(X, y, cfg, random.Random(0))
    a_ref, K = oracles.qp_dual(X, y, 1, 1)
    assert abs(dual_objective(sol.alpha, y, K) - oracles.dual_value(a_ref, y, K)) < 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_kkt_and_equality_constraint(seed):
    rng = np.random.default_rng(seed)
    X, y = random_set(rng, 15)
    cfg = TrainConfig(C=10, gamma=2)
    sol = smo_solve(X, y, cfg, random.Random(seed))
    K = oracles.gram(X, 2)
    f = K @ (sol.alpha * y) + sol.bias
    assert kkt_violations(sol.alpha, y, f, cfg.C).max() <= cfg.tol
    assert abs(sol.alpha @ y) < 1e-9
    assert sol.alpha.min() >= 0 and sol.alpha.max() <= cfg.C


def test_single_class_rejected():
    data = [Sample((i / 10,) * 5, 1) for i in range(4)]
    with pytest.raises(TrainingError):
        smo_train(data)


def test_bad_labels_rejected():
    with pytest.raises(TrainingError):
        smo_solve(X2, np.array([0.0, 1.0]))


def test_non_convergence_reports_violation():
    X, y = random_set(np.random.default_rng(3), 200)
    with pytest.raises(ConvergenceError) as info:
        smo_solve(X, y, TrainConfig(C=1000, gamma=50, tol=1e-12, max_passes=1))
    assert info.value.worst_violation > 1e-12
    assert "worst KKT violation" in str(info.value)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(C=0)


def test_constant_model():
    m = SvmModel(np.zeros((1, 5)), [0.0], 0.7, 1.0)
    assert decision_value(m, np.random.default_rng(0).random(5)) == pytest.approx(0.7)


def test_classify_tie_goes_to_enqueue():
    for bias, want in ((0.3, 1), (-0.3, -1), (0.0, -1)):
        assert classify(SvmModel(np.zeros((1, 5)), [0.0], bias, 1.0), [0.5] * 5) == want


def test_decision_is_continuous():
    m = smo_solve(X2, Y2, TWO_POINT).to_model()
    x = np.full(5, 0.4)
    assert abs(decision_value(m, x + 1e-9) - decision_value(m, x)) < 1e-6


@given(st.floats(1e-3, 1e3), st.lists(st.floats(0, 1), min_size=5, max_size=5))
def test_sign_is_scale_invariant(lam, x):
    m = smo_solve(X2, Y2, TWO_POINT).to_model()
    scaled = SvmModel(m.support_vectors, m.coeffs * lam, m.bias * lam, m.gamma)
    assert classify(scaled, x) == classify(m, x)


def test_model_arrays_are_read_only():
    m = smo_solve(X2, Y2, TWO_POINT).to_model()
    with pytest.raises(ValueError):
        m.coeffs[0] = 1.0


def test_round_trip(tmp_path):
    m = smo_solve(X2, Y2, TWO_POINT).to_model()
    path = tmp_path / "two.model"
    save_model(m, path)
    back = load_model(path)
    Z = np.random.default_rng(9).random((100, 5))
    assert np.max(np.abs(back.decision_values(Z) - m.decision_values(Z))) <= 1e-12
    assert format_model(back) == format_model(m)


GOOD = "svm-rbf v1\ngamma 2.0\nbias 0.5\nnsv 2\n1.0 0 0 0 0 0\n-1.0 1 1 1 1 1\n"


@pytest.mark.parametrize("text, line", [
    ("svm-poly v1\n" + GOOD.split("\n", 1)[1], 1),
    (GOOD.replace("gamma 2.0", "gamma x"), 2),
    (GOOD.replace("gamma 2.0", "gamma -1"), 2),
    (GOOD.replace("bias 0.5", "offset 0.5"), 3),
    (GOOD.replace("nsv 2", "nsv two"), 4),
    (GOOD.replace("nsv 2\n1.0 0 0 0 0 0\n-1.0 1 1 1 1 1\n", "nsv 0\n"), 4),
    (GOOD.replace("-1.0 1 1 1 1 1", "-1.0 1 1 1 1"), 6),
    (GOOD.replace("1.0 0 0 0 0 0", "1.0 0 0 zero 0 0"), 5),
    (GOOD.replace("nsv 2", "nsv 3"), 7),
    ("svm-rbf v1\ngamma 2.0\n", 3),
])
def test_malformed_files_name_the_line(text, line):
    with pytest.raises(ModelFormatError) as info:
        parse_model(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}: ")


def test_good_file_parses():
    m = parse_model(GOOD)
    assert m.n_support == 2 and m.gamma == 2.0 and m.bias == 0.5


def test_wrong_dimension_cannot_be_saved(tmp_path):
    m = SvmModel(np.zeros((1, 3)), [1.0], 0.0, 1.0)
    with pytest.raises(ModelFormatError):
        save_model(m, tmp_path / "bad.model")
    assert not list(tmp_path.iterdir())
