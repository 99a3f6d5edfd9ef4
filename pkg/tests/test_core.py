import numpy as np
import pytest

from tfcbaseline.core import (
    Decomposition,
    EmptyError,
    NonFiniteError,
    ShapeMismatchError,
    SolverConfig,
    SolverTrace,
    TfcBox,
    TooShortError,
    TrafficMatrix,
    estimate_sigma,
    validate,
)


def _trace(n=1):
    return SolverTrace(iterations=n, objective_history=[0.0] * n, final_rel_change=0.0,
                       mu_final=0.0, hf_residual=0.0, recon_residual=0.0)


def test_validate_accepts_full_size_matrix(rng):
    assert validate(rng.random((2016, 100))) == ()


def test_validate_rejects_nan():
    X = np.ones((5, 3))
    X[2, 1] = np.nan
    with pytest.raises(NonFiniteError):
        validate(X)


def test_validate_rejects_inf():
    X = np.ones((5, 3))
    X[0, 0] = np.inf
    with pytest.raises(NonFiniteError):
        validate(X)


def test_validate_rejects_single_interval():
    with pytest.raises(TooShortError):
        validate(np.ones((1, 5)))


def test_validate_rejects_no_flows():
    with pytest.raises(EmptyError):
        validate(np.ones((5, 0)))


def test_validate_reports_zero_columns():
    X = np.ones((4, 3))
    X[:, 1] = 0.0
    assert validate(X) == (1,)


def test_traffic_matrix_is_read_only_copy():
    src = np.arange(6.0).reshape(3, 2)
    tm = TrafficMatrix(src)
    src[0, 0] = 99.0
    assert tm.data[0, 0] == 0.0
    assert (tm.T, tm.P) == (3, 2)
    with pytest.raises(ValueError):
        tm.data[0, 0] = 1.0


def test_traffic_matrix_vector_becomes_column():
    assert TrafficMatrix(np.arange(4.0)).data.shape == (4, 1)


@pytest.mark.parametrize("deltas", [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, 0.0)])
def test_box_requires_positive_deltas(deltas):
    with pytest.raises(ValueError):
        TfcBox(*deltas)


@pytest.mark.parametrize("deltas", [(3.03, 2.56, 2.56), (1e-6, 1e-6, 1e-6), (1e3, 5.0, 0.1)])
def test_box_contains_zero(deltas):
    assert TfcBox(*deltas).contains(np.zeros((16, 4)))


def test_box_violation_time_domain():
    box = TfcBox(100.0, 100.0, 1.0)
    N = np.zeros((8, 1))
    N[3] = 1.5
    assert box.violation(N) == pytest.approx(0.5)


def test_box_violation_dc():
    # constant column c has DC coefficient c * sqrt(T)
    box = TfcBox(100.0, 1.0, 100.0)
    assert box.violation(np.full((4, 1), 1.0)) == pytest.approx(1.0)


def test_box_defaults():
    box = TfcBox()
    assert (box.delta1, box.delta2, box.delta3) == (3.03, 2.56, 2.56)
    assert box.coef_bound == pytest.approx(3.03 / np.sqrt(2))


def test_solver_config_defaults():
    cfg = SolverConfig(fc=112 / 2016)
    assert cfg.beta == 25.0
    assert cfg.mu0_factor == 0.99
    assert cfg.mu_floor_factor == 1e-5
    assert cfg.eta == 0.9
    assert cfg.rel_tol == 1e-6
    assert cfg.dykstra_iters == 200
    assert cfg.dykstra_tol == 1e-9


@pytest.mark.parametrize("kw", [{"eta": 1.0}, {"eta": 0.0}, {"fc": 0.6}, {"fc": -0.1},
                                {"beta": -1.0}, {"max_iters": 0}, {"rel_tol": 0.0}])
def test_solver_config_rejects_invalid(kw):
    args = {"fc": 0.1, **kw}
    with pytest.raises(ValueError):
        SolverConfig(**args)


def test_solver_config_requires_fc():
    with pytest.raises(TypeError):
        SolverConfig()


def test_decomposition_shape_check():
    with pytest.raises(ShapeMismatchError):
        Decomposition(np.zeros((3, 2)), np.zeros((3, 2)), np.zeros((2, 3)), _trace())


def test_trace_history_length_matches_iterations():
    d = _trace(4).to_dict()
    assert len(d["objective_history"]) == d["iterations"] == 4


def test_estimate_sigma_white_noise(rng):
    X = rng.standard_normal((5000, 3)) * np.array([1.0, 2.0, 5.0])
    sigma, degenerate = estimate_sigma(X)
    assert degenerate == ()
    np.testing.assert_allclose(sigma, [1.0, 2.0, 5.0], rtol=0.05)


def test_estimate_sigma_ignores_smooth_trend(rng):
    t = np.arange(2000)
    X = (50 * np.sin(2 * np.pi * t / 2000) + rng.standard_normal(2000))[:, None]
    sigma, _ = estimate_sigma(X)
    assert sigma[0] == pytest.approx(1.0, rel=0.1)


def test_estimate_sigma_flags_constant_columns():
    X = np.column_stack([np.full(10, 3.0), np.arange(10.0) % 2])
    sigma, degenerate = estimate_sigma(X)
    assert degenerate == (0,)
    assert sigma[0] == 1.0
