import numpy as np
import pytest

from slqr.analysis import moment_operator, solve_value_kernel, stationary_covariance
from slqr.errors import ValidationError
from slqr.system import (
    CostModel,
    SystemModel,
    noise_factor,
    simulate_closed_loop,
    stage_cost,
    step,
)


def scalar_model(a=0.5, b=1.0, d=1.0, state_noise=(), input_noise=()):
    return SystemModel(A=[[a]], B=[[b]], D=[[d]], X0=[[1.0]],
                       state_noise=list(state_noise), input_noise=list(input_noise))


def det_model(A, B):
    # Deterministic-limit plant: no noise channels, D = 0.
    n = np.asarray(A).shape[0]
    return SystemModel(A=A, B=B, D=np.zeros((n, n)), X0=np.eye(n),
                       allow_degenerate_noise=True)


def test_validate_accepts_example_system(sec6):
    model, cost = sec6
    model.validate()
    cost.validate(model)
    assert model.state_dim == 3 and model.input_dim == 3
    assert len(model.state_noise) == 2 and len(model.input_noise) == 2


def test_validate_rejects_zero_r():
    with pytest.raises(ValidationError, match="R must be positive definite"):
        CostModel(Q=[[1.0]], R=[[0.0]]).validate()


def test_validate_rejects_indefinite_q():
    with pytest.raises(ValidationError, match="Q must be positive semidefinite"):
        CostModel(Q=[[-1.0]], R=[[1.0]]).validate()


def test_validate_rejects_wrong_b_rows():
    model = SystemModel(A=np.eye(3) * 0.5, B=np.zeros((2, 3)), D=np.eye(3),
                        X0=np.eye(3))
    with pytest.raises(ValidationError, match="B must have 3 rows"):
        model.validate()


def test_validate_rejects_degenerate_d_without_flag():
    model = SystemModel(A=[[0.5]], B=[[1.0]], D=[[0.0]], X0=[[1.0]])
    with pytest.raises(ValidationError, match="D must be positive definite"):
        model.validate()
    det_model([[0.5]], [[1.0]]).validate()  # flag relaxes D to PSD


def test_validate_rejects_negative_variance():
    model = scalar_model(state_noise=[([[1.0]], -0.1)])
    with pytest.raises(ValidationError, match=r"state_noise\[0\] variance"):
        model.validate()


def test_validate_rejects_wrong_channel_shape():
    model = scalar_model(input_noise=[(np.zeros((2, 2)), 0.1)])
    with pytest.raises(ValidationError, match=r"input_noise\[0\] matrix"):
        model.validate()


def test_stage_cost_examples():
    cost = CostModel(Q=np.eye(3), R=np.eye(3))
    assert stage_cost(cost, np.array([1.0, 0, 0]), np.array([0, 2.0, 0])) == 5.0
    assert stage_cost(cost, np.zeros(3), np.zeros(3)) == 0.0
    assert stage_cost(cost, np.ones(3), np.ones(3)) == 6.0


def test_noise_factor_reproduces_covariance():
    rng = np.random.default_rng(3)
    for _ in range(20):
        g = rng.normal(size=(3, 3))
        cov = g @ g.T
        fac = noise_factor(cov)
        np.testing.assert_allclose(fac @ fac.T, cov, atol=1e-10)
    # Singular PSD input falls back to the eigendecomposition root.
    cov = np.array([[1.0, 1.0], [1.0, 1.0]])
    fac = noise_factor(cov)
    np.testing.assert_allclose(fac @ fac.T, cov, atol=1e-12)
    with pytest.raises(ValidationError):
        noise_factor(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_step_deterministic_limit_is_exact():
    model = det_model([[0.9, 0.1], [0.0, 0.8]], [[1.0], [0.5]])
    x = np.array([1.0, -2.0])
    u = np.array([0.3])
    out = step(model, x, u, np.random.default_rng(0))
    np.testing.assert_array_equal(out, model.A @ x + model.B @ u)


def test_step_is_seed_deterministic(sec6):
    model, _ = sec6
    x = np.ones(3)
    u = np.full(3, 0.5)
    a = step(model, x, u, np.random.default_rng(9))
    b = step(model, x, u, np.random.default_rng(9))
    np.testing.assert_array_equal(a, b)
    c = step(model, x, u, np.random.default_rng(10))
    assert not np.array_equal(a, c)


def test_simulate_length_contract(sec6):
    model, cost = sec6
    traj = simulate_closed_loop(model, cost, np.zeros((3, 3)), 1, 0.0, 0)
    assert traj.states.shape == (2, 3)
    assert traj.inputs.shape == (2, 3)
    assert traj.costs.shape == (1,)
    assert traj.n_steps == 1


def test_simulate_unprobed_zero_gain_has_zero_inputs():
    model = det_model([[0.5]], [[1.0]])
    cost = CostModel(Q=[[1.0]], R=[[1.0]])
    traj = simulate_closed_loop(model, cost, np.zeros((1, 1)), 10, 0.0, 4)
    assert np.array_equal(traj.inputs, np.zeros((11, 1)))


def test_simulate_is_bitwise_reproducible(sec6):
    model, cost = sec6
    gain = -0.1 * np.eye(3)
    a = simulate_closed_loop(model, cost, gain, 50, 0.64, 123)
    b = simulate_closed_loop(model, cost, gain, 50, 0.64, 123)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.inputs, b.inputs)
    np.testing.assert_array_equal(a.costs, b.costs)
    c = simulate_closed_loop(model, cost, gain, 50, 0.64, 124)
    assert not np.array_equal(a.states, c.states)


def test_simulate_terminal_input_is_unprobed_feedback(sec6):
    model, cost = sec6
    gain = -0.2 * np.eye(3)
    traj = simulate_closed_loop(model, cost, gain, 25, 0.64, 5)
    np.testing.assert_array_equal(traj.inputs[-1], gain @ traj.states[-1])


def test_simulate_costs_charge_the_applied_input(sec6):
    model, cost = sec6
    traj = simulate_closed_loop(model, cost, np.zeros((3, 3)), 40, 0.64, 6)
    for k in range(traj.n_steps):
        x, u = traj.states[k], traj.inputs[k]
        assert traj.costs[k] == x @ cost.Q @ x + u @ cost.R @ u
    assert np.abs(traj.inputs[:-1]).max() > 0  # probes actually applied


def test_probe_setting_does_not_shift_the_noise_stream():
    # With A = 0 the additive noise is readable off the states exactly, so the
    # probed and unprobed runs must reveal the identical d_k sequence.
    model = SystemModel(A=np.zeros((2, 2)), B=np.eye(2), D=np.eye(2), X0=np.eye(2))
    cost = CostModel(Q=np.eye(2), R=np.eye(2))
    quiet = simulate_closed_loop(model, cost, np.zeros((2, 2)), 30, 0.0, 21)
    probed = simulate_closed_loop(model, cost, np.zeros((2, 2)), 30, 0.64, 21)
    np.testing.assert_array_equal(quiet.states[0], probed.states[0])
    d_quiet = quiet.states[1:]
    d_probed = probed.states[1:] - probed.inputs[:-1] @ model.B.T
    np.testing.assert_allclose(d_probed, d_quiet, atol=1e-12)


def test_simulate_argument_validation(sec6):
    model, cost = sec6
    with pytest.raises(ValidationError, match="gain must have shape"):
        simulate_closed_loop(model, cost, np.zeros((1, 3)), 10, 0.0, 0)
    with pytest.raises(ValidationError, match="n_steps"):
        simulate_closed_loop(model, cost, np.zeros((3, 3)), 0, 0.0, 0)
    with pytest.raises(ValidationError, match="probe_var"):
        simulate_closed_loop(model, cost, np.zeros((3, 3)), 10, -0.1, 0)


def test_sample_covariance_matches_stationary_covariance(sec6):
    # Long zero-gain run against the analytic fixed point, at a pinned seed.
    model, cost = sec6
    target = stationary_covariance(model, np.zeros((3, 3)))
    traj = simulate_closed_loop(model, cost, np.zeros((3, 3)), 100000, 0.0, 77)
    xs = traj.states[20000:]
    sample = xs.T @ xs / xs.shape[0]
    rel = np.linalg.norm(sample - target) / np.linalg.norm(target)
    assert rel <= 0.03


def test_unprobed_average_cost_matches_value_kernel(sec6):
    model, cost = sec6
    p0 = solve_value_kernel(model, cost, np.zeros((3, 3)))
    lam = float(np.trace(p0 @ model.D))
    traj = simulate_closed_loop(model, cost, np.zeros((3, 3)), 42000, 0.0, 7)
    assert abs(traj.costs.mean() - lam) / lam <= 0.05


def test_probed_average_cost_matches_corrected_oracle(sec6):
    # With probing the input feeds extra energy into the loop; the stationary
    # covariance picks up sigma_u^2 (B B^T + sum var_j B_j B_j^T) per step and
    # the cost picks up sigma_u^2 tr(R) on top of tr(Q X).
    model, cost = sec6
    probe_var = 0.64
    op = moment_operator(model, np.zeros((3, 3)))
    pumped = model.D + probe_var * (
        model.B @ model.B.T
        + sum(var * (mat @ mat.T) for mat, var in model.input_noise))
    x_vec = np.linalg.solve(np.eye(9) - op.matrix, pumped.ravel())
    lam = float(np.trace(cost.Q @ x_vec.reshape(3, 3))) + probe_var * float(np.trace(cost.R))
    traj = simulate_closed_loop(model, cost, np.zeros((3, 3)), 42000, probe_var, 2024)
    assert abs(traj.costs.mean() - lam) / lam <= 0.05
