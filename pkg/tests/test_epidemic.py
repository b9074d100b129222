import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from dpr0.epidemic import (
    EpidemicState,
    EpidemicSystem,
    check_penetration,
    next_generation,
    simulate,
    trajectory_header,
    write_trajectory_csv,
)
from dpr0.errors import ArgumentError, InstabilityError, PreconditionError, ValidationError
from dpr0.graph import complete_graph, random_connected_graph
from dpr0.spectral import spectral_radius


def test_next_generation():
    b = np.array([[0.2, 0.1], [0.1, 0.4]])
    assert np.array_equal(next_generation(EpidemicSystem(b, 1.0)), b)
    assert np.allclose(next_generation(EpidemicSystem(b, 1 / 3)), 3 * b, rtol=1e-15)
    g = np.array([0.5, 2.0])
    w = next_generation(EpidemicSystem(b, g))
    for i in range(2):
        for j in range(2):
            assert w[i, j] == b[i, j] / g[i]


def test_system_validation():
    with pytest.raises(ValidationError):
        EpidemicSystem(np.ones((2, 3)), 1.0)
    with pytest.raises(ValidationError):
        EpidemicSystem(-np.ones((2, 2)), 1.0)
    with pytest.raises(ValidationError):
        EpidemicSystem(np.ones((2, 2)), [1.0, 0.0])
    with pytest.raises(ArgumentError):
        EpidemicSystem(np.ones((2, 2)), 1.0, "SEIR")


@pytest.mark.parametrize("kind", ["SIS", "SIR"])
def test_disease_free_invariance(kind):
    sys = EpidemicSystem(np.ones((3, 3)), 1.0, kind)
    res = simulate(sys, x0=0.0)
    assert res.equilibrium and res.steps == 0
    assert np.array_equal(res.final.s, np.ones(3))


@pytest.mark.parametrize("beta", [0.5, 0.9])
def test_single_node_sis_dies_out(beta):
    res = simulate(EpidemicSystem([[beta]], 1.0, "SIS"), x0=0.1)
    assert res.equilibrium
    assert res.final.s[0] == pytest.approx(1.0, abs=1e-8)
    chk = check_penetration(res.final, beta)
    assert chk.holds and chk.bound >= 1.0


def test_single_node_sis_endemic_level():
    res = simulate(EpidemicSystem([[2.0]], 1.0, "SIS"), x0=0.1, t_max=200)
    assert not res.equilibrium
    assert res.final.x[0] == pytest.approx(0.5, abs=1e-9)


def test_single_node_sir_final_size():
    beta, gamma, x0 = 2.0, 1.0, 0.01
    s0 = 1 - x0
    res = simulate(EpidemicSystem([[beta]], gamma, "SIR"), x0=x0)
    assert res.equilibrium
    s_star = optimize.bisect(lambda s: s - s0 * math.exp(-(beta / gamma) * (1 - s)), 1e-12, 0.5, xtol=1e-15)
    assert abs(res.final.s[0] - s_star) < 1e-4


def test_conservation_and_monotone_s():
    g = random_connected_graph(8, 12, 0.5, 3)
    sys = EpidemicSystem(g.weights, 1 / 3, "SIR")
    res = simulate(sys, stride=1, t_max=50)
    traj = res.trajectory
    n = 8
    s, x, r = traj[:, 1:n + 1], traj[:, n + 1:2 * n + 1], traj[:, 2 * n + 1:]
    assert np.max(np.abs(s + x + r - 1)) <= 1e-9
    assert np.all(np.diff(s, axis=0) <= 0)
    assert np.all((traj[:, 1:] >= 0) & (traj[:, 1:] <= 1))


def test_step_halving():
    g = random_connected_graph(6, 8, 0.6, 9)
    sys = EpidemicSystem(g.weights, 1 / 3, "SIR")
    a = simulate(sys, step=0.02).final.s
    b = simulate(sys, step=0.01).final.s
    assert np.max(np.abs(a - b)) <= 1e-6


def test_fifteen_node_graph_penetration():
    w = complete_graph(15, 0.25).weights
    res = simulate(EpidemicSystem(w, 1.0, "SIR"))
    chk = check_penetration(res.final, 3.75)
    assert chk.holds and chk.min_s <= 1 / 3.75


@settings(max_examples=15)
@given(st.integers(0, 2**32), st.floats(0.1, 0.5))
def test_penetration_property(seed, w_max):
    g = random_connected_graph(10, 20, w_max, seed)
    sys = EpidemicSystem(g.weights * (1 / 3), 1 / 3, "SIR")
    r0 = spectral_radius(next_generation(sys)).value
    res = simulate(sys, step=0.05)
    assert res.equilibrium
    assert check_penetration(res.final, r0).holds


def test_precondition_and_argument_errors():
    with pytest.raises(PreconditionError):
        check_penetration(EpidemicState(np.ones(2) * 0.5, np.array([0.1, 0.0]), np.zeros(2)), 2.0)
    sys = EpidemicSystem(np.ones((2, 2)), 1.0, "SIR")
    for kw in ({"step": 0}, {"step": -1}, {"t_max": 0}, {"stride": 0}):
        with pytest.raises(ArgumentError):
            simulate(sys, **kw)
    with pytest.raises(ArgumentError):
        simulate(sys, s0=0.9, x0=0.5)
    with pytest.raises(ArgumentError):
        simulate(EpidemicSystem(np.ones((2, 2)), 1.0, "SIS"), s0=0.5, x0=0.1)


def test_instability_on_huge_step():
    with pytest.raises(InstabilityError):
        simulate(EpidemicSystem([[50.0]], 1.0, "SIS"), x0=0.5, step=1.0)


def test_trajectory_csv():
    sys = EpidemicSystem(np.array([[0.5, 0.2], [0.2, 0.5]]), 1 / 3, "SIR")
    res = simulate(sys, stride=100, t_max=5)
    buf = io.StringIO()
    write_trajectory_csv(res.trajectory, 2, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(trajectory_header(2)) == "t,s_0,s_1,x_0,x_1,r_0,r_1"
    assert len(lines) == 1 + res.trajectory.shape[0]
    assert float(lines[1].split(",")[0]) == 0.0
    assert float(lines[-1].split(",")[0]) == pytest.approx(res.final.t)
