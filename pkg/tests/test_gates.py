import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holosim.errors import InvalidArgument, InvalidSchedule
from holosim.fidelity import haar_average, sample_fidelities
from holosim.gates import (
    ADIABATIC_LOOPS, HADAMARD, HADAMARD_LOOPS, NA_COUPLINGS, PHASE_LOOP, PHASE_PI_2, AdiabaticLoop,
    BlochAxis, GateTarget, adiabatic_holonomy, axis_from_couplings, compile_adiabatic,
    compile_nonadiabatic, compose, couplings_from_axis, dark_projector, family_couplings,
    gate_target, ideal_gate, loop_solid_angle, unitary_infidelity,
)
from holosim.models import LambdaModel
from holosim.propagate import IntegratorConfig, propagator, qubit_process
from holosim.quantum_core import SIGMA_X, SIGMA_Z

TIGHT = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)
S2 = math.sqrt(2)


def random_axes(seed, n):
    rng = np.random.default_rng(seed)
    return [BlochAxis.from_vector(rng.normal(size=3)) for _ in range(n)]


def test_bloch_axis_validation():
    with pytest.raises(InvalidArgument):
        BlochAxis(1.0, 1.0, 0.0)
    n = BlochAxis.from_angles(1.1, 4.0)
    assert n.theta == pytest.approx(1.1) and n.phi == pytest.approx(4.0)


def test_gate_target_must_be_unitary():
    with pytest.raises(InvalidArgument):
        GateTarget(np.array([[1, 0], [0, 2]]))
    with pytest.raises(InvalidArgument):
        GateTarget(np.eye(3))


def test_unitary_infidelity_global_phase():
    assert unitary_infidelity(HADAMARD, np.exp(0.7j) * HADAMARD) == pytest.approx(0, abs=1e-15)
    assert unitary_infidelity(SIGMA_X, SIGMA_Z) == pytest.approx(1)


def test_axis_examples():
    assert np.allclose(axis_from_couplings(0, 1).vector, [0, 0, 1])
    assert np.allclose(axis_from_couplings(-1 / S2, 1 / S2).vector, [1, 0, 0])
    w0, w1 = NA_COUPLINGS["hadamard"][0]
    n = axis_from_couplings(w0, w1).vector
    assert np.allclose(abs(n), [1 / S2, 0, 1 / S2])
    assert np.allclose(axis_from_couplings(1, 0).vector, [0, 0, -1])
    with pytest.raises(InvalidArgument):
        axis_from_couplings(1, 1)


def test_axis_is_dark_minus_bright():
    rng = np.random.default_rng(4)
    for _ in range(10):
        w = rng.normal(size=2) + 1j * rng.normal(size=2)
        w /= np.linalg.norm(w)
        b = w.conj()
        d = np.array([-w[1], w[0]])
        u = np.outer(d, d.conj()) - np.outer(b, b.conj())
        assert np.allclose(u, ideal_gate(axis_from_couplings(*w)).matrix, atol=1e-12)


@settings(max_examples=50)
@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_axis_round_trip(theta, phi):
    n = BlochAxis.from_angles(theta, phi)
    assert np.allclose(axis_from_couplings(*couplings_from_axis(n)).vector, n.vector, atol=1e-12)


def test_compose_examples():
    n = BlochAxis(1.0, 0.0, 0.0)
    assert unitary_infidelity(compose(n, n).matrix, np.eye(2)) == pytest.approx(0, abs=1e-15)
    m = BlochAxis.from_angles(math.pi / 2, math.pi / 4)
    assert unitary_infidelity(compose(m, n).matrix, PHASE_PI_2) == pytest.approx(0, abs=1e-15)
    h = BlochAxis.from_vector([1, 0, 1])
    assert unitary_infidelity(ideal_gate(h).matrix, HADAMARD) == pytest.approx(0, abs=1e-15)


def test_compose_is_matrix_product():
    for m, n in zip(random_axes(1, 10), random_axes(2, 10)):
        prod = ideal_gate(m).matrix @ ideal_gate(n).matrix
        assert np.allclose(compose(m, n).matrix, prod, atol=1e-12)


def test_preset_couplings():
    s = compile_nonadiabatic("phase-pi-2", 1.0, separation=20.0)
    assert np.allclose(s.pairs[0].couplings, [-1 / S2, 1 / S2])
    assert np.allclose(s.pairs[1].couplings, [-1 / S2, np.exp(-1j * math.pi / 4) / S2])
    assert s.separation == pytest.approx(20.0)
    h = compile_nonadiabatic("hadamard", 1.0)
    norm = math.sqrt(2 * (2 - S2))
    assert np.allclose(h.pairs[0].couplings, [1 / norm, (S2 - 1) / norm])
    z = compile_nonadiabatic([BlochAxis(0.0, 0.0, 1.0)], 1.0)
    assert np.allclose(z.pairs[0].couplings, [0, 1])


def test_compile_errors():
    with pytest.raises(InvalidSchedule):
        compile_nonadiabatic("phase-pi-2", 1.0, separation=5.0)
    with pytest.raises(InvalidArgument):
        compile_nonadiabatic("cnot", 1.0)
    with pytest.raises(InvalidArgument):
        compile_adiabatic("phase-pi-2", 0.0, 1.0)


def test_preset_targets_match_algebra():
    for name in ("phase-pi-2", "hadamard"):
        axes = [axis_from_couplings(*w) for w in NA_COUPLINGS[name]]
        g = ideal_gate(axes[0]).matrix if len(axes) == 1 else compose(axes[1], axes[0]).matrix
        assert unitary_infidelity(g, gate_target(name).matrix) < 1e-15


def test_simulated_single_pairs():
    for n in random_axes(10, 20):
        u = propagator(LambdaModel(compile_nonadiabatic([n], 1.3, exact_area=True)), cfg=TIGHT)
        assert unitary_infidelity(u[:2, :2], ideal_gate(n).matrix) < 1e-8


def test_simulated_pair_compositions():
    for m, n in zip(random_axes(11, 20), random_axes(12, 20)):
        s = compile_nonadiabatic([n, m], 1.0, separation=20.0, exact_area=True)
        u = propagator(LambdaModel(s), cfg=TIGHT)
        assert unitary_infidelity(u[:2, :2], compose(m, n).matrix) < 1e-8


def test_simulated_presets():
    for name in ("phase-pi-2", "hadamard"):
        s = compile_nonadiabatic(name, 2.0, separation=10.0, exact_area=True)
        u = propagator(LambdaModel(s), cfg=TIGHT)
        assert unitary_infidelity(u[:2, :2], gate_target(name).matrix) < 1e-8


def test_family_couplings_normalized():
    rng = np.random.default_rng(0)
    th, ph = rng.uniform(0, math.pi, 30), rng.uniform(-7, 7, 30)
    for fam in ("U1", "U2"):
        w = family_couplings(fam, th, ph)
        assert np.allclose(np.linalg.norm(w, axis=-1), 1)
    assert np.allclose(family_couplings("U1", 0, 0), [0, 0, 1])
    with pytest.raises(InvalidArgument):
        family_couplings("U3", 0, 0)


def test_loop_parametrization():
    lp = AdiabaticLoop("U1", ((0, 0), (1, 0), (1, 3), (0, 3), (0, 0)))
    assert lp.length == pytest.approx(8)
    assert lp.breakpoints == pytest.approx((0, 1 / 8, 4 / 8, 5 / 8, 1))
    assert lp.point(0.25) == pytest.approx((1, 1))
    assert lp.point(1.0) == pytest.approx((0, 0))
    assert lp.closed and not AdiabaticLoop("U1", ((0, 0), (1, 0))).closed


def test_solid_angles():
    octant = AdiabaticLoop("U1", ((0, 0), (math.pi / 2, 0), (math.pi / 2, math.pi), (0, math.pi), (0, 0)))
    assert loop_solid_angle(octant) == pytest.approx(math.pi)
    assert loop_solid_angle(octant.reversed()) == pytest.approx(-math.pi)
    assert abs(PHASE_LOOP.solid_angle()) == pytest.approx(math.pi)
    assert loop_solid_angle(HADAMARD_LOOPS[1]) == pytest.approx(2 * math.pi)
    with pytest.raises(InvalidArgument):
        loop_solid_angle(AdiabaticLoop("U1", ((0, 0), (1, 0))))


def test_solid_angle_matches_quadrature():
    lp = AdiabaticLoop("U1", ((0.2, 0.1), (1.3, 0.4), (0.9, 2.0), (0.2, 0.1)))
    u = np.linspace(0, 1, 200001)
    th, ph = np.array([lp.point(x) for x in u]).T
    numeric = np.sum((1 - np.cos(0.5 * (th[1:] + th[:-1]))) * np.diff(ph))
    assert lp.solid_angle() == pytest.approx(numeric, abs=1e-8)


def test_dark_projector():
    w = family_couplings("U2", 0.7, 1.9)
    p = dark_projector(w)
    assert np.allclose(p @ p, p) and np.trace(p).real == pytest.approx(2)
    assert np.allclose(p @ w.conj(), 0)


def test_holonomy_oracle_gives_targets():
    for name, loops in ADIABATIC_LOOPS.items():
        assert unitary_infidelity(adiabatic_holonomy(loops), gate_target(name).matrix) < 1e-9


def test_phase_loop_orientation():
    # the printed waypoint order gives the conjugate phase gate
    u = adiabatic_holonomy([PHASE_LOOP.reversed()])
    assert unitary_infidelity(u, PHASE_PI_2.conj()) < 1e-9


def test_degenerate_loop_identity():
    flat = AdiabaticLoop("U1", ((0.3, 0.0), (0.3, 0.0)))
    assert loop_solid_angle(flat) == 0
    assert unitary_infidelity(adiabatic_holonomy([flat]), np.eye(2)) < 1e-12
    spoke = AdiabaticLoop("U1", ((0, 1.0), (1.2, 1.0), (0, 1.0)))
    assert unitary_infidelity(adiabatic_holonomy([spoke]), np.eye(2)) < 1e-9


def test_adiabatic_time_split():
    m = compile_adiabatic("hadamard", 2.0, 13.0)
    l1, l2 = (lp.length for lp in HADAMARD_LOOPS)
    assert m.loop_times == pytest.approx((13 * l1 / (l1 + l2), 13 * l2 / (l1 + l2)))
    per = compile_adiabatic("hadamard", 2.0, 13.0, per_loop_time=True)
    assert per.loop_times == (13.0, 13.0) and per.run_time == 26.0


@pytest.mark.parametrize("name", ["phase-pi-2", "hadamard"])
def test_adiabatic_convergence(name):
    f = [haar_average(qubit_process(compile_adiabatic(name, 1.0, t))[0], gate_target(name))
         for t in (20.0, 200.0)]
    assert f[1] > f[0]
    assert f[1] > 0.9


def test_phase_preset_fixes_zero_state():
    target = gate_target("phase-pi-2")
    zero = np.array([[1, 0]], dtype=complex)
    for t in (0.5, 3.0, 17.0, 60.0):
        e, _ = qubit_process(compile_adiabatic("phase-pi-2", 1.0, t), cfg=TIGHT)
        assert abs(sample_fidelities(e, target, zero)[0] - 1) < 1e-7
