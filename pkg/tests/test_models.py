import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holosim.errors import InvalidArgument
from holosim.gates import ADIABATIC_LOOPS, AdiabaticLoop, compile_adiabatic, compile_nonadiabatic
from holosim.models import (
    LAMBDA_EXCITED, LAMBDA_SINK, TRIPOD_ANCILLA, TRIPOD_EXCITED, DecayChannel, DephasingChannel,
    FieldError, LambdaModel, TripodModel, bright_state, dark_state, lindblad_rhs,
)
from holosim.propagate import IntegratorConfig, evolve_state
from holosim.pulses import PulsePair, SechEnvelope

HADAMARD_PAIR = (1 / math.sqrt(2 * (2 - math.sqrt(2))), (math.sqrt(2) - 1) / math.sqrt(2 * (2 - math.sqrt(2))))


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return a + a.conj().T


def random_density(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def phase_model(beta=2.0, **kw):
    return LambdaModel(compile_nonadiabatic("phase-pi-2", beta, separation=20.0 / beta, prep_offset=1.0,
                                            readout_offset=1.0), **kw)


def test_hamiltonian_zero_outside_support():
    m = phase_model()
    a, b = m.pairs[0].support
    assert np.array_equal(m.hamiltonian_at(a - 0.5), np.zeros((4, 4)))
    assert np.array_equal(m.hamiltonian_at(0.5 * (m.pairs[0].support[1] + m.pairs[1].support[0])),
                          np.zeros((4, 4)))


def test_hamiltonian_at_pulse_center():
    m = phase_model(beta=3.0)
    w0, w1 = -1 / math.sqrt(2), 1 / math.sqrt(2)
    expected = np.zeros((4, 4), dtype=complex)
    expected[2, 0], expected[2, 1] = w0, w1
    expected[0, 2], expected[1, 2] = w0, w1
    assert np.allclose(m.hamiltonian_at(0.0), 3.0 * expected, atol=1e-15)


def test_hamiltonian_domain_checked():
    m = phase_model()
    with pytest.raises(InvalidArgument):
        m.hamiltonian_at(m.time_domain[1] + 1.0)
    t = compile_adiabatic("hadamard", 1.0, 10.0)
    with pytest.raises(InvalidArgument):
        t.hamiltonian_at(-0.1)


def test_detunings_on_diagonal():
    m = phase_model(detunings=(0.3, -0.7))
    h = m.hamiltonian_at(m.time_domain[0])
    assert np.allclose(np.diag(h), [0.3, -0.7, 0, 0])


def test_hermitian_everywhere():
    rng = np.random.default_rng(1)
    m = phase_model(detunings=(0.2, 0.5), field_error=FieldError(0.1j, -0.05, 3.0))
    t = compile_adiabatic("hadamard", 2.0, 7.0, detunings=(0.1, 0.2, 0.3))
    for model in (m, t):
        lo, hi = model.time_domain
        for s in rng.uniform(lo, hi, 200):
            h = model.hamiltonian_at(s)
            assert np.allclose(h, h.conj().T, atol=1e-14, rtol=0)
            assert np.all(h[-1] == 0) and np.all(h[:, -1] == 0)


def test_tripod_u1_at_origin():
    loop = AdiabaticLoop("U1", ((0, 0), (1, 0), (1, 1), (0, 1), (0, 0)))
    t = TripodModel(2.0, 5.0, (loop,))
    expected = np.zeros((5, 5))
    expected[TRIPOD_EXCITED, TRIPOD_ANCILLA] = expected[TRIPOD_ANCILLA, TRIPOD_EXCITED] = 2.0
    assert np.allclose(t.hamiltonian_at(0.0), expected, atol=1e-15)


def test_tripod_couplings_normalized():
    for gate, loops in ADIABATIC_LOOPS.items():
        t = TripodModel(1.0, 9.0, loops)
        for s in np.linspace(0, 9.0, 301):
            assert abs(np.linalg.norm(t.couplings_at(s)) - 1) < 1e-12


def test_tripod_loop_times():
    loops = ADIABATIC_LOOPS["hadamard"]
    t = TripodModel(1.0, 13.0, loops)
    assert t.loop_times[0] / t.loop_times[1] == pytest.approx(1.5 / 5.0)
    with pytest.raises(InvalidArgument):
        TripodModel(1.0, 13.0, loops, loop_times=(1.0, 2.0))


def test_tripod_dark_space_dimension():
    rng = np.random.default_rng(4)
    model = compile_adiabatic("hadamard", 1.3, 10.0)
    ground = np.diag([1, 1, 1, 0, 0]).astype(complex)
    checked = 0
    for s in rng.uniform(0, 10.0, 60):
        w = model.couplings_at(s)
        # generic points only: on the pole legs the remaining couplings vanish
        if min(np.linalg.norm(w[[0, 1]]), np.linalg.norm(w[[0, 2]])) < 0.1:
            continue
        checked += 1
        h0 = model.hamiltonian_at(s)
        for det, kernel in (((0.4, 0.4, 0.4), 2), ((0.4, 0.4, -0.3), 1), ((0.4, -0.3, 0.4), 1)):
            h = h0 + np.diag([*det, 0, 0])
            m = (h - 0.4 * ground)[:4, :4]
            sv = np.linalg.svd(m, compute_uv=False)
            assert np.sum(sv < 1e-9) == kernel
    assert checked >= 20


def test_lindblad_decay_rate():
    rho = np.zeros((4, 4))
    rho[LAMBDA_EXCITED, LAMBDA_EXCITED] = 1
    out = lindblad_rhs(np.zeros((4, 4)), [DecayChannel(0.7, LAMBDA_EXCITED, LAMBDA_SINK)], rho)
    expected = np.zeros((4, 4))
    expected[LAMBDA_SINK, LAMBDA_SINK], expected[LAMBDA_EXCITED, LAMBDA_EXCITED] = 1.4, -1.4
    assert np.allclose(out, expected, atol=1e-15)


def test_lindblad_von_neumann_limit():
    rng = np.random.default_rng(2)
    h = random_hermitian(rng, 4)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    assert np.allclose(lindblad_rhs(h, [], rho), -1j * (h @ rho - rho @ h), atol=1e-14)


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6), st.floats(0, 3), st.floats(0, 3))
def test_lindblad_trace_free(seed, gamma, eps):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, 4)
    out = lindblad_rhs(random_hermitian(rng, 4),
                       [DecayChannel(gamma, 2, 3), DephasingChannel(eps, 2)], rho)
    assert abs(np.trace(out)) < 1e-14 * max(1.0, np.abs(out).max())
    assert np.allclose(out, out.conj().T, atol=1e-13)


def test_lindblad_rejects_non_hermitian():
    with pytest.raises(InvalidArgument):
        lindblad_rhs(np.triu(np.ones((4, 4))), [], np.eye(4) / 4)


def test_dephasing_element_rates():
    eps = 0.3
    rho = np.full((4, 4), 1.0, dtype=complex)
    out = lindblad_rhs(np.zeros((4, 4)), [DephasingChannel(eps, 2)], rho)
    # element (i, j) decays at eps * sum_L |l_i - l_j|^2
    assert out[0, 1] == pytest.approx(-2 * eps)
    assert out[0, 2] == pytest.approx(-5 * eps)
    assert out[1, 2] == pytest.approx(-5 * eps)
    assert out[0, 0] == 0 and out[2, 2] == 0


def test_channel_rates_nonnegative():
    with pytest.raises(InvalidArgument):
        DecayChannel(-1.0, 2, 3)
    with pytest.raises(InvalidArgument):
        DephasingChannel(-1.0, 2)
    assert DecayChannel(0.0, 2, 3).operators(4) == []


def test_dark_state_examples():
    env = SechEnvelope(1.0)
    assert np.array_equal(dark_state(PulsePair(env, 0, 1)), [-1, 0, 0, 0])
    d = dark_state(PulsePair(env, *HADAMARD_PAIR))
    ref = np.array([-(math.sqrt(2) - 1), 1, 0, 0])
    assert abs(abs(np.vdot(d, ref)) / np.linalg.norm(ref) - 1) < 1e-14


def test_dark_state_in_kernel():
    rng = np.random.default_rng(5)
    w = rng.normal(size=2) + 1j * rng.normal(size=2)
    w /= np.linalg.norm(w)
    m = LambdaModel(compile_nonadiabatic([tuple(w)], 1.5))
    pair = m.pairs[0]
    d, b = dark_state(pair), bright_state(pair)
    assert abs(np.vdot(d, b)) < 1e-15
    lo, hi = m.time_domain
    for t in rng.uniform(lo, hi, 100):
        h = m.hamiltonian_at(t)
        assert np.linalg.norm(h @ d) < 1e-12
        assert abs(np.vdot(d, h @ d)) < 1e-12


def test_evolution_is_purely_geometric():
    # exact pi areas: the truncated pulses leave ~1e-3 excited amplitude
    # behind, which the second pair then mixes in
    m = LambdaModel(compile_nonadiabatic("phase-pi-2", 1.0, separation=20.0, prep_offset=1.0,
                                         readout_offset=1.0, exact_area=True))
    lo, hi = m.time_domain
    for t in np.linspace(lo, hi, 50)[1:]:
        psis = [evolve_state(m, np.eye(4)[j], t1=t, cfg=IntegratorConfig(1e-10, 1e-12)) for j in (0, 1)]
        h = m.hamiltonian_at(t)
        for a in psis:
            for b in psis:
                assert abs(np.vdot(a, h @ b)) < 1e-6


def test_field_error_application():
    env = SechEnvelope(2.0)
    pair = PulsePair(env, 0.6, 0.8)
    out = FieldError(0.1, -0.1j, area=3.0).apply(pair)
    assert abs(out.omega0) ** 2 + abs(out.omega1) ** 2 == pytest.approx(1, abs=1e-14)
    assert out.envelope.area() == pytest.approx(3.0, rel=1e-12)
    w = np.array([0.7, 0.8 - 0.1j])
    assert np.allclose([out.omega0, out.omega1], w / np.linalg.norm(w))
    m = LambdaModel(compile_nonadiabatic([(0.6, 0.8)], 2.0), field_error=FieldError(0.1, -0.1j, 3.0))
    assert m.pairs[0].omega0 == out.omega0


def test_gap_policy_validated():
    with pytest.raises(InvalidArgument):
        phase_model(gap_policy="ignore")
