"""Quick self-checks of the engine against closed-form results."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fidelity import FrameRotation, pair_gate_average_exact, perturbative_avg
from .gates import (ADIABATIC_LOOPS, PRESETS, BlochAxis, adiabatic_holonomy, compile_nonadiabatic,
                    compose, gate_target, ideal_gate, loop_solid_angle, unitary_infidelity)
from .models import DecayChannel, DephasingChannel, LambdaModel
from .pulses import PulsePair, PulseSchedule, RectEnvelope
from .propagate import IntegratorConfig, evolve_density, propagator

TIGHT = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _random_axes(rng, n):
    return [BlochAxis.from_vector(rng.normal(size=3)) for _ in range(n)]


def check_ideal_gates(seed=7, count=5) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in _random_axes(rng, count):
        u = propagator(LambdaModel(compile_nonadiabatic([n], 1.0, exact_area=True)), cfg=TIGHT)[:2, :2]
        worst = max(worst, abs(unitary_infidelity(u, ideal_gate(n).matrix)))
    for m, n in zip(_random_axes(rng, count), _random_axes(rng, count)):
        s = compile_nonadiabatic([n, m], 1.0, separation=20.0, exact_area=True)
        u = propagator(LambdaModel(s), cfg=TIGHT)[:2, :2]
        worst = max(worst, abs(unitary_infidelity(u, compose(m, n).matrix)))
    return Check("ideal pulse-pair gates", worst < 1e-8, f"worst infidelity {worst:.2e}")


def _idle_model(duration):
    # a zero-amplitude pair keeps the model driven over the whole window
    pair = PulsePair(RectEnvelope(0.0, 0.0, duration), 1.0, 0.0)
    return LambdaModel(PulseSchedule((pair,), 0.0, duration))


def check_decay(gamma=0.7) -> Check:
    t = 1 / (2 * gamma)
    model = _idle_model(t)
    rho0 = np.zeros((4, 4))
    rho0[2, 2] = 1.0
    rho = evolve_density(model, [DecayChannel(gamma, 2, 3)], rho0, cfg=TIGHT)
    err = abs(rho.population(2) - math.exp(-1))
    return Check("excited-state decay", err < 1e-6, f"|P_e - 1/e| = {err:.2e}")


def check_dephasing(eps=0.3, t=2.0) -> Check:
    model = _idle_model(t)
    rho0 = np.full((4, 4), 0.0, dtype=complex)
    rho0[:2, :2] = 0.5
    rho = evolve_density(model, [DephasingChannel(eps, 2)], rho0, cfg=TIGHT)
    err = abs(rho.matrix[0, 1] - 0.5 * math.exp(-2 * eps * t))
    return Check("qubit coherence dephasing", err < 1e-6, f"|rho01 - exact| = {err:.2e}")


def check_frame_identity(seed=3) -> Check:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    out = FrameRotation(np.zeros((4, 4)), 12.3).apply(rho)
    return Check("zero-detuning frame rotation", bool(np.array_equal(out, rho)), "exact equality")


def check_holonomies() -> Check:
    worst = max(unitary_infidelity(adiabatic_holonomy(ADIABATIC_LOOPS[g]), gate_target(g).matrix)
                for g in PRESETS)
    gammas = [loop_solid_angle(lp) for g in PRESETS for lp in ADIABATIC_LOOPS[g]]
    return Check("adiabatic loop holonomies", worst < 1e-9,
                 f"worst infidelity {worst:.2e}; solid angles {[round(x, 6) for x in gammas]}")


def check_perturbative(seed=11, count=10, scale=2e-3) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        w = rng.normal(size=2) + 1j * rng.normal(size=2)
        w /= np.linalg.norm(w)
        d = scale * (rng.normal(size=2) + 1j * rng.normal(size=2))
        da = scale * rng.normal()
        exact = 1 - pair_gate_average_exact(w, d[0], d[1], da)
        approx = 1 - perturbative_avg(w[0], w[1], d[0], d[1], da)
        worst = max(worst, abs(exact - approx) / exact)
    return Check("second-order average fidelity", worst < 0.05, f"worst relative error {worst:.2e}")


ALL_CHECKS = (check_ideal_gates, check_decay, check_dephasing, check_frame_identity,
              check_holonomies, check_perturbative)


def run_checks() -> list[Check]:
    return [fn() for fn in ALL_CHECKS]
