"""Fast analytic self-checks of the pulse formulas, frames and generators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.special import erf

from . import dynamics, frames, pulses
from .dynamics import Chirality, RelaxationRates
from .experiments import get_scenario


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    limit: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value < self.limit)


def _interior(p, n=4001, margin=1e-3):
    pad = margin * p.duration
    return np.linspace(p.t_start + pad, p.t_end - pad, n)


def decoupling_ratio(p, cp_func=None) -> float:
    """max|xi_+-| / max|xi| over the interior of the stage."""
    fv = frames.decoupling_residual(_interior(p), p, cp_func=cp_func)
    off = max(np.max(np.abs(fv.xi_plus)), np.max(np.abs(fv.xi_minus)))
    return float(off / np.max(np.abs(fv.xi)))


def _orthonormality(p) -> float:
    v = frames.chosen_paths_frame(_interior(p), p).vectors
    gram = np.conj(np.swapaxes(v, -1, -2)) @ v
    return float(np.max(np.abs(gram - np.eye(3))))


def _eigen_residual(p) -> float:
    t = _interior(p)
    omega_p, omega_s = pulses.stirap_pulses(t, p)
    fv = frames.adiabatic_frame(t, p, 0.3, -0.7)
    h = dynamics.build_stage2_h(omega_p, omega_s, 0.3, -0.7)
    omega = fv.omega[:, None]
    worst = 0.0
    for k, e in enumerate((0.5, 0.0, -0.5)):
        vec = fv.vectors[..., k]
        res = np.einsum("tij,tj->ti", h, vec) - e * omega * vec
        worst = max(worst, float(np.max(np.linalg.norm(res, axis=-1) / fv.omega)))
    return worst


def _q_area() -> float:
    q = get_scenario("fig8").stage_one
    t = np.linspace(0.0, q.t_end, 20001)
    area = simpson(pulses.gaussian_q(t, q), x=t)
    exact = q.amplitude * q.width * math.sqrt(math.pi) * erf(0.5 * q.t_end / q.width)
    return abs(area - exact) / exact


def _boundaries() -> float:
    errs = []
    p = get_scenario("fig4a").stage_two
    th, _ = pulses.theta_of(np.array([p.t_start, p.t_end]), p)
    errs += [abs(th[0] - 0.25 * math.pi), abs(th[1] - 0.5 * math.pi)]
    p = get_scenario("fig4c").stage_two
    th, _ = pulses.theta_of(np.array([p.t_start, p.t_end]), p)
    errs += [abs(th[0] - 0.25 * math.pi), abs(th[1] - 0.5 * math.pi)]
    p = get_scenario("fig4e").stage_two
    be, _ = pulses.beta_of(np.array([p.t_start, p.t_end]), p)
    errs += list(np.abs(be - p.epsilon))
    return float(max(errs))


def _stage_one_states() -> float:
    psi = np.array([1.0, 0.0, 0.0], dtype=complex)
    want = {Chirality.L: np.array([1, 0, -1]) / math.sqrt(2), Chirality.R: np.array([1, 0, 1]) / math.sqrt(2)}
    return max(
        float(np.max(np.abs(dynamics.ideal_stage_one(psi, 0.5 * math.pi, c) - want[c]))) for c in Chirality
    )


def _lindblad_trace() -> float:
    rng = np.random.default_rng(7)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = a + a.conj().T
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = b @ b.conj().T
    rho /= np.trace(rho)
    sup = dynamics.lindblad_superoperator(h, RelaxationRates(0.3, 0.2, 0.1).jump_operators(3))
    d = (sup @ rho.reshape(-1)).reshape(3, 3)
    return float(max(abs(np.trace(d)), np.max(np.abs(d - d.conj().T))))


def run_checks(cp_func=None) -> list[Check]:
    """All identity checks; ``cp_func`` replaces the chosen-path pulse formula (for mutation tests)."""
    checks = [
        Check(f"decoupling residual {name}", decoupling_ratio(get_scenario(name).stage_two, cp_func), 1e-8)
        for name in ("fig4a", "fig4c", "fig4e")
    ]
    checks += [
        Check("chosen-path frame orthonormality", _orthonormality(get_scenario("fig4e").stage_two), 1e-12),
        Check("adiabatic eigenvector residual", _eigen_residual(get_scenario("fig4a").stage_two), 1e-12),
        Check("Q pulse area vs erf closed form", _q_area(), 1e-9),
        Check("mixing/dressing angle boundaries", _boundaries(), 1e-6),
        Check("ideal pi/2 Q rotation states", _stage_one_states(), 1e-12),
        Check("Lindblad trace and hermiticity", _lindblad_trace(), 1e-12),
    ]
    return checks


def report(checks: list[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  {'value':>12}  {'limit':>8}  result"]
    for c in checks:
        lines.append(f"{c.name:<{width}}  {c.value:12.3e}  {c.limit:8.0e}  {'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)
