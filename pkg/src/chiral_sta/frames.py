"""Adiabatic and chosen-path frames of the two-photon Hamiltonian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import pulses
from .errors import FrameUndefinedError
from .pulses import StageTwoParams


@dataclass(frozen=True)
class FrameVectors:
    """Columns of ``vectors`` are the (+, 0, -) states; leading axes follow ``t``."""

    vectors: np.ndarray  # (..., 3, 3)
    omega: np.ndarray | None = None
    xi: np.ndarray | None = None
    xi_plus: np.ndarray | None = None
    xi_minus: np.ndarray | None = None

    @property
    def plus(self):
        return self.vectors[..., :, 0]

    @property
    def zero(self):
        return self.vectors[..., :, 1]

    @property
    def minus(self):
        return self.vectors[..., :, 2]


def adiabatic_states(theta, phi_p=0.0, phi_s=0.0):
    """Instantaneous eigenvectors (lambda_+, lambda_0, lambda_-) of the resonant Lambda Hamiltonian."""
    theta = np.asarray(theta, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    e_ps = np.exp(1j * (phi_p + phi_s)) * np.ones_like(theta)
    e_s = np.exp(1j * phi_s) * np.ones_like(theta)
    r = 1.0 / np.sqrt(2.0)
    plus = np.stack([r * e_ps * s, r * e_s, r * c + 0j], axis=-1)
    minus = np.stack([r * e_ps * s, -r * e_s, r * c + 0j], axis=-1)
    zero = np.stack([e_ps * c, np.zeros_like(e_s), -s + 0j], axis=-1)
    return np.stack([plus, zero, minus], axis=-1)


def adiabatic_frame(t, p: StageTwoParams, phi_p: float = 0.0, phi_s: float = 0.0) -> FrameVectors:
    """Eigenframe of the plain STIRAP pulses at times ``t``."""
    t = np.asarray(t, dtype=float)
    omega_p, omega_s = pulses.stirap_pulses(t, p)
    omega = np.hypot(omega_p, omega_s)
    if np.any(omega == 0):
        bad = t[omega == 0].flat[0] if t.ndim else float(t)
        raise FrameUndefinedError(f"total Rabi frequency vanishes at t={bad:.6g} us")
    theta, _ = pulses.theta_of(t, p)
    return FrameVectors(adiabatic_states(theta, phi_p, phi_s), omega=omega)


def chosen_path_states(theta, beta):
    """The three dressed states (psi_+, psi_0, psi_-) parameterized by mixing and dressing angles."""
    theta = np.asarray(theta, dtype=float)
    beta = np.asarray(beta, dtype=float)
    st, ct = np.sin(theta), np.cos(theta)
    sb, cb = np.sin(beta), np.cos(beta)
    r = 1.0 / np.sqrt(2.0)
    zero = np.stack([cb * ct + 0j, -1j * sb, -cb * st + 0j], axis=-1)
    plus = r * np.stack([st - 1j * sb * ct, cb + 0j, ct + 1j * sb * st], axis=-1)
    minus = r * np.stack([st + 1j * sb * ct, -cb + 0j, ct - 1j * sb * st], axis=-1)
    return np.stack([plus, zero, minus], axis=-1)


def chosen_paths_frame(t, p: StageTwoParams) -> FrameVectors:
    sp = pulses.schedule(t, p)
    return FrameVectors(chosen_path_states(sp.theta, sp.beta))


def residual_from_fields(theta, theta_dot, beta, beta_dot, omega_p, omega_s):
    """(xi, xi_+, xi_-) for arbitrary total P and S fields.

    Splitting the fields into a STIRAP part plus counter-terms leaves these
    unchanged, because Omega_P sin(theta) + Omega_S cos(theta) = Omega and
    Omega_P cos(theta) - Omega_S sin(theta) = 0 for the STIRAP part.
    """
    st, ct = np.sin(theta), np.cos(theta)
    sb, cb = np.sin(beta), np.cos(beta)
    along = omega_p * st + omega_s * ct
    across = omega_p * ct - omega_s * st
    xi = cb * along + 2.0 * theta_dot * sb
    im = 1j * (sb * along - 2.0 * theta_dot * cb)
    re = across - 2.0 * beta_dot
    return xi, im + re, im - re


def decoupling_residual(t, p: StageTwoParams, cp_func=None) -> FrameVectors:
    """Diagonal energy ``xi`` and path couplings ``xi_+-`` of the chosen-path frame.

    ``cp_func`` defaults to :func:`pulses.cp_pulses`; tests substitute corrupted
    pulse formulas to check that the residual exposes them.
    """
    cp_func = cp_func or pulses.cp_pulses
    t = np.asarray(t, dtype=float)
    sp = pulses.schedule(t, p)
    omega_p, omega_s = cp_func(t, p)
    if p.theta_family == "stirap":
        ref_p, ref_s = pulses.stirap_pulses(t, p)
        omega = np.hypot(ref_p, ref_s)
        omega1, omega2 = omega_p - ref_p, omega_s - ref_s
        st, ct = np.sin(sp.theta), np.cos(sp.theta)
        cb, sb = np.cos(sp.beta), np.sin(sp.beta)
        along = omega1 * st + omega2 * ct + omega
        xi = cb * along + 2.0 * sp.theta_dot * sb
        im = 1j * (sb * along - 2.0 * sp.theta_dot * cb)
        re = omega1 * ct - omega2 * st - 2.0 * sp.beta_dot
        xi_p, xi_m = im + re, im - re
    else:
        omega = None
        xi, xi_p, xi_m = residual_from_fields(sp.theta, sp.theta_dot, sp.beta, sp.beta_dot, omega_p, omega_s)
    return FrameVectors(chosen_path_states(sp.theta, sp.beta), omega=omega, xi=xi, xi_plus=xi_p, xi_minus=xi_m)


def path_phase(p: StageTwoParams, n: int = 20001) -> float:
    """Accumulated chosen-path phase, half the time integral of ``xi`` over the stage."""
    t = np.linspace(p.t_start, p.t_end, n)
    return 0.5 * float(simpson(np.real(decoupling_residual(t, p).xi), x=t))


def adiabatic_area(p: StageTwoParams, n: int = 20001) -> float:
    """Half the time integral of the total STIRAP Rabi frequency."""
    t = np.linspace(p.t_start, p.t_end, n)
    omega_p, omega_s = pulses.stirap_pulses(t, p)
    return 0.5 * float(simpson(np.hypot(omega_p, omega_s), x=t))
