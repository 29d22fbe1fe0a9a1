"""Hamiltonians of the closed-loop molecule and fixed-step RK4 evolution.

Basis ordering is |1>, |2>, |3> (and |4> for the lab-frame model).  Every
builder is vectorized: scalar inputs give one matrix, array inputs give a
stack with the matrix axes last.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import IntegrationDivergedError

# 1,2-propanediol conformer, read as rad/us
PROPANEDIOL_OMEGA12 = 11363.0
PROPANEDIOL_OMEGA13 = 12212.0
PROPANEDIOL_OMEGA4 = 19192.0


class Chirality(enum.Enum):
    L = "L"
    R = "R"

    @property
    def sign(self) -> int:
        # L carries +Omega_Q: stage 1 with phi_q = pi/2 sends |1> to (|1> - |3>)/sqrt(2)
        return 1 if self is Chirality.L else -1


BOTH = (Chirality.L, Chirality.R)


@dataclass(frozen=True)
class LevelStructure:
    omega12: float = PROPANEDIOL_OMEGA12
    omega13: float = PROPANEDIOL_OMEGA13
    omega4: float | None = PROPANEDIOL_OMEGA4
    p_drives_24: bool = True
    q_drives_34: bool = True

    def __post_init__(self):
        if not 0 < self.omega12 < self.omega13:
            raise ValueError("need 0 < omega12 < omega13")
        if self.omega4 is not None and self.omega4 <= 0:
            raise ValueError("omega4 must be positive")

    @property
    def omega23(self) -> float:
        return self.omega13 - self.omega12

    @property
    def energies(self) -> np.ndarray:
        e = [0.0, self.omega12, self.omega13]
        if self.omega4 is not None:
            e.append(self.omega4)
        return np.array(e)

    def resonance(self, label: str) -> float:
        return {"P": self.omega12, "S": self.omega23, "Q": self.omega13}[label]


@dataclass(frozen=True)
class RelaxationRates:
    gamma12: float = 0.0
    gamma13: float = 0.0
    gamma23: float = 0.0

    def __post_init__(self):
        if min(self.gamma12, self.gamma13, self.gamma23) < 0:
            raise ValueError("relaxation rates must be non-negative")

    @classmethod
    def from_lifetimes(cls, tau2: float, tau3: float) -> "RelaxationRates":
        """gamma12 = 1/tau2 and gamma13 = gamma23 = 0.5/tau3 (infinite lifetime -> 0)."""
        g2 = 0.0 if math.isinf(tau2) else 1.0 / tau2
        g3 = 0.0 if math.isinf(tau3) else 0.5 / tau3
        return cls(g2, g3, g3)

    @property
    def tau2(self) -> float:
        return math.inf if self.gamma12 == 0 else 1.0 / self.gamma12

    @property
    def tau3(self) -> float:
        g = self.gamma13 + self.gamma23
        return math.inf if g == 0 else 1.0 / g

    def is_zero(self) -> bool:
        return self.gamma12 == self.gamma13 == self.gamma23 == 0

    def jump_operators(self, dim: int) -> list[np.ndarray]:
        """sqrt(gamma_mn) |m><n| for the three decay channels."""
        ops = []
        for (m, n), g in (((0, 1), self.gamma12), ((0, 2), self.gamma13), ((1, 2), self.gamma23)):
            if g > 0:
                op = np.zeros((dim, dim), dtype=complex)
                op[m, n] = math.sqrt(g)
                ops.append(op)
        return ops


# ---------------------------------------------------------------------------
# Hamiltonian builders
# ---------------------------------------------------------------------------


def _hermitian_stack(shape, dim, entries):
    h = np.zeros(tuple(shape) + (dim, dim), dtype=complex)
    for (m, n), val in entries:
        h[..., m, n] += val
        h[..., n, m] += np.conj(val)
    return h


def build_stage1_h(omega_q, phi_q, chirality: Chirality):
    """Resonant one-photon coupling  +-(Omega_Q/2) e^{i phi_q} |1><3| + h.c."""
    omega_q = np.asarray(omega_q, dtype=float)
    phase = np.exp(1j * np.asarray(phi_q))
    val = chirality.sign * 0.5 * omega_q * phase
    return _hermitian_stack(np.broadcast(omega_q, phase).shape, 3, [((0, 2), val)])


def build_stage2_h(omega_p, omega_s, phi_p=0.0, phi_s=0.0):
    """(1/2)(Omega_P e^{i phi_p}|1><2| + Omega_S e^{i phi_s}|2><3|) + h.c."""
    vp = 0.5 * np.asarray(omega_p, dtype=float) * np.exp(1j * np.asarray(phi_p))
    vs = 0.5 * np.asarray(omega_s, dtype=float) * np.exp(1j * np.asarray(phi_s))
    return _hermitian_stack(np.broadcast(vp, vs).shape, 3, [((0, 1), vp), ((1, 2), vs)])


def combined_stage_h(omega_q, omega_p, omega_s, phi_q, phi_p, phi_s, chirality: Chirality):
    """Stage-1 plus stage-2 interaction Hamiltonians, for overlapping pulses."""
    return build_stage1_h(omega_q, phi_q, chirality) + build_stage2_h(omega_p, omega_s, phi_p, phi_s)


def _fields_by_label(fields):
    return {f.label: f for f in fields}


def rwa_h(t, fields, structure: LevelStructure, chirality: Chirality):
    """Three-level interaction-picture Hamiltonian for arbitrary control fields.

    A carrier that misses its transition frequency by ``delta`` contributes the
    phase ``phi + delta * t`` to its coupling (rotating-wave approximation).
    """
    t = np.asarray(t, dtype=float)
    by = _fields_by_label(fields)
    amp, ph = {}, {}
    for lab in ("P", "S", "Q"):
        f = by.get(lab)
        if f is None:
            amp[lab], ph[lab] = np.zeros_like(t), np.zeros_like(t)
        else:
            amp[lab] = f(t)
            ph[lab] = f.phase + (f.carrier - structure.resonance(lab)) * t
    return combined_stage_h(amp["Q"], amp["P"], amp["S"], ph["Q"], ph["P"], ph["S"], chirality)


def _lab_couplings(t, fields, structure: LevelStructure, chirality: Chirality):
    by = _fields_by_label(fields)

    def drive(lab):
        f = by.get(lab)
        if f is None:
            return np.zeros_like(t)
        return f(t) * np.cos(f.carrier * t + f.phase)

    p, s, q = drive("P"), drive("S"), chirality.sign * drive("Q")
    entries = [((0, 1), p), ((1, 2), s), ((0, 2), q)]
    if structure.omega4 is not None:
        if structure.p_drives_24:
            entries.append(((1, 3), p))
        if structure.q_drives_34:
            entries.append(((2, 3), q))
    return entries


def build_lab_h(t, fields, structure: LevelStructure, chirality: Chirality):
    """Full lab-frame Hamiltonian with cosine couplings and no rotating-wave approximation."""
    t = np.asarray(t, dtype=float)
    e = structure.energies
    h = _hermitian_stack(t.shape, len(e), _lab_couplings(t, fields, structure, chirality))
    h[..., np.arange(len(e)), np.arange(len(e))] += e
    return h


def lab_interaction_h(t, fields, structure: LevelStructure, chirality: Chirality):
    """Lab-frame Hamiltonian transformed by exp(i H_diag t), exact (no RWA).

    Populations are identical in both pictures; only the stiff diagonal is removed.
    """
    t = np.asarray(t, dtype=float)
    e = structure.energies
    entries = [
        ((m, n), val * np.exp(1j * (e[m] - e[n]) * t))
        for (m, n), val in _lab_couplings(t, fields, structure, chirality)
    ]
    return _hermitian_stack(t.shape, len(e), entries)


def lab_max_frequency(fields, structure: LevelStructure) -> float:
    """Fastest oscillation present in :func:`lab_interaction_h`."""
    e = structure.energies
    pairs = {"P": [(0, 1)], "S": [(1, 2)], "Q": [(0, 2)]}
    if structure.omega4 is not None:
        if structure.p_drives_24:
            pairs["P"].append((1, 3))
        if structure.q_drives_34:
            pairs["Q"].append((2, 3))
    top = 0.0
    for f in fields:
        for m, n in pairs[f.label]:
            top = max(top, abs(f.carrier) + abs(e[n] - e[m]))
    return top


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegratorSettings:
    """Fixed-step RK4 resolution.

    Lab-frame runs take at most ``1/steps_per_period`` of the fastest period per
    step; interaction-picture runs take at most ``stage_duration/interaction_steps``
    and keep ``step * peak Rabi frequency`` below ``rabi_fraction``.
    ``max_step`` (us) overrides all of these when given.
    """

    steps_per_period: int = 40
    interaction_steps: int = 10_000
    rabi_fraction: float = 0.025
    max_step: float | None = None
    n_samples: int = 201
    chunk: int = 2048


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (M, ..., n) kets or (M, ..., n, n) density matrices
    kind: str  # "ket" | "density"
    max_step: float
    n_steps: int

    def populations(self) -> np.ndarray:
        if self.kind == "ket":
            return np.abs(self.states) ** 2
        return np.real(np.diagonal(self.states, axis1=-2, axis2=-1))


def _step_grid(span, max_step, knots):
    t0, t1 = float(span[0]), float(span[1])
    k = np.asarray(sorted({t0, t1, *(float(x) for x in knots if t0 < x < t1)}))
    lengths = np.diff(k)
    nsub = np.maximum(1, np.ceil(lengths / max_step - 1e-9).astype(int))
    pieces = [np.linspace(a, b, m + 1)[:-1] for a, b, m in zip(k[:-1], k[1:], nsub)]
    grid = np.concatenate(pieces + [np.array([t1])])
    # pin every knot exactly so piecewise-constant drives switch on a step boundary
    pos = np.concatenate([[0], np.cumsum(nsub)])
    grid[pos] = k
    return grid


def _rk4_maps(g0, gm, g1, h):
    """Per-step RK4 update matrices for the linear ODE  y' = G(t) y."""
    eye = np.eye(g0.shape[-1])
    h = h.reshape((-1,) + (1,) * (g0.ndim - 1))
    k1 = g0
    k2 = gm @ (eye + 0.5 * h * k1)
    k3 = gm @ (eye + 0.5 * h * k2)
    k4 = g1 @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _evolve_linear(y0, generator, span, max_step, sample_times, knots, chunk):
    grid = _step_grid(span, max_step, list(knots) + list(sample_times))
    sample_times = np.asarray(sample_times, dtype=float)
    sample_idx = np.searchsorted(grid, sample_times)
    if np.any(grid[np.minimum(sample_idx, len(grid) - 1)] != sample_times):
        raise ValueError("sample times must lie inside the integration span")
    out = np.empty((len(sample_times),) + y0.shape, dtype=complex)
    y = np.array(y0, dtype=complex)
    pending = {}
    for j, i in enumerate(sample_idx):
        pending.setdefault(int(i), []).append(j)
    for j in pending.get(0, ()):
        out[j] = y
    n_steps = len(grid) - 1
    yc = y[..., None]
    for c0 in range(0, n_steps, chunk):
        c1 = min(c0 + chunk, n_steps)
        a, b = grid[c0:c1], grid[c0 + 1 : c1 + 1]
        h = b - a
        # the end stage uses the left limit so zero-order-hold steps are not smeared
        maps = _rk4_maps(generator(a), generator(a + 0.5 * h), generator(np.nextafter(b, a)), h)
        # a blow-up is reported by the callers' norm/trace checks
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(c1 - c0):
                yc = maps[k] @ yc
                idx = c0 + k + 1
                if idx in pending:
                    for j in pending[idx]:
                        out[j] = yc[..., 0]
    return out, n_steps


def _default_samples(span, n):
    return np.linspace(float(span[0]), float(span[1]), max(2, int(n)))


def evolve_schrodinger(
    psi0,
    hamiltonian,
    span,
    max_step: float,
    sample_times=None,
    knots=(),
    n_samples: int = 201,
    chunk: int = 2048,
    norm_tol: float = 1e-6,
) -> Trajectory:
    """Integrate i dpsi/dt = H(t) psi with classical fixed-step RK4.

    ``hamiltonian`` maps an array of K times to a (K, ..., n, n) stack whose
    middle axes broadcast against the batch axes of ``psi0``.  ``knots`` are
    times where the drive may jump; steps always break there.  The state is
    never renormalized; a norm drift above ``norm_tol`` raises
    :class:`IntegrationDivergedError`.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if sample_times is None:
        sample_times = _default_samples(span, n_samples)

    def gen(t):
        return -1j * np.asarray(hamiltonian(t))

    states, n_steps = _evolve_linear(psi0, gen, span, max_step, sample_times, knots, chunk)
    with np.errstate(over="ignore", invalid="ignore"):
        norms = np.sum(np.abs(states) ** 2, axis=-1)
    ref = np.sum(np.abs(psi0) ** 2, axis=-1)
    bad = ~(np.abs(norms - ref) <= norm_tol)  # NaN counts as diverged
    if np.any(bad):
        k = int(np.argmax(np.any(bad.reshape(len(bad), -1), axis=1)))
        raise IntegrationDivergedError(sample_times[k], "norm", float(np.abs(norms[k] - ref).max()))
    return Trajectory(np.asarray(sample_times, dtype=float), states, "ket", max_step, n_steps)


def lindblad_superoperator(h, jumps):
    """Row-major vectorized generator of  -i[H, rho] + sum_k D[L_k] rho."""
    n = h.shape[-1]
    eye = np.eye(n)
    sup = -1j * (np.einsum("...ij,kl->...ikjl", h, eye) - np.einsum("ij,...lk->...ikjl", eye, h))
    for op in jumps:
        ld = op.conj().T @ op
        d = np.einsum("ij,kl->ikjl", op, op.conj())
        d -= 0.5 * np.einsum("ij,kl->ikjl", ld, eye)
        d -= 0.5 * np.einsum("ij,lk->ikjl", eye, ld)
        sup = sup + d
    return sup.reshape(h.shape[:-2] + (n * n, n * n))


def evolve_master(
    rho0,
    hamiltonian,
    span,
    max_step: float,
    rates: RelaxationRates = RelaxationRates(),
    sample_times=None,
    knots=(),
    n_samples: int = 201,
    chunk: int = 1024,
    trace_tol: float = 1e-6,
    positivity_tol: float = 1e-6,
) -> Trajectory:
    """Integrate the Markovian master equation with the three decay channels.

    Same calling convention as :func:`evolve_schrodinger` with density
    matrices of shape (..., n, n).  Trace drift or a negative eigenvalue
    beyond tolerance raises :class:`IntegrationDivergedError`.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    n = rho0.shape[-1]
    if sample_times is None:
        sample_times = _default_samples(span, n_samples)
    jumps = rates.jump_operators(n)

    def gen(t):
        return lindblad_superoperator(np.asarray(hamiltonian(t)), jumps)

    y0 = rho0.reshape(rho0.shape[:-2] + (n * n,))
    flat, n_steps = _evolve_linear(y0, gen, span, max_step, sample_times, knots, chunk)
    states = flat.reshape(flat.shape[:-1] + (n, n))
    tr = np.real(np.trace(states, axis1=-2, axis2=-1))
    tr0 = np.real(np.trace(rho0, axis1=-2, axis2=-1))
    drift = np.abs(tr - tr0).reshape(len(tr), -1).max(axis=1)
    if np.any(~(drift <= trace_tol)):
        k = int(np.argmax(~(drift <= trace_tol)))
        raise IntegrationDivergedError(sample_times[k], "trace", drift[k])
    herm = 0.5 * (states + np.conj(np.swapaxes(states, -1, -2)))
    low = np.linalg.eigvalsh(herm).min(axis=-1).reshape(len(tr), -1).min(axis=1)
    if np.any(low < -positivity_tol):
        k = int(np.argmax(low < -positivity_tol))
        raise IntegrationDivergedError(sample_times[k], "positivity", -low[k])
    return Trajectory(np.asarray(sample_times, dtype=float), states, "density", max_step, n_steps)


def ideal_stage_one(psi0, phi_q: float, chirality: Chirality, area: float = 0.5 * math.pi):
    """Exact propagator of a resonant Q pulse of the given area applied to ``psi0``."""
    u = expm(-1j * area * build_stage1_h(1.0, phi_q, chirality))
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.ndim == 2:
        return u @ psi0 @ u.conj().T
    return u @ psi0
