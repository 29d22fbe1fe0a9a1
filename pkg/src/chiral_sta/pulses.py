"""Rabi-frequency waveforms for the three-tone protocol.

All frequencies are angular (rad/us) and all times are in microseconds.
Every waveform function is vectorized over ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np

from .errors import ScheduleUndefinedError, SingularScheduleError

ThetaFamily = Literal["stirap", "poly-sine"]
BetaFamily = Literal["gaussian", "cos"]

SQRT_PI = math.sqrt(math.pi)


def wrap_phase(phi: float) -> float:
    """Map a phase onto (-pi, pi]."""
    out = math.remainder(phi, 2.0 * math.pi)
    return math.pi if out == -math.pi else out


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StageOneParams:
    """Gaussian Q pulse of the one-photon stage, centred at ``t_end / 2``."""

    amplitude: float
    width: float
    t_end: float | None = None

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("Q pulse width must be positive")
        if self.t_end is None:
            object.__setattr__(self, "t_end", 6.0 * self.width)
        if self.t_end <= 0:
            raise ValueError("stage-1 end time must be positive")

    @classmethod
    def pi_half(cls, width: float, t_end: float | None = None) -> "StageOneParams":
        """Amplitude fixed by the pulse-area constraint amplitude * width = sqrt(pi)/2."""
        return cls(amplitude=SQRT_PI / (2.0 * width), width=width, t_end=t_end)

    @property
    def nominal_area(self) -> float:
        return SQRT_PI * self.amplitude * self.width


@dataclass(frozen=True)
class StageTwoParams:
    """Timing and shape parameters of the two-photon stage.

    ``amplitude``, ``width`` and ``delay`` describe the double-Gaussian P and
    single-Gaussian S reference pulses.  The chosen-path pulses only depend on
    them through the mixing angle when ``theta_family == "stirap"``.
    """

    width: float
    delay: float
    t_start: float
    t_end: float
    theta_family: ThetaFamily = "stirap"
    beta_family: BetaFamily = "gaussian"
    beta_max: float = 0.25 * math.pi
    beta_width: float | None = None
    epsilon: float = 0.0
    amplitude: float = 1.0
    ceiling: float | None = None

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError("stage-2 start must precede its end")
        if self.width <= 0 or self.delay <= 0:
            raise ValueError("pulse width and intra-P delay must be positive")
        if not 0.0 < self.beta_max < math.pi:
            raise ValueError("beta_max must lie in (0, pi)")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.beta_family == "cos" and self.epsilon <= 0:
            raise ValueError("the cos-like beta family needs epsilon > 0")
        if self.theta_family not in ("stirap", "poly-sine"):
            raise ValueError(f"unknown theta family {self.theta_family!r}")
        if self.beta_family not in ("gaussian", "cos"):
            raise ValueError(f"unknown beta family {self.beta_family!r}")
        if self.beta_width is None:
            object.__setattr__(self, "beta_width", self.duration / 6.0)
        if self.ceiling is None:
            object.__setattr__(self, "ceiling", 1e4 / self.width)

    @classmethod
    def stirap_convention(cls, width: float, delay: float, t_start: float = 0.0, **kw) -> "StageTwoParams":
        """Stage with ``t_end = t_start + 6 T + tau`` so the Gaussians are fully covered."""
        return cls(width=width, delay=delay, t_start=t_start, t_end=t_start + 6.0 * width + delay, **kw)

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def shifted(self, t_start: float) -> "StageTwoParams":
        """Same pulse shapes moved so the stage starts at ``t_start``."""
        return replace(self, t_start=t_start, t_end=t_start + self.duration)


@dataclass(frozen=True)
class SchedulePoint:
    t: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    beta: np.ndarray
    beta_dot: np.ndarray


@dataclass(frozen=True)
class NoiseSpec:
    kind: Literal["awgn", "uniform"]
    snr_db: float = math.inf
    gamma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("awgn", "uniform"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError("signal-to-noise ratio must be finite or +inf")
        if self.gamma < 0:
            raise ValueError("fluctuation bound must be non-negative")


@dataclass(frozen=True)
class DriftSpec:
    """Relative amplitude deviations and absolute carrier shifts (rad/us) per field."""

    amp_P: float = 0.0
    amp_S: float = 0.0
    amp_Q: float = 0.0
    omega_P: float = 0.0
    omega_S: float = 0.0
    omega_Q: float = 0.0

    def is_zero(self) -> bool:
        return not any((self.amp_P, self.amp_S, self.amp_Q, self.omega_P, self.omega_S, self.omega_Q))


# ---------------------------------------------------------------------------
# control fields
# ---------------------------------------------------------------------------


class _Scaled:
    def __init__(self, func, factor):
        self.func = func
        self.factor = factor

    def __call__(self, t):
        return self.factor * self.func(t)


@dataclass(frozen=True)
class ControlField:
    """One driving tone: signed Rabi envelope, carrier, phase and time support."""

    label: Literal["P", "S", "Q"]
    amplitude: Callable[[np.ndarray], np.ndarray]
    carrier: float
    phase: float = 0.0
    support: tuple[float, float] = (0.0, 0.0)
    breakpoints: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.carrier <= 0:
            raise ValueError("carrier frequency must be positive")
        object.__setattr__(self, "phase", wrap_phase(self.phase))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        a, b = self.support
        inside = (t >= a) & (t <= b)
        return np.where(inside, self.amplitude(t), 0.0)

    def scaled(self, factor: float) -> "ControlField":
        return replace(self, amplitude=_Scaled(self.amplitude, factor))


# ---------------------------------------------------------------------------
# pulse shapes
# ---------------------------------------------------------------------------


def gaussian_q(t, p: StageOneParams):
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= p.t_end)
    return np.where(inside, p.amplitude * np.exp(-((t - 0.5 * p.t_end) / p.width) ** 2), 0.0)


def _stirap_centres(p: StageTwoParams):
    c_s = p.t_start + 0.5 * (p.duration - p.delay)
    return c_s, c_s + p.delay


def stirap_pulses(t, p: StageTwoParams):
    """Double-Gaussian P and single-Gaussian S pulses, zero outside the stage."""
    t = np.asarray(t, dtype=float)
    c_s, c_p2 = _stirap_centres(p)
    g1 = np.exp(-((t - c_s) / p.width) ** 2)
    g2 = np.exp(-((t - c_p2) / p.width) ** 2)
    inside = (t >= p.t_start) & (t <= p.t_end)
    omega_p = np.where(inside, p.amplitude * (g1 + g2), 0.0)
    omega_s = np.where(inside, p.amplitude * g1, 0.0)
    return omega_p, omega_s


def theta_of(t, p: StageTwoParams):
    """Mixing angle and its time derivative."""
    t = np.asarray(t, dtype=float)
    if p.theta_family == "poly-sine":
        x = np.clip((t - p.t_start) / p.duration, 0.0, 1.0)
        inside = (t >= p.t_start) & (t <= p.t_end)
        theta = 0.25 * np.pi + 0.5 * (
            0.5 * np.pi * x - np.sin(2 * np.pi * x) / 3.0 + np.sin(4 * np.pi * x) / 24.0
        )
        theta_dot = (0.5 / p.duration) * (
            0.5 * np.pi - (2 * np.pi / 3.0) * np.cos(2 * np.pi * x) + (np.pi / 6.0) * np.cos(4 * np.pi * x)
        )
        return theta, np.where(inside, theta_dot, 0.0)

    if np.any((t < p.t_start) | (t > p.t_end)):
        bad = t[(t < p.t_start) | (t > p.t_end)].flat[0]
        raise ScheduleUndefinedError(f"both STIRAP pulses vanish at t={bad:.6g} us, mixing angle undefined")
    # Omega_P / Omega_S = 1 + exp(s); the ratio form never underflows to 0/0.
    c_s, _ = _stirap_centres(p)
    w2 = p.width**2
    s = (2.0 * (t - c_s) * p.delay - p.delay**2) / w2
    s_dot = 2.0 * p.delay / w2
    theta = np.arctan(1.0 + np.exp(np.minimum(s, 700.0)))
    em = np.exp(-np.abs(s))
    # e^s / (1 + (1 + e^s)^2), evaluated without overflow on either side
    frac = np.where(s <= 0, em / (1.0 + (1.0 + em) ** 2), em / (em**2 + (em + 1.0) ** 2))
    return theta, s_dot * frac


def beta_of(t, p: StageTwoParams):
    """Dressing angle and its time derivative."""
    t = np.asarray(t, dtype=float)
    if p.beta_family == "gaussian":
        u = t - (p.t_start + 0.5 * p.duration)
        beta = p.beta_max * np.exp(-((u / p.beta_width) ** 2))
        return beta, -2.0 * u / p.beta_width**2 * beta
    inside = (t >= p.t_start) & (t <= p.t_end)
    phase = 2.0 * np.pi * (t - p.t_start) / p.duration
    beta = 0.5 * p.beta_max * (1.0 - np.cos(phase)) + p.epsilon
    beta_dot = p.beta_max * np.pi / p.duration * np.sin(phase)
    return np.where(inside, beta, 0.0), np.where(inside, beta_dot, 0.0)


def schedule(t, p: StageTwoParams) -> SchedulePoint:
    t = np.asarray(t, dtype=float)
    theta, theta_dot = theta_of(t, p)
    beta, beta_dot = beta_of(t, p)
    return SchedulePoint(t, theta, theta_dot, beta, beta_dot)


def cp_from_schedule(theta, theta_dot, beta, beta_dot):
    """Pulse pair that cancels the couplings between the chosen paths."""
    cot = np.cos(beta) / np.sin(beta)
    omega_p = 2.0 * (beta_dot * np.cos(theta) + theta_dot * cot * np.sin(theta))
    omega_s = -2.0 * (beta_dot * np.sin(theta) - theta_dot * cot * np.cos(theta))
    return omega_p, omega_s


def cp_pulses(t, p: StageTwoParams):
    """Chosen-path P and S amplitudes; zero outside ``[t_start, t_end]``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    inside = (t >= p.t_start) & (t <= p.t_end)
    omega_p = np.zeros_like(t)
    omega_s = np.zeros_like(t)
    if np.any(inside):
        sp = schedule(t[inside], p)
        with np.errstate(divide="ignore", invalid="ignore"):
            cp, cs = cp_from_schedule(sp.theta, sp.theta_dot, sp.beta, sp.beta_dot)
        peak = np.maximum(np.abs(cp), np.abs(cs))
        bad = ~(peak <= p.ceiling)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise SingularScheduleError(sp.t[k], peak[k], p.ceiling)
        omega_p[inside] = cp
        omega_s[inside] = cs
    return omega_p, omega_s


# ---------------------------------------------------------------------------
# field construction
# ---------------------------------------------------------------------------


class _QEnvelope:
    def __init__(self, p: StageOneParams):
        self.p = p

    def __call__(self, t):
        return gaussian_q(t, self.p)


class _TwoPhotonEnvelope:
    def __init__(self, p: StageTwoParams, which: int, scheme: str):
        self.p = p
        self.which = which
        self.scheme = scheme

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        pair = cp_pulses(t.ravel(), self.p) if self.scheme == "cp" else stirap_pulses(t.ravel(), self.p)
        return pair[self.which].reshape(t.shape)


def stage_one_field(p: StageOneParams, carrier: float, phase: float) -> ControlField:
    return ControlField("Q", _QEnvelope(p), carrier, phase, (0.0, p.t_end))


def stage_two_fields(
    p: StageTwoParams, carrier_p: float, carrier_s: float, phase_p: float, phase_s: float, scheme: str = "cp"
) -> tuple[ControlField, ControlField]:
    """P and S control fields for the chosen-path (``"cp"``) or plain ``"stirap"`` scheme."""
    if scheme not in ("cp", "stirap"):
        raise ValueError(f"unknown two-photon scheme {scheme!r}")
    support = (p.t_start, p.t_end)
    fp = ControlField("P", _TwoPhotonEnvelope(p, 0, scheme), carrier_p, phase_p, support)
    fs = ControlField("S", _TwoPhotonEnvelope(p, 1, scheme), carrier_s, phase_s, support)
    return fp, fs


def apply_drift(fields, spec: DriftSpec):
    """Scale each envelope by (1 + relative deviation) and shift each carrier."""
    out = []
    for f in fields:
        rel = getattr(spec, f"amp_{f.label}")
        shift = getattr(spec, f"omega_{f.label}")
        g = f.scaled(1.0 + rel) if rel else f
        out.append(replace(g, carrier=f.carrier + shift) if shift else g)
    return tuple(out)


# ---------------------------------------------------------------------------
# discretization and noise
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscretizedPulse:
    """Zero-order-hold waveform: ``values[k]`` holds on ``[starts[k], starts[k+1])``."""

    dt: float
    starts: np.ndarray
    values: np.ndarray
    end: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.starts, t, side="right") - 1, 0, len(self.starts) - 1)
        inside = (t >= self.starts[0]) & (t <= self.end)
        return np.where(inside, self.values[idx], 0.0)

    def __eq__(self, other):
        if not isinstance(other, DiscretizedPulse):
            return NotImplemented
        return (
            self.dt == other.dt
            and self.end == other.end
            and np.array_equal(self.starts, other.starts)
            and np.array_equal(self.values, other.values)
        )

    @property
    def durations(self) -> np.ndarray:
        return np.diff(np.append(self.starts, self.end))

    def with_values(self, values) -> "DiscretizedPulse":
        return DiscretizedPulse(self.dt, self.starts, np.asarray(values, dtype=float), self.end)


def discretize_envelope(func, support: tuple[float, float], dt: float) -> DiscretizedPulse:
    if dt <= 0:
        raise ValueError("time resolution must be positive")
    a, b = support
    n = max(1, math.ceil((b - a) / dt - 1e-9))
    starts = a + dt * np.arange(n)
    return DiscretizedPulse(dt, starts, np.asarray(func(starts), dtype=float), b)


def discretize(f: ControlField, dt: float):
    """Replace the envelope of ``f`` by its zero-order hold at resolution ``dt``.

    Returns the new field together with its :class:`DiscretizedPulse`.
    """
    pulse = discretize_envelope(f, f.support, dt)
    return with_pulse(f, pulse), pulse


def with_pulse(f: ControlField, pulse: DiscretizedPulse) -> ControlField:
    bps = tuple(float(x) for x in pulse.starts) + (pulse.end,)
    return replace(f, amplitude=pulse, breakpoints=bps)


def add_awgn(pulse: DiscretizedPulse, spec: NoiseSpec) -> DiscretizedPulse:
    """Additive white Gaussian noise at ``spec.snr_db`` relative to the mean sample power."""
    if spec.kind != "awgn":
        raise ValueError("add_awgn needs an awgn NoiseSpec")
    if spec.snr_db == math.inf:
        return pulse.with_values(pulse.values.copy())
    power = float(np.mean(pulse.values**2))
    sigma = math.sqrt(power / 10.0 ** (spec.snr_db / 10.0))
    rng = np.random.default_rng(spec.seed)
    return pulse.with_values(pulse.values + sigma * rng.standard_normal(pulse.values.shape))


def add_uniform_fluctuation(pulse: DiscretizedPulse, spec: NoiseSpec) -> DiscretizedPulse:
    """Multiply every sample by ``1 + u`` with ``u`` uniform on ``[-gamma, gamma]``."""
    if spec.kind != "uniform":
        raise ValueError("add_uniform_fluctuation needs a uniform NoiseSpec")
    if spec.gamma == 0:
        return pulse.with_values(pulse.values.copy())
    rng = np.random.default_rng(spec.seed)
    return pulse.with_values(pulse.values * (1.0 + rng.uniform(-spec.gamma, spec.gamma, pulse.values.shape)))


def add_noise(pulse: DiscretizedPulse, spec: NoiseSpec) -> DiscretizedPulse:
    return add_awgn(pulse, spec) if spec.kind == "awgn" else add_uniform_fluctuation(pulse, spec)


def waveform_table(fields, t_grid) -> np.ndarray:
    """Rows of ``(t, omega_P, omega_S, omega_Q)``; absent fields read as zero."""
    t_grid = np.asarray(t_grid, dtype=float)
    by_label = {f.label: f for f in fields}
    cols = [t_grid]
    for lab in ("P", "S", "Q"):
        cols.append(by_label[lab](t_grid) if lab in by_label else np.zeros_like(t_grid))
    return np.column_stack(cols)
