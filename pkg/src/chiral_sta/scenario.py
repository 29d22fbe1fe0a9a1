"""Complete, serializable experiment descriptions."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Literal

import numpy as np

from .dynamics import IntegratorSettings, LevelStructure, RelaxationRates
from .errors import ScenarioError
from .pulses import DriftSpec, NoiseSpec, StageOneParams, StageTwoParams


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one two-enantiomer run.

    ``stage_one=None`` replaces the Q pulse by an exact, instantaneous pi/2
    rotation applied at ``stage_two.t_start``.  ``initial_state`` (a ket) takes
    precedence over ``initial_populations`` (a diagonal density matrix).
    """

    name: str
    stage_two: StageTwoParams
    stage_one: StageOneParams | None = None
    structure: LevelStructure = field(default_factory=LevelStructure)
    model: Literal["rwa3", "lab4"] = "rwa3"
    scheme: Literal["cp", "stirap"] = "cp"
    phi_p: float = 0.0
    phi_s: float = 0.0
    phi_q: float = 0.5 * math.pi
    initial_populations: tuple[float, ...] = (1.0, 0.0, 0.0)
    initial_state: tuple[complex, ...] | None = None
    rates: RelaxationRates = field(default_factory=RelaxationRates)
    drift: DriftSpec = field(default_factory=DriftSpec)
    noise: NoiseSpec | None = None
    dt: float | None = None
    t_final: float | None = None
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "initial_populations", tuple(float(x) for x in self.initial_populations))
        if self.initial_state is not None:
            object.__setattr__(self, "initial_state", tuple(complex(x) for x in self.initial_state))
        self.validate()

    @property
    def dim(self) -> int:
        return 4 if self.model == "lab4" else 3

    def validate(self) -> None:
        if self.model not in ("rwa3", "lab4"):
            raise ScenarioError(f"unknown model {self.model!r}; expected rwa3 or lab4")
        if self.scheme not in ("cp", "stirap"):
            raise ScenarioError(f"unknown scheme {self.scheme!r}; expected cp or stirap")
        if self.model == "lab4" and self.structure.omega4 is None:
            raise ScenarioError("the lab4 model needs the fourth level energy omega4")
        if self.model == "lab4" and self.stage_one is None:
            raise ScenarioError("the lab4 model needs an explicit stage-1 pulse")
        if self.noise is not None and self.dt is None:
            raise ScenarioError("amplitude noise acts on sampled pulses; set a time resolution dt")
        if self.dt is not None and not self.dt > 0:
            raise ScenarioError("time resolution dt must be positive")
        pops = self.initial_populations
        if len(pops) not in (3, 4) or (len(pops) == 4 and self.dim == 3 and pops[3] != 0):
            raise ScenarioError("initial_populations must list 3 (or 4 for lab4) entries")
        if min(pops) < 0 or abs(sum(pops) - 1.0) > 1e-9:
            raise ScenarioError("initial_populations must be a probability vector")
        if self.initial_state is not None:
            psi = np.array(self.initial_state)
            if len(psi) not in (3, 4) or abs(np.vdot(psi, psi).real - 1.0) > 1e-9:
                raise ScenarioError("initial_state must be a normalized 3- or 4-component ket")
        if self.seed < 0 or self.seed >= 2**64:
            raise ScenarioError("seed must be an unsigned 64-bit integer")

    def initial_density(self) -> np.ndarray:
        n = self.dim
        if self.initial_state is not None:
            psi = np.zeros(n, dtype=complex)
            psi[: len(self.initial_state)] = self.initial_state
            return np.outer(psi, psi.conj())
        rho = np.zeros((n, n), dtype=complex)
        for k, v in enumerate(self.initial_populations[:n]):
            rho[k, k] = v
        return rho

    def initial_ket(self) -> np.ndarray | None:
        """Pure initial state if there is one, else None."""
        n = self.dim
        if self.initial_state is not None:
            psi = np.zeros(n, dtype=complex)
            psi[: len(self.initial_state)] = self.initial_state
            return psi
        pops = self.initial_populations
        if max(pops) == 1.0:
            psi = np.zeros(n, dtype=complex)
            psi[pops.index(1.0)] = 1.0
            return psi
        return None

    def span(self) -> tuple[float, float]:
        p2 = self.stage_two
        if self.stage_one is None:
            t0, t1 = p2.t_start, p2.t_end
        else:
            t0, t1 = min(0.0, p2.t_start), max(self.stage_one.t_end, p2.t_end)
        if self.t_final is not None:
            t1 = max(t1, self.t_final)
        return t0, t1

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def digest(self) -> str:
        """Stable content hash over every field."""
        blob = json.dumps(to_flat(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# flat key/value mapping (units in key names)
# ---------------------------------------------------------------------------

# key -> (section, attribute, scale from file units to internal units)
FLAT_KEYS: dict[str, tuple[str, str, float]] = {
    "name": ("", "name", 1),
    "model": ("", "model", 1),
    "scheme": ("", "scheme", 1),
    "omega12_rad_per_us": ("structure", "omega12", 1),
    "omega13_rad_per_us": ("structure", "omega13", 1),
    "omega4_rad_per_us": ("structure", "omega4", 1),
    "p_drives_24": ("structure", "p_drives_24", 1),
    "q_drives_34": ("structure", "q_drives_34", 1),
    "stage_one": ("", "stage_one", 1),
    "q_amplitude_rad_per_us": ("stage_one", "amplitude", 1),
    "q_width_us": ("stage_one", "width", 1),
    "q_end_us": ("stage_one", "t_end", 1),
    "omega0_rad_per_us": ("stage_two", "amplitude", 1),
    "T_us": ("stage_two", "width", 1),
    "tau_us": ("stage_two", "delay", 1),
    "ti_us": ("stage_two", "t_start", 1),
    "tf_us": ("stage_two", "t_end", 1),
    "theta_family": ("stage_two", "theta_family", 1),
    "beta_family": ("stage_two", "beta_family", 1),
    "beta_max_rad": ("stage_two", "beta_max", 1),
    "beta_width_us": ("stage_two", "beta_width", 1),
    "epsilon_rad": ("stage_two", "epsilon", 1),
    "ceiling_rad_per_us": ("stage_two", "ceiling", 1),
    "phi_p_rad": ("", "phi_p", 1),
    "phi_s_rad": ("", "phi_s", 1),
    "phi_q_rad": ("", "phi_q", 1),
    "initial_populations": ("", "initial_populations", 1),
    "initial_state": ("", "initial_state", 1),
    "gamma12_per_us": ("rates", "gamma12", 1),
    "gamma13_per_us": ("rates", "gamma13", 1),
    "gamma23_per_us": ("rates", "gamma23", 1),
    "drift_amp_P": ("drift", "amp_P", 1),
    "drift_amp_S": ("drift", "amp_S", 1),
    "drift_amp_Q": ("drift", "amp_Q", 1),
    "drift_omega_P_rad_per_us": ("drift", "omega_P", 1),
    "drift_omega_S_rad_per_us": ("drift", "omega_S", 1),
    "drift_omega_Q_rad_per_us": ("drift", "omega_Q", 1),
    "noise": ("", "noise", 1),
    "noise_snr_db": ("noise", "snr_db", 1),
    "noise_gamma": ("noise", "gamma", 1),
    "dt_ns": ("", "dt", 1e-3),
    "t_final_us": ("", "t_final", 1),
    "steps_per_period": ("integrator", "steps_per_period", 1),
    "interaction_steps": ("integrator", "interaction_steps", 1),
    "max_step_us": ("integrator", "max_step", 1),
    "n_samples": ("integrator", "n_samples", 1),
    "seed": ("", "seed", 1),
}

REQUIRED_KEYS = ("model", "T_us", "tau_us", "ti_us", "tf_us")

_SECTION_TYPES = {
    "structure": LevelStructure,
    "stage_one": StageOneParams,
    "stage_two": StageTwoParams,
    "rates": RelaxationRates,
    "drift": DriftSpec,
    "noise": NoiseSpec,
    "integrator": IntegratorSettings,
}


def _encode(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, tuple):
        return [_encode(v) for v in value]
    return value


def to_flat(s: Scenario) -> dict[str, Any]:
    """Every scenario field under its file key, in file units."""
    out: dict[str, Any] = {}
    for key, (section, attr, scale) in FLAT_KEYS.items():
        if section == "":
            if attr == "stage_one":
                out[key] = "pulse" if s.stage_one is not None else "ideal"
                continue
            if attr == "noise":
                out[key] = s.noise.kind if s.noise is not None else "none"
                continue
            value = getattr(s, attr)
        else:
            holder = getattr(s, section)
            if holder is None:
                continue
            value = getattr(holder, attr)
        if value is not None and scale != 1:
            value = value / scale
        out[key] = _encode(value)
    return out


def _decode_float(key, value):
    if isinstance(value, str) and value in ("inf", "+inf", "-inf"):
        return float(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"key {key!r} expects a number, got {value!r}", key=key)
    return float(value)


def from_flat(flat: dict[str, Any], base: Scenario | None = None) -> Scenario:
    """Build a scenario from flat keys, optionally overriding ``base``."""
    unknown = [k for k in flat if k not in FLAT_KEYS]
    if unknown:
        raise ScenarioError(f"unknown key {unknown[0]!r}", key=unknown[0])
    if base is None:
        for key in REQUIRED_KEYS:
            if key not in flat:
                raise ScenarioError(f"missing required key {key!r}", key=key)
    sections: dict[str, dict[str, Any]] = {}
    if base is not None:
        for name in _SECTION_TYPES:
            holder = getattr(base, name)
            if holder is not None:
                sections[name] = {f.name: getattr(holder, f.name) for f in fields(holder)}
    top: dict[str, Any] = {} if base is None else {f.name: getattr(base, f.name) for f in fields(base)}

    stage_one_mode = flat.get("stage_one")
    noise_kind = flat.get("noise")
    for key, value in flat.items():
        section, attr, scale = FLAT_KEYS[key]
        if attr in ("stage_one", "noise") and section == "":
            continue
        if attr in ("name", "model", "scheme", "theta_family", "beta_family"):
            if not isinstance(value, str):
                raise ScenarioError(f"key {key!r} expects a string", key=key)
        elif attr in ("p_drives_24", "q_drives_34"):
            if not isinstance(value, bool):
                raise ScenarioError(f"key {key!r} expects true/false", key=key)
        elif attr in ("seed", "steps_per_period", "interaction_steps", "n_samples"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ScenarioError(f"key {key!r} expects an integer", key=key)
        elif attr == "initial_populations":
            value = tuple(_decode_float(key, v) for v in value)
        elif attr == "initial_state":
            if value is not None:
                value = tuple(complex(*(_decode_float(key, x) for x in v)) for v in value)
        elif value is not None:
            value = _decode_float(key, value) * scale
        if section == "":
            top[attr] = value
        else:
            sections.setdefault(section, {})[attr] = value

    if stage_one_mode is not None and stage_one_mode not in ("pulse", "ideal"):
        raise ScenarioError("stage_one must be 'pulse' or 'ideal'", key="stage_one")
    if noise_kind is not None and noise_kind not in ("none", "awgn", "uniform"):
        raise ScenarioError("noise must be 'none', 'awgn' or 'uniform'", key="noise")

    try:
        built = {}
        for name, cls in _SECTION_TYPES.items():
            kw = sections.get(name)
            if name == "stage_one":
                want = stage_one_mode or ("pulse" if kw else "ideal")
                built[name] = cls(**kw) if want == "pulse" and kw else None
                if want == "pulse" and not kw:
                    raise ScenarioError("stage_one: pulse needs q_amplitude_rad_per_us and q_width_us")
            elif name == "noise":
                kind = noise_kind or (kw or {}).get("kind", "none")
                built[name] = None if kind == "none" else cls(**{**(kw or {}), "kind": kind})
            elif name == "stage_two" and "stage_two" not in sections:
                raise ScenarioError("missing stage-2 parameters")
            else:
                built[name] = cls(**kw) if kw is not None else cls()
        top.update(built)
        top.setdefault("name", "custom")
        return Scenario(**top)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from None
