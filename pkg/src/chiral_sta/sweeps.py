"""Parameter sweeps, Monte Carlo trials and the canonical figure sweeps."""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .dynamics import RelaxationRates
from .errors import ChiralStaError, ScenarioError, UnknownScenarioError
from .experiments import KHZ, get_scenario, overlap_scenario, run_scenario
from .pulses import NoiseSpec
from .scenario import Scenario

Reducer = Literal["mean", "min", "all"]
RESULT_COLUMNS = ("D", "P3L", "P3R", "P1R", "P2R", "status", "seed")

# axis name -> help text; "field" is categorical and selects the target of amp_rel / domega_khz
AXES = {
    "tau_over_T": "intra-P delay in units of T (stage length follows 6 T + tau)",
    "beta_max_over_pi": "peak dressing angle in units of pi",
    "t_ov_over_T": "interstage overlap in units of T",
    "phi_p": "P phase (rad)",
    "phi_s": "S phase (rad)",
    "phi_q": "Q phase (rad)",
    "field": "which field amp_rel / domega_khz act on: P, S or Q",
    "amp_rel": "relative amplitude error of the selected field",
    "amp_P": "relative amplitude error of P",
    "amp_S": "relative amplitude error of S",
    "amp_Q": "relative amplitude error of Q",
    "domega_khz": "carrier offset of the selected field (kHz-equivalent)",
    "domega_P_khz": "P carrier offset (kHz-equivalent)",
    "domega_S_khz": "S carrier offset (kHz-equivalent)",
    "domega_Q_khz": "Q carrier offset (kHz-equivalent)",
    "domega_PS_anti_khz": "P offset with the opposite S offset (kHz-equivalent)",
    "snr_db": "AWGN signal-to-noise ratio (dB)",
    "gamma": "uniform amplitude fluctuation bound",
    "tau2_us": "lifetime of |2> (us)",
    "tau3_us": "lifetime of |3> (us)",
    "dt_ns": "time resolution of the sampled pulses (ns)",
}
STOCHASTIC_AXES = ("snr_db", "gamma")


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    def __post_init__(self):
        if self.name not in AXES:
            raise ScenarioError(f"unknown sweep axis {self.name!r}", key=self.name)
        vals = tuple(self.values)
        if not vals:
            raise ScenarioError(f"axis {self.name!r} has no values", key=self.name)
        if self.name == "field":
            if any(v not in ("P", "S", "Q") for v in vals):
                raise ScenarioError("axis 'field' takes P, S or Q", key=self.name)
        else:
            vals = tuple(float(v) for v in vals)
        object.__setattr__(self, "values", vals)

    @classmethod
    def linspace(cls, name: str, start: float, stop: float, num: int) -> "Axis":
        return cls(name, tuple(np.linspace(start, stop, num).tolist()))


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian grid of axes with optional Monte Carlo trials per point."""

    axes: tuple[Axis, ...]
    trials: int = 1
    reducer: Reducer = "all"
    seed: int | None = None
    name: str = "sweep"

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not self.axes:
            raise ScenarioError("a sweep needs at least one axis")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ScenarioError("sweep axes must be distinct")
        if ("amp_rel" in names or "domega_khz" in names) and "field" not in names:
            raise ScenarioError("amp_rel and domega_khz need a 'field' axis")
        if self.trials < 1:
            raise ScenarioError("trials must be at least 1", key="trials")
        if self.reducer not in ("mean", "min", "all"):
            raise ScenarioError(f"unknown reducer {self.reducer!r}", key="reducer")
        if any(n in STOCHASTIC_AXES for n in names) and self.seed is None:
            raise ScenarioError("stochastic axes need a base seed", key="seed")

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    def points(self) -> list[dict]:
        return [dict(zip(self.axis_names, combo)) for combo in itertools.product(*(a.values for a in self.axes))]

    @property
    def grid_size(self) -> int:
        return math.prod(len(a.values) for a in self.axes)


@dataclass
class SweepResult:
    """One row per (grid point, trial); failed points carry ``status != "ok"`` and NaN results."""

    spec: SweepSpec
    scenario_hash: str
    rows: list[dict] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    @property
    def ok(self) -> np.ndarray:
        return self.column("status") == "ok"

    def reduced(self, reducer: Reducer | None = None) -> list[dict]:
        """Rows after applying ``reducer`` (default: the spec's) over trials of each grid point."""
        reducer = reducer or self.spec.reducer
        if reducer == "all":
            return list(self.rows)
        n = self.spec.trials
        out = []
        for k in range(0, len(self.rows), n):
            group = self.rows[k : k + n]
            good = [r for r in group if r["status"] == "ok"]
            head = {a: group[0][a] for a in self.spec.axis_names}
            if not good:
                out.append({**head, **{c: math.nan for c in RESULT_COLUMNS[:5]}, "status": group[0]["status"],
                            "seed": self.spec.seed if self.spec.seed is not None else group[0]["seed"]})
                continue
            if reducer == "min":
                best = min(good, key=lambda r: r["D"])
                out.append(dict(best))
            else:
                row = {**head, **{c: float(np.mean([r[c] for r in good])) for c in RESULT_COLUMNS[:5]}}
                row["status"] = "ok" if len(good) == len(group) else f"partial:{len(good)}/{len(group)}"
                row["seed"] = self.spec.seed if self.spec.seed is not None else group[0]["seed"]
                out.append(row)
        return out

    def to_csv(self, reducer: Reducer | None = None) -> str:
        header = list(self.spec.axis_names) + list(RESULT_COLUMNS)
        lines = [f"# scenario={self.scenario_hash} sweep={self.spec.name} version={__version__}", ",".join(header)]
        for row in self.reduced(reducer):
            lines.append(",".join(_fmt(row[c]) for c in header))
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.12g}"


# ---------------------------------------------------------------------------
# applying grid points to a scenario
# ---------------------------------------------------------------------------


def apply_point(base: Scenario, point: dict) -> Scenario:
    """Scenario for one grid point; axes act in a fixed order independent of the spec."""
    s = base
    p2 = s.stage_two
    if "tau_over_T" in point:
        delay = point["tau_over_T"] * p2.width
        p2 = replace(p2, delay=delay, t_end=p2.t_start + 6.0 * p2.width + delay, beta_width=None)
    if "beta_max_over_pi" in point:
        p2 = replace(p2, beta_max=point["beta_max_over_pi"] * math.pi)
    s = replace(s, stage_two=p2)
    if "t_ov_over_T" in point:
        if s.stage_one is None:
            raise ScenarioError("an overlap sweep needs an explicit stage-1 pulse")
        s = overlap_scenario(point["t_ov_over_T"] * s.stage_two.width, s)
    phases = {k: point[k] for k in ("phi_p", "phi_s", "phi_q") if k in point}
    if phases:
        s = replace(s, **phases)

    drift = {}
    for lab in "PSQ":
        if f"amp_{lab}" in point:
            drift[f"amp_{lab}"] = point[f"amp_{lab}"]
        if f"domega_{lab}_khz" in point:
            drift[f"omega_{lab}"] = point[f"domega_{lab}_khz"] * KHZ
    if "field" in point:
        lab = point["field"]
        if "amp_rel" in point:
            drift[f"amp_{lab}"] = point["amp_rel"]
        if "domega_khz" in point:
            drift[f"omega_{lab}"] = point["domega_khz"] * KHZ
    if "domega_PS_anti_khz" in point:
        drift["omega_P"] = point["domega_PS_anti_khz"] * KHZ
        drift["omega_S"] = -point["domega_PS_anti_khz"] * KHZ
    if drift:
        s = replace(s, drift=replace(s.drift, **drift))

    if "snr_db" in point:
        s = replace(s, noise=NoiseSpec("awgn", snr_db=point["snr_db"]))
    if "gamma" in point:
        s = replace(s, noise=NoiseSpec("uniform", gamma=point["gamma"]))
    if "tau2_us" in point or "tau3_us" in point:
        r = s.rates
        g12 = 1.0 / point["tau2_us"] if "tau2_us" in point else r.gamma12
        g3 = 0.5 / point["tau3_us"] if "tau3_us" in point else None
        s = replace(s, rates=RelaxationRates(g12, r.gamma13 if g3 is None else g3, r.gamma23 if g3 is None else g3))
    if "dt_ns" in point:
        s = replace(s, dt=point["dt_ns"] * 1e-3)
    return s


def trial_seed(base_seed: int, trial: int) -> int:
    """Seed of Monte Carlo trial ``trial``; shared by every grid point (common random numbers)."""
    ss = np.random.SeedSequence([base_seed & 0xFFFFFFFF, base_seed >> 32, trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _work_items(base: Scenario, spec: SweepSpec):
    base_seed = spec.seed if spec.seed is not None else base.seed
    stochastic = spec.trials > 1 or any(n in STOCHASTIC_AXES for n in spec.axis_names) or base.noise is not None
    for point in spec.points():
        for k in range(spec.trials):
            seed = trial_seed(base_seed, k) if stochastic else base.seed
            yield point, seed


def _evaluate(args) -> dict:
    base, point, seed = args
    row = dict(point)
    try:
        s = replace(apply_point(base, point), seed=seed)
        res = run_scenario(s)
    except (ChiralStaError, ValueError) as exc:
        row.update({c: math.nan for c in RESULT_COLUMNS[:5]})
        row.update(status=f"error:{type(getattr(exc, 'cause', exc)).__name__}", seed=seed)
        return row
    fl, fr = res.final_l, res.final_r
    row.update(D=res.D, P3L=float(fl[2]), P3R=float(fr[2]), P1R=float(fr[0]), P2R=float(fr[1]), status="ok", seed=seed)
    return row


def resolve_workers(parallel: int | None) -> int:
    """Worker count from the argument, then CHIRAL_STA_THREADS, then 1."""
    if parallel is None:
        env = os.environ.get("CHIRAL_STA_THREADS")
        parallel = int(env) if env else 1
    if parallel < 1:
        raise ScenarioError("parallelism must be at least 1")
    return parallel


def run_sweep(base: Scenario, spec: SweepSpec, parallel: int | None = None) -> SweepResult:
    """Evaluate every grid point and trial; rows come back in grid order whatever the worker count."""
    workers = resolve_workers(parallel)
    items = [(base, point, seed) for point, seed in _work_items(base, spec)]
    if workers == 1 or len(items) == 1:
        rows = [_evaluate(it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate, items, chunksize=1))
    return SweepResult(spec, base.digest(), rows)


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------


def sweep_tau_beta(base: Scenario, tau_over_t: Sequence[float], beta_over_pi: Sequence[float], **kw) -> SweepResult:
    if base.scheme != "cp" or base.stage_two.theta_family != "stirap":
        raise ScenarioError("the delay/dressing sweep needs chosen-path pulses with the STIRAP mixing angle")
    spec = SweepSpec((Axis("tau_over_T", tuple(tau_over_t)), Axis("beta_max_over_pi", tuple(beta_over_pi))),
                     name="tau-beta")
    return run_sweep(base, spec, **kw)


def sweep_overlap(base: Scenario, t_ov_over_t: Sequence[float], **kw) -> SweepResult:
    return run_sweep(base, SweepSpec((Axis("t_ov_over_T", tuple(t_ov_over_t)),), name="overlap"), **kw)


def critical_overlap(base: Scenario, lo: float = 4.0, hi: float = 6.0, threshold: float = 0.9,
                     xtol: float = 1e-3) -> float:
    """Overlap (in units of T) where D falls through ``threshold``, located by root bracketing."""

    def gap(x):
        return run_scenario(overlap_scenario(x * base.stage_two.width, base)).D - threshold

    return brentq(gap, lo, hi, xtol=xtol)


def phase_scan(base: Scenario, which: str, phases: Sequence[float], **kw) -> SweepResult:
    """Scan one of ``phi_p``, ``phi_s``, ``phi_q`` with the other two held at zero."""
    if which not in ("phi_p", "phi_s", "phi_q"):
        raise ScenarioError(f"cannot scan {which!r}")
    zeroed = replace(base, phi_p=0.0, phi_s=0.0, phi_q=0.0)
    return run_sweep(zeroed, SweepSpec((Axis(which, tuple(phases)),), name=f"phase-{which}"), **kw)


def sweep_drift(base: Scenario, axes: Sequence[Axis], **kw) -> SweepResult:
    if not 1 <= len(axes) <= 2:
        raise ScenarioError("a drift sweep takes one or two axes")
    return run_sweep(base, SweepSpec(tuple(axes), name="drift"), **kw)


def sweep_noise(base: Scenario, axis: Axis, trials: int = 20, seed: int = 0, reducer: Reducer = "all",
                **kw) -> SweepResult:
    if axis.name not in STOCHASTIC_AXES:
        raise ScenarioError("a noise sweep runs over snr_db or gamma")
    return run_sweep(base, SweepSpec((axis,), trials=trials, reducer=reducer, seed=seed, name="noise"), **kw)


def sweep_relaxation(base: Scenario, tau2_us: Sequence[float], tau3_us: Sequence[float], **kw) -> SweepResult:
    spec = SweepSpec((Axis("tau2_us", tuple(tau2_us)), Axis("tau3_us", tuple(tau3_us))), name="relaxation")
    return run_sweep(base, spec, **kw)


# ---------------------------------------------------------------------------
# canonical figure sweeps
# ---------------------------------------------------------------------------

_PHASES = tuple(np.linspace(-math.pi, math.pi, 25).tolist())


def canonical_sweeps() -> dict[str, tuple[str, SweepSpec]]:
    """Sweep name -> (base scenario name, spec)."""
    lin = Axis.linspace
    fields = Axis("field", ("P", "S", "Q"))
    return {
        "fig3": ("fig3", SweepSpec((lin("tau_over_T", 0.5, 3.0, 11), lin("beta_max_over_pi", 0.1, 0.9, 11)),
                                   name="fig3")),
        "fig5": ("fig5", SweepSpec((lin("t_ov_over_T", 0.0, 6.0, 25),), name="fig5")),
        "fig6": ("fig6", SweepSpec((Axis("phi_q", _PHASES),), name="fig6")),
        "fig6p": ("fig6", SweepSpec((Axis("phi_p", _PHASES),), name="fig6p")),
        "fig6s": ("fig6", SweepSpec((Axis("phi_s", _PHASES),), name="fig6s")),
        "fig9a": ("fig9a", SweepSpec((fields, lin("amp_rel", -0.1, 0.1, 21)), name="fig9a")),
        "fig9b": ("fig9b", SweepSpec((fields, lin("domega_khz", -500.0, 500.0, 21)), name="fig9b")),
        "fig9c": ("fig9c", SweepSpec((lin("domega_P_khz", -500.0, 500.0, 21), lin("domega_S_khz", -500.0, 500.0, 21)),
                                     name="fig9c")),
        "fig9c-ridge": ("fig9c", SweepSpec((lin("domega_PS_anti_khz", -200.0, 200.0, 21),), name="fig9c-ridge")),
        "fig10awgn": ("fig10awgn", SweepSpec((Axis("snr_db", (10.0,)),), trials=20, seed=0, name="fig10awgn")),
        "fig10rand": ("fig10rand", SweepSpec((Axis("gamma", (0.5,)),), trials=20, seed=0, name="fig10rand")),
        "fig11": ("fig11", SweepSpec((Axis("tau2_us", (10.0, 30.0, 100.0, 200.0, 300.0, 1000.0)),
                                      Axis("tau3_us", (10.0, 30.0, 100.0, 300.0, 400.0, 1000.0))), name="fig11")),
    }


def get_sweep(name: str) -> tuple[Scenario, SweepSpec]:
    reg = canonical_sweeps()
    if name not in reg:
        raise UnknownScenarioError(f"unknown sweep {name!r}; valid names: {', '.join(sorted(reg))}")
    scenario_name, spec = reg[name]
    return get_scenario(scenario_name), spec
