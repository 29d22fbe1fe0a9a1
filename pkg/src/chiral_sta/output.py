"""CSV/JSON writers and the run manifest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import ScenarioResult
from .pulses import waveform_table


def fmt(x) -> str:
    """Fixed 12-significant-digit rendering used by every numeric output."""
    return f"{float(x):.12g}"


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def trajectory_csv(times, populations) -> str:
    pops = np.asarray(populations)
    header = ["t_us"] + [f"P{k + 1}" for k in range(pops.shape[1])]
    return _csv(header, np.column_stack([times, pops]))


def waveform_csv(fields, t_grid) -> str:
    return _csv(["t_us", "omega_P", "omega_S", "omega_Q"], waveform_table(fields, t_grid))


def summary_record(res: ScenarioResult) -> dict:
    s = res.scenario
    return {
        "scenario": s.name,
        "scenario_hash": s.digest(),
        "model": s.model,
        "seed": s.seed,
        "D": float(fmt(res.D)),
        "final_populations_L": [float(fmt(x)) for x in res.final_l],
        "final_populations_R": [float(fmt(x)) for x in res.final_r],
        "max_step_us": float(fmt(res.max_step)),
        "n_steps": res.n_steps,
        "version": __version__,
    }


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    out_dir: str
    scenario_hash: str
    seed: int
    duration_s: float = 0.0
    files: dict[str, str] = field(default_factory=dict)  # relative name -> sha256

    def write_text(self, name: str, text: str) -> Path:
        path = Path(self.out_dir) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.files[name] = sha256_file(path)
        return path

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def save(self, name: str = "manifest.json") -> Path:
        path = Path(self.out_dir) / name
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    def verify(self) -> list[str]:
        """Names of listed files whose digest no longer matches."""
        return [n for n, d in self.files.items() if sha256_file(Path(self.out_dir) / n) != d]

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def write_simulation(res: ScenarioResult, manifest: RunManifest, wave_step: float) -> None:
    """Trajectories for both enantiomers with sidecars, the waveform table and the summary."""
    s = res.scenario
    meta = {"scenario_hash": s.digest(), "max_step_us": float(fmt(res.max_step)), "n_steps": res.n_steps,
            "seed": s.seed, "version": __version__}
    for tag, pops in (("L", res.populations_l), ("R", res.populations_r)):
        manifest.write_text(f"trajectory_{tag}.csv", trajectory_csv(res.times, pops))
        manifest.write_json(f"trajectory_{tag}.meta.json", {**meta, "chirality": tag})
    t0, t1 = s.span()
    n = int(round((t1 - t0) / wave_step))
    manifest.write_text("waveforms.csv", waveform_csv(res.fields, t0 + wave_step * np.arange(n + 1)))
    manifest.write_json("summary.json", summary_record(res))
