"""Command-line front end: ``simulate``, ``sweep`` and ``verify``."""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__, config, output, sweeps, verify
from .errors import ChiralStaError, ScenarioError, UnknownScenarioError
from .experiments import ScenarioRunError, get_scenario, run_scenario

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_RUN = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="chiral-sta", description="Chiral discrimination with chosen-path two-photon transfer.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run one scenario and write trajectories, waveforms and a summary")
    sim.add_argument("scenario", nargs="?", help="YAML scenario file")
    sim.add_argument("--figure", help="canonical scenario name (a file, if given, overrides it)")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=_u64)
    sim.add_argument("--dt", type=_positive, help="pulse time resolution in ns")
    sim.add_argument("--wave-step", type=_positive, default=1.0, help="waveform CSV sampling step in ns")

    sw = sub.add_parser("sweep", help="run a parameter sweep and write its CSV")
    sw.add_argument("spec", nargs="?", help="YAML sweep file")
    sw.add_argument("--figure", help="canonical sweep name")
    sw.add_argument("--scenario", help="YAML scenario file replacing the sweep's base scenario")
    sw.add_argument("--out", required=True, help="output directory")
    sw.add_argument("--parallel", type=int, help="worker processes (default: $CHIRAL_STA_THREADS or 1)")
    sw.add_argument("--seed", type=_u64)
    sw.add_argument("--dt", type=_positive, help="pulse time resolution in ns")

    sub.add_parser("verify", help="run the analytic identity checks")
    return ap


def _scenario_for_simulate(args):
    if args.scenario is None and args.figure is None:
        raise ScenarioError("give a scenario file or --figure")
    if args.scenario is not None:
        text = Path(args.scenario).read_text()
        if args.figure is not None:
            data, lines = config._parse(text)
            data.setdefault("figure", args.figure)
            s = config.scenario_from_mapping(data, lines)
        else:
            s = config.load_scenario(text)
    else:
        s = get_scenario(args.figure)
    return _overrides(s, args)


def _overrides(s, args):
    if args.seed is not None:
        s = replace(s, seed=args.seed)
    if args.dt is not None:
        s = replace(s, dt=args.dt * 1e-3)
    return s


def cmd_simulate(args) -> int:
    start = time.perf_counter()
    s = _scenario_for_simulate(args)
    res = run_scenario(s)
    manifest = output.RunManifest(str(args.out), s.digest(), s.seed)
    output.write_simulation(res, manifest, args.wave_step * 1e-3)
    manifest.write_text("scenario.yaml", config.dump_scenario(s))
    manifest.duration_s = round(time.perf_counter() - start, 3)
    manifest.save()
    print(f"{s.name}: D = {output.fmt(res.D)}  (hash {s.digest()}, {res.n_steps} steps)")
    return EXIT_OK


def cmd_sweep(args) -> int:
    start = time.perf_counter()
    if args.spec is None and args.figure is None:
        raise ScenarioError("give a sweep file or --figure")
    if args.spec is not None:
        base, spec = config.load_sweep_file(args.spec)
    else:
        base, spec = sweeps.get_sweep(args.figure)
    if args.scenario is not None:
        base = config.load_scenario_file(args.scenario)
    base = _overrides(base, args)
    if args.seed is not None and spec.seed is not None:
        spec = replace(spec, seed=args.seed)
    result = sweeps.run_sweep(base, spec, parallel=args.parallel)
    manifest = output.RunManifest(str(args.out), result.scenario_hash, base.seed)
    manifest.write_text("sweep.csv", result.to_csv())
    manifest.write_text("scenario.yaml", config.dump_scenario(base))
    manifest.write_text("sweep.yaml", config.dump_sweep(spec, "scenario.yaml"))
    manifest.duration_s = round(time.perf_counter() - start, 3)
    manifest.save()
    n_ok = int(result.ok.sum())
    print(f"{spec.name}: {n_ok}/{len(result.rows)} points ok -> {Path(args.out) / 'sweep.csv'}")
    if n_ok == 0:
        print("error: every sweep point failed", file=sys.stderr)
        return EXIT_RUN
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = verify.run_checks()
    print(verify.report(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"simulate": cmd_simulate, "sweep": cmd_sweep, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except ScenarioRunError as exc:
        print(f"error: integration failed [scenario {exc.scenario_hash}]: {exc.cause}", file=sys.stderr)
        return EXIT_RUN
    except (ScenarioError, UnknownScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ChiralStaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
