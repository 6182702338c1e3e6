"""Command-line front end: one subcommand per pipeline stage, CSV out.

Exit status is 0 on success, 2 for configuration errors, 3 for numerical or
physical-validity failures and 4 for I/O failures.  On failure a single JSON
line ``{"error": <category>, "code": <n>, "message": ...}`` goes to stderr and
every file the run had written is removed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import bec_coupling as bec
from . import dynamics as dyn
from . import loop_field as lf
from . import squid_circuit as sq
from . import tomography as tomo
from .config import FAST_OVERRIDES, ConfigError, RunConfig, default_config, parse_config

OUT_ENV = "SQUIDBEC_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
SUBCOMMANDS = ("squid-analyze", "field-sample", "coupling", "transfer", "entangle",
               "sweep-ramp", "tomography", "full-pipeline")


class Artifacts:
    """Writes files into the output directory and can roll them back."""

    def __init__(self, directory: Path, precision: int = 17):
        self.directory = directory
        self.precision = precision
        self.written: list[Path] = []
        self._created_dir = False

    def path(self, name: str) -> Path:
        if not self.directory.exists():
            self.directory.mkdir(parents=True)
            self._created_dir = True
        p = self.directory / name
        self.written.append(p)
        return p

    def _fmt(self, x) -> str:
        if isinstance(x, (float, np.floating)):
            return format(float(x), f".{self.precision}g")
        return str(x)

    def csv(self, name: str, columns: dict[str, np.ndarray] | list[dict],
            header: dict[str, object] | None = None) -> Path:
        p = self.path(name)
        with p.open("w", newline="") as fh:
            for key, value in (header or {}).items():
                fh.write(f"# {key} = {value}\n")
            writer = csv.writer(fh, lineterminator="\n")
            if isinstance(columns, dict):
                writer.writerow(columns)
                for row in zip(*columns.values()):
                    writer.writerow(self._fmt(x) for x in row)
            else:
                writer.writerow(columns[0])
                for row in columns:
                    writer.writerow(self._fmt(x) for x in row.values())
        return p

    def report(self, name: str, values: dict[str, object]) -> Path:
        p = self.path(name)
        p.write_text("".join(f"{k} = {self._fmt(v)}\n" for k, v in values.items()))
        return p

    def json(self, name: str, payload: dict) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return p

    def rollback(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)
        if self._created_dir:
            try:
                self.directory.rmdir()
            except OSError:
                pass


def _jsonable(x):
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not serialisable: {type(x)}")


class Run:
    """State shared by the stages of one invocation."""

    def __init__(self, config: RunConfig, out: Artifacts, command: str):
        self.config = config
        self.out = out
        self.command = command
        self.derived: dict[str, object] = {}
        self._analysis = None
        self._coupling = None

    def section_header(self, *sections: str) -> dict[str, str]:
        return {f"{s}.{k}": v for s in sections for k, v in self.config.text[s].items()}

    # stages ---------------------------------------------------------------

    def squid(self) -> sq.DoubleWellAnalysis:
        if self._analysis is None:
            params = self.config.squid_params()
            self.derived["beta_L"] = params.beta_L
            self.derived["U0_J"] = params.U0
            self._analysis = sq.analyze_double_well(
                params, self.config["squid"]["symmetry_tol"])
            self.derived["I_circ_A"] = self._analysis.I_circ
        return self._analysis

    def squid_analyze(self):
        params = self.config.squid_params()
        analysis = self.squid()
        self.out.report("squid_report.txt", {"beta_L": params.beta_L, "U0_J": params.U0,
                                              **analysis.as_report()})
        n = self.config["squid"]["potential_samples"]
        phi = np.linspace(params.phi_ex - 1.0, params.phi_ex + 1.0, n)
        self.out.csv("potential.csv",
                     {"phi": phi, "U_over_U0": sq.reduced_potential(phi, params.phi_ex,
                                                                    params.beta_L)},
                     self.section_header("squid"))

    def loop_current(self) -> float:
        current = self.config["loop"]["current"]
        if current == "squid":
            current = abs(self.squid().I_circ)
        self.derived["loop_current_A"] = current
        return current

    def field_sample(self):
        f = self.config["field"]
        axes = [np.linspace(*f[f"{c}_range"], f[f"n{c}"]) for c in "xyz"]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
        A, B = lf.fields_cartesian(pts, self.config.loop_geometry(), self.loop_current())
        cols = {"x": pts[:, 0], "y": pts[:, 1], "z": pts[:, 2]}
        cols.update({f"A{c}": A[:, i] for i, c in enumerate("xyz")})
        cols.update({f"B{c}": B[:, i] for i, c in enumerate("xyz")})
        self.out.csv("field.csv", cols, self.section_header("loop", "field"))

    def coupling(self) -> bec.CouplingResult:
        if self._coupling is None:
            params = self.config.bec_params()
            self._coupling = bec.compute_coupling(params, self.config.loop_geometry(),
                                                  self.loop_current(),
                                                  self.config["bec"]["nodes"])
            self.derived["abs_omega_rad_s"] = abs(self._coupling.omega_rabi)
            self.derived["abs_omega_Hz"] = abs(self._coupling.omega_rabi) / (2 * math.pi)
        return self._coupling

    def coupling_stage(self):
        result = self.coupling()
        self.out.report("coupling_report.txt", result.as_report())
        prof = bec.integrand_profile(self.config.bec_params(), self.config.loop_geometry(),
                                     self.loop_current(), self.config["bec"]["profile_samples"])
        self.out.csv("integrand.csv", prof, self.section_header("loop", "bec"))

    def hybrid_params(self) -> dyn.HybridParams:
        d = self.config["dynamics"]
        if d["omega"] == "coupling":
            omega = self.coupling().omega_rabi
        else:
            omega = d["omega"] * complex(math.cos(d["omega_phase"]), math.sin(d["omega_phase"]))
        params = dyn.HybridParams(d["E_hfs"], omega)
        if d["include_zz"]:
            c = self.coupling()
            params = dyn.with_coupling_terms(params, c.zz_coupling)
        self.derived["dynamics_abs_omega_rad_s"] = abs(omega)
        return params

    def _evolve_kw(self) -> dict:
        d = self.config["dynamics"]
        return {"frame": d["frame"], "steps_per_period": d["steps_per_period"],
                "n_records": d["n_records"]}

    def protocol(self, kind: str) -> dyn.ProtocolResult:
        d = self.config["dynamics"]
        params = self.hybrid_params()
        if kind == "transfer":
            result = dyn.transfer_protocol((d["alpha"], d["beta"]), params, d["ramp_time"],
                                           d["hold_rule"], d["w_off"], **self._evolve_kw())
        else:
            result = dyn.entangle_protocol(params, d["ramp_time"], d["hold_rule"],
                                           d["w_off"], **self._evolve_kw())
        self.derived["ramp_time_s"] = result.ramp_time
        self.derived["hold_time_s"] = result.hold_time
        header = self.section_header("dynamics")
        self.out.csv(f"{kind}_timeseries.csv", result.table(), header)
        psi = result.states[-1]
        self.out.csv(f"{kind}_final_state.csv",
                     {"label": list(dyn.BASIS_LABELS), "re": psi.real, "im": psi.imag},
                     {**header, "chi_rad": format(result.phase, ".17g")})
        self.out.report(f"{kind}_report.txt", result.summary())
        return result

    def sweep(self, ramps=None):
        d = self.config["dynamics"]
        ramps = d["ramps"] if ramps is None else ramps
        rows = dyn.sweep_ramp_times(ramps, (d["alpha"], d["beta"]), self.hybrid_params(),
                                    d["hold_rule"], d["w_off"], d["workers"],
                                    frame=d["frame"], steps_per_period=d["steps_per_period"])
        self.out.csv("sweep.csv", {"ramp_seconds": [r.ramp_time for r in rows],
                                   "F_final": [r.final_fidelity for r in rows]},
                     self.section_header("dynamics"))

    def tomography(self, state=None, chi=None):
        d, t = self.config["dynamics"], self.config["tomography"]
        if state is None:
            result = self.protocol("transfer")
            state, chi = result.states[-1], result.phase
        alpha, beta = dyn.normalise_qubit((d["alpha"], d["beta"]))
        est, records = tomo.bec_fidelity_experiment(state, tomo.transfer_target(alpha, beta, chi),
                                                    t["shots"], t["seed"], t["z"])
        self.out.csv("tomography_records.csv",
                     [{"axis": r.axis, "M": r.shots, "plus_count": r.plus_count, "seed": r.seed}
                      for r in records], self.section_header("tomography"))
        rec = est.reconstruction
        report = {f"a_{ax}": rec.bloch[i] for i, ax in enumerate(tomo.AXES)}
        report.update({f"sigma_{ax}": rec.stderr[i] for i, ax in enumerate(tomo.AXES)})
        report.update(est.as_report())
        report["chi_rad"] = chi
        self.out.report("tomography_report.txt", report)
        self.derived["tomography_fidelity"] = est.fidelity

    def manifest(self):
        artifacts = sorted(p.name for p in self.out.written)
        self.out.json("manifest.json", {
            "tool": "squidbec", "version": __version__, "command": self.command,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config": self.config.as_dict(), "derived": self.derived,
            "artifacts": artifacts})


def _read_state(path: Path) -> tuple[np.ndarray, float]:
    chi = 0.0
    rows = []
    with path.open() as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                if key.strip() == "chi_rad":
                    chi = float(value)
            else:
                rows.append(line)
    table = list(csv.DictReader(rows))
    amps = {r["label"]: complex(float(r["re"]), float(r["im"])) for r in table}
    psi = np.array([amps[label] for label in dyn.BASIS_LABELS])
    return psi / np.linalg.norm(psi), chi


def _common_flags(suppress: bool) -> argparse.ArgumentParser:
    default = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, default=default, help="INI config or run manifest")
    p.add_argument("--out", type=Path, default=default, help="output directory")
    p.add_argument("--seed", type=int, default=default, help="tomography seed")
    p.add_argument("--fast", action="store_true",
                   default=argparse.SUPPRESS if suppress else False,
                   help="scaled hyperfine splitting (100 MHz) with |omega| = 2 pi x 1 MHz")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="squidbec", parents=[_common_flags(False)],
                                     description="Flux-qubit / condensate hybrid pipeline")
    parser.add_argument("--version", action="version", version=f"squidbec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    common = _common_flags(True)
    helps = {
        "squid-analyze": "double-well analysis and potential samples",
        "field-sample": "vector potential and field of the loop on a grid",
        "coupling": "BEC-loop coupling and Rabi frequency",
        "transfer": "state-transfer protocol time series",
        "entangle": "quarter-period entangling protocol time series",
        "sweep-ramp": "final transfer fidelity against ramp time",
        "tomography": "simulated tomography of the transferred BEC qubit",
        "full-pipeline": "squid, field, coupling, transfer and tomography in sequence",
    }
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "sweep-ramp":
            sp.add_argument("--ramps", type=float, nargs="+", help="ramp times in seconds")
        if name == "tomography":
            sp.add_argument("--state", type=Path,
                            help="final-state CSV from a transfer run (default: run transfer)")
    return parser


def resolve_config(args) -> tuple[RunConfig, Path]:
    config = parse_config(args.config) if args.config else default_config()
    overrides = {}
    if args.fast:
        overrides.update(FAST_OVERRIDES)
    if args.seed is not None:
        overrides[("tomography", "seed")] = str(args.seed)
    if overrides:
        config = config.with_overrides(overrides)
    out = args.out or os.environ.get(OUT_ENV) or config["output"]["directory"]
    return config, Path(out)


def run_subcommand(name: str, config: RunConfig, out: Path, **options) -> int:
    """Run one stage and write its artifacts plus a manifest into ``out``."""
    run = Run(config, Artifacts(out, config["output"]["precision"]), name)
    try:
        if name == "squid-analyze":
            run.squid_analyze()
        elif name == "field-sample":
            run.field_sample()
        elif name == "coupling":
            run.coupling_stage()
        elif name in ("transfer", "entangle"):
            run.protocol(name)
        elif name == "sweep-ramp":
            run.sweep(options.get("ramps"))
        elif name == "tomography":
            state = options.get("state")
            if state is not None:
                psi, chi = _read_state(Path(state))
                run.tomography(psi, chi)
            else:
                run.tomography()
        elif name == "full-pipeline":
            run.squid_analyze()
            run.field_sample()
            run.coupling_stage()
            result = run.protocol("transfer")
            run.tomography(result.states[-1], result.phase)
        else:
            raise ConfigError(f"unknown subcommand {name!r}")
        run.manifest()
    except BaseException:
        run.out.rollback()
        raise
    return EXIT_OK


def _fail(category: str, code: int, exc: BaseException) -> int:
    print(json.dumps({"error": category, "code": code, "type": type(exc).__name__,
                      "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config, out = resolve_config(args)
        options = {k: getattr(args, k) for k in ("ramps", "state") if hasattr(args, k)}
        return run_subcommand(args.command, config, out, **options)
    except ConfigError as exc:
        return _fail("config", EXIT_CONFIG, exc)
    except OSError as exc:
        return _fail("io", EXIT_IO, exc)
    except (ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        return _fail("numerical", EXIT_NUMERICAL, exc)


if __name__ == "__main__":
    sys.exit(main())
