"""Command-line front end: config loading, parameter sweeps and figure presets.

Usage::

    pt-ring <command> --config cfg.json [--sweep name:min:max:count:lin|log ...]
            [--out path] [--format csv|json] [--workers N]
    pt-ring figure <preset> [--out path] [--format csv|json]

Output is data only: one row per grid point, floats in 17-significant-digit
scientific notation, a trailing ``errors`` column for per-point failures.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .model import (
    DEFAULT_WAVELENGTH,
    ConfigError,
    DriveConfig,
    GainParams,
    Port,
    ResonatorParams,
    SystemConfig,
    _power_coupling,
    omega_from_wavelength,
    with_params,
    SWEEPABLE,
)

__all__ = [
    "COMMANDS",
    "SweepAxis",
    "RunSpec",
    "RunResult",
    "parse_quantity",
    "parse_sweep",
    "config_from_dict",
    "load_config",
    "emit_config",
    "list_presets",
    "load_preset",
    "run",
    "run_preset",
    "format_table",
    "main",
]

COMMANDS = ("steady", "eigen", "ep", "spectrum", "dynamics", "quantum", "figure")

_UNITS = {
    "hz": 1.0,
    "khz": 1e3,
    "mhz": 1e6,
    "ghz": 1e9,
    "thz": 1e12,
    "s^-1": 1.0,
    "w": 1.0,
    "mw": 1e-3,
    "uw": 1e-6,
    "μw": 1e-6,
    "µw": 1e-6,
    "nw": 1e-9,
    "pw": 1e-12,
    "m": 1.0,
    "um": 1e-6,
    "μm": 1e-6,
    "µm": 1e-6,
    "nm": 1e-9,
}
_UNIT_KIND = {
    "hz": "rate", "khz": "rate", "mhz": "rate", "ghz": "rate", "thz": "rate", "s^-1": "rate",
    "w": "power", "mw": "power", "uw": "power", "μw": "power", "µw": "power", "nw": "power", "pw": "power",
    "m": "length", "um": "length", "μm": "length", "µm": "length", "nm": "length",
}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s\d].*)?$")


def parse_quantity(value, kind: str | None = None, field_path: str = "value") -> float:
    """Number or string with an optional unit suffix ("1.15 MHz", "100 nW", "1550nm")."""
    if isinstance(value, bool):
        raise ConfigError(field_path, "expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(field_path, f"expected a number or string, got {type(value).__name__}")
    m = _QUANTITY.match(value)
    if not m:
        raise ConfigError(field_path, f"cannot parse quantity {value!r}")
    number, unit = float(m.group(1)), (m.group(2) or "").strip()
    if not unit:
        return number
    key = unit.lower()
    if key not in _UNITS:
        raise ConfigError(field_path, f"unknown unit {unit!r}")
    if kind is not None and _UNIT_KIND[key] != kind:
        raise ConfigError(field_path, f"unit {unit!r} is not a {kind} unit")
    return number * _UNITS[key]


# ---------------------------------------------------------------- config I/O

_SCHEMA = {
    "resonators": {"omega_c", "wavelength", "C1", "C2", "gamma1", "gamma2", "Q1", "Q2"},
    "gain": {"A", "B", "g", "r", "Gamma_atom", "A_sat_sq"},
    "drive": {"port", "epsilon", "power", "wavelength", "detuning", "omega"},
}
_TOP = {"resonators", "gain", "kappa", "drive"}


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(path or "<root>", "expected an object")
    for key in obj:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(where, f"unknown key; expected one of {sorted(allowed)}")


def _require(obj, key, path):
    if key not in obj:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
    return obj[key]


def _rate(obj, key, path, default=None):
    if key not in obj:
        if default is None:
            _require(obj, key, path)
        return default
    return parse_quantity(obj[key], "rate", f"{path}.{key}")


def config_from_dict(data: dict) -> SystemConfig:
    _check_keys(data, _TOP, "")
    for key in _TOP:
        _require(data, key, "")

    r = data["resonators"]
    _check_keys(r, _SCHEMA["resonators"], "resonators")
    if "omega_c" in r and "wavelength" in r:
        raise ConfigError("resonators", "give omega_c or wavelength, not both")
    if "omega_c" in r:
        omega_c = _rate(r, "omega_c", "resonators")
    else:
        wl = parse_quantity(r.get("wavelength", DEFAULT_WAVELENGTH), "length", "resonators.wavelength")
        omega_c = omega_from_wavelength(wl)
    q = {k: parse_quantity(r[k], None, f"resonators.{k}") for k in ("Q1", "Q2") if k in r}
    res = ResonatorParams(
        omega_c,
        _rate(r, "C1", "resonators"),
        _rate(r, "C2", "resonators"),
        _rate(r, "gamma1", "resonators"),
        _rate(r, "gamma2", "resonators"),
        q.get("Q1"),
        q.get("Q2"),
    )

    gd = data["gain"]
    _check_keys(gd, _SCHEMA["gain"], "gain")
    keys = set(gd)
    if keys >= {"g", "r", "Gamma_atom"}:
        micro = [_rate(gd, k, "gain") for k in ("g", "r", "Gamma_atom")]
        gain = GainParams.from_microscopic(*micro)
        if "A" in gd or "B" in gd:
            GainParams(_rate(gd, "A", "gain", gain.A), _rate(gd, "B", "gain", gain.B), *micro)
    elif "A_sat_sq" in keys:
        if "B" in keys:
            raise ConfigError("gain", "give B or A_sat_sq, not both")
        gain = GainParams.from_maxwell_bloch(_rate(gd, "A", "gain"), parse_quantity(gd["A_sat_sq"], None, "gain.A_sat_sq"))
    else:
        if keys & {"g", "r", "Gamma_atom"}:
            raise ConfigError("gain", "microscopic triple (g, r, Gamma_atom) must be given together")
        gain = GainParams(_rate(gd, "A", "gain"), _rate(gd, "B", "gain"))

    kappa = parse_quantity(data["kappa"], "rate", "kappa")

    dd = data["drive"]
    _check_keys(dd, _SCHEMA["drive"], "drive")
    try:
        port = Port.parse(_require(dd, "port", "drive"))
    except ValueError as exc:
        raise ConfigError("drive.port", str(exc)) from None
    if "detuning" in dd and "omega" in dd:
        raise ConfigError("drive", "give detuning or omega, not both")
    detuning = _rate(dd, "detuning", "drive", 0.0)
    if "omega" in dd:
        detuning = _rate(dd, "omega", "drive") - omega_c
    wavelength = parse_quantity(dd["wavelength"], "length", "drive.wavelength") if "wavelength" in dd else None
    if "power" in dd:
        power = parse_quantity(dd["power"], "power", "drive.power")
        drive = DriveConfig(port, 0.0, detuning, power, wavelength)
        eps = _power_coupling(res, drive, port)
        if "epsilon" in dd:
            given = _rate(dd, "epsilon", "drive")
            if abs(given - eps) > 1e-9 * max(eps, given):
                raise ConfigError("drive.epsilon", f"{given!r} inconsistent with power (expected {eps!r})")
        drive = DriveConfig(port, eps, detuning, power, wavelength)
    else:
        if wavelength is not None:
            raise ConfigError("drive.wavelength", "only meaningful together with power")
        drive = DriveConfig(port, _rate(dd, "epsilon", "drive"), detuning)
    return SystemConfig(res, gain, kappa, drive)


def load_config(path) -> SystemConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data)


def emit_config(config: SystemConfig) -> dict:
    """Plain-number dict that :func:`config_from_dict` maps back to an equal config."""
    res, gain, drive = config.resonators, config.gain, config.drive
    r = {"omega_c": res.omega_c, "C1": res.C1, "C2": res.C2, "gamma1": res.gamma1, "gamma2": res.gamma2}
    if res.Q1 is not None:
        r["Q1"] = res.Q1
    if res.Q2 is not None:
        r["Q2"] = res.Q2
    if gain.g is not None:
        g = {"g": gain.g, "r": gain.r, "Gamma_atom": gain.Gamma_atom}
    else:
        g = {"A": gain.A, "B": gain.B}
    d = {"port": drive.port.value, "detuning": drive.detuning}
    if drive.power is not None:
        d["power"] = drive.power
        if drive.wavelength is not None:
            d["wavelength"] = drive.wavelength
    else:
        d["epsilon"] = drive.epsilon
    return {"resonators": r, "gain": g, "kappa": config.kappa, "drive": d}


# ------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepAxis:
    name: str
    lo: float
    hi: float
    count: int
    scale: str = "lin"

    def __post_init__(self):
        if self.name not in SWEEPABLE and self.name != "gamma":
            raise ConfigError(f"sweep.{self.name}", f"unknown parameter; expected one of {sorted(SWEEPABLE)}")
        if self.count < 1:
            raise ConfigError(f"sweep.{self.name}", "count must be >= 1")
        if self.scale not in ("lin", "log"):
            raise ConfigError(f"sweep.{self.name}", "scale must be lin or log")
        if self.scale == "log" and not (self.lo > 0 and self.hi > 0):
            raise ConfigError(f"sweep.{self.name}", "log sweep needs positive bounds")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.lo])
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


def parse_sweep(text: str) -> SweepAxis:
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ConfigError("sweep", f"expected name:min:max:count[:lin|log], got {text!r}")
    name = parts[0]
    kind = "power" if name == "power" else "rate"
    lo = parse_quantity(parts[1], kind, f"sweep.{name}")
    hi = parse_quantity(parts[2], kind, f"sweep.{name}")
    try:
        count = int(parts[3])
    except ValueError:
        raise ConfigError(f"sweep.{name}", f"count must be an integer, got {parts[3]!r}") from None
    return SweepAxis(name, lo, hi, count, parts[4] if len(parts) == 5 else "lin")


@dataclass
class RunSpec:
    command: str
    config: SystemConfig | None = None
    config_path: str | None = None
    sweeps: list[SweepAxis] = field(default_factory=list)
    out: str | None = None
    format: str = "csv"
    options: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        names = [s.name for s in self.sweeps]
        if len(set(names)) != len(names):
            raise ConfigError("sweep", "each parameter may be swept only once")


@dataclass
class RunResult:
    columns: list[str]
    rows: list[list]
    n_failed: int

    @property
    def status(self) -> int:
        return 1 if self.rows and self.n_failed == len(self.rows) else 0


# ---------------------------------------------------------------- quantities


def _steady_row(config, opts):
    from .dynamics import stability_of_root
    from .steady import steady_state

    s = steady_state(config)
    stability = stability_of_root(config, None, None, s.I1)
    return [s.I1, s.I2, s.A1.real, s.A1.imag, s.A2.real, s.A2.imag, s.n_real_roots, stability]


def _eigen_row(config, opts):
    from .spectral import eigenfrequencies
    from .steady import steady_state

    I1 = steady_state(config).I1 if config.drive.epsilon > 0 else 0.0
    e = eigenfrequencies(config, I1)
    return [e.shift_plus.real, e.shift_plus.imag, e.shift_minus.real, e.shift_minus.imag, I1, e.sqrt_arg, e.pt_phase.value]


def _ep_row(config, opts):
    from .spectral import find_EP

    lin = find_EP(config, mode="linear").kappa
    sc = find_EP(config, mode="self_consistent")
    return [lin, sc.kappa, ";".join(f"{k:.16e}" for k in sc.kappas)]


def _spectrum_row(config, opts):
    from .transmission import transmissivity

    return [transmissivity(config, opts.get("direction", "1->4"))]


def _dynamics_row(config, opts):
    from .dynamics import TrajectoryState, integrate

    tr = integrate(TrajectoryState(0.0, 0j, 0j), config)
    return [tr.intensity1, tr.intensity2, tr.terminal.t, tr.converged]


def _quantum_row(config, opts):
    from .dynamics import _slowest_rate
    from .quantum import FockBasisSpec, MasterEquationForm, build_generator, default_cutoff, evolve, expectations, vacuum

    n = opts.get("cutoff") or default_cutoff(config)
    basis = FockBasisSpec(n, n)
    gen = build_generator(config, basis, MasterEquationForm(opts.get("form", "lindblad")))
    # default horizon: 20 e-folds of the slowest linear decay
    t_final = opts.get("t_final") or 20.0 / _slowest_rate(config)
    tr = evolve(vacuum(basis), gen, t_final, n_samples=opts.get("samples", 20))
    e = expectations(tr.final)
    return [e.a1.real, e.a1.imag, e.a2.real, e.a2.imag, e.n1, e.n2, e.purity, tr.trace_drift, e.top_population]


_QUANTITIES = {
    "steady": (["I1", "I2", "re_A1", "im_A1", "re_A2", "im_A2", "n_real_roots", "stability"], _steady_row),
    "eigen": (
        ["re_omega_plus", "im_omega_plus", "re_omega_minus", "im_omega_minus", "I1", "sqrt_arg", "pt_phase"],
        _eigen_row,
    ),
    "ep": (["kappa_ep_linear", "kappa_ep_self_consistent", "crossings"], _ep_row),
    "spectrum": (["T"], _spectrum_row),
    "dynamics": (["I1", "I2", "t_end", "converged"], _dynamics_row),
    "quantum": (["re_a1", "im_a1", "re_a2", "im_a2", "n1", "n2", "purity", "trace_drift", "top_population"], _quantum_row),
}


def _evaluate(job):
    command, config, values, opts = job
    columns, fn = _QUANTITIES[command]
    try:
        cfg = with_params(config, **values) if values else config
        return fn(cfg, opts), ""
    except (ArithmeticError, ValueError, RuntimeError, KeyError) as exc:
        return [math.nan] * len(columns), f"{type(exc).__name__}: {exc}"


def _grid(sweeps: list[SweepAxis]):
    if not sweeps:
        return [{}]
    axes = [[(s.name, float(v)) for v in s.values()] for s in sweeps]
    return [dict(combo) for combo in itertools.product(*axes)]


def _execute(command, config, sweeps, opts, workers, prefix=()):
    grid = _grid(sweeps)
    jobs = [(command, config, g, opts) for g in grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_evaluate(j) for j in jobs]
    rows, failed = [], 0
    for g, (vals, err) in zip(grid, results):
        failed += bool(err)
        rows.append([*prefix, *(g[s.name] for s in sweeps), *vals, err])
    return rows, failed


def run(spec: RunSpec) -> RunResult:
    """Execute ``spec`` and write its output if ``spec.out`` is set."""
    if spec.command == "figure":
        result = run_preset(spec.options["preset"], workers=spec.workers)
    else:
        config = spec.config if spec.config is not None else load_config(spec.config_path)
        columns, _ = _QUANTITIES[spec.command]
        rows, failed = _execute(spec.command, config, spec.sweeps, spec.options, spec.workers)
        result = RunResult([s.name for s in spec.sweeps] + columns + ["errors"], rows, failed)
    text = format_table(result, spec.format)
    if spec.out:
        with open(spec.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return result


# ------------------------------------------------------------------ presets


def list_presets() -> list[str]:
    root = resources.files("ptring") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    path = resources.files("ptring") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return json.loads(path.read_text())


def _overrides(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        out[key] = parse_quantity(value, "power" if key == "power" else "rate", f"series.{key}")
    return out


def _eigen_shift_row(config, opts):
    return _eigen_row(config, opts)[:5]


def _nonreciprocity_row(config, opts):
    from .steady import steady_state

    back = steady_state(config, port=Port.PORT4).I1
    fwd = steady_state(config, port=Port.PORT1).I2
    return [back, fwd, back / fwd if fwd > 0 else math.inf]


def _intensity_row(config, opts):
    from .steady import steady_state

    s = steady_state(config)
    return [s.I1, s.I2]


_PRESET_QUANTITIES = {
    "eigen": (_QUANTITIES["eigen"][0][:5], _eigen_shift_row),
    "intensities": (["I1", "I2"], _intensity_row),
    "nonreciprocity": (["I1_backward", "I2_forward", "ratio"], _nonreciprocity_row),
    "transmission": (["T"], None),
}


def _preset_eval(job):
    quantity, config, values, opts = job
    columns, fn = _PRESET_QUANTITIES[quantity]
    try:
        cfg = with_params(config, **values)
        if quantity == "transmission":
            from .transmission import transmissivity

            return [transmissivity(cfg, opts["direction"])], ""
        return fn(cfg, opts), ""
    except (ArithmeticError, ValueError, RuntimeError, KeyError) as exc:
        return [math.nan] * len(columns), f"{type(exc).__name__}: {exc}"


def run_preset(name: str, workers: int = 1) -> RunResult:
    """Evaluate a figure preset: every series over the preset's sweep axis."""
    preset = load_preset(name)
    base = config_from_dict(preset["config"])
    sw = preset["sweep"]
    kind = "power" if sw["name"] == "power" else "rate"
    axis = SweepAxis(
        sw["name"],
        parse_quantity(sw["min"], kind, "sweep.min"),
        parse_quantity(sw["max"], kind, "sweep.max"),
        int(sw["count"]),
        sw.get("scale", "lin"),
    )
    quantity = preset["quantity"]
    columns, _ = _PRESET_QUANTITIES[quantity]
    series = preset.get("series") or [{"label": name}]
    multi = len(series) > 1
    rows, failed = [], 0
    for s in series:
        config = with_params(base, **_overrides(s.get("set", {}))) if s.get("set") else base
        opts = {"direction": s.get("direction", preset.get("direction", "1->4"))}
        grid = [{axis.name: float(v)} for v in axis.values()]
        jobs = [(quantity, config, g, opts) for g in grid]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_preset_eval, jobs))
        else:
            results = [_preset_eval(j) for j in jobs]
        if quantity == "transmission" and preset.get("normalize"):
            T = np.array([r[0][0] for r in results])
            peak = np.nanmax(T) if np.any(np.isfinite(T)) else math.nan
            if peak > 0:
                results = [([v[0] / peak], err) for v, err in results]
        prefix = [s["label"]] if multi else []
        if quantity == "transmission":
            prefix.append(opts["direction"])
        for g, (vals, err) in zip(grid, results):
            failed += bool(err)
            rows.append([*prefix, g[axis.name], *vals, err])
    head = (["series"] if multi else []) + (["direction"] if quantity == "transmission" else [])
    return RunResult(head + [axis.name] + columns + ["errors"], rows, failed)


# ------------------------------------------------------------------- output


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}" if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    # strings never contain separators: errors are sanitised here
    return str(v).replace(",", ";").replace("\n", " ").replace('"', "'")


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(f"{float(v):.16e}") if math.isfinite(v) else None
    return str(v)


def format_table(result: RunResult, fmt: str = "csv") -> str:
    if fmt == "json":
        rows = [dict(zip(result.columns, map(_json_value, r))) for r in result.rows]
        return json.dumps({"columns": result.columns, "rows": rows}, indent=1, ensure_ascii=False) + "\n"
    lines = [",".join(result.columns)]
    lines.extend(",".join(_cell(v) for v in row) for row in result.rows)
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------- main


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pt-ring", description="Driven active/passive resonator pair: steady states, spectra, EPs.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("preset", nargs="?", help="preset name for the figure command")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--sweep", action="append", default=[], metavar="name:min:max:count:lin|log")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--direction", choices=("1->4", "4->1", "1->2"), default="1->4", help="spectrum direction")
    p.add_argument("--form", choices=("lindblad", "non_lindbladian"), default="lindblad", help="quantum master equation form")
    p.add_argument("--t-final", type=float, default=None, help="quantum evolution time in s")
    p.add_argument("--cutoff", type=int, default=None, help="quantum photon-number cutoff per mode")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "figure":
            if not args.preset:
                print("available presets: " + ", ".join(list_presets()))
                return 2
            spec = RunSpec("figure", out=args.out, format=args.format, options={"preset": args.preset}, workers=args.workers)
        else:
            if not args.config:
                raise ConfigError("--config", "required for this command")
            opts = {"direction": args.direction, "form": args.form, "cutoff": args.cutoff}
            if args.t_final is not None:
                opts["t_final"] = args.t_final
            spec = RunSpec(
                args.command,
                config_path=args.config,
                sweeps=[parse_sweep(s) for s in args.sweep],
                out=args.out,
                format=args.format,
                options=opts,
                workers=args.workers,
            )
        result = run(spec)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return result.status


if __name__ == "__main__":
    sys.exit(main())
