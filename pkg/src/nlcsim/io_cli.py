"""Configuration, persistence, time series, and the command line.

The external surface lives here: a strict JSON config schema, the NLC1
binary snapshot format (little-endian, bitwise round-trip), the CSV column
contract for time series, and the nlcsim subcommands with their exit codes
(0 success, 1 config/usage error, 2 blow-up).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import struct
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import RATIO_FAMILIES, DiagnosticsRecord, gn_probe
from .dynamics import (
    INIT_NAMES,
    INTEGRATORS,
    MODELS,
    BlowUpError,
    SimParams,
    SimState,
    initial_state,
    make_params,
    run,
)
from .fields import dealias, lp_norm, make_grid, to_physical, vector_field

CSV_COLUMNS = ("t", "kinetic", "elastic", "penalty", "total_E", "E_alpha",
               "dissipation", "energy_residual", "max_d", "div_residual",
               "helicity", "enstrophy")

SNAPSHOT_MAGIC = b"NLC1"
SNAPSHOT_VERSION = 1
_HEADER_FMT = "<4sIBQddB6d"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)
_MODEL_TAGS = {"lc": 0, "lc-alpha": 1}
_TAG_MODELS = {v: k for k, v in _MODEL_TAGS.items()}

_DEFAULTS = {
    "dim": 2,
    "n": 64,
    "length": 2.0 * np.pi,
    "nu": 0.1,
    "lambda": 1.0,
    "gamma": 1.0,
    "epsilon": 0.1,
    "alpha": 0.0,
    "dt": 1e-3,
    "t_end": 1.0,
    "save_every": 10,
    "snapshot_every": 0,
    "model": "lc",
    "init": "taylor-green-uniform-d",
    "seed": 0,
    "output_dir": "out",
    "integrator": "imex1",
    "dealias": True,
}

_INT_KEYS = ("dim", "n", "save_every", "snapshot_every", "seed")
_REAL_KEYS = ("length", "nu", "lambda", "gamma", "epsilon", "alpha", "dt", "t_end")
_STR_KEYS = ("model", "init", "output_dir", "integrator")


@dataclass(frozen=True)
class Config:
    """Fully resolved run configuration (defaults filled, keys validated)."""

    dim: int = 2
    n: int = 64
    length: float = 2.0 * np.pi
    nu: float = 0.1
    lam: float = 1.0
    gamma: float = 1.0
    epsilon: float = 0.1
    alpha: float = 0.0
    dt: float = 1e-3
    t_end: float = 1.0
    save_every: int = 10
    snapshot_every: int = 0
    model: str = "lc"
    init: str = "taylor-green-uniform-d"
    seed: int = 0
    output_dir: str = "out"
    integrator: str = "imex1"
    dealias: bool = True


def parse_config(text: str) -> Config:
    """Parse and validate a JSON config; every error names the bad key.

    Unknown keys are rejected outright so typos cannot silently fall back
    to defaults.
    """
    data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    for key in data:
        if key not in _DEFAULTS:
            raise ValueError(f"unknown config key {key!r}")
    merged = {**_DEFAULTS, **data}

    for key in _INT_KEYS:
        v = merged[key]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"{key} must be an integer, got {v!r}")
    for key in _REAL_KEYS:
        v = merged[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"{key} must be a number, got {v!r}")
        merged[key] = float(v)
    for key in _STR_KEYS:
        if not isinstance(merged[key], str):
            raise ValueError(f"{key} must be a string, got {merged[key]!r}")
    if not isinstance(merged["dealias"], bool):
        raise ValueError(f"dealias must be a boolean, got {merged['dealias']!r}")

    make_grid(merged["dim"], merged["n"], merged["length"])
    make_params(nu=merged["nu"], lam=merged["lambda"], gamma=merged["gamma"],
                epsilon=merged["epsilon"], alpha=merged["alpha"], dt=merged["dt"],
                model=merged["model"], dealias=merged["dealias"])
    if merged["t_end"] < 0:
        raise ValueError(f"t_end must be >= 0, got {merged['t_end']}")
    if merged["save_every"] < 1:
        raise ValueError(f"save_every must be >= 1, got {merged['save_every']}")
    if merged["snapshot_every"] < 0:
        raise ValueError(f"snapshot_every must be >= 0, got {merged['snapshot_every']}")
    if merged["seed"] < 0:
        raise ValueError(f"seed must be >= 0, got {merged['seed']}")
    if merged["init"] not in INIT_NAMES and not merged["init"].startswith("file:"):
        raise ValueError(
            f"init must be one of {INIT_NAMES} or 'file:<path>', got {merged['init']!r}")
    if merged["integrator"] not in INTEGRATORS:
        raise ValueError(f"integrator must be one of {INTEGRATORS}, got {merged['integrator']!r}")
    if not merged["output_dir"]:
        raise ValueError("output_dir must be a non-empty path")

    kwargs = {("lam" if k == "lambda" else k): v for k, v in merged.items()}
    return Config(**kwargs)


def serialize_config(config: Config) -> str:
    """Canonical JSON form: fixed key order, defaults included."""
    out = {}
    for key in _DEFAULTS:
        attr = "lam" if key == "lambda" else key
        out[key] = getattr(config, attr)
    return json.dumps(out, indent=2)


def config_params(config: Config) -> SimParams:
    return make_params(nu=config.nu, lam=config.lam, gamma=config.gamma,
                       epsilon=config.epsilon, alpha=config.alpha, dt=config.dt,
                       model=config.model, dealias=config.dealias)


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def write_snapshot(state: SimState, params: SimParams, path) -> None:
    """Write the NLC1 binary snapshot: fixed header, then u and d payloads
    as little-endian float64 in row-major order, physical representation."""
    grid = state.grid
    header = struct.pack(
        _HEADER_FMT, SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.dim, grid.n,
        grid.length, state.t, _MODEL_TAGS[params.model],
        params.nu, params.lam, params.gamma, params.epsilon, params.alpha, params.dt)
    u = np.ascontiguousarray(to_physical(state.u).stacked(), dtype="<f8")
    d = np.ascontiguousarray(to_physical(state.d).stacked(), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(u.tobytes())
        fh.write(d.tobytes())


def read_snapshot(path) -> tuple:
    """Read an NLC1 snapshot back into (SimState, SimParams).

    The stored dealias flag does not exist in the format; the returned
    SimParams uses dealias=True and resuming runs take the flag from the
    config instead.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER_SIZE:
        raise ValueError("truncated snapshot: incomplete header")
    (magic, version, dim, n, length, t, tag,
     nu, lam, gamma, epsilon, alpha, dt) = struct.unpack_from(_HEADER_FMT, raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError("bad magic: not an NLC1 snapshot")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    if tag not in _TAG_MODELS:
        raise ValueError(f"unknown model tag {tag}")
    grid = make_grid(dim, n, length)
    count = 2 * dim * n ** dim
    if len(raw) < _HEADER_SIZE + 8 * count:
        raise ValueError("truncated snapshot: incomplete payload")
    flat = np.frombuffer(raw, dtype="<f8", count=count, offset=_HEADER_SIZE)
    data = flat.astype(np.float64).reshape((2 * dim,) + grid.shape)
    state = SimState(t, vector_field(grid, data[:dim]), vector_field(grid, data[dim:]))
    params = SimParams(nu, lam, gamma, epsilon, alpha, dt, _TAG_MODELS[tag], True)
    return state, params


# ---------------------------------------------------------------------------
# time series
# ---------------------------------------------------------------------------

def append_csv(rec: DiagnosticsRecord, path) -> None:
    """Append one record; the header line is written on file creation.

    Values carry 17 significant digits so a re-read reproduces the floats
    exactly.
    """
    p = Path(path)
    fresh = not p.exists() or p.stat().st_size == 0
    with open(p, "a", encoding="utf-8") as fh:
        if fresh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
        fh.write(",".join(f"{v:.17g}" for v in dataclasses.astuple(rec)) + "\n")


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="nlcsim", description="Nematic liquid-crystal flow simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="advance a configured run from t=0")
    p_run.add_argument("--config", required=True, help="path to JSON config")

    p_res = sub.add_parser("resume", help="continue a run from a snapshot")
    p_res.add_argument("--snapshot", required=True, help="path to NLC1 snapshot")
    p_res.add_argument("--config", required=True, help="path to JSON config")

    p_gn = sub.add_parser("probe-gn", help="sample interpolation-inequality ratios")
    p_gn.add_argument("--dim", type=int, default=2)
    p_gn.add_argument("--n", type=int, default=64)
    p_gn.add_argument("--samples", type=int, default=1000)
    p_gn.add_argument("--seed", type=int, default=0)

    p_conv = sub.add_parser(
        "convergence",
        help="Taylor-Green decay order check over a dt list (forces that case)")
    p_conv.add_argument("--config", required=True)
    p_conv.add_argument("--dts", required=True, help="comma-separated dt values")

    sub.add_parser("version", help="print the package version")
    return parser


def _load_config(path) -> Config:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _execute(config: Config, state0: SimState | None) -> int:
    grid = make_grid(config.dim, config.n, config.length)
    params = config_params(config)
    if state0 is None:
        if config.init.startswith("file:"):
            snap_state, _ = read_snapshot(config.init[len("file:"):])
            if snap_state.grid != grid:
                raise ValueError("init file grid does not match the config grid")
            state0 = SimState(0.0, snap_state.u, snap_state.d)
            if config.dealias:
                state0 = SimState(0.0, dealias(state0.u), dealias(state0.d))
        else:
            state0 = initial_state(grid, config.init, config.seed,
                                   apply_dealias=config.dealias)

    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "series.csv"

    def on_record(rec):
        append_csv(rec, csv_path)

    def on_snapshot(st, _k):
        step = int(round(st.t / params.dt))
        write_snapshot(st, params, outdir / f"snap_{step:08d}.nlc1")

    try:
        final, _records = run(state0, params, config.t_end,
                              save_every=config.save_every,
                              integrator=config.integrator,
                              snapshot_every=config.snapshot_every,
                              on_record=on_record, on_snapshot=on_snapshot)
    except BlowUpError as exc:
        abort_path = outdir / "abort.nlc1"
        write_snapshot(exc.state, params, abort_path)
        print(f"error: {exc}", file=sys.stderr)
        print(f"last good state written to {abort_path}", file=sys.stderr)
        return 2
    write_snapshot(final, params, outdir / "final.nlc1")
    print(f"finished at t = {final.t:.6g}; series in {csv_path}")
    return 0


def _cmd_run(args) -> int:
    return _execute(_load_config(args.config), None)


def _cmd_resume(args) -> int:
    config = _load_config(args.config)
    state, _snap_params = read_snapshot(args.snapshot)
    if state.grid != make_grid(config.dim, config.n, config.length):
        raise ValueError("snapshot grid does not match the config grid")
    return _execute(config, state)


def _cmd_probe_gn(args) -> int:
    report = gn_probe(args.dim, args.n, args.samples, args.seed)
    print(f"gn probe: dim={report['dim']} n={report['n']} "
          f"samples={report['samples']} seed={report['seed']} skipped={report['skipped']}")
    for fam in RATIO_FAMILIES:
        mx, mean = report["max"][fam], report["mean"][fam]
        if mx is None:
            print(f"  {fam:8s} all samples skipped")
        else:
            print(f"  {fam:8s} max={mx:.6f} mean={mean:.6f}")
    return 0


def _cmd_convergence(args) -> int:
    config = _load_config(args.config)
    try:
        dts = [float(s) for s in args.dts.split(",") if s.strip()]
    except ValueError:
        raise ValueError(f"could not parse --dts {args.dts!r}") from None
    if len(dts) < 2:
        raise ValueError("convergence needs at least two dt values")
    if config.t_end <= 0:
        raise ValueError("convergence needs t_end > 0")

    grid = make_grid(config.dim, config.n, config.length)
    state0 = initial_state(grid, "taylor-green-uniform-d", config.seed,
                           apply_dealias=config.dealias)
    decay = float(np.exp(-config.nu * config.t_end))
    exact = vector_field(grid, [decay * c.values for c in to_physical(state0.u).components])
    exact_norm = lp_norm(exact, 2)

    errors = []
    for dt in dts:
        params = make_params(nu=config.nu, lam=config.lam, gamma=config.gamma,
                             epsilon=config.epsilon, alpha=0.0, dt=dt,
                             model="lc", dealias=config.dealias)
        nsteps = max(1, int(round(config.t_end / dt)))
        final, _ = run(state0, params, config.t_end, save_every=nsteps,
                       integrator=config.integrator)
        diff = vector_field(grid, [to_physical(a).values - to_physical(b).values
                                   for a, b in zip(final.u.components, exact.components)])
        err = lp_norm(diff, 2) / exact_norm
        errors.append(err)
        print(f"dt={dt:g} rel_err={err:.6e}")
    slope = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    print(f"observed order: {slope:.3f}")
    return 0


def cli(argv) -> int:
    """Entry point returning the process exit code (0/1/2)."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    handlers = {
        "run": _cmd_run,
        "resume": _cmd_resume,
        "probe-gn": _cmd_probe_gn,
        "convergence": _cmd_convergence,
    }
    if args.command == "version":
        print(f"nlcsim {__version__}")
        return 0
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
