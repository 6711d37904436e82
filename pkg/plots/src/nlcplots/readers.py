"""Stand-alone readers for the nlcsim output contracts.

These deliberately do not import nlcsim: the plots are consumers of the
published file formats, and independent parsers make contract drift fail
here instead of silently producing wrong figures.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# column contract for series.csv, in file order
SERIES_COLUMNS = (
    "t",
    "kinetic",
    "elastic",
    "penalty",
    "total_E",
    "E_alpha",
    "dissipation",
    "energy_residual",
    "max_d",
    "div_residual",
    "helicity",
    "enstrophy",
)

# NLC1 snapshot layout: little-endian header followed by the u components
# and then the d components, each a row-major float64 block of n^dim values
_MAGIC = b"NLC1"
_VERSION = 1
_HEADER = struct.Struct("<4sIBQddB6d")
_MODEL_NAMES = {0: "lc", 1: "lc-alpha"}


def read_series(path: str | Path) -> dict[str, np.ndarray]:
    """Parse a series.csv into {column: float array}.

    Raises ValueError naming every contracted column that is absent.
    Extra columns are carried through untouched.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise ValueError(f"{path}: empty file, no CSV header")
        missing = [c for c in SERIES_COLUMNS if c not in header]
        if missing:
            raise ValueError(
                f"{path}: missing required columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: header only, no data rows")
    out = {}
    for col in header:
        try:
            out[col] = np.array([float(r[col]) for r in rows])
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: non-numeric value in column {col!r}") from exc
    return out


@dataclass(frozen=True)
class Snapshot:
    """Decoded NLC1 snapshot: state arrays plus the run parameters."""

    dim: int
    n: int
    length: float
    t: float
    model: str
    params: dict[str, float]  # nu, lambda, gamma, epsilon, alpha, dt
    u: np.ndarray  # shape (dim, n, ..., n)
    d: np.ndarray  # shape (dim, n, ..., n)


def read_snapshot(path: str | Path) -> Snapshot:
    """Decode an NLC1 snapshot file."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header "
                         f"({len(raw)} bytes, need {_HEADER.size})")
    (magic, version, dim, n, length, t, tag,
     nu, lam, gamma, epsilon, alpha, dt) = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if tag not in _MODEL_NAMES:
        raise ValueError(f"{path}: unknown model tag {tag}")
    if dim not in (2, 3) or n <= 0:
        raise ValueError(f"{path}: implausible geometry dim={dim} n={n}")
    count = dim * n ** dim
    want = _HEADER.size + 2 * count * 8
    if len(raw) != want:
        raise ValueError(f"{path}: truncated payload "
                         f"({len(raw)} bytes, need {want})")
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    shape = (dim,) + (n,) * dim
    return Snapshot(
        dim=int(dim), n=int(n), length=length, t=t,
        model=_MODEL_NAMES[tag],
        params={"nu": nu, "lambda": lam, "gamma": gamma,
                "epsilon": epsilon, "alpha": alpha, "dt": dt},
        u=flat[:count].reshape(shape).copy(),
        d=flat[count:].reshape(shape).copy(),
    )
