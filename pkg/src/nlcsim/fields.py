"""Periodic grids, spectral transforms, and the operators everything else is built on.

All fields live on uniform n^dim grids over [0, L)^dim with periodic wrap.
Derivatives are exact Fourier multipliers ik_j and -|k|^2, integrals are the
trapezoid rule (exact for band-limited integrands on these grids), and the
Nyquist mode is zeroed in every derivative multiplier so derivatives of real
fields stay real.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as _fft

PHYSICAL = "physical"
SPECTRAL = "spectral"

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid:
    """Uniform periodic box: n points per axis on [0, length)^dim."""

    dim: int
    n: int
    length: float = _TWO_PI

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def volume(self) -> float:
        return self.length ** self.dim

    @property
    def weight(self) -> float:
        """Quadrature weight carried by one grid point."""
        return (self.length / self.n) ** self.dim

    def axis_points(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    def meshgrid(self) -> list:
        """Physical coordinate arrays, one per axis, 'ij' indexed."""
        pts = self.axis_points()
        return list(np.meshgrid(*([pts] * self.dim), indexing="ij"))

    def wavenumbers(self) -> np.ndarray:
        """The 1d wavenumber ladder (-n/2+1 .. n/2) * 2*pi/length.

        The Nyquist entry is resolved to +n/2; derivative multipliers zero
        it separately (see _kderiv).
        """
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        k[self.n // 2] = self.n // 2
        return k * (_TWO_PI / self.length)


def make_grid(dim: int, n: int, length: float = _TWO_PI) -> Grid:
    """Validated Grid constructor.

    Args:
        dim: spatial dimension, 2 or 3.
        n: points per axis, even and at least 8.
        length: box size L, strictly positive.

    Raises:
        ValueError: if any precondition fails.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if n % 2 != 0:
        raise ValueError(f"n must be even, got {n}")
    if n < 8:
        raise ValueError(f"n must be >= 8, got {n}")
    if not (length > 0):
        raise ValueError(f"length must be positive, got {length}")
    return Grid(int(dim), int(n), float(length))


@lru_cache(maxsize=64)
def _axes(grid: Grid) -> tuple:
    """Per-axis wavenumber arrays broadcast to the grid shape (read-only)."""
    base = grid.wavenumbers()
    out = []
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.n
        k = base.reshape(shape)
        k = np.broadcast_to(k, grid.shape).copy()
        k.flags.writeable = False
        out.append(k)
    return tuple(out)


@lru_cache(maxsize=64)
def _kderiv(grid: Grid) -> tuple:
    """Derivative wavenumbers: same ladder but with the Nyquist zeroed."""
    base = grid.wavenumbers()
    base[grid.n // 2] = 0.0
    out = []
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.n
        k = np.broadcast_to(base.reshape(shape), grid.shape).copy()
        k.flags.writeable = False
        out.append(k)
    return tuple(out)


@lru_cache(maxsize=64)
def _k2(grid: Grid) -> np.ndarray:
    """|k|^2 built from the derivative wavenumbers (so laplacian and
    helmholtz_inverse agree with divergence(gradient(.)) exactly)."""
    k2 = np.zeros(grid.shape)
    for k in _kderiv(grid):
        k2 = k2 + k * k
    k2.flags.writeable = False
    return k2


@lru_cache(maxsize=64)
def _inv_k2(grid: Grid) -> np.ndarray:
    k2 = _k2(grid)
    with np.errstate(divide="ignore"):
        inv = np.where(k2 > 0.0, 1.0 / np.where(k2 > 0.0, k2, 1.0), 0.0)
    inv.flags.writeable = False
    return inv


@lru_cache(maxsize=64)
def _dealias_mask(grid: Grid) -> np.ndarray:
    """Boolean keep-mask of the 2/3 rule: drop modes with any |k_j| > n/3 * 2pi/L."""
    cutoff = (grid.n / 3.0) * (_TWO_PI / grid.length)
    mask = np.ones(grid.shape, dtype=bool)
    for k in _axes(grid):
        mask &= np.abs(k) <= cutoff + 1e-12
    mask.flags.writeable = False
    return mask


@dataclass
class Field:
    """A scalar field: sample array over a grid plus a representation flag.

    Physical values are real float64 samples; spectral values are the
    complex128 output of numpy's unnormalized fftn.
    """

    grid: Grid
    values: np.ndarray
    rep: str = PHYSICAL

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid shape {self.grid.shape}"
            )
        if self.rep not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation {self.rep!r}")
        if self.rep == PHYSICAL:
            self.values = self.values.astype(np.float64, copy=False)
        else:
            self.values = self.values.astype(np.complex128, copy=False)


@dataclass
class VectorField:
    """dim-many Fields sharing one grid and one representation."""

    components: tuple

    def __post_init__(self):
        self.components = tuple(self.components)
        if not self.components:
            raise ValueError("VectorField needs at least one component")
        g = self.components[0].grid
        r = self.components[0].rep
        for c in self.components:
            if c.grid != g:
                raise ValueError("components do not share a grid")
            if c.rep != r:
                raise ValueError("components do not share a representation")

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    @property
    def rep(self) -> str:
        return self.components[0].rep

    def stacked(self) -> np.ndarray:
        return np.stack([c.values for c in self.components])


def vector_field(grid: Grid, arrays, rep: str = PHYSICAL) -> VectorField:
    return VectorField(tuple(Field(grid, a, rep) for a in arrays))


def constant_field(grid: Grid, value: float) -> Field:
    return Field(grid, np.full(grid.shape, float(value)))


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def to_spectral(f):
    """Forward transform (no-op if already spectral). Accepts Field or VectorField."""
    if isinstance(f, VectorField):
        return VectorField(tuple(to_spectral(c) for c in f.components))
    if f.rep == SPECTRAL:
        return f
    if not np.all(np.isfinite(f.values)):
        raise ValueError("field contains non-finite values")
    return Field(f.grid, _fft.fftn(f.values), SPECTRAL)


def to_physical(f):
    """Backward transform (no-op if already physical). Accepts Field or VectorField.

    The imaginary part of the inverse transform is discarded; for spectra
    with conjugate symmetry it is pure round-off.
    """
    if isinstance(f, VectorField):
        return VectorField(tuple(to_physical(c) for c in f.components))
    if f.rep == PHYSICAL:
        return f
    if not np.all(np.isfinite(f.values)):
        raise ValueError("field contains non-finite values")
    return Field(f.grid, _fft.ifftn(f.values).real, PHYSICAL)


def _spectral_values(f: Field) -> np.ndarray:
    return to_spectral(f).values


def _match_rep(values: np.ndarray, grid: Grid, rep: str):
    """Wrap spectral working values back into the caller's representation."""
    if rep == SPECTRAL:
        return Field(grid, values, SPECTRAL)
    return Field(grid, _fft.ifftn(values).real, PHYSICAL)


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------

def gradient(f: Field) -> VectorField:
    """Spectral gradient of a scalar field, returned in the input representation."""
    fh = _spectral_values(f)
    comps = []
    for k in _kderiv(f.grid):
        comps.append(_match_rep(1j * k * fh, f.grid, f.rep))
    return VectorField(tuple(comps))


def jacobian(v: VectorField) -> list:
    """Matrix of Fields J[i][j] = d_i v_j (derivative index first)."""
    grads = [gradient(c) for c in v.components]
    dim = v.grid.dim
    return [[grads[j].components[i] for j in range(len(v.components))] for i in range(dim)]


def divergence(v: VectorField) -> Field:
    if len(v.components) != v.grid.dim:
        raise ValueError("divergence needs one component per axis")
    kd = _kderiv(v.grid)
    out = np.zeros(v.grid.shape, dtype=np.complex128)
    for k, c in zip(kd, v.components):
        out += 1j * k * _spectral_values(c)
    return _match_rep(out, v.grid, v.rep)


def laplacian(f: Field) -> Field:
    return _match_rep(-_k2(f.grid) * _spectral_values(f), f.grid, f.rep)


def curl(v: VectorField) -> VectorField:
    """Curl of a 3-component field on a 3d grid."""
    if v.grid.dim != 3 or len(v.components) != 3:
        raise ValueError("curl is defined for 3-component fields on 3d grids")
    kd = _kderiv(v.grid)
    vh = [_spectral_values(c) for c in v.components]
    out = [
        1j * (kd[1] * vh[2] - kd[2] * vh[1]),
        1j * (kd[2] * vh[0] - kd[0] * vh[2]),
        1j * (kd[0] * vh[1] - kd[1] * vh[0]),
    ]
    return VectorField(tuple(_match_rep(o, v.grid, v.rep) for o in out))


def def_tensor(u: VectorField) -> list:
    """Rate-of-deformation tensor Def u = (grad u + grad u^T)/2 as a matrix of Fields."""
    J = jacobian(u)
    dim = u.grid.dim
    out = [[None] * dim for _ in range(dim)]
    for i in range(dim):
        for j in range(dim):
            if j < i:
                out[i][j] = out[j][i]
                continue
            vals = 0.5 * (J[i][j].values + J[j][i].values)
            out[i][j] = Field(u.grid, vals, J[i][j].rep)
    return out


# ---------------------------------------------------------------------------
# projections and filters
# ---------------------------------------------------------------------------

def leray_project(v: VectorField) -> VectorField:
    """Leray projection onto divergence-free fields.

    Mode-wise u_hat -> (I - k k^T / |k|^2) u_hat for k != 0; the mean flow
    (k = 0) passes through untouched.
    """
    if len(v.components) != v.grid.dim:
        raise ValueError("leray_project needs one component per axis")
    kd = _kderiv(v.grid)
    inv = _inv_k2(v.grid)
    vh = [_spectral_values(c) for c in v.components]
    divh = np.zeros(v.grid.shape, dtype=np.complex128)
    for k, c in zip(kd, vh):
        divh += k * c
    divh *= inv
    out = [vh[i] - kd[i] * divh for i in range(v.grid.dim)]
    return VectorField(tuple(_match_rep(o, v.grid, v.rep) for o in out))


def helmholtz_inverse(f, alpha: float):
    """Apply (1 - alpha^2 Laplacian)^(-1), the mode-wise symbol 1/(1 + alpha^2 |k|^2).

    alpha = 0 is the identity. Accepts Field or VectorField.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if isinstance(f, VectorField):
        return VectorField(tuple(helmholtz_inverse(c, alpha) for c in f.components))
    if alpha == 0:
        return f
    sym = 1.0 / (1.0 + alpha * alpha * _k2(f.grid))
    return _match_rep(sym * _spectral_values(f), f.grid, f.rep)


def dealias(f):
    """2/3-rule truncation: zero every mode with any |k_j| > n/3 * 2pi/L.

    Idempotent; representation of the input is preserved. Accepts Field or
    VectorField.
    """
    if isinstance(f, VectorField):
        return VectorField(tuple(dealias(c) for c in f.components))
    mask = _dealias_mask(f.grid)
    return _match_rep(mask * _spectral_values(f), f.grid, f.rep)


# ---------------------------------------------------------------------------
# norms and inner products
# ---------------------------------------------------------------------------

def _physical_stack(x) -> np.ndarray:
    if isinstance(x, VectorField):
        return to_physical(x).stacked()
    return to_physical(x).values[None]


def lp_norm(x, p) -> float:
    """Quadrature-weighted L^p norm, p in {2, 4, 8, inf}.

    Vector fields use the pointwise Euclidean magnitude. p = 2 is evaluated
    in whichever representation the input already has (Parseval); the other
    exponents need physical samples.
    """
    if p == 2:
        return float(np.sqrt(max(l2_inner(x, x), 0.0)))
    if p in (4, 8):
        vals = _physical_stack(x)
        mag2 = np.sum(vals * vals, axis=0)
        grid = x.grid
        return float((np.sum(mag2 ** (p // 2)) * grid.weight) ** (1.0 / p))
    if p == np.inf or p == "inf":
        vals = _physical_stack(x)
        return float(np.sqrt(np.max(np.sum(vals * vals, axis=0))))
    raise ValueError(f"unsupported p: {p!r} (use 2, 4, 8 or inf)")


def l2_inner(a, b) -> float:
    """Discrete L^2 inner product; component sum for vector fields."""
    if isinstance(a, VectorField) != isinstance(b, VectorField):
        raise ValueError("cannot pair a scalar with a vector field")
    if isinstance(a, VectorField):
        if a.grid != b.grid:
            raise ValueError("grid mismatch")
        return float(sum(l2_inner(x, y) for x, y in zip(a.components, b.components)))
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    if a.rep != b.rep:
        a, b = to_physical(a), to_physical(b)
    if a.rep == PHYSICAL:
        return float(np.sum(a.values * b.values) * a.grid.weight)
    # Parseval with numpy's unnormalized fftn: divide by the point count once
    npts = a.grid.n ** a.grid.dim
    return float(np.real(np.sum(a.values * np.conj(b.values))) * a.grid.weight / npts)


def hs_seminorm(x, s: int) -> float:
    """Homogeneous H^s seminorm via the |k|^s multiplier; s = 0 is the L^2 norm."""
    if s < 0 or int(s) != s:
        raise ValueError(f"s must be a non-negative integer, got {s}")
    if isinstance(x, VectorField):
        return float(np.sqrt(sum(hs_seminorm(c, s) ** 2 for c in x.components)))
    if s == 0:
        return lp_norm(x, 2)
    fh = _spectral_values(x)
    grid = x.grid
    mult = _k2(grid) ** s
    npts = grid.n ** grid.dim
    val = np.sum(mult * (fh.real ** 2 + fh.imag ** 2)) * grid.weight / npts
    return float(np.sqrt(max(val, 0.0)))
