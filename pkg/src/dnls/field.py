"""Uniform periodic grid, complex field storage, and the measured functionals.

Fields live on [-L, L)^d with n samples per axis (n a power of two) and are
stored flat in row-major order.  Integrals are rectangle sums, derivatives
are spectral.  A field is trusted as a stand-in for an R^d profile only
while its mass stays away from the box boundary; `boundary_mass_fraction`
quantifies that and the solver aborts runs once it exceeds 1e-6.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .exponents import PhysParams, holder_exponents

BOUNDARY_SHELL = 0.9  # samples with |x_axis| >= 0.9 L count as the outer shell
_HEADER = struct.Struct("<qqdd")  # d, n, half_width, time_tag


@dataclass(frozen=True)
class GridSpec:
    """Sampling of [-half_width, half_width)^d with n points per axis."""

    d: int
    n: int
    half_width: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError("n must be a power of two, at least 8")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def npoints(self) -> int:
        return self.n ** self.d

    @property
    def cell(self) -> float:
        return self.dx ** self.d

    def axis_coords(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.n)

    def coords(self):
        x = self.axis_coords()
        if self.d == 1:
            return (x,)
        return np.meshgrid(x, x, indexing="ij")

    def radius_sq(self) -> np.ndarray:
        x = self.axis_coords()
        if self.d == 1:
            return x * x
        return x[:, None] ** 2 + x[None, :] ** 2

    def wavenumbers(self, zero_nyquist: bool = False) -> np.ndarray:
        """Per-axis discrete wavenumbers pi*j/half_width in fft order.

        The Nyquist mode has no signed counterpart, so the first-derivative
        multiplier zeroes it; the propagator keeps it.
        """
        xi = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        if zero_nyquist:
            xi = xi.copy()
            xi[self.n // 2] = 0.0
        return xi

    def k_squared(self, zero_nyquist: bool = False) -> np.ndarray:
        xi = self.wavenumbers(zero_nyquist)
        if self.d == 1:
            return xi * xi
        return xi[:, None] ** 2 + xi[None, :] ** 2

    def shell_mask(self) -> np.ndarray:
        edge = BOUNDARY_SHELL * self.half_width
        ax = np.abs(self.axis_coords())
        if self.d == 1:
            return ax >= edge
        return (ax[:, None] >= edge) | (ax[None, :] >= edge)


@dataclass
class Field:
    """Complex samples over a grid, flat row-major, plus the time they belong to.

    Treated as immutable: every operation allocates a fresh field.
    """

    grid: GridSpec
    values: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.complex128).ravel()
        if v.size != self.grid.npoints:
            raise ValueError(f"expected {self.grid.npoints} samples, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field samples must be finite")
        self.values = v

    def shaped(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)


def gaussian_data(grid: GridSpec, amplitude: float, width: float,
                  momentum=None) -> Field:
    """Packet a * exp(-|x|^2 / (2 width^2)) * exp(i k.x) sampled on the grid.

    Rejects widths with 6*width > half_width: such data already touches the
    boundary shell and the periodic box stops being a faithful R^d stand-in.
    """
    if not width > 0:
        raise ValueError("width must be positive")
    if 6.0 * width > grid.half_width:
        raise ValueError("6*width must not exceed half_width")
    if momentum is None:
        momentum = (0.0,) * grid.d
    momentum = tuple(float(k) for k in momentum)
    if len(momentum) != grid.d:
        raise ValueError(f"momentum needs {grid.d} components, got {len(momentum)}")
    envelope = amplitude * np.exp(-grid.radius_sq() / (2.0 * width * width))
    phase = sum(k * x for k, x in zip(momentum, grid.coords()))
    return Field(grid, envelope * np.exp(1j * phase), 0.0)


def mass(f: Field) -> float:
    """Squared L2 norm, the quantity the dissipation drains."""
    v = f.values
    return float(np.sum(v.real * v.real + v.imag * v.imag) * f.grid.cell)


def lp_norm(f: Field, r) -> float:
    """Rectangle-rule L^r norm for finite r >= 1."""
    r = float(r)
    if not r >= 1:
        raise ValueError("r must be at least 1")
    a = np.abs(f.values)
    return float((np.sum(a ** r) * f.grid.cell) ** (1.0 / r))


def grad_norm(f: Field) -> float:
    """Spectral ||grad u||_2 through the transform-space Parseval sum."""
    hat = np.fft.fftn(f.shaped())
    k2 = f.grid.k_squared(zero_nyquist=True)
    total = np.sum(k2 * (hat.real * hat.real + hat.imag * hat.imag))
    return float(math.sqrt(total * f.grid.cell / f.grid.npoints))


def weighted_norm(f: Field, m: int = 1) -> float:
    """|| |x|^m u ||_2 with the grid coordinate as the weight."""
    if not isinstance(m, int) or m < 1:
        raise ValueError("m must be a positive integer")
    w = f.grid.radius_sq() ** m
    a = f.shaped()
    a2 = a.real * a.real + a.imag * a.imag
    return float(math.sqrt(np.sum(w * a2) * f.grid.cell))


def h1_norm(f: Field) -> float:
    return math.sqrt(mass(f) + grad_norm(f) ** 2)


def l2_distance(f: Field, g: Field) -> float:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    d = f.values - g.values
    return float(math.sqrt(np.sum(d.real * d.real + d.imag * d.imag) * f.grid.cell))


def energy(f: Field, params: PhysParams) -> float:
    """E(u) = 1/2 ||grad u||^2 + Re(lambda)/(p+1) ||u||_{p+1}^{p+1}."""
    p = float(params.p)
    return 0.5 * grad_norm(f) ** 2 + params.lambda_re / (p + 1.0) * lp_norm(f, p + 1.0) ** (p + 1.0)


def augmented_energy(f: Field, params: PhysParams, gamma: float) -> float:
    """Energy plus gamma * mass; the weight that restores monotonicity when
    the attraction is too strong for E alone."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return energy(f, params) + gamma * mass(f)


def boundary_mass_fraction(f: Field) -> float:
    """Share of the mass sitting in the outer 10 percent of the box."""
    a = f.shaped()
    a2 = a.real * a.real + a.imag * a.imag
    total = float(np.sum(a2))
    if total == 0.0:
        return 0.0
    return float(np.sum(a2[f.grid.shell_mask()]) / total)


@dataclass
class EnergyRecord:
    """One sampled row of the run ledger.  mass == l2**2 by construction."""

    mass: float
    l2: float
    grad: float
    lp1: float
    lq: float
    weighted: float
    energy: float
    eaug: dict[float, float]
    boundary_mass_fraction: float


def record(f: Field, params: PhysParams, gammas=(0.0,)) -> EnergyRecord:
    """All tracked diagnostics of a field in one bundle."""
    m = mass(f)
    gr = grad_norm(f)
    p = float(params.p)
    lp1 = lp_norm(f, p + 1.0)
    lq = lp_norm(f, float(holder_exponents(params).q))
    en = 0.5 * gr * gr + params.lambda_re / (p + 1.0) * lp1 ** (p + 1.0)
    eaug = {float(g): en + float(g) * m for g in gammas}
    return EnergyRecord(m, math.sqrt(m), gr, lp1, lq, weighted_norm(f, 1),
                        en, eaug, boundary_mass_fraction(f))


def save_field(f: Field, path) -> None:
    """Binary snapshot: little-endian header (d, n, half_width, time_tag as
    64-bit values) followed by interleaved re/im float64, row-major."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(f.grid.d, f.grid.n, f.grid.half_width, f.time_tag))
        fh.write(np.ascontiguousarray(f.values, dtype="<c16").tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        d, n, half_width, t = _HEADER.unpack(head)
        grid = GridSpec(int(d), int(n), float(half_width))
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != grid.npoints:
        raise ValueError(f"{path}: expected {grid.npoints} samples, found {data.size}")
    return Field(grid, data.astype(np.complex128), float(t))
