"""Field containers, horizontal Fourier transforms, cutoffs and extensions.

Spectral convention: the forward transform returns mode coefficients ``c_k``
such that ``f(x) = sum_k c_k exp(i k . x)``, i.e. ``fft2(f) / n**2``.  With
this normalization ``cos(x1)`` on a ``2*pi`` box has coefficients ``1/2`` on
the modes ``(+-1, 0)`` and real fields have conjugate-symmetric spectra.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError
from .grids import HorizontalGrid, VerticalGrid

PHYSICAL = "physical"
SPECTRAL = "horizontal-spectral"


@dataclass
class SurfaceField:
    """Scalar or 3-vector field on the horizontal plane."""

    hgrid: HorizontalGrid
    values: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self):
        n = self.hgrid.modes_per_dim
        v = np.asarray(self.values, dtype=complex)
        if v.shape not in [(n, n), (n, n, 3)]:
            raise InvalidInputError(f"surface values shape {v.shape} does not match grid")
        self.values = v

    @property
    def rank(self) -> str:
        return "scalar" if self.values.ndim == 2 else "vector3"

    def copy(self) -> "SurfaceField":
        return replace(self, values=self.values.copy())


@dataclass
class HalfSpaceField:
    """Scalar or 3-vector field on the truncated lower half-space.

    Values are indexed ``(mode_or_x1, mode_or_x2, x3_node[, component])``.
    """

    hgrid: HorizontalGrid
    vgrid: VerticalGrid
    values: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self):
        n = self.hgrid.modes_per_dim
        nz = self.vgrid.node_count
        v = np.asarray(self.values, dtype=complex)
        if v.shape not in [(n, n, nz), (n, n, nz, 3)]:
            raise InvalidInputError(f"half-space values shape {v.shape} does not match grids")
        self.values = v

    @property
    def rank(self) -> str:
        return "scalar" if self.values.ndim == 3 else "vector3"

    def copy(self) -> "HalfSpaceField":
        return replace(self, values=self.values.copy())


Field = SurfaceField | HalfSpaceField


def zero_surface(hgrid, rank="scalar", representation=PHYSICAL) -> SurfaceField:
    n = hgrid.modes_per_dim
    shape = (n, n) if rank == "scalar" else (n, n, 3)
    return SurfaceField(hgrid, np.zeros(shape, dtype=complex), representation)


def zero_half_space(hgrid, vgrid, rank="scalar", representation=PHYSICAL) -> HalfSpaceField:
    n = hgrid.modes_per_dim
    nz = vgrid.node_count
    shape = (n, n, nz) if rank == "scalar" else (n, n, nz, 3)
    return HalfSpaceField(hgrid, vgrid, np.zeros(shape, dtype=complex), representation)


def forward_transform(f: Field) -> Field:
    """Horizontal Fourier transform (physical -> spectral)."""
    if f.representation != PHYSICAL:
        raise InvalidInputError("forward_transform expects a physical-representation field")
    n = f.hgrid.modes_per_dim
    vals = np.fft.fft2(f.values, axes=(0, 1)) / n**2
    return replace(f, values=vals, representation=SPECTRAL)


def inverse_transform(f: Field) -> Field:
    """Inverse horizontal Fourier transform (spectral -> physical)."""
    if f.representation != SPECTRAL:
        raise InvalidInputError("inverse_transform expects a spectral-representation field")
    n = f.hgrid.modes_per_dim
    vals = np.fft.ifft2(f.values * n**2, axes=(0, 1))
    return replace(f, values=vals, representation=PHYSICAL)


def to_spectral(f: Field) -> Field:
    return f if f.representation == SPECTRAL else forward_transform(f)


def to_physical(f: Field) -> Field:
    return f if f.representation == PHYSICAL else inverse_transform(f)


def bump_profile(r):
    """C-infinity cutoff profile: 1 for r <= 1, 0 for r >= 2, monotone between."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    out[r <= 1.0] = 1.0
    mid = (r > 1.0) & (r < 2.0)
    if np.any(mid):
        s = r[mid]

        def g(x):
            y = np.zeros_like(x)
            pos = x > 0
            y[pos] = np.exp(-1.0 / x[pos])
            return y

        a = g(2.0 - s)
        out[mid] = a / (a + g(s - 1.0))
    return out


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth partition-of-unity frequency cutoff at threshold ``delta``.

    ``kind='low'`` keeps wavenumbers below the threshold (profile value
    ``bump(|k|/delta)``); ``kind='high'`` is its complement, so the two kinds
    sum to the identity at every mode.
    """

    delta: float
    kind: str = "low"

    def __post_init__(self):
        if self.delta <= 0:
            raise InvalidInputError("cutoff delta must be positive")
        if self.kind not in ("low", "high"):
            raise InvalidInputError("cutoff kind must be 'low' or 'high'")

    def profile(self, kmag):
        low = bump_profile(np.asarray(kmag) / self.delta)
        return low if self.kind == "low" else 1.0 - low


def apply_cutoff(f: Field, spec: CutoffSpec) -> Field:
    """Multiply a spectral field by the cutoff profile."""
    if f.representation != SPECTRAL:
        raise InvalidInputError("apply_cutoff expects a spectral-representation field")
    mask = spec.profile(f.hgrid.wavenumber_magnitude())
    shape = mask.shape + (1,) * (f.values.ndim - 2)
    return replace(f, values=f.values * mask.reshape(shape))


def extend_odd_even(f: HalfSpaceField):
    """Extend a vector field to [-depth, depth]: horizontal components oddly,
    the vertical component evenly.

    Returns ``(values, doubled_grid)`` where ``values`` has shape
    ``(n, n, 2*nz-1, 3)``; the shared node at 0 keeps the original value.
    The discrete divergence of the extension is the odd extension of the
    divergence at interior nodes.
    """
    if f.representation != PHYSICAL:
        raise InvalidInputError("extend_odd_even expects a physical-representation field")
    if f.rank != "vector3":
        raise InvalidInputError("extend_odd_even expects a 3-vector field")
    dgrid = f.vgrid.doubled()
    n = f.hgrid.modes_per_dim
    vals = np.zeros((n, n, dgrid.node_count, 3), dtype=complex)
    nz = f.vgrid.node_count
    vals[:, :, :nz, :] = f.values
    mirror = f.values[:, :, :-1, :][:, :, ::-1, :]
    vals[:, :, nz:, 0] = -mirror[..., 0]
    vals[:, :, nz:, 1] = -mirror[..., 1]
    vals[:, :, nz:, 2] = mirror[..., 2]
    return vals, dgrid


def horizontal_derivative(f: Field, axis: int) -> Field:
    """Spectral derivative along horizontal axis 0 or 1."""
    spec = to_spectral(f)
    k = spec.hgrid.wavenumbers()[axis]
    shape = k.shape + (1,) * (spec.values.ndim - 2)
    out = replace(spec, values=spec.values * (1j * k.reshape(shape)))
    return out if f.representation == SPECTRAL else to_physical(out)


def vertical_derivative(f: HalfSpaceField, order: int = 1) -> HalfSpaceField:
    """Collocation derivative in the vertical coordinate."""
    D = f.vgrid.diff if order == 1 else f.vgrid.diff2
    vals = np.einsum("ij,xyj...->xyi...", D, f.values)
    return replace(f, values=vals)


def conjugate_symmetry_defect(f: Field) -> float:
    """Max deviation of a spectrum from the conjugate symmetry of real fields."""
    spec = to_spectral(f)
    v = spec.values
    flipped = np.conj(np.roll(v[::-1, ::-1, ...], shift=(1, 1), axis=(0, 1)))
    return float(np.max(np.abs(v - flipped)))


def lp_norm(f: HalfSpaceField, p: float) -> float:
    """Grid L_p norm over the half-space; vector fields use the component-sum
    convention for the pointwise magnitude."""
    g = to_physical(f)
    mag = np.abs(g.values)
    if g.rank == "vector3":
        mag = mag.sum(axis=-1)
    w = g.vgrid.weights
    if p == np.inf:
        return float(mag.max())
    integral = np.sum(mag**p * w) * g.hgrid.cell_area
    return float(integral ** (1.0 / p))


def surface_lp_norm(f: SurfaceField, p: float) -> float:
    g = to_physical(f)
    mag = np.abs(g.values)
    if g.rank == "vector3":
        mag = mag.sum(axis=-1)
    if p == np.inf:
        return float(mag.max())
    return float((np.sum(mag**p) * g.hgrid.cell_area) ** (1.0 / p))


def save_snapshot(f: Field, prefix: str) -> None:
    """Write a snapshot as a JSON header plus row-major complex128 binary.

    Layout: ``<prefix>.json`` holds grid parameters, rank, representation and
    the value shape; ``<prefix>.bin`` holds ``values.tobytes(order='C')``.
    """
    header = {
        "kind": type(f).__name__,
        "box_length": f.hgrid.box_length,
        "modes_per_dim": f.hgrid.modes_per_dim,
        "representation": f.representation,
        "rank": f.rank,
        "shape": list(f.values.shape),
        "dtype": "complex128",
    }
    if isinstance(f, HalfSpaceField):
        header["depth"] = f.vgrid.depth
        header["node_count"] = f.vgrid.node_count
        header["scheme"] = f.vgrid.scheme
    with open(prefix + ".json", "w") as fh:
        json.dump(header, fh, indent=1, sort_keys=True)
    np.ascontiguousarray(f.values.astype(np.complex128)).tofile(prefix + ".bin")


def load_snapshot(prefix: str) -> Field:
    with open(prefix + ".json") as fh:
        header = json.load(fh)
    values = np.fromfile(prefix + ".bin", dtype=np.complex128).reshape(header["shape"])
    hgrid = HorizontalGrid(header["box_length"], header["modes_per_dim"])
    if header["kind"] == "SurfaceField":
        return SurfaceField(hgrid, values, header["representation"])
    vgrid = VerticalGrid(header["depth"], header["node_count"], header["scheme"])
    return HalfSpaceField(hgrid, vgrid, values, header["representation"])
