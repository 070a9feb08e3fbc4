"""Harmonic extension of the surface height, the flattening diffeomorphism
with its Jacobians and transformed derivative operators, and the outward
normal / doubled mean curvature of the graph surface.

The extension of a height ``h`` is realized mode-wise as
``exp(|xi'| y3) * h_hat(xi')``, which is discretely harmonic to spectral
accuracy and has exact boundary trace ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError, NumericalError
from .fields import (
    PHYSICAL,
    SPECTRAL,
    HalfSpaceField,
    SurfaceField,
    to_physical,
    to_spectral,
)
from .grids import VerticalGrid


def harmonic_extension(h: SurfaceField, vgrid: VerticalGrid) -> HalfSpaceField:
    """Extend a surface height into the half-space, mode-wise by decaying
    exponentials; the zero mode extends constantly."""
    spec = to_spectral(h)
    if spec.rank != "scalar":
        raise InvalidInputError("harmonic extension expects a scalar height")
    amag = spec.hgrid.wavenumber_magnitude()
    profile = np.exp(amag[:, :, None] * vgrid.nodes[None, None, :])
    vals = spec.values[:, :, None] * profile
    out = HalfSpaceField(spec.hgrid, vgrid, vals, SPECTRAL)
    return out if h.representation == SPECTRAL else to_physical(out)


def _eta_mode_coeffs(h: SurfaceField):
    return to_spectral(h).values


@dataclass
class HeightState:
    """Surface height with its harmonic extension and derivative cache.

    ``invertible`` records whether the flattening map is a diffeomorphism
    according to the configured slope bound ``c0 in (0, 1/2)``.
    """

    h: SurfaceField
    vgrid: VerticalGrid
    c0: float = 0.45
    dt_h: SurfaceField | None = None

    def __post_init__(self):
        if not 0.0 < self.c0 < 0.5:
            raise InvalidInputError("c0 must lie in (0, 1/2)")
        self.eta = harmonic_extension(self.h, self.vgrid)
        self.dt_eta = (
            harmonic_extension(self.dt_h, self.vgrid) if self.dt_h is not None else None
        )
        self._derivs: dict = {}
        g = self.grad_eta()
        self.grad_sup = max(float(np.max(np.abs(d.values.real))) for d in g)
        self.invertible = self.grad_sup < self.c0

    def eta_derivative(self, *indices) -> HalfSpaceField:
        """Derivative of the extension: spectral in y1, y2 and by the
        collocation matrix in y3.  Indices are from {1, 2, 3}."""
        key = tuple(sorted(indices))
        if key in self._derivs:
            return self._derivs[key]
        spec = to_spectral(self.eta)
        kx, ky = spec.hgrid.wavenumbers()
        vals = spec.values
        for ix in key:
            if ix == 1:
                vals = vals * (1j * kx)[:, :, None]
            elif ix == 2:
                vals = vals * (1j * ky)[:, :, None]
            elif ix == 3:
                vals = np.einsum("ij,xyj->xyi", self.vgrid.diff, vals)
            else:
                raise InvalidInputError("derivative index must be 1, 2 or 3")
        out = to_physical(HalfSpaceField(spec.hgrid, self.vgrid, vals, SPECTRAL))
        self._derivs[key] = out
        return out

    def grad_eta(self):
        return [self.eta_derivative(j) for j in (1, 2, 3)]

    def jacobian_factor(self) -> np.ndarray:
        """Pointwise determinant 1 + D3(eta) of the forward Jacobian."""
        return 1.0 + self.eta_derivative(3).values.real

    def require_invertible(self):
        if not self.invertible:
            raise DomainError(
                f"slope sup {self.grad_sup:.3g} exceeds c0={self.c0}; map not invertible"
            )

    def eta_at(self, points) -> np.ndarray:
        """Exact mode-sum evaluation of the extension at off-grid points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        coeffs = _eta_mode_coeffs(self.h)
        kx, ky = self.h.hgrid.wavenumbers()
        amag = self.h.hgrid.wavenumber_magnitude()
        phase = np.exp(
            1j * (np.multiply.outer(pts[:, 0], kx) + np.multiply.outer(pts[:, 1], ky))
            + np.multiply.outer(pts[:, 2], amag)
        )
        vals = np.einsum("pxy,xy->p", phase, coeffs)
        return vals.real

    def d3_eta_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        coeffs = _eta_mode_coeffs(self.h)
        kx, ky = self.h.hgrid.wavenumbers()
        amag = self.h.hgrid.wavenumber_magnitude()
        phase = np.exp(
            1j * (np.multiply.outer(pts[:, 0], kx) + np.multiply.outer(pts[:, 1], ky))
            + np.multiply.outer(pts[:, 2], amag)
        )
        vals = np.einsum("pxy,xy->p", phase, coeffs * amag)
        return vals.real


def hanzawa_forward(points, state: HeightState) -> np.ndarray:
    """Map flat coordinates y to moving-domain coordinates
    (y1, y2, y3 + eta(y))."""
    state.require_invertible()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = pts.copy()
    out[:, 2] += state.eta_at(pts)
    return out if np.asarray(points).ndim > 1 else out[0]


def hanzawa_invert(points, state: HeightState, tol=1e-12, max_iter=50) -> np.ndarray:
    """Invert the flattening map by safeguarded Newton on the monotone
    scalar equation for the vertical coordinate."""
    state.require_invertible()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = pts.copy()
    eta_sup = float(np.max(np.abs(to_physical(state.eta).values.real))) + 1.0
    for row in range(pts.shape[0]):
        x1, x2, x3 = pts[row]
        lo, hi = x3 - eta_sup, x3 + eta_sup
        y3 = x3
        converged = False
        for _ in range(max_iter):
            p = np.array([[x1, x2, y3]])
            f = y3 + state.eta_at(p)[0] - x3
            if abs(f) < tol * (1.0 + abs(x3)):
                converged = True
                break
            if f > 0:
                hi = min(hi, y3)
            else:
                lo = max(lo, y3)
            step = f / (1.0 + state.d3_eta_at(p)[0])
            y3 -= step
            if not lo <= y3 <= hi:
                y3 = 0.5 * (lo + hi)
        if not converged:
            raise NumericalError("inverse map Newton did not converge; slope bound violated?")
        out[row, 2] = y3
    return out if np.asarray(points).ndim > 1 else out[0]


def _field_derivative(f: HalfSpaceField, *indices) -> np.ndarray:
    """Plain derivative values D_i... f with spectral horizontals and the
    collocation vertical matrix."""
    spec = to_spectral(f)
    kx, ky = spec.hgrid.wavenumbers()
    vals = spec.values
    for ix in indices:
        if ix == 1:
            vals = vals * (1j * kx)[:, :, None]
        elif ix == 2:
            vals = vals * (1j * ky)[:, :, None]
        else:
            vals = np.einsum("ij,xyj->xyi", f.vgrid.diff, vals)
    n = spec.hgrid.modes_per_dim
    return np.fft.ifft2(vals * n**2, axes=(0, 1))


def transformed_derivatives(fbar: HalfSpaceField, state: HeightState):
    """First and second derivatives in moving-domain coordinates of a field
    given in flattened coordinates.

    Returns ``{'first': [f_1, f_2, f_3], 'second': {(j, k): f_jk}}`` as value
    arrays in physical representation.
    """
    if fbar.rank != "scalar":
        raise InvalidInputError("transformed_derivatives expects a scalar field")
    eta3 = state.eta_derivative(3).values.real
    denom = 1.0 + eta3
    if np.min(denom) <= 1e-12:
        raise DomainError("1 + D3(eta) vanishes; transformed derivatives undefined")
    detas = {j: state.eta_derivative(j).values.real for j in (1, 2, 3)}
    detas2 = {
        (j, k): state.eta_derivative(j, k).values.real
        for j in (1, 2, 3)
        for k in (1, 2, 3)
        if j <= k
    }

    def eta2(j, k):
        return detas2[(min(j, k), max(j, k))]

    d1 = {j: _field_derivative(fbar, j) for j in (1, 2, 3)}
    d2 = {}
    for j in (1, 2, 3):
        for k in (j, 1, 2, 3):
            if (min(j, k), max(j, k)) not in d2:
                d2[(min(j, k), max(j, k))] = _field_derivative(fbar, j, k)

    def D2(j, k):
        return d2[(min(j, k), max(j, k))]

    first = [d1[j] - (detas[j] / denom) * d1[3] for j in (1, 2, 3)]
    second = {}
    for j in (1, 2, 3):
        for k in (1, 2, 3):
            bracket = (
                eta2(j, k) * denom**2
                - detas[k] * eta2(j, 3) * denom
                - detas[j] * eta2(3, k) * denom
                + detas[j] * detas[k] * eta2(3, 3)
            ) / denom**3
            djk = (
                bracket * d1[3]
                + (detas[k] / denom) * D2(j, 3)
                + (detas[j] / denom) * D2(3, k)
                - (detas[j] * detas[k] / denom**2) * D2(3, 3)
            )
            second[(j, k)] = D2(j, k) - djk
    return {"first": first, "second": second}


@dataclass
class SurfaceGeometry:
    normal: SurfaceField
    kappa: SurfaceField


def _surface_derivs(h: SurfaceField):
    spec = to_spectral(h)
    kx, ky = spec.hgrid.wavenumbers()
    n = spec.hgrid.modes_per_dim

    def inv(vals):
        return np.fft.ifft2(vals * n**2, axes=(0, 1)).real

    hv = spec.values
    return {
        (1,): inv(hv * (1j * kx)),
        (2,): inv(hv * (1j * ky)),
        (1, 1): inv(hv * (1j * kx) ** 2),
        (1, 2): inv(hv * (1j * kx) * (1j * ky)),
        (2, 2): inv(hv * (1j * ky) ** 2),
    }


def curvature_remainder(h: SurfaceField) -> np.ndarray:
    """The cubic-order remainder subtracted from the flat Laplacian in the
    doubled mean curvature of a graph."""
    d = _surface_derivs(h)
    g2 = d[(1,)] ** 2 + d[(2,)] ** 2
    lap = d[(1, 1)] + d[(2, 2)]
    root = np.sqrt(1.0 + g2)
    term1 = g2 * lap / ((1.0 + root) * root)
    term2 = (
        d[(1,)] * d[(1,)] * d[(1, 1)]
        + 2.0 * d[(1,)] * d[(2,)] * d[(1, 2)]
        + d[(2,)] * d[(2,)] * d[(2, 2)]
    ) / (1.0 + g2) ** 1.5
    return term1 + term2


def surface_normal_curvature(h: SurfaceField) -> SurfaceGeometry:
    """Outward unit normal and doubled mean curvature of the graph of h."""
    hp = to_physical(h)
    d = _surface_derivs(h)
    g2 = d[(1,)] ** 2 + d[(2,)] ** 2
    root = np.sqrt(1.0 + g2)
    normal = np.stack([-d[(1,)] / root, -d[(2,)] / root, 1.0 / root], axis=-1)
    lap = d[(1, 1)] + d[(2, 2)]
    kappa = lap - curvature_remainder(h)
    return SurfaceGeometry(
        normal=SurfaceField(hp.hgrid, normal.astype(complex), PHYSICAL),
        kappa=SurfaceField(hp.hgrid, kappa.astype(complex), PHYSICAL),
    )


def divergence_form_curvature(h: SurfaceField) -> np.ndarray:
    """Independent curvature evaluation sum_j D_j(D_j h / sqrt(1+|grad h|^2))."""
    hp = to_physical(h)
    d = _surface_derivs(h)
    root = np.sqrt(1.0 + d[(1,)] ** 2 + d[(2,)] ** 2)
    out = np.zeros_like(d[(1,)])
    n = hp.hgrid.modes_per_dim
    kx, ky = hp.hgrid.wavenumbers()
    for j, k in ((1, kx), (2, ky)):
        flux = d[(j,)] / root
        spec = np.fft.fft2(flux, axes=(0, 1)) / n**2
        out += np.fft.ifft2(spec * (1j * k) * n**2, axes=(0, 1)).real
    return out
