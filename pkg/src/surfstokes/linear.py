"""Field-level linear solvers: semigroup evolution by contour quadrature,
forced evolution by convolution quadrature, the divergence corrector, and
pressure reconstruction / residual bookkeeping.

Evolution of initial data uses the sectorial inversion contour per mode,
with the contour pulled toward the origin for large times and its angle
widened automatically so every surface-mode eigenvalue stays on the left
(eigenvalues come from the explicit dispersion polynomial).  Forced
problems use BDF2 convolution quadrature: the returned series solves the
BDF2 time discretization of the evolution problem exactly, with the
per-mode resolvent evaluated at the generating-function frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import PhysicalParams
from .errors import AccuracyError, InvalidInputError
from .fields import (
    PHYSICAL,
    SPECTRAL,
    HalfSpaceField,
    SurfaceField,
    to_physical,
    to_spectral,
)
from .grids import HorizontalGrid, VerticalGrid
from .modesolve import (
    boundary_forced_batch,
    dispersion_polynomial_roots,
    solve_modes,
    solve_zero_mode,
    surface_response,
)
from .symbols import PanelContour, SectorSpec, eval_ab

DEFAULT_SECTOR = SectorSpec(np.pi / 4, 1.0)


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------

@dataclass
class LinearSnapshot:
    """Solution fields at a single time."""

    t: float
    u: HalfSpaceField
    h: SurfaceField
    p: HalfSpaceField | None = None
    dt_u: HalfSpaceField | None = None
    dt_h: SurfaceField | None = None
    meta: dict = field(default_factory=dict)


@dataclass
class LinearSolution:
    """Spectral solution series on a uniform time grid."""

    hgrid: HorizontalGrid
    vgrid: VerticalGrid
    times: np.ndarray
    u_hat: np.ndarray            # (nt, n, n, nz, 3)
    h_hat: np.ndarray            # (nt, n, n)
    p_hat: np.ndarray | None = None
    dt_u_hat: np.ndarray | None = None
    dt_h_hat: np.ndarray | None = None
    provenance: str = ""
    meta: dict = field(default_factory=dict)

    def velocity(self, i) -> HalfSpaceField:
        return to_physical(HalfSpaceField(self.hgrid, self.vgrid, self.u_hat[i], SPECTRAL))

    def pressure(self, i) -> HalfSpaceField:
        return to_physical(HalfSpaceField(self.hgrid, self.vgrid, self.p_hat[i], SPECTRAL))

    def height(self, i) -> SurfaceField:
        return to_physical(SurfaceField(self.hgrid, self.h_hat[i], SPECTRAL))


def bdf2_derivative(series, dt):
    """BDF2 time differences along axis 0 (BDF1 for the first step)."""
    out = np.zeros_like(series)
    out[1] = (series[1] - series[0]) / dt
    out[2:] = (1.5 * series[2:] - 2.0 * series[1:-1] + 0.5 * series[:-2]) / dt
    return out


# ---------------------------------------------------------------------------
# mode bookkeeping
# ---------------------------------------------------------------------------

def _mode_lists(hgrid):
    kx, ky = hgrid.wavenumbers()
    return kx.ravel(), ky.ravel()


def _active_modes(*spectra, threshold=1e-13):
    """Flat indices of modes whose data exceed threshold * max, zero mode
    reported separately."""
    n = spectra[0].shape[0]
    mag = np.zeros((n, n))
    for s in spectra:
        if s is None:
            continue
        m = np.abs(s)
        while m.ndim > 2:
            m = m.max(axis=-1)
        mag = np.maximum(mag, m)
    top = mag.max()
    mask = mag > threshold * top if top > 0 else np.zeros_like(mag, dtype=bool)
    flat = np.flatnonzero(mask.ravel())
    zero = 0 in flat
    return flat[flat != 0], zero


def distinct_wavenumbers(hgrid):
    """Unique nonzero |xi'| values and the inverse map on the mode lattice."""
    n = hgrid.modes_per_dim
    idx = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    i2, j2 = np.meshgrid(idx, idx, indexing="ij")
    key = i2**2 + j2**2
    uniq, inverse = np.unique(key.ravel(), return_inverse=True)
    dk = 2.0 * np.pi / hgrid.box_length
    return dk * np.sqrt(uniq.astype(float)), inverse.reshape(n, n), uniq


def surface_mode_poles(a_values, params):
    """All dispersion eigenvalues for the given wavenumber magnitudes."""
    poles = []
    for a in np.asarray(a_values, dtype=float):
        if a <= 0:
            continue
        poles.extend(dispersion_polynomial_roots(a, params))
    return np.array(poles, dtype=complex) if poles else np.zeros(0, dtype=complex)


def safe_contour(sector, t, a_values, params, gl_order=16, decades=36.0):
    """Panel contour for time t that keeps every surface-mode eigenvalue
    of the listed wavenumbers strictly to its left.

    The vertex shrinks like 1/t; the ray angle is steepened (toward the
    vertical) when weakly damped oscillatory eigenvalues would otherwise
    fall on the wrong side of the default rays.
    """
    poles = surface_mode_poles(a_values, params)
    if np.any(poles.real > 0):
        raise AccuracyError("unstable surface mode found; contour undefined")
    cot_cfg = 1.0 / np.tan(sector.epsilon)
    vertex = max(4.0 / t, 0.05)
    cot_use = cot_cfg
    osc = poles[np.abs(poles.imag) > 1e-12]
    if osc.size:
        need = np.min((vertex + 0.9 * np.abs(osc.real)) / (1.1 * np.abs(osc.imag)))
        if need < cot_use:
            cot_use = need
        if cot_use < 0.05:
            # raise the vertex instead of flattening the contour further
            vertex = float(np.max(1.1 * 0.05 * np.abs(osc.imag) - 0.9 * np.abs(osc.real)))
            vertex = min(max(vertex, 0.05), 45.0 / t)
            cot_use = max(
                0.05,
                float(np.min((vertex + 0.9 * np.abs(osc.real)) / (1.1 * np.abs(osc.imag)))),
            )
    eps_use = np.arctan2(1.0, cot_use)
    eps_use = min(max(eps_use, 1e-3), np.pi / 2 - 1e-3)
    gamma_eff = 0.5 * vertex * np.sin(eps_use)
    return PanelContour(SectorSpec(eps_use, gamma_eff), t, gl_order, decades)


# ---------------------------------------------------------------------------
# semigroup evolution (initial data)
# ---------------------------------------------------------------------------

def evolve_semigroup(u0: HalfSpaceField, h0: SurfaceField, t, params: PhysicalParams,
                     contour=None, sector=DEFAULT_SECTOR, active_threshold=1e-13,
                     check=False, check_tol=1e-6) -> LinearSnapshot:
    """Evolve initial data by inverting the resolvent over the contour.

    With ``check=True`` the quadrature is repeated with a longer, finer
    contour and an AccuracyError is raised when the two disagree.
    """
    if t <= 0:
        raise InvalidInputError("time must be positive")
    snap = _evolve_snapshot(u0, h0, t, params, contour, sector, active_threshold)
    if check:
        fine = _evolve_snapshot(u0, h0, t, params, None, sector, active_threshold,
                                gl_order=24, decades=45.0)
        num = np.abs(fine.u.values - snap.u.values).max()
        den = max(np.abs(snap.u.values).max(), 1e-300)
        if num / den > check_tol:
            raise AccuracyError(f"contour quadrature not converged: {num / den:.2e}")
    return snap


def _evolve_snapshot(u0, h0, t, params, contour, sector, active_threshold,
                     gl_order=16, decades=36.0):
    hgrid, vgrid = u0.hgrid, u0.vgrid
    n = hgrid.modes_per_dim
    nz = vgrid.node_count
    u0s = to_spectral(u0).values
    h0s = to_spectral(h0).values
    flat, zero_active = _active_modes(u0s, h0s, threshold=active_threshold)
    kx, ky = _mode_lists(hgrid)
    xi1, xi2 = kx[flat], ky[flat]
    if contour is None:
        a_distinct = np.unique(np.hypot(xi1, xi2))
        contour = safe_contour(sector, t, a_distinct, params, gl_order, decades)
    Fdat = u0s.reshape(n * n, nz, 3)[flat].transpose(0, 2, 1)[..., None]
    Kdat = h0s.reshape(n * n)[flat][:, None]
    acc_u = np.zeros((flat.size, 3, nz), dtype=complex)
    acc_p = np.zeros((flat.size, nz), dtype=complex)
    acc_h = np.zeros(flat.size, dtype=complex)
    acc_du = np.zeros_like(acc_u)
    acc_dh = np.zeros_like(acc_h)
    z_u = np.zeros((3, nz), dtype=complex)
    z_p = np.zeros(nz, dtype=complex)
    z_h = 0.0j
    z_du = np.zeros_like(z_u)
    z_dh = 0.0j
    for lam, wq in zip(contour.nodes, contour.weights):
        phase = wq * np.exp(lam * t) / (2j * np.pi)
        if flat.size:
            out = solve_modes(vgrid, params, xi1, xi2, lam, Fdat, Kdat)
            acc_u += phase * out["u"][..., 0]
            acc_p += phase * out["p"][..., 0]
            acc_h += phase * out["h"][:, 0]
            acc_du += phase * lam * out["u"][..., 0]
            acc_dh += phase * lam * out["h"][:, 0]
        if zero_active:
            out0 = solve_zero_mode(vgrid, params, lam,
                                   u0s[0, 0].T[:, :, None], np.array([h0s[0, 0]]))
            z_u += phase * out0["u"][..., 0]
            z_p += phase * out0["p"][:, 0]
            z_h += phase * out0["h"][0]
            z_du += phase * lam * out0["u"][..., 0]
            z_dh += phase * lam * out0["h"][0]
    u_hat = np.zeros((n * n, nz, 3), dtype=complex)
    p_hat = np.zeros((n * n, nz), dtype=complex)
    h_hat = np.zeros(n * n, dtype=complex)
    du_hat = np.zeros_like(u_hat)
    dh_hat = np.zeros_like(h_hat)
    if flat.size:
        u_hat[flat] = acc_u.transpose(0, 2, 1)
        p_hat[flat] = acc_p
        h_hat[flat] = acc_h
        du_hat[flat] = acc_du.transpose(0, 2, 1)
        dh_hat[flat] = acc_dh
    if zero_active:
        u_hat[0] = z_u.T
        p_hat[0] = z_p
        h_hat[0] = z_h
        du_hat[0] = z_du.T
        dh_hat[0] = z_dh
    shape_u = (n, n, nz, 3)
    mk_u = lambda v: to_physical(HalfSpaceField(hgrid, vgrid, v.reshape(shape_u), SPECTRAL))
    mk_s = lambda v: to_physical(SurfaceField(hgrid, v.reshape(n, n), SPECTRAL))
    return LinearSnapshot(
        t=t,
        u=mk_u(u_hat),
        h=mk_s(h_hat),
        p=to_physical(HalfSpaceField(hgrid, vgrid, p_hat.reshape(n, n, nz), SPECTRAL)),
        dt_u=mk_u(du_hat),
        dt_h=mk_s(dh_hat),
        meta={"contour_nodes": contour.nodes.size, "vertex": contour.sector.vertex},
    )


def evolve_decomposed(u0, h0, t, delta, params, sector=DEFAULT_SECTOR,
                      active_threshold=1e-13):
    """Evolution split into the stress-free interior part plus the low- and
    high-frequency surface-coupled parts cut at ``delta``.

    Returns spectral value dicts for parts 'interior', 'low', 'high' whose
    sum reproduces the direct evolution.
    """
    from .fields import CutoffSpec, bump_profile

    hgrid, vgrid = u0.hgrid, u0.vgrid
    n = hgrid.modes_per_dim
    nz = vgrid.node_count
    u0s = to_spectral(u0).values
    h0s = to_spectral(h0).values
    flat, zero_active = _active_modes(u0s, h0s, threshold=active_threshold)
    kx, ky = _mode_lists(hgrid)
    xi1, xi2 = kx[flat], ky[flat]
    amag = np.hypot(xi1, xi2)
    contour = safe_contour(sector, t, np.unique(amag), params)
    low = bump_profile(amag / delta)
    Fdat = u0s.reshape(n * n, nz, 3)[flat].transpose(0, 2, 1)[..., None]
    Kdat = h0s.reshape(n * n)[flat][:, None]
    parts = {
        name: {"u": np.zeros((flat.size, 3, nz), dtype=complex),
               "h": np.zeros(flat.size, dtype=complex)}
        for name in ("interior", "low", "high")
    }
    for lam, wq in zip(contour.nodes, contour.weights):
        phase = wq * np.exp(lam * t) / (2j * np.pi)
        free = solve_modes(vgrid, params, xi1, xi2, lam, Fdat, None,
                           free_surface=False)
        trace = free["u"][:, 2, -1, 0]
        parts["interior"]["u"] += phase * free["u"][..., 0]
        coupled = solve_modes(vgrid, params, xi1, xi2, lam, None,
                              (Kdat[:, 0] + trace)[:, None])
        for name, mask in (("low", low), ("high", 1.0 - low)):
            parts[name]["u"] += phase * mask[:, None, None] * coupled["u"][..., 0]
            parts[name]["h"] += phase * mask * coupled["h"][:, 0]
    out = {}
    for name, acc in parts.items():
        u_hat = np.zeros((n * n, nz, 3), dtype=complex)
        h_hat = np.zeros(n * n, dtype=complex)
        if flat.size:
            u_hat[flat] = acc["u"].transpose(0, 2, 1)
            h_hat[flat] = acc["h"]
        out[name] = {"u_hat": u_hat.reshape(n, n, nz, 3), "h_hat": h_hat.reshape(n, n)}
    return out


# ---------------------------------------------------------------------------
# height-driven fast path (closed-form profiles per wavenumber group)
# ---------------------------------------------------------------------------

def surface_driven_snapshot(h0: SurfaceField | None, t, vgrid: VerticalGrid,
                            params: PhysicalParams, sector=DEFAULT_SECTOR,
                            gl_order=16, chunk=160, hgrid=None,
                            normal_stress=None):
    """Closed-form evolution of surface-driven initial data (u0 = 0, or the
    irrotational profile whose resolvent reduces to normal-stress data).

    ``h0`` feeds the kinematic column; ``normal_stress`` (a SurfaceField)
    feeds the normal-stress column of the free-surface response.  Returns
    spectral arrays {'u', 'du_dz', 'h', 'dt_h', 'p'} where the vertical
    derivative of the velocity is exact (derivative of the two-exponential
    profile).  Agrees with evolve_semigroup and is cheap enough for large
    grids and many times.
    """
    if h0 is None and normal_stress is None:
        raise InvalidInputError("need at least one data column")
    hgrid = hgrid or (h0.hgrid if h0 is not None else normal_stress.hgrid)
    n = hgrid.modes_per_dim
    nz = vgrid.node_count
    x3 = vgrid.nodes
    columns = []
    if h0 is not None:
        columns.append(("kin", to_spectral(h0).values))
    if normal_stress is not None:
        columns.append(("g3", to_spectral(normal_stress).values))
    a_all, inverse, _ = distinct_wavenumbers(hgrid)
    contour = safe_contour(sector, t, a_all[a_all > 0], params, gl_order)
    nodes, weights = contour.nodes, contour.weights
    phase = weights * np.exp(nodes * t) / (2j * np.pi)
    nA = a_all.size
    names = ("w", "dw", "alpha", "dalpha", "p")
    out = {
        "h": np.zeros((n, n), dtype=complex),
        "dt_h": np.zeros((n, n), dtype=complex),
        "u": np.zeros((n, n, nz, 3), dtype=complex),
        "du_dz": np.zeros((n, n, nz, 3), dtype=complex),
        "p": np.zeros((n, n, nz), dtype=complex),
    }
    kx, ky = hgrid.wavenumbers()
    amag = np.maximum(hgrid.wavenumber_magnitude(), 1e-300)
    pos = np.flatnonzero(a_all > 0)
    for kind, data in columns:
        tab = {nm: np.zeros((nA, nz), dtype=complex) for nm in names}
        tab["h"] = np.zeros(nA, dtype=complex)
        tab["dth"] = np.zeros(nA, dtype=complex)
        kin, g3 = (1.0, 0.0) if kind == "kin" else (0.0, 1.0)
        for lo in range(0, pos.size, chunk):
            sel = pos[lo:lo + chunk]
            a = a_all[sel][:, None]
            ca, cb, ch, b = surface_response(a, nodes[None, :], params, kin=kin, g3=g3)
            eA = np.exp(a * x3[None, :])
            eB = np.exp(b[:, :, None] * x3[None, None, :])
            tab["h"][sel] = np.einsum("k,mk->m", phase, ch)
            tab["dth"][sel] = np.einsum("k,mk->m", phase * nodes, ch)
            tab["p"][sel] = np.einsum("k,mk->m", phase, -nodes * ca / a)[:, None] * eA
            for name, fa, fb in (
                ("w", 1.0, 1.0),
                ("dw", a, b),
                ("alpha", 1j, 1j * b / a),
                ("dalpha", 1j * a, 1j * b**2 / a),
            ):
                ca_w = phase * ca * fa
                cb_w = phase * cb * fb
                tab[name][sel] = (
                    np.einsum("mk->m", ca_w)[:, None] * eA
                    + np.einsum("mkz,mk->mz", eB, cb_w)
                )
        out["h"] += data * tab["h"][inverse]
        out["dt_h"] += data * tab["dth"][inverse]
        out["p"] += data[:, :, None] * tab["p"][inverse]
        alpha = data[:, :, None] * tab["alpha"][inverse]
        dalpha = data[:, :, None] * tab["dalpha"][inverse]
        out["u"][..., 0] += (kx / amag)[:, :, None] * alpha
        out["u"][..., 1] += (ky / amag)[:, :, None] * alpha
        out["u"][..., 2] += data[:, :, None] * tab["w"][inverse]
        out["du_dz"][..., 0] += (kx / amag)[:, :, None] * dalpha
        out["du_dz"][..., 1] += (ky / amag)[:, :, None] * dalpha
        out["du_dz"][..., 2] += data[:, :, None] * tab["dw"][inverse]
        zero = amag <= 1e-300
        if kind == "kin":
            out["h"][zero] += data[zero]     # the mean height is conserved
    return out


# ---------------------------------------------------------------------------
# BDF2 convolution quadrature for forced problems
# ---------------------------------------------------------------------------

def _cq_frequencies(n_steps, dt):
    rho = 10.0 ** (-8.0 / n_steps)
    zeta = rho * np.exp(2j * np.pi * np.arange(n_steps) / n_steps)
    lam = (1.5 - 2.0 * zeta + 0.5 * zeta**2) / dt
    return zeta, lam


def _cq_charges(data, zeta_l):
    """Running geometric sums G_k = data_k + zeta^{-1} G_{k-1} along axis 0."""
    out = np.empty_like(data)
    out[0] = data[0]
    q = 1.0 / zeta_l
    for k in range(1, data.shape[0]):
        out[k] = data[k] + q * out[k - 1]
    return out


def duhamel_solve(f_series, k_series, times, hgrid, vgrid, params,
                  active_threshold=1e-13, richardson_tol=None,
                  _spectral_input=False) -> LinearSolution:
    """Forced free-surface evolution with zero initial data.

    ``f_series`` is the interior forcing sampled on the uniform grid
    ``times`` (physical or spectral HalfSpaceFields, or a complex array of
    shape (nt, n, n, nz, 3)); ``k_series`` the kinematic forcing.  The
    result is the exact solution of the BDF2 time discretization, computed
    per mode from resolvent evaluations at the generating-function
    frequencies (a Laplace-domain evaluation of the time convolution).

    With ``richardson_tol`` set, the solve is repeated on the coarsened
    (every second sample) grid and an AccuracyError is raised when the two
    disagree at the common times beyond the tolerance.
    """
    times = np.asarray(times, dtype=float)
    nt = times.size
    if nt < 3:
        raise InvalidInputError("need at least three time samples")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt):
        raise InvalidInputError("duhamel_solve requires a uniform time grid")
    if _spectral_input:
        F, K = f_series, k_series
    else:
        F = _series_spectral(f_series, hgrid, vgrid)
        K = _series_surface_spectral(k_series, hgrid)
    n = hgrid.modes_per_dim
    nz = vgrid.node_count
    mag_f = np.abs(F).max(axis=(0, 3, 4))
    mag_k = np.abs(K).max(axis=0)
    mag = np.maximum(mag_f, mag_k)
    top = mag.max()
    mask = mag > active_threshold * top if top > 0 else mag > 0
    flat = np.flatnonzero(mask.ravel())
    zero_active = 0 in flat
    flat = flat[flat != 0]
    kx, ky = _mode_lists(hgrid)
    xi1, xi2 = kx[flat], ky[flat]
    Fm = F.reshape(nt, n * n, nz, 3)[:, flat].transpose(1, 3, 2, 0)   # (m,3,nz,nt)
    Km = K.reshape(nt, n * n)[:, flat].T                               # (m,nt)
    F0 = F.reshape(nt, n * n, nz, 3)[:, 0].transpose(2, 1, 0)          # (3,nz,nt)
    K0 = K.reshape(nt, n * n)[:, 0]
    n_steps = nt - 1
    zeta, lams = _cq_frequencies(n_steps, dt)
    acc_u = np.zeros((flat.size, 3, nz, nt), dtype=complex)
    acc_p = np.zeros((flat.size, nz, nt), dtype=complex)
    acc_h = np.zeros((flat.size, nt), dtype=complex)
    z_u = np.zeros((3, nz, nt), dtype=complex)
    z_p = np.zeros((nz, nt), dtype=complex)
    z_h = np.zeros(nt, dtype=complex)
    for zl, lam in zip(zeta, lams):
        GF = _cq_charges(Fm.transpose(3, 0, 1, 2), zl).transpose(1, 2, 3, 0)
        GK = _cq_charges(Km.T, zl).T
        if flat.size:
            out = solve_modes(vgrid, params, xi1, xi2, lam, GF, GK)
            acc_u += out["u"]
            acc_p += out["p"]
            acc_h += out["h"]
        if zero_active:
            out0 = solve_zero_mode(vgrid, params, lam,
                                   _cq_charges(F0.transpose(2, 0, 1), zl).transpose(1, 2, 0),
                                   _cq_charges(K0, zl))
            z_u += out0["u"]
            z_p += out0["p"]
            z_h += out0["h"]
    scale = 1.0 / n_steps
    u_hat = np.zeros((nt, n * n, nz, 3), dtype=complex)
    p_hat = np.zeros((nt, n * n, nz), dtype=complex)
    h_hat = np.zeros((nt, n * n), dtype=complex)
    if flat.size:
        u_hat[:, flat] = (acc_u * scale).transpose(3, 0, 2, 1)
        p_hat[:, flat] = (acc_p * scale).transpose(2, 0, 1)
        h_hat[:, flat] = (acc_h * scale).T
    if zero_active:
        u_hat[:, 0] = (z_u * scale).transpose(2, 1, 0)
        p_hat[:, 0] = (z_p * scale).T
        h_hat[:, 0] = (z_h * scale)
    u_hat[0] = 0.0
    p_hat[0] = 0.0
    h_hat[0] = 0.0
    sol = LinearSolution(
        hgrid, vgrid, times,
        u_hat.reshape(nt, n, n, nz, 3),
        h_hat.reshape(nt, n, n),
        p_hat=p_hat.reshape(nt, n, n, nz),
        provenance="duhamel",
    )
    sol.dt_u_hat = bdf2_derivative(sol.u_hat, dt)
    sol.dt_h_hat = bdf2_derivative(sol.h_hat, dt)
    if richardson_tol is not None:
        coarse = duhamel_solve(F[::2], K[::2], times[::2], hgrid, vgrid, params,
                               active_threshold=active_threshold, _spectral_input=True)
        num = np.abs(coarse.u_hat[-1] - sol.u_hat[-1]).max()
        den = max(np.abs(sol.u_hat[-1]).max(), 1e-300)
        if num / den > richardson_tol:
            raise AccuracyError(f"time grid too coarse: Richardson defect {num/den:.2e}")
    return sol


def boundary_forced_series(H_series, times, hgrid, vgrid, params,
                           active_threshold=1e-13):
    """Evolution of the damped pure-stress problem driven by boundary
    stress data, via convolution quadrature on the explicit boundary-symbol
    kernel (symbols evaluated at the unit-shifted frequency).

    Returns (u_hat (nt,n,n,nz,3), p_hat (nt,n,n,nz)).
    """
    times = np.asarray(times, dtype=float)
    nt = times.size
    dt = times[1] - times[0]
    H = _series_surface_spectral(H_series, hgrid, vector=True)
    n = hgrid.modes_per_dim
    nz = vgrid.node_count
    mag = np.abs(H).max(axis=(0, 3))
    top = mag.max()
    mask = mag > active_threshold * top if top > 0 else mag > 0
    flat = np.flatnonzero(mask.ravel())
    zero_active = 0 in flat
    flat = flat[flat != 0]
    kx, ky = _mode_lists(hgrid)
    xi1, xi2 = kx[flat], ky[flat]
    Hm = H.reshape(nt, n * n, 3)[:, flat].transpose(1, 2, 0)    # (m,3,nt)
    H0 = H.reshape(nt, n * n, 3)[:, 0].T                         # (3,nt)
    n_steps = nt - 1
    zeta, lams = _cq_frequencies(n_steps, dt)
    acc = np.zeros((flat.size, 3, nz, nt), dtype=complex)
    acc0 = np.zeros((3, nz, nt), dtype=complex)
    x3 = vgrid.nodes
    mu = params.mu
    for zl, lam in zip(zeta, lams):
        lam_s = lam + 1.0
        if flat.size:
            GH = _cq_charges(Hm.transpose(2, 0, 1), zl).transpose(1, 2, 0)
            acc += boundary_forced_batch(xi1, xi2, lam_s, GH, x3, params)
        if zero_active:
            GH0 = _cq_charges(H0.T, zl).T
            b0 = np.sqrt(lam_s / mu)
            if b0.real < 0:
                b0 = -b0
            prof = np.exp(b0 * x3) / (mu * b0)
            acc0[0] += prof[:, None] * GH0[0][None, :]
            acc0[1] += prof[:, None] * GH0[1][None, :]
    scale = 1.0 / n_steps
    u_hat = np.zeros((nt, n * n, nz, 3), dtype=complex)
    if flat.size:
        u_hat[:, flat] = (acc * scale).transpose(3, 0, 2, 1)
    if zero_active:
        u_hat[:, 0] = (acc0 * scale).transpose(2, 1, 0)
    u_hat[0] = 0.0
    u_hat = u_hat.reshape(nt, n, n, nz, 3)
    # pressure: harmonic with surface value 2 mu w'(0) - H3
    amag = hgrid.wavenumber_magnitude()
    D = vgrid.diff
    dw0 = np.einsum("j,txyj->txy", D[-1, :], u_hat[..., 2])
    p_top = 2.0 * mu * dw0 - H[..., 2]
    p_hat = p_top[..., None] * np.exp(amag[None, :, :, None] * x3)
    return u_hat, p_hat


def _series_spectral(series, hgrid, vgrid):
    if not isinstance(series, np.ndarray):
        return np.stack([to_spectral(f).values for f in series])
    arr = series.astype(complex)
    if arr.ndim != 5:
        raise InvalidInputError("expected (nt, n, n, nz, 3) array")
    return np.fft.fft2(arr, axes=(1, 2)) / hgrid.modes_per_dim**2


def _series_surface_spectral(series, hgrid, vector=False):
    if isinstance(series, np.ndarray):
        arr = series.astype(complex)
        return np.fft.fft2(arr, axes=(1, 2)) / hgrid.modes_per_dim**2
    return np.stack([to_spectral(f).values for f in series])


# ---------------------------------------------------------------------------
# divergence corrector
# ---------------------------------------------------------------------------

def solve_divergence(g: HalfSpaceField, gvec: HalfSpaceField | None = None) -> HalfSpaceField:
    """Solve div d = g on the half-space through the odd reflection and the
    full-space Riesz-kernel formula.

    Requires a uniform ('finite-difference') vertical grid so the doubled
    domain supports a vertical Fourier transform.  The companion field
    ``gvec`` (with div gvec = g) is accepted for interface completeness.
    """
    if g.vgrid.scheme != "finite-difference":
        raise InvalidInputError("divergence corrector needs a uniform vertical grid")
    if g.rank != "scalar":
        raise InvalidInputError("divergence data must be scalar")
    gp = to_physical(g)
    n = g.hgrid.modes_per_dim
    nz = g.vgrid.node_count
    vals = gp.values
    # odd extension, dropping the duplicate periodic endpoint at +depth
    ext = np.concatenate([vals, -vals[:, :, -2:0:-1]], axis=2)
    nz2 = ext.shape[2]
    ghat = np.fft.fftn(ext, axes=(0, 1, 2))
    kx, ky = g.hgrid.wavenumbers()
    h = g.vgrid.depth / (nz - 1)
    kz = 2.0 * np.pi * np.fft.fftfreq(nz2, d=h)
    k2 = kx[:, :, None] ** 2 + ky[:, :, None] ** 2 + kz[None, None, :] ** 2
    k2[0, 0, 0] = 1.0
    d = np.empty((n, n, nz2, 3), dtype=complex)
    for j, kj in enumerate((kx[:, :, None], ky[:, :, None], kz[None, None, :])):
        comp = -1j * kj / k2 * ghat
        comp[0, 0, 0] = 0.0
        d[..., j] = np.fft.ifftn(comp, axes=(0, 1, 2))
    out = d[:, :, :nz, :]
    return HalfSpaceField(g.hgrid, g.vgrid, out, PHYSICAL)


# ---------------------------------------------------------------------------
# pressure reconstruction
# ---------------------------------------------------------------------------

def reconstruct_pressure_mode(u_profiles, h_hat, xi_prime, params, vgrid):
    """Weak-Dirichlet pressure of one mode from its velocity and height."""
    from .modesolve import _Bordered

    xi1, xi2 = xi_prime
    asq = xi1**2 + xi2**2
    D, D2 = vgrid.diff, vgrid.diff2
    u = np.asarray(u_profiles, dtype=complex)
    mu = params.mu
    delta = 1j * xi1 * u[0] + 1j * xi2 * u[1] + D @ u[2]
    rhs_int = (2.0 * mu - 1.0) * (D2 @ delta - asq * delta)
    Ct = params.c_g + params.c_sigma * asq
    top = 2.0 * mu * (D @ u[2])[-1] - delta[-1] + Ct * h_hat
    nz = vgrid.node_count
    rhs = np.zeros((1, nz, 1), dtype=complex)
    rhs[0, 1:-1, 0] = rhs_int[1:-1]
    rhs[0, -1, 0] = top
    return _Bordered(D2, np.array([asq], dtype=complex)).solve(rhs)[0, :, 0]


def reconstruct_pressure(u: HalfSpaceField, h: SurfaceField, params) -> HalfSpaceField:
    """Field-level pressure reconstruction, mode by mode (batched)."""
    from .modesolve import _Bordered

    us = to_spectral(u).values
    hs = to_spectral(h).values
    hgrid, vgrid = u.hgrid, u.vgrid
    n = hgrid.modes_per_dim
    nz = vgrid.node_count
    kx, ky = hgrid.wavenumbers()
    D, D2 = vgrid.diff, vgrid.diff2
    mu = params.mu
    delta = (
        1j * kx[:, :, None] * us[..., 0]
        + 1j * ky[:, :, None] * us[..., 1]
        + np.einsum("ij,xyj->xyi", D, us[..., 2])
    )
    asq = (kx**2 + ky**2).ravel()
    rhs_int = (2.0 * mu - 1.0) * (
        np.einsum("ij,xyj->xyi", D2, delta) - (kx**2 + ky**2)[:, :, None] * delta
    )
    Ct = params.c_g + params.c_sigma * (kx**2 + ky**2)
    top = 2.0 * mu * np.einsum("j,xyj->xy", D[-1, :], us[..., 2]) - delta[..., -1] + Ct * hs
    rhs = np.zeros((n * n, nz, 1), dtype=complex)
    rhs[:, 1:-1, 0] = rhs_int.reshape(n * n, nz)[:, 1:-1]
    rhs[:, -1, 0] = top.ravel()
    p = _Bordered(D2, asq.astype(complex)).solve(rhs)[:, :, 0]
    return to_physical(HalfSpaceField(hgrid, vgrid, p.reshape(n, n, nz), SPECTRAL))


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

def residual(sol: LinearSolution, params, f_hat=None, g_hat=None, stress_hat=None,
             k_hat=None, skip=2):
    """Discrete residual norms of each equation row of the forced system.

    Time derivatives use the solution's own stored series (for convolution
    quadrature these are the BDF2 differences, whose residual measures the
    solver's internal consistency).  The first ``skip`` samples are
    excluded from the reported maxima.
    """
    hgrid, vgrid = sol.hgrid, sol.vgrid
    n = hgrid.modes_per_dim
    nt = sol.times.size
    nz = vgrid.node_count
    kx, ky = hgrid.wavenumbers()
    D, D2 = vgrid.diff, vgrid.diff2
    mu = params.mu
    asq = (kx**2 + ky**2)[None, :, :, None]
    dt_u = sol.dt_u_hat if sol.dt_u_hat is not None else bdf2_derivative(sol.u_hat, sol.times[1] - sol.times[0])
    dt_h = sol.dt_h_hat if sol.dt_h_hat is not None else bdf2_derivative(sol.h_hat, sol.times[1] - sol.times[0])
    lap_u = np.einsum("ij,txyjc->txyic", D2, sol.u_hat) - asq[..., None] * sol.u_hat
    grad_p = np.stack(
        [
            1j * kx[None, :, :, None] * sol.p_hat,
            1j * ky[None, :, :, None] * sol.p_hat,
            np.einsum("ij,txyj->txyi", D, sol.p_hat),
        ],
        axis=-1,
    )
    mom = dt_u - mu * lap_u + grad_p
    if f_hat is not None:
        mom = mom - f_hat
    div = (
        1j * kx[None, :, :, None] * sol.u_hat[..., 0]
        + 1j * ky[None, :, :, None] * sol.u_hat[..., 1]
        + np.einsum("ij,txyj->txyi", D, sol.u_hat[..., 2])
    )
    if g_hat is not None:
        div = div - g_hat
    du_top = np.einsum("j,txyjc->txyc", D[-1, :], sol.u_hat)
    tang1 = mu * (1j * kx[None] * sol.u_hat[:, :, :, -1, 2] + du_top[..., 0])
    tang2 = mu * (1j * ky[None] * sol.u_hat[:, :, :, -1, 2] + du_top[..., 1])
    Ct = params.c_g + params.c_sigma * (kx**2 + ky**2)
    norm_row = 2 * mu * du_top[..., 2] - sol.p_hat[:, :, :, -1] + Ct[None] * sol.h_hat
    if stress_hat is not None:
        tang1 = tang1 - stress_hat[..., 0]
        tang2 = tang2 - stress_hat[..., 1]
        norm_row = norm_row - stress_hat[..., 2]
    kin = dt_h - sol.u_hat[:, :, :, -1, 2]
    if k_hat is not None:
        kin = kin - k_hat
    sl = slice(skip, None)

    def rel(num, *scales):
        s = max(*(np.abs(x[sl]).max() for x in scales), 1e-300)
        return float(np.abs(num[sl]).max() / s)

    return {
        "momentum": rel(mom, dt_u, mu * lap_u, grad_p,
                        f_hat if f_hat is not None else mom),
        "divergence": rel(div, np.einsum("ij,txyj->txyi", D, sol.u_hat[..., 2]) + 0 * div,
                          sol.u_hat[..., 2] + 1e-300),
        "tangential_stress": rel(np.stack([tang1, tang2]),
                                 np.stack([mu * du_top[..., 0], mu * du_top[..., 1]]),
                                 stress_hat if stress_hat is not None else tang1[None]),
        "normal_stress": rel(norm_row, sol.p_hat[:, :, :, -1], Ct[None] * sol.h_hat + 1e-300),
        "kinematic": rel(kin, dt_h, sol.u_hat[:, :, :, -1, 2] + 1e-300),
    }
