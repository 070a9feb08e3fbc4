"""Per-mode vertical solvers for the resolvent and boundary-forced problems.

For a horizontal mode xi' with magnitude ``a`` and complex frequency ``lam``
the unknowns are reduced to a rotated frame: the longitudinal velocity
``alpha = (xi'/a) . u'``, the transverse ``beta``, the vertical ``w`` and the
pressure.  The divergence constraint fixes ``alpha = i w'/a`` and eliminating
the pressure leaves a fourth-order two-point problem

    w'''' - (a**2 + b**2) w'' + a**2 b**2 w = (a**2 F3 + i a F_par')/mu,

with ``b**2 = lam/mu + a**2``, solved as a cascade of two bordered Helmholtz
solves (conditioning ~N**4 instead of the N**8 of direct fourth-order
collocation) plus a small boundary-matching system.  The pressure is
recovered by integrating the vertical momentum row from the bed, so the
divergence row, the vertical momentum row and all boundary rows hold to
round-off; the longitudinal momentum row carries the discretization error.

For stress data on the boundary and no interior forcing the solution is a
closed two-exponential combination; those paths are used by the kernel-decay
and semigroup-decay scenarios and cross-validated against the cascade.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import PhysicalParams
from .errors import InvalidInputError, NearDegenerateError, NumericalError
from .grids import VerticalGrid
from .symbols import eval_ab, exp_pair_kernel, lopatinskii


@dataclass
class ModeProfile:
    """Vertical profiles of one horizontal mode of the solution triple."""

    xi_prime: tuple
    lam: complex
    u: np.ndarray          # (3, nz)
    p: np.ndarray          # (nz,)
    h: complex
    residuals: dict = field(default_factory=dict)

    def decay_defect(self) -> float:
        """Magnitude at the bed relative to the profile maximum."""
        mags = np.abs(self.u)
        top = mags.max()
        return float(mags[:, 0].max() / top) if top > 0 else 0.0


class _Bordered:
    """Stacked bordered Helmholtz operators (D2 - k^2) with Dirichlet rows."""

    def __init__(self, D2, ksq):
        nz = D2.shape[0]
        m = np.broadcast_to(ksq, np.shape(ksq)).size if np.ndim(ksq) else 1
        ks = np.atleast_1d(np.asarray(ksq, dtype=complex))
        mats = np.repeat(D2[None, :, :].astype(complex), ks.size, axis=0)
        idx = np.arange(nz)
        mats[:, idx, idx] -= ks[:, None]
        mats[:, 0, :] = 0.0
        mats[:, 0, 0] = 1.0
        mats[:, -1, :] = 0.0
        mats[:, -1, -1] = 1.0
        self.mats = mats
        self.nz = nz

    def solve(self, rhs):
        """rhs: (m, nz, k) with boundary rows holding boundary values."""
        try:
            return np.linalg.solve(self.mats, rhs)
        except np.linalg.LinAlgError as exc:
            conds = [np.linalg.cond(m) for m in self.mats[: min(4, len(self.mats))]]
            raise NumericalError(
                f"singular mode system (sample condition numbers {conds})"
            ) from exc


def _anchored_gradient(D, anchor_last=False):
    """First-derivative matrix with one row replaced by a point anchor."""
    Dt = D.astype(complex).copy()
    if anchor_last:
        Dt[-1, :] = 0.0
        Dt[-1, -1] = 1.0
    else:
        Dt[0, :] = 0.0
        Dt[0, 0] = 1.0
    return Dt


def solve_modes(vgrid: VerticalGrid, params: PhysicalParams, xi1, xi2, lam,
                F=None, K=None, G=None, free_surface=True):
    """Batched per-mode solve of the frequency-domain system.

    Parameters
    ----------
    xi1, xi2 : (m,) mode wave vectors (nonzero modes; see solve_zero_mode)
    lam : complex frequency, shared by the batch
    F : (m, 3, nz, T) interior forcing profiles or None
    K : (m, T) kinematic data or None
    G : (m, 3, T) boundary stress data or None
    free_surface : couple the height unknown through the stress and
        kinematic rows; otherwise solve the pure stress problem (h = 0)

    Returns dict with u (m, 3, nz, T), p (m, nz, T), h (m, T).
    """
    xi1 = np.atleast_1d(np.asarray(xi1, dtype=float))
    xi2 = np.atleast_1d(np.asarray(xi2, dtype=float))
    m = xi1.size
    nz = vgrid.node_count
    mu = params.mu
    a, b = eval_ab(xi1, xi2, lam, mu)
    if np.any(a == 0.0):
        raise InvalidInputError("solve_modes handles nonzero modes; use solve_zero_mode")
    T = 1
    for data, width in ((F, 3), (K, 0), (G, 3)):
        if data is not None:
            T = max(T, np.asarray(data).shape[-1])
    Fc = np.zeros((m, 3, nz, T), dtype=complex) if F is None else np.asarray(F, dtype=complex)
    Kc = np.zeros((m, T), dtype=complex) if K is None else np.asarray(K, dtype=complex)
    Gc = np.zeros((m, 3, T), dtype=complex) if G is None else np.asarray(G, dtype=complex)

    D = vgrid.diff
    D2 = vgrid.diff2
    # rotated data components
    F_par = (xi1[:, None, None] * Fc[:, 0] + xi2[:, None, None] * Fc[:, 1]) / a[:, None, None]
    F_perp = (-xi2[:, None, None] * Fc[:, 0] + xi1[:, None, None] * Fc[:, 1]) / a[:, None, None]
    F3 = Fc[:, 2]
    G_par = (xi1[:, None] * Gc[:, 0] + xi2[:, None] * Gc[:, 1]) / a[:, None]
    G_perp = (-xi2[:, None] * Gc[:, 0] + xi1[:, None] * Gc[:, 1]) / a[:, None]
    G3 = Gc[:, 2]

    MB = _Bordered(D2, b**2)
    MA = _Bordered(D2, a**2)

    # --- transverse problem: (D2 - b^2) beta = -F_perp/mu, mu beta'(0) = G_perp
    rhs_b = np.zeros((m, nz, 2 + 2 * T), dtype=complex)
    rhs_b[:, 1:-1, 0] = 0.0
    rhs_b[:, 0, 0] = 1.0                       # vb_bot: values (1, 0)
    rhs_b[:, -1, 1] = 1.0                      # vb_top: values (0, 1)
    rhs_b[:, 1:-1, 2:2 + T] = -F_perp[:, 1:-1, :] / mu
    # fourth-order right-hand side for the longitudinal cascade
    DFpar = np.einsum("ij,mjt->mit", D, F_par)
    R4 = (a**2)[:, None, None] / mu * F3 + 1j * a[:, None, None] / mu * DFpar
    rhs_b[:, 1:-1, 2 + T:] = R4[:, 1:-1, :]
    sol_b = MB.solve(rhs_b)
    vb_bot, vb_top = sol_b[:, :, 0], sol_b[:, :, 1]
    beta_p = sol_b[:, :, 2:2 + T]
    v_p = sol_b[:, :, 2 + T:]

    # transverse matching: beta = beta_p + c_beta * vb_top  (beta(-L)=0 kept)
    Dtop = D[-1, :].astype(complex)
    slope_top = vb_top @ Dtop                     # (m,)
    c_beta = (G_perp / mu - np.einsum("j,mjt->mt", Dtop, beta_p)) / slope_top[:, None]
    beta = beta_p + c_beta[:, None, :] * vb_top[:, :, None]

    # --- longitudinal cascade: w pieces through (D2 - a^2)
    rhs_a = np.zeros((m, nz, 3 + T), dtype=complex)
    rhs_a[:, -1, 0] = 1.0                       # wh_top: w values (0, 1)
    rhs_a[:, 1:-1, 1] = vb_bot[:, 1:-1]
    rhs_a[:, 1:-1, 2] = vb_top[:, 1:-1]
    rhs_a[:, 1:-1, 3:] = v_p[:, 1:-1, :]
    sol_a = MA.solve(rhs_a)
    wh_top = sol_a[:, :, 0]
    w_bot = sol_a[:, :, 1]
    w_top = sol_a[:, :, 2]
    w_p = sol_a[:, :, 3:]

    # --- pressure pieces: integrate vertical momentum from the bed
    Dt = _anchored_gradient(D)

    def s_of(wcols):
        lap = np.einsum("ij,mj...->mi...", D2, wcols)
        if wcols.ndim == 2:
            asq = (a**2)[:, None]
        else:
            asq = (a**2)[:, None, None]
        return -lam * wcols + mu * (lap - asq * wcols)

    scols = np.concatenate(
        [
            s_of(w_bot)[..., None],
            s_of(w_top)[..., None],
            s_of(wh_top)[..., None],
            s_of(w_p) + F3,
        ],
        axis=2,
    )
    rhs_p = np.zeros_like(scols)
    rhs_p[:, 1:, :] = scols[:, 1:, :]
    p_cols = np.linalg.solve(np.broadcast_to(Dt, (m, nz, nz)), rhs_p)
    p_bot_piece = p_cols[:, :, 0]
    p_top_piece = p_cols[:, :, 1]
    p_h_piece = p_cols[:, :, 2]
    p_data = p_cols[:, :, 3:]

    # --- boundary matching for (c_bot, c_top, d = w(0))
    D2top = D2[-1, :].astype(complex)
    Dbot = D[0, :].astype(complex)
    Ctension = params.c_g + params.c_sigma * a**2

    def rowvals(piece, rowvec):
        return piece @ rowvec

    pieces = [w_bot, w_top, wh_top]
    A3 = np.zeros((m, 3, 3), dtype=complex)
    B3 = np.zeros((m, 3, T), dtype=complex)
    # row 0: far Neumann  w'(-L) = 0
    for j, piece in enumerate(pieces):
        A3[:, 0, j] = rowvals(piece, Dbot)
    B3[:, 0, :] = -np.einsum("j,mjt->mt", Dbot, w_p)
    # row 1: tangential stress  i mu (w''(0) + a^2 w(0)) / a = G_par
    for j, piece in enumerate(pieces):
        A3[:, 1, j] = 1j * mu * (rowvals(piece, D2top) + a**2 * piece[:, -1]) / a
    B3[:, 1, :] = (
        G_par
        - 1j * mu * (np.einsum("j,mjt->mt", D2top, w_p) + (a**2)[:, None] * w_p[:, -1, :]) / a[:, None]
    )
    # row 2: normal stress  2 mu w'(0) - p(0) + Ctension * h = G3,
    #        with h = (w(0) + K)/lam on the free surface
    for j, (piece, ppiece) in enumerate(
        zip(pieces, [p_bot_piece, p_top_piece, p_h_piece])
    ):
        A3[:, 2, j] = 2.0 * mu * rowvals(piece, Dtop) - ppiece[:, -1]
    if free_surface:
        A3[:, 2, 2] += Ctension / lam
        B3[:, 2, :] = (
            G3
            - 2.0 * mu * np.einsum("j,mjt->mt", Dtop, w_p)
            + p_data[:, -1, :]
            - (Ctension / lam)[:, None] * Kc
        )
    else:
        B3[:, 2, :] = G3 - 2.0 * mu * np.einsum("j,mjt->mt", Dtop, w_p) + p_data[:, -1, :]

    try:
        coeff = np.linalg.solve(A3, B3)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("boundary matching system singular") from exc

    w = w_p + np.einsum("mjk,mkt->mjt", np.stack(pieces, axis=2), coeff)
    p = p_data + np.einsum("mjk,mkt->mjt",
                           np.stack([p_bot_piece, p_top_piece, p_h_piece], axis=2),
                           coeff)
    h = (coeff[:, 2, :] + Kc) / lam if free_surface else np.zeros((m, T), dtype=complex)

    alpha = 1j * np.einsum("ij,mjt->mit", D, w) / a[:, None, None]
    u1 = (xi1[:, None, None] * alpha - xi2[:, None, None] * beta) / a[:, None, None]
    u2 = (xi2[:, None, None] * alpha + xi1[:, None, None] * beta) / a[:, None, None]
    u = np.stack([u1, u2, w], axis=1)
    return {"u": u, "p": p, "h": h}


def solve_zero_mode(vgrid: VerticalGrid, params: PhysicalParams, lam,
                    F=None, K=None, G=None, free_surface=True):
    """The xi' = 0 mode: vertical velocity vanishes, horizontal components
    satisfy damped heat problems with stress-slope data, the pressure
    integrates the vertical forcing from the surface anchor."""
    nz = vgrid.node_count
    mu = params.mu
    T = 1
    for data in (F, K, G):
        if data is not None:
            T = max(T, np.asarray(data).shape[-1])
    Fc = np.zeros((3, nz, T), dtype=complex) if F is None else np.asarray(F, dtype=complex)
    Kc = np.zeros(T, dtype=complex) if K is None else np.asarray(K, dtype=complex)
    Gc = np.zeros((3, T), dtype=complex) if G is None else np.asarray(G, dtype=complex)
    D = vgrid.diff
    D2 = vgrid.diff2
    bsq = lam / mu
    MB = _Bordered(D2, np.array([bsq]))
    rhs = np.zeros((1, nz, 1 + 2 * T), dtype=complex)
    rhs[0, -1, 0] = 1.0
    rhs[0, 1:-1, 1:1 + T] = -Fc[0, 1:-1, :] / mu
    rhs[0, 1:-1, 1 + T:] = -Fc[1, 1:-1, :] / mu
    sol = MB.solve(rhs)[0]
    vb_top = sol[:, 0]
    slope = vb_top @ D[-1, :]
    u = np.zeros((3, nz, T), dtype=complex)
    for j, cols in ((0, sol[:, 1:1 + T]), (1, sol[:, 1 + T:])):
        c = (Gc[j] / mu - D[-1, :] @ cols) / slope
        u[j] = cols + c[None, :] * vb_top[:, None]
    h = Kc / lam if free_surface else np.zeros(T, dtype=complex)
    # pressure: p' = F3, anchored by the normal stress row at the surface
    Dt = _anchored_gradient(D, anchor_last=True)
    rhs_p = np.zeros((nz, T), dtype=complex)
    rhs_p[:-1, :] = Fc[2, :-1, :]
    rhs_p[-1, :] = params.c_g * h - Gc[2]
    p = np.linalg.solve(Dt, rhs_p)
    return {"u": u, "p": p, "h": h}


def solve_resolvent_mode(xi_prime, lam, f_profiles, k_hat, params: PhysicalParams,
                         vgrid: VerticalGrid, stress=None, free_surface=True,
                         sector=None) -> ModeProfile:
    """Resolvent solve for a single mode, with residual bookkeeping."""
    if sector is not None and not sector.contains(lam):
        from .errors import DomainError

        raise DomainError(f"lambda {lam} outside the resolvent sector")
    xi1, xi2 = float(xi_prime[0]), float(xi_prime[1])
    nz = vgrid.node_count
    F = np.zeros((3, nz), dtype=complex) if f_profiles is None else np.asarray(f_profiles, complex)
    G = np.zeros(3, dtype=complex) if stress is None else np.asarray(stress, complex)
    K = complex(k_hat)
    if xi1 == 0.0 and xi2 == 0.0:
        out = solve_zero_mode(vgrid, params, lam, F[:, :, None], np.array([K]),
                              G[:, None], free_surface)
        u, p, h = out["u"][..., 0], out["p"][..., 0], complex(out["h"][0])
    else:
        out = solve_modes(vgrid, params, [xi1], [xi2], lam, F[None, :, :, None],
                          np.array([[K]]), G[None, :, None], free_surface)
        u, p, h = out["u"][0, ..., 0], out["p"][0, ..., 0], complex(out["h"][0, 0])
    prof = ModeProfile((xi1, xi2), complex(lam), u, p, h)
    prof.residuals = mode_residuals(prof, F, K, G, params, vgrid, free_surface)
    return prof


def mode_residuals(prof: ModeProfile, F, K, G, params, vgrid, free_surface=True):
    """Relative discrete residuals of every equation row of the mode system."""
    xi1, xi2 = prof.xi_prime
    lam = prof.lam
    mu = params.mu
    D, D2 = vgrid.diff, vgrid.diff2
    u, p = prof.u, prof.p
    asq = xi1**2 + xi2**2
    grad_p = np.stack([1j * xi1 * p, 1j * xi2 * p, D @ p])
    mom = lam * u - mu * (np.einsum("ij,cj->ci", D2, u) - asq * u) + grad_p - F
    div = 1j * xi1 * u[0] + 1j * xi2 * u[1] + D @ u[2]
    scale_mom = max(np.abs(lam * u).max(), np.abs(grad_p).max(),
                    mu * np.abs(np.einsum("ij,cj->ci", D2, u)).max(),
                    np.abs(F).max(), 1e-300)
    scale_div = max(np.abs(np.einsum("ij,cj->ci", D, u)).max(), 1e-300)
    tang1 = mu * (1j * xi1 * u[2, -1] + (D @ u[0])[-1]) - G[0]
    tang2 = mu * (1j * xi2 * u[2, -1] + (D @ u[1])[-1]) - G[1]
    Ct = params.c_g + params.c_sigma * asq
    norm = 2 * mu * (D @ u[2])[-1] - p[-1] + (Ct * prof.h if free_surface else 0.0) - G[2]
    kin = lam * prof.h - u[2, -1] - K if free_surface else 0.0
    scale_b = max(mu * np.abs(D @ u[0]).max(), mu * np.abs(D @ u[1]).max(),
                  np.abs(p[-1]), np.abs(G).max(), abs(Ct * prof.h), 1e-300)
    return {
        "momentum": float(np.abs(mom[:, 1:-1]).max() / scale_mom),
        "divergence": float(np.abs(div).max() / max(scale_div, scale_mom)),
        "tangential_stress": float(max(abs(tang1), abs(tang2)) / scale_b),
        "normal_stress": float(abs(norm) / scale_b),
        "kinematic": float(abs(kin) / max(abs(lam * prof.h), np.abs(u[2, -1]), abs(K), 1e-300)),
    }


def boundary_forced_mode(xi_prime, lam, h_hat, params: PhysicalParams,
                         vgrid: VerticalGrid, degeneracy_tol=1e-12):
    """Velocity profiles of the pure stress problem from the explicit
    boundary-symbol fractions (no free surface, no interior forcing).

    Implements the closed representation: combinations of exp(b*x3) and
    a*M(x3) with M the exponential-pair kernel, divided by the boundary
    determinant.  The zero mode uses the a -> 0 limits.
    """
    mu = params.mu
    x3 = vgrid.nodes
    H = np.asarray(h_hat, dtype=complex)
    xi1, xi2 = float(xi_prime[0]), float(xi_prime[1])
    a, b = eval_ab(xi1, xi2, lam, mu)
    a = float(a)
    b = complex(b)
    eb = np.exp(b * x3)
    if a == 0.0:
        u = np.zeros((3, vgrid.node_count), dtype=complex)
        u[0] = eb * H[0] / (mu * b)
        u[1] = eb * H[1] / (mu * b)
        return u
    d = lopatinskii(a, b)
    if abs(d) < degeneracy_tol * (abs(lam) ** 0.5 + a) ** 3:
        raise NearDegenerateError(f"boundary determinant too small: |D|={abs(d):.3e}")
    aM = a * exp_pair_kernel(x3, a, b)
    xi = np.array([xi1, xi2])
    u = np.zeros((3, vgrid.node_count), dtype=complex)
    for j in (0, 1):
        acc = np.zeros_like(eb)
        for k in (0, 1):
            acc += (2.0 / mu) * (xi[j] * xi[k] * b / (a * d)) * aM * H[k]
            acc -= (1.0 / mu) * (xi[j] * xi[k] * (3.0 * b - a) / (b * d)) * eb * H[k]
        acc -= (1.0 / mu) * (1j * xi[j] * (b**2 + a**2) / (a * d)) * aM * H[2]
        acc += (1.0 / mu) * (1j * xi[j] * (b - a) / d) * eb * H[2]
        acc += (1.0 / mu) * (1.0 / b) * eb * H[j]
        u[j] = acc
    acc = np.zeros_like(eb)
    for k in (0, 1):
        acc -= (2.0 / mu) * (1j * xi[k] * b / d) * aM * H[k]
        acc -= (1.0 / mu) * (1j * xi[k] * (b - a) / d) * eb * H[k]
    acc -= (1.0 / mu) * ((b**2 + a**2) / d) * aM * H[2]
    acc += (1.0 / mu) * (a * (b + a) / d) * eb * H[2]
    u[2] = acc
    return u


def boundary_forced_batch(xi1, xi2, lam, H, x3, params: PhysicalParams):
    """Vectorized boundary-forced velocity profiles.

    xi1, xi2: (m,) nonzero modes; H: (m, 3, T) stress data; returns
    (m, 3, nz, T).  Same formulas as boundary_forced_mode.
    """
    mu = params.mu
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    a, b = eval_ab(xi1, xi2, lam, mu)
    d = lopatinskii(a, b)
    H = np.asarray(H, dtype=complex)
    m, _, T = H.shape
    nz = x3.size
    eb = np.exp(b[:, None] * x3[None, :])                       # (m, nz)
    aM = a[:, None] * exp_pair_kernel(x3[None, :], a[:, None], b[:, None])
    xi = np.stack([xi1, xi2], axis=0)                            # (2, m)
    u = np.zeros((m, 3, nz, T), dtype=complex)
    for j in (0, 1):
        acc = np.zeros((m, nz, T), dtype=complex)
        for k in (0, 1):
            c1 = (2.0 / mu) * xi[j] * xi[k] * b / (a * d)
            c3 = -(1.0 / mu) * xi[j] * xi[k] * (3.0 * b - a) / (b * d)
            acc += (c1[:, None] * aM + c3[:, None] * eb)[:, :, None] * H[:, k, None, :]
        c2 = -(1.0 / mu) * 1j * xi[j] * (b**2 + a**2) / (a * d)
        c4 = (1.0 / mu) * 1j * xi[j] * (b - a) / d
        c5 = (1.0 / mu) / b
        acc += (c2[:, None] * aM + c4[:, None] * eb)[:, :, None] * H[:, 2, None, :]
        acc += (c5[:, None] * eb)[:, :, None] * H[:, j, None, :]
        u[:, j] = acc
    acc = np.zeros((m, nz, T), dtype=complex)
    for k in (0, 1):
        c6 = -(2.0 / mu) * 1j * xi[k] * b / d
        c8 = -(1.0 / mu) * 1j * xi[k] * (b - a) / d
        acc += (c6[:, None] * aM + c8[:, None] * eb)[:, :, None] * H[:, k, None, :]
    c7 = -(1.0 / mu) * (b**2 + a**2) / d
    c9 = (1.0 / mu) * a * (b + a) / d
    acc += (c7[:, None] * aM + c9[:, None] * eb)[:, :, None] * H[:, 2, None, :]
    u[:, 2] = acc
    return u


def surface_response(a_vals, lam, params: PhysicalParams, kin=1.0, g3=0.0):
    """Closed-form free-surface mode response to kinematic data ``kin`` and
    normal-stress data ``g3`` (tangential stress zero, no interior forcing).

    The vertical velocity is ``w = ca * exp(a x3) + cb * exp(b x3)``, the
    pressure ``-lam * ca / a * exp(a x3)`` and the height ``ch``; returns
    ``(ca, cb, ch, b)`` broadcast over ``a_vals`` (all nonzero) and ``lam``.
    """
    mu = params.mu
    a = np.asarray(a_vals, dtype=float)
    lam = np.asarray(lam, dtype=complex)
    b = np.sqrt(lam / mu + a**2)
    b = np.where(b.real < 0, -b, b)
    Ct = params.c_g + params.c_sigma * a**2
    g = -(a**2 + b**2) / (2.0 * a**2)
    # rows after eliminating ca = g * cb (zero tangential stress):
    #   normal stress:  T3 cb + Ct ch = g3
    #   kinematic:      -(g+1) cb + lam ch = kin
    T3 = (2.0 * mu * a + lam / a) * g + 2.0 * mu * b
    det = lam * T3 + (g + 1.0) * Ct
    cb = (lam * g3 - Ct * kin) / det
    ch = (T3 * kin + (g + 1.0) * g3) / det
    ca = g * cb
    return ca, cb, ch, b


def dispersion_polynomial_roots(a, params: PhysicalParams):
    """Eigenfrequencies of one surface mode: roots of
    mu^2 (b^2+a^2)^2 + a*(c_g + c_sigma a^2) = 4 mu^2 a^3 b
    mapped back through lam = mu (b^2 - a^2), restricted to Re b >= 0 and
    off the branch cut."""
    mu = params.mu
    w0sq = a * (params.c_g + params.c_sigma * a**2)
    coeffs = [mu**2, 0.0, 2.0 * mu**2 * a**2, -4.0 * mu**2 * a**3, mu**2 * a**4 + w0sq]
    roots_b = np.roots(coeffs)
    lams = []
    for rb in roots_b:
        if rb.real <= 1e-12:
            continue
        lam = mu * (rb**2 - a**2)
        if abs(lam.imag) < 1e-12 and lam.real <= -mu * a**2:
            continue
        lams.append(complex(lam))
    return lams
