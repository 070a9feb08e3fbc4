"""Fourier-Laplace boundary symbols, resolvent contour, multiplier audits.

All symbols are built from the horizontal wavenumber magnitude ``a = |xi'|``
and the shifted vertical root ``b = sqrt(lam/mu + a**2)`` taken on the
principal branch, which has ``Re b >= 0`` away from the cut
``lam in (-inf, -mu*a**2]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BranchCutError, InvalidInputError

_GAUSS_N = 32
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GAUSS_N)
_GL_NODES01 = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS01 = 0.5 * _GL_WEIGHTS

# method switch for the removable singularity of the exponential quotient
_QUOTIENT_SWITCH = 1e-6


def on_branch_cut(lam, a, mu):
    """True where lam sits on the cut (-inf, -mu*a**2] of the vertical root."""
    lam = np.asarray(lam, dtype=complex)
    a = np.asarray(a, dtype=float)
    return (lam.imag == 0.0) & (lam.real <= -mu * a**2)


def eval_ab(xi1, xi2, lam, mu):
    """Horizontal magnitude and principal vertical root for given mode/frequency."""
    a = np.hypot(np.asarray(xi1, dtype=float), np.asarray(xi2, dtype=float))
    lam = np.asarray(lam, dtype=complex)
    if np.any(on_branch_cut(lam, a, mu)):
        raise BranchCutError("lambda lies on the branch cut (-inf, -mu*|xi'|^2]")
    b = np.sqrt(lam / mu + a**2)
    # principal sqrt already has Re >= 0; guard the measure-zero boundary
    b = np.where(b.real < 0.0, -b, b)
    return a, b


def lopatinskii(a, b):
    """Boundary determinant b**3 + a*b**2 + 3*a**2*b - a**3."""
    a = np.asarray(a)
    b = np.asarray(b)
    return b**3 + a * b**2 + 3.0 * a**2 * b - a**3


@dataclass(frozen=True)
class SymbolBundle:
    """Per-mode symbol values with branch bookkeeping."""

    xi_prime: tuple
    lam: complex
    mu: float
    a: float = field(init=False)
    b: complex = field(init=False)
    lopat: complex = field(init=False)

    def __post_init__(self):
        a, b = eval_ab(self.xi_prime[0], self.xi_prime[1], self.lam, self.mu)
        object.__setattr__(self, "a", float(a))
        object.__setattr__(self, "b", complex(b))
        object.__setattr__(self, "lopat", complex(lopatinskii(a, b)))


def exp_pair_kernel(x3, a, b):
    """Evaluate (exp(b*x3) - exp(a*x3)) / (b - a), stable near b = a.

    Away from the removable singularity the difference quotient is used; in
    a relative neighbourhood of ``b = a`` the equivalent integral
    ``x3 * int_0^1 exp((b*t + a*(1-t))*x3) dt`` is evaluated by 32-point
    Gauss-Legendre quadrature.
    """
    x3 = np.asarray(x3, dtype=float)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    x3b, ab, bb = np.broadcast_arrays(x3, a, b)
    out = np.empty(x3b.shape, dtype=complex)
    gap = np.abs(bb - ab)
    near = gap < _QUOTIENT_SWITCH * (np.abs(ab) + np.abs(bb) + 1.0)
    far = ~near
    if np.any(far):
        out[far] = (np.exp(bb[far] * x3b[far]) - np.exp(ab[far] * x3b[far])) / (
            bb[far] - ab[far]
        )
    if np.any(near):
        xn = x3b[near]
        an = ab[near]
        bn = bb[near]
        acc = np.zeros(xn.shape, dtype=complex)
        for t, w in zip(_GL_NODES01, _GL_WEIGHTS01):
            acc += w * np.exp((bn * t + an * (1.0 - t)) * xn)
        out[near] = xn * acc
    return out if out.shape else complex(out)


@dataclass(frozen=True)
class SectorSpec:
    """Complex frequencies with |arg| < pi - epsilon and |lam| > gamma0."""

    epsilon: float
    gamma0: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.epsilon < np.pi / 2:
            raise InvalidInputError("epsilon must lie in (0, pi/2)")
        if self.gamma0 < 0.0:
            raise InvalidInputError("gamma0 must be nonnegative")

    def contains(self, lam) -> bool:
        lam = complex(lam)
        return abs(np.angle(lam)) < np.pi - self.epsilon and abs(lam) > self.gamma0

    @property
    def vertex(self) -> float:
        return 2.0 * self.gamma0 / np.sin(self.epsilon)

    def sample(self, count, rng, lam_max=1e6):
        """Random frequencies in the sector, log-uniform in modulus."""
        lo = max(self.gamma0, 1e-8) * (1.0 + 1e-9)
        mod = np.exp(rng.uniform(np.log(lo), np.log(lam_max), size=count))
        ang = rng.uniform(-(np.pi - self.epsilon), np.pi - self.epsilon, size=count)
        return mod * np.exp(1j * ang)


@dataclass(frozen=True)
class ContourSpec:
    """Quadrature nodes along the sectorial inversion contour.

    The contour runs from the lower ray through the vertex at
    ``2*gamma0/sin(epsilon)`` up the conjugate ray, with both rays at angle
    ``pi - epsilon`` off the positive real axis.  Weights include the
    direction factor, so ``(1/2j pi) * sum(w * f(nodes))`` approximates the
    inversion integral.
    """

    sector: SectorSpec
    truncation: float
    node_count: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.truncation <= 0:
            raise InvalidInputError("contour truncation must be positive")
        if self.node_count < 8 or self.node_count % 2:
            raise InvalidInputError("node_count must be even and >= 8")
        half = self.node_count // 2
        s = np.linspace(0.0, self.truncation, half)
        ds = s[1] - s[0]
        trap = np.full(half, ds)
        trap[0] = trap[-1] = 0.5 * ds
        eps = self.sector.epsilon
        v = self.sector.vertex
        up = v + s * np.exp(1j * (np.pi - eps))
        down = np.conj(up)
        nodes = np.concatenate([down[::-1], up])
        weights = np.concatenate(
            [(-np.exp(-1j * (np.pi - eps)) * trap)[::-1], np.exp(1j * (np.pi - eps)) * trap]
        )
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def invert(self, values, t):
        """(1/2j pi) * sum w_k exp(lam_k t) values_k along the last axis."""
        phase = np.exp(self.nodes * t) * self.weights
        return np.tensordot(np.asarray(values), phase, axes=([-1], [0])) / (2j * np.pi)

    def residue_check(self, t) -> float:
        """Quadrature of exp(lam t)/lam, which should reproduce 1."""
        return abs(complex(self.invert(1.0 / self.nodes, t)) - 1.0)


def contour_nodes(sector: SectorSpec, truncation: float, node_count: int) -> ContourSpec:
    """Build the two-ray inversion contour for the given sector."""
    return ContourSpec(sector, truncation, node_count)


def contour_for_time(sector: SectorSpec, t: float, node_count: int = 400,
                     decades: float = 36.0) -> ContourSpec:
    """Contour rescaled so exp(lam*t) neither overflows nor underflows.

    The vertex is pulled toward the origin like 1/t for large t (the
    integrand is analytic to the right of the spectrum, so this is a legal
    deformation) and the truncation is chosen so the tail factor
    exp(-s*t*cos(eps)) reaches exp(-decades).
    """
    if t <= 0:
        raise InvalidInputError("time must be positive")
    eps = sector.epsilon
    vertex_cap = max(4.0 / t, 0.05)
    gamma_eff = min(sector.gamma0, 0.5 * vertex_cap * np.sin(eps))
    sec = SectorSpec(eps, gamma_eff)
    s_max = decades / (t * np.cos(eps))
    return ContourSpec(sec, s_max, node_count)


@dataclass(frozen=True)
class PanelContour:
    """Graded Gauss-Legendre contour quadrature for one inversion time.

    Panels start at the vertex scale and grow dyadically, capped at a fixed
    number of oscillation wavelengths of exp(lam*t), which keeps the node
    count roughly t-independent while resolving both the vertex region and
    the oscillatory tail.  Same node/weight convention as ContourSpec.
    """

    sector: SectorSpec
    t: float
    gl_order: int = 16
    decades: float = 36.0
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        eps = self.sector.epsilon
        v = max(self.sector.vertex, 1e-12)
        osc = 2.0 * np.pi / (self.t * np.sin(eps))
        s_max = self.decades / (self.t * np.cos(eps))
        cap = 1.5 * osc
        edges = [0.0, min(v, cap) * 0.5]
        while edges[-1] < s_max:
            width = min(2.0 * (edges[-1] - edges[-2]), cap)
            edges.append(edges[-1] + width)
        gx, gw = np.polynomial.legendre.leggauss(self.gl_order)
        s_list, w_list = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid, hw = 0.5 * (lo + hi), 0.5 * (hi - lo)
            s_list.append(mid + hw * gx)
            w_list.append(hw * gw)
        s = np.concatenate(s_list)
        trap = np.concatenate(w_list)
        direction = np.exp(1j * (np.pi - eps))
        up = self.sector.vertex + s * direction
        nodes = np.concatenate([np.conj(up)[::-1], up])
        weights = np.concatenate([(-np.conj(direction) * trap)[::-1], direction * trap])
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    invert = ContourSpec.invert
    residue_check = ContourSpec.residue_check


def panel_contour_for_time(sector: SectorSpec, t: float, gl_order=16,
                           decades=36.0, vertex_cap=None) -> PanelContour:
    """Per-time panel contour with the same vertex scaling as contour_for_time."""
    if t <= 0:
        raise InvalidInputError("time must be positive")
    eps = sector.epsilon
    if vertex_cap is None:
        vertex_cap = max(4.0 / t, 0.05)
    gamma_eff = min(sector.gamma0, 0.5 * vertex_cap * np.sin(eps))
    return PanelContour(SectorSpec(eps, gamma_eff), t, gl_order, decades)


# ---------------------------------------------------------------------------
# multiplier-class audit
# ---------------------------------------------------------------------------

def _boundary_fraction(idx):
    """The nine boundary-symbol fractions appearing in the stress-data
    representation formulas, all of order -1 with type 2."""

    def m(x1, x2, lam, mu=1.0):
        a, b = eval_ab(x1, x2, lam, mu)
        d = lopatinskii(a, b)
        if idx == 1:
            return x1 * x2 * b / (a * d)
        if idx == 2:
            return 1j * x1 * (b**2 + a**2) / (a * d)
        if idx == 3:
            return x1 * x2 * (3.0 * b - a) / (b * d)
        if idx == 4:
            return 1j * x1 * (b - a) / d
        if idx == 5:
            return 1.0 / b
        if idx == 6:
            return 1j * x2 * b / d
        if idx == 7:
            return (b**2 + a**2) / d
        if idx == 8:
            return 1j * x2 * (b - a) / d
        return a * (b + a) / d

    return m


def _registry():
    def mk(fn):
        return fn

    reg = {
        "A": mk(lambda x1, x2, lam, mu=1.0: np.hypot(x1, x2)),
        "B": mk(lambda x1, x2, lam, mu=1.0: eval_ab(x1, x2, lam, mu)[1]),
        "D": mk(lambda x1, x2, lam, mu=1.0: lopatinskii(*eval_ab(x1, x2, lam, mu))),
        "riesz1": mk(lambda x1, x2, lam, mu=1.0: x1 / np.hypot(x1, x2)),
        "riesz2": mk(lambda x1, x2, lam, mu=1.0: x2 / np.hypot(x1, x2)),
        "xi1": mk(lambda x1, x2, lam, mu=1.0: x1 + 0.0 * lam),
        "xi2": mk(lambda x1, x2, lam, mu=1.0: x2 + 0.0 * lam),
        "inv_B": mk(lambda x1, x2, lam, mu=1.0: 1.0 / eval_ab(x1, x2, lam, mu)[1]),
        "A*B": mk(
            lambda x1, x2, lam, mu=1.0: np.hypot(x1, x2) * eval_ab(x1, x2, lam, mu)[1]
        ),
        "B/A": mk(
            lambda x1, x2, lam, mu=1.0: eval_ab(x1, x2, lam, mu)[1] / np.hypot(x1, x2)
        ),
    }
    for i in range(1, 10):
        reg[f"bdry{i}"] = _boundary_fraction(i)
    return reg


MULTIPLIER_REGISTRY = _registry()

_ALPHAS = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


@dataclass
class MultiplierEstimate:
    symbol_id: str
    order: float
    mtype: int
    constant: float
    argmax: tuple
    per_alpha: dict
    band_sups: dict
    diverging: bool


def _fd_derivative(m, x1, x2, lam, alpha):
    h1 = 1e-4 * (1.0 + np.hypot(x1, x2))
    h2 = h1
    if alpha == (0, 0):
        return m(x1, x2, lam)
    if alpha == (1, 0):
        return (m(x1 + h1, x2, lam) - m(x1 - h1, x2, lam)) / (2 * h1)
    if alpha == (0, 1):
        return (m(x1, x2 + h2, lam) - m(x1, x2 - h2, lam)) / (2 * h2)
    if alpha == (2, 0):
        return (m(x1 + h1, x2, lam) - 2 * m(x1, x2, lam) + m(x1 - h1, x2, lam)) / h1**2
    if alpha == (0, 2):
        return (m(x1, x2 + h2, lam) - 2 * m(x1, x2, lam) + m(x1, x2 - h2, lam)) / h2**2
    if alpha == (1, 1):
        return (
            m(x1 + h1, x2 + h2, lam)
            - m(x1 + h1, x2 - h2, lam)
            - m(x1 - h1, x2 + h2, lam)
            + m(x1 - h1, x2 - h2, lam)
        ) / (4 * h1 * h2)
    raise InvalidInputError(f"unsupported multi-index {alpha}")


def multiplier_bound_estimate(symbol_id, order, mtype, sector: SectorSpec,
                              sample_budget=2000, seed=0, xi_max=1e3, lam_max=1e6):
    """Empirical multiplier-class constant for a registered symbol.

    Samples ``(xi', lam)`` over the punctured plane times the sector, takes
    central finite differences up to |alpha'| <= 2 plus the first
    tau-derivative, and returns the sup of the appropriately rescaled
    derivative magnitudes.  ``band_sups`` holds the sup per |xi'| decade; a
    symbol that fails membership shows band sups growing across decades.
    """
    if symbol_id not in MULTIPLIER_REGISTRY:
        raise InvalidInputError(f"unknown symbol_id {symbol_id!r}")
    if mtype not in (1, 2):
        raise InvalidInputError("multiplier type must be 1 or 2")
    m = MULTIPLIER_REGISTRY[symbol_id]
    rng = np.random.default_rng(seed)
    mod = np.exp(rng.uniform(np.log(1e-3), np.log(xi_max), size=sample_budget))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=sample_budget)
    x1 = mod * np.cos(ang)
    x2 = mod * np.sin(ang)
    lam = sector.sample(sample_budget, rng, lam_max=lam_max)

    best = 0.0
    argmax = None
    per_alpha = {}
    ratios_all = np.zeros(sample_budget)
    for alpha in _ALPHAS:
        order_drop = alpha[0] + alpha[1]
        deriv = np.abs(_fd_derivative(m, x1, x2, lam, alpha))
        scale = np.abs(lam) ** 0.5 + mod
        if mtype == 1:
            ratio = deriv * scale ** (order_drop - order)
        else:
            ratio = deriv * mod**order_drop * scale ** (-order)
        # first tau-derivative audit of the same multi-index
        tau = lam.imag
        dtau = 1e-4 * (1.0 + np.abs(tau))
        dplus = _fd_derivative(m, x1, x2, lam + 1j * dtau, alpha)
        dminus = _fd_derivative(m, x1, x2, lam - 1j * dtau, alpha)
        tau_deriv = np.abs(tau * (dplus - dminus) / (2.0 * dtau))
        if mtype == 1:
            tau_ratio = tau_deriv * scale ** (order_drop - order)
        else:
            tau_ratio = tau_deriv * mod**order_drop * scale ** (-order)
        combined = np.maximum(ratio, tau_ratio)
        combined = np.where(np.isfinite(combined), combined, 0.0)
        per_alpha[alpha] = float(combined.max())
        ratios_all = np.maximum(ratios_all, combined)
        k = int(np.argmax(combined))
        if combined[k] > best:
            best = float(combined[k])
            argmax = (float(x1[k]), float(x2[k]), complex(lam[k]), alpha)

    edges = 10.0 ** np.arange(-3, 4)
    band_sups = {}
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (mod >= lo) & (mod < hi)
        band_sups[f"[{lo:g},{hi:g})"] = float(ratios_all[mask].max()) if mask.any() else 0.0
    vals = [v for v in band_sups.values() if v > 0]
    diverging = len(vals) >= 3 and vals[-1] > 10.0 * vals[0]
    return MultiplierEstimate(symbol_id, order, mtype, best, argmax, per_alpha,
                              band_sups, diverging)
