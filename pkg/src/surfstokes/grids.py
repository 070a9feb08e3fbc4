"""Discretization substrate: periodic horizontal grid and truncated vertical grid.

The horizontal plane is a periodic box of side ``box_length`` sampled with
``modes_per_dim`` points per direction; its dual variables are the integer
multiples of ``2*pi/box_length``.  The vertical half-line ``(-inf, 0]`` is
truncated to ``[-depth, 0]`` and discretized either with Chebyshev-Lobatto
collocation (spectral accuracy for smooth profiles) or a uniform second-order
finite-difference grid used as a cross-check mode and for FFT-based solvers
that need equispaced nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class HorizontalGrid:
    """Periodic grid on a square horizontal box.

    Wavenumber layout follows ``numpy.fft``: entry ``(i, j)`` of a spectrum
    corresponds to the wave vector ``(kx[i], ky[j])`` and spectra of real
    fields are conjugate-symmetric under ``k -> -k``.
    """

    box_length: float
    modes_per_dim: int

    def __post_init__(self):
        if self.box_length <= 0:
            raise InvalidInputError("box_length must be positive")
        n = self.modes_per_dim
        if n < 8 or n % 2 != 0:
            raise InvalidInputError("modes_per_dim must be even and >= 8")

    @property
    def spacing(self) -> float:
        return self.box_length / self.modes_per_dim

    @property
    def cell_area(self) -> float:
        return self.spacing ** 2

    def coordinates(self):
        """Return 1d physical coordinates (same for both directions)."""
        return np.arange(self.modes_per_dim) * self.spacing

    def wavenumbers_1d(self):
        """Integer multiples of 2*pi/box_length in FFT order."""
        n = self.modes_per_dim
        return 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n) / self.box_length

    def wavenumbers(self):
        """Meshed wave vectors (kx, ky), each of shape (n, n)."""
        k = self.wavenumbers_1d()
        return np.meshgrid(k, k, indexing="ij")

    def wavenumber_magnitude(self):
        kx, ky = self.wavenumbers()
        return np.hypot(kx, ky)


def _cheb_nodes_matrix(n: int):
    """Chebyshev-Lobatto points on [-1, 1] (ascending) and differentiation matrix."""
    if n < 2:
        raise InvalidInputError("need at least 2 collocation points")
    m = n - 1
    x = np.cos(np.pi * np.arange(m + 1) / m)  # descending from +1 to -1
    c = np.hstack([2.0, np.ones(m - 1), 2.0]) * (-1.0) ** np.arange(m + 1)
    X = np.tile(x, (m + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(m + 1))
    D -= np.diag(D.sum(axis=1))
    # flip to ascending order
    return x[::-1].copy(), D[::-1, ::-1].copy()


def _clenshaw_curtis_weights(n: int):
    """Clenshaw-Curtis quadrature weights on [-1, 1] for n Lobatto points (ascending)."""
    m = n - 1
    theta = np.pi * np.arange(m + 1) / m
    w = np.zeros(m + 1)
    v = np.ones(m - 1)
    if m % 2 == 0:
        w[0] = w[m] = 1.0 / (m * m - 1)
        for k in range(1, m // 2):
            v -= 2.0 * np.cos(2.0 * k * theta[1:m]) / (4.0 * k * k - 1)
        v -= np.cos(m * theta[1:m]) / (m * m - 1)
    else:
        w[0] = w[m] = 1.0 / (m * m)
        for k in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2.0 * k * theta[1:m]) / (4.0 * k * k - 1)
    w[1:m] = 2.0 * v / m
    return w[::-1].copy()


@dataclass(frozen=True)
class VerticalGrid:
    """Discretization of the truncated vertical interval [-depth, 0].

    ``nodes`` increase strictly and end exactly at 0 (the boundary plane).
    ``diff`` is the first-derivative collocation matrix; ``weights`` are
    positive quadrature weights for integrals over the interval.
    """

    depth: float
    node_count: int
    scheme: str = "chebyshev"
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    diff: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.depth <= 0:
            raise InvalidInputError("depth must be positive")
        nz = self.node_count
        if nz < 16:
            raise InvalidInputError("node_count must be >= 16")
        if self.scheme == "chebyshev":
            x, D = _cheb_nodes_matrix(nz)
            nodes = 0.5 * self.depth * (x - 1.0)  # [-depth, 0]
            diff = D * (2.0 / self.depth)
            weights = _clenshaw_curtis_weights(nz) * (self.depth / 2.0)
        elif self.scheme == "finite-difference":
            nodes = np.linspace(-self.depth, 0.0, nz)
            h = nodes[1] - nodes[0]
            diff = np.zeros((nz, nz))
            for i in range(1, nz - 1):
                diff[i, i - 1] = -0.5 / h
                diff[i, i + 1] = 0.5 / h
            diff[0, :3] = np.array([-1.5, 2.0, -0.5]) / h
            diff[-1, -3:] = np.array([0.5, -2.0, 1.5]) / h
            weights = np.full(nz, h)
            weights[0] = weights[-1] = 0.5 * h
        else:
            raise InvalidInputError(f"unknown vertical scheme {self.scheme!r}")
        nodes = nodes.copy()
        nodes[-1] = 0.0
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "diff", diff)
        object.__setattr__(self, "weights", weights)

    @property
    def diff2(self) -> np.ndarray:
        """Second-derivative matrix.

        For the finite-difference scheme this is the compact second-order
        stencil rather than the squared first-derivative matrix.
        """
        if self.scheme == "chebyshev":
            return self.diff @ self.diff
        nz = self.node_count
        h = self.depth / (nz - 1)
        D2 = np.zeros((nz, nz))
        for i in range(1, nz - 1):
            D2[i, i - 1] = D2[i, i + 1] = 1.0 / h**2
            D2[i, i] = -2.0 / h**2
        D2[0, :4] = np.array([2.0, -5.0, 4.0, -1.0]) / h**2
        D2[-1, -4:] = np.array([-1.0, 4.0, -5.0, 2.0]) / h**2
        return D2

    def doubled(self) -> "VerticalGrid":
        """Grid on [-depth, depth] obtained by mirroring the nodes through 0."""
        return _DoubledVerticalGrid(self)


class _DoubledVerticalGrid:
    """Mirror image grid on [-depth, depth]; only nodes/weights are needed."""

    def __init__(self, base: VerticalGrid):
        self.base = base
        self.depth = base.depth
        self.nodes = np.concatenate([base.nodes[:-1], [0.0], -base.nodes[:-1][::-1]])
        self.node_count = self.nodes.size
        w = base.weights
        self.weights = np.concatenate([w[:-1], [2.0 * w[-1]], w[:-1][::-1]])
