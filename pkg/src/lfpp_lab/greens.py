"""Exact finite-lattice covariance oracle via a sparse Laplace solve.

The sampled field has covariance 2*pi * L^{-1}, where L is the 5-point graph
Laplacian on the interior vertices with the outer ring grounded.  Solving
L x = b directly therefore gives the exact covariance of any pair of linear
functionals of the field, independent of the FFT sampling path.  This module
is the oracle side of the dual-route covariance checks; it must not share
code with the sampler.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grids import GridSpec

# Side of the square whose conformal radius at the center equals 1:
# Gamma(1/4)*Gamma(1/2) / (2*sqrt(2)*Gamma(3/4)), from the Schwarz-Christoffel
# map of the unit disk onto a square.
UNIT_CR_SQUARE_SIDE = 1.8540746773013719


class GreensOracle:
    """Factorized zero-boundary Laplacian for one grid geometry."""

    def __init__(self, spec: GridSpec):
        self.spec = spec
        m = spec.n_cells - 2
        self.m = m
        main = 4.0 * np.ones(m * m)
        d1 = -np.ones(m * m - 1)
        d1[m - 1 :: m] = 0.0  # no coupling across row ends
        dm = -np.ones(m * m - m)
        L = sp.diags([main, d1, d1, dm, dm], [0, 1, -1, m, -m], format="csc")
        self._lu = spla.splu(L)

    def _interior_index(self, vertex: tuple[int, int]) -> int:
        i, j = vertex
        if not (1 <= i <= self.m and 1 <= j <= self.m):
            raise ValueError(f"vertex {vertex} not interior")
        return (i - 1) * self.m + (j - 1)

    def covariance(self, v1: tuple[int, int], v2: tuple[int, int]) -> float:
        """Exact Cov(h(v1), h(v2)) between two interior vertices."""
        e = np.zeros(self.m * self.m)
        e[self._interior_index(v2)] = 1.0
        col = self._lu.solve(e)
        return 2.0 * np.pi * col[self._interior_index(v1)]

    def covariance_column(self, v: tuple[int, int]) -> np.ndarray:
        """Exact Cov(h(.), h(v)) over the full grid (ring entries zero)."""
        e = np.zeros(self.m * self.m)
        e[self._interior_index(v)] = 1.0
        col = 2.0 * np.pi * self._lu.solve(e)
        n = self.spec.n_cells
        out = np.zeros((n, n))
        out[1:-1, 1:-1] = col.reshape(self.m, self.m)
        return out

    def functional_covariance(self, a: np.ndarray, b: np.ndarray) -> float:
        """Exact Cov(<a, h>, <b, h>) for weight grids a, b (n x n arrays).

        The weights must vanish on the boundary ring (the ring is pinned at 0,
        so any mass there contributes nothing and is rejected to catch bugs).
        """
        for w in (a, b):
            ring = np.concatenate([w[0, :], w[-1, :], w[:, 0], w[:, -1]])
            if np.any(ring != 0.0):
                raise ValueError("functional weights must vanish on the ring")
        bi = b[1:-1, 1:-1].reshape(-1)
        x = self._lu.solve(bi)
        return 2.0 * np.pi * float(a[1:-1, 1:-1].reshape(-1) @ x)
