"""Finite-difference stencils on regular grids.

Interior points use 5-point central stencils; boundary rows fall back to
one-sided stencils of matching (4th) order.  Weights are generated with
Fornberg's recurrence, so the same machinery serves first and second
derivatives in any array axis.
"""

from __future__ import annotations

import numpy as np


def fd_weights(offsets: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for a derivative at 0 given stencil offsets.

    Fornberg's algorithm (Math. Comp. 51, 699).  `offsets` are node positions
    relative to the evaluation point in units of the grid spacing.
    """
    x = np.asarray(offsets, dtype=float)
    n = x.size
    if order >= n:
        raise ValueError(f"{n}-point stencil cannot give derivative order {order}")
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0]
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


# interior 5-point central weights
_W1_CENTRAL = fd_weights(np.arange(-2, 3), 1)
_W2_CENTRAL = fd_weights(np.arange(-2, 3), 2)


def _min_points(order: int) -> int:
    return 5 if order == 1 else 6


def derivative(values: np.ndarray, h: float, axis: int = 0, order: int = 1) -> np.ndarray:
    """Derivative of sampled values along `axis` (4th-order accurate).

    Uses 5-point central stencils in the interior and one-sided stencils of
    the same order at the two edge rows on each side.
    """
    if order not in (1, 2):
        raise ValueError("only first and second derivatives are supported")
    f = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    n = f.shape[0]
    need = _min_points(order)
    if n < need:
        raise ValueError(
            f"derivative stencil needs at least {need} points along the axis, got {n}"
        )
    w = _W1_CENTRAL if order == 1 else _W2_CENTRAL
    out = np.zeros_like(f)
    for k, wk in zip(range(-2, 3), w):
        if wk != 0.0:
            out[2 : n - 2] += wk * f[2 + k : n - 2 + k]
    m = need
    for row in (0, 1):
        wl = fd_weights(np.arange(m) - row, order)
        out[row] = np.tensordot(wl, f[:m], axes=(0, 0))
        wr = fd_weights(-(np.arange(m) - row)[::-1], order)
        out[n - 1 - row] = np.tensordot(wr, f[n - m :], axes=(0, 0))
    return np.moveaxis(out, 0, axis) / h**order


def divergence_2d(jx: np.ndarray, jz: np.ndarray, dx: float, dz: float) -> np.ndarray:
    """Planar divergence d(jx)/dx + d(jz)/dz for fields shaped (nx, nz)."""
    if jx.shape != jz.shape:
        raise ValueError("vector components must share a shape")
    return derivative(jx, dx, axis=0) + derivative(jz, dz, axis=1)
