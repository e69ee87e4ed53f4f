"""Physical model: an anisotropic harmonic trap seen from a rotating frame.

In the co-rotating coordinates the Laplacian keeps its form and the only
time dependence left is the trap, evaluated at the back-rotated position.
Because the trap is quadratic, the rotated potential stays a quadratic form
with time-dependent coefficients; both it and its gradient are evaluated
here in closed form on cached coordinate monomials.
"""

import numpy as np

from . import _tables

__all__ = ["Trap", "TrapOnGrid", "nonlinearity", "modified_potential",
           "gaussian_state", "vortex_state"]


def nonlinearity(density, theta):
    """Pointwise nonlinear potential; cubic, so simply theta * |phi|^2."""
    return theta * density


class Trap:
    """Harmonic trap 0.5 * sum_l gamma_l^2 x_l^2 rotating at a constant rate.

    ``gammas`` has length 2 or 3; the rotation acts in the (x1, x2) plane and
    the rotation angle at time t is ``rotation_rate * t``.
    """

    def __init__(self, gammas, rotation_rate):
        gammas = tuple(float(g) for g in gammas)
        if len(gammas) not in (2, 3):
            raise ValueError("gammas must have length 2 or 3")
        if any(g <= 0 for g in gammas):
            raise ValueError("trap frequencies must be positive")
        self.gammas = gammas
        self.rotation_rate = float(rotation_rate)

    @property
    def dim(self):
        return len(self.gammas)

    def angle(self, t):
        return self.rotation_rate * t

    def rotation_matrix(self, t):
        """Map from rotating to laboratory coordinates, x = R(t) xi."""
        w = self.angle(t)
        c, s = np.cos(w), np.sin(w)
        R = np.eye(self.dim)
        R[0, 0] = c
        R[0, 1] = s
        R[1, 0] = -s
        R[1, 1] = c
        return R

    def quad_coefficients(self, t):
        """Coefficients (c11, c22, c12[, c33]) of the rotated trap

        W(xi, t) = c11 xi_1^2 + c22 xi_2^2 + c12 xi_1 xi_2 [+ c33 xi_3^2].
        """
        g1s, g2s = self.gammas[0] ** 2, self.gammas[1] ** 2
        w = self.angle(t)
        c, s = np.cos(w), np.sin(w)
        c11 = 0.5 * (g1s * c * c + g2s * s * s)
        c22 = 0.5 * (g1s * s * s + g2s * c * c)
        c12 = (g1s - g2s) * s * c
        if self.dim == 2:
            return (c11, c22, c12)
        return (c11, c22, c12, 0.5 * self.gammas[2] ** 2)

    def gradient_coefficients(self, t):
        """Entries (a11, a22, a12[, a33]) of the symmetric matrix A(t) with
        grad W(xi, t) = A(t) xi."""
        g1s, g2s = self.gammas[0] ** 2, self.gammas[1] ** 2
        w = self.angle(t)
        c, s = np.cos(w), np.sin(w)
        a11 = g1s * c * c + g2s * s * s
        a22 = g1s * s * s + g2s * c * c
        a12 = (g1s - g2s) * s * c
        if self.dim == 2:
            return (a11, a22, a12)
        return (a11, a22, a12, self.gammas[2] ** 2)


class TrapOnGrid:
    """A trap sampled on a grid, with the quadratic monomials precomputed."""

    def __init__(self, trap, grid):
        if trap.dim != grid.dim:
            raise ValueError(f"trap dimension {trap.dim} does not match "
                             f"grid dimension {grid.dim}")
        self.trap = trap
        self.grid = grid
        xs = grid.coordinates()
        self._x = xs
        self._m11 = np.broadcast_to(xs[0] * xs[0], grid.sizes)
        self._m22 = np.broadcast_to(xs[1] * xs[1], grid.sizes)
        self._m12 = np.broadcast_to(xs[0] * xs[1], grid.sizes)
        self._m33 = (np.broadcast_to(xs[2] * xs[2], grid.sizes)
                     if grid.dim == 3 else None)

    def values(self, t):
        """The rotated trap W(., t) on the grid."""
        c = self.trap.quad_coefficients(t)
        W = c[0] * self._m11 + c[1] * self._m22 + c[2] * self._m12
        if self._m33 is not None:
            W = W + c[3] * self._m33
        return W

    def combination(self, weights, times):
        """sum_k weights[k] * W(., times[k]), done on the coefficients."""
        cs = [self.trap.quad_coefficients(t) for t in times]
        acc = [sum(w * c[i] for w, c in zip(weights, cs))
               for i in range(len(cs[0]))]
        W = acc[0] * self._m11 + acc[1] * self._m22 + acc[2] * self._m12
        if self._m33 is not None:
            W = W + acc[3] * self._m33
        return W

    def gradient(self, t):
        """Tuple of the d partial derivatives of W(., t), dense arrays."""
        a = self.trap.gradient_coefficients(t)
        x = self._x
        sizes = self.grid.sizes
        g1 = np.broadcast_to(a[0] * x[0] + a[2] * x[1], sizes)
        g2 = np.broadcast_to(a[2] * x[0] + a[1] * x[1], sizes)
        if self.grid.dim == 2:
            return (g1, g2)
        return (g1, g2, np.broadcast_to(a[3] * x[2], sizes))

    def gradient_difference_sq(self, t1, t0):
        """|grad(W(., t1) - W(., t0))|^2, used by the gradient correction.

        The x3 part of the trap does not rotate, so only the in-plane
        components contribute.  Writing a11 = g2^2 + (g1^2 - g2^2) cos^2
        lets the anisotropy g1^2 - g2^2 be factored out of the coefficient
        differences, so the result is an exact zero for isotropic traps.
        """
        g1s, g2s = self.trap.gammas[0] ** 2, self.trap.gammas[1] ** 2
        aniso = g1s - g2s
        w1, w0 = self.trap.angle(t1), self.trap.angle(t0)
        c1, s1 = np.cos(w1), np.sin(w1)
        c0, s0 = np.cos(w0), np.sin(w0)
        d11 = aniso * (c1 * c1 - c0 * c0)   # and d22 = -d11
        d12 = aniso * (s1 * c1 - s0 * c0)
        x = self._x
        D1 = d11 * x[0] + d12 * x[1]
        D2 = d12 * x[0] - d11 * x[1]
        return np.broadcast_to(D1 * D1 + D2 * D2, self.grid.sizes)


def modified_potential(trap_grid, t0, h):
    """Gradient-correction potential of the four-exponential scheme.

    Wtilde = |grad(W(., t0 + c3 h) - W(., t0 + c1 h))|^2 / 25920 with c1, c3
    the outer Gauss-Legendre nodes.  Pointwise nonnegative, O(h^2) as h -> 0
    (the node times merge), and identically zero for an isotropic in-plane
    trap.  The first and last stage phases of the scheme subtract h^2 times
    this field from their node-combined potential.
    """
    c = _tables.GAUSS3_NODES
    return trap_grid.gradient_difference_sq(t0 + c[2] * h,
                                            t0 + c[0] * h) / 25920.0


def gaussian_state(grid, widths):
    """prod_l exp(-widths_l^2 xi_l^2 / 2), the standard smooth test state."""
    if len(widths) != grid.dim:
        raise ValueError("one width per dimension required")
    xs = grid.coordinates()
    expo = 0.0
    for w, x in zip(widths, xs):
        expo = expo - 0.5 * (float(w) ** 2) * x * x
    return np.exp(expo).astype(np.complex128)


def vortex_state(grid):
    """(xi_1 + i xi_2) exp(-|xi|^2/2) / sqrt(pi): a unit-norm central vortex."""
    if grid.dim != 2:
        raise ValueError("the vortex state is two-dimensional")
    x1, x2 = grid.coordinates()
    r2 = x1 * x1 + x2 * x2
    psi = (x1 + 1j * x2) * np.exp(-0.5 * r2) / np.sqrt(np.pi)
    return np.ascontiguousarray(np.broadcast_to(psi, grid.sizes))
