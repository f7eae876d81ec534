"""Laplacian eigendecomposition and root finding for delay characteristic polynomials.

The symmetric eigensolver is a cyclic Jacobi iteration and the root finder is
the Durand-Kerner (Weierstrass) simultaneous iteration; neither relies on an
external linear-algebra routine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
DK_TOL = 1e-12
DK_MAX_ITER = 10_000
DK_ANGLE_OFFSET = 0.4


def jacobi_eigh(a: np.ndarray, tol: float = JACOBI_TOL,
                max_sweeps: int = JACOBI_MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of a real symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : (n, n) array
        Symmetric input; it is not modified.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm drops below
        ``tol * max(1, ||a||_F)``.
    max_sweeps : int
        Budget of full cyclic sweeps.

    Returns
    -------
    w : (n,) array
        Eigenvalues in ascending order.
    v : (n, n) array
        Orthonormal eigenvectors as columns, ordered like ``w``.

    Raises
    ------
    NoConvergence
        If the budget is exhausted before the off-diagonal norm is small enough.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("jacobi_eigh needs a square matrix")
    v = np.eye(n)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))

    def off_norm(m: np.ndarray) -> float:
        off = m - np.diag(np.diag(m))
        return float(np.linalg.norm(off))

    for _ in range(max_sweeps + 1):
        if off_norm(a) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) + 100.0 * abs(apq) == abs(h):
                    t = apq / h  # theta^2 would overflow
                else:
                    theta = h / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise NoConvergence(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


@dataclass(frozen=True)
class Spectrum:
    """Ascending Laplacian eigenvalues and the orthonormal transform ``T``.

    Column 0 of ``vectors`` is exactly ``ones / sqrt(n)``; the remaining
    columns (``R``) are the eigenvectors of the nonzero part of the spectrum.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1]) if self.n > 1 else 0.0

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def nonzero(self) -> np.ndarray:
        """Eigenvalues of modes 2..N (the disagreement modes)."""
        return self.eigenvalues[1:]

    @property
    def R(self) -> np.ndarray:
        return self.vectors[:, 1:]

    def is_connected(self, tol: float = 1e-9) -> bool:
        return self.n == 1 or self.lambda2 > tol


def _sign_normalize(v: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    for j in range(v.shape[1]):
        nz = np.flatnonzero(np.abs(v[:, j]) > tol)
        if nz.size and v[nz[0], j] < 0:
            v[:, j] = -v[:, j]
    return v


def eigendecompose(lap: np.ndarray) -> Spectrum:
    """Diagonalize a Laplacian into ``T^T L T = Diag(0, lambda_2, ..., lambda_N)``."""
    lap = np.asarray(lap, dtype=float)
    if not np.array_equal(lap, lap.T):
        raise ValueError("Laplacian must be symmetric")
    n = lap.shape[0]
    w, v = jacobi_eigh(lap)
    ones = np.full(n, 1.0 / math.sqrt(n))

    # Pick the near-null eigenvector best aligned with 1 and move it to the front.
    scale = max(1.0, float(np.abs(w).max()))
    null_idx = np.flatnonzero(np.abs(w) <= 1e-9 * scale)
    lead = int(null_idx[np.argmax(np.abs(ones @ v[:, null_idx]))]) if null_idx.size else 0
    order = [lead] + [k for k in range(n) if k != lead]
    w = w[order]
    v = v[:, order]

    t = np.empty_like(v)
    t[:, 0] = ones
    for j in range(1, n):
        col = v[:, j].copy()
        for _ in range(2):  # twice is enough for orthogonality at machine precision
            col -= t[:, :j] @ (t[:, :j].T @ col)
        col /= np.linalg.norm(col)
        t[:, j] = col
    t = _sign_normalize(t)
    t[:, 0] = ones

    # Re-sort the tail ascending; the zero mode stays in front.
    tail = 1 + np.argsort(w[1:], kind="stable")
    w = np.concatenate([[w[0]], w[tail]])
    t = np.concatenate([t[:, :1], t[:, tail]], axis=1)
    w.setflags(write=False)
    t.setflags(write=False)
    return Spectrum(eigenvalues=w, vectors=t)


@dataclass(frozen=True)
class PolyRoots:
    """Roots of a real monic polynomial, coefficients highest degree first."""

    coefficients: np.ndarray
    roots: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def max_modulus(self) -> float:
        return float(np.abs(self.roots).max()) if self.roots.size else 0.0


def durand_kerner(coefficients, radius: float | None = None, tol: float = DK_TOL,
                  max_iter: int = DK_MAX_ITER) -> np.ndarray:
    """All complex roots of a polynomial by Weierstrass simultaneous iteration.

    Starting points sit on a circle of ``radius`` (Cauchy bound by default)
    rotated by 0.4 rad. Iteration stops when the largest correction falls
    below ``tol`` (relative to root size) or when every residual is at the
    rounding level of the polynomial evaluation, which is what terminates
    the linearly convergent iteration near a multiple root.
    """
    a = np.asarray(coefficients, dtype=complex)
    if a.ndim != 1 or a.size < 2 or a[0] == 0:
        raise ValueError("need a polynomial of degree >= 1 with nonzero leading coefficient")
    a = a / a[0]
    deg = a.size - 1
    if deg == 1:
        return np.array([-a[1]])
    if radius is None:
        radius = 1.0 + float(np.abs(a[1:]).max())
    abs_a = np.abs(a)
    eps = np.finfo(float).eps
    z = radius * np.exp(1j * (DK_ANGLE_OFFSET + 2.0 * np.pi * np.arange(deg) / deg))
    for _ in range(max_iter):
        z_old = z.copy()
        for i in range(deg):
            diff = z[i] - np.delete(z, i)
            denom = np.prod(diff)
            if denom == 0:
                denom = eps
            z[i] = z[i] - np.polyval(a, z[i]) / denom
        step = np.abs(z - z_old)
        if np.all(step <= tol * np.maximum(1.0, np.abs(z))):
            return z
        resid = np.abs(np.polyval(a, z))
        bound = 4.0 * deg * eps * np.polyval(abs_a, np.abs(z))
        if np.all(resid <= bound):
            return z
    raise NoConvergence(f"Durand-Kerner did not converge in {max_iter} iterations")


def poly_roots(coefficients, radius: float | None = None) -> PolyRoots:
    a = np.asarray(coefficients, dtype=float)
    a = a / a[0]
    return PolyRoots(coefficients=a, roots=durand_kerner(a, radius=radius))


def delay_polynomial(delta_lambda: float, d: int) -> np.ndarray:
    """Coefficients of ``s^(d+1) - s^d + delta_lambda``, highest degree first."""
    if d < 0:
        raise ValueError(f"delay must be >= 0, got {d}")
    coeffs = np.zeros(d + 2)
    coeffs[0] = 1.0
    coeffs[1] = -1.0
    coeffs[-1] += delta_lambda
    return coeffs


def poly_roots_delay(delta_lambda: float, d: int) -> PolyRoots:
    """Roots of the per-mode characteristic polynomial of the delayed iteration."""
    if not delta_lambda > 0:
        raise ValueError(f"delta*lambda must be positive, got {delta_lambda}")
    coeffs = delay_polynomial(delta_lambda, d)
    radius = max(1.0, 2.0 * delta_lambda ** (1.0 / (d + 1)))
    return PolyRoots(coefficients=coeffs, roots=durand_kerner(coeffs, radius=radius))
