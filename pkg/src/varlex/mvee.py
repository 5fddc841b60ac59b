"""Minimum-volume enclosing ellipsoid of a centrally symmetric point cloud.

Two routes to ``min -log det A  s.t.  x_i^T A x_i <= 1``:

* ``barrier``: Newton path-following on the d(d+1)/2 entries of A.  The
  duality gap in ``log det`` is ``k / t`` on the central path, so the result
  carries a certificate.
* ``khachiyan``: coordinate ascent on the design weights with away steps.
  Each step is cheap but convergence is sublinear when many points are
  nearly active, which is the typical situation for averaged-norm balls.
"""
from __future__ import annotations

import numpy as np


def _sym_basis(d):
    idx = [(a, b) for a in range(d) for b in range(a, d)]
    B = np.zeros((len(idx), d, d))
    for k, (a, b) in enumerate(idx):
        B[k, a, b] = B[k, b, a] = 1.0
    return B


def _barrier(X, tol, max_iter):
    k, d = X.shape
    B = _sym_basis(d)
    Phi = np.einsum("ia,kab,ib->ik", X, B, X)      # <x x^T, E_k>
    a = np.einsum("kab,ab->k", B, np.eye(d)) * 0.5 / max(1.0, float((X ** 2).sum(1).max()))
    a = np.where(np.einsum("kaa->k", B) > 0, a, 0.0)
    t = 1.0
    total = 0

    def feasible(a):
        A = np.einsum("k,kab->ab", a, B)
        return np.all(Phi @ a < 1) and np.linalg.eigvalsh(A)[0] > 0

    def value(a):
        A = np.einsum("k,kab->ab", a, B)
        return -t * np.linalg.slogdet(A)[1] - np.log(1 - Phi @ a).sum()

    while True:
        for _ in range(100):
            total += 1
            if total > max_iter:
                raise RuntimeError(f"MVEE did not converge in {max_iter} Newton steps")
            A = np.einsum("k,kab->ab", a, B)
            Ai = np.linalg.inv(A)
            c = 1 - Phi @ a
            grad = -t * np.einsum("ab,kba->k", Ai, B) + Phi.T @ (1 / c)
            AiB = np.einsum("ab,kbc->kac", Ai, B)
            H = t * np.einsum("kab,lba->kl", AiB, AiB) + (Phi / c[:, None] ** 2).T @ Phi
            step = -np.linalg.solve(H, grad)
            dec = float(-grad @ step)
            if dec / 2 <= 1e-10:
                break
            s = 1.0
            while not feasible(a + s * step):
                s *= 0.5
            f0 = value(a)
            # Armijo, with slack for rounding once t log det is large
            while value(a + s * step) > f0 - 0.25 * s * dec + 1e-12 * abs(f0) and s > 1e-10:
                s *= 0.5
            a = a + s * step
        if k / t <= tol:
            break
        t *= 8.0
    return np.einsum("k,kab->ab", a, B), total


def _khachiyan(X, tol, max_iter):
    k, d = X.shape
    u = np.full(k, 1.0 / k)
    for it in range(1, max_iter + 1):
        S = (X * u[:, None]).T @ X
        g = ((X @ np.linalg.inv(S)) * X).sum(axis=1)
        j = int(np.argmax(g))
        if g[j] <= d * (1 + tol):
            return np.linalg.inv(S) / d, it
        supp = np.flatnonzero(u > 0)
        i = supp[np.argmin(g[supp])]
        if g[j] - d >= d - g[i]:
            step = (g[j] - d) / (d * (g[j] - 1))
            u *= 1 - step
            u[j] += step
        else:
            drop = u[i] / (1 - u[i])
            step = drop if g[i] <= 1 else min((d - g[i]) / (d * (g[i] - 1)), drop)
            u *= 1 + step
            u[i] = 0.0 if step == drop else u[i] - step
    raise RuntimeError(f"MVEE did not converge in {max_iter} iterations")


def centered_mvee(points, tol=1e-6, max_iter=10_000, method="barrier"):
    """Smallest origin-centered ellipsoid ``{x : x^T A x <= 1}`` containing the rows of ``points``.

    ``tol`` bounds the ``log det`` optimality gap (barrier) or the excess
    ``max x^T S^-1 x / d - 1`` (khachiyan).  Returns ``(A, iterations)`` with
    every point inside.  Raises ``RuntimeError`` at the iteration cap.
    """
    X = np.asarray(points, dtype=float)
    scale = float(np.sqrt((X ** 2).sum(1).max()))
    if scale == 0:
        raise ValueError("points must not all vanish")
    Xs = X / scale
    if method == "barrier":
        A, it = _barrier(Xs, tol, max_iter)
    elif method == "khachiyan":
        A, it = _khachiyan(Xs, tol, max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    A = 0.5 * (A + A.T) / scale ** 2
    worst = float(np.max(((X @ A) * X).sum(axis=1)))
    if worst > 1:
        A = A / worst
    return A, it


def sqrtm_spd(A):
    w, V = np.linalg.eigh(A)
    return (V * np.sqrt(np.maximum(w, 0))) @ V.T
