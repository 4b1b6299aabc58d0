"""Dormand-Prince 5(4) integration of linear systems X' + A(t) X = G(t).

For a linear right-hand side one explicit Runge-Kutta step is an affine map
X -> R X + S whose matrices depend only on A and G at the stage times. All
panel propagators of a grid are therefore built in one batched pass; the
solution is then propagated panel by panel. Panels whose embedded error
estimate exceeds the tolerance are split into 2, 4, 8, ... equal substeps
until every substep passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
A_TAB = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# b5 - b4, last entry weights the FSAL stage
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

MAX_LEVEL = 20


class IntegrationError(RuntimeError):
    pass


@dataclass
class IntegrationResult:
    grid: np.ndarray
    values: np.ndarray  # (G, dim, cols)
    max_error: float  # largest embedded error estimate, absolute
    max_scaled_error: float  # largest estimate relative to tol-scaled size
    subdivided_panels: int


def _eval_stages(fn, t0: np.ndarray, h: np.ndarray):
    T = (t0[:, None] + h[:, None] * C[None, :]).ravel()
    vals = fn.derivs(T, 0)
    return vals.reshape((len(t0), len(C)) + vals.shape[1:])


def _propagators(A, forcing, t0: np.ndarray, h: np.ndarray, cols: int, p: int):
    """Batched affine step maps (R, S) and error maps (ER, ES) for panels [t0, t0+h]."""
    K = len(t0)
    As = _eval_stages(A, t0, h)  # (K, 6, d, d)
    d = As.shape[-1]
    hh = h[:, None, None]
    eye = np.broadcast_to(np.eye(d), (K, d, d))
    kR = []
    for s in range(6):
        inc = eye.copy()
        for j, a in enumerate(A_TAB[s]):
            if a:
                inc = inc + hh * a * kR[j]
        kR.append(-As[:, s] @ inc)
    R = eye + hh * sum(B5[s] * kR[s] for s in range(6) if B5[s])
    k7 = -As[:, 5] @ R
    ER = hh * (sum(E[s] * kR[s] for s in range(6) if E[s]) + E[6] * k7)
    if forcing is None or p == 0:
        return R, None, ER, None
    Gs = _eval_stages(forcing, t0, h)  # (K, 6, d) or (K, 6, d, p)
    if Gs.ndim == 3:
        Gs = Gs[..., None]
    kS = []
    for s in range(6):
        inc = 0
        for j, a in enumerate(A_TAB[s]):
            if a:
                inc = inc + hh * a * kS[j]
        stage = Gs[:, s] if np.ndim(inc) == 0 else Gs[:, s] - As[:, s] @ inc
        kS.append(stage)
    S = hh * sum(B5[s] * kS[s] for s in range(6) if B5[s])
    k7 = Gs[:, 5] - As[:, 5] @ S
    ES = hh * (sum(E[s] * kS[s] for s in range(6) if E[s]) + E[6] * k7)
    return R, S, ER, ES


def _pad(S: np.ndarray | None, cols: int) -> np.ndarray | None:
    if S is None:
        return None
    out = np.zeros(S.shape[:-1] + (cols,), dtype=S.dtype)
    out[..., cols - S.shape[-1]:] = S
    return out


def _errors(X: np.ndarray, Xn: np.ndarray, ER, ES, tol: float):
    err = ER @ X
    if ES is not None:
        err = err + ES
    scale = tol * (1.0 + np.maximum(np.abs(X), np.abs(Xn)))
    scaled = np.abs(err) / scale
    return np.abs(err).reshape(len(X), -1).max(axis=1), scaled.reshape(len(X), -1).max(axis=1)


def _propagate(X0: np.ndarray, R: np.ndarray, S: np.ndarray | None) -> np.ndarray:
    out = np.empty((len(R) + 1,) + X0.shape, dtype=np.result_type(X0, R))
    out[0] = X0
    X = X0
    for i in range(len(R)):
        X = R[i] @ X
        if S is not None:
            X = X + S[i]
        out[i + 1] = X
    return out


def integrate_linear(A, grid: np.ndarray, X0: np.ndarray, forcing=None, tol: float = 1e-10) -> IntegrationResult:
    """Integrate X' + A X = [0 | G] across ``grid`` from X(grid[0]) = X0.

    ``forcing`` (optional) is a function of t with values of shape (dim,) or
    (dim, p); it drives the last p columns of X.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    grid = np.asarray(grid, dtype=float)
    X0 = np.asarray(X0)
    if X0.ndim == 1:
        X0 = X0[:, None]
    cols = X0.shape[1]
    p = 0
    if forcing is not None:
        p = 1 if len(forcing.shape) == 1 else forcing.shape[1]
    t0, h = grid[:-1], np.diff(grid)
    R, S, ER, ES = _propagators(A, forcing, t0, h, cols, p)
    S, ES = _pad(S, cols), _pad(ES, cols)
    if not (np.all(np.isfinite(R)) and (S is None or np.all(np.isfinite(S)))):
        raise IntegrationError("non-finite values while building step maps")

    X = _propagate(X0, R, S)
    abs_err, scaled = _errors(X[:-1], X[1:], ER, ES, tol)
    bad = np.flatnonzero(scaled > 1.0)
    max_abs, max_scaled = (float(abs_err.max()), float(scaled.max())) if len(abs_err) else (0.0, 0.0)
    if len(bad):
        R, S = R.copy(), (None if S is None else S.copy())
        Rb, Sb, ea, es = _refine_panels(A, forcing, t0[bad], h[bad], X[bad], cols, p, tol)
        R[bad] = Rb
        if S is not None:
            S[bad] = Sb
        abs_err[bad], scaled[bad] = ea, es
        X = _propagate(X0, R, S)
        max_abs, max_scaled = float(abs_err.max()), float(scaled.max())
    if not np.all(np.isfinite(X)):
        raise IntegrationError("solution became non-finite")
    return IntegrationResult(grid, X, max_abs, max_scaled, int(len(bad)))


def _refine_panels(A, forcing, t0: np.ndarray, h: np.ndarray, Xstart: np.ndarray,
                   cols: int, p: int, tol: float):
    """Split panels into 2^level equal substeps until every substep passes.

    Returns the composed step maps and error estimates for each panel.
    """
    K = len(t0)
    d = Xstart.shape[1]
    R_out = np.empty((K, d, d))
    S_out = np.empty((K, d, cols)) if forcing is not None and p else None
    abs_out, scaled_out = np.empty(K), np.empty(K)
    todo = np.arange(K)
    for level in range(1, MAX_LEVEL + 1):
        k = 2**level
        hs = np.repeat(h[todo] / k, k)
        ts = np.repeat(t0[todo], k) + hs * np.tile(np.arange(k), len(todo))
        R, S, ER, ES = _propagators(A, forcing, ts, hs, cols, p)
        shape = (len(todo), k)
        R, ER = R.reshape(shape + R.shape[1:]), ER.reshape(shape + ER.shape[1:])
        S, ES = _pad(S, cols), _pad(ES, cols)
        if S is not None:
            S, ES = S.reshape(shape + S.shape[1:]), ES.reshape(shape + ES.shape[1:])
        X = Xstart[todo]
        Rt = np.broadcast_to(np.eye(d), (len(todo), d, d)).copy()
        St = np.zeros_like(X) if S is not None else None
        worst_abs = np.zeros(len(todo))
        worst_scaled = np.zeros(len(todo))
        for i in range(k):
            Xn = R[:, i] @ X + (S[:, i] if S is not None else 0)
            ea, es = _errors(X, Xn, ER[:, i], None if ES is None else ES[:, i], tol)
            worst_abs, worst_scaled = np.maximum(worst_abs, ea), np.maximum(worst_scaled, es)
            Rt = R[:, i] @ Rt
            if S is not None:
                St = R[:, i] @ St + S[:, i]
            X = Xn
        if not np.all(np.isfinite(X)):
            raise IntegrationError(f"non-finite values near t = {t0[todo][0]}")
        ok = worst_scaled <= 1.0
        done = todo[ok]
        R_out[done] = Rt[ok]
        if S_out is not None:
            S_out[done] = St[ok]
        abs_out[done], scaled_out[done] = worst_abs[ok], worst_scaled[ok]
        todo = todo[~ok]
        if len(todo) == 0:
            return R_out, S_out, abs_out, scaled_out
    raise IntegrationError(f"step size underflow near t = {t0[todo][0]} (step {h[todo][0] / 2**MAX_LEVEL:.3e})")
