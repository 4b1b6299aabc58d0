"""Finite-dimensional model of partial-sum and coordinate-scaling operators.

Vectors live in R^N with the max-coordinate norm. ``S_n`` keeps the first n
coordinates; ``I_n`` divides coordinate n by n. For a fixed decaying x,
``S_n x -> x`` and ``I_n x -> x`` as n grows, while the inverses ``I_n^{-1}``
have norm exactly n: strong convergence of operators does not carry over to
their inverses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_DIMENSION = 64


class RangeError(ValueError):
    pass


@dataclass(frozen=True)
class TruncatedSpace:
    N: int = DEFAULT_DIMENSION

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("dimension must be at least 2")

    def norm(self, x) -> float:
        return float(np.max(np.abs(x)))

    def basis(self, k: int) -> np.ndarray:
        """k-th canonical vector, 1-based."""
        _check_index(k, self.N)
        e = np.zeros(self.N)
        e[k - 1] = 1.0
        return e

    def geometric(self, ratio: float = 0.5) -> np.ndarray:
        return ratio ** np.arange(self.N)


def _check_index(n: int, N: int) -> None:
    if not 1 <= n <= N:
        raise RangeError(f"index {n} outside 1..{N}")


def partial_sum(x, n: int) -> np.ndarray:
    """S_n x: coordinates 1..n kept, the rest zeroed."""
    x = np.asarray(x, dtype=float)
    _check_index(n, len(x))
    out = np.zeros_like(x)
    out[:n] = x[:n]
    return out


def partial_sum_matrix(n: int, N: int) -> np.ndarray:
    _check_index(n, N)
    return np.diag((np.arange(1, N + 1) <= n).astype(float))


def induced_norm(T: np.ndarray) -> float:
    """Operator norm for the max-coordinate norm: largest absolute row sum."""
    return float(np.abs(T).sum(axis=1).max())


@dataclass(frozen=True)
class BlowupPair:
    I: np.ndarray
    I_inv: np.ndarray
    inverse_norm: float


def inverse_blowup_pair(n: int, N: int = DEFAULT_DIMENSION) -> BlowupPair:
    """I_n (coordinate n scaled by 1/n), its inverse and the norm of the inverse."""
    _check_index(n, N)
    d = np.ones(N)
    d[n - 1] = 1.0 / n
    d_inv = np.ones(N)
    d_inv[n - 1] = float(n)
    I_inv = np.diag(d_inv)
    return BlowupPair(np.diag(d), I_inv, induced_norm(I_inv))


@dataclass
class DemoRow:
    n: int
    partial_sum_gap: float  # ||S_n x - x||
    scaling_gap: float  # ||I_n x - x||
    inverse_norm: float  # ||I_n^{-1}||
    finite_rank_gap: float  # ||T S_n x - T x||


def demo_table(N: int = DEFAULT_DIMENSION, ratio: float = 0.5, seed: int = 0) -> list[DemoRow]:
    space = TruncatedSpace(N)
    x = space.geometric(ratio)
    T = np.random.default_rng(seed).standard_normal((N, N))
    rows = []
    for n in range(1, N + 1):
        pair = inverse_blowup_pair(n, N)
        Sx = partial_sum(x, n)
        rows.append(DemoRow(n, space.norm(Sx - x), space.norm(pair.I @ x - x), pair.inverse_norm,
                            space.norm(T @ Sx - T @ x)))
    return rows


def format_table(rows: list[DemoRow]) -> str:
    lines = [f"{'n':>4} {'|S_n x - x|':>14} {'|I_n x - x|':>14} {'|I_n^-1|':>10} {'|T S_n x - T x|':>16}"]
    for r in rows:
        lines.append(f"{r.n:>4d} {r.partial_sum_gap:>14.6e} {r.scaling_gap:>14.6e} "
                     f"{r.inverse_norm:>10.1f} {r.finite_rank_gap:>16.6e}")
    return "\n".join(lines)
