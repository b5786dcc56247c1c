"""Pearson-normalized Mantel permutation test between two labeled distance
matrices.

The statistic is the Pearson correlation of the strict upper triangles. The
null distribution permutes one matrix's rows and columns jointly; because the
upper-triangle multiset is invariant under such permutations, each permuted
correlation reduces to a single dot product against the centered reference
vector. Exhaustive enumeration replaces sampling when n! fits in the
permutation budget, which removes Monte-Carlo noise entirely for small n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .distances import DistanceMatrix
from .errors import DataError
from ._parallel import parallel_chunks

_CHUNK = 512


class Tail(str, Enum):
    GREATER = "greater"
    LESS = "less"
    TWO_SIDED = "two-sided"


@dataclass(frozen=True)
class MantelResult:
    r: float
    p_value: float
    permutations: int
    seed: int
    tail: Tail
    exhaustive: bool

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "p_value": self.p_value,
            "permutations": self.permutations,
            "seed": self.seed,
            "tail": self.tail.value,
            "exhaustive": self.exhaustive,
        }


def upper_triangle(m: DistanceMatrix) -> np.ndarray:
    """Row-major strict upper triangle, length n(n-1)/2."""
    values = np.asarray(m.values, dtype=np.float64)
    if np.max(np.abs(values - values.T), initial=0.0) > 1e-12:
        raise DataError("matrix is asymmetric beyond 1e-12")
    iu = np.triu_indices(len(m.labels), k=1)
    return values[iu]


def pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    """Sample Pearson correlation; raises on zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"vectors must have equal 1-D shape, got {x.shape} vs {y.shape}")
    if len(x) < 3:
        raise DataError("pearson correlation needs at least 3 observations")
    xm = x - x.mean()
    ym = y - y.mean()
    nx = float(np.sqrt(xm @ xm))
    ny = float(np.sqrt(ym @ ym))
    if nx == 0.0 or ny == 0.0:
        raise DataError("constant input: correlation undefined (zero variance)")
    return float(min(1.0, max(-1.0, float(xm @ ym) / (nx * ny))))


def _tail_hit(perm_r: float, observed: float, tail: Tail) -> bool:
    if tail is Tail.GREATER:
        return perm_r >= observed
    if tail is Tail.LESS:
        return perm_r <= observed
    return abs(perm_r) >= abs(observed)


def _perm_stat(
    b_values: np.ndarray,
    perm: np.ndarray,
    iu: tuple[np.ndarray, np.ndarray],
    xm: np.ndarray,
    denom: float,
) -> float:
    """Correlation of xm against the upper triangle of one permuted B.

    Uses the invariance of the triangle's mean and norm under joint
    row+column permutation: r = dot(xm, y_perm) / (|xm| |ym|). The observed
    statistic goes through this same path (identity permutation), so tie
    comparison against it is exact.
    """
    y_perm = b_values[perm[iu[0]], perm[iu[1]]]
    return float(min(1.0, max(-1.0, float(np.dot(y_perm, xm)) / denom)))


def _sampled_perm(seed: int, index: int, n: int) -> np.ndarray:
    """Permutation from a counter-based stream keyed on (seed, index);
    independent of evaluation order and scheduling."""
    key = np.array([seed, index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.permutation(n)


def mantel_test(
    a: DistanceMatrix,
    b: DistanceMatrix,
    permutations: int = 10_000,
    seed: int = 0,
    tail: Tail = Tail.GREATER,
    exhaustive: bool | None = None,
    threads: int = 1,
) -> MantelResult:
    """Mantel test of A against B (same labels, same order).

    `exhaustive=None` auto-selects exhaustive enumeration when n! is within
    the permutation budget; the sampled p-value uses +1 smoothing and never
    reports 0.
    """
    if a.labels != b.labels:
        only_a = sorted(set(a.labels) - set(b.labels))
        only_b = sorted(set(b.labels) - set(a.labels))
        if only_a or only_b:
            raise DataError(
                f"label mismatch: only in first {only_a}, only in second {only_b}"
            )
        raise DataError(
            f"label order differs: {a.labels} vs {b.labels}; align before testing"
        )
    n = len(a.labels)
    if n < 4:
        raise DataError(f"mantel test needs at least 4 labels, got {n}")
    if permutations < 1:
        raise DataError("permutations must be positive")

    x = upper_triangle(a)
    y = upper_triangle(b)
    r_value = pearson_r(x, y)

    xm = x - x.mean()
    x_norm = float(np.sqrt(xm @ xm))
    ym = y - y.mean()
    y_norm = float(np.sqrt(ym @ ym))
    denom = x_norm * y_norm
    iu = np.triu_indices(n, k=1)
    b_values = np.asarray(b.values, dtype=np.float64)
    # Tie comparisons use the statistic computed on the same path as the
    # permuted values, so the identity permutation always counts as a hit.
    observed = _perm_stat(b_values, np.arange(n, dtype=np.intp), iu, xm, denom)

    n_fact = math.factorial(n)
    use_exhaustive = exhaustive if exhaustive is not None else n_fact <= permutations

    if use_exhaustive:
        if n_fact > 10_000_000:
            raise DataError(f"exhaustive enumeration infeasible for n={n} ({n_fact} permutations)")
        hits = sum(
            _tail_hit(_perm_stat(b_values, np.asarray(perm, dtype=np.intp), iu, xm, denom),
                      observed, tail)
            for perm in itertools.permutations(range(n))
        )
        return MantelResult(
            r=r_value,
            p_value=hits / n_fact,
            permutations=n_fact,
            seed=seed,
            tail=tail,
            exhaustive=True,
        )

    def evaluate(chunk: range) -> int:
        return sum(
            _tail_hit(_perm_stat(b_values, _sampled_perm(seed, i, n), iu, xm, denom),
                      observed, tail)
            for i in chunk
        )

    chunks = [
        range(start, min(start + _CHUNK, permutations))
        for start in range(0, permutations, _CHUNK)
    ]
    hits = sum(parallel_chunks(evaluate, chunks, threads))
    return MantelResult(
        r=r_value,
        p_value=(hits + 1) / (permutations + 1),
        permutations=permutations,
        seed=seed,
        tail=tail,
        exhaustive=False,
    )
