"""Deterministic reductions.

Every mass, residual, and curve in the package is accumulated here.  Sums run
on a fixed pairwise tree over fixed-size chunks, so the floating-point result
is a pure function of the operand array; the worker count only decides how
many threads evaluate chunk partial sums and never changes the tree shape.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 4096


def _pairwise(a: np.ndarray) -> np.ndarray:
    # collapse axis 0 to length 1 by repeatedly adding fixed adjacent pairs
    while a.shape[0] > 1:
        n2 = a.shape[0] // 2
        head = a[: 2 * n2 : 2] + a[1 : 2 * n2 : 2]
        if a.shape[0] % 2:
            a = np.concatenate([head, a[2 * n2 :]], axis=0)
        else:
            a = head
    return a


def tree_sum(values, workers: int = 1):
    """Sum an array along its leading axis on a fixed pairwise tree.

    Parameters
    ----------
    values : array_like
        Operands; the reduction runs over axis 0.
    workers : int
        Threads used for chunk partial sums.  Partial results are combined
        in chunk order, so any worker count yields bit-identical output.

    Returns
    -------
    float or numpy.ndarray
        Scalar for 1-d input, otherwise an array of the trailing shape.
    """
    a = np.ascontiguousarray(values, dtype=float)
    if a.shape[0] == 0:
        zero = np.zeros(a.shape[1:], dtype=float)
        return float(zero) if zero.ndim == 0 else zero
    chunks = [a[i : i + CHUNK] for i in range(0, a.shape[0], CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            partials = list(pool.map(lambda c: _pairwise(c)[0], chunks))
    else:
        partials = [_pairwise(c)[0] for c in chunks]
    out = _pairwise(np.stack(partials, axis=0))[0]
    return float(out) if out.ndim == 0 else out
