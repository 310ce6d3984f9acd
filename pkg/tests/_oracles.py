"""Shared brute-force generators for the test suite."""
import numpy as np


def all_matrices(max_weight):
    """Every matrix with sum (i+j-1) a_ij <= max_weight, on the triangle of size max_weight."""
    cells = [(i, j) for i in range(max_weight) for j in range(max_weight) if i + j + 1 <= max_weight]

    def rec(k, budget, acc):
        if k == len(cells):
            yield dict(acc)
            return
        i, j = cells[k]
        w = i + j + 1
        for mult in range(budget // w + 1):
            if mult:
                acc[(i, j)] = mult
            yield from rec(k + 1, budget - mult * w, acc)
            acc.pop((i, j), None)

    for d in rec(0, max_weight, {}):
        a = np.zeros((max_weight, max_weight), dtype=np.int64)
        for (i, j), v in d.items():
            a[i, j] = v
        yield a
