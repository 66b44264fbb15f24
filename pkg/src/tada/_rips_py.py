"""Pure-Python Vietoris-Rips persistence kernel.

Mirrors ``_rips.pyx`` step for step; used when the compiled extension is
missing or when ``TADA_FORCE_PYTHON`` is set.
"""

from itertools import combinations

import numpy as np


def _simplices(weights, n, dim, vertex_value):
    """k-simplices of the clique complex sorted by (value, lexicographic position)."""
    verts = list(combinations(range(n), dim + 1))
    if dim == 0:
        values = [vertex_value] * n
    else:
        values = [max(weights[a][b] for a, b in combinations(s, 2)) for s in verts]
    order = sorted(range(len(verts)), key=lambda i: (values[i], i))
    sorted_verts = [verts[i] for i in order]
    sorted_values = [values[i] for i in order]
    rank = {s: r for r, s in enumerate(sorted_verts)}
    return sorted_verts, sorted_values, rank


def rips_pairs(weights, max_dim, vertex_value=0.0):
    """Persistence pairs of the clique filtration, orders ``0 .. max_dim - 1``.

    Returns one ``(births, deaths, essential_births)`` triple of float arrays
    per order. Zero-length pairs are included; the caller filters them.
    """
    w = np.asarray(weights, dtype=np.float64).tolist()
    n = len(w)
    levels = [_simplices(w, n, k, vertex_value) for k in range(max_dim + 1)]

    pairs = [([], []) for _ in range(max_dim)]
    is_low = [None] * (max_dim + 1)      # is_low[k][r]: k-simplex r is a pivot of reduced d_{k+1}
    negative = [None] * (max_dim + 1)    # negative[k][r]: column r of d_k is nonzero after reduction
    negative[0] = [False] * n

    for k in range(max_dim, 0, -1):
        verts, values, _ = levels[k]
        _, face_values, face_rank = levels[k - 1]
        clear = is_low[k] if is_low[k] is not None else [False] * len(verts)
        pivot_col = {}
        neg = [False] * len(verts)
        for j, simplex in enumerate(verts):
            if clear[j]:
                continue
            col = {face_rank[f] for f in combinations(simplex, k)}
            while col:
                low = max(col)
                other = pivot_col.get(low)
                if other is None:
                    break
                col ^= other
            if col:
                low = max(col)
                pivot_col[low] = col
                neg[j] = True
                pairs[k - 1][0].append(face_values[low])
                pairs[k - 1][1].append(values[j])
        negative[k] = neg
        low_mask = [False] * len(face_values)
        for r in pivot_col:
            low_mask[r] = True
        is_low[k - 1] = low_mask

    out = []
    for d in range(max_dim):
        values = levels[d][1]
        ess = [values[r] for r in range(len(values)) if not is_low[d][r] and not negative[d][r]]
        births, deaths = pairs[d]
        out.append((np.array(births, dtype=np.float64),
                    np.array(deaths, dtype=np.float64),
                    np.array(ess, dtype=np.float64)))
    return out
