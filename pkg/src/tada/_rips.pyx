# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Vietoris-Rips persistence kernel.

Same contract as ``_rips_py.rips_pairs``: Z/2 column reduction of the clique
filtration, top dimension first with clearing. The whole reduction runs
without the GIL so windows can be processed from a thread pool.
"""

from libcpp.vector cimport vector
from libcpp.pair cimport pair
from libcpp.algorithm cimport sort

import numpy as np

ctypedef pair[double, long long] keyed_t


cdef struct Level:
    int dim
    long long count
    vector[double] values       # by filtration rank
    vector[int] verts           # by filtration rank, (dim+1) entries each
    vector[long long] rank_of   # colex index -> filtration rank


cdef long long _colex(const int* v, int nv, const vector[vector[long long]]& binom) noexcept nogil:
    cdef long long idx = 0
    cdef int i
    for i in range(nv):
        idx += binom[v[i]][i + 1]
    return idx


cdef void _build_level(Level* lev, const double* w, int n, int dim, double vertex_value,
                       const vector[vector[long long]]& binom) noexcept nogil:
    cdef int nv = dim + 1
    cdef long long count = binom[n][nv]
    cdef vector[int] lex_verts
    cdef vector[keyed_t] keyed
    cdef int c[8]
    cdef int i, a, b
    cdef long long pos = 0, r
    cdef double val
    lev.dim = dim
    lev.count = count
    lex_verts.resize(count * nv)
    keyed.resize(count)
    for i in range(nv):
        c[i] = i
    while True:
        if dim == 0:
            val = vertex_value
        else:
            val = w[c[0] * n + c[1]]
            for a in range(nv):
                for b in range(a + 1, nv):
                    if w[c[a] * n + c[b]] > val:
                        val = w[c[a] * n + c[b]]
        for i in range(nv):
            lex_verts[pos * nv + i] = c[i]
        keyed[pos] = keyed_t(val, pos)
        pos += 1
        i = nv - 1
        while i >= 0 and c[i] == n - nv + i:
            i -= 1
        if i < 0:
            break
        c[i] += 1
        for a in range(i + 1, nv):
            c[a] = c[a - 1] + 1
    sort(keyed.begin(), keyed.end())
    lev.values.resize(count)
    lev.verts.resize(count * nv)
    lev.rank_of.resize(count)
    for r in range(count):
        pos = keyed[r].second
        lev.values[r] = keyed[r].first
        for i in range(nv):
            lev.verts[r * nv + i] = lex_verts[pos * nv + i]
        lev.rank_of[_colex(&lex_verts[pos * nv], nv, binom)] = r


cdef void _symdiff(vector[int]& col, const vector[int]& other, vector[int]& scratch) noexcept nogil:
    cdef size_t i = 0, j = 0
    scratch.clear()
    while i < col.size() and j < other.size():
        if col[i] < other[j]:
            scratch.push_back(col[i])
            i += 1
        elif col[i] > other[j]:
            scratch.push_back(other[j])
            j += 1
        else:
            i += 1
            j += 1
    while i < col.size():
        scratch.push_back(col[i])
        i += 1
    while j < other.size():
        scratch.push_back(other[j])
        j += 1
    col.swap(scratch)


cdef void _reduce(const Level* top, const Level* faces, const vector[char]& clear,
                  vector[char]& negative, vector[char]& low_mask,
                  vector[double]& births, vector[double]& deaths,
                  const vector[vector[long long]]& binom) noexcept nogil:
    cdef int k = top.dim
    cdef int nv = k + 1
    cdef long long j, r, low
    cdef int i, a, m
    cdef int face[8]
    cdef vector[long long] pivot_col
    cdef vector[vector[int]] reduced
    cdef vector[int] col, scratch
    pivot_col.assign(faces.count, -1)
    negative.assign(top.count, 0)
    for j in range(top.count):
        if clear.size() and clear[j]:
            continue
        col.clear()
        for i in range(nv):
            m = 0
            for a in range(nv):
                if a != i:
                    face[m] = top.verts[j * nv + a]
                    m += 1
            col.push_back(<int>faces.rank_of[_colex(face, k, binom)])
        sort(col.begin(), col.end())
        while col.size():
            low = col.back()
            if pivot_col[low] < 0:
                break
            _symdiff(col, reduced[pivot_col[low]], scratch)
        if col.size():
            low = col.back()
            pivot_col[low] = reduced.size()
            reduced.push_back(col)
            negative[j] = 1
            births.push_back(faces.values[low])
            deaths.push_back(top.values[j])
    low_mask.assign(faces.count, 0)
    for r in range(faces.count):
        if pivot_col[r] >= 0:
            low_mask[r] = 1


cdef void _run(const double* w, int n, int max_dim, double vertex_value,
               vector[vector[double]]& births, vector[vector[double]]& deaths,
               vector[vector[double]]& essential) noexcept nogil:
    cdef vector[vector[long long]] binom
    cdef vector[Level] levels
    cdef vector[vector[char]] is_low, negative
    cdef int i, j, k, d
    cdef long long r
    binom.resize(n + 1)
    for i in range(n + 1):
        binom[i].assign(max_dim + 2, 0)
        binom[i][0] = 1
        for j in range(1, max_dim + 2):
            if i > 0:
                binom[i][j] = binom[i - 1][j - 1] + binom[i - 1][j]
    levels.resize(max_dim + 1)
    for k in range(max_dim + 1):
        _build_level(&levels[k], w, n, k, vertex_value, binom)
    is_low.resize(max_dim + 1)
    negative.resize(max_dim + 1)
    negative[0].assign(n, 0)
    births.resize(max_dim)
    deaths.resize(max_dim)
    essential.resize(max_dim)
    for k in range(max_dim, 0, -1):
        _reduce(&levels[k], &levels[k - 1], is_low[k], negative[k], is_low[k - 1],
                births[k - 1], deaths[k - 1], binom)
    for d in range(max_dim):
        for r in range(levels[d].count):
            if not is_low[d][r] and not negative[d][r]:
                essential[d].push_back(levels[d].values[r])


def rips_pairs(weights, int max_dim, double vertex_value=0.0):
    """Persistence pairs of the clique filtration, orders ``0 .. max_dim - 1``.

    Returns one ``(births, deaths, essential_births)`` triple per order.
    """
    cdef const double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int n = w.shape[0]
    cdef vector[vector[double]] births, deaths, essential
    if max_dim < 1 or max_dim + 1 > 8 or max_dim + 1 > n:
        raise ValueError(f"max_dim={max_dim} unsupported for {n} vertices")
    with nogil:
        _run(&w[0, 0], n, max_dim, vertex_value, births, deaths, essential)
    return [
        (np.array(births[d], dtype=np.float64),
         np.array(deaths[d], dtype=np.float64),
         np.array(essential[d], dtype=np.float64))
        for d in range(max_dim)
    ]
