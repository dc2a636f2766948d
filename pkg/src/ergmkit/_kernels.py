"""Compiled inner loops: change statistics, Metropolis-Hastings, Gray-code enumeration.

The kernels work on a dense adjacency matrix plus unsorted neighbour arrays
with a position index, so a toggle is O(1) and a shared-partner count is
O(min degree).  Term kinds are encoded as integer codes per natural
coordinate; dyad-valued kinds (node match, covariates, offsets) become rows
of a weight-matrix stack.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .terms import (DegreeCount, Edges, Esp, NodeDegree, Triangles, TwoPaths, dyad_values)

EDGES, DEGREE, TWOPATHS, TRIANGLES, ESP, NODEDEGREE, DYADMAT = range(7)

UNIFORM, TIE_NO_TIE = 0, 1


def encode_terms(spec):
    """Integer encoding of ``spec.terms`` for the kernels."""
    n, q = spec.n, spec.q
    codes = np.zeros(q, dtype=np.int64)
    args = np.zeros(q, dtype=np.int64)
    matidx = np.full(q, -1, dtype=np.int64)
    mats = []
    for c, t in enumerate(spec.terms):
        if isinstance(t, Edges):
            codes[c] = EDGES
        elif isinstance(t, DegreeCount):
            codes[c], args[c] = DEGREE, t.k
        elif isinstance(t, TwoPaths):
            codes[c] = TWOPATHS
        elif isinstance(t, Triangles):
            codes[c] = TRIANGLES
        elif isinstance(t, Esp):
            codes[c], args[c] = ESP, t.m
        elif isinstance(t, NodeDegree):
            codes[c], args[c] = NODEDEGREE, t.i
        else:
            codes[c], matidx[c] = DYADMAT, len(mats)
            mats.append(dyad_values(t, n, spec.attributes))
    mat_stack = np.stack(mats) if mats else np.zeros((0, n, n))
    flags = np.array([np.any(codes == TRIANGLES), np.any(codes == ESP)], dtype=np.int64)
    return codes, args, matidx, np.ascontiguousarray(mat_stack, dtype=np.float64), flags


@numba.njit(cache=True)
def neighbor_arrays(A):
    n = A.shape[0]
    deg = np.zeros(n, dtype=np.int64)
    nbr = np.zeros((n, n), dtype=np.int64)
    pos = np.full((n, n), -1, dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if A[i, j]:
                nbr[i, deg[i]] = j
                pos[i, j] = deg[i]
                deg[i] += 1
    return deg, nbr, pos


@numba.njit(cache=True, inline="always")
def _cn(A, deg, nbr, i, j):
    if deg[i] > deg[j]:
        i, j = j, i
    c = 0
    for p in range(deg[i]):
        if A[j, nbr[i, p]]:
            c += 1
    return c


@numba.njit(cache=True)
def toggle_state(A, deg, nbr, pos, i, j):
    if A[i, j]:
        A[i, j] = 0
        A[j, i] = 0
        for a, b in ((i, j), (j, i)):
            p = pos[a, b]
            last = nbr[a, deg[a] - 1]
            nbr[a, p] = last
            pos[a, last] = p
            pos[a, b] = -1
            deg[a] -= 1
    else:
        A[i, j] = 1
        A[j, i] = 1
        for a, b in ((i, j), (j, i)):
            nbr[a, deg[a]] = b
            pos[a, b] = deg[a]
            deg[a] += 1


@numba.njit(cache=True)
def change_stats(A, deg, nbr, i, j, codes, args, matidx, mats, flags, espbuf, out):
    """Fill ``out`` with s(y + ij) - s(y - ij)."""
    present = A[i, j]
    di = deg[i] - present
    dj = deg[j] - present
    cn = 0
    top = 0
    if flags[0] or flags[1]:
        cn = _cn(A, deg, nbr, i, j)
    if flags[1]:
        espbuf[cn] += 1
        top = cn + 1
        a, b = i, j
        if deg[a] > deg[b]:
            a, b = b, a
        for p in range(deg[a]):
            k = nbr[a, p]
            if A[b, k]:
                c = _cn(A, deg, nbr, i, k) - present
                espbuf[c] -= 1
                espbuf[c + 1] += 1
                if c + 1 > top:
                    top = c + 1
                c = _cn(A, deg, nbr, j, k) - present
                espbuf[c] -= 1
                espbuf[c + 1] += 1
                if c + 1 > top:
                    top = c + 1
    for c in range(codes.shape[0]):
        code = codes[c]
        if code == EDGES:
            out[c] = 1.0
        elif code == DEGREE:
            k = args[c]
            out[c] = ((di + 1 == k) - (di == k)) + ((dj + 1 == k) - (dj == k))
        elif code == TWOPATHS:
            out[c] = di + dj
        elif code == TRIANGLES:
            out[c] = cn
        elif code == ESP:
            out[c] = espbuf[args[c]]
        elif code == NODEDEGREE:
            out[c] = (args[c] == i) + (args[c] == j)
        else:
            out[c] = mats[matidx[c], i, j]
    if flags[1]:
        for m in range(top + 1):
            espbuf[m] = 0


@numba.njit(cache=True)
def dyad_change_matrix(A, fi, fj, codes, args, matidx, mats, flags):
    """Change vectors and current values for every listed dyad (pseudo-likelihood rows)."""
    n = A.shape[0]
    deg, nbr, pos = neighbor_arrays(A)
    q = codes.shape[0]
    F = fi.shape[0]
    out = np.zeros((F, q))
    y = np.zeros(F, dtype=np.int64)
    espbuf = np.zeros(n + 2, dtype=np.int64)
    row = np.zeros(q)
    for d in range(F):
        change_stats(A, deg, nbr, fi[d], fj[d], codes, args, matidx, mats, flags, espbuf, row)
        out[d, :] = row
        y[d] = A[fi[d], fj[d]]
    return out, y


@numba.njit(cache=True)
def gray_enumerate(A, fi, fj, stats0, codes, args, matidx, mats, flags):
    """Statistics of all ``2^F`` settings of the listed dyads.

    ``A`` must have every listed dyad set to 0 and ``stats0`` must be its
    statistic vector.  Row ``t`` of the result corresponds to the dyad
    settings given by the bits of ``t ^ (t >> 1)``.
    """
    n = A.shape[0]
    deg, nbr, pos = neighbor_arrays(A)
    q = codes.shape[0]
    F = fi.shape[0]
    total = 1 << F
    out = np.empty((total, q))
    espbuf = np.zeros(n + 2, dtype=np.int64)
    delta = np.zeros(q)
    cur = stats0.copy()
    out[0, :] = cur
    for t in range(1, total):
        b = 0
        while not (t >> b) & 1:
            b += 1
        i, j = fi[b], fj[b]
        change_stats(A, deg, nbr, i, j, codes, args, matidx, mats, flags, espbuf, delta)
        if A[i, j]:
            for c in range(q):
                cur[c] -= delta[c]
        else:
            for c in range(q):
                cur[c] += delta[c]
        toggle_state(A, deg, nbr, pos, i, j)
        out[t, :] = cur
    return out


@numba.njit(cache=True, nogil=True)
def mh_run(A, deg, nbr, pos, fi, fj, perm, ppos, n_on, codes, args, matidx, mats, flags,
           eta, stats, rng, burnin, interval, draws, proposal, p_tie, record_graphs):
    """Metropolis-Hastings over the listed (free) dyads.

    ``perm`` holds the free-dyad indices with the ``n_on`` present ones first;
    ``ppos`` is its inverse.  ``stats`` is updated in place.  Returns the
    retained statistic rows, retained graphs (as 0/1 rows over the free
    dyads, empty unless requested), the acceptance count and the final
    number of present free dyads.
    """
    n = A.shape[0]
    q = codes.shape[0]
    F = fi.shape[0]
    out = np.empty((draws, q))
    graphs = np.zeros((draws if record_graphs else 0, F), dtype=np.uint8)
    espbuf = np.zeros(n + 2, dtype=np.int64)
    delta = np.zeros(q)
    accepted = 0
    total = burnin + interval * draws
    kept = 0
    for step in range(total):
        if F > 0:
            n_off = F - n_on
            if proposal == TIE_NO_TIE:
                if n_on == 0:
                    qt = 0.0
                elif n_off == 0:
                    qt = 1.0
                else:
                    qt = p_tie
                if rng.random() < qt:
                    d = perm[rng.integers(0, n_on)]
                else:
                    d = perm[n_on + rng.integers(0, n_off)]
            else:
                d = rng.integers(0, F)
            i = fi[d]
            j = fj[d]
            adding = A[i, j] == 0
            change_stats(A, deg, nbr, i, j, codes, args, matidx, mats, flags, espbuf, delta)
            lr = 0.0
            for c in range(q):
                lr += eta[c] * delta[c]
            if not adding:
                lr = -lr
            if proposal == TIE_NO_TIE:
                if adding:
                    e2, o2 = n_on + 1, n_off - 1
                    fwd = (1.0 - qt) / n_off
                else:
                    e2, o2 = n_on - 1, n_off + 1
                    fwd = qt / n_on
                if e2 == 0:
                    qt2 = 0.0
                elif o2 == 0:
                    qt2 = 1.0
                else:
                    qt2 = p_tie
                if adding:
                    rev = qt2 / e2
                else:
                    rev = (1.0 - qt2) / o2
                lr += math.log(rev) - math.log(fwd)
            if lr >= 0.0 or rng.random() < math.exp(lr):
                accepted += 1
                toggle_state(A, deg, nbr, pos, i, j)
                if adding:
                    for c in range(q):
                        stats[c] += delta[c]
                    # swap d into the present block
                    k = ppos[d]
                    other = perm[n_on]
                    perm[k] = other
                    ppos[other] = k
                    perm[n_on] = d
                    ppos[d] = n_on
                    n_on += 1
                else:
                    for c in range(q):
                        stats[c] -= delta[c]
                    k = ppos[d]
                    other = perm[n_on - 1]
                    perm[k] = other
                    ppos[other] = k
                    perm[n_on - 1] = d
                    ppos[d] = n_on - 1
                    n_on -= 1
        if step >= burnin and (step - burnin + 1) % interval == 0:
            out[kept, :] = stats
            if record_graphs:
                for e in range(F):
                    graphs[kept, e] = A[fi[e], fj[e]]
            kept += 1
    return out, graphs, accepted, n_on
