# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every routine here has a line-for-line twin in ``_pykernels.py``; both perform
the same floating-point operations in the same order so the two backends
return bit-identical results.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport int8_t, int32_t, int64_t

cnp.import_array()


def energies(const int8_t[:, :] states,
             const int32_t[:] ei, const int32_t[:] ej, const double[:] jv,
             const int32_t[:] hi, const double[:] hv):
    """Energies of each row of ``states``; couplers then biases, in key order."""
    cdef Py_ssize_t n = states.shape[0]
    cdef Py_ssize_t ne = jv.shape[0]
    cdef Py_ssize_t nh = hv.shape[0]
    cdef Py_ssize_t r, e
    cdef double acc
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    with nogil:
        for r in range(n):
            acc = 0.0
            for e in range(ne):
                acc = acc + jv[e] * (states[r, ei[e]] * states[r, ej[e]])
            for e in range(nh):
                acc = acc + hv[e] * states[r, hi[e]]
            o[r] = acc
    return out


def local_fields(const int8_t[:] spins, const double[:] h,
                 const int64_t[:] indptr, const int32_t[:] nbr, const double[:] w):
    cdef Py_ssize_t n = spins.shape[0]
    cdef Py_ssize_t k, p
    cdef double acc
    out = np.empty(n, dtype=np.float64)
    cdef double[:] f = out
    with nogil:
        for k in range(n):
            acc = h[k]
            for p in range(indptr[k], indptr[k + 1]):
                acc = acc + w[p] * spins[nbr[p]]
            f[k] = acc
    return out


def metropolis_sweeps(int8_t[:] spins, const double[:] h,
                      const int64_t[:] indptr, const int32_t[:] nbr, const double[:] w,
                      const double[:] betas, const double[:, :] uniforms):
    """Run ``len(betas)`` sequential-order Metropolis sweeps in place.

    ``uniforms[s, k]`` is the acceptance draw for site ``k`` in sweep ``s``.
    Returns the number of accepted flips.
    """
    cdef Py_ssize_t n = spins.shape[0]
    cdef Py_ssize_t nsweeps = betas.shape[0]
    cdef Py_ssize_t s, k, p
    cdef double beta, de, acc
    cdef int8_t new
    cdef int64_t accepted = 0
    cdef double[:] f = np.empty(n, dtype=np.float64)
    with nogil:
        for k in range(n):
            acc = h[k]
            for p in range(indptr[k], indptr[k + 1]):
                acc = acc + w[p] * spins[nbr[p]]
            f[k] = acc
        for s in range(nsweeps):
            beta = betas[s]
            for k in range(n):
                de = -2.0 * spins[k] * f[k]
                if de <= 0.0 or uniforms[s, k] < exp(-beta * de):
                    new = -spins[k]
                    spins[k] = new
                    accepted += 1
                    for p in range(indptr[k], indptr[k + 1]):
                        f[nbr[p]] = f[nbr[p]] + 2.0 * w[p] * new
    return accepted


cdef inline void _heap_push(double[:] he, int64_t[:] hx, Py_ssize_t* size, Py_ssize_t k,
                            double acc, int64_t idx) noexcept nogil:
    # max-heap on (energy, index); later indices lose ties
    cdef Py_ssize_t pos, child, largest
    cdef double tmp_e
    cdef int64_t tmp_i
    if size[0] < k:
        pos = size[0]
        size[0] += 1
        he[pos] = acc
        hx[pos] = idx
        while pos > 0:
            child = pos
            pos = (pos - 1) // 2
            if he[pos] < he[child] or (he[pos] == he[child] and hx[pos] < hx[child]):
                tmp_e = he[pos]; he[pos] = he[child]; he[child] = tmp_e
                tmp_i = hx[pos]; hx[pos] = hx[child]; hx[child] = tmp_i
            else:
                break
    elif acc < he[0]:
        he[0] = acc
        hx[0] = idx
        pos = 0
        while True:
            largest = pos
            child = 2 * pos + 1
            if child < size[0] and (he[child] > he[largest] or
                                    (he[child] == he[largest] and hx[child] > hx[largest])):
                largest = child
            child = 2 * pos + 2
            if child < size[0] and (he[child] > he[largest] or
                                    (he[child] == he[largest] and hx[child] > hx[largest])):
                largest = child
            if largest == pos:
                break
            tmp_e = he[pos]; he[pos] = he[largest]; he[largest] = tmp_e
            tmp_i = hx[pos]; hx[pos] = hx[largest]; hx[largest] = tmp_i
            pos = largest


def enumerate_lowest(int n_sites, int64_t start, int64_t stop, Py_ssize_t k,
                     const int32_t[:] ei, const int32_t[:] ej, const double[:] jv,
                     const int32_t[:] hi, const double[:] hv):
    """Scan basis indices ``[start, stop)`` keeping the ``k`` lowest (energy, index).

    Returns ``(indices, energies, min_energy, min_count)``; the first two are
    unsorted. Index bit ``i`` is the bit-string digit of site ``i``.

    Four consecutive indices are evaluated together with separate
    accumulators; each accumulator still sums its own terms in key order.
    """
    cdef Py_ssize_t ne = jv.shape[0]
    cdef Py_ssize_t nh = hv.shape[0]
    cdef Py_ssize_t e, size = 0
    cdef int64_t idx, base, changed
    cdef double acc, a0, a1, a2, a3, je
    cdef double min_e = 1e308
    cdef int64_t min_count = 0
    cdef int q, i, x, y
    cdef int8_t[:, :] s4 = np.empty((4, max(n_sites, 1)), dtype=np.int8)
    cdef double[4] acc4
    if k < 0:
        k = 0
    heap_e_arr = np.empty(max(k, 1), dtype=np.float64)
    heap_i_arr = np.empty(max(k, 1), dtype=np.int64)
    cdef double[:] he = heap_e_arr
    cdef int64_t[:] hx = heap_i_arr
    with nogil:
        idx = start
        if n_sites >= 2 and start % 4 == 0:
            for q in range(4):
                for i in range(n_sites):
                    s4[q, i] = 1 if ((start + q) >> i) & 1 else -1
            base = start
            while base + 4 <= stop:
                a0 = 0.0; a1 = 0.0; a2 = 0.0; a3 = 0.0
                for e in range(ne):
                    je = jv[e]
                    x = ei[e]
                    y = ej[e]
                    a0 = a0 + je * (s4[0, x] * s4[0, y])
                    a1 = a1 + je * (s4[1, x] * s4[1, y])
                    a2 = a2 + je * (s4[2, x] * s4[2, y])
                    a3 = a3 + je * (s4[3, x] * s4[3, y])
                for e in range(nh):
                    je = hv[e]
                    x = hi[e]
                    a0 = a0 + je * s4[0, x]
                    a1 = a1 + je * s4[1, x]
                    a2 = a2 + je * s4[2, x]
                    a3 = a3 + je * s4[3, x]
                acc4[0] = a0; acc4[1] = a1; acc4[2] = a2; acc4[3] = a3
                for q in range(4):
                    acc = acc4[q]
                    if acc < min_e:
                        min_e = acc
                        min_count = 1
                    elif acc == min_e:
                        min_count += 1
                    if k > 0:
                        _heap_push(he, hx, &size, k, acc, base + q)
                changed = base ^ (base + 4)
                base += 4
                for i in range(2, n_sites):
                    if (changed >> i) & 1:
                        for q in range(4):
                            s4[q, i] = -s4[q, i]
            idx = base
        while idx < stop:
            for i in range(n_sites):
                s4[0, i] = 1 if (idx >> i) & 1 else -1
            acc = 0.0
            for e in range(ne):
                acc = acc + jv[e] * (s4[0, ei[e]] * s4[0, ej[e]])
            for e in range(nh):
                acc = acc + hv[e] * s4[0, hi[e]]
            if acc < min_e:
                min_e = acc
                min_count = 1
            elif acc == min_e:
                min_count += 1
            if k > 0:
                _heap_push(he, hx, &size, k, acc, idx)
            idx += 1
    return heap_i_arr[:size].copy(), heap_e_arr[:size].copy(), min_e, min_count
