"""Pure-Python/NumPy twins of the compiled kernels in ``_kernels.pyx``.

Floating-point operations are performed in the same order as the compiled
versions, so both backends agree bit for bit.
"""
import math

import numpy as np

_CHUNK = 1 << 16


def energies(states, ei, ej, jv, hi, hv):
    states = np.asarray(states, dtype=np.int8)
    acc = np.zeros(states.shape[0], dtype=np.float64)
    for e in range(len(jv)):
        acc = acc + jv[e] * (states[:, ei[e]].astype(np.int64) * states[:, ej[e]])
    for e in range(len(hv)):
        acc = acc + hv[e] * states[:, hi[e]]
    return acc


def local_fields(spins, h, indptr, nbr, w):
    s = [int(x) for x in spins]
    hl = h.tolist()
    ip = indptr.tolist()
    nb = nbr.tolist()
    wl = w.tolist()
    out = []
    for k in range(len(s)):
        acc = hl[k]
        for p in range(ip[k], ip[k + 1]):
            acc = acc + wl[p] * s[nb[p]]
        out.append(acc)
    return np.array(out, dtype=np.float64)


def metropolis_sweeps(spins, h, indptr, nbr, w, betas, uniforms):
    s = [int(x) for x in spins]
    f = local_fields(spins, h, indptr, nbr, w).tolist()
    ip = indptr.tolist()
    nb = nbr.tolist()
    wl = w.tolist()
    n = len(s)
    accepted = 0
    exp = math.exp
    for sweep, beta in enumerate(betas.tolist()):
        u = uniforms[sweep].tolist()
        for k in range(n):
            de = -2.0 * s[k] * f[k]
            if de <= 0.0 or u[k] < exp(-beta * de):
                new = -s[k]
                s[k] = new
                accepted += 1
                for p in range(ip[k], ip[k + 1]):
                    f[nb[p]] = f[nb[p]] + 2.0 * wl[p] * new
    spins[:] = s
    return accepted


def enumerate_lowest(n_sites, start, stop, k, ei, ej, jv, hi, hv):
    best_i = np.empty(0, dtype=np.int64)
    best_e = np.empty(0, dtype=np.float64)
    min_e = 1e308
    min_count = 0
    shifts = np.arange(n_sites, dtype=np.int64)
    for lo in range(start, stop, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, stop), dtype=np.int64)
        bits = (idx[:, None] >> shifts) & 1
        states = (2 * bits - 1).astype(np.int8)
        e = energies(states, ei, ej, jv, hi, hv)
        cmin = e.min()
        if cmin < min_e:
            min_e = float(cmin)
            min_count = int(np.count_nonzero(e == cmin))
        elif cmin == min_e:
            min_count += int(np.count_nonzero(e == cmin))
        if k > 0:
            cand_i = np.concatenate([best_i, idx])
            cand_e = np.concatenate([best_e, e])
            order = np.lexsort((cand_i, cand_e))[:k]
            best_i = cand_i[order]
            best_e = cand_e[order]
    return best_i, best_e, min_e, min_count
