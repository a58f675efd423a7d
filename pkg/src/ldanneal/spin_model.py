"""Ising spin-glass instances, spin states, energies and similarity measures.

Conventions
-----------
A state is a length-``n`` ``int8`` array of ``+1``/``-1`` spins. Its bit
string is ``a_{n-1} ... a_1 a_0`` with ``a_i = (1 + s_i) / 2``; the basis
index of a state is the integer with that binary representation, so site 0
is the least significant bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .errors import DimensionError, ParameterError

SpinState = np.ndarray

# Absolute tolerance (relative to the largest term) below which a single-flip
# energy change is treated as zero.
DEGENERACY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpinGlassInstance:
    """Sparse Ising Hamiltonian ``sum_{i<j} J_ij s_i s_j + sum_i h_i s_i``.

    Zero-valued terms are dropped on construction; they are equivalent to
    absent terms for every operation.
    """

    n_sites: int
    couplers: Mapping[tuple[int, int], float] = field(default_factory=dict)
    biases: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n_sites)
        if n <= 0:
            raise ParameterError(f"n_sites must be positive, got {self.n_sites}")
        couplers = {}
        for key, value in self.couplers.items():
            i, j = int(key[0]), int(key[1])
            if not 0 <= i < j < n:
                raise ParameterError(f"coupler ({i}, {j}) violates 0 <= i < j < {n}")
            value = float(value)
            if not np.isfinite(value):
                raise ParameterError(f"coupler ({i}, {j}) is not finite")
            if value != 0.0:
                couplers[(i, j)] = value
        biases = {}
        for key, value in self.biases.items():
            i = int(key)
            if not 0 <= i < n:
                raise ParameterError(f"bias {i} out of range for {n} sites")
            value = float(value)
            if not np.isfinite(value):
                raise ParameterError(f"bias {i} is not finite")
            if value != 0.0:
                biases[i] = value
        object.__setattr__(self, "n_sites", n)
        object.__setattr__(self, "couplers", MappingProxyType(dict(sorted(couplers.items()))))
        object.__setattr__(self, "biases", MappingProxyType(dict(sorted(biases.items()))))

    @classmethod
    def from_terms(cls, n_sites: int, couplers: Iterable = (), biases: Iterable = ()):
        """Build from ``(i, j, J)`` and ``(i, h)`` tuples, rejecting duplicate keys."""
        cmap = {}
        for i, j, v in couplers:
            key = (int(i), int(j))
            if key in cmap:
                raise ParameterError(f"duplicate coupler {key}")
            cmap[key] = v
        bmap = {}
        for i, v in biases:
            if int(i) in bmap:
                raise ParameterError(f"duplicate bias {i}")
            bmap[int(i)] = v
        return cls(n_sites, cmap, bmap)

    def __eq__(self, other):
        if not isinstance(other, SpinGlassInstance):
            return NotImplemented
        return (
            self.n_sites == other.n_sites
            and dict(self.couplers) == dict(other.couplers)
            and dict(self.biases) == dict(other.biases)
        )

    def __repr__(self):
        return (
            f"SpinGlassInstance(n_sites={self.n_sites}, "
            f"couplers={len(self.couplers)}, biases={len(self.biases)})"
        )

    # -- array views used by the kernels -------------------------------------

    @cached_property
    def edge_arrays(self):
        """``(ei, ej, J)`` in ascending key order."""
        keys = list(self.couplers)
        ei = np.array([k[0] for k in keys], dtype=np.int32)
        ej = np.array([k[1] for k in keys], dtype=np.int32)
        jv = np.array(list(self.couplers.values()), dtype=np.float64)
        return ei, ej, jv

    @cached_property
    def bias_arrays(self):
        """``(hi, h)`` in ascending site order (nonzero biases only)."""
        hi = np.array(list(self.biases), dtype=np.int32)
        hv = np.array(list(self.biases.values()), dtype=np.float64)
        return hi, hv

    @cached_property
    def h_dense(self):
        h = np.zeros(self.n_sites, dtype=np.float64)
        hi, hv = self.bias_arrays
        h[hi] = hv
        return h

    @cached_property
    def csr(self):
        """Symmetric adjacency ``(indptr, neighbours, weights)``.

        Neighbours of each site are listed in ascending order.
        """
        ei, ej, jv = self.edge_arrays
        rows = np.concatenate([ei, ej]).astype(np.int64)
        cols = np.concatenate([ej, ei]).astype(np.int32)
        vals = np.concatenate([jv, jv])
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        indptr = np.zeros(self.n_sites + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        return indptr, np.ascontiguousarray(cols), np.ascontiguousarray(vals)

    @cached_property
    def scale(self) -> float:
        """Largest absolute term strength (1.0 for an empty instance)."""
        _, _, jv = self.edge_arrays
        _, hv = self.bias_arrays
        m = max([0.0] + np.abs(jv).tolist() + np.abs(hv).tolist())
        return m if m > 0 else 1.0


# -- states ------------------------------------------------------------------


def as_state(x, n_sites: int | None = None) -> SpinState:
    """Validate and convert a sequence of +/-1 values to an ``int8`` array."""
    s = np.asarray(x)
    if s.ndim != 1:
        raise DimensionError(f"state must be one-dimensional, got shape {s.shape}")
    if not np.all((s == 1) | (s == -1)):
        raise ParameterError("spins must be +1 or -1")
    s = s.astype(np.int8)
    if n_sites is not None and s.shape[0] != n_sites:
        raise DimensionError(f"state has {s.shape[0]} sites, instance has {n_sites}")
    return s


def as_states(x, n_sites: int | None = None) -> np.ndarray:
    s = np.asarray(x)
    if s.ndim == 1:
        s = s[None, :]
    if s.ndim != 2:
        raise DimensionError(f"states must be two-dimensional, got shape {s.shape}")
    if s.size and not np.all((s == 1) | (s == -1)):
        raise ParameterError("spins must be +1 or -1")
    s = np.ascontiguousarray(s, dtype=np.int8)
    if n_sites is not None and s.shape[1] != n_sites:
        raise DimensionError(f"states have {s.shape[1]} sites, instance has {n_sites}")
    return s


def to_bits(state) -> str:
    """Bit string ``a_{n-1} ... a_0``."""
    s = np.asarray(state)
    return "".join("1" if v > 0 else "0" for v in s[::-1])


def from_bits(bits: str) -> SpinState:
    bits = bits.strip()
    if not bits or set(bits) - {"0", "1"}:
        raise ParameterError(f"not a bit string: {bits!r}")
    return np.array([1 if c == "1" else -1 for c in reversed(bits)], dtype=np.int8)


def state_index(state) -> int:
    return int(to_bits(state), 2)


def state_from_index(index: int, n_sites: int) -> SpinState:
    bits = (int(index) >> np.arange(n_sites)) & 1
    return (2 * bits - 1).astype(np.int8)


def states_from_indices(indices, n_sites: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n_sites, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


def conjugate(state) -> SpinState:
    """All spins flipped."""
    return (-np.asarray(state)).astype(np.int8)


def _check_pair(a, b):
    a = as_state(a)
    b = as_state(b)
    if a.shape != b.shape:
        raise DimensionError(f"states differ in length: {a.shape[0]} vs {b.shape[0]}")
    return a, b


# -- energies ----------------------------------------------------------------


def energy(instance: SpinGlassInstance, state) -> float:
    """Energy of one state, summed couplers-then-biases in ascending key order."""
    s = as_state(state, instance.n_sites)
    return float(energies(instance, s[None, :])[0])


def energies(instance: SpinGlassInstance, states) -> np.ndarray:
    """Energies of each row of ``states`` (same summation order as :func:`energy`)."""
    s = as_states(states, instance.n_sites)
    ei, ej, jv = instance.edge_arrays
    hi, hv = instance.bias_arrays
    return kernels.energies(s, ei, ej, jv, hi, hv)


def local_fields(instance: SpinGlassInstance, state) -> np.ndarray:
    """``h_k + sum_j J_kj s_j`` for every site."""
    s = as_state(state, instance.n_sites)
    indptr, nbr, w = instance.csr
    return kernels.local_fields(s, instance.h_dense, indptr, nbr, w)


def flip_deltas(instance: SpinGlassInstance, state) -> np.ndarray:
    """Energy change of every single-spin flip."""
    s = as_state(state, instance.n_sites)
    return -2.0 * s * local_fields(instance, s)


# -- satisfied terms and similarity -----------------------------------------


@dataclass(frozen=True)
class SatisfiedSets:
    couplers: frozenset
    biases: frozenset


def satisfied_sets(instance: SpinGlassInstance, state) -> SatisfiedSets:
    """Couplers with ``J s_i s_j < 0`` and biases with ``h s_i < 0``."""
    s = as_state(state, instance.n_sites)
    cpl = frozenset(
        (i, j) for (i, j), v in instance.couplers.items() if v * s[i] * s[j] < 0
    )
    bia = frozenset(i for i, v in instance.biases.items() if v * s[i] < 0)
    return SatisfiedSets(cpl, bia)


def _satisfaction(instance: SpinGlassInstance, states: np.ndarray):
    ei, ej, jv = instance.edge_arrays
    hi, hv = instance.bias_arrays
    csat = (jv * (states[:, ei] * states[:, ej])) < 0
    hsat = (hv * states[:, hi]) < 0
    return csat, hsat


def q_f_batch(instance: SpinGlassInstance, reference, others) -> np.ndarray:
    """``q_F(reference, other)`` for every row of ``others``."""
    ref = as_state(reference, instance.n_sites)
    oth = as_states(others, instance.n_sites)
    ei, _, jv = instance.edge_arrays
    _, hv = instance.bias_arrays
    wj = np.abs(jv)
    wh = np.abs(hv)
    rc, rh = _satisfaction(instance, ref[None, :])
    oc, oh = _satisfaction(instance, oth)
    rc, rh = rc[0], rh[0]
    # numerator and denominator use the same reduction so q_F(a, a) == 1 exactly
    denom = float(rc.astype(np.float64) @ wj + rh.astype(np.float64) @ wh)
    if denom == 0.0:
        return np.ones(oth.shape[0])
    # both satisfy J s_i s_j < 0, so s_i agreeing forces s_j to agree too
    aligned = oth[:, ei] == ref[ei]
    num = (oc & rc & aligned).astype(np.float64) @ wj + (oh & rh).astype(np.float64) @ wh
    return np.minimum(num / denom, 1.0)


def q_f(instance: SpinGlassInstance, reference, other) -> float:
    """Weighted fraction of the reference's satisfied terms also satisfied (and
    spin-aligned) in ``other``. Returns 1 when the reference satisfies nothing."""
    ref, oth = _check_pair(reference, other)
    return float(q_f_batch(instance, ref, oth[None, :])[0])


def q_ea(a, b) -> float:
    """Edwards-Anderson overlap ``(1/N) sum a_i b_i``."""
    a, b = _check_pair(a, b)
    return float(np.dot(a.astype(np.int64), b.astype(np.int64))) / a.shape[0]


def hamming(a, b) -> int:
    a, b = _check_pair(a, b)
    return int(np.count_nonzero(a != b))


# -- local minima ------------------------------------------------------------


def local_minimum_check(instance: SpinGlassInstance, state) -> tuple[bool, bool]:
    """Return ``(strict, degenerate)`` for the single-flip neighbourhood.

    ``strict`` is true iff every single flip raises the energy; ``degenerate``
    is true iff no flip lowers it but at least one leaves it unchanged.
    """
    d = flip_deltas(instance, state)
    tol = DEGENERACY_RTOL * instance.scale
    lowers = bool(np.any(d < -tol))
    ties = bool(np.any(np.abs(d) <= tol))
    strict = not lowers and not ties
    return strict, (not lowers) and ties


def is_local_minimum(instance: SpinGlassInstance, state) -> bool:
    return local_minimum_check(instance, state)[0]


# -- gauge -------------------------------------------------------------------


def spin_reversal_transform(instance: SpinGlassInstance, gauge) -> SpinGlassInstance:
    """``h_i -> h_i r_i``, ``J_ij -> J_ij r_i r_j``."""
    r = as_state(gauge, instance.n_sites)
    couplers = {(i, j): v * int(r[i]) * int(r[j]) for (i, j), v in instance.couplers.items()}
    biases = {i: v * int(r[i]) for i, v in instance.biases.items()}
    return SpinGlassInstance(instance.n_sites, couplers, biases)


def apply_gauge(state, gauge) -> SpinState:
    s, r = _check_pair(state, gauge)
    return (s * r).astype(np.int8)
