"""State-vector simulation of the transverse-field Ising model at small N.

The time-dependent Hamiltonian is ``H(t) = H_J + b(t) H_h + Gamma(t) H_D`` with
``H_J`` the coupler part, ``H_h`` the bias part and ``H_D = -sum_i sigma^x_i``.
Schedules are functions of the time fraction ``t/T``; units are dimensionless
with hbar = 1. Basis index bit ``i`` is the bit-string digit of site ``i``
(1 means spin up), matching :func:`ldanneal.spin_model.state_index`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from . import kernels
from .errors import CapabilityError, DegenerateGapError, ParameterError
from .samplers import SampleSet
from .spin_model import SpinGlassInstance, states_from_indices

MAX_SITES = 16
DENSE_MAX_SITES = 12
GAP_TOL = 1e-10
NORM_TOL = 1e-9

# fourth-order triple-jump weights
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1


class ScheduleTable:
    """Piecewise-linear schedule given as ``(t_fraction, value)`` breakpoints."""

    def __init__(self, points):
        pts = [(float(t), float(v)) for t, v in points]
        if len(pts) < 2:
            raise ParameterError("a schedule needs at least two breakpoints")
        t = np.array([p[0] for p in pts])
        if t[0] != 0.0 or t[-1] != 1.0:
            raise ParameterError("schedule must start at t=0 and end at t=1")
        if np.any(np.diff(t) <= 0):
            raise ParameterError("schedule times must be strictly increasing")
        v = np.array([p[1] for p in pts])
        if not np.all(np.isfinite(v)):
            raise ParameterError("schedule values must be finite")
        self.times = t
        self.values = v

    @classmethod
    def constant(cls, value: float) -> "ScheduleTable":
        return cls([(0.0, value), (1.0, value)])

    @classmethod
    def linear(cls, start: float, end: float) -> "ScheduleTable":
        return cls([(0.0, start), (1.0, end)])

    @classmethod
    def forward(cls, gamma_max: float) -> "ScheduleTable":
        """Driver switched off linearly from ``gamma_max``."""
        return cls.linear(gamma_max, 0.0)

    @classmethod
    def reverse(cls, gamma_turn: float, t_turn: float = 0.4, t_resume: float = 0.6) -> "ScheduleTable":
        """Driver raised from 0 to ``gamma_turn``, held, then removed again."""
        if not 0.0 < t_turn <= t_resume < 1.0:
            raise ParameterError("need 0 < t_turn <= t_resume < 1")
        pts = [(0.0, 0.0), (t_turn, gamma_turn)]
        if t_resume > t_turn:
            pts.append((t_resume, gamma_turn))
        pts.append((1.0, 0.0))
        return cls(pts)

    @property
    def points(self):
        return list(zip(self.times.tolist(), self.values.tolist()))

    def __repr__(self):
        return f"ScheduleTable({self.points})"

    def __eq__(self, other):
        return (
            isinstance(other, ScheduleTable)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )

    def _segment(self, t: float) -> int:
        # right-continuous: a breakpoint belongs to the segment it starts
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(k, 0), len(self.times) - 2)

    def value(self, t: float) -> float:
        _check_fraction(t)
        return float(np.interp(t, self.times, self.values))

    def slope(self, t: float) -> float:
        """Derivative in ``t_fraction``; right-hand slope at breakpoints."""
        _check_fraction(t)
        k = self._segment(t)
        return float((self.values[k + 1] - self.values[k]) / (self.times[k + 1] - self.times[k]))

    def integral(self, t0: float, t1: float) -> float:
        """Exact integral of the schedule over ``[t0, t1]`` in ``t_fraction``."""
        if t1 < t0:
            return -self.integral(t1, t0)
        grid = np.concatenate([[t0], self.times[(self.times > t0) & (self.times < t1)], [t1]])
        vals = np.interp(grid, self.times, self.values)
        return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(grid)))


def _check_fraction(t):
    if not 0.0 <= t <= 1.0:
        raise ParameterError(f"time fraction {t} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class QaSystem:
    """An instance together with its driver and h-gain schedules."""

    instance: SpinGlassInstance
    gamma_schedule: ScheduleTable
    hgain_schedule: ScheduleTable | None = None
    total_time: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.instance.n_sites > MAX_SITES:
            raise CapabilityError(
                f"state-vector simulation limited to {MAX_SITES} sites, got {self.instance.n_sites}"
            )
        if not self.total_time > 0:
            raise ParameterError("total_time must be positive")
        if self.hgain_schedule is None:
            object.__setattr__(self, "hgain_schedule", ScheduleTable.constant(1.0))

    @property
    def n_sites(self) -> int:
        return self.instance.n_sites

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    @cached_property
    def classical_energies(self) -> np.ndarray:
        """Energies of every basis state, evaluated exactly as ``energy`` does."""
        inst = self.instance
        states = states_from_indices(np.arange(self.dim), self.n_sites)
        ei, ej, jv = inst.edge_arrays
        hi, hv = inst.bias_arrays
        return kernels.energies(states, ei, ej, jv, hi, hv)

    @cached_property
    def _parts(self):
        n = self.n_sites
        states = states_from_indices(np.arange(self.dim), n)
        ei, ej, jv = self.instance.edge_arrays
        hi, hv = self.instance.bias_arrays
        empty_i, empty_v = np.empty(0, np.int32), np.empty(0)
        coupler = kernels.energies(states, ei, ej, jv, empty_i, empty_v)
        bias = kernels.energies(states, empty_i, empty_i, empty_v, hi, hv)
        return coupler, bias

    def diagonal(self, t: float) -> np.ndarray:
        b = self.hgain_schedule.value(t)
        if b == 1.0:
            return self.classical_energies
        coupler, bias = self._parts
        return coupler + b * bias

    def driver_slope(self, t: float) -> float:
        """d Gamma / d(real time)."""
        return self.gamma_schedule.slope(t) / self.total_time

    def hgain_slope(self, t: float) -> float:
        return self.hgain_schedule.slope(t) / self.total_time


def _guard(system: QaSystem, limit: int, what: str):
    if system.n_sites > limit:
        raise CapabilityError(f"{what} limited to {limit} sites, got {system.n_sites}")


def driver_matrix(n_sites: int, sparse: bool = False):
    """``H_D = -sum_i sigma^x_i`` in the computational basis."""
    dim = 1 << n_sites
    idx = np.arange(dim)
    rows = np.repeat(idx, n_sites)
    cols = (idx[:, None] ^ (1 << np.arange(n_sites))[None, :]).ravel()
    m = sp.csr_matrix((-np.ones(rows.size), (rows, cols)), shape=(dim, dim))
    return m if sparse else m.toarray()


def hamiltonian_at(system: QaSystem, t_fraction: float, sparse: bool = False):
    """``H(t)`` as a real symmetric matrix (dense ndarray or scipy CSR)."""
    _check_fraction(t_fraction)
    _guard(system, MAX_SITES if sparse else DENSE_MAX_SITES, "sparse operator" if sparse else "dense operator")
    gamma = system.gamma_schedule.value(t_fraction)
    diag = system.diagonal(t_fraction)
    drive = driver_matrix(system.n_sites, sparse=True)
    h = sp.diags(diag, format="csr") + gamma * drive if gamma != 0.0 else sp.diags(diag, format="csr")
    return h.tocsr() if sparse else h.toarray()


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    k = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[k, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def instantaneous_spectrum(system: QaSystem, t_fraction: float, k: int):
    """The ``k`` lowest eigenpairs of ``H(t)``, ascending.

    Eigenvectors are columns with unit norm; each is signed so that its
    largest-magnitude component is positive.
    """
    dim = system.dim
    if not 1 <= k <= dim:
        raise ParameterError(f"k must lie in [1, {dim}]")
    _check_fraction(t_fraction)
    _guard(system, MAX_SITES, "spectrum")
    if system.n_sites <= 10 or k >= dim - 1:
        _guard(system, DENSE_MAX_SITES, "dense spectrum")
        vals, vecs = np.linalg.eigh(hamiltonian_at(system, t_fraction))
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        h = hamiltonian_at(system, t_fraction, sparse=True)
        v0 = np.full(dim, 1.0 / math.sqrt(dim))
        vals, vecs = eigsh(h, k=k, which="SA", v0=v0, tol=1e-13)
        order = np.argsort(vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
    return vals, _fix_signs(vecs)


def ratio_from_operators(h, dh, m: int) -> float:
    """``|<m| dH |0>| / (E_m - E_0)**2`` for dense symmetric ``h``."""
    vals, vecs = np.linalg.eigh(np.asarray(h))
    if not 1 <= m < len(vals):
        raise ParameterError(f"level {m} outside [1, {len(vals)})")
    gap = vals[m] - vals[0]
    if abs(gap) <= GAP_TOL:
        raise DegenerateGapError(f"gap to level {m} is {gap:.3e}")
    elem = vecs[:, m] @ (np.asarray(dh) @ vecs[:, 0])
    return float(abs(elem) / gap**2)


def adiabatic_ratio(system: QaSystem, t_fraction: float, m: int) -> float:
    """Adiabatic ratio between the ground state and level ``m`` at ``t``.

    ``dH/dt`` is taken from the schedule slopes (right-hand at breakpoints)
    and scaled by ``1/T`` to real time.
    """
    if m < 1:
        raise ParameterError("level index must be at least 1")
    vals, vecs = instantaneous_spectrum(system, t_fraction, m + 1)
    gap = vals[m] - vals[0]
    if abs(gap) <= GAP_TOL:
        raise DegenerateGapError(f"gap to level {m} is {gap:.3e} at t={t_fraction}")
    dgamma = system.driver_slope(t_fraction)
    db = system.hgain_slope(t_fraction)
    g0, gm = vecs[:, 0], vecs[:, m]
    elem = 0.0
    if dgamma != 0.0:
        elem += dgamma * (gm @ _apply_driver(g0, system.n_sites))
    if db != 0.0:
        elem += db * (gm @ (system._parts[1] * g0))
    return float(abs(elem) / gap**2)


def spectrum_rows(system: QaSystem, t_fractions, levels: int):
    """``(t_fraction, level, energy, ratio)`` rows; ratio is NaN for level 0
    and for degenerate levels."""
    rows = []
    for t in t_fractions:
        vals, vecs = instantaneous_spectrum(system, float(t), levels)
        dgamma = system.driver_slope(float(t))
        db = system.hgain_slope(float(t))
        g0 = vecs[:, 0]
        dg0 = dgamma * _apply_driver(g0, system.n_sites) + db * (system._parts[1] * g0)
        for m in range(levels):
            gap = vals[m] - vals[0]
            ratio = float("nan")
            if m > 0 and abs(gap) > GAP_TOL:
                ratio = float(abs(vecs[:, m] @ dg0) / gap**2)
            rows.append((float(t), m, float(vals[m]), ratio))
    return rows


# -- time evolution ----------------------------------------------------------


def _apply_driver(psi: np.ndarray, n_sites: int) -> np.ndarray:
    out = np.zeros_like(psi)
    for i in range(n_sites):
        v = psi.reshape(-1, 2, 1 << i)
        out.reshape(-1, 2, 1 << i)[...] -= v[:, ::-1, :]
    return out


def _rotate(psi: np.ndarray, n_sites: int, theta: float) -> np.ndarray:
    # exp(-i theta H_D) = prod_i (cos theta + i sin theta sigma^x_i)
    c, s = math.cos(theta), 1j * math.sin(theta)
    for i in range(n_sites):
        v = psi.reshape(-1, 2, 1 << i)
        psi = (c * v + s * v[:, ::-1, :]).reshape(-1)
    return psi


def plus_state(n_sites: int) -> np.ndarray:
    """Uniform superposition, the ground state of ``H_D``."""
    dim = 1 << n_sites
    return np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)


def basis_state(index: int, n_sites: int) -> np.ndarray:
    psi = np.zeros(1 << n_sites, dtype=np.complex128)
    psi[index] = 1.0
    return psi


def default_steps(system: QaSystem) -> int:
    """Step count used when ``evolve`` is given none."""
    gmax = float(np.max(np.abs(system.gamma_schedule.values)))
    bmax = float(np.max(np.abs(system.hgain_schedule.values)))
    coupler, bias = system._parts
    spread = float(np.ptp(coupler) + bmax * np.ptp(bias)) + 2.0 * system.n_sites * gmax
    # global error of the fourth-order scheme grows like T * h**4
    x = system.total_time * spread
    return max(64, int(math.ceil(0.12 * x**1.25)))


def evolve(system: QaSystem, initial=None, steps: int | None = None) -> np.ndarray:
    """Integrate ``i dpsi/dt = H(t) psi`` over ``[0, T]``.

    Each step is a fourth-order composition of three symmetric split steps.
    Within a split step the diagonal and driver parts are applied exactly,
    using the integrals of the schedules over the sub-step. Steps are spread
    over the schedule segments so that no step straddles a breakpoint, which
    keeps the schedules linear inside every sub-step. Default ``initial`` is
    the uniform superposition.
    """
    n = system.n_sites
    psi = plus_state(n) if initial is None else np.array(initial, dtype=np.complex128)
    if psi.shape != (system.dim,):
        raise ParameterError(f"initial state must have {system.dim} amplitudes")
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > NORM_TOL:
        raise ParameterError(f"initial state is not normalized (norm^2 = {norm})")
    steps = default_steps(system) if steps is None else int(steps)
    if steps < 1:
        raise ParameterError("steps must be positive")
    T = system.total_time
    gs, bs = system.gamma_schedule, system.hgain_schedule
    coupler, bias = system._parts
    has_bias = bool(np.any(bias))
    knots = np.union1d(gs.times, bs.times)
    alloc = np.maximum(1, np.round(steps * np.diff(knots)).astype(int))
    fracs = np.array([0.0, _W1, _W1 + _W0, 1.0])
    for lo, hi_, m in zip(knots[:-1], knots[1:], alloc):
        h = (hi_ - lo) / m
        starts = lo + h * np.arange(m)
        # sub-step boundaries, shape (m, 4); schedules are linear in here
        edges = starts[:, None] + h * fracs[None, :]
        edges[:, -1] = np.minimum(edges[:, -1], hi_)
        mids = 0.5 * (edges[:, 1:] + edges[:, :-1])
        widths = np.diff(edges, axis=1) * T
        g_int = np.interp(mids, gs.times, gs.values) * widths
        b_int = np.interp(mids, bs.times, bs.values) * widths
        phase_c = {}
        for r in range(m):
            for q in range(3):
                w = widths[r, q]
                if has_bias:
                    half = np.exp(-0.5j * (w * coupler + b_int[r, q] * bias))
                else:
                    half = phase_c.get(w)
                    if half is None:
                        half = phase_c[w] = np.exp(-0.5j * w * coupler)
                psi = half * psi
                psi = _rotate(psi, n, g_int[r, q])
                psi *= half
    return psi


def probabilities(psi: np.ndarray) -> np.ndarray:
    p = np.abs(psi) ** 2
    return p / p.sum()


def outcome_entropy(psi: np.ndarray) -> float:
    """Shannon entropy (bits) of the computational-basis outcome distribution."""
    p = probabilities(psi)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


def measure(final, shots: int, seed: int, instance: SpinGlassInstance | None = None) -> SampleSet:
    """Born-rule samples of ``final``; energies under ``instance``.

    Without an instance the samples are scored against the all-zero
    Hamiltonian (all energies 0, ordered by bit string).
    """
    psi = np.asarray(final)
    dim = psi.shape[0]
    n = dim.bit_length() - 1
    if dim != 1 << n or n < 1:
        raise ParameterError("wave function length must be a power of two")
    if abs(float(np.vdot(psi, psi).real) - 1.0) > NORM_TOL:
        raise ParameterError("wave function is not normalized")
    if instance is None:
        instance = SpinGlassInstance(n)
    rng = np.random.default_rng(int(seed) % 2**64)
    idx = rng.choice(dim, size=int(shots), p=probabilities(psi))
    return SampleSet.from_states(
        instance, states_from_indices(idx, n), {"sampler": "qa-sim", "shots": int(shots)}
    )


@dataclass
class QaSimSampler:
    """Forward anneal from the uniform superposition, then Born-rule reads.

    ``gamma_start`` is in units of the instance's largest term strength; it
    must dominate the problem terms for the start state to be near the
    ground state of H(0). Budget is reported as annealing time per read.
    """

    total_time: float = 10.0
    gamma_start: float = 10.0
    steps: int | None = None

    def sample(self, instance, num_reads, seed):
        system = QaSystem(
            instance, ScheduleTable.forward(self.gamma_start * instance.scale), None, self.total_time
        )
        psi = evolve(system, None, self.steps)
        out = measure(psi, num_reads, seed, instance)
        out.info["budget"] = self.total_time * num_reads
        out.info["outcome_entropy"] = outcome_entropy(psi)
        return out


__all__ = [
    "ScheduleTable",
    "QaSystem",
    "QaSimSampler",
    "hamiltonian_at",
    "driver_matrix",
    "instantaneous_spectrum",
    "adiabatic_ratio",
    "ratio_from_operators",
    "spectrum_rows",
    "evolve",
    "default_steps",
    "plus_state",
    "basis_state",
    "probabilities",
    "outcome_entropy",
    "fidelity",
    "measure",
]
