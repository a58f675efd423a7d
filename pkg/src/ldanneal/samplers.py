"""Low-energy state generators: simulated annealing, greedy descent, exhaustive scan.

Every sampler returns a :class:`SampleSet` sorted by energy, ties broken by
bit string and then by production order.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import kernels
from .errors import CapabilityError, DimensionError, ParameterError
from .spin_model import (
    DEGENERACY_RTOL,
    SpinGlassInstance,
    as_state,
    as_states,
    energies,
    flip_deltas,
    states_from_indices,
)

EXACT_MAX_SITES = 26
_UNIFORM_BLOCK = 1 << 18  # uniforms drawn per block, per chain


def _sort_order(states: np.ndarray, values: np.ndarray) -> np.ndarray:
    # primary: energy; then a_{n-1}, ..., a_0; lexsort is stable
    keys = tuple(states[:, i] for i in range(states.shape[1])) + (values,)
    return np.lexsort(keys)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """States with their energies under one designated instance."""

    states: np.ndarray
    energies: np.ndarray
    info: dict = field(default_factory=dict)

    @classmethod
    def from_states(cls, instance: SpinGlassInstance, states, info=None) -> "SampleSet":
        s = as_states(states, instance.n_sites)
        e = energies(instance, s)
        order = _sort_order(s, e)
        return cls(s[order], e[order], dict(info or {}))

    @classmethod
    def empty(cls, n_sites: int) -> "SampleSet":
        return cls(np.empty((0, n_sites), dtype=np.int8), np.empty(0), {})

    def __len__(self):
        return self.states.shape[0]

    def __iter__(self):
        return iter(zip(self.states, self.energies))

    @property
    def n_sites(self) -> int:
        return self.states.shape[1]

    @property
    def first(self):
        if not len(self):
            raise IndexError("empty sample set")
        return self.states[0], float(self.energies[0])

    def rescored(self, instance: SpinGlassInstance) -> "SampleSet":
        """Same states, energies and ordering under ``instance``."""
        return SampleSet.from_states(instance, self.states, self.info)

    def entropy(self) -> float:
        """Shannon entropy (bits) of the empirical outcome distribution."""
        if not len(self):
            return 0.0
        _, counts = np.unique(self.states, axis=0, return_counts=True)
        p = counts / counts.sum()
        return float(-(p * np.log2(p)).sum())


class Sampler(Protocol):
    """Anything the search protocols can draw states from."""

    def sample(self, instance: SpinGlassInstance, num_reads: int, seed: int) -> SampleSet:
        ...


# -- simulated annealing -----------------------------------------------------


@dataclass(frozen=True)
class SaConfig:
    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    schedule: str = "geometric"
    chains: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 0:
            raise ParameterError("sweeps must be non-negative")
        if self.chains < 1:
            raise ParameterError("chains must be positive")
        if self.schedule not in ("geometric", "linear"):
            raise ParameterError(f"unknown beta schedule {self.schedule!r}")
        if self.schedule == "geometric" and (self.beta_start <= 0 or self.beta_end <= 0):
            raise ParameterError("geometric schedule needs beta_start, beta_end > 0")
        if self.beta_start < 0 or self.beta_end < 0:
            raise ParameterError("inverse temperatures must be non-negative")


def beta_schedule(config: SaConfig) -> np.ndarray:
    """Inverse temperature for each sweep (updated once per sweep)."""
    n = config.sweeps
    if n == 0:
        return np.empty(0)
    if n == 1:
        return np.array([float(config.beta_end)])
    if config.schedule == "geometric":
        return config.beta_start * (config.beta_end / config.beta_start) ** (np.arange(n) / (n - 1))
    return np.linspace(config.beta_start, config.beta_end, n)


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    """Independent stream for one chain, fixed by ``(seed, chain)`` alone."""
    return np.random.default_rng(np.random.SeedSequence(int(seed) % 2**64, spawn_key=(chain,)))


def _run_chain(instance, betas, initial, seed, chain):
    n = instance.n_sites
    rng = chain_rng(seed, chain)
    if initial is None:
        spins = (2 * rng.integers(0, 2, size=n) - 1).astype(np.int8)
    else:
        spins = initial.copy()
    indptr, nbr, w = instance.csr
    h = instance.h_dense
    block = max(1, _UNIFORM_BLOCK // n)
    accepted = 0
    for lo in range(0, len(betas), block):
        b = betas[lo:lo + block]
        u = rng.random((len(b), n))
        accepted += kernels.metropolis_sweeps(spins, h, indptr, nbr, w, b, u)
    return spins, accepted


def sa_sample(instance: SpinGlassInstance, config: SaConfig, initial=None, workers: int = 1) -> SampleSet:
    """Independent single-spin-flip Metropolis chains; one final state per chain."""
    if initial is not None:
        initial = as_state(initial, instance.n_sites)
    betas = beta_schedule(config)

    def job(c):
        return _run_chain(instance, betas, initial, config.seed, c)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(config.chains)))
    else:
        results = [job(c) for c in range(config.chains)]
    states = np.stack([r[0] for r in results])
    info = {
        "sampler": "sa",
        "budget": config.sweeps * config.chains,
        "accepted": int(sum(r[1] for r in results)),
    }
    return SampleSet.from_states(instance, states, info)


@dataclass
class SaSampler:
    """Simulated annealing behind the :class:`Sampler` interface.

    Budget is counted in sweeps (``sweeps`` per read).
    """

    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    schedule: str = "geometric"
    initial: np.ndarray | None = None
    workers: int = 1

    def sample(self, instance, num_reads, seed):
        cfg = SaConfig(self.sweeps, self.beta_start, self.beta_end, self.schedule, num_reads, seed)
        return sa_sample(instance, cfg, self.initial, self.workers)


# -- greedy descent ----------------------------------------------------------


def greedy_descent(instance: SpinGlassInstance, initial, allow_inversion: bool = False):
    """Steepest descent over single flips (and optionally global inversion).

    Stops when no move lowers the energy by more than the degeneracy
    tolerance. Ties between moves go to the lowest site index; inversion wins
    only if strictly better than the best single flip.
    """
    s = as_state(initial, instance.n_sites).copy()
    tol = DEGENERACY_RTOL * instance.scale
    h = instance.h_dense
    while True:
        d = flip_deltas(instance, s)
        k = int(np.argmin(d))
        best = d[k]
        inv = -2.0 * float(h @ s) if allow_inversion else 0.0
        if allow_inversion and inv < best and inv < -tol:
            s = -s
            continue
        if best >= -tol:
            return s
        s[k] = -s[k]


@dataclass
class GreedySampler:
    """Greedy descent from uniformly random starts."""

    allow_inversion: bool = False

    def sample(self, instance, num_reads, seed):
        rng = np.random.default_rng(int(seed) % 2**64)
        starts = 2 * rng.integers(0, 2, size=(num_reads, instance.n_sites)) - 1
        out = [greedy_descent(instance, s, self.allow_inversion) for s in starts]
        return SampleSet.from_states(instance, np.stack(out), {"sampler": "greedy", "budget": num_reads})


# -- exhaustive enumeration --------------------------------------------------


def exact_enumerate(instance: SpinGlassInstance, k: int, max_sites: int = EXACT_MAX_SITES) -> SampleSet:
    """The ``k`` lowest of all ``2**n`` states, exactly.

    ``info`` carries ``ground_energy`` and ``degeneracy`` (number of states at
    the ground energy, counted over the whole space).
    """
    n = instance.n_sites
    if n > max_sites:
        raise CapabilityError(f"exhaustive enumeration limited to {max_sites} sites, got {n}")
    if k < 1:
        raise ParameterError("k must be positive")
    total = 1 << n
    k = min(int(k), total)
    ei, ej, jv = instance.edge_arrays
    hi, hv = instance.bias_arrays
    idx, e, min_e, count = kernels.enumerate_lowest(n, 0, total, k, ei, ej, jv, hi, hv)
    order = np.lexsort((idx, e))
    idx, e = idx[order], e[order]
    info = {
        "sampler": "exact",
        "ground_energy": float(min_e),
        "degeneracy": int(count),
        "budget": total,
    }
    return SampleSet(states_from_indices(idx, n), np.asarray(e, dtype=np.float64), info)


@dataclass
class ExactSampler:
    """Returns the ``num_reads`` lowest states; ignores the seed."""

    max_sites: int = EXACT_MAX_SITES

    def sample(self, instance, num_reads, seed=0):
        return exact_enumerate(instance, num_reads, self.max_sites)


def verify_energies(instance: SpinGlassInstance, samples: SampleSet) -> bool:
    """True iff every stored energy equals a fresh evaluation."""
    if samples.n_sites != instance.n_sites:
        raise DimensionError("sample set does not match instance")
    return bool(np.array_equal(energies(instance, samples.states), samples.energies))


__all__ = [
    "SampleSet",
    "Sampler",
    "SaConfig",
    "SaSampler",
    "GreedySampler",
    "ExactSampler",
    "beta_schedule",
    "sa_sample",
    "greedy_descent",
    "exact_enumerate",
    "verify_energies",
]
