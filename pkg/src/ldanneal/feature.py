"""Feature Hamiltonian, masked mixture, and the helpers the search protocols use."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DimensionError, ParameterError
from .samplers import SampleSet
from .spin_model import SpinGlassInstance, as_state, as_states, q_f_batch


def as_mask(bits, n_sites: int | None = None) -> np.ndarray:
    m = np.asarray(bits)
    if m.ndim != 1 or not np.all((m == 0) | (m == 1)):
        raise ParameterError("mask must be a one-dimensional 0/1 sequence")
    if n_sites is not None and m.shape[0] != n_sites:
        raise DimensionError(f"mask has {m.shape[0]} bits, instance has {n_sites}")
    return m.astype(np.uint8)


@dataclass(frozen=True, eq=False)
class FeatureSpec:
    """Reference state, site mask and mixing strength for :func:`build_hfm`."""

    reference: np.ndarray
    mask: np.ndarray
    mixing: float

    def __post_init__(self):
        ref = as_state(self.reference)
        mask = as_mask(self.mask, ref.shape[0])
        if not 0.0 <= self.mixing <= 1.0:
            raise ParameterError(f"mixing strength must lie in [0, 1], got {self.mixing}")
        object.__setattr__(self, "reference", ref)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "mixing", float(self.mixing))


@dataclass(frozen=True)
class ProtocolParams:
    n_samples: int = 100
    n_select: int = 5
    q_select: float = 0.98
    q_exclude: float = 0.9
    lambda_start: float = 0.2
    lambda_end: float = 1.0
    lambda_global: float = 1.0
    local_iterations: int = 8
    global_iterations: int = 8
    seed: int = 0
    max_exclusions: int = 16
    max_budget: float | None = None

    def __post_init__(self):
        if self.n_samples < 1 or self.n_select < 1:
            raise ParameterError("n_samples and n_select must be positive")
        if self.n_select >= self.n_samples:
            raise ParameterError("n_select must be smaller than n_samples")
        for name in ("q_select", "q_exclude"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1]")
        if not 0.0 <= self.lambda_global <= 1.0:
            raise ParameterError("lambda_global must lie in [0, 1]")
        for name in ("lambda_start", "lambda_end"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ParameterError(f"{name} must lie in (0, 1]")
        if self.local_iterations < 1 or self.global_iterations < 1:
            raise ParameterError("iteration counts must be positive")
        if self.max_exclusions < 0:
            raise ParameterError("max_exclusions must be non-negative")


def _check(instance, reference):
    return as_state(reference, instance.n_sites)


def build_feature_hamiltonian(instance: SpinGlassInstance, reference) -> SpinGlassInstance:
    """Keep only terms satisfied by ``reference``; couplers become K_ij terms.

    ``K_ij = -(|J|/2) [a_i a_j s_i s_j + a_i s_i + a_j s_j]`` is expanded into
    one coupler and two bias contributions, so the result is an ordinary
    instance. Bias contributions are added in ascending coupler order after
    the retained original bias.
    """
    a = _check(instance, reference)
    couplers = {}
    biases = {i: h for i, h in instance.biases.items() if h * a[i] < 0}
    for (i, j), J in instance.couplers.items():
        ai, aj = int(a[i]), int(a[j])
        if J * ai * aj < 0:
            half = abs(J) / 2
            couplers[(i, j)] = -half * (ai * aj)
            biases[i] = biases.get(i, 0.0) + (-half * ai)
            biases[j] = biases.get(j, 0.0) + (-half * aj)
    return SpinGlassInstance(instance.n_sites, couplers, biases)


def build_hfm(instance: SpinGlassInstance, spec: FeatureSpec) -> SpinGlassInstance:
    """Masked mixture of the problem and feature Hamiltonians.

    On masked couplers (both ends set) the original strength is scaled by
    ``1 - lambda`` and, if satisfied by the reference, ``lambda * K_ij`` is
    added. Masked biases keep ``h_i`` when satisfied and become
    ``(1 - lambda) h_i`` otherwise. Unmasked terms are copied unchanged.
    """
    a = _check(instance, spec.reference)
    m = as_mask(spec.mask, instance.n_sites)
    lam = spec.mixing
    keep = 1.0 - lam
    couplers = {}
    biases = {}
    for i, h in instance.biases.items():
        if m[i]:
            biases[i] = h if h * a[i] < 0 else keep * h
        else:
            biases[i] = h
    for (i, j), J in instance.couplers.items():
        if not (m[i] and m[j]):
            couplers[(i, j)] = J
            continue
        ai, aj = int(a[i]), int(a[j])
        if J * ai * aj < 0:
            half = abs(J) / 2
            couplers[(i, j)] = keep * J + lam * (-half * (ai * aj))
            biases[i] = biases.get(i, 0.0) + lam * (-half * ai)
            biases[j] = biases.get(j, 0.0) + lam * (-half * aj)
        else:
            couplers[(i, j)] = keep * J
    return SpinGlassInstance(instance.n_sites, couplers, biases)


def lambda_at(i: int, params: ProtocolParams) -> float:
    """Geometric mixing schedule from ``lambda_start`` to ``lambda_end`` over
    the local-search iterations."""
    n_iter = params.local_iterations
    if not 0 <= i < n_iter:
        raise ParameterError(f"iteration {i} outside [0, {n_iter})")
    ls, lf = params.lambda_start, params.lambda_end
    if ls <= 0 or lf <= 0:
        raise ParameterError("geometric schedule needs positive endpoints")
    if n_iter == 1:
        return float(ls)
    return float(ls * (lf / ls) ** (i / (n_iter - 1)))


def select_samples(
    instance: SpinGlassInstance,
    samples: SampleSet,
    n_select: int,
    q_select: float,
    exclusions=(),
) -> SampleSet:
    """Greedy dispersed subset of ``samples``.

    ``samples`` is re-sorted under ``instance`` first. A candidate is taken
    while fewer than ``n_select`` are held, if its similarity to every held
    state is at most ``q_select`` and its similarity to every exclusion state
    ``x`` is at most that exclusion's threshold.
    """
    if not len(samples):
        return SampleSet.empty(instance.n_sites)
    ordered = samples.rescored(instance)
    states = ordered.states
    ok = np.ones(len(ordered), dtype=bool)
    for x, q_x in exclusions:
        ok &= q_f_batch(instance, x, states) <= q_x
    held = []
    rows = []
    for c in range(len(ordered)):
        if len(held) > n_select - 1:
            break
        if not ok[c]:
            continue
        if any(r[c] > q_select for r in rows):
            continue
        held.append(c)
        rows.append(q_f_batch(instance, states[c], states))
    held = np.array(held, dtype=np.int64)
    return SampleSet(states[held], ordered.energies[held], dict(ordered.info))


def update_mask(selected) -> np.ndarray:
    """Bit ``i`` is set iff every selected state has the same spin at ``i``."""
    s = selected.states if isinstance(selected, SampleSet) else as_states(selected)
    if s.shape[0] == 0:
        raise ParameterError("cannot build a mask from an empty selection")
    total = np.abs(s.astype(np.int64).sum(axis=0))
    return (total == s.shape[0]).astype(np.uint8)


def monotone_path(instance: SpinGlassInstance, reference, target) -> list[float]:
    """Feature-Hamiltonian energies along the lowest-index-first flip path.

    Starting at ``reference``, the lowest-indexed site that still differs from
    ``target`` is flipped until ``target`` is reached. Energies are evaluated
    in exact rational arithmetic and rounded once, so the sequence is exactly
    non-decreasing whenever the underlying exact values are.
    """
    a = _check(instance, reference)
    b = as_state(target, instance.n_sites)
    terms = []
    for (i, j), J in instance.couplers.items():
        ai, aj = int(a[i]), int(a[j])
        if J * ai * aj < 0:
            terms.append((i, j, ai, aj, Fraction(abs(J)) / 2))
    fields = [(i, Fraction(h)) for i, h in instance.biases.items() if h * a[i] < 0]

    def exact_energy(g):
        e = Fraction(0)
        for i, j, ai, aj, half in terms:
            e -= half * (ai * aj * g[i] * g[j] + ai * g[i] + aj * g[j])
        for i, h in fields:
            e += h * g[i]
        return e

    cur = [int(v) for v in a]
    out = [float(exact_energy(cur))]
    for k in np.flatnonzero(a != b):
        cur[k] = int(b[k])
        out.append(float(exact_energy(cur)))
    return out
