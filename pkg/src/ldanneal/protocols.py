"""Local search, global search and their alternating hybrid.

All energies reported here are evaluated on the original instance; the
modified Hamiltonians are only ever handed to the sampler.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import LdaError
from .feature import (
    FeatureSpec,
    ProtocolParams,
    build_hfm,
    lambda_at,
    select_samples,
    update_mask,
)
from .samplers import SampleSet, Sampler
from .spin_model import SpinGlassInstance, as_state, energy, to_bits

CONVERGED = "converged"
ITERATION_CAP = "iteration-cap"
BUDGET_CAP = "budget-cap"

_STAGE_CODES = {"init": 0, "local": 1, "global": 2}


class SamplerFailure(LdaError):
    """A sampler call raised; carries the protocol position."""


@dataclass
class IterationRecord:
    stage: str
    cycle: int
    iteration: int
    mixing: float
    mask_popcount: int
    best_state: np.ndarray
    best_energy: float
    sample_energy: float
    sample_entropy: float
    selected: int
    budget: float
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "cycle": self.cycle,
            "iteration": self.iteration,
            "lambda": self.mixing,
            "mask_popcount": self.mask_popcount,
            "best_energy": self.best_energy,
            "best_bits": to_bits(self.best_state),
            "sample_energy": self.sample_energy,
            "sample_entropy": self.sample_entropy,
            "selected": self.selected,
            "budget": self.budget,
            "wall_time": self.wall_time,
        }


@dataclass
class SolveResult:
    """Outcome of a protocol run.

    ``state`` is what the protocol hands on (the protocol's own output, which
    in global search may be worse than ``best_state``); ``best_state`` is the
    lowest-energy state seen.
    """

    best_state: np.ndarray
    best_energy: float
    state: np.ndarray
    termination: str
    records: list = field(default_factory=list)
    minima: list = field(default_factory=list)

    @property
    def budget(self) -> float:
        return float(sum(r.budget for r in self.records))


def iteration_seed(seed: int, stage: str, cycle: int, iteration: int) -> int:
    ss = np.random.SeedSequence([int(seed) % 2**63, _STAGE_CODES[stage], cycle, iteration])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class _Tracker:
    def __init__(self, instance, state, energy_):
        self.instance = instance
        self.state = state.copy()
        self.energy = energy_

    def offer(self, samples: SampleSet):
        if len(samples) and samples.energies[0] < self.energy:
            self.state = samples.states[0].copy()
            self.energy = float(samples.energies[0])


def _draw(sampler: Sampler, hamiltonian, instance, params, seed, where) -> SampleSet:
    try:
        raw = sampler.sample(hamiltonian, params.n_samples, seed)
    except Exception as exc:
        raise SamplerFailure(f"sampler failed during {where}: {exc}") from exc
    scored = raw.rescored(instance)
    scored.info.setdefault("budget", raw.info.get("budget", 0))
    return scored


def _carry_best(records, new):
    """Append ``new`` so that the reported best is best-so-far over the run."""
    prev = records[-1] if records else None
    for r in new:
        if prev is not None and prev.best_energy <= r.best_energy:
            r.best_energy = prev.best_energy
            r.best_state = prev.best_state.copy()
        records.append(r)
        prev = r


def _over_budget(params, spent):
    return params.max_budget is not None and spent >= params.max_budget


def local_search(
    instance: SpinGlassInstance,
    initial,
    params: ProtocolParams,
    sampler: Sampler,
    *,
    cycle: int = 0,
    budget_spent: float = 0.0,
) -> SolveResult:
    """Iterate towards a nearby local minimum.

    Iteration ``i`` samples the masked mixture built around the current
    reference with mixing ``lambda_at(i)``; the mask starts all-ones and is
    then rebuilt from the dispersed subset of each sample set. The next
    reference is the lowest-energy sample. Stops when the reference repeats.
    """
    alpha = as_state(initial, instance.n_sites)
    n = instance.n_sites
    mask = np.ones(n, dtype=np.uint8)
    best = _Tracker(instance, alpha, energy(instance, alpha))
    records = []
    termination = ITERATION_CAP
    for i in range(params.local_iterations):
        if _over_budget(params, budget_spent):
            termination = BUDGET_CAP
            break
        t0 = time.perf_counter()
        lam = lambda_at(i, params)
        hfm = build_hfm(instance, FeatureSpec(alpha, mask, lam))
        seed = iteration_seed(params.seed, "local", cycle, i)
        samples = _draw(sampler, hfm, instance, params, seed, f"local search iteration {i}")
        chosen = select_samples(instance, samples, params.n_select, params.q_select)
        mask = update_mask(chosen) if len(chosen) else np.zeros(n, dtype=np.uint8)
        best.offer(samples)
        spent = float(samples.info.get("budget", 0))
        budget_spent += spent
        records.append(
            IterationRecord(
                "local", cycle, i, lam, int(mask.sum()), best.state.copy(), best.energy,
                float(samples.energies[0]) if len(samples) else float("nan"),
                samples.entropy(), len(chosen), spent, time.perf_counter() - t0,
            )
        )
        if not len(samples):
            continue
        nxt = samples.states[0]
        if np.array_equal(nxt, alpha):
            termination = CONVERGED
            break
        alpha = nxt.copy()
    return SolveResult(best.state, best.energy, alpha, termination, records)


def global_search(
    instance: SpinGlassInstance,
    local_min,
    params: ProtocolParams,
    sampler: Sampler,
    exclusions=(),
    *,
    cycle: int = 0,
    budget_spent: float = 0.0,
) -> SolveResult:
    """Look for a lower-energy valley than ``local_min``.

    Starts from the unmodified problem (empty mask) and grows the mask from
    the sites on which the dispersed subset, plus ``local_min`` itself,
    agree. Candidates too similar to ``local_min`` or to any state in
    ``exclusions`` (threshold ``q_exclude``) are never selected. Returns as
    soon as the lowest selected state beats ``local_min``.
    """
    anchor = as_state(local_min, instance.n_sites)
    n = instance.n_sites
    e_anchor = energy(instance, anchor)
    excl = [(anchor, params.q_exclude)] + [
        (as_state(x, n), params.q_exclude) for x in exclusions
    ]
    mask = np.zeros(n, dtype=np.uint8)
    lam = params.lambda_global
    best = _Tracker(instance, anchor, e_anchor)
    records = []
    out = anchor.copy()
    termination = ITERATION_CAP
    for i in range(params.global_iterations):
        if _over_budget(params, budget_spent):
            termination = BUDGET_CAP
            break
        t0 = time.perf_counter()
        hfm = build_hfm(instance, FeatureSpec(anchor, mask, lam))
        seed = iteration_seed(params.seed, "global", cycle, i)
        samples = _draw(sampler, hfm, instance, params, seed, f"global search iteration {i}")
        chosen = select_samples(instance, samples, params.n_select, params.q_select, excl)
        mask = update_mask(np.vstack([chosen.states, anchor[None, :]]))
        best.offer(samples)
        spent = float(samples.info.get("budget", 0))
        budget_spent += spent
        records.append(
            IterationRecord(
                "global", cycle, i, lam, int(mask.sum()), best.state.copy(), best.energy,
                float(samples.energies[0]) if len(samples) else float("nan"),
                samples.entropy(), len(chosen), spent, time.perf_counter() - t0,
            )
        )
        if len(chosen):
            out = chosen.states[0].copy()
            if chosen.energies[0] < e_anchor:
                termination = CONVERGED
                break
    return SolveResult(best.state, best.energy, out, termination, records)


def hybrid_solve(
    instance: SpinGlassInstance,
    initial,
    params: ProtocolParams,
    sampler: Sampler,
    cycles: int,
) -> SolveResult:
    """Alternate local and global search for ``cycles`` cycles.

    Without an initial state, one sampler call on the unmodified instance
    supplies it. Each local minimum found is added to the exclusion list of
    later global searches (most recent ``max_exclusions`` kept).
    """
    n = instance.n_sites
    records = []
    spent = 0.0
    if initial is None:
        t0 = time.perf_counter()
        seed = iteration_seed(params.seed, "init", 0, 0)
        samples = _draw(sampler, instance, instance, params, seed, "initial sampling")
        if not len(samples):
            raise SamplerFailure("initial sampling returned no states")
        current = samples.states[0].copy()
        spent = float(samples.info.get("budget", 0))
        records.append(
            IterationRecord(
                "init", 0, 0, 0.0, 0, current.copy(), float(samples.energies[0]),
                float(samples.energies[0]), samples.entropy(), 0, spent,
                time.perf_counter() - t0,
            )
        )
    else:
        current = as_state(initial, n).copy()
        e0 = energy(instance, current)
        records.append(
            IterationRecord("init", 0, 0, 0.0, 0, current.copy(), e0, e0, 0.0, 0, 0.0, 0.0)
        )
    best_state = current.copy()
    best_energy = energy(instance, current)
    minima = []
    termination = ITERATION_CAP
    for c in range(cycles):
        local = local_search(instance, current, params, sampler, cycle=c, budget_spent=spent)
        _carry_best(records, local.records)
        spent += local.budget
        if local.best_energy < best_energy:
            best_state, best_energy = local.best_state.copy(), local.best_energy
        if local.termination == BUDGET_CAP:
            termination = BUDGET_CAP
            break
        # the local minimum is the lowest state this stage saw
        anchor = local.best_state
        prior = [m for m in minima if not np.array_equal(m, anchor)]
        glob = global_search(instance, anchor, params, sampler, prior, cycle=c, budget_spent=spent)
        _carry_best(records, glob.records)
        spent += glob.budget
        if not any(np.array_equal(m, anchor) for m in minima):
            minima.append(anchor.copy())
            if params.max_exclusions and len(minima) > params.max_exclusions:
                minima = minima[-params.max_exclusions:]
            elif not params.max_exclusions:
                minima = []
        if glob.best_energy < best_energy:
            best_state, best_energy = glob.best_state.copy(), glob.best_energy
        current = glob.state
        if glob.termination == BUDGET_CAP:
            termination = BUDGET_CAP
            break
    return SolveResult(best_state, best_energy, current, termination, records, minima)
