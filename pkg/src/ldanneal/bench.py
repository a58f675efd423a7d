"""LDA+SA against plain SA at an equal sweep budget.

Both methods start from the same state (the best of one SA batch on the
unmodified instance). The LDA run spends whatever sweeps its protocol uses;
plain SA then gets exactly that many sweeps, split over ``baseline_chains``
independent chains started from the shared initial state.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .feature import ProtocolParams
from .protocols import hybrid_solve, iteration_seed
from .samplers import SaConfig, SaSampler, sa_sample
from .spin_model import SpinGlassInstance, energy, to_bits

ROW_FIELDS = ("instance", "method", "seed", "final_energy", "budget", "elapsed", "best_bits")


@dataclass(frozen=True)
class BenchConfig:
    sweeps: int = 300           # sweeps per SA read inside LDA
    beta_start: float = 0.1
    beta_end: float = 10.0
    cycles: int = 4
    baseline_chains: int = 1    # chains sharing the plain-SA budget
    workers: int = 1


def initial_state(instance: SpinGlassInstance, params: ProtocolParams, cfg: BenchConfig):
    sampler = SaSampler(cfg.sweeps, cfg.beta_start, cfg.beta_end)
    seed = iteration_seed(params.seed, "init", 0, 0)
    samples = sampler.sample(instance, params.n_samples, seed)
    return samples.states[0].copy(), float(samples.info["budget"])


def run_lda(instance, initial, params, cfg: BenchConfig):
    sampler = SaSampler(cfg.sweeps, cfg.beta_start, cfg.beta_end, workers=cfg.workers)
    return hybrid_solve(instance, initial, params, sampler, cfg.cycles)


def run_plain_sa(instance, initial, budget: int, seed: int, cfg: BenchConfig):
    """Best of ``baseline_chains`` chains that together use ``budget`` sweeps."""
    chains = max(1, int(cfg.baseline_chains))
    sweeps = int(budget) // chains
    config = SaConfig(sweeps, cfg.beta_start, cfg.beta_end, "geometric", chains, seed)
    samples = sa_sample(instance, config, initial, workers=cfg.workers)
    state, e = samples.first
    e0 = energy(instance, initial)
    if e0 < e:
        state, e = initial, e0
    return state.copy(), e, sweeps * chains


def compare(name: str, instance: SpinGlassInstance, params: ProtocolParams, cfg: BenchConfig):
    """Two result rows (``lda``, ``sa``) for one (instance, seed)."""
    init, _ = initial_state(instance, params, cfg)
    t0 = time.perf_counter()
    lda = run_lda(instance, init, params, cfg)
    t_lda = time.perf_counter() - t0
    t0 = time.perf_counter()
    sa_state, _, sa_budget = run_plain_sa(
        instance, init, lda.budget, iteration_seed(params.seed, "global", 1 << 20, 0), cfg
    )
    t_sa = time.perf_counter() - t0
    rows = []
    for method, state, budget, elapsed in (
        ("lda", lda.best_state, lda.budget, t_lda),
        ("sa", sa_state, sa_budget, t_sa),
    ):
        rows.append(
            {
                "instance": name,
                "method": method,
                "seed": params.seed,
                # always re-evaluated on the original instance before emission
                "final_energy": energy(instance, state),
                "budget": float(budget),
                "elapsed": elapsed,
                "best_bits": to_bits(state),
            }
        )
    return rows


def run_bench(instances: dict, seeds, params: ProtocolParams, cfg: BenchConfig, jobs: int = 1):
    """Rows for every (instance, seed), sorted by (instance, method, seed)."""
    tasks = [(name, inst, s) for name, inst in sorted(instances.items()) for s in seeds]

    def job(task):
        name, inst, s = task
        p = ProtocolParams(**{**asdict(params), "seed": int(s)})
        return compare(name, inst, p, cfg)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(job, tasks))
    else:
        chunks = [job(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r["instance"], r["method"], r["seed"]))
    return rows


def summarize(rows):
    """Per-instance win/tie/loss of LDA against SA (mean energy over seeds)."""
    by = {}
    for r in rows:
        by.setdefault(r["instance"], {}).setdefault(r["method"], []).append(r["final_energy"])
    out = {}
    for name, d in sorted(by.items()):
        lda, sa = float(np.mean(d.get("lda", [np.nan]))), float(np.mean(d.get("sa", [np.nan])))
        out[name] = {"lda": lda, "sa": sa, "lda_not_worse": bool(lda <= sa)}
    return out


__all__ = ["BenchConfig", "ROW_FIELDS", "compare", "run_bench", "summarize", "run_lda", "run_plain_sa", "initial_state"]
