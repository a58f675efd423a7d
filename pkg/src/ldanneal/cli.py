"""Command-line entry point: ``ldanneal {generate,solve,sample,spectrum,evolve,bench}``.

Exit status: 0 success, 1 usage error, 2 parse error, 3 capability guard.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import ROW_FIELDS, BenchConfig, run_bench, summarize
from .errors import CapabilityError, LdaError, ParseError
from .feature import ProtocolParams
from .instances import (
    GeneratorSpec,
    generate_on_topology,
    generate_triangular,
    parse_values,
    read_instance,
    read_state,
    read_topology,
    write_instance,
)
from .protocols import hybrid_solve
from .qa_sim import (
    QaSimSampler,
    QaSystem,
    ScheduleTable,
    basis_state,
    evolve,
    measure,
    probabilities,
    spectrum_rows,
)
from .samplers import ExactSampler, GreedySampler, SaSampler
from .spin_model import from_bits, state_index, states_from_indices, to_bits

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_CAPABILITY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _schedule(text: str) -> ScheduleTable:
    """``"t:v,t:v,..."`` or a single number for a constant schedule."""
    try:
        if ":" not in text:
            return ScheduleTable.constant(float(text))
        pts = [tuple(float(x) for x in p.split(":")) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad schedule {text!r}") from None
    return ScheduleTable(pts)


def _add_sampler_args(p):
    p.add_argument("--sampler", choices=("sa", "exact", "qa-sim", "greedy"), default="sa")
    p.add_argument("--sweeps", type=int, default=1000, help="SA sweeps per read")
    p.add_argument("--beta-start", type=float, default=0.1)
    p.add_argument("--beta-end", type=float, default=10.0)
    p.add_argument("--anneal-time", type=float, default=10.0, help="qa-sim total time")
    p.add_argument("--workers", type=int, default=1)


def _make_sampler(args):
    if args.sampler == "sa":
        return SaSampler(args.sweeps, args.beta_start, args.beta_end, workers=args.workers)
    if args.sampler == "exact":
        return ExactSampler()
    if args.sampler == "greedy":
        return GreedySampler()
    return QaSimSampler(total_time=args.anneal_time)


def _add_protocol_args(p):
    d = ProtocolParams()
    p.add_argument("--cycles", type=int, default=2)
    p.add_argument("--local-iters", type=int, default=d.local_iterations)
    p.add_argument("--global-iters", type=int, default=d.global_iterations)
    p.add_argument("--n-samples", type=int, default=d.n_samples)
    p.add_argument("--n-select", type=int, default=d.n_select)
    p.add_argument("--q-select", type=float, default=d.q_select)
    p.add_argument("--q-exclude", type=float, default=d.q_exclude)
    p.add_argument("--lambda-start", type=float, default=d.lambda_start)
    p.add_argument("--lambda-end", type=float, default=d.lambda_end)
    p.add_argument("--lambda-global", type=float, default=d.lambda_global)
    p.add_argument("--max-exclusions", type=int, default=d.max_exclusions)
    p.add_argument("--max-budget", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)


def _params(args) -> ProtocolParams:
    return ProtocolParams(
        n_samples=args.n_samples,
        n_select=args.n_select,
        q_select=args.q_select,
        q_exclude=args.q_exclude,
        lambda_start=args.lambda_start,
        lambda_end=args.lambda_end,
        lambda_global=args.lambda_global,
        local_iterations=args.local_iters,
        global_iterations=args.global_iters,
        seed=args.seed,
        max_exclusions=args.max_exclusions,
        max_budget=args.max_budget,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ldanneal", description="Learning-driven annealing for Ising spin glasses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write random instances")
    g.add_argument("--rows", type=int, help="triangular lattice rows")
    g.add_argument("--cols", type=int, help="triangular lattice columns")
    g.add_argument("--topology", help="edge-list file instead of a lattice")
    g.add_argument("--values", default="nat7", help="'nat7' or comma-separated values, e.g. -1,1/2")
    g.add_argument("--bias-values", default=None, help="bias value set (default: no biases)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1, help="instances to write (seeds seed..seed+count-1)")
    g.add_argument("--out", required=True, help="file (count=1) or directory")

    s = sub.add_parser("solve", help="run the hybrid local/global solver")
    s.add_argument("instance")
    _add_sampler_args(s)
    _add_protocol_args(s)
    s.add_argument("--initial", help="file holding the initial bit string")
    s.add_argument("--out", help="result JSON (default: stdout)")
    s.add_argument("--trajectory", help="CSV of best energy against cumulative budget")

    a = sub.add_parser("sample", help="draw samples from one sampler")
    a.add_argument("instance")
    _add_sampler_args(a)
    a.add_argument("--num-reads", type=int, default=100)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", help="CSV of bits,energy (default: stdout)")

    sp = sub.add_parser("spectrum", help="instantaneous spectrum and adiabatic ratios (CSV)")
    sp.add_argument("instance")
    sp.add_argument("--gamma", type=_schedule, default=ScheduleTable.forward(2.0), help="'t:v,...' or constant")
    sp.add_argument("--hgain", type=_schedule, default=None)
    sp.add_argument("--anneal-time", type=float, default=1.0)
    sp.add_argument("--levels", type=int, default=4)
    sp.add_argument("--points", type=int, default=11, help="evenly spaced time fractions")
    sp.add_argument("--out", help="CSV (default: stdout)")

    e = sub.add_parser("evolve", help="Schrodinger evolution; CSV of final probabilities")
    e.add_argument("instance")
    e.add_argument("--gamma", type=_schedule, default=ScheduleTable.forward(10.0))
    e.add_argument("--hgain", type=_schedule, default=None)
    e.add_argument("--anneal-time", type=float, default=10.0)
    e.add_argument("--steps", type=int, default=None)
    e.add_argument("--initial", default="plus", help="'plus' or a bit string (reverse anneal)")
    e.add_argument("--shots", type=int, default=0, help="also print Born-rule samples")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", help="CSV (default: stdout)")

    b = sub.add_parser("bench", help="LDA+SA against plain SA at equal sweep budget")
    b.add_argument("directory", help="directory of instance files (*.txt)")
    b.add_argument("--seeds", default="0", help="comma-separated seeds")
    b.add_argument("--sweeps", type=int, default=BenchConfig.sweeps)
    b.add_argument("--beta-start", type=float, default=0.1)
    b.add_argument("--beta-end", type=float, default=10.0)
    b.add_argument("--cycles", type=int, default=BenchConfig.cycles)
    b.add_argument("--baseline-chains", type=int, default=BenchConfig.baseline_chains)
    b.add_argument("--n-samples", type=int, default=ProtocolParams.n_samples)
    b.add_argument("--n-select", type=int, default=ProtocolParams.n_select)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--csv", dest="csv_out", help="CSV table path")
    b.add_argument("--json", dest="json_out", help="JSON table path")
    return parser


# -- commands ----------------------------------------------------------------


def _emit(text: str, path):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    from io import StringIO

    buf = StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_generate(args):
    values = parse_values(args.values)
    bias = parse_values(args.bias_values) if args.bias_values else None
    if args.topology:
        topo = read_topology(args.topology)
        make = lambda spec: generate_on_topology(topo, spec)  # noqa: E731
        label = f"topology {os.path.basename(args.topology)}"
    else:
        if args.rows is None or args.cols is None:
            raise UsageError("generate needs --rows and --cols, or --topology")
        make = lambda spec: generate_triangular(args.rows, args.cols, spec)  # noqa: E731
        label = f"triangular {args.rows}x{args.cols}"
    if args.count < 1:
        raise UsageError("--count must be positive")
    out = Path(args.out)
    if args.count > 1 or out.is_dir():
        out.mkdir(parents=True, exist_ok=True)
        targets = [out / f"instance_{k:03d}.txt" for k in range(args.count)]
    else:
        targets = [out]
    for k, path in enumerate(targets):
        seed = args.seed + k
        inst = make(GeneratorSpec(values, bias, seed))
        write_instance(inst, path, comment=f"{label}, seed {seed}")
    return EXIT_OK


def solve_document(args, inst, result, params) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "instance": {"path": os.path.basename(args.instance), "n_sites": inst.n_sites,
                     "couplers": len(inst.couplers), "biases": len(inst.biases)},
        "sampler": {"name": args.sampler, "sweeps": args.sweeps, "beta_start": args.beta_start,
                    "beta_end": args.beta_end, "anneal_time": args.anneal_time},
        "params": {**params.__dict__, "cycles": args.cycles},
        "best_energy": result.best_energy,
        "best_bits": to_bits(result.best_state),
        "final_bits": to_bits(result.state),
        "termination": result.termination,
        "budget": result.budget,
        "minima": [to_bits(m) for m in result.minima],
        "records": [r.to_dict() for r in result.records],
    }


def cmd_solve(args):
    inst = read_instance(args.instance)
    params = _params(args)
    initial = read_state(args.initial, inst.n_sites) if args.initial else None
    result = hybrid_solve(inst, initial, params, _make_sampler(args), args.cycles)
    doc = solve_document(args, inst, result, params)
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    if args.trajectory:
        rows, spent = [], 0.0
        for r in result.records:
            spent += r.budget
            rows.append((r.stage, r.cycle, r.iteration, spent, repr(r.best_energy), r.sample_energy))
        Path(args.trajectory).write_text(
            _csv_text(("stage", "cycle", "iteration", "budget", "best_energy", "sample_energy"), rows),
            encoding="utf-8",
        )
    return EXIT_OK


def cmd_sample(args):
    inst = read_instance(args.instance)
    samples = _make_sampler(args).sample(inst, args.num_reads, args.seed)
    rows = [(to_bits(s), repr(float(e))) for s, e in samples]
    _emit(_csv_text(("bits", "energy"), rows), args.out)
    return EXIT_OK


def _system(args, inst):
    return QaSystem(inst, args.gamma, args.hgain, args.anneal_time)


def cmd_spectrum(args):
    inst = read_instance(args.instance)
    system = _system(args, inst)
    if args.points < 1:
        raise UsageError("--points must be positive")
    ts = np.linspace(0.0, 1.0, args.points) if args.points > 1 else np.array([0.0])
    rows = [(repr(t), m, repr(e), repr(r)) for t, m, e, r in spectrum_rows(system, ts, args.levels)]
    _emit(_csv_text(("t_fraction", "level", "energy", "ratio"), rows), args.out)
    return EXIT_OK


def cmd_evolve(args):
    inst = read_instance(args.instance)
    system = _system(args, inst)
    if args.initial == "plus":
        psi0 = None
    else:
        try:
            bits = from_bits(args.initial)
        except LdaError:
            raise UsageError(f"--initial must be 'plus' or a bit string, got {args.initial!r}") from None
        if bits.shape[0] != inst.n_sites:
            raise UsageError("--initial bit string length does not match the instance")
        psi0 = basis_state(state_index(bits), inst.n_sites)
    psi = evolve(system, psi0, args.steps)
    p = probabilities(psi)
    states = states_from_indices(np.arange(p.size), inst.n_sites)
    energies = system.classical_energies
    rows = [(to_bits(states[k]), repr(float(energies[k])), repr(float(p[k]))) for k in range(p.size)]
    text = _csv_text(("bits", "energy", "probability"), rows)
    if args.shots:
        samples = measure(psi, args.shots, args.seed, inst)
        text += "\n" + _csv_text(("sample_bits", "energy"), [(to_bits(s), repr(float(e))) for s, e in samples])
    _emit(text, args.out)
    return EXIT_OK


def cmd_bench(args):
    d = Path(args.directory)
    if not d.is_dir():
        raise UsageError(f"not a directory: {d}")
    files = sorted(d.glob("*.txt"))
    if not files:
        raise UsageError(f"no instance files (*.txt) in {d}")
    instances = {f.name: read_instance(f) for f in files}
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad --seeds {args.seeds!r}") from None
    params = ProtocolParams(n_samples=args.n_samples, n_select=args.n_select)
    cfg = BenchConfig(args.sweeps, args.beta_start, args.beta_end, args.cycles, args.baseline_chains, args.workers)
    rows = run_bench(instances, seeds, params, cfg, jobs=args.jobs)
    table = [tuple(r[k] if not isinstance(r[k], float) else repr(r[k]) for k in ROW_FIELDS) for r in rows]
    text = _csv_text(ROW_FIELDS, table)
    if args.csv_out:
        Path(args.csv_out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.json_out:
        doc = {"schema_version": SCHEMA_VERSION, "config": cfg.__dict__, "rows": rows, "summary": summarize(rows)}
        Path(args.json_out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "sample": cmd_sample,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapabilityError as exc:
        print(f"capability limit: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (OSError, LdaError) as exc:
        # a guard tripped inside a sampler arrives wrapped with protocol context
        if isinstance(exc.__cause__, CapabilityError):
            print(f"capability limit: {exc}", file=sys.stderr)
            return EXIT_CAPABILITY
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
