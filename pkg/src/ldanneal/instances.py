"""Instance generation and the plain-text instance and topology formats.

Instance file::

    # comment lines start with '#'
    N
    i j J_ij     (i < j: coupler)
    i i h_i      (bias)

Values are written as the shortest decimal that round-trips the float.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParameterError, ParseError
from .spin_model import SpinGlassInstance, from_bits

NAT7 = tuple(sorted([Fraction(k, 7) for k in range(1, 8)] + [Fraction(-k, 7) for k in range(1, 8)]))


def parse_values(text: str) -> tuple[Fraction, ...]:
    """``"nat7"`` or a comma-separated list of rationals/decimals."""
    t = text.strip().lower()
    if t == "nat7":
        return NAT7
    try:
        vals = tuple(Fraction(v.strip()) for v in t.split(",") if v.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"bad value set {text!r}: {exc}") from None
    if not vals:
        raise ParameterError("value set is empty")
    return vals


@dataclass(frozen=True)
class Topology:
    """Simple undirected graph; edges stored as sorted ``(i, j)`` with ``i < j``."""

    n_sites: int
    edges: tuple

    def __post_init__(self):
        n = int(self.n_sites)
        if n <= 0:
            raise ParameterError("n_sites must be positive")
        seen = set()
        for e in self.edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise ParameterError(f"self edge at site {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ParameterError(f"edge ({i}, {j}) out of range for {n} sites")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ParameterError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "n_sites", n)
        object.__setattr__(self, "edges", tuple(sorted(seen)))


def triangular_topology(rows: int, cols: int) -> Topology:
    """Triangular lattice on a torus; site ``r * cols + c``.

    Neighbours are ``(r, c±1)``, ``(r±1, c)``, ``(r+1, c+1)`` and
    ``(r-1, c-1)``, all wrapped. On narrow tori some of these coincide and
    are kept once.
    """
    if rows < 2 or cols < 2:
        raise ParameterError("triangular lattice needs rows, cols >= 2")
    edges = set()
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            for dr, dc in ((0, 1), (1, 0), (1, 1)):
                j = ((r + dr) % rows) * cols + (c + dc) % cols
                if i != j:
                    edges.add((min(i, j), max(i, j)))
    return Topology(rows * cols, tuple(edges))


@dataclass(frozen=True)
class GeneratorSpec:
    """Coupler value set, optional bias value set, and seed.

    Values are drawn uniformly by integer index, so generation depends only
    on the seed and the (exact) value list.
    """

    values: tuple = NAT7
    bias_values: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        if not vals:
            raise ParameterError("coupler value set is empty")
        object.__setattr__(self, "values", vals)
        if self.bias_values is not None:
            bv = tuple(Fraction(v) for v in self.bias_values)
            if not bv:
                raise ParameterError("bias value set is empty")
            object.__setattr__(self, "bias_values", bv)


def generate_on_topology(topology: Topology, spec: GeneratorSpec) -> SpinGlassInstance:
    """One coupler per edge drawn from ``spec.values``; biases zero unless
    ``spec.bias_values`` is given."""
    rng = np.random.default_rng(int(spec.seed) % 2**64)
    picks = rng.integers(0, len(spec.values), size=len(topology.edges))
    couplers = {e: float(spec.values[k]) for e, k in zip(topology.edges, picks)}
    biases = {}
    if spec.bias_values is not None:
        bpicks = rng.integers(0, len(spec.bias_values), size=topology.n_sites)
        biases = {i: float(spec.bias_values[k]) for i, k in enumerate(bpicks)}
    return SpinGlassInstance(topology.n_sites, couplers, biases)


def generate_triangular(rows: int, cols: int, spec: GeneratorSpec = GeneratorSpec()) -> SpinGlassInstance:
    return generate_on_topology(triangular_topology(rows, cols), spec)


# -- text formats ------------------------------------------------------------


def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def _header(lines, path):
    try:
        lineno, fields = next(lines)
    except StopIteration:
        raise ParseError("missing site count", path=path) from None
    if len(fields) != 1:
        raise ParseError("first line must hold the site count only", lineno, path)
    try:
        n = int(fields[0])
    except ValueError:
        raise ParseError(f"bad site count {fields[0]!r}", lineno, path) from None
    if n <= 0:
        raise ParseError("site count must be positive", lineno, path)
    return n


def parse_instance(text: str, path=None) -> SpinGlassInstance:
    lines = _data_lines(text)
    n = _header(lines, path)
    couplers, biases = {}, {}
    for lineno, fields in lines:
        if len(fields) != 3:
            raise ParseError(f"expected 'i j value', got {len(fields)} fields", lineno, path)
        try:
            i, j = int(fields[0]), int(fields[1])
            v = float(fields[2])
        except ValueError:
            raise ParseError("malformed term", lineno, path) from None
        if not np.isfinite(v):
            raise ParseError("value is not finite", lineno, path)
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"index out of range for {n} sites", lineno, path)
        if i > j:
            raise ParseError(f"coupler ({i}, {j}) must be written with i < j", lineno, path)
        if i == j:
            if i in biases:
                raise ParseError(f"duplicate bias {i}", lineno, path)
            biases[i] = v
        else:
            if (i, j) in couplers:
                raise ParseError(f"duplicate coupler ({i}, {j})", lineno, path)
            couplers[(i, j)] = v
    return SpinGlassInstance(n, couplers, biases)


def format_instance(instance: SpinGlassInstance, comment: str | None = None) -> str:
    out = []
    if comment:
        out.extend(f"# {c}" for c in comment.splitlines())
    out.append(str(instance.n_sites))
    out.extend(f"{i} {j} {v!r}" for (i, j), v in instance.couplers.items())
    out.extend(f"{i} {i} {v!r}" for i, v in instance.biases.items())
    return "\n".join(out) + "\n"


def read_instance(path) -> SpinGlassInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read(), os.fspath(path))


def write_instance(instance: SpinGlassInstance, path, comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_instance(instance, comment))


def parse_topology(text: str, path=None) -> Topology:
    """Edge list: site count, then one ``i j`` pair per line."""
    lines = _data_lines(text)
    n = _header(lines, path)
    edges = []
    seen = set()
    for lineno, fields in lines:
        if len(fields) != 2:
            raise ParseError("expected 'i j'", lineno, path)
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            raise ParseError("malformed edge", lineno, path) from None
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"invalid edge ({i}, {j})", lineno, path)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(f"duplicate edge {key}", lineno, path)
        seen.add(key)
        edges.append(key)
    return Topology(n, tuple(edges))


def read_topology(path) -> Topology:
    with open(path, encoding="utf-8") as fh:
        return parse_topology(fh.read(), os.fspath(path))


def read_state(path, n_sites: int | None = None):
    """A state file holds one bit string ``a_{N-1} ... a_0``."""
    with open(path, encoding="utf-8") as fh:
        body = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if len(body) != 1:
        raise ParseError("state file must hold exactly one bit string", path=os.fspath(path))
    try:
        s = from_bits(body[0])
    except (ValueError, ParameterError) as exc:
        raise ParseError(str(exc), path=os.fspath(path)) from None
    if n_sites is not None and s.shape[0] != n_sites:
        raise ParseError(f"state has {s.shape[0]} sites, instance has {n_sites}", path=os.fspath(path))
    return s


__all__ = [
    "NAT7",
    "Topology",
    "GeneratorSpec",
    "parse_values",
    "triangular_topology",
    "generate_on_topology",
    "generate_triangular",
    "parse_instance",
    "format_instance",
    "read_instance",
    "write_instance",
    "parse_topology",
    "read_topology",
    "read_state",
]
