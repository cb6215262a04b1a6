"""Weighted Cartesian Genetic Programs: encoding, decoding and evaluation.

Node numbering: inputs are ``0 .. n_in-1``; internal nodes follow column by
column, so the node in row ``i`` of column ``j`` has id ``n_in + j*rows + i``.
For every node the chromosome holds one function gene followed by ``arity``
connection genes; the ``n_out`` output genes close the integer part. Weights
are stored separately, ``arity`` per node, in the same node order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from ..taylor import TaylorError, make_variable
from .kernels import KernelSet


class EvaluationError(ArithmeticError):
    """A node failed to evaluate (division by zero, domain error, ...)."""

    def __init__(self, node: int, cause: Exception):
        self.node = node
        self.cause = cause
        super().__init__(f"node {node}: {cause}")


class InactiveWeight(ValueError):
    pass


@dataclass(frozen=True)
class CgpParams:
    n_in: int
    n_out: int
    rows: int
    cols: int
    levels_back: int
    arity: int
    kernels: KernelSet

    def __post_init__(self):
        if isinstance(self.kernels, (list, tuple)):
            object.__setattr__(self, "kernels", KernelSet(self.kernels))
        for name in ("n_in", "n_out", "rows", "cols", "levels_back", "arity"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if any(k.binary for k in self.kernels) and self.arity < 2:
            raise ValueError("binary kernels need arity >= 2")

    @property
    def n_nodes(self) -> int:
        return self.rows * self.cols

    @property
    def n_genes(self) -> int:
        return (self.arity + 1) * self.n_nodes + self.n_out

    @property
    def n_weights(self) -> int:
        return self.arity * self.n_nodes

    def column(self, node: int) -> int:
        return (node - self.n_in) // self.rows

    def connection_range(self, node: int) -> tuple[int, int]:
        """Internal node ids a connection gene of ``node`` may address: [lo, hi).

        Inputs ``[0, n_in)`` are always addressable as well.
        """
        col = self.column(node)
        lo_col = max(0, col - self.levels_back)
        return self.n_in + self.rows * lo_col, self.n_in + self.rows * col

    def gene_options(self, gene: int) -> tuple:
        """All admissible values of gene ``gene``."""
        return _gene_options(self, gene)

    def _gene_options(self, gene: int) -> tuple:
        width = self.arity + 1
        if gene >= width * self.n_nodes:
            return tuple(range(self.n_in + self.n_nodes))
        node = self.n_in + gene // width
        if gene % width == 0:
            return tuple(range(len(self.kernels)))
        lo, hi = self.connection_range(node)
        return tuple(range(self.n_in)) + tuple(range(lo, hi))

    def with_(self, **changes) -> "CgpParams":
        from dataclasses import replace
        return replace(self, **changes)


@lru_cache(maxsize=None)
def _gene_options(p: CgpParams, gene: int) -> tuple:
    return p._gene_options(gene)


@dataclass(frozen=True)
class Chromosome:
    genes: tuple
    weights: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "genes", tuple(int(g) for g in self.genes))
        object.__setattr__(self, "weights", tuple(self.weights))

    @classmethod
    def unweighted(cls, genes: Sequence[int], params: CgpParams) -> "Chromosome":
        return cls(tuple(genes), (1.0,) * params.n_weights)

    def with_weights(self, weights: Iterable) -> "Chromosome":
        return Chromosome(self.genes, tuple(weights))

    def to_dict(self) -> dict:
        return {"genes": list(self.genes), "weights": [float(w) for w in self.weights]}

    @classmethod
    def from_dict(cls, d) -> "Chromosome":
        return cls(tuple(d["genes"]), tuple(float(w) for w in d.get("weights", ())))


@dataclass(frozen=True)
class Violation:
    gene: int
    message: str

    def __str__(self):
        return f"gene {self.gene}: {self.message}"


def weight_index(params: CgpParams, node: int, slot: int) -> int:
    return (node - params.n_in) * params.arity + slot


def weight_name(node: int, slot: int) -> str:
    return f"w{node}_{slot}"


def default_input_names(n_in: int) -> list[str]:
    return ["x", "y", "z"][:n_in] if n_in <= 3 else [f"x{i}" for i in range(n_in)]


def validate(x: Chromosome, p: CgpParams) -> list[Violation]:
    """All encoding violations of ``x`` (empty list: valid)."""
    out = []
    if len(x.genes) != p.n_genes:
        out.append(Violation(-1, f"expected {p.n_genes} genes, got {len(x.genes)}"))
        return out
    if len(x.weights) != p.n_weights:
        out.append(Violation(-1, f"expected {p.n_weights} weights, got {len(x.weights)}"))
    width = p.arity + 1
    for j in range(p.n_nodes):
        node = p.n_in + j
        base = j * width
        f = x.genes[base]
        if not 0 <= f < len(p.kernels):
            out.append(Violation(base, f"node {node}: function gene {f} not in [0, {len(p.kernels)})"))
        lo, hi = p.connection_range(node)
        for s in range(p.arity):
            c = x.genes[base + 1 + s]
            if not (0 <= c < p.n_in or lo <= c < hi):
                out.append(Violation(
                    base + 1 + s,
                    f"node {node}: connection {c} outside inputs and nodes [{lo}, {hi})"))
    top = p.n_in + p.n_nodes
    for k in range(p.n_out):
        g = width * p.n_nodes + k
        o = x.genes[g]
        if not 0 <= o < top:
            out.append(Violation(g, f"output {k}: gene {o} not in [0, {top})"))
    return out


@lru_cache(maxsize=65536)
def _active(genes: tuple, n_in: int, width: int, n_nodes: int, n_out: int) -> tuple:
    stack = [g for g in genes[width * n_nodes: width * n_nodes + n_out] if g >= n_in]
    seen = set()
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        base = (node - n_in) * width
        for c in genes[base + 1: base + width]:
            if c >= n_in and c not in seen:
                stack.append(c)
    return tuple(sorted(seen))


def active_nodes(x: Chromosome, p: CgpParams) -> tuple:
    """Internal nodes reachable from the outputs, in evaluation order."""
    return _active(x.genes, p.n_in, p.arity + 1, p.n_nodes, p.n_out)


def active_inputs(x: Chromosome, p: CgpParams) -> tuple:
    width = p.arity + 1
    used = set(g for g in output_genes(x, p) if g < p.n_in)
    for node in active_nodes(x, p):
        base = (node - p.n_in) * width
        used.update(c for c in x.genes[base + 1: base + width] if c < p.n_in)
    return tuple(sorted(used))


def output_genes(x: Chromosome, p: CgpParams) -> tuple:
    start = (p.arity + 1) * p.n_nodes
    return x.genes[start: start + p.n_out]


def active_genes(x: Chromosome, p: CgpParams) -> list[int]:
    """Indices of the function and connection genes of active nodes, then the output genes."""
    width = p.arity + 1
    out = []
    for node in active_nodes(x, p):
        base = (node - p.n_in) * width
        out.extend(range(base, base + width))
    out.extend(range(width * p.n_nodes, width * p.n_nodes + p.n_out))
    return out


def active_weights(x: Chromosome, p: CgpParams) -> list[int]:
    """Flat indices of the weights of active nodes."""
    out = []
    for node in active_nodes(x, p):
        start = (node - p.n_in) * p.arity
        out.extend(range(start, start + p.arity))
    return out


def evaluate(x: Chromosome, p: CgpParams, inputs: Sequence, use_weights: bool = False,
             weights: Sequence | None = None) -> list:
    """Outputs of the program for ``inputs`` (floats, arrays or GDuals).

    ``weights`` overrides the chromosome weights (e.g. with GDual entries from
    :func:`promote_weights`) and implies ``use_weights``.
    """
    if len(inputs) != p.n_in:
        raise ValueError(f"expected {p.n_in} inputs, got {len(inputs)}")
    if weights is not None:
        use_weights = True
    else:
        weights = x.weights
    genes = x.genes
    width = p.arity + 1
    n_in = p.n_in
    kernels = p.kernels
    values: dict = dict(enumerate(inputs))
    for node in active_nodes(x, p):
        j = node - n_in
        base = j * width
        ins = [values[c] for c in genes[base + 1: base + width]]
        if use_weights:
            w0 = j * p.arity
            ins = [weights[w0 + s] * v for s, v in enumerate(ins)]
        try:
            values[node] = kernels[genes[base]](ins)
        except (TaylorError, ZeroDivisionError) as e:
            raise EvaluationError(node, e) from e
    return [values[o] for o in output_genes(x, p)]


def promote_weights(x: Chromosome, p: CgpParams, which: Sequence[tuple[int, int]],
                    order: int) -> list:
    """Weights list where each ``(node, slot)`` in ``which`` is a GDual variable."""
    act = set(active_nodes(x, p))
    weights = list(x.weights)
    for node, slot in which:
        if node not in act:
            raise InactiveWeight(f"weight ({node}, {slot}) belongs to inactive node {node}")
        i = weight_index(p, node, slot)
        weights[i] = make_variable(weight_name(node, slot), weights[i], order)
    return weights


def expression_string(x: Chromosome, p: CgpParams, with_weights: bool = False,
                      input_names: Sequence[str] | None = None,
                      weight_values: bool = False) -> list[str]:
    """Parenthesized infix form of each output (unsimplified).

    With ``with_weights`` every operand is wrapped as ``(w<node>_<slot>*operand)``;
    ``weight_values`` prints the numeric weight instead of its name.
    """
    names = list(input_names) if input_names is not None else default_input_names(p.n_in)
    width = p.arity + 1
    memo: dict = dict(enumerate(names))
    for node in active_nodes(x, p):
        j = node - p.n_in
        base = j * width
        ops = [memo[c] for c in x.genes[base + 1: base + width]]
        if with_weights:
            ops = [f"({_wtext(x, p, node, s, weight_values)}*{o})" for s, o in enumerate(ops)]
        memo[node] = p.kernels[x.genes[base]].render(ops)
    return [memo[o] for o in output_genes(x, p)]


def _wtext(x, p, node, slot, values):
    if values:
        return repr(float(x.weights[weight_index(p, node, slot)]))
    return weight_name(node, slot)


def random_chromosome(p: CgpParams, rng: np.random.Generator,
                      weights: Sequence[float] | None = None) -> Chromosome:
    genes = []
    for g in range(p.n_genes):
        opts = p.gene_options(g)
        genes.append(opts[int(rng.integers(len(opts)))])
    if weights is None:
        weights = (1.0,) * p.n_weights
    return Chromosome(tuple(genes), tuple(weights))


def mutate_active(x: Chromosome, p: CgpParams, count: int,
                  rng: np.random.Generator) -> Chromosome:
    """Resample ``count`` distinct active genes, each to a different admissible value.

    Genes with a single admissible value are never picked. Weights are kept.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    candidates = [g for g in active_genes(x, p) if len(p.gene_options(g)) > 1]
    if not candidates:
        return x
    k = min(count, len(candidates))
    picks = rng.choice(len(candidates), size=k, replace=False)
    genes = list(x.genes)
    for i in picks:
        g = candidates[int(i)]
        opts = p.gene_options(g)
        cur = genes[g]
        if cur in opts:
            r = int(rng.integers(len(opts) - 1))
            if r >= opts.index(cur):
                r += 1
        else:
            r = int(rng.integers(len(opts)))
        genes[g] = opts[r]
    return Chromosome(tuple(genes), x.weights)

