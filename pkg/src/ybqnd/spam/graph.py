"""Probability graphs of measurement sequences and their path-sum models.

Edge weights are monomials ``c * prod(x_i) * prod(1 - x_j)`` over named
parameters, so every path probability is a polynomial and models can be
evaluated fast for many parameter vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..circuits import AtomReadout, Circuit, Hold, OpticalPump, QubitReadout, Rotate

PARAMETERS = ("p", "eta_op", "eta_B", "eta_D", "depol_DB", "depol_BD", "eta_pi")
FIXED = ("F0", "F1")


class GraphError(ValueError):
    """Unsupported circuit or malformed graph."""


class ZeroDenominatorError(ValueError):
    """The conditioning event of a path model has no paths."""


@dataclass(frozen=True)
class Weight:
    """``const * prod(name) * prod(1 - name)`` for the listed factors."""

    const: float = 1.0
    plus: tuple[str, ...] = ()
    minus: tuple[str, ...] = ()

    def __mul__(self, other: "Weight") -> "Weight":
        return Weight(self.const * other.const, self.plus + other.plus, self.minus + other.minus)

    def evaluate(self, params: Mapping[str, float]) -> float:
        v = self.const
        for n in self.plus:
            v *= params[n]
        for n in self.minus:
            v *= 1.0 - params[n]
        return v

    def __str__(self) -> str:
        parts = [f"{self.const:g}"] if self.const != 1.0 or not (self.plus or self.minus) else []
        parts += list(self.plus) + [f"(1-{n})" for n in self.minus]
        return "*".join(parts)


ONE = Weight()


def W(*plus: str, minus: Sequence[str] = (), const: float = 1.0) -> Weight:
    return Weight(const, tuple(plus), tuple(minus))


@dataclass
class ProbGraph:
    """Directed acyclic graph; nodes are string ids, edges carry :class:`Weight`.

    Readout-outcome nodes are named ``R{k}:{B|D}:{state}``.
    """

    start: str = "Start"
    edges: dict[str, list[tuple[str, Weight]]] = field(default_factory=dict)
    n_readouts: int = 0

    def add_edge(self, a: str, b: str, w: Weight) -> None:
        if w.const == 0.0:
            return
        self.edges.setdefault(a, []).append((b, w))
        self.edges.setdefault(b, [])

    @property
    def nodes(self) -> list[str]:
        return list(self.edges)

    def edge_list(self) -> list[tuple[str, str, Weight]]:
        return [(a, b, w) for a, outs in self.edges.items() for b, w in outs]

    def parameters(self) -> set[str]:
        return {n for _, _, w in self.edge_list() for n in w.plus + w.minus}

    def terminals(self) -> list[str]:
        return [n for n, outs in self.edges.items() if not outs]

    def check_acyclic(self) -> None:
        state: dict[str, int] = {}

        def visit(n: str) -> None:
            state[n] = 1
            for m, _ in self.edges.get(n, []):
                if state.get(m) == 1:
                    raise GraphError(f"cycle through {m}")
                if m not in state:
                    visit(m)
            state[n] = 2

        for n in self.edges:
            if n not in state:
                visit(n)

    def normalization_defect(self, params: Mapping[str, float]) -> float:
        """Largest ``|sum(outgoing) - 1|`` over non-terminal nodes."""
        worst = 0.0
        for n, outs in self.edges.items():
            if outs:
                worst = max(worst, abs(sum(w.evaluate(params) for _, w in outs) - 1.0))
        return worst

    def paths(self) -> list[tuple[tuple[str, ...], Weight]]:
        """All Start-to-terminal paths, depth first, with the product weight."""
        out: list[tuple[tuple[str, ...], Weight]] = []
        stack: list[tuple[str, tuple[str, ...], Weight]] = [(self.start, (self.start,), ONE)]
        while stack:
            node, path, w = stack.pop()
            nxt = self.edges.get(node, [])
            if not nxt:
                out.append((path, w))
                continue
            for m, ew in reversed(nxt):
                stack.append((m, path + (m,), w * ew))
        return out

    def to_dot(self) -> str:
        """Graphviz description."""
        lines = ["digraph spam {", "  rankdir=LR;"]
        for a, b, w in self.edge_list():
            lines.append(f'  "{a}" -> "{b}" [label="{w}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------- building


def _readout_edges(g: ProbGraph, k: int, src: dict[str, str], stage: int) -> dict[str, str]:
    """Outcome then survival/flip edges for qubit readout ``k``; returns next-stage nodes."""
    nxt = {s: f"S{stage}:{s}" for s in ("0", "1", "E")}
    for s, node in src.items():
        if s == "0":
            outcomes = {"B": W("F1"), "D": W(minus=("F1",))}
        else:
            outcomes = {"D": W("F0"), "B": W(minus=("F0",))}
        for o, w in outcomes.items():
            rnode = f"R{k}:{o}:{s}"
            g.add_edge(node, rnode, w)
            if s == "0":
                g.add_edge(rnode, nxt["E"], W(minus=("eta_B",)))
                g.add_edge(rnode, nxt["0"], W("eta_B", minus=("depol_BD",)))
                g.add_edge(rnode, nxt["1"], W("eta_B", "depol_BD"))
            elif s == "1":
                g.add_edge(rnode, nxt["E"], W(minus=("eta_D",)))
                g.add_edge(rnode, nxt["1"], W("eta_D", minus=("depol_DB",)))
                g.add_edge(rnode, nxt["0"], W("eta_D", "depol_DB"))
            else:
                g.add_edge(rnode, nxt["E"], ONE)
    return nxt


def _pump_edges(g: ProbGraph, src: dict[str, str], stage: int) -> dict[str, str]:
    nxt = {s: f"S{stage}:{s}" for s in ("0", "1", "E")}
    for s, node in src.items():
        if s == "E":
            g.add_edge(node, nxt["E"], ONE)
        else:
            g.add_edge(node, nxt["0"], W("eta_op"))
            g.add_edge(node, nxt["1"], W(minus=("eta_op",)))
    return nxt


def _rotation_kind(angle: float, tol: float = 1e-6) -> str:
    a = math.remainder(angle, 2 * math.pi)
    if abs(a) < tol:
        return "identity"
    if abs(abs(a) - math.pi) < tol:
        return "pi"
    if abs(abs(a) - math.pi / 2) < tol:
        return "half"
    raise GraphError(f"rotation angle {angle} has no graph representation (only 0, pi/2, pi)")


def _rotation_edges(g: ProbGraph, kind: str, src: dict[str, str], stage: int) -> dict[str, str]:
    nxt = {s: f"S{stage}:{s}" for s in ("0", "1", "E")}
    for s, node in src.items():
        if s == "E" or kind == "identity":
            g.add_edge(node, nxt[s], ONE)
        elif kind == "pi":
            other = "1" if s == "0" else "0"
            g.add_edge(node, nxt[other], W("eta_pi"))
            g.add_edge(node, nxt[s], W(minus=("eta_pi",)))
        else:
            # a quarter-wave pulse after projection leaves equal populations
            g.add_edge(node, nxt["0"], W(const=0.5))
            g.add_edge(node, nxt["1"], W(const=0.5))
    return nxt


def build_graph(circuit: Circuit) -> ProbGraph:
    """Probability graph of ``circuit``.

    Supported blocks: readouts, optical pumping, rotations by 0, pi/2 or pi,
    and zero-length holds. Loading leads to ``|0>`` and ``|1>`` with equal
    weight unless the circuit starts in a definite basis state.
    """
    g = ProbGraph()
    init = circuit.initial_state
    g.add_edge(g.start, "S0:E", W(minus=("p",)))
    if init in ("mixed", "+"):
        g.add_edge(g.start, "S0:0", W("p", const=0.5))
        g.add_edge(g.start, "S0:1", W("p", const=0.5))
    else:
        g.add_edge(g.start, f"S0:{init}", W("p"))
    cur = {s: f"S0:{s}" for s in ("0", "1", "E")}
    stage = 0
    k = 0
    for i, b in enumerate(circuit.blocks):
        if isinstance(b, Hold):
            if b.duration != 0.0:
                raise GraphError(f"block {i}: holds of nonzero duration are not modelled")
            continue
        stage += 1
        if isinstance(b, QubitReadout):
            cur = _readout_edges(g, k, cur, stage)
            k += 1
        elif isinstance(b, AtomReadout):
            cur = _pump_edges(g, cur, stage)
            stage += 1
            cur = _readout_edges(g, k, cur, stage)
            k += 1
        elif isinstance(b, OpticalPump):
            cur = _pump_edges(g, cur, stage)
        elif isinstance(b, Rotate):
            cur = _rotation_edges(g, _rotation_kind(b.pulse.nominal_angle), cur, stage)
        else:
            raise GraphError(f"block {i}: {type(b).__name__} is not supported")
    g.n_readouts = k
    _prune(g)
    g.check_acyclic()
    return g


def _prune(g: ProbGraph) -> None:
    """Drop nodes unreachable from Start."""
    seen = {g.start}
    stack = [g.start]
    while stack:
        n = stack.pop()
        for m, _ in g.edges.get(n, []):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    g.edges = {n: outs for n, outs in g.edges.items() if n in seen}


# ------------------------------------------------------------ path models


@dataclass(frozen=True)
class _Poly:
    """Sum of monomials stored as exponent matrices."""

    const: np.ndarray       # (terms,)
    plus: np.ndarray        # (terms, n_names)
    minus: np.ndarray
    names: tuple[str, ...]

    @classmethod
    def from_weights(cls, ws: Sequence[Weight], names: tuple[str, ...]) -> "_Poly":
        idx = {n: i for i, n in enumerate(names)}
        c = np.array([w.const for w in ws], dtype=float)
        a = np.zeros((len(ws), len(names)), dtype=np.int16)
        b = np.zeros_like(a)
        for t, w in enumerate(ws):
            for n in w.plus:
                a[t, idx[n]] += 1
            for n in w.minus:
                b[t, idx[n]] += 1
        return cls(c, a, b, names)

    def evaluate(self, params: Mapping[str, float]) -> float:
        if self.const.size == 0:
            return 0.0
        x = np.array([params[n] for n in self.names], dtype=float)
        terms = self.const * np.prod(x[None, :] ** self.plus, axis=1) * np.prod((1 - x)[None, :] ** self.minus, axis=1)
        return float(terms.sum())


def _outcomes(path: tuple[str, ...]) -> dict[int, str]:
    out = {}
    for n in path:
        if n.startswith("R"):
            k, o, _ = n[1:].split(":")
            out[int(k)] = o
    return out


@dataclass(frozen=True)
class PathModel:
    """Ratio of path sums: paths meeting ``target`` and ``given`` over paths meeting ``given``."""

    numerator: _Poly
    denominator: _Poly
    target: tuple[tuple[int, str], ...]
    given: tuple[tuple[int, str], ...]

    @property
    def free_parameters(self) -> set[str]:
        used = self.denominator.plus.any(axis=0) | self.denominator.minus.any(axis=0)
        used |= self.numerator.plus.any(axis=0) | self.numerator.minus.any(axis=0)
        return {n for n, u in zip(self.numerator.names, used) if u}

    def evaluate(self, params: Mapping[str, float]) -> float:
        den = self.denominator.evaluate(params)
        if den <= 0:
            raise ZeroDenominatorError("conditioning event has zero probability at these parameters")
        return self.numerator.evaluate(params) / den


@dataclass(frozen=True)
class MeanModel:
    """Arithmetic mean of several models (state-averaged quantities)."""

    parts: tuple

    def evaluate(self, params: Mapping[str, float]) -> float:
        return sum(m.evaluate(params) for m in self.parts) / len(self.parts)

    @property
    def free_parameters(self) -> set[str]:
        return set().union(*(m.free_parameters for m in self.parts))


def path_model(graph: ProbGraph, target: Mapping[int, str], given: Mapping[int, str] | None = None) -> PathModel:
    """Model of ``Pr(target | given)`` from exhaustive path enumeration."""
    given = dict(given or {})
    for k, o in {**given, **target}.items():
        if not 0 <= k < graph.n_readouts:
            raise GraphError(f"condition references readout {k}, graph has {graph.n_readouts}")
        if o not in ("B", "D"):
            raise GraphError("outcomes are 'B' or 'D'")
    names = tuple(sorted(graph.parameters()))
    num, den = [], []
    for path, w in graph.paths():
        oc = _outcomes(path)
        if all(oc.get(k) == o for k, o in given.items()):
            den.append(w)
            if all(oc.get(k) == o for k, o in target.items()):
                num.append(w)
    if not den:
        raise ZeroDenominatorError("no path satisfies the conditioning event")
    return PathModel(_Poly.from_weights(num, names), _Poly.from_weights(den, names),
                     tuple(sorted(target.items())), tuple(sorted(given.items())))


def outcome_distribution(graph: ProbGraph, params: Mapping[str, float]) -> dict[str, float]:
    """Probability of every bit string (1 = bright, first readout leftmost)."""
    k = graph.n_readouts
    dist = {format(i, f"0{k}b"): 0.0 for i in range(1 << k)}
    for path, w in graph.paths():
        oc = _outcomes(path)
        key = "".join("1" if oc[j] == "B" else "0" for j in range(k))
        dist[key] += w.evaluate(params)
    return dist
