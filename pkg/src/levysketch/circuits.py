"""Stochastic sampling circuits: gate DAGs that sample from compound weights.

An exponential variate is treated as a signal carrying its rate.  Rates add
when independent signals are min-combined, divide under scalar division, and
map through G when pushed through a level function.  A circuit wires those
three operations into a DAG:

* input gates receive the update stream; on each update they emit a fresh
  Exp(1)/delta value per outgoing wire,
* scalar gates divide by a constant,
* G-gates apply a level function with a per-gate uniform seed U,
* output gates fold arriving values with min and remember which wire the
  current minimum came from.

Scalar and G gates must have exactly one successor, which is what keeps the
values arriving at any gate over different wires independent.  Only output
gates carry state between updates; everything else is recomputed per update,
so a whole circuit costs two words of persistent memory per output gate.

The stock construction here is the edge sampler: given a fixed (hyper)graph
with vertex masses fed by the update stream, it samples an edge {u, v} with
probability proportional to

    log(1 + sqrt(x(u)) + sqrt(x(v))) + 2 * (1 - exp(-(x(u) + x(v)))),

built from a square-root gate per (vertex, edge) pair, and a soft-cap gate,
a log gate and a halving scalar gate per edge.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional, Union

from .level import FHalf, Log, SoftCap, LevelFunction
from .randomness import (
    FreshSource,
    OracleHash,
    fresh_exp,
    hash_unit,
    hash_unit_bytes,
)

__all__ = [
    "InputGate",
    "ScalarGate",
    "GGate",
    "OutputGate",
    "Gate",
    "CircuitViolation",
    "Circuit",
    "EdgeSamplerSpec",
    "build_edge_sampler",
    "build_flat_circuit",
    "edge_weight",
    "SALT_VERTEX_SQRT",
    "SALT_EDGE_SOFTCAP",
    "SALT_EDGE_LOG",
]

# Hash namespaces for the edge sampler's three independent hash functions.
SALT_VERTEX_SQRT = 1
SALT_EDGE_SOFTCAP = 2
SALT_EDGE_LOG = 3


@dataclass(frozen=True)
class InputGate:
    """Receives updates; emits a fresh Exp(1)/delta per outgoing wire."""


@dataclass(frozen=True)
class ScalarGate:
    """Divides every value passing through by alpha (rate multiplies)."""

    alpha: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")


class GGate:
    """Applies a single-hash level function with a per-gate seed U.

    The seed is drawn from the oracle hash under `seed_salt`, keyed by the
    gate's scope object: an integer key, an arbitrary byte string (e.g. a
    canonical edge encoding), or None to scope by the key of the update
    being processed.
    """

    def __init__(self, level: LevelFunction, seed_salt: int,
                 scope: Union[int, bytes, None]):
        if not level.single_hash:
            raise ValueError("G-gates need a single-hash weight function")
        self.level = level
        self.seed_salt = seed_salt
        self.scope = scope

    def __repr__(self) -> str:
        return f"GGate({self.level!r}, salt={self.seed_salt}, scope={self.scope!r})"


@dataclass(frozen=True)
class OutputGate:
    """Keeps the minimum arriving value and its originating identifier."""


Gate = Union[InputGate, ScalarGate, GGate, OutputGate]


@dataclass(frozen=True)
class CircuitViolation:
    """First structural rule a circuit breaks, as a value (not an exception)."""

    gate_id: object
    reason: str


class Circuit:
    """A validated gate DAG plus the output gates' running state.

    Gates are added by id (any hashable); wires are directed and ordered --
    the declaration order of an input gate's outgoing wires fixes the order
    in which its fresh exponentials are drawn, which is what makes replays
    and shard merges exact.
    """

    def __init__(self) -> None:
        self.gates: dict = {}
        self.wires: list[tuple[object, object]] = []
        self.labels: dict = {}
        self._succ: dict = {}
        self._pred: dict = {}
        self._topo: Optional[list] = None
        self._unit_cache: dict = {}
        self._out_state: dict = {}

    def add_gate(self, gate_id, gate: Gate, label=None) -> None:
        if gate_id in self.gates:
            raise ValueError(f"duplicate gate id {gate_id!r}")
        self.gates[gate_id] = gate
        self._succ[gate_id] = []
        self._pred[gate_id] = []
        if label is not None:
            self.labels[gate_id] = label
        if isinstance(gate, OutputGate):
            self._out_state[gate_id] = (None, math.inf)
        self._topo = None

    def add_wire(self, src, dst) -> None:
        for g in (src, dst):
            if g not in self.gates:
                raise ValueError(f"wire references unknown gate {g!r}")
        self.wires.append((src, dst))
        self._succ[src].append(dst)
        self._pred[dst].append(src)
        self._topo = None

    # -- validation ----------------------------------------------------------

    def validate(self) -> Optional[CircuitViolation]:
        """Check the structural rules; returns the first violation or None."""
        for gate_id, gate in self.gates.items():
            n_out = len(self._succ[gate_id])
            n_in = len(self._pred[gate_id])
            if isinstance(gate, InputGate) and n_in > 0:
                return CircuitViolation(gate_id, "input gate has a predecessor")
            if isinstance(gate, OutputGate) and n_out > 0:
                return CircuitViolation(gate_id, "output gate has a successor")
            if isinstance(gate, ScalarGate):
                if n_out != 1:
                    return CircuitViolation(
                        gate_id, f"scalar gate must have exactly 1 successor, has {n_out}")
                if n_in != 1:
                    return CircuitViolation(
                        gate_id, f"scalar gate must have exactly 1 predecessor, has {n_in}")
            if isinstance(gate, GGate) and n_out != 1:
                return CircuitViolation(
                    gate_id, f"G-gate must have exactly 1 successor, has {n_out}")

        order = self._topo_order()
        if len(order) != len(self.gates):
            on_cycle = next(g for g in self.gates if g not in set(order))
            return CircuitViolation(on_cycle, "gate lies on a cycle")

        # every non-output gate must reach an output gate
        reaches = {g for g, gate in self.gates.items() if isinstance(gate, OutputGate)}
        for gate_id in reversed(order):
            if gate_id in reaches:
                continue
            if any(s in reaches for s in self._succ[gate_id]):
                reaches.add(gate_id)
        for gate_id in self.gates:
            if gate_id not in reaches:
                return CircuitViolation(gate_id, "gate cannot reach an output gate")
        return None

    def _topo_order(self) -> list:
        if self._topo is not None:
            return self._topo
        indeg = {g: len(self._pred[g]) for g in self.gates}
        ready = [g for g, d in indeg.items() if d == 0]
        order = []
        while ready:
            g = ready.pop(0)
            order.append(g)
            for s in self._succ[g]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    ready.append(s)
        self._topo = order
        return order

    # -- execution -----------------------------------------------------------

    def _gate_unit(self, gate_id, gate: GGate, oracle: OracleHash,
                   update_key: int) -> float:
        scope = gate.scope
        salted = oracle.with_salt(gate.seed_salt)
        if scope is None:
            return hash_unit(salted, update_key)
        cache_key = (gate_id, oracle.seed, oracle.salt)
        u = self._unit_cache.get(cache_key)
        if u is None:
            if isinstance(scope, bytes):
                u = hash_unit_bytes(salted, scope)
            else:
                u = hash_unit(salted, scope)
            self._unit_cache[cache_key] = u
        return u

    def update(self, input_gate, delta: float, key: int, rng: FreshSource,
               oracle: OracleHash) -> None:
        """Process one update arriving at an input gate.

        Values propagate synchronously in topological order; each gate maps
        each arriving value independently.  Only output-gate state survives.
        """
        gate = self.gates.get(input_gate)
        if gate is None or not isinstance(gate, InputGate):
            raise ValueError(f"{input_gate!r} is not an input gate")
        if not (delta > 0):
            raise ValueError(f"delta must be positive, got {delta}")

        pending: dict = {}
        for dst in self._succ[input_gate]:
            y = fresh_exp(rng)
            pending.setdefault(dst, []).append((y / delta, input_gate))

        for gate_id in self._topo_order():
            arrived = pending.pop(gate_id, None)
            if not arrived:
                continue
            gate = self.gates[gate_id]
            if isinstance(gate, OutputGate):
                ident, h_star = self._out_state[gate_id]
                for value, src in arrived:
                    if value < h_star:
                        ident, h_star = self.labels.get(src, src), value
                self._out_state[gate_id] = (ident, h_star)
                continue
            if isinstance(gate, ScalarGate):
                transformed = [v / gate.alpha for v, _ in arrived]
            elif isinstance(gate, GGate):
                u = self._gate_unit(gate_id, gate, oracle, key)
                transformed = [gate.level.eval(v, u) for v, _ in arrived]
            else:
                raise ValueError(f"input gate {gate_id!r} has a predecessor")
            for succ in self._succ[gate_id]:
                bucket = pending.setdefault(succ, [])
                for v in transformed:
                    bucket.append((v, gate_id))

    def output(self, output_gate) -> Optional[tuple[object, float]]:
        """The stored (identifier, value) pair of an output gate, if any."""
        if output_gate not in self._out_state:
            raise ValueError(f"{output_gate!r} is not an output gate")
        ident, h_star = self._out_state[output_gate]
        if ident is None:
            return None
        return ident, h_star

    def output_gate_ids(self) -> list:
        return list(self._out_state)

    def reset_state(self) -> None:
        """Clear output-gate state (and cached gate seeds) for a fresh run."""
        for gate_id in self._out_state:
            self._out_state[gate_id] = (None, math.inf)
        self._unit_cache.clear()


def build_flat_circuit(weights_by_key: dict[int, LevelFunction],
                       base_salt: int = 0) -> Circuit:
    """One input gate and one G-gate per key, all feeding one output gate.

    With the same weight function everywhere this reproduces a GSampler
    seed for seed; with different ones it samples key v with probability
    G_v(x(v)) / sum_u G_u(x(u)).
    """
    c = Circuit()
    c.add_gate("out", OutputGate())
    for key in weights_by_key:
        c.add_gate(("in", key), InputGate())
        c.add_gate(("g", key), GGate(weights_by_key[key], base_salt, key),
                   label=key)
        c.add_wire(("in", key), ("g", key))
        c.add_wire(("g", key), "out")
    violation = c.validate()
    assert violation is None, violation
    return c


def edge_weight(*masses: float) -> float:
    """Closed-form edge weight log(1 + sum sqrt(x)) + 2(1 - exp(-sum x))."""
    return (math.log1p(sum(math.sqrt(m) for m in masses))
            - 2.0 * math.expm1(-sum(masses)))


@dataclass(frozen=True)
class EdgeSamplerSpec:
    """A fixed (hyper)graph whose vertex masses arrive as a stream.

    Edges are tuples of 2 to 4 distinct vertices; orientation is ignored
    (the weight is symmetric), so edges are canonicalized sorted.
    """

    vertices: tuple[int, ...]
    edges: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        vertex_set = set(self.vertices)
        if len(vertex_set) != len(self.vertices):
            raise ValueError("duplicate vertices")
        seen = set()
        for e in self.edges:
            if not (2 <= len(e) <= 4):
                raise ValueError(f"edge arity must be 2..4, got {e}")
            if len(set(e)) != len(e):
                raise ValueError(f"self-loop in edge {e}")
            if not set(e) <= vertex_set:
                raise ValueError(f"edge {e} references unknown vertices")
            canon = tuple(sorted(e))
            if canon in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(canon)

    def canonical_edges(self) -> list[tuple[int, ...]]:
        return sorted(tuple(sorted(e)) for e in self.edges)


def _edge_scope(edge: tuple[int, ...]) -> bytes:
    return struct.pack(f"<{len(edge)}Q", *edge)


def _vertex_edge_scope(vertex: int, edge: tuple[int, ...]) -> bytes:
    return struct.pack(f"<{1 + len(edge)}Q", vertex, *edge)


def build_edge_sampler(spec: EdgeSamplerSpec) -> Circuit:
    """The edge-sampling circuit for the fixed weight
    log(1 + sum sqrt) + 2(1 - exp(-sum)).

    Per edge: a log gate fed by one square-root gate per endpoint, plus a
    soft-cap gate over the endpoints' direct signals, halved by a scalar
    gate; both paths feed one global output gate and report the edge.  Per
    update at a vertex, each incident edge consumes two fresh exponentials
    (square-root path first).

    Each square-root gate is seeded per (vertex, edge) pair, not per vertex:
    sharing one vertex seed across that vertex's edges correlates the edges'
    candidate values, and the sampled-edge law then deviates measurably from
    proportionality on skewed mass profiles.  Independent per-gate seeds
    make every edge's value an independent exponential, so the proportional
    law holds exactly.
    """
    c = Circuit()
    c.add_gate("out", OutputGate())
    sqrt_level = LevelFunction(FHalf())
    softcap_level = LevelFunction(SoftCap(1.0))
    log_level = LevelFunction(Log())

    edges = spec.canonical_edges()
    connected = {v for e in edges for v in e}
    # isolated vertices get no gates: with no incident edge their mass can
    # never influence any edge's weight
    for v in spec.vertices:
        if v in connected:
            c.add_gate(("in", v), InputGate())
    for e in edges:
        scope = _edge_scope(e)
        c.add_gate(("softcap", e), GGate(softcap_level, SALT_EDGE_SOFTCAP, scope))
        c.add_gate(("half", e), ScalarGate(2.0), label=e)
        c.add_gate(("log", e), GGate(log_level, SALT_EDGE_LOG, scope), label=e)
        for v in e:
            c.add_gate(("sqrt", v, e),
                       GGate(sqrt_level, SALT_VERTEX_SQRT, _vertex_edge_scope(v, e)))
            c.add_wire(("sqrt", v, e), ("log", e))
        c.add_wire(("softcap", e), ("half", e))
        c.add_wire(("half", e), "out")
        c.add_wire(("log", e), "out")
    # wire inputs in canonical edge order: square-root path then direct path
    for v in spec.vertices:
        if v not in connected:
            continue
        for e in edges:
            if v in e:
                c.add_wire(("in", v), ("sqrt", v, e))
                c.add_wire(("in", v), ("softcap", e))

    violation = c.validate()
    assert violation is None, violation
    return c


class EdgeSampler:
    """Streaming wrapper around the edge-sampling circuit."""

    def __init__(self, spec: EdgeSamplerSpec, oracle: OracleHash = OracleHash(),
                 fresh: Optional[FreshSource] = None):
        self.spec = spec
        self.oracle = oracle
        self.fresh = fresh if fresh is not None else FreshSource(oracle.seed)
        self.circuit = build_edge_sampler(spec)
        self._connected = {v for e in spec.edges for v in e}

    def update(self, vertex: int, delta: float) -> None:
        if vertex not in self._connected:
            return  # no incident edge: the update cannot affect any weight
        self.circuit.update(("in", vertex), delta, vertex, self.fresh, self.oracle)

    def query(self) -> Optional[tuple[tuple[int, ...], float]]:
        return self.circuit.output("out")
