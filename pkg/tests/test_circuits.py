"""Gate DAG validation, propagation semantics, and circuit sampling laws."""

import math
import random
from collections import Counter

import pytest

from levysketch.circuits import (
    Circuit,
    EdgeSampler,
    EdgeSamplerSpec,
    GGate,
    InputGate,
    OutputGate,
    ScalarGate,
    build_flat_circuit,
    edge_weight,
)
from levysketch.level import F0, F1, FHalf, Log, LevelFunction, KilledDriftSum
from levysketch.oracle import (
    chi_square_gof,
    exact_edge_distribution,
    ExactDistribution,
    ks_test_exponential,
)
from levysketch.randomness import FreshSource, OracleHash, derive_seed, parse_seed
from levysketch.samplers import GSampler

SEED = parse_seed("c1bc")
F1_LEVEL = LevelFunction(F1())
FHALF_LEVEL = LevelFunction(FHalf())


def _oracle(i: int) -> OracleHash:
    return OracleHash(derive_seed(SEED, i))


def _chain(*gates) -> Circuit:
    c = Circuit()
    for gate_id, gate in gates:
        c.add_gate(gate_id, gate)
    return c


def test_flat_circuit_validates():
    c = build_flat_circuit({1: F1_LEVEL, 2: F1_LEVEL})
    assert c.validate() is None


def test_ggate_two_successors_violation():
    c = _chain(("in", InputGate()), ("g", GGate(F1_LEVEL, 0, 1)),
               ("o1", OutputGate()), ("o2", OutputGate()))
    c.add_wire("in", "g")
    c.add_wire("g", "o1")
    c.add_wire("g", "o2")
    v = c.validate()
    assert v is not None and v.gate_id == "g"


def test_cycle_violation():
    c = _chain(("a", ScalarGate(2.0)), ("b", ScalarGate(2.0)))
    c.add_wire("a", "b")
    c.add_wire("b", "a")
    v = c.validate()
    assert v is not None and "cycle" in v.reason


def test_scalar_arity_violations():
    c = _chain(("in", InputGate()), ("s", ScalarGate(2.0)), ("out", OutputGate()))
    c.add_wire("in", "s")
    v = c.validate()  # no successor
    assert v is not None and v.gate_id == "s"
    c.add_wire("s", "out")
    assert c.validate() is None
    c.add_wire("in", "s")  # second predecessor
    v = c.validate()
    assert v is not None and v.gate_id == "s"


def test_output_with_successor_violation():
    c = _chain(("in", InputGate()), ("out", OutputGate()), ("s", ScalarGate(1.0)))
    c.add_wire("out", "s")
    v = c.validate()
    assert v is not None and v.gate_id == "out"


def test_unreachable_gate_violation():
    c = _chain(("in", InputGate()), ("g", GGate(F1_LEVEL, 0, 1)),
               ("out", OutputGate()), ("stray", InputGate()))
    c.add_wire("in", "g")
    c.add_wire("g", "out")
    v = c.validate()
    assert v is not None and v.gate_id == "stray"


def test_input_with_predecessor_violation():
    c = _chain(("a", InputGate()), ("b", InputGate()))
    c.add_wire("a", "b")
    v = c.validate()
    assert v is not None and v.gate_id == "b"


def test_ggate_rejects_composite_level():
    with pytest.raises(ValueError):
        GGate(LevelFunction(KilledDriftSum(c=1.0, g0=1.0)), 0, 1)


def test_update_errors():
    c = build_flat_circuit({1: F1_LEVEL})
    fs = FreshSource(SEED)
    with pytest.raises(ValueError):
        c.update("nope", 1.0, 1, fs, _oracle(0))
    with pytest.raises(ValueError):
        c.update(("g", 1), 1.0, 1, fs, _oracle(0))  # not an input gate
    with pytest.raises(ValueError):
        c.update(("in", 1), 0.0, 1, fs, _oracle(0))
    with pytest.raises(ValueError):
        c.output(("in", 1))


def test_duplicate_gate_and_unknown_wire():
    c = Circuit()
    c.add_gate("x", InputGate())
    with pytest.raises(ValueError):
        c.add_gate("x", OutputGate())
    with pytest.raises(ValueError):
        c.add_wire("x", "missing")


def test_flat_circuit_matches_gsampler_seed_for_seed():
    for i in range(300):
        rnd = random.Random(i)
        keys = list(range(rnd.randint(1, 8)))
        stream = [(rnd.choice(keys), rnd.uniform(0.1, 5.0))
                  for _ in range(rnd.randint(1, 40))]
        oracle = _oracle(1000 + i)
        circuit = build_flat_circuit({k: FHALF_LEVEL for k in keys})
        fresh = FreshSource(oracle.seed)
        scalar = GSampler(FHALF_LEVEL, oracle)
        for key, delta in stream:
            circuit.update(("in", key), delta, key, fresh, oracle)
            scalar.update(key, delta)
        assert circuit.output("out") == scalar.query()


def test_heterogeneous_flat_circuit():
    # frequency weight on key 1 (mass 3), presence weight on key 2 (mass 5):
    # P(key 1) = 3 / (3 + 1)
    weights = {1: F1_LEVEL, 2: LevelFunction(F0())}
    hits = 0
    reps = 20_000
    for rep in range(reps):
        oracle = _oracle(40_000 + rep)
        c = build_flat_circuit(weights)
        fresh = FreshSource(oracle.seed)
        c.update(("in", 1), 3.0, 1, fresh, oracle)
        c.update(("in", 2), 5.0, 2, fresh, oracle)
        hits += c.output("out")[0] == 1
    assert abs(hits / reps - 0.75) <= 3 * math.sqrt(0.1875 / reps)


def test_scalar_gate_halves_rate():
    # input -> frequency gate -> divide by 2 -> output: rate 2 * mass
    mass = 1.5
    values = []
    for rep in range(5_000):
        oracle = _oracle(80_000 + rep)
        c = _chain(("in", InputGate()), ("g", GGate(F1_LEVEL, 0, 1)),
                   ("half", ScalarGate(2.0)), ("out", OutputGate()))
        c.add_wire("in", "g")
        c.add_wire("g", "half")
        c.add_wire("half", "out")
        assert c.validate() is None
        c.update("in", mass, 1, FreshSource(oracle.seed), oracle)
        values.append(c.output("out")[1])
    assert ks_test_exponential(values, 2.0 * mass).passed


def test_spec_validation():
    with pytest.raises(ValueError):
        EdgeSamplerSpec((1, 2), ((1, 1),))  # self loop
    with pytest.raises(ValueError):
        EdgeSamplerSpec((1, 2), ((1, 3),))  # unknown vertex
    with pytest.raises(ValueError):
        EdgeSamplerSpec((1, 1, 2), ((1, 2),))  # duplicate vertex
    with pytest.raises(ValueError):
        EdgeSamplerSpec((1, 2), ((1, 2), (2, 1)))  # duplicate edge
    with pytest.raises(ValueError):
        EdgeSamplerSpec((1, 2, 3, 4, 5), ((1, 2, 3, 4, 5),))  # arity 5


def test_single_edge_graph():
    spec = EdgeSamplerSpec((1, 2), ((1, 2),))
    s = EdgeSampler(spec, _oracle(7))
    assert s.query() is None
    s.update(1, 2.0)
    edge, h = s.query()
    assert edge == (1, 2)
    assert h > 0


def test_edge_sampler_value_law():
    spec = EdgeSamplerSpec((1, 2), ((1, 2),))
    masses = {1: 1.0, 2: 2.0}
    rate = edge_weight(1.0, 2.0)
    values = []
    for rep in range(4_000):
        s = EdgeSampler(spec, _oracle(100_000 + rep))
        for v, m in masses.items():
            s.update(v, m)
        values.append(s.query()[1])
    assert ks_test_exponential(values, rate).passed


def test_path_graph_symmetric():
    # two edges with identical endpoint masses are equally likely
    spec = EdgeSamplerSpec((1, 2, 3), ((1, 2), (2, 3)))
    hits = 0
    reps = 20_000
    for rep in range(reps):
        s = EdgeSampler(spec, _oracle(200_000 + rep))
        for v, m in ((1, 2.0), (2, 1.0), (3, 2.0)):
            s.update(v, m)
        hits += s.query()[0] == (1, 2)
    assert abs(hits / reps - 0.5) <= 3 * math.sqrt(0.25 / reps)


def test_triangle_distribution():
    spec = EdgeSamplerSpec((1, 2, 3), ((1, 2), (2, 3), (1, 3)))
    masses = {1: 1.0, 2: 2.0, 3: 3.0}
    counts = Counter()
    reps = 20_000
    for rep in range(reps):
        s = EdgeSampler(spec, _oracle(300_000 + rep))
        for v in sorted(masses):
            s.update(v, masses[v])
        counts[s.query()[0]] += 1
    assert chi_square_gof(counts, exact_edge_distribution(spec.edges, masses)).passed


def test_hyperedge_arity3():
    spec = EdgeSamplerSpec((1, 2, 3, 4), ((1, 2, 3), (2, 3, 4)))
    masses = {1: 0.5, 2: 1.0, 3: 2.0, 4: 4.0}
    counts = Counter()
    reps = 15_000
    for rep in range(reps):
        s = EdgeSampler(spec, _oracle(400_000 + rep))
        for v in sorted(masses):
            s.update(v, masses[v])
        counts[s.query()[0]] += 1
    assert chi_square_gof(counts, exact_edge_distribution(spec.edges, masses)).passed


def test_isolated_vertex_never_sampled():
    spec = EdgeSamplerSpec((1, 2, 9), ((1, 2),))
    s = EdgeSampler(spec, _oracle(8))
    s.update(9, 100.0)  # no incident edge: a no-op
    assert s.query() is None
    s.update(1, 0.5)
    assert s.query()[0] == (1, 2)


def test_reset_state():
    c = build_flat_circuit({1: F1_LEVEL})
    c.update(("in", 1), 1.0, 1, FreshSource(SEED), _oracle(0))
    assert c.output("out") is not None
    c.reset_state()
    assert c.output("out") is None


def _directed_pair_circuit():
    """Two vertices u=1, v=2; directed pair (s, t) weighted
    sqrt(x(s)) + log(1 + x(t)), one sqrt and one log gate per direction."""
    log_level = LevelFunction(Log())
    c = Circuit()
    c.add_gate("out", OutputGate())
    for s, t in ((1, 2), (2, 1)):
        label = (s, t)
        c.add_gate(("sqrt", s, t), GGate(FHALF_LEVEL, 1, 1000 + 10 * s + t),
                   label=label)
        c.add_gate(("log", s, t), GGate(log_level, 2, 2000 + 10 * s + t),
                   label=label)
    for v in (1, 2):
        c.add_gate(("in", v), InputGate())
    for s, t in ((1, 2), (2, 1)):
        c.add_wire(("sqrt", s, t), "out")
        c.add_wire(("log", s, t), "out")
    # outgoing edges contribute the sqrt term, incoming the log term
    for v in (1, 2):
        other = 2 if v == 1 else 1
        c.add_wire(("in", v), ("sqrt", v, other))
        c.add_wire(("in", v), ("log", other, v))
    assert c.validate() is None
    return c


def test_asymmetric_directed_pairs():
    # brute-force weights: w(s,t) = sqrt(x(s)) + log(1 + x(t))
    masses = {1: 0.01, 2: 20.0}
    w12 = math.sqrt(masses[1]) + math.log1p(masses[2])
    w21 = math.sqrt(masses[2]) + math.log1p(masses[1])
    exact = ExactDistribution(((1, 2), (2, 1)),
                              (w12 / (w12 + w21), w21 / (w12 + w21)))
    counts = Counter()
    reps = 20_000
    for rep in range(reps):
        oracle = _oracle(500_000 + rep)
        c = _directed_pair_circuit()
        fresh = FreshSource(oracle.seed)
        for v in sorted(masses):
            c.update(("in", v), masses[v], v, fresh, oracle)
        counts[c.output("out")[0]] += 1
    assert chi_square_gof(counts, exact).passed
