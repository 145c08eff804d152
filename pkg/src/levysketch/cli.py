"""Batch command-line frontend.

Three commands, all emitting deterministic JSON-shaped reports (stable key
order, so identical inputs give byte-identical output):

* ``sample``      -- replay an update stream through a chosen sketch many
                     times under derived seeds; report outcome frequencies,
                     value summaries, and frontier sizes.
* ``verify``      -- run a named statistical verification suite; exit 0 only
                     if every check passes.
* ``edge-sample`` -- drive the graph edge sampler over a stream and compare
                     frequencies with the closed-form ratios.

Streams are UTF-8 lines ``key delta`` (``#`` comments and blank lines
ignored).  Decimal keys are used as 64-bit ids directly; anything else is
hashed to an id (collisions are negligible at desk scale).  The seed comes
from ``--seed``, else the LEVY_SEED environment variable, else zero.

Exit codes: 0 success / all checks passed, 1 verification failure,
2 usage or parse errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import struct
import sys
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .circuits import Circuit, EdgeSampler, EdgeSamplerSpec, GGate, InputGate, \
    OutputGate, ScalarGate
from .level import LevelFunction, parse_weight
from .oracle import UndersampledError, chi_square_gof, exact_edge_distribution
from .randomness import (
    DEFAULT_SEED,
    FreshSource,
    OracleHash,
    derive_seed,
    key_for_string,
    parse_seed,
)
from .samplers import GSampler, KParetoSampler, ParetoSampler, WorSampler

__all__ = ["main", "cmd_sample", "cmd_verify", "cmd_edge_sample",
           "StreamRecord", "parse_stream", "load_circuit_file"]

_ENV_SEED = "LEVY_SEED"


class StreamParseError(ValueError):
    """Malformed stream/graph/circuit input, with a line number."""


@dataclass(frozen=True)
class StreamRecord:
    """One update line: the original key token, its 64-bit id, and delta."""

    display: str
    key: int
    delta: float


def _key_id(token: str, seed: bytes) -> int:
    if token.isdigit() and int(token) < (1 << 64):
        return int(token)
    return key_for_string(seed, token)


def parse_stream(text: str, seed: bytes, source: str = "<stream>") -> list[StreamRecord]:
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise StreamParseError(
                f"{source}:{lineno}: expected 'key delta', got {raw!r}")
        token, delta_text = parts
        try:
            delta = float(delta_text)
        except ValueError:
            raise StreamParseError(
                f"{source}:{lineno}: delta is not a number: {delta_text!r}") from None
        if not (delta > 0):
            raise StreamParseError(
                f"{source}:{lineno}: delta must be positive, got {delta}")
        records.append(StreamRecord(token, _key_id(token, seed), delta))
    return records


def parse_graph(text: str, source: str = "<graph>") -> EdgeSamplerSpec:
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "edge" or not (3 <= len(parts) <= 5):
            raise StreamParseError(
                f"{source}:{lineno}: expected 'edge u v [w ...]', got {raw!r}")
        try:
            edges.append(tuple(int(p) for p in parts[1:]))
        except ValueError:
            raise StreamParseError(
                f"{source}:{lineno}: vertex ids must be integers: {raw!r}") from None
    if not edges:
        raise StreamParseError(f"{source}: no edges")
    vertices = tuple(sorted({v for e in edges for v in e}))
    try:
        return EdgeSamplerSpec(vertices, tuple(edges))
    except ValueError as exc:
        raise StreamParseError(f"{source}: {exc}") from None


@dataclass
class LoadedCircuit:
    """A validated circuit plus the stream-token to input-gate mapping."""

    circuit: Circuit
    input_by_token: dict


def load_circuit_file(text: str, source: str = "<circuit>") -> LoadedCircuit:
    """Parse the line-oriented circuit format: ``gate <id> kind``,
    ``wire <from> <to>``, or ``graph-edge <u> <v>`` shorthand."""
    gate_lines = []
    wire_lines = []
    edge_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "gate" and len(parts) == 3:
            gate_lines.append((lineno, parts[1], parts[2]))
        elif parts[0] == "wire" and len(parts) == 3:
            wire_lines.append((lineno, parts[1], parts[2]))
        elif parts[0] == "graph-edge" and len(parts) >= 3:
            try:
                edge_lines.append(tuple(int(p) for p in parts[1:]))
            except ValueError:
                raise StreamParseError(
                    f"{source}:{lineno}: vertex ids must be integers") from None
        else:
            raise StreamParseError(f"{source}:{lineno}: unrecognized line {raw!r}")
    if edge_lines:
        if gate_lines or wire_lines:
            raise StreamParseError(
                f"{source}: graph-edge shorthand cannot be mixed with explicit gates")
        vertices = tuple(sorted({v for e in edge_lines for v in e}))
        from .circuits import build_edge_sampler
        circuit = build_edge_sampler(EdgeSamplerSpec(vertices, tuple(edge_lines)))
        return LoadedCircuit(circuit, {str(v): ("in", v) for v in vertices})
    c = Circuit()
    for lineno, gate_id, kind in gate_lines:
        try:
            if kind == "input":
                c.add_gate(gate_id, InputGate())
            elif kind == "output":
                c.add_gate(gate_id, OutputGate())
            elif kind.startswith("scalar:"):
                c.add_gate(gate_id, ScalarGate(float(kind[len("scalar:"):])))
            elif kind.startswith("g:"):
                level = LevelFunction(parse_weight(kind[len("g:"):]))
                c.add_gate(gate_id, GGate(level, 0, gate_id.encode("utf-8")))
            else:
                raise ValueError(f"unknown gate kind {kind!r}")
        except ValueError as exc:
            raise StreamParseError(f"{source}:{lineno}: {exc}") from None
    for lineno, src, dst in wire_lines:
        try:
            c.add_wire(src, dst)
        except ValueError as exc:
            raise StreamParseError(f"{source}:{lineno}: {exc}") from None
    violation = c.validate()
    if violation is not None:
        raise StreamParseError(
            f"{source}: invalid circuit: gate {violation.gate_id!r}: {violation.reason}")
    inputs = {g: g for g, gate in c.gates.items() if isinstance(gate, InputGate)}
    return LoadedCircuit(c, inputs)


def _record_source(rep_seed: bytes, record: StreamRecord, occurrence: int) -> FreshSource:
    """Per-record fresh randomness: keyed to record content and occurrence
    index, so permuting the stream leaves the final state bit-identical."""
    data = b"R" + struct.pack("<QdQ", record.key, record.delta, occurrence)
    sub = hashlib.blake2b(data, key=rep_seed, digest_size=16).digest()
    return FreshSource(sub)


@dataclass(frozen=True)
class RunConfig:
    seed: bytes
    sketch: str = "gsampler"
    grammar: str = "f1"
    reps: int = 1000
    attach_randomness: str = "position"

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.attach_randomness not in ("position", "record"):
            raise ValueError(
                f"attach-randomness must be position or record, got "
                f"{self.attach_randomness!r}")


def _seed_hex(seed: bytes) -> str:
    return seed.hex()


def _summary(values: list[float]) -> Optional[dict]:
    if not values:
        return None
    return {
        "mean": math.fsum(values) / len(values),
        "min": min(values),
        "max": max(values),
    }


def cmd_sample(config: RunConfig, records: list[StreamRecord],
               circuit_text: Optional[str] = None) -> dict:
    """Replay the stream `reps` times under derived seeds; tabulate outcomes."""
    kind = config.sketch
    k = 0
    if kind.startswith(("wor:", "kpareto:")):
        base, _, k_text = kind.partition(":")
        try:
            k = int(k_text)
        except ValueError:
            raise ValueError(f"bad sketch k in {kind!r}") from None
        if k < 1:
            raise ValueError(f"sketch k must be >= 1, got {k}")
        kind = base
    elif kind.startswith("circuit:"):
        kind = "circuit"
    if kind not in ("gsampler", "pareto", "wor", "kpareto", "circuit"):
        raise ValueError(f"unknown sketch kind {config.sketch!r}")

    level = LevelFunction(parse_weight(config.grammar))
    display_of = {}
    for r in records:
        display_of.setdefault(r.key, r.display)

    loaded = None
    if kind == "circuit":
        if circuit_text is None:
            raise ValueError("circuit sketch requires the circuit spec file")
        loaded = load_circuit_file(circuit_text)
        out_ids = loaded.circuit.output_gate_ids()
        if not out_ids:
            raise ValueError("circuit has no output gate")

    counts: Counter = Counter()
    values: list[float] = []
    frontier_sizes: list[int] = []
    empty = 0

    for rep in range(config.reps):
        rep_seed = derive_seed(config.seed, rep)
        oracle = OracleHash(rep_seed)
        positional = FreshSource(rep_seed)
        occurrences: Counter = Counter()

        def source_for(record: StreamRecord) -> FreshSource:
            if config.attach_randomness == "position":
                return positional
            occ = occurrences[(record.key, record.delta)]
            occurrences[(record.key, record.delta)] += 1
            return _record_source(rep_seed, record, occ)

        if kind == "circuit":
            loaded.circuit.reset_state()
            for r in records:
                gate_id = loaded.input_by_token.get(r.display)
                if gate_id is None:
                    raise ValueError(
                        f"stream key {r.display!r} has no input gate in the circuit")
                loaded.circuit.update(gate_id, r.delta, r.key, source_for(r), oracle)
            out = loaded.circuit.output(out_ids[0])
            if out is None:
                empty += 1
            else:
                counts[str(out[0])] += 1
                values.append(out[1])
            continue

        if kind == "gsampler":
            sketch = GSampler(level, oracle)
        elif kind == "pareto":
            sketch = ParetoSampler(oracle)
        elif kind == "wor":
            sketch = WorSampler(k, level, oracle)
        else:
            sketch = KParetoSampler(k, oracle)

        for r in records:
            sketch.fresh = source_for(r)
            sketch.update(r.key, r.delta)

        if kind == "gsampler":
            out = sketch.query()
            if out is None:
                empty += 1
            else:
                counts[display_of.get(out[0], str(out[0]))] += 1
                values.append(out[1])
        elif kind == "pareto":
            out = sketch.query(level)
            frontier_sizes.append(len(sketch.frontier))
            if out is None:
                empty += 1
            else:
                counts[display_of.get(out[0], str(out[0]))] += 1
                values.append(out[1])
        elif kind == "wor":
            ordered = sketch.sample_ordered()
            if not ordered:
                empty += 1
            else:
                counts[",".join(display_of.get(key, str(key))
                                for key in ordered)] += 1
        else:
            ordered = sketch.query(level)
            frontier_sizes.append(len(sketch.frontier))
            if not ordered:
                empty += 1
            else:
                counts[",".join(display_of.get(key, str(key))
                                for key in ordered)] += 1

    report = {
        "command": "sample",
        "config": {
            "sketch": config.sketch,
            "g": config.grammar,
            "seed": _seed_hex(config.seed),
            "reps": config.reps,
            "attach_randomness": config.attach_randomness,
        },
        "stream": {
            "records": len(records),
            "distinct_keys": len({r.key for r in records}),
        },
        "empty_samples": empty,
        "counts": {key: counts[key] for key in sorted(counts)},
        "frequencies": {key: counts[key] / config.reps for key in sorted(counts)},
        "value_summary": _summary(values),
    }
    if frontier_sizes:
        report["frontier_size"] = {
            "mean": math.fsum(frontier_sizes) / len(frontier_sizes),
            "max": max(frontier_sizes),
        }
    return report


def cmd_edge_sample(graph_text: str, records: list[StreamRecord],
                    config: RunConfig) -> dict:
    """Replay the stream through the edge sampler; report frequencies and
    the closed-form ratios they should follow."""
    spec = parse_graph(graph_text)
    masses: dict[int, float] = {}
    counts: Counter = Counter()
    empty = 0
    vertex_set = set(spec.vertices)
    for r in records:
        if not r.display.isdigit():
            raise StreamParseError(
                f"edge-sample streams must use integer vertex keys, got {r.display!r}")
        masses[r.key] = masses.get(r.key, 0.0) + r.delta
    for rep in range(config.reps):
        rep_seed = derive_seed(config.seed, rep)
        sampler = EdgeSampler(spec, OracleHash(rep_seed))
        for r in records:
            sampler.update(r.key, r.delta)
        out = sampler.query()
        if out is None:
            empty += 1
        else:
            counts["-".join(str(v) for v in out[0])] += 1

    exact = exact_edge_distribution(
        spec.edges, {v: m for v, m in masses.items() if v in vertex_set})
    exact_by_name = {"-".join(str(v) for v in e): p
                     for e, p in zip(exact.support, exact.probs)}
    chi = None
    try:
        raw = {tuple(int(v) for v in name.split("-")): c
               for name, c in counts.items()}
        chi = chi_square_gof(raw, exact).as_dict()
    except UndersampledError:
        pass
    return {
        "command": "edge-sample",
        "config": {
            "seed": _seed_hex(config.seed),
            "reps": config.reps,
        },
        "graph": {
            "vertices": len(spec.vertices),
            "edges": len(spec.edges),
        },
        "empty_samples": empty,
        "counts": {key: counts[key] for key in sorted(counts)},
        "frequencies": {key: counts[key] / config.reps for key in sorted(counts)},
        "exact": {key: exact_by_name[key] for key in sorted(exact_by_name)},
        "chi_square": chi,
    }


def cmd_verify(suite: str, seed: bytes, quick: bool = False) -> tuple[dict, bool]:
    """Run a verification suite; returns (report, all_passed)."""
    from .verify import FULL_PARAMS, QUICK_PARAMS, run_suite

    results = run_suite(suite, seed, QUICK_PARAMS if quick else FULL_PARAMS)
    all_passed = all(r.passed for r in results)
    report = {
        "command": "verify",
        "suite": suite,
        "seed": _seed_hex(seed),
        "quick": quick,
        "checks": [r.as_dict() for r in results],
        "pass": all_passed,
    }
    return report, all_passed


def _resolve_seed(flag_value: Optional[str]) -> bytes:
    if flag_value is not None:
        return parse_seed(flag_value)
    env = os.environ.get(_ENV_SEED)
    if env:
        return parse_seed(env)
    return DEFAULT_SEED


def _emit(report: dict, out_path: Optional[str]) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levysketch",
        description="Perfect weighted stream samplers: replay, query, verify.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", help="replay a stream through a sketch")
    p_sample.add_argument("stream", help="stream file: lines 'key delta'")
    p_sample.add_argument("--seed", help="hex seed (default env LEVY_SEED, then 0)")
    p_sample.add_argument("--g", default="f1", help="weight function grammar")
    p_sample.add_argument("--sketch", default="gsampler",
                          help="gsampler | pareto | wor:<k> | kpareto:<k> | circuit:<file>")
    p_sample.add_argument("--reps", type=int, default=1000)
    p_sample.add_argument("--out", help="write the JSON report here instead of stdout")
    p_sample.add_argument("--attach-randomness", default="position",
                          choices=("position", "record"),
                          help="tie per-update randomness to stream position or record content")

    p_verify = sub.add_parser("verify", help="run a verification suite")
    from .verify import suite_names
    p_verify.add_argument("suite", choices=suite_names())
    p_verify.add_argument("--seed")
    p_verify.add_argument("--out")
    p_verify.add_argument("--quick", action="store_true",
                          help="reduced sample sizes (plumbing checks only)")

    p_edge = sub.add_parser("edge-sample", help="sample graph edges by weight")
    p_edge.add_argument("graph", help="graph file: lines 'edge u v'")
    p_edge.add_argument("stream", help="stream file of vertex updates")
    p_edge.add_argument("--seed")
    p_edge.add_argument("--reps", type=int, default=1000)
    p_edge.add_argument("--out")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        seed = _resolve_seed(args.seed)
        if args.command == "sample":
            config = RunConfig(seed, args.sketch, args.g, args.reps,
                               args.attach_randomness)
            with open(args.stream, encoding="utf-8") as fh:
                records = parse_stream(fh.read(), seed, args.stream)
            circuit_text = None
            if args.sketch.startswith("circuit:"):
                path = args.sketch[len("circuit:"):]
                with open(path, encoding="utf-8") as fh:
                    circuit_text = fh.read()
            report = cmd_sample(config, records, circuit_text)
            _emit(report, args.out)
            return 0
        if args.command == "verify":
            report, all_passed = cmd_verify(args.suite, seed, args.quick)
            for check in report["checks"]:
                verdict = "PASS" if check["pass"] else "FAIL"
                line = (f"{verdict} {check['name']} "
                        f"statistic={check['statistic']:.6g} "
                        f"threshold={check['threshold']:.6g}")
                if check["detail"]:
                    line += f" ({check['detail']})"
                print(line)
            if args.out:
                _emit(report, args.out)
            print("OK" if all_passed else "FAILED")
            return 0 if all_passed else 1
        if args.command == "edge-sample":
            config = RunConfig(seed, reps=args.reps)
            with open(args.graph, encoding="utf-8") as fh:
                graph_text = fh.read()
            with open(args.stream, encoding="utf-8") as fh:
                records = parse_stream(fh.read(), seed, args.stream)
            report = cmd_edge_sample(graph_text, records, config)
            _emit(report, args.out)
            return 0
        parser.error(f"unknown command {args.command!r}")
        return 2
    except (StreamParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
