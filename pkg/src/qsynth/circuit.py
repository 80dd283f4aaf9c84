"""Flat gate-level circuits, metrics and OpenQASM 2.0 text.

Qubit ``0`` is the least significant bit of a basis-state index.  The gate
vocabulary is ``h``, ``x``, ``rz``, ``cx`` plus ``barrier``; barriers cost
nothing but align the layers of the qubits they span, which is how the
emitter keeps the measured depth equal to the solver's block schedule.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

SINGLE_QUBIT_GATES = frozenset({"h", "x", "rz"})
GATE_CLASSES = ("cx", "single")


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def inverse(self) -> "Gate":
        if self.name == "rz":
            return Gate("rz", self.qubits, (-self.params[0],))
        return self

    def remap(self, mapping) -> "Gate":
        return Gate(self.name, tuple(mapping[q] for q in self.qubits), self.params)


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def append(self, name: str, qubits, params=()) -> None:
        self.gates.append(Gate(name, tuple(qubits), tuple(params)))

    def extend(self, gates) -> None:
        self.gates.extend(gates)

    def validate(self) -> None:
        for g in self.gates:
            if any(q < 0 or q >= self.num_qubits for q in g.qubits):
                raise ValueError(f"gate {g} addresses a qubit outside 0..{self.num_qubits - 1}")
            if len(set(g.qubits)) != len(g.qubits):
                raise ValueError(f"gate {g} repeats a qubit")
            if not all(math.isfinite(p) for p in g.params):
                raise ValueError(f"gate {g} has a non-finite parameter")


@dataclass(frozen=True)
class Metrics:
    width: int
    depth: int
    counts: tuple[tuple[str, int], ...]

    @property
    def cx(self) -> int:
        return dict(self.counts).get("cx", 0)

    def count(self, gate_class: str) -> int:
        return dict(self.counts).get(gate_class, 0)

    def as_dict(self) -> dict:
        return {"width": self.width, "depth": self.depth, "counts": dict(self.counts)}


def gate_class(name: str) -> str | None:
    if name == "cx":
        return "cx"
    if name in SINGLE_QUBIT_GATES:
        return "single"
    return None


def count_gates(gates) -> dict[str, int]:
    counts = Counter({c: 0 for c in GATE_CLASSES})
    for g in gates:
        cls = gate_class(g.name)
        if cls is not None:
            counts[cls] += 1
    return dict(counts)


def asap_depth(gates, num_qubits: int | None = None) -> int:
    """Layer count under as-soon-as-possible scheduling.

    A barrier lifts all of its qubits to the deepest layer among them
    without occupying a layer of its own.
    """
    level: dict[int, int] = {}
    depth = 0
    for g in gates:
        top = max((level.get(q, 0) for q in g.qubits), default=0)
        if g.name != "barrier":
            top += 1
        for q in g.qubits:
            level[q] = top
        depth = max(depth, top)
    return depth


def measure(circuit: Circuit) -> Metrics:
    counts = count_gates(circuit.gates)
    return Metrics(
        width=circuit.num_qubits,
        depth=asap_depth(circuit.gates),
        counts=tuple(sorted(counts.items())),
    )


def to_qasm(circuit: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    for g in circuit.gates:
        args = ",".join(f"q[{q}]" for q in g.qubits)
        if g.params:
            params = ",".join(repr(float(p)) for p in g.params)
            lines.append(f"{g.name}({params}) {args};")
        else:
            lines.append(f"{g.name} {args};")
    return "\n".join(lines) + "\n"


class QasmError(ValueError):
    pass


_ARITY = {"h": 1, "x": 1, "rz": 1, "cx": 2}
_STMT = re.compile(r"^([a-z]+)(?:\(([^)]*)\))?\s+(.+)$")
_QARG = re.compile(r"^([A-Za-z_]\w*)\[(\d+)\]$")


def parse_qasm(text: str) -> Circuit:
    """Parse the OpenQASM 2.0 subset produced by :func:`to_qasm`."""
    circuit = None
    reg = None
    body = re.sub(r"//[^\n]*", "", text)
    for lineno, raw in enumerate(body.split(";"), start=1):
        stmt = " ".join(raw.split())
        if not stmt or stmt.startswith("OPENQASM") or stmt.startswith("include"):
            continue
        m = re.match(r"^qreg\s+([A-Za-z_]\w*)\[(\d+)\]$", stmt)
        if m:
            if circuit is not None:
                raise QasmError("only one quantum register is supported")
            reg, circuit = m.group(1), Circuit(int(m.group(2)))
            continue
        if circuit is None:
            raise QasmError(f"statement {lineno}: gate before qreg declaration")
        m = _STMT.match(stmt)
        if not m:
            raise QasmError(f"statement {lineno}: cannot parse {stmt!r}")
        name, params, args = m.groups()
        qubits = []
        for a in args.split(","):
            qm = _QARG.match(a.strip())
            if not qm or qm.group(1) != reg:
                raise QasmError(f"statement {lineno}: bad operand {a.strip()!r}")
            qubits.append(int(qm.group(2)))
        values = tuple(float(p) for p in params.split(",")) if params else ()
        if name == "barrier":
            pass
        elif name not in _ARITY:
            raise QasmError(f"statement {lineno}: unsupported gate {name!r}")
        elif len(qubits) != _ARITY[name] or len(values) != (1 if name == "rz" else 0):
            raise QasmError(f"statement {lineno}: wrong arity for {name!r}")
        circuit.append(name, qubits, values)
    if circuit is None:
        raise QasmError("missing qreg declaration")
    circuit.validate()
    return circuit
