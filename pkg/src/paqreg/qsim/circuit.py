"""Circuit descriptions: gate ops, validated circuit specs, JSON round-trip,
and the seeded layered-ansatz generator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError

GATE_KINDS = ("h", "x", "y", "z", "rx", "ry", "rz", "cnot", "cz")
ROTATION_KINDS = ("rx", "ry", "rz")
TWO_QUBIT_KINDS = ("cnot", "cz")
SOURCES = ("fixed", "feature", "param")

FORMAT_VERSION = 1


@dataclass(frozen=True)
class GateOp:
    """One gate application.

    ``qubits`` is (target,) or (control, target). Rotation angles come from
    ``source``: "fixed" (angle field), "feature" (input slot), or "param"
    (trainable slot); non-rotations must be "fixed" with no slot.
    """

    kind: str
    qubits: tuple[int, ...]
    source: str = "fixed"
    slot: int | None = None
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise InputError(f"unknown gate kind {self.kind!r}")
        if self.source not in SOURCES:
            raise InputError(f"unknown angle source {self.source!r}")
        arity = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.qubits) != arity:
            raise InputError(f"{self.kind} takes {arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise InputError(f"{self.kind} qubits must be distinct: {self.qubits}")
        if self.kind in ROTATION_KINDS:
            if self.source != "fixed" and self.slot is None:
                raise InputError(f"{self.source} rotation needs a slot")
            if self.source == "fixed" and self.slot is not None:
                raise InputError("fixed rotation must not carry a slot")
        else:
            if self.source != "fixed" or self.slot is not None:
                raise InputError(f"{self.kind} cannot take an angle source")
        if self.slot is not None and self.slot < 0:
            raise InputError("slot indices must be non-negative")


@dataclass(frozen=True)
class CircuitSpec:
    """A gate list over n_qubits with declared feature/param slot counts.

    Every param slot in [0, n_param_slots) must be used exactly once; feature
    slots may repeat but each declared slot must appear at least once.
    """

    n_qubits: int
    n_feature_slots: int
    n_param_slots: int
    gates: tuple[GateOp, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= 16:
            raise InputError(f"n_qubits must be in [1, 16], got {self.n_qubits}")
        if self.n_feature_slots < 0 or self.n_param_slots < 0:
            raise InputError("slot counts must be non-negative")
        param_seen: list[int] = []
        feature_seen: set[int] = set()
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.n_qubits:
                    raise InputError(f"gate {g.kind} addresses qubit {q} of {self.n_qubits}")
            if g.source == "param":
                if g.slot >= self.n_param_slots:
                    raise InputError(f"param slot {g.slot} out of range")
                param_seen.append(g.slot)
            elif g.source == "feature":
                if g.slot >= self.n_feature_slots:
                    raise InputError(f"feature slot {g.slot} out of range")
                feature_seen.add(g.slot)
        if sorted(param_seen) != list(range(self.n_param_slots)):
            raise InputError("each param slot must be used exactly once")
        if feature_seen != set(range(self.n_feature_slots)):
            raise InputError("every feature slot must be used at least once")

    def to_dict(self) -> dict:
        gates = []
        for g in self.gates:
            entry: dict = {"kind": g.kind, "qubits": list(g.qubits), "source": g.source}
            if g.slot is not None:
                entry["slot"] = g.slot
            if g.source == "fixed" and g.kind in ROTATION_KINDS:
                entry["angle"] = g.angle
            gates.append(entry)
        return {
            "format": FORMAT_VERSION,
            "n_qubits": self.n_qubits,
            "n_feature_slots": self.n_feature_slots,
            "n_param_slots": self.n_param_slots,
            "gates": gates,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CircuitSpec":
        if data.get("format") != FORMAT_VERSION:
            raise InputError(
                f"unsupported circuit format {data.get('format')!r}, "
                f"expected {FORMAT_VERSION}"
            )
        gates = tuple(
            GateOp(
                kind=g["kind"],
                qubits=tuple(g["qubits"]),
                source=g.get("source", "fixed"),
                slot=g.get("slot"),
                angle=float(g.get("angle", 0.0)),
            )
            for g in data["gates"]
        )
        return cls(
            n_qubits=int(data["n_qubits"]),
            n_feature_slots=int(data["n_feature_slots"]),
            n_param_slots=int(data["n_param_slots"]),
            gates=gates,
        )


def generate_circuit(
    n_qubits: int,
    n_feature_slots: int,
    n_param_slots: int,
    seed: int,
) -> CircuitSpec:
    """Sample a layered data re-uploading ansatz.

    Features enter through RY rotations round-robin over qubits,
    ceil(features / qubits) encoding layers. Variational blocks (one
    randomly-drawn rotation per qubit plus a CNOT ring) are interleaved
    after each encoding layer; leftover blocks are appended at the end until
    exactly n_param_slots trainable angles are placed. The draw is
    deterministic per seed.
    """
    if n_feature_slots < 1:
        raise InputError("need at least one feature slot")
    rng = np.random.default_rng(seed)
    gates: list[GateOp] = []
    n_layers = math.ceil(n_feature_slots / n_qubits)

    param_slot = 0

    def encoding_layer(layer: int) -> None:
        lo = layer * n_qubits
        hi = min(lo + n_qubits, n_feature_slots)
        for s in range(lo, hi):
            gates.append(GateOp("ry", (s % n_qubits,), source="feature", slot=s))

    def variational_block() -> None:
        nonlocal param_slot
        width = min(n_qubits, n_param_slots - param_slot)
        for q in range(width):
            kind = ROTATION_KINDS[rng.integers(0, 3)]
            gates.append(GateOp(kind, (q,), source="param", slot=param_slot))
            param_slot += 1
        if n_qubits >= 2:
            for q in range(n_qubits):
                gates.append(GateOp("cnot", (q, (q + 1) % n_qubits)))

    for layer in range(n_layers):
        encoding_layer(layer)
        if layer < n_layers - 1 and param_slot < n_param_slots:
            variational_block()
    while param_slot < n_param_slots:
        variational_block()

    return CircuitSpec(
        n_qubits=n_qubits,
        n_feature_slots=n_feature_slots,
        n_param_slots=n_param_slots,
        gates=tuple(gates),
    )
