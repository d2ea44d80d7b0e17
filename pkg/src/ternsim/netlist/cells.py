"""Cell library and decoder builders.

Topology is described once, at gate level (:class:`GateNetwork`), and consumed
by both backends: :func:`elaborate` expands a network into a transistor/
memristor :class:`Circuit` for the analog engine, and the digital backend
compiles the same network into a zero-delay DAG.

Cell topologies:

* NTI / PTI are complementary MOSFET pairs; the NTI switches a third of the
  way up the supply, the PTI two thirds, implemented purely through threshold
  choice.
* STI is a ratioed inverter: a complementary pair with both thresholds just
  above VDD/2 plus an equal-resistor rail divider, so mid-band inputs leave
  both devices off and the divider holds the output at exactly VDD/2.  A
  plain complementary pair has no stable mid output (ideal square-law devices
  in saturation give the output node zero conductance) and would amplify the
  level loss of an upstream memristor divider past the quantization bands.
* TAND/TOR are memristor-ratioed dividers.  TOR points every anode at its
  input, TAND at the output, so the forward-biased device ends up on-state
  toward the higher (OR) or lower (AND) input and the divider approximates
  max/min.
* SFBUF is an NMOS source follower with a pull-down resistor.  Its device is
  sized wide with a near-native threshold so the follower drop stays inside
  the downstream quantization margins.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Optional

from ..devices import MemristorParams, MosfetParams
from .model import GND, Circuit, Memristor, Mosfet, Port, Resistor, VSource


class InvalidArity(ValueError):
    """Raised when a gate is built or driven with the wrong input count."""


class CellKind(enum.Enum):
    STI = "STI"
    NTI = "NTI"
    PTI = "PTI"
    TAND2 = "TAND2"
    TOR2 = "TOR2"
    TORN = "TORN"
    TNOR = "TNOR"
    SFBUF = "SFBUF"


_ARITY = {CellKind.STI: 1, CellKind.NTI: 1, CellKind.PTI: 1, CellKind.SFBUF: 1,
          CellKind.TAND2: 2, CellKind.TOR2: 2, CellKind.TNOR: 2}

# Channel-length modulation keeps saturated devices from presenting an exactly
# singular output node to the Newton solver.
_LAMBDA = 0.05
_K_INV = 2e-3

NTI_NMOS = MosfetParams("NMOS", vth=0.30, k=_K_INV, channel_mod=_LAMBDA)
NTI_PMOS = MosfetParams("PMOS", vth=0.70, k=_K_INV, channel_mod=_LAMBDA)
PTI_NMOS = MosfetParams("NMOS", vth=0.70, k=_K_INV, channel_mod=_LAMBDA)
PTI_PMOS = MosfetParams("PMOS", vth=0.30, k=_K_INV, channel_mod=_LAMBDA)
STI_NMOS = MosfetParams("NMOS", vth=0.55, k=_K_INV, channel_mod=_LAMBDA)
STI_PMOS = MosfetParams("PMOS", vth=0.55, k=_K_INV, channel_mod=_LAMBDA)
STI_RAIL_OHMS = 100e3
# Wide, near-native-threshold follower.  The device must be strong enough to
# hold the buffered rails inside the quantization bands, and the load must be
# stiff enough to sink current injected back through off-state memristors of
# downstream divider gates (a 10k load lets idle lines float toward mid).
SFBUF_NMOS = MosfetParams("NMOS", vth=0.05, k=1.0, channel_mod=_LAMBDA)
SFBUF_LOAD_OHMS = 1e3
MEM_CELL = MemristorParams()


@dataclass(frozen=True)
class GateSpec:
    """One gate instance inside a network: kind, name, input nets, output net."""

    kind: CellKind
    name: str
    inputs: tuple
    output: str

    def __post_init__(self):
        want = _ARITY.get(self.kind)
        if want is not None and len(self.inputs) != want:
            raise InvalidArity(
                f"{self.kind.value} {self.name!r} takes {want} inputs, "
                f"got {len(self.inputs)}")
        if self.kind is CellKind.TORN and len(self.inputs) < 2:
            raise InvalidArity(f"TORN {self.name!r} needs at least 2 inputs")


@dataclass(frozen=True)
class GateNetwork:
    """Gate-level description shared by the analog and digital backends.

    ``gates`` is topologically ordered: every gate's inputs are primary
    inputs or outputs of earlier gates.
    """

    name: str
    inputs: tuple
    outputs: tuple  # ((port name, net name), ...)
    gates: tuple

    def __post_init__(self):
        defined = set(self.inputs)
        for g in self.gates:
            for net in g.inputs:
                if net not in defined:
                    raise ValueError(f"gate {g.name!r} reads undefined net {net!r}")
            if g.output in defined:
                raise ValueError(f"net {g.output!r} has multiple drivers")
            defined.add(g.output)
        for port, net in self.outputs:
            if net not in defined:
                raise ValueError(f"output port {port!r} bound to undefined net {net!r}")

    def census(self) -> dict:
        out: dict = {}
        for g in self.gates:
            out[g.kind.value] = out.get(g.kind.value, 0) + 1
        return out

    def gate_driving(self, net: str) -> Optional[GateSpec]:
        for g in self.gates:
            if g.output == net:
                return g
        return None


def _expand_gate(gate: GateSpec, devices: list, vdd_net: str):
    """Append the device-level expansion of one gate instance."""
    g = gate.name
    ins, out = gate.inputs, gate.output
    kind = gate.kind
    if kind in (CellKind.NTI, CellKind.PTI):
        npar, ppar = (NTI_NMOS, NTI_PMOS) if kind is CellKind.NTI else (PTI_NMOS, PTI_PMOS)
        devices.append(Mosfet(f"T{g}_n", out, ins[0], GND, npar))
        devices.append(Mosfet(f"T{g}_p", out, ins[0], vdd_net, ppar))
    elif kind is CellKind.STI:
        _expand_sti(g, ins[0], out, devices, vdd_net)
    elif kind is CellKind.SFBUF:
        devices.append(Mosfet(f"T{g}_n", vdd_net, ins[0], out, SFBUF_NMOS))
        devices.append(Resistor(f"R{g}_load", out, GND, SFBUF_LOAD_OHMS))
    elif kind is CellKind.TAND2:
        for label, net in zip("ab", ins):
            devices.append(Memristor(f"M{g}_{label}", out, net, MEM_CELL))
    elif kind in (CellKind.TOR2, CellKind.TORN):
        for i, net in enumerate(ins, start=1):
            devices.append(Memristor(f"M{g}_in{i}", net, out, MEM_CELL))
    elif kind is CellKind.TNOR:
        mid = f"{g}.or"
        for i, net in enumerate(ins, start=1):
            devices.append(Memristor(f"M{g}_in{i}", net, mid, MEM_CELL))
        _expand_sti(f"{g}_sti", mid, out, devices, vdd_net)
    else:  # pragma: no cover - exhaustive over kinds
        raise InvalidArity(f"cannot expand cell kind {kind}")


def _expand_sti(name: str, inp: str, out: str, devices: list, vdd_net: str):
    devices.append(Mosfet(f"T{name}_n", out, inp, GND, STI_NMOS))
    devices.append(Mosfet(f"T{name}_p", out, inp, vdd_net, STI_PMOS))
    devices.append(Resistor(f"R{name}_t", vdd_net, out, STI_RAIL_OHMS))
    devices.append(Resistor(f"R{name}_b", out, GND, STI_RAIL_OHMS))


def elaborate(network: GateNetwork, vdd: float = 1.0) -> Circuit:
    """Expand a gate network into a flat device-level circuit.

    A DC supply is attached when any cell needs one.  Input ports are left
    undriven; the engine pins them from a stimulus.
    """
    devices: list = []
    for gate in network.gates:
        _expand_gate(gate, devices, "vdd")
    uses_vdd = any("vdd" in dev.nodes for dev in devices)
    if uses_vdd:
        devices.insert(0, VSource("Vvdd", "vdd", GND, dc=vdd))
    ports = [Port(name, "in", name) for name in network.inputs]
    ports += [Port(port, "out", net) for port, net in network.outputs]
    if uses_vdd:
        ports.append(Port("vdd", "in", "vdd"))
    circuit = Circuit(name=network.name, devices=devices, ports=ports,
                      cells=network.census())
    return circuit.validate()


def build_cell(kind: CellKind, n: Optional[int] = None, vdd: float = 1.0) -> Circuit:
    """Build one standalone cell as a circuit with conventional port names.

    ``n`` selects the arity of TORN; other kinds reject it.
    """
    if kind is CellKind.TORN:
        if n is None or n < 2:
            raise InvalidArity("TORN requires n >= 2")
        ins = tuple(f"in{i}" for i in range(1, n + 1))
    else:
        if n is not None and n != _ARITY[kind]:
            raise InvalidArity(f"{kind.value} has fixed arity {_ARITY[kind]}")
        ins = {1: ("in",), 2: ("a", "b")}[_ARITY[kind]]
    net = GateNetwork(name=kind.value.lower(), inputs=ins,
                      outputs=(("out", "out"),),
                      gates=(GateSpec(kind, "u1", ins, "out"),))
    return elaborate(net, vdd=vdd)


def decoder_1_3_network(prefix: str = "", input_net: str = "X",
                        outs=("Y0", "Y1", "Y2")) -> GateNetwork:
    """1-to-3 line decoder: two NTI, one PTI, a TNOR, and two followers.

    The low output comes straight from the first NTI, the high output from an
    NTI on the PTI, and the middle output from a TNOR of the other two with a
    source-follower stage before its OR inputs.
    """
    p = prefix
    gates = (
        GateSpec(CellKind.NTI, f"{p}inv0", (input_net,), outs[0]),
        GateSpec(CellKind.PTI, f"{p}pmid", (input_net,), f"{p}pout"),
        GateSpec(CellKind.NTI, f"{p}inv2", (f"{p}pout",), outs[2]),
        GateSpec(CellKind.SFBUF, f"{p}buf0", (outs[0],), f"{p}s0"),
        GateSpec(CellKind.SFBUF, f"{p}buf2", (outs[2],), f"{p}s2"),
        GateSpec(CellKind.TNOR, f"{p}nor1", (f"{p}s0", f"{p}s2"), outs[1]),
    )
    return GateNetwork(name=f"{p}d13" if p else "d13", inputs=(input_net,),
                       outputs=tuple((o, o) for o in outs), gates=gates)


def decoder_2_9_network() -> GateNetwork:
    """2-to-9 line decoder: two 1-3 decoders fanned into nine TAND gates.

    Output k = 3i + j is the AND of intermediate lines A_i and B_j; each
    intermediate line is buffered once before fanning out to its three TANDs.
    """
    a = decoder_1_3_network(prefix="a_", input_net="A", outs=("A0", "A1", "A2"))
    b = decoder_1_3_network(prefix="b_", input_net="B", outs=("B0", "B1", "B2"))
    gates = list(a.gates) + list(b.gates)
    for side in ("A", "B"):
        for i in range(3):
            gates.append(GateSpec(CellKind.SFBUF, f"buf{side.lower()}{i}",
                                  (f"{side}{i}",), f"s{side}{i}"))
    for i, j in itertools.product(range(3), range(3)):
        k = 3 * i + j
        gates.append(GateSpec(CellKind.TAND2, f"and{k}",
                              (f"sA{i}", f"sB{j}"), f"Y{k}"))
    return GateNetwork(name="d29", inputs=("A", "B"),
                       outputs=tuple((f"Y{k}", f"Y{k}") for k in range(9)),
                       gates=tuple(gates))


# Seven-segment sum terms over the 2-9 decoder outputs; segment c is a plain
# buffered copy of line 2.
SEGMENT_TERMS = {
    "a": (1, 4),
    "b": (5, 6),
    "c": (2,),
    "d": (1, 4, 7),
    "e": (1, 3, 4, 5, 7),
    "f": (1, 2, 3, 7),
    "g": (0, 1, 7),
}


def decoder_display_network() -> GateNetwork:
    """Seven-segment display decoder: 2-9 decoder routed through TOR gates.

    Decoder lines are buffered, OR-ed per segment, and each segment passes
    through a two-inverter restoring stage so the ports swing rail to rail.
    """
    d29 = decoder_2_9_network()
    gates = list(d29.gates)
    used = sorted({i for terms in SEGMENT_TERMS.values() for i in terms})
    for i in used:
        gates.append(GateSpec(CellKind.SFBUF, f"bufy{i}", (f"Y{i}",), f"sY{i}"))
    outputs = []
    for seg, terms in SEGMENT_TERMS.items():
        ins = tuple(f"sY{i}" for i in terms)
        if len(ins) == 1:
            or_net = ins[0]
        else:
            kind = CellKind.TOR2 if len(ins) == 2 else CellKind.TORN
            or_net = f"r{seg}"
            gates.append(GateSpec(kind, f"or_{seg}", ins, or_net))
        gates.append(GateSpec(CellKind.NTI, f"rst1_{seg}", (or_net,), f"n{seg}"))
        gates.append(GateSpec(CellKind.NTI, f"rst2_{seg}", (f"n{seg}",), f"Y{seg}"))
        outputs.append((f"Y{seg}", f"Y{seg}"))
    return GateNetwork(name="display", inputs=("A", "B"),
                       outputs=tuple(outputs), gates=tuple(gates))


BUILTIN_NETWORKS = {
    "d13": decoder_1_3_network,
    "d29": decoder_2_9_network,
    "display": decoder_display_network,
}


def builtin_network(name: str) -> GateNetwork:
    try:
        return BUILTIN_NETWORKS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; choices: "
                       f"{sorted(BUILTIN_NETWORKS)}") from None


def mutate_network(network: GateNetwork, fault: str) -> GateNetwork:
    """Apply a named wiring fault, e.g. ``swap:Y7,Y5`` to swap two outputs."""
    op, _, arg = fault.partition(":")
    if op != "swap":
        raise ValueError(f"unknown fault {fault!r} (supported: swap:P1,P2)")
    names = [s.strip() for s in arg.split(",")]
    if len(names) != 2:
        raise ValueError("swap fault needs exactly two port names")
    ports = dict(network.outputs)
    if names[0] not in ports or names[1] not in ports:
        raise ValueError(f"fault ports must be outputs of {network.name!r}")
    ports[names[0]], ports[names[1]] = ports[names[1]], ports[names[0]]
    outputs = tuple((p, ports[p]) for p, _ in network.outputs)
    return GateNetwork(name=f"{network.name}~{fault}", inputs=network.inputs,
                       outputs=outputs, gates=network.gates)


def build_decoder_1_3(vdd: float = 1.0) -> Circuit:
    """Device-level 1-3 line decoder with ports X, Y0..Y2."""
    return elaborate(decoder_1_3_network(), vdd=vdd)


def build_decoder_2_9(vdd: float = 1.0) -> Circuit:
    """Device-level 2-9 line decoder with ports A, B, Y0..Y8."""
    return elaborate(decoder_2_9_network(), vdd=vdd)


def build_decoder_display(vdd: float = 1.0) -> Circuit:
    """Device-level seven-segment display decoder with ports A, B, Ya..Yg."""
    return elaborate(decoder_display_network(), vdd=vdd)
