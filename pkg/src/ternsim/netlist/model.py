"""Circuit data model: nodes, device instances and named ports.

Circuits are flat (no hierarchy); builders in :mod:`ternsim.netlist.cells`
expand gate-level networks into these device lists.  Node ``"0"`` is ground.
Circuits are treated as immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..devices import MemristorParams, MosfetParams

GND = "0"


class NetlistError(ValueError):
    """Base class for netlist syntax and consistency errors."""

    def __init__(self, line: Optional[int], reason: str):
        self.line = line
        self.reason = reason
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{reason}")


class NetlistSyntaxError(NetlistError):
    pass


class UnknownDeviceError(NetlistError):
    pass


class DuplicateNameError(NetlistError):
    pass


class UnboundNodeError(NetlistError):
    pass


@dataclass(frozen=True)
class Memristor:
    name: str
    anode: str
    cathode: str
    params: MemristorParams

    @property
    def nodes(self):
        return (self.anode, self.cathode)


@dataclass(frozen=True)
class Mosfet:
    name: str
    drain: str
    gate: str
    source: str
    params: MosfetParams

    @property
    def nodes(self):
        return (self.drain, self.gate, self.source)


@dataclass(frozen=True)
class Resistor:
    name: str
    n1: str
    n2: str
    ohms: float

    @property
    def nodes(self):
        return (self.n1, self.n2)


@dataclass(frozen=True)
class VSource:
    """Independent voltage source; DC or piecewise-linear in time.

    The negative terminal must be ground: the engine treats source nodes as
    fixed voltages in the nodal equations, which only supports grounded
    sources.
    """

    name: str
    pos: str
    neg: str
    dc: Optional[float] = None
    pwl: Optional[tuple] = None  # ((t0, v0), (t1, v1), ...)

    @property
    def nodes(self):
        return (self.pos, self.neg)

    def value_at(self, t: float) -> float:
        if self.dc is not None:
            return self.dc
        pts = self.pwl
        if t <= pts[0][0]:
            return pts[0][1]
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            if t <= t1:
                if t1 == t0:
                    return v1
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        return pts[-1][1]


Device = Memristor | Mosfet | Resistor | VSource


@dataclass(frozen=True)
class Port:
    name: str
    direction: str  # "in" | "out"
    node: str


@dataclass
class Circuit:
    """Node/device graph with named input/output ports.

    ``cells`` is optional builder metadata: a census of gate instances by
    cell kind, for resource reporting.  Parsed circuits have an empty census.
    """

    name: str = "circuit"
    devices: list = field(default_factory=list)
    ports: list = field(default_factory=list)  # list[Port], declaration order
    cells: dict = field(default_factory=dict)  # cell kind name -> count

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        # Structural identity; the cell census is metadata, not structure.
        return (self.name == other.name and self.devices == other.devices
                and self.ports == other.ports)

    @property
    def nodes(self) -> set:
        out = set()
        for dev in self.devices:
            out.update(dev.nodes)
        return out

    def port(self, name: str) -> Port:
        for p in self.ports:
            if p.name == name:
                return p
        raise KeyError(f"no port named {name!r}")

    def input_ports(self) -> list:
        return [p for p in self.ports if p.direction == "in"]

    def output_ports(self) -> list:
        return [p for p in self.ports if p.direction == "out"]

    def memristors(self) -> list:
        return [d for d in self.devices if isinstance(d, Memristor)]

    def mosfets(self) -> list:
        return [d for d in self.devices if isinstance(d, Mosfet)]

    def sources(self) -> list:
        return [d for d in self.devices if isinstance(d, VSource)]

    def device(self, name: str):
        for d in self.devices:
            if d.name == name:
                return d
        raise KeyError(f"no device named {name!r}")

    def validate(self, lines: Optional[dict] = None) -> "Circuit":
        """Check structural invariants; raise a NetlistError subclass on failure.

        ``lines`` optionally maps device/port names to source line numbers so
        parse-time validation can report locations.
        """
        lines = lines or {}
        names = set()
        for dev in self.devices:
            if dev.name in names:
                raise DuplicateNameError(lines.get(dev.name),
                                         f"duplicate device name {dev.name!r}")
            names.add(dev.name)
        nodes = self.nodes
        if not nodes:
            return self
        if GND not in nodes and self.sources():
            # A self-powered circuit needs a ground reference; a passive
            # subcircuit (e.g. a bare memristor gate) is referenced by
            # whatever drives its ports.
            raise UnboundNodeError(None, "no device is connected to ground (node 0)")
        port_names = set()
        port_nodes = set()
        for p in self.ports:
            if p.name in port_names:
                raise DuplicateNameError(lines.get(("port", p.name)),
                                         f"duplicate port name {p.name!r}")
            port_names.add(p.name)
            if p.node not in nodes:
                raise UnboundNodeError(lines.get(("port", p.name)),
                                       f"port {p.name!r} binds unknown node {p.node!r}")
            port_nodes.add(p.node)
        for src in self.sources():
            if src.neg != GND:
                raise UnboundNodeError(
                    lines.get(src.name),
                    f"source {src.name!r}: negative terminal must be ground")
        # Every non-port node needs at least two device terminals on it.
        counts: dict = {}
        owner: dict = {}
        for dev in self.devices:
            for n in dev.nodes:
                counts[n] = counts.get(n, 0) + 1
                owner.setdefault(n, dev.name)
        for node, cnt in counts.items():
            if cnt < 2 and node not in port_nodes and node != GND:
                raise UnboundNodeError(
                    lines.get(owner[node]),
                    f"node {node!r} is dangling (single terminal, not a port)")
        return self
