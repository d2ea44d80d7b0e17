import pytest

from ternsim.netlist import (CellKind, DuplicateNameError, NetlistSyntaxError,
                             SEGMENT_TERMS, UnboundNodeError,
                             UnknownDeviceError, build_cell, builtin_network,
                             elaborate, mutate_network, parse, serialize)
from ternsim.netlist.cells import InvalidArity
from ternsim.netlist.model import Resistor

MINIMAL = """\
Vdd vdd 0 DC 1.0
M1 vdd out RON=500 ROFF=10k VON=0.27 VOFF=0.27 TAU=500p X0=0
R1 out 0 1k
"""


class TestParse:
    def test_minimal_netlist(self):
        c = parse(MINIMAL)
        assert len(c.devices) == 3
        assert c.nodes == {"vdd", "out", "0"}
        m = c.device("M1")
        assert m.params.r_off == 10_000.0
        assert m.params.tau == pytest.approx(500e-12)

    def test_si_suffixes(self):
        c = parse("V1 a 0 DC 1.0\nR1 a b 4.7k\nR2 b 0 220m\n")
        assert c.device("R1").ohms == pytest.approx(4700.0)
        assert c.device("R2").ohms == pytest.approx(0.22)

    def test_case_insensitive_keywords(self):
        c = parse("v1 a 0 dc 1.0\nr1 a 0 1K\n")
        assert c.device("v1").dc == 1.0

    def test_comments_and_blank_lines(self):
        c = parse("* a comment\n\n" + MINIMAL + "\n* trailing\n")
        assert len(c.devices) == 3

    def test_pwl_source(self):
        c = parse("V1 a 0 PWL(0 0 1n 1.0 2n 0.5)\nR1 a 0 1k\n")
        src = c.device("V1")
        assert src.value_at(0.0) == 0.0
        assert src.value_at(0.5e-9) == pytest.approx(0.5)
        assert src.value_at(5e-9) == 0.5

    def test_ports(self):
        c = parse(MINIMAL + ".port out result out\n.end\n")
        assert c.port("result").node == "out"

    def test_end_stops_parsing(self):
        c = parse(MINIMAL + ".end\nthis is not a netlist line\n")
        assert len(c.devices) == 3


class TestParseErrors:
    def _line_of(self, exc_info):
        return exc_info.value.line

    def test_memristor_arity(self):
        with pytest.raises(NetlistSyntaxError) as e:
            parse("M1 a")
        assert self._line_of(e) == 1
        assert "2 nodes" in str(e.value)

    def test_unknown_device(self):
        with pytest.raises(UnknownDeviceError) as e:
            parse("V1 a 0 DC 1\nQ1 a b c\n")
        assert self._line_of(e) == 2

    def test_duplicate_name(self):
        with pytest.raises(DuplicateNameError) as e:
            parse("V1 a 0 DC 1\nR1 a b 1k\nR1 b 0 1k\n")
        assert self._line_of(e) == 3

    def test_port_unknown_node(self):
        with pytest.raises(UnboundNodeError) as e:
            parse(MINIMAL + ".port out y nowhere\n")
        assert self._line_of(e) == 4

    def test_bad_value(self):
        with pytest.raises(NetlistSyntaxError) as e:
            parse("V1 a 0 DC 1\nR1 a 0 12x3\n")
        assert self._line_of(e) == 2

    def test_missing_dc_value(self):
        with pytest.raises(NetlistSyntaxError) as e:
            parse("V1 a 0 DC\n")
        assert self._line_of(e) == 1

    def test_pwl_odd_points(self):
        with pytest.raises(NetlistSyntaxError) as e:
            parse("V1 a 0 PWL(0 0 1n)\n")
        assert self._line_of(e) == 1

    def test_bad_polarity(self):
        with pytest.raises(NetlistSyntaxError) as e:
            parse("T1 d g s CMOS VTH=0.3 K=1m\n")
        assert self._line_of(e) == 1

    def test_memristor_unknown_key(self):
        with pytest.raises(NetlistSyntaxError) as e:
            parse("M1 a b RON=500 BOGUS=1\n")
        assert self._line_of(e) == 1

    def test_dangling_node(self):
        with pytest.raises(UnboundNodeError) as e:
            parse("V1 a 0 DC 1\nR1 a 0 1k\nR2 a floater 1k\n")
        assert self._line_of(e) == 3

    def test_floating_source_negative_terminal(self):
        with pytest.raises(UnboundNodeError):
            parse("V1 a b DC 1\nR1 a b 1k\nR2 b 0 1k\n")

    def test_bad_port_direction(self):
        with pytest.raises(NetlistSyntaxError) as e:
            parse(MINIMAL + ".port inout x out\n")
        assert self._line_of(e) == 4


class TestSerialize:
    @pytest.mark.parametrize("name", ["d13", "d29", "display"])
    def test_roundtrip_builtins(self, name):
        circuit = elaborate(builtin_network(name))
        again = parse(serialize(circuit))
        assert again == circuit

    @pytest.mark.parametrize("kind,n", [
        (CellKind.STI, None), (CellKind.NTI, None), (CellKind.PTI, None),
        (CellKind.TAND2, None), (CellKind.TOR2, None), (CellKind.TNOR, None),
        (CellKind.SFBUF, None), (CellKind.TORN, 3), (CellKind.TORN, 5),
    ])
    def test_roundtrip_cells(self, kind, n):
        circuit = build_cell(kind, n=n)
        assert parse(serialize(circuit)) == circuit

    def test_serialize_idempotent_through_parse(self):
        circuit = elaborate(builtin_network("d13"))
        text = serialize(circuit)
        assert serialize(parse(text)) == text

    def test_empty_circuit_header_only(self):
        from ternsim.netlist.model import Circuit
        text = serialize(Circuit(name="empty"))
        assert text == "* circuit: empty\n.end\n"


class TestCells:
    def test_tand2_ports_and_devices(self):
        c = build_cell(CellKind.TAND2)
        assert len(c.memristors()) == 2
        assert {p.name for p in c.ports} == {"a", "b", "out"}

    def test_tnor_shares_internal_node(self):
        c = build_cell(CellKind.TNOR)
        mem_nodes = {n for d in c.memristors() for n in d.nodes}
        sti_gates = {d.gate for d in c.mosfets()
                     if d.params.vth == pytest.approx(0.55)}
        assert len(sti_gates) == 1
        assert sti_gates <= mem_nodes

    def test_sfbuf_devices(self):
        c = build_cell(CellKind.SFBUF)
        assert len(c.mosfets()) == 1
        assert len([d for d in c.devices if isinstance(d, Resistor)]) == 1

    def test_torn_arity_validation(self):
        with pytest.raises(InvalidArity):
            build_cell(CellKind.TORN, n=1)
        with pytest.raises(InvalidArity):
            build_cell(CellKind.TAND2, n=3)


class TestBuilders:
    def test_d13_census(self, d13_network):
        assert d13_network.census() == {"NTI": 2, "PTI": 1, "TNOR": 1,
                                        "SFBUF": 2}

    def test_d13_ports(self, d13):
        assert [p.name for p in d13.output_ports()] == ["Y0", "Y1", "Y2"]
        assert [p.name for p in d13.input_ports() if p.name != "vdd"] == ["X"]

    def test_d13_connectivity_from_input(self, d13):
        # every internal node is reachable from X through device terminals
        adjacency = {}
        for dev in d13.devices:
            nodes = dev.nodes
            for n in nodes:
                adjacency.setdefault(n, set()).update(nodes)
        seen, frontier = {"X"}, ["X"]
        while frontier:
            n = frontier.pop()
            for m in adjacency.get(n, ()):
                if m not in seen:
                    seen.add(m)
                    frontier.append(m)
        assert seen >= d13.nodes

    def test_d29_census_matches_composition(self, d29_network):
        census = d29_network.census()
        assert census["TAND2"] == 9
        # two embedded 1-3 decoders plus one buffer per intermediate line
        assert census["NTI"] == 4
        assert census["PTI"] == 2
        assert census["TNOR"] == 2
        assert census["SFBUF"] == 2 * 2 + 6

    def test_d29_wiring_follows_product_equations(self, d29_network):
        and7 = d29_network.gate_driving("Y7")
        assert and7.kind is CellKind.TAND2
        assert set(and7.inputs) == {"sA2", "sB1"}
        and3 = d29_network.gate_driving("Y3")
        assert set(and3.inputs) == {"sA1", "sB0"}

    def test_display_ports(self, display):
        outs = [p.name for p in display.output_ports()]
        assert outs == [f"Y{s}" for s in "abcdefg"]
        ins = [p.name for p in display.input_ports() if p.name != "vdd"]
        assert ins == ["A", "B"]

    def test_display_segment_c_has_no_tor(self, display_network):
        rst1 = display_network.gate_driving("nc")
        assert rst1.kind is CellKind.NTI
        assert rst1.inputs == ("sY2",)
        driver = display_network.gate_driving("sY2")
        assert driver.kind is CellKind.SFBUF

    def test_display_segment_e_is_five_input_tor(self, display_network):
        or_e = display_network.gate_driving("re")
        assert or_e.kind is CellKind.TORN
        assert len(or_e.inputs) == 5
        assert set(or_e.inputs) == {f"sY{i}" for i in (1, 3, 4, 5, 7)}

    def test_segment_terms_use_only_lines_0_to_7(self):
        used = {i for terms in SEGMENT_TERMS.values() for i in terms}
        assert used <= set(range(8))

    def test_builders_deterministic(self):
        a = elaborate(builtin_network("d29"))
        b = elaborate(builtin_network("d29"))
        assert a == b

    def test_all_builders_validate(self, d13, d29, display):
        for c in (d13, d29, display):
            assert c.validate() is c

    def test_mutate_network_swaps_outputs(self, d29_network):
        bad = mutate_network(d29_network, "swap:Y7,Y5")
        ports = dict(bad.outputs)
        assert ports["Y7"] == "Y5" and ports["Y5"] == "Y7"
        with pytest.raises(ValueError):
            mutate_network(d29_network, "swap:Y7")
        with pytest.raises(ValueError):
            mutate_network(d29_network, "drop:Y7,Y5")
