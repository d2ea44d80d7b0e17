"""Verification and reporting: truth tables, settling/glitch metrics,
seven-segment rendering, and the resource/power comparison report.

Expected decoder outputs are derived from the reference gate semantics (the
2-9 table follows the product equations Yk = Ai AND Bj with k = 3i + j; the
published tabulation of that decoder carries transcription errata and is not
reproduced).  Power and FPGA utilization figures for the comparison report
are carried as constants quoted from the reference implementation report,
never recomputed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Sequence

from .core import (INDETERMINATE, LEVELS, TernaryLevel, VoltageBands,
                   encode_2bit)
from .digital import build_dag, eval_circuit, or_reduce_segment
from .engine import (NotSettled, SolverConfig, Stimulus, Waveform,
                     steady_output)
from .netlist.cells import (GateNetwork, SEGMENT_TERMS, builtin_network,
                            elaborate)
from .netlist.model import Circuit

DECODERS = ("d13", "d29", "display")
BACKENDS = ("analog", "digital")

SEGMENTS = "abcdefg"

# Lit-segment encodings (active segments) for the digits the display
# decoder can produce.
DIGIT_SEGMENTS = {
    0: "abcdef",
    1: "bc",
    2: "abdeg",
    3: "abcdg",
    4: "bcfg",
    5: "acdfg",
    6: "acdefg",
    7: "abc",
    8: "abcdefg",
}


def input_vectors(decoder: str) -> list:
    """All input vectors for a decoder, in descending display order."""
    if decoder == "d13":
        return [{"X": lv} for lv in (LEVELS[0], LEVELS[1], LEVELS[2])]
    if decoder in ("d29", "display"):
        return [{"A": TernaryLevel(a), "B": TernaryLevel(b)}
                for a, b in itertools.product((2, 1, 0), repeat=2)]
    raise KeyError(f"unknown decoder {decoder!r}")


def expected_outputs(decoder: str, inputs: Mapping) -> dict:
    """Reference output levels for one input vector."""
    if decoder == "d13":
        x = int(inputs["X"])
        return {f"Y{i}": TernaryLevel.L2 if i == x else TernaryLevel.L0
                for i in range(3)}
    a, b = int(inputs["A"]), int(inputs["B"])
    hot = 3 * a + b
    lines = {k: TernaryLevel.L2 if k == hot else TernaryLevel.L0
             for k in range(9)}
    if decoder == "d29":
        return {f"Y{k}": lines[k] for k in range(9)}
    if decoder == "display":
        return {f"Y{s}": (TernaryLevel.L2
                          if any(lines[t] == TernaryLevel.L2
                                 for t in SEGMENT_TERMS[s])
                          else TernaryLevel.L0)
                for s in SEGMENTS}
    raise KeyError(f"unknown decoder {decoder!r}")


def displayed_digit(decoder_inputs: Mapping) -> int:
    """Digit shown for a display-decoder input pair (active-low segments)."""
    outs = expected_outputs("display", decoder_inputs)
    lit = "".join(s for s in SEGMENTS if outs[f"Y{s}"] == TernaryLevel.L0)
    for digit, segs in DIGIT_SEGMENTS.items():
        if segs == lit:
            return digit
    raise ValueError(f"no digit renders segments {lit!r}")  # pragma: no cover


@dataclass
class VectorResult:
    inputs: dict
    expected: dict
    observed: dict
    settled: bool
    settle_time: Optional[float]

    @property
    def ok(self) -> bool:
        return self.settled and self.observed == self.expected


@dataclass
class TruthTableReport:
    decoder: str
    backend: str
    vectors: list
    notes: tuple = ()

    @property
    def passed(self) -> bool:
        return all(v.ok for v in self.vectors)

    def summary(self) -> str:
        n_ok = sum(v.ok for v in self.vectors)
        return (f"{self.decoder}/{self.backend}: {n_ok}/{len(self.vectors)} "
                f"vectors {'PASS' if self.passed else 'FAIL'}")

    def to_text(self) -> str:
        lines = [self.summary()]
        for v in self.vectors:
            ins = " ".join(f"{k}={int(lv)}" for k, lv in v.inputs.items())
            obs = " ".join(f"{k}={_fmt_level(lv)}" for k, lv in v.observed.items())
            mark = "ok" if v.ok else "MISMATCH"
            settle = (f" settle={v.settle_time * 1e9:.2f}ns"
                      if v.settle_time is not None else "")
            lines.append(f"  [{mark}] {ins} -> {obs}{settle}")
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)

    def to_json(self) -> str:
        doc = {
            "decoder": self.decoder,
            "backend": self.backend,
            "passed": self.passed,
            "notes": list(self.notes),
            "vectors": [{
                "inputs": {k: int(lv) for k, lv in v.inputs.items()},
                "expected": {k: _fmt_level(lv) for k, lv in v.expected.items()},
                "observed": {k: _fmt_level(lv) for k, lv in v.observed.items()},
                "settled": v.settled,
                "settle_time_s": v.settle_time,
                "ok": v.ok,
            } for v in self.vectors],
        }
        return json.dumps(doc, indent=2)


def _fmt_level(lv) -> str:
    return str(int(lv)) if isinstance(lv, TernaryLevel) else "X"


_D29_ERRATUM = ("2-9 expected values follow the product equations "
                "(output 3A+B high); the published tabulation of this "
                "decoder contains transcription errata and is not used.")


def verify(backend: str, decoder: str, *,
           network: Optional[GateNetwork] = None,
           bands: Optional[VoltageBands] = None,
           cfg: Optional[SolverConfig] = None,
           jobs: int = 1) -> TruthTableReport:
    """Exhaustive truth-table check of one decoder on one backend.

    ``network`` overrides the builtin topology (used for fault injection).
    Analog vectors may run in parallel with ``jobs``.
    """
    if backend not in BACKENDS:
        raise KeyError(f"unknown backend {backend!r}")
    net = network if network is not None else builtin_network(decoder)
    vectors = input_vectors(decoder)
    notes = (_D29_ERRATUM,) if decoder in ("d29", "display") else ()
    if backend == "digital":
        dag = build_dag(net)
        results = []
        for vec in vectors:
            encoded = {k: encode_2bit(lv) for k, lv in vec.items()}
            out = eval_circuit(dag, encoded)
            observed = {port: _decoded_level(bp) for port, bp in out.items()}
            results.append(VectorResult(inputs=dict(vec),
                                        expected=expected_outputs(decoder, vec),
                                        observed=observed,
                                        settled=True, settle_time=None))
        return TruthTableReport(decoder, backend, results, notes)
    circuit = elaborate(net)
    if jobs > 1:
        results = _verify_analog_parallel(decoder, net, vectors, bands, cfg, jobs)
    else:
        results = [_analog_vector(circuit, decoder, vec, bands, cfg)
                   for vec in vectors]
    return TruthTableReport(decoder, backend, results, notes)


def _decoded_level(bp):
    from .core import decode_2bit
    return decode_2bit(bp)


def _analog_vector(circuit: Circuit, decoder: str, vec: Mapping,
                   bands, cfg) -> VectorResult:
    expected = expected_outputs(decoder, vec)
    try:
        observed, info = steady_output(circuit, vec, bands=bands, cfg=cfg,
                                       return_info=True)
        settled, settle_time = True, info["settle_time"]
    except NotSettled:
        observed = {p: INDETERMINATE for p in expected}
        settled, settle_time = False, None
    return VectorResult(inputs=dict(vec), expected=expected,
                        observed=observed, settled=settled,
                        settle_time=settle_time)


def _parallel_worker(args):
    decoder, net, vec, bands, cfg = args
    circuit = elaborate(net)
    return _analog_vector(circuit, decoder, vec, bands, cfg)


def _verify_analog_parallel(decoder, net, vectors, bands, cfg, jobs):
    from concurrent.futures import ProcessPoolExecutor
    work = [(decoder, net, vec, bands, cfg) for vec in vectors]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_parallel_worker, work))


@dataclass(frozen=True)
class GlitchEvent:
    """Transient excursion out of a node's final band between stimulus events."""

    node: str
    t_start: float
    t_end: float
    excursion_band: str

    def __post_init__(self):
        if self.t_end <= self.t_start:
            raise ValueError("glitch must have t_end > t_start")


def detect_glitches(w: Waveform, stim: Stimulus, bands: VoltageBands,
                    nodes: Optional[Sequence[str]] = None,
                    min_samples: int = 2) -> list:
    """Find band excursions that leave and re-enter a node's settled band.

    Windows run from each stimulus event to the next; within a window a node
    must first reach its final band, and any later run of at least
    ``min_samples`` samples outside that band that returns to it is reported.
    The minimum width suppresses single-sample solver jitter.
    """
    if nodes is None:
        nodes = [n for n in w.port_nodes.values() if n in w.probes]
        nodes = list(dict.fromkeys(nodes)) or list(w.probes)
    events = [t for t in stim.event_times() if t <= w.times[-1]]
    if not events or events[0] > 0.0:
        events = [0.0] + events
    bounds = []
    for i, t in enumerate(events):
        t_next = events[i + 1] if i + 1 < len(events) else w.times[-1] + w.dt
        i0 = int(round(t / w.dt))
        i1 = min(int(round(t_next / w.dt)), len(w.times))
        if i1 - i0 >= 2:
            bounds.append((i0, i1))
    glitches = []
    for node in nodes:
        series = w.probes[node]
        for i0, i1 in bounds:
            final = bands.region(float(series[i1 - 1]))
            k = i0
            while k < i1 and bands.region(float(series[k])) != final:
                k += 1
            run_start = None
            for i in range(k, i1):
                region = bands.region(float(series[i]))
                if region != final:
                    if run_start is None:
                        run_start = i
                else:
                    if run_start is not None and i - run_start >= min_samples:
                        glitches.append(GlitchEvent(
                            node=node,
                            t_start=float(w.times[run_start]),
                            t_end=float(w.times[i]),
                            excursion_band=bands.region(float(series[run_start]))))
                    run_start = None
    return glitches


def measure_settling(w: Waveform, node: str, bands: VoltageBands,
                     stim: Optional[Stimulus] = None,
                     min_hold: float = 10e-9) -> float:
    """Seconds from the last stimulus event to the final entry into the
    settled band.  Raises NotSettled when the trailing stable run is shorter
    than ``min_hold``."""
    if node in w.port_nodes:
        node = w.port_nodes[node]
    series = w.probes[node]
    final = bands.region(float(series[-1]))
    entry = len(series) - 1
    while entry > 0 and bands.region(float(series[entry - 1])) == final:
        entry -= 1
    hold = float(w.times[-1] - w.times[entry])
    if hold < min_hold:
        raise NotSettled(float(w.times[-1]))
    last_event = 0.0
    if stim is not None:
        past = [t for t in stim.event_times() if t <= w.times[-1]]
        if past:
            last_event = max(past)
    return max(0.0, float(w.times[entry]) - last_event)


@dataclass(frozen=True)
class ReferenceConstant:
    """A figure quoted from the reference FPGA implementation report."""

    key: str
    value: object
    unit: str
    source: str


# Figures reported for the reference FPGA realization (Cyclone IV EP4CE6E22)
# of the ternary display decoder and its binary BCD-to-seven-segment
# baseline.  Quoted, never recomputed; the power model behind them is the
# vendor's estimator.
REFERENCE_CONSTANTS = (
    ReferenceConstant("ternary_io_power_mw", 2.0, "mW",
                      "Table V, thermal power: I/O"),
    ReferenceConstant("ternary_static_power_mw", 60.0, "mW",
                      "Table V, thermal power: static"),
    ReferenceConstant("ternary_total_power_mw", 62.0, "mW",
                      "Table V, thermal power: total FPGA"),
    ReferenceConstant("baseline_io_power_mw", 14.0, "mW",
                      "Sec. VI-C, baseline I/O power"),
    ReferenceConstant("baseline_static_power_mw", 60.0, "mW",
                      "Sec. VI-C, equivalent static power"),
    ReferenceConstant("ternary_luts", 154, "LUTs",
                      "Sec. VI-C, device utilization"),
    ReferenceConstant("ternary_ffs", 154, "FFs",
                      "Sec. VI-C, device utilization"),
    ReferenceConstant("ternary_registers", 11, "registers",
                      "Sec. VI-C, device utilization"),
    ReferenceConstant("ternary_pins", 13, "pins",
                      "Sec. VI-C, device utilization"),
    ReferenceConstant("baseline_luts", 26, "LUTs",
                      "Sec. VI-C, device utilization"),
    ReferenceConstant("baseline_ffs", 26, "FFs",
                      "Sec. VI-C, device utilization"),
    ReferenceConstant("baseline_registers", 12, "registers",
                      "Sec. VI-C, device utilization"),
    ReferenceConstant("baseline_pins", 17, "pins",
                      "Sec. VI-C, device utilization"),
    ReferenceConstant("ternary_fmax_mhz", 293.8, "MHz",
                      "Sec. VI-C, timing report"),
    ReferenceConstant("baseline_fmax_mhz", 577.7, "MHz",
                      "Sec. VI-C, timing report"),
    ReferenceConstant("io_power_ratio_reported", "approximately 6 times", "",
                      "Sec. VI-C, I/O power reduction"),
    ReferenceConstant("total_power_reduction_pct", 18.75, "%",
                      "Sec. VI-C, total power reduction"),
    ReferenceConstant("speed_ratio", 1.98, "x",
                      "Sec. VI-C, baseline/ternary fmax ratio"),
    ReferenceConstant("estimator", "PowerPlay Early Power Estimator", "",
                      "Table V footnote"),
)

_FMAX_NOTE = ("the reference report's timing discussion is garbled; "
              "293.8 MHz is read as the ternary design and 577.7 MHz as the "
              "binary baseline, consistent with the stated 1.98x ratio")


@dataclass
class ResourceReport:
    """Counts measured from a circuit alongside quoted reference figures."""

    measured: dict
    reference: tuple = REFERENCE_CONSTANTS
    derived: dict = field(default_factory=dict)
    notes: tuple = (_FMAX_NOTE,)

    def constant(self, key: str) -> ReferenceConstant:
        for c in self.reference:
            if c.key == key:
                return c
        raise KeyError(key)

    def to_text(self) -> str:
        lines = ["Resource / power comparison", "",
                 "Measured from netlist:"]
        for k, v in self.measured.items():
            lines.append(f"  {k:<24} {v}")
        lines.append("")
        lines.append("Reported for the reference FPGA implementation:")
        for c in self.reference:
            val = f"{c.value} {c.unit}".strip()
            lines.append(f"  {c.key:<28} {val:<32} [{c.source}]")
        lines.append("")
        lines.append("Derived ratios:")
        for k, v in self.derived.items():
            lines.append(f"  {k:<28} {v}")
        lines += ["", "Notes:"] + [f"  - {n}" for n in self.notes]
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps({
            "measured": self.measured,
            "reference": [asdict(c) for c in self.reference],
            "derived": self.derived,
            "notes": list(self.notes),
        }, indent=2)


def resource_report(ternary: Circuit, baseline_kind: str = "BCD") -> ResourceReport:
    """Compare measured circuit resources against the quoted baseline figures.

    The baseline is the conventional binary BCD-to-seven-segment decoder;
    it exists in this report only through its published figures.
    """
    if baseline_kind.upper() != "BCD":
        raise KeyError(f"unknown baseline {baseline_kind!r}")
    pins_in = len(ternary.input_ports())
    if any(p.name == "vdd" for p in ternary.ports):
        pins_in -= 1  # supply pin is not a signal pin
    pins_out = len(ternary.output_ports())
    measured = {
        "pins_in_ternary": pins_in,
        "pins_in_encoded_lines": 2 * pins_in,
        "pins_out": pins_out,
        "memristor_count": len(ternary.memristors()),
        "mosfet_count": len(ternary.mosfets()),
        "resistor_count": sum(1 for d in ternary.devices
                              if type(d).__name__ == "Resistor"),
        "gate_count": sum(ternary.cells.values()),
        "cells": dict(sorted(ternary.cells.items())),
    }
    io_ratio = 14.0 / 2.0
    derived = {
        "io_power_ratio_measured": io_ratio,
        "io_power_ratio_note": ("x7 measured I/O-pin-power model vs the "
                                "reported 'approximately 6 times'"),
    }
    return ResourceReport(measured=measured, derived=derived)


def seven_segment_render(segments: Mapping, polarity: str = "common_anode"):
    """Render segment drive bits as a 3x5 ASCII glyph.

    ``segments`` maps 'a'..'g' to the driven bit.  Common-anode polarity is
    active-low: a 0 drive lights the segment.  Returns (text, digit) where
    digit is the decoded numeral 0-8 or None when the pattern matches none.
    """
    if polarity != "common_anode":
        raise ValueError(f"unsupported polarity {polarity!r}")
    lit = {s: segments[s] == 0 for s in SEGMENTS}
    bar, pipe = "_", "|"
    rows = [
        " {} ".format(bar if lit["a"] else " "),
        "{} {}".format(pipe if lit["f"] else " ", pipe if lit["b"] else " "),
        " {} ".format(bar if lit["g"] else " "),
        "{} {}".format(pipe if lit["e"] else " ", pipe if lit["c"] else " "),
        " {} ".format(bar if lit["d"] else " "),
    ]
    text = "\n".join(rows)
    lit_set = "".join(s for s in SEGMENTS if lit[s])
    digit = next((d for d, segs in DIGIT_SEGMENTS.items() if segs == lit_set),
                 None)
    return text, digit


def segments_from_levels(levels: Mapping) -> dict:
    """OR-reduce two-bit display outputs down to one drive bit per segment."""
    return {s: or_reduce_segment(encode_2bit(levels[f"Y{s}"]))
            for s in SEGMENTS}
