import itertools
import json

import pytest

from ternsim.analysis import (DIGIT_SEGMENTS, GlitchEvent, SEGMENTS,
                              detect_glitches,
                              displayed_digit, expected_outputs, input_vectors,
                              measure_settling, resource_report,
                              segments_from_levels, seven_segment_render,
                              verify)
from ternsim.core import LEVELS, TernaryLevel, VoltageBands
from ternsim.engine import NotSettled, SolverConfig, Stimulus, run_transient
from ternsim.netlist import builtin_network, mutate_network

L0, L1, L2 = LEVELS
BANDS = VoltageBands.default(1.0)

# Display decoder truth table: outputs driven high per input pair, and the
# digit shown (active-low segments).  Independently transcribed.
DISPLAY_TABLE = {
    (2, 2): ("", 8),
    (2, 1): ("defg", 7),
    (2, 0): ("b", 6),
    (1, 2): ("be", 5),
    (1, 1): ("ade", 4),
    (1, 0): ("ef", 3),
    (0, 2): ("cf", 2),
    (0, 1): ("adefg", 1),
    (0, 0): ("g", 0),
}


class TestExpectedTables:
    def test_d13_unary(self):
        for x in LEVELS:
            out = expected_outputs("d13", {"X": x})
            assert out[f"Y{int(x)}"] == L2
            assert sum(v == L2 for v in out.values()) == 1

    def test_d29_one_hot(self):
        for a, b in itertools.product(LEVELS, repeat=2):
            out = expected_outputs("d29", {"A": a, "B": b})
            hot = [k for k, v in out.items() if v == L2]
            assert hot == [f"Y{3 * int(a) + int(b)}"]

    def test_display_matches_transcribed_table(self):
        for (a, b), (highs, _) in DISPLAY_TABLE.items():
            out = expected_outputs("display", {"A": TernaryLevel(a),
                                               "B": TernaryLevel(b)})
            got = {s for s in SEGMENTS if out[f"Y{s}"] == L2}
            assert got == set(highs), (a, b)

    def test_displayed_digits_descend(self):
        digits = [displayed_digit(vec) for vec in input_vectors("display")]
        assert digits == [8, 7, 6, 5, 4, 3, 2, 1, 0]


class TestVerify:
    @pytest.mark.parametrize("decoder,n", [("d13", 3), ("d29", 9),
                                           ("display", 9)])
    def test_digital_pass(self, decoder, n):
        report = verify("digital", decoder)
        assert report.passed
        assert len(report.vectors) == n

    def test_analog_d13_pass(self):
        report = verify("analog", "d13")
        assert report.passed
        assert all(v.settle_time is not None for v in report.vectors)

    def test_fault_fails_expected_vectors(self):
        net = mutate_network(builtin_network("d29"), "swap:Y7,Y5")
        report = verify("digital", "d29", network=net)
        assert not report.passed
        bad = [tuple(int(lv) for lv in v.inputs.values())
               for v in report.vectors if not v.ok]
        assert sorted(bad) == [(1, 2), (2, 1)]

    def test_report_serializes(self):
        report = verify("digital", "d13")
        doc = json.loads(report.to_json())
        assert doc["passed"] is True
        assert len(doc["vectors"]) == 3
        assert "3/3" in report.summary()
        assert report.to_text().count("[ok]") == 3

    def test_d29_report_carries_erratum_note(self):
        report = verify("digital", "d29")
        assert any("errata" in n for n in report.notes)


@pytest.fixture(scope="module")
def hazard_run(d29):
    stim = Stimulus({"A": ((0.0, L2), (50e-9, L1)),
                     "B": ((0.0, L1), (50e-9, L2))}, slew=1e-9)
    w = run_transient(d29, stim, SolverConfig(t_stop=100e-9))
    return w, stim


@pytest.fixture(scope="module")
def slewed_run(d13):
    stim = Stimulus({"X": ((0.0, L0), (50e-9, L2))}, slew=1e-9)
    w = run_transient(d13, stim, SolverConfig(t_stop=100e-9))
    return w, stim


@pytest.fixture(scope="module")
def display_report(display):
    return resource_report(display, baseline_kind="BCD")


class TestGlitches:
    def test_constant_run_has_no_glitches(self, d29):
        stim = Stimulus.hold({"A": L2, "B": L1})
        w = run_transient(d29, stim, SolverConfig(t_stop=20e-9))
        assert detect_glitches(w, stim, BANDS) == []

    def test_simultaneous_transition_glitches(self, hazard_run):
        w, stim = hazard_run
        glitches = detect_glitches(w, stim, BANDS)
        assert len(glitches) >= 1
        for g in glitches:
            assert g.t_end > g.t_start

    def test_glitches_inside_windows_only(self, hazard_run):
        w, stim = hazard_run
        for g in detect_glitches(w, stim, BANDS):
            # transition happens at 50 ns; events are settled well before 100
            assert 50e-9 <= g.t_start < 100e-9

    def test_settle_times_positive_after_transition(self, hazard_run):
        w, stim = hazard_run
        for k in range(9):
            t = measure_settling(w, f"Y{k}", BANDS, stim)
            assert 0.0 <= t <= 100e-9

    def test_glitch_event_validation(self):
        with pytest.raises(ValueError):
            GlitchEvent("n", 1e-9, 1e-9, "L0")


class TestSettling:
    # Frozen regression baselines for a 1 ns slewed L0->L2 step on the 1-3
    # decoder input; the engine is deterministic so these are exact.
    BASELINES = {"Y0": 3.0e-10, "Y1": 8.5e-10, "Y2": 7.0e-10}

    def test_settle_regression_baselines(self, slewed_run):
        w, stim = slewed_run
        for port, frozen in self.BASELINES.items():
            t = measure_settling(w, port, BANDS, stim)
            assert t == pytest.approx(frozen, rel=1e-9), port
            assert 0.0 < t <= 100e-9

    def test_dc_held_settles_immediately(self, d13):
        stim = Stimulus.hold({"X": L2})
        w = run_transient(d13, stim, SolverConfig(t_stop=50e-9))
        assert measure_settling(w, "Y2", BANDS, stim) == 0.0

    def test_not_settled_when_run_too_short(self, d13):
        stim = Stimulus({"X": ((0.0, L0), (3e-9, L2))}, slew=1e-9)
        w = run_transient(d13, stim, SolverConfig(t_stop=4e-9))
        with pytest.raises(NotSettled):
            measure_settling(w, "Y2", BANDS, stim)


class TestResourceReport:
    def test_display_pin_counts(self, display_report):
        assert display_report.measured["pins_in_ternary"] == 2
        assert display_report.measured["pins_in_encoded_lines"] == 4
        assert display_report.measured["pins_out"] == 7

    def test_device_counts_match_circuit(self, display_report, display):
        m = display_report.measured
        assert m["memristor_count"] == len(display.memristors())
        assert m["mosfet_count"] == len(display.mosfets())
        assert m["gate_count"] == sum(display.cells.values())

    def test_reference_constants_pinned(self, display_report):
        pins = {
            "ternary_io_power_mw": (2.0, "Table V, thermal power: I/O"),
            "ternary_static_power_mw": (60.0, "Table V, thermal power: static"),
            "ternary_total_power_mw": (62.0, "Table V, thermal power: total FPGA"),
            "baseline_io_power_mw": (14.0, "Sec. VI-C, baseline I/O power"),
            "ternary_luts": (154, "Sec. VI-C, device utilization"),
            "baseline_luts": (26, "Sec. VI-C, device utilization"),
            "ternary_ffs": (154, "Sec. VI-C, device utilization"),
            "baseline_ffs": (26, "Sec. VI-C, device utilization"),
            "ternary_registers": (11, "Sec. VI-C, device utilization"),
            "baseline_registers": (12, "Sec. VI-C, device utilization"),
            "ternary_pins": (13, "Sec. VI-C, device utilization"),
            "baseline_pins": (17, "Sec. VI-C, device utilization"),
            "ternary_fmax_mhz": (293.8, "Sec. VI-C, timing report"),
            "baseline_fmax_mhz": (577.7, "Sec. VI-C, timing report"),
            "total_power_reduction_pct": (18.75, "Sec. VI-C, total power reduction"),
            "speed_ratio": (1.98, "Sec. VI-C, baseline/ternary fmax ratio"),
            "estimator": ("PowerPlay Early Power Estimator", "Table V footnote"),
        }
        for key, (value, source) in pins.items():
            c = display_report.constant(key)
            assert c.value == value, key
            assert c.source == source, key

    def test_derived_io_ratio(self, display_report):
        assert display_report.derived["io_power_ratio_measured"] == 7.0
        assert "approximately 6 times" in display_report.constant(
            "io_power_ratio_reported").value

    def test_renders(self, display_report):
        text = display_report.to_text()
        assert "PowerPlay Early Power Estimator" in text
        assert "x7 measured I/O-pin-power model" in text
        doc = json.loads(display_report.to_json())
        assert doc["measured"]["pins_out"] == 7

    def test_unknown_baseline_rejected(self, display):
        with pytest.raises(KeyError):
            resource_report(display, baseline_kind="GRAY")


class TestSevenSegment:
    def test_all_dark_renders_eight(self):
        segments = {s: 0 for s in SEGMENTS}
        text, digit = seven_segment_render(segments)
        assert digit == 8
        assert text.splitlines()[0] == " _ "

    def test_only_g_high_renders_zero(self):
        segments = {s: (1 if s == "g" else 0) for s in SEGMENTS}
        _, digit = seven_segment_render(segments)
        assert digit == 0

    def test_a_d_e_high_renders_four(self):
        segments = {s: (1 if s in "ade" else 0) for s in SEGMENTS}
        _, digit = seven_segment_render(segments)
        assert digit == 4

    def test_unmatched_pattern_returns_none(self):
        segments = {s: 1 for s in SEGMENTS}
        text, digit = seven_segment_render(segments)
        assert digit is None
        assert set(text) <= {" ", "\n"}

    def test_full_display_digit_row(self):
        for (a, b), (_, digit) in DISPLAY_TABLE.items():
            levels = expected_outputs("display", {"A": TernaryLevel(a),
                                                  "B": TernaryLevel(b)})
            segments = segments_from_levels(levels)
            _, got = seven_segment_render(segments)
            assert got == digit, (a, b)

    def test_digit_patterns_unique(self):
        assert len(set(DIGIT_SEGMENTS.values())) == len(DIGIT_SEGMENTS)
