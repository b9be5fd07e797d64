from fractions import Fraction

import pytest
from hypothesis import given, settings

from qmpack.benchmarks import load_benchmark, toffoli_chain
from qmpack.circuit import Angle, circuit
from qmpack.qasm import Diagnostic, QasmError, SourceProgram, emit_qasm, parse_qasm

from strategies import circuits

HEAD = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def errors_of(text):
    with pytest.raises(QasmError) as info:
        parse_qasm(text)
    return info.value.diagnostics


def test_adder_counts():
    c = load_benchmark("adder")
    assert (c.n_qubits, c.cx_count) == (4, 10)


def test_empty_program():
    c = parse_qasm("OPENQASM 2.0; qreg q[1];")
    assert c.n_qubits == 1 and c.gates == ()


def test_unsupported_gate_position():
    diags = errors_of(HEAD + "qreg q[2];\nh q[0];\ncz q[0],q[1];\n")
    assert len(diags) == 1
    d = diags[0]
    assert "unsupported gate" in d.message and d.line == 5 and d.column == 1 and d.severity == "error"


@pytest.mark.parametrize("body, needle", [
    ("qreg q[2];\ncx q[0],r[1];\n", "undeclared"),
    ("qreg q[2];\nx q[2];\n", "out of range"),
    ("qreg q[2];\nx q[0]\nx q[1];\n", "expected"),
    ("qreg q[1];\ncreg c[1];\nmeasure q[0] -> d[0];\n", "undeclared"),
])
def test_rejections(body, needle):
    diags = errors_of(HEAD + body)
    assert any(needle in d.message for d in diags), [str(d) for d in diags]


def test_several_errors_collected_and_no_partial_result():
    diags = errors_of(HEAD + "qreg q[2];\nfoo q[0];\nx q[9];\nh q[1];\n")
    assert [d.line for d in diags] == [4, 5]


def test_missing_header():
    assert "OPENQASM" in errors_of("qreg q[1];")[0].message


def test_file_include_rejected():
    assert "include" in errors_of('OPENQASM 2.0;\ninclude "other.inc";\nqreg q[1];')[0].message


def test_diagnostic_format_and_invariants():
    assert str(Diagnostic("error", "boom", 3, 7, "a.qasm")) == "a.qasm:3:7: error: boom"
    with pytest.raises(ValueError):
        Diagnostic("error", "x", 0, 1)
    with pytest.raises(ValueError):
        SourceProgram("")


def test_swap_and_ccx_decomposition_counts():
    c = parse_qasm(HEAD + "qreg q[3];\nswap q[0],q[1];\nswap q[1],q[2];\nccx q[0],q[1],q[2];\n")
    assert c.cx_count == 3 * 2 + 6


def test_register_flattening_and_broadcast():
    c = parse_qasm(HEAD + "qreg a[2];\nqreg b[2];\ncreg c[2];\nh a;\ncx a[1],b[0];\nmeasure b -> c;\n")
    assert c.n_qubits == 4
    assert [(g.name, g.qubits) for g in c.gates[:3]] == [("h", (0,)), ("h", (1,)), ("cx", (1, 2))]
    assert [(g.qubits[0], g.clbit) for g in c.gates[3:]] == [(2, 0), (3, 1)]


def test_angles_exact_multiples_of_pi():
    c = parse_qasm(HEAD + "qreg q[1];\nu3(pi/2, -pi, 3*pi/4) q[0];\nrz(0.25) q[0];\n")
    assert c.gates[0].params == (Angle.of_pi(Fraction(1, 2)), Angle.of_pi(-1), Angle.of_pi(Fraction(3, 4)))
    assert c.gates[1].params[0].pi_multiple is None and c.gates[1].params[0].value == 0.25


def test_macro_expansion():
    src = HEAD + "gate bell a,b { h a; cx a,b; }\ngate r(t) a { rz(t/2) a; }\nqreg q[2];\nbell q[1],q[0];\nr(pi) q[0];\n"
    c = parse_qasm(src)
    assert [(g.name, g.qubits) for g in c.gates] == [("h", (1,)), ("cx", (1, 0)), ("rz", (0,))]
    assert c.gates[2].params[0] == Angle.of_pi(Fraction(1, 2))


def test_emit_empty_circuit():
    text = emit_qasm(circuit(1, [])).text
    assert text.startswith("OPENQASM 2.0;") and text.rstrip().endswith("qreg q[1];")


def test_emit_toffoli_chain_reparses():
    c = toffoli_chain()
    assert parse_qasm(emit_qasm(c)).cx_count == 10


def test_determinism():
    text = emit_qasm(load_benchmark("error_correctiond3")).text
    assert parse_qasm(text) == parse_qasm(text)


@settings(max_examples=200, deadline=None)
@given(circuits())
def test_round_trip(c):
    back = parse_qasm(emit_qasm(c))
    assert back == c
    assert emit_qasm(back).text == emit_qasm(c).text
