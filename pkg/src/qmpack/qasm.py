"""OpenQASM 2.0 frontend for the supported gate subset.

Only ``qelib1.inc`` may be included; it is built in and exposes the gates
in :data:`BUILTIN_GATES`.  ``swap`` and ``ccx`` are lowered to cx-based
sequences while parsing.  Gate macros defined in the source are expanded
in place.  Errors are reported as :class:`Diagnostic` records collected in
a :class:`QasmError`; a partially parsed circuit is never returned.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .circuit import Angle, CircuitIR, GateOp, PARAM_COUNT

BUILTIN_GATES = {
    "u1": (1, 1), "u2": (2, 1), "u3": (3, 1), "rz": (1, 1),
    "sx": (0, 1), "x": (0, 1), "h": (0, 1), "t": (0, 1), "tdg": (0, 1),
    "s": (0, 1), "sdg": (0, 1), "cx": (0, 2), "ccx": (0, 3), "swap": (0, 2),
    # OpenQASM primitives, accepted as aliases
    "U": (3, 1), "CX": (0, 2),
}
_ALIASES = {"U": "u3", "CX": "cx"}

# qelib1 ccx body; operands (a, b, c) = (control, control, target)
CCX_DECOMPOSITION = (
    ("h", 2), ("cx", 1, 2), ("tdg", 2), ("cx", 0, 2), ("t", 2), ("cx", 1, 2), ("tdg", 2),
    ("cx", 0, 2), ("t", 1), ("t", 2), ("h", 2), ("cx", 0, 1), ("t", 0), ("tdg", 1), ("cx", 0, 1),
)
SWAP_DECOMPOSITION = (("cx", 0, 1), ("cx", 1, 0), ("cx", 0, 1))


@dataclass(frozen=True)
class SourceProgram:
    text: str
    origin: str = "<inline>"

    def __post_init__(self):
        if not self.text:
            raise ValueError("empty source program")

    @classmethod
    def from_file(cls, path) -> "SourceProgram":
        path = Path(path)
        return cls(path.read_text(encoding="utf-8"), str(path))


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    line: int
    column: int
    origin: str = "<inline>"

    def __post_init__(self):
        if self.severity not in ("error", "warning"):
            raise ValueError(f"bad severity {self.severity!r}")
        if self.line < 1 or self.column < 1:
            raise ValueError("diagnostic positions are 1-based")

    def __str__(self) -> str:
        return f"{self.origin}:{self.line}:{self.column}: {self.severity}: {self.message}"


class QasmError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<real>(?:\d+\.\d*|\.\d+)(?:[eE][-+]?\d+)?|\d+[eE][-+]?\d+)
  | (?P<int>\d+)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<eqeq>==)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[;,\[\](){}+\-*/^])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


class _Stop(Exception):
    """Abort the current statement after a diagnostic was recorded."""


def tokenize(src: str, origin: str = "<inline>") -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise QasmError([Diagnostic("error", f"unexpected character {src[pos]!r}",
                                        line, pos - line_start + 1, origin)])
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ------------------------------------------------------ angle expressions
# Values are ("pi", c) for c*pi, ("rat", r) for exact rationals, ("float", x).

def _as_float(v) -> float:
    kind, x = v
    return float(x) * math.pi if kind == "pi" else float(x)


def _binop(op: str, a, b):
    ka, xa = a
    kb, xb = b
    if op in "+-":
        sign = 1 if op == "+" else -1
        if ka == kb and ka in ("pi", "rat"):
            return (ka, xa + sign * xb)
        if ka == "pi" and kb == "rat" and xb == 0:
            return a
        if kb == "pi" and ka == "rat" and xa == 0:
            return ("pi", sign * xb)
        return ("float", _as_float(a) + sign * _as_float(b))
    if op == "*":
        if "float" not in (ka, kb) and not (ka == kb == "pi"):
            kind = "pi" if "pi" in (ka, kb) else "rat"
            return (kind, xa * xb)
        return ("float", _as_float(a) * _as_float(b))
    if op == "/":
        if kb == "rat" and xb == 0 or kb == "pi" and xb == 0:
            raise ZeroDivisionError
        if ka in ("pi", "rat") and kb == "rat":
            return (ka, xa / xb)
        if ka == kb == "pi":
            return ("rat", xa / xb)
        return ("float", _as_float(a) / _as_float(b))
    if op == "^":
        if ka == kb == "rat" and xb.denominator == 1 and (xa != 0 or xb >= 0):
            return ("rat", xa ** int(xb))
        return ("float", _as_float(a) ** _as_float(b))
    raise ValueError(op)


_FUNCS = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
          "ln": math.log, "sqrt": math.sqrt}


def _to_angle(v) -> Angle:
    kind, x = v
    if kind == "pi":
        return Angle.of_pi(x)
    if kind == "rat" and x == 0:
        return Angle.of_pi(0)
    return Angle.real(_as_float(v))


# ----------------------------------------------------------------- parser

@dataclass
class _Macro:
    name: str
    params: list[str]
    args: list[str]
    body: list[tuple]  # (name, param_exprs, arg_names, token)


class _Parser:
    def __init__(self, src: SourceProgram):
        self.origin = src.origin
        self.toks = tokenize(src.text, src.origin)
        self.i = 0
        self.diags: list[Diagnostic] = []
        self.qregs: dict[str, tuple[int, int]] = {}
        self.cregs: dict[str, tuple[int, int]] = {}
        self.n_qubits = 0
        self.n_clbits = 0
        self.macros: dict[str, _Macro] = {}
        self.gates: list[GateOp] = []

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        self.diags.append(Diagnostic("error", msg, tok.line, tok.col, self.origin))
        raise _Stop

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str | None = None, kind: str | None = None) -> Token:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(t.text) if t.kind != "eof" else "end of file"
            self.error(f"expected {want}, found {got}")
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind != "string":
            self.advance()
            return True
        return False

    def recover(self):
        depth = 0
        while self.tok.kind != "eof":
            t = self.advance()
            if t.text == "{":
                depth += 1
            elif t.text == "}":
                depth -= 1
                if depth <= 0:
                    return
            elif t.text == ";" and depth == 0:
                return

    # -- grammar
    def parse(self) -> CircuitIR:
        try:
            self.header()
        except _Stop:
            raise QasmError(self.diags)
        while self.tok.kind != "eof":
            try:
                self.statement()
            except _Stop:
                self.recover()
        if self.diags:
            raise QasmError(self.diags)
        return CircuitIR(self.n_qubits, self.n_clbits, tuple(self.gates),
                         Path(self.origin).stem if self.origin != "<inline>" else "circuit")

    def header(self):
        t = self.tok
        if t.text != "OPENQASM":
            self.error("missing 'OPENQASM 2.0;' header")
        self.advance()
        v = self.tok
        if v.kind not in ("real", "int") or Fraction(v.text) != 2:
            self.error("only OpenQASM version 2.0 is supported", v)
        self.advance()
        self.expect(";")

    def statement(self):
        t = self.tok
        if t.kind != "id":
            self.error(f"unexpected {t.text!r}" if t.kind != "eof" else "unexpected end of file")
        kw = t.text
        if kw == "include":
            self.advance()
            f = self.expect(kind="string")
            if f.text.strip('"') != "qelib1.inc":
                self.diags.append(Diagnostic("error", f"file includes are not supported: {f.text}",
                                             f.line, f.col, self.origin))
            self.expect(";")
        elif kw in ("qreg", "creg"):
            self.declaration(kw)
        elif kw == "gate":
            self.gate_definition()
        elif kw in ("opaque", "reset", "if"):
            self.error(f"unsupported statement '{kw}'")
        elif kw == "measure":
            self.measure()
        elif kw == "barrier":
            self.advance()
            qubits = []
            for arg in self.arg_list():
                qubits.extend(arg)
            self.expect(";")
            seen = list(dict.fromkeys(qubits))
            self.gates.append(GateOp("barrier", tuple(seen)))
        else:
            self.gate_call()

    def declaration(self, kw: str):
        self.advance()
        name = self.expect(kind="id")
        self.expect("[")
        size_tok = self.expect(kind="int")
        self.expect("]")
        if self.tok.text != ";":
            self.expect(";")
        size = int(size_tok.text)
        if size < 1:
            self.error("register size must be positive", size_tok)
        if name.text in self.qregs or name.text in self.cregs:
            self.error(f"register '{name.text}' already declared", name)
        if kw == "qreg":
            self.qregs[name.text] = (self.n_qubits, size)
            self.n_qubits += size
        else:
            self.cregs[name.text] = (self.n_clbits, size)
            self.n_clbits += size
        self.expect(";")

    def argument(self, regs: dict, what: str) -> list[int]:
        name = self.expect(kind="id")
        if name.text not in regs:
            self.error(f"undeclared {what} register '{name.text}'", name)
        offset, size = regs[name.text]
        if self.accept("["):
            idx_tok = self.expect(kind="int")
            self.expect("]")
            idx = int(idx_tok.text)
            if idx >= size:
                self.error(f"index {idx} out of range for register '{name.text}' of size {size}", idx_tok)
            return [offset + idx]
        return list(range(offset, offset + size))

    def arg_list(self) -> list[list[int]]:
        args = [self.argument(self.qregs, "quantum")]
        while self.accept(","):
            args.append(self.argument(self.qregs, "quantum"))
        return args

    def measure(self):
        self.advance()
        q = self.argument(self.qregs, "quantum")
        self.expect("->")
        c_tok = self.tok
        c = self.argument(self.cregs, "classical")
        if len(q) != len(c):
            self.error("measure operands have different sizes", c_tok)
        self.expect(";")
        for qi, ci in zip(q, c):
            self.gates.append(GateOp("measure", (qi,), clbit=ci))

    def gate_definition(self):
        self.advance()
        name = self.expect(kind="id")
        params: list[str] = []
        if self.accept("("):
            if not self.accept(")"):
                params.append(self.expect(kind="id").text)
                while self.accept(","):
                    params.append(self.expect(kind="id").text)
                self.expect(")")
        args = [self.expect(kind="id").text]
        while self.accept(","):
            args.append(self.expect(kind="id").text)
        self.expect("{")
        try:
            body = self.gate_body(args)
        except _Stop:
            while self.tok.kind != "eof" and self.advance().text != "}":
                pass
            return
        if name.text in BUILTIN_GATES:
            return  # redefinition of a header gate: the built-in wins
        if name.text in self.macros:
            self.diags.append(Diagnostic("error", f"gate '{name.text}' already defined",
                                         name.line, name.col, self.origin))
            return
        self.macros[name.text] = _Macro(name.text, params, args, body)

    def gate_body(self, args: list[str]) -> list[tuple]:
        body = []
        while not self.accept("}"):
            t = self.tok
            if t.kind == "eof":
                self.error("unterminated gate body")
            gname = self.expect(kind="id")
            pexprs = []
            if gname.text != "barrier" and self.accept("("):
                if not self.accept(")"):
                    pexprs.append(self.expression_tokens())
                    while self.accept(","):
                        pexprs.append(self.expression_tokens())
                    self.expect(")")
            gargs = [self.expect(kind="id")]
            while self.accept(","):
                gargs.append(self.expect(kind="id"))
            for a in gargs:
                if a.text not in args:
                    self.error(f"unknown gate argument '{a.text}'", a)
            if gname.text != "barrier" and gname.text not in BUILTIN_GATES and gname.text not in self.macros:
                self.error(f"unsupported gate '{gname.text}'", gname)
            self.expect(";")
            body.append((gname.text, pexprs, [a.text for a in gargs], gname))
        return body

    def expression_tokens(self) -> list[Token]:
        """Collect the raw tokens of one parameter expression (evaluated at expansion)."""
        out, depth = [], 0
        while True:
            t = self.tok
            if t.kind == "eof":
                self.error("unterminated expression")
            if depth == 0 and t.text in (",", ")"):
                break
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
            out.append(self.advance())
        if not out:
            self.error("empty expression")
        return out

    def gate_call(self):
        name = self.advance()
        params = []
        if self.accept("("):
            if not self.accept(")"):
                params.append(self.expression({}))
                while self.accept(","):
                    params.append(self.expression({}))
                self.expect(")")
        args = self.arg_list()
        if self.tok.text != ";":
            self.expect(";")
        if name.text not in BUILTIN_GATES and name.text not in self.macros:
            self.error(f"unsupported gate '{name.text}'", name)
        n_params, n_args = self.signature(name.text)
        if len(params) != n_params:
            self.error(f"gate '{name.text}' takes {n_params} parameter(s), got {len(params)}", name)
        if len(args) != n_args:
            self.error(f"gate '{name.text}' takes {n_args} qubit argument(s), got {len(args)}", name)
        sizes = {len(a) for a in args if len(a) > 1}
        if len(sizes) > 1:
            self.error("register arguments of different sizes", name)
        width = sizes.pop() if sizes else 1
        for k in range(width):
            qubits = [a[k] if len(a) > 1 else a[0] for a in args]
            if len(set(qubits)) != len(qubits):
                self.error(f"gate '{name.text}' applied twice to the same qubit", name)
            self.emit_gate(name.text, params, qubits, name)
        self.expect(";")

    def signature(self, name: str) -> tuple[int, int]:
        if name in self.macros:
            m = self.macros[name]
            return len(m.params), len(m.args)
        return BUILTIN_GATES[name]

    def emit_gate(self, name: str, params: list, qubits: list[int], tok: Token, depth: int = 0):
        if depth > 64:
            self.error("gate macro expansion too deep", tok)
        if name in self.macros:
            m = self.macros[name]
            env = dict(zip(m.params, params))
            qmap = dict(zip(m.args, qubits))
            for gname, pexprs, gargs, gtok in m.body:
                if gname == "barrier":
                    self.gates.append(GateOp("barrier", tuple(dict.fromkeys(qmap[a] for a in gargs))))
                    continue
                sub = _Parser.__new__(_Parser)
                sub.__dict__.update(self.__dict__)
                values = []
                for expr in pexprs:
                    sub.toks = expr + [Token("eof", "", gtok.line, gtok.col)]
                    sub.i = 0
                    values.append(sub.expression(env))
                    if sub.tok.kind != "eof":
                        self.error(f"malformed expression near {sub.tok.text!r}", sub.tok)
                n_params, n_args = self.signature(gname)
                if len(values) != n_params or len(gargs) != n_args:
                    self.error(f"wrong arity in call to '{gname}' inside '{name}'", gtok)
                self.emit_gate(gname, values, [qmap[a] for a in gargs], gtok, depth + 1)
            return
        name = _ALIASES.get(name, name)
        if name == "swap":
            for g, a, b in SWAP_DECOMPOSITION:
                self.gates.append(GateOp(g, (qubits[a], qubits[b])))
        elif name == "ccx":
            for g, *ops in CCX_DECOMPOSITION:
                self.gates.append(GateOp(g, tuple(qubits[o] for o in ops)))
        else:
            angles = tuple(_to_angle(p) for p in params)
            assert len(angles) == PARAM_COUNT.get(name, 0)
            self.gates.append(GateOp(name, tuple(qubits), angles))

    # -- expressions (precedence climbing)
    _PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}

    def expression(self, env: dict, min_prec: int = 1):
        lhs = self.unary(env)
        while self.tok.text in self._PREC and self._PREC[self.tok.text] >= min_prec:
            op_tok = self.advance()
            prec = self._PREC[op_tok.text]
            rhs = self.expression(env, prec + (0 if op_tok.text == "^" else 1))
            try:
                lhs = _binop(op_tok.text, lhs, rhs)
            except (ZeroDivisionError, OverflowError):
                self.error("invalid arithmetic in expression", op_tok)
        return lhs

    def unary(self, env: dict):
        if self.accept("-"):
            k, x = self.unary(env)
            return (k, -x)
        if self.accept("+"):
            return self.unary(env)
        return self.atom(env)

    def atom(self, env: dict):
        t = self.tok
        if t.kind == "int" or t.kind == "real":
            self.advance()
            return ("rat", Fraction(t.text))
        if t.kind == "id":
            self.advance()
            if t.text == "pi":
                return ("pi", Fraction(1))
            if t.text in env:
                return env[t.text]
            if t.text in _FUNCS:
                self.expect("(")
                arg = self.expression(env)
                self.expect(")")
                try:
                    return ("float", _FUNCS[t.text](_as_float(arg)))
                except (ValueError, OverflowError):
                    self.error(f"math domain error in {t.text}()", t)
            self.error(f"unknown identifier '{t.text}' in expression", t)
        if self.accept("("):
            v = self.expression(env)
            self.expect(")")
            return v
        self.error(f"malformed expression near {t.text!r}" if t.kind != "eof" else "incomplete expression")


def parse_qasm(src: SourceProgram | str, origin: str | None = None) -> CircuitIR:
    """Parse OpenQASM 2.0 text into a :class:`CircuitIR`.

    Raises :class:`QasmError` carrying every diagnostic found.
    """
    if isinstance(src, str):
        src = SourceProgram(src, origin or "<inline>")
    return _Parser(src).parse()


def load_qasm(path) -> CircuitIR:
    return parse_qasm(SourceProgram.from_file(path))


def emit_qasm(c: CircuitIR) -> SourceProgram:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{c.n_qubits}];"]
    if c.n_clbits:
        lines.append(f"creg c[{c.n_clbits}];")
    for g in c.gates:
        if g.name == "measure":
            lines.append(f"measure q[{g.qubits[0]}] -> c[{g.clbit}];")
            continue
        head = g.name
        if g.params:
            head += "(" + ",".join(p.to_qasm() for p in g.params) + ")"
        lines.append(f"{head} " + ",".join(f"q[{q}]" for q in g.qubits) + ";")
    return SourceProgram("\n".join(lines) + "\n", c.name)
