"""Expression language for scalar fields, and the registry of builtin fields.

Grammar (see ``docs/grammar.ebnf``)::

    expr     = term { ("+" | "-") term }
    term     = unary { ("*" | "/") unary }
    unary    = "-" unary | power
    power    = atom [ "^" exponent ]
    exponent = [ "-" ] ( number | "(" expr ")" ) [ "^" exponent ]
    atom     = number | identifier | identifier "(" expr ")" | "(" expr ")"

Exponents must fold to constants.  Evaluation is generic: variables may be
bound to floats or to :class:`~equiaffine.jets.Jet` objects.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets
from .errors import ArgumentError, DomainError, ParseError, UnknownIdentifierError

FUNCTIONS = tuple(jets.ELEMENTARY)
CONSTANTS = {"pi": math.pi}


# AST

@dataclass(frozen=True)
class Const:
    value: float
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    index: int
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    arg: object
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object
    offset: int = field(default=0, compare=False)


# tokenizer

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", _byte(text, bad))
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte(text, char_index):
    return len(text[:char_index].encode("utf-8"))



class _Parser:
    def __init__(self, text, var_names):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.vars = {name: i for i, name in enumerate(var_names)}

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, expected, tok=None):
        kind, val, off = tok or self.peek()
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {what}", _byte(self.text, off), expected)

    def expect(self, op):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == op:
            return self.advance()
        self.error([op])

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.error(["+", "-", "*", "/", "^", "end of input"])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            _, op, off = self.advance()
            node = BinOp(op, node, self.term(), off)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, off = self.advance()
            node = BinOp(op, node, self.unary(), off)
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.advance()
            return Neg(self.unary(), tok[2])
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.advance()
            exp_node = self.exponent()
            return BinOp("^", base, Const(_fold(exp_node, self.text), exp_node.offset), tok[2])
        return base

    def exponent(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.advance()
            return Neg(self.exponent(), tok[2])
        if tok[0] == "num":
            self.advance()
            node = Const(float(tok[1]), tok[2])
        elif tok[0] == "op" and tok[1] == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
        else:
            self.error(["-", "number", "("])
        nxt = self.peek()
        if nxt[0] == "op" and nxt[1] == "^":
            self.advance()
            node = BinOp("^", node, self.exponent(), nxt[2])
        return node

    def atom(self):
        tok = self.peek()
        kind, val, off = tok
        if kind == "num":
            self.advance()
            return Const(float(val), off)
        if kind == "id":
            self.advance()
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if val not in jets.ELEMENTARY:
                    raise UnknownIdentifierError(val, _byte(self.text, off))
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg, off)
            if val in self.vars:
                return Var(self.vars[val], val, off)
            if val in CONSTANTS:
                return Const(CONSTANTS[val], off)
            raise UnknownIdentifierError(val, _byte(self.text, off))
        if kind == "op" and val == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.error(["number", "identifier", "(", "-"])


def infer_var_names(text):
    """Variable names of an expression given without --vars.

    Names of the form x1, x2, ... fill x1..xk up to the largest index seen;
    anything else is taken in sorted order.
    """
    known = set(FUNCTIONS) | set(CONSTANTS)
    found = sorted({t for t in (m.group("id") for m in _TOKEN.finditer(text) if m.group("id")) if t not in known})
    if found and all(re.fullmatch(r"x[1-9][0-9]*", t) for t in found):
        return xnames(max(int(t[1:]) for t in found))
    return tuple(found) or ("x1",)


def _fold(node, text):
    """Fold a constant exponent subtree to a float."""
    def walk(n):
        if isinstance(n, Const):
            return n.value
        if isinstance(n, Var):
            raise ParseError("exponent must be a constant", _byte(text, n.offset))
        if isinstance(n, Neg):
            return -walk(n.arg)
        if isinstance(n, Call):
            return float(jets.ELEMENTARY[n.fn](walk(n.arg)))
        a, b = walk(n.left), walk(n.right)
        return {"+": a + b, "-": a - b, "*": a * b, "/": a / b if b else math.inf, "^": a**b}[n.op]

    value = walk(node)
    if not math.isfinite(value):
        raise ParseError("exponent is not finite", _byte(text, node.offset))
    return float(value)


def parse(text, dim=None, var_names=None):
    """Parse ``text`` into an AST over the variables ``var_names``."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0, ["number", "identifier", "(", "-"])
    if var_names is None:
        var_names = [f"x{i + 1}" for i in range(dim or 0)]
    var_names = list(var_names)
    if dim is not None and len(var_names) != dim:
        raise ArgumentError(f"{len(var_names)} variable names given for dimension {dim}")
    return _Parser(text, var_names).parse()


# printing

def _num(v):
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def to_string(node):
    """Pretty-print an AST; the output re-parses to an equal tree."""
    return _fmt(node, 0)


def _fmt(node, level):
    if isinstance(node, Const):
        s, prec = _num(node.value), (5 if node.value >= 0 else 3)
        if node.value < 0:
            s = "-" + _num(-node.value)
    elif isinstance(node, Var):
        s, prec = node.name, 5
    elif isinstance(node, Call):
        s, prec = f"{node.fn}({_fmt(node.arg, 0)})", 5
    elif isinstance(node, Neg):
        s, prec = "-" + _fmt(node.arg, 3), 3
    elif node.op in "+-":
        s, prec = f"{_fmt(node.left, 1)} {node.op} {_fmt(node.right, 2)}", 1
    elif node.op in "*/":
        s, prec = f"{_fmt(node.left, 2)}{node.op}{_fmt(node.right, 3)}", 2
    else:
        e = node.right.value
        ex = _num(e) if e >= 0 else f"(-{_num(-e)})"
        s, prec = f"{_fmt(node.left, 5)}^{ex}", 4
    return f"({s})" if prec < level else s


def variables_used(node):
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Const):
        return set()
    if isinstance(node, (Neg, Call)):
        return variables_used(node.arg)
    return variables_used(node.left) | variables_used(node.right)


def remap(node, mapping, names):
    """Rename variables: index i becomes mapping[i] with name names[mapping[i]]."""
    if isinstance(node, Var):
        j = mapping[node.index]
        return Var(j, names[j], node.offset)
    if isinstance(node, Const):
        return node
    if isinstance(node, Neg):
        return Neg(remap(node.arg, mapping, names), node.offset)
    if isinstance(node, Call):
        return Call(node.fn, remap(node.arg, mapping, names), node.offset)
    return BinOp(node.op, remap(node.left, mapping, names), remap(node.right, mapping, names), node.offset)


def substitute(node, replacements):
    """Replace variable index i by the AST replacements[i]."""
    if isinstance(node, Var):
        return replacements[node.index]
    if isinstance(node, Const):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, replacements), node.offset)
    if isinstance(node, Call):
        return Call(node.fn, substitute(node.arg, replacements), node.offset)
    return BinOp(node.op, substitute(node.left, replacements), substitute(node.right, replacements), node.offset)


# evaluation

def compile_ast(node):
    """Return a function of a sequence of smooth scalars evaluating ``node``."""
    if isinstance(node, Const):
        v = node.value
        return lambda xs: v
    if isinstance(node, Var):
        i = node.index
        return lambda xs: xs[i]
    if isinstance(node, Neg):
        f = compile_ast(node.arg)
        return lambda xs: -f(xs)
    if isinstance(node, Call):
        f, fn, off = compile_ast(node.arg), jets.ELEMENTARY[node.fn], node.offset

        def call(xs):
            try:
                return fn(f(xs))
            except DomainError as exc:
                if exc.location is not None:
                    raise
                raise DomainError(str(exc), exc.value, off) from None

        return call
    f, g = compile_ast(node.left), compile_ast(node.right)
    op = node.op
    if op == "+":
        return lambda xs: f(xs) + g(xs)
    if op == "-":
        return lambda xs: f(xs) - g(xs)
    if op == "*":
        return lambda xs: f(xs) * g(xs)
    if op == "/":
        off = node.offset

        def div(xs):
            den = g(xs)
            if jets.constant_part(den) == 0:
                raise DomainError("division by zero", 0.0, off)
            return f(xs) / den

        return div
    p, off = node.right.value, node.offset
    if p.is_integer():
        n = int(p)
        return lambda xs: jets.pow_int(f(xs), n)

    def rpow(xs):
        try:
            return jets.pow_real(f(xs), p)
        except DomainError as exc:
            raise DomainError(str(exc), exc.value, off) from None

    return rpow


def evaluate(node, xs):
    return compile_ast(node)(xs)


# fields

EQUIAFFINE = "equiaffine: standard volume dx1^...^dxm"


@dataclass(frozen=True)
class FieldSpec:
    """A scalar field on R^m.

    ``fn`` maps a sequence of m smooth scalars to a smooth scalar.  ``source``
    is a printable closed form when one exists.
    """

    dim: int
    var_names: tuple
    fn: Optional[Callable] = field(default=None, compare=False, repr=False)
    source: Optional[str] = None
    tag: Optional[str] = None
    params: tuple = ()
    convention: str = EQUIAFFINE
    max_order: int = jets.MAX_ORDER
    ast: Optional[object] = field(default=None, compare=False, repr=False)

    def __call__(self, xs):
        return self.fn(xs)

    def jet(self, point, order):
        point = np.asarray(point, dtype=float).ravel()
        if point.size != self.dim:
            raise ArgumentError(f"point has {point.size} coordinates, field expects {self.dim}")
        if order > self.max_order:
            raise ArgumentError(f"field {self.label} supports jets up to order {self.max_order}")
        out = self.fn(jets.seed_all(point, order))
        if not isinstance(out, jets.Jet):
            out = jets.Jet.constant(self.dim, order, out)
        return out

    def value(self, point):
        point = np.asarray(point, dtype=float).ravel()
        return float(jets.constant_part(self.fn(list(point))))

    @property
    def label(self):
        if self.tag:
            return self.tag + (f"({', '.join(map(str, self.params))})" if self.params else "")
        return self.source or "field"


def from_expression(text, var_names, tag=None, params=()):
    var_names = tuple(var_names)
    node = parse(text, len(var_names), var_names)
    return FieldSpec(
        dim=len(var_names),
        var_names=var_names,
        fn=compile_ast(node),
        source=to_string(node),
        tag=tag,
        params=tuple(params),
        ast=node,
    )


def eval_field(fld, point, order):
    return fld.jet(point, order)


# builtin fields

def xnames(m):
    return tuple(f"x{i + 1}" for i in range(m))


def _parse_in(text, m, allowed, what):
    names = xnames(m)
    node = parse(str(text), m, names)
    extra = variables_used(node) - set(allowed)
    if extra:
        bad = ", ".join(names[i] for i in sorted(extra))
        raise ArgumentError(f"{what} may only use {', '.join(names[i] for i in allowed)}; found {bad}")
    return node


def _from_ast(node, names, tag, params):
    return FieldSpec(
        dim=len(names),
        var_names=tuple(names),
        fn=compile_ast(node),
        source=to_string(node),
        tag=tag,
        params=tuple(params),
        ast=node,
    )


def helicoid3():
    return from_expression("x*sin(u) + y*cos(u)", ("u", "x", "y"), tag="helicoid3")


GENHEL_A = (
    "sech(x1)*cos(x2*cosh(x1)^2)",
    "sech(x1)*sin(x2*cosh(x1)^2)",
    "tanh(x1)",
)


def genhel(Q="0"):
    names = xnames(5)
    q = _parse_in(Q, 5, (0, 1), "Q")
    text = " + ".join(f"x{3 + i}*{a}" for i, a in enumerate(GENHEL_A))
    node = BinOp("+", parse(text, 5, names), q)
    return _from_ast(node, names, "genhel", (to_string(q),))


def gn(a="x1^2", b="x1*x2", c="x2^2"):
    names = xnames(5)
    parts = [_parse_in(s, 5, (0, 1), "coefficient") for s in (a, b, c)]
    node = BinOp(
        "+",
        BinOp("+", BinOp("*", parts[0], Var(2, "x3")), BinOp("*", parts[1], Var(3, "x4"))),
        BinOp("*", parts[2], Var(4, "x5")),
    )
    return _from_ast(node, names, "gn", tuple(to_string(p) for p in parts))


def symdet_names(n):
    return tuple(f"x{i + 1}{j + 1}" for i in range(n) for j in range(i, n))


def symdet_matrix(xs, n):
    """Symmetric matrix (object array) from symdet coordinates."""
    r = 2.0**-0.5
    mat = np.empty((n, n), dtype=object)
    k = 0
    for i in range(n):
        for j in range(i, n):
            mat[i, j] = xs[k] if i == j else xs[k] * r
            mat[j, i] = mat[i, j]
            k += 1
    return mat


def symdet_coordinates(X):
    """Coordinates of a symmetric matrix: x^ii = X_ii, x^ij = sqrt(2) X_ij."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    return np.array([X[i, j] if i == j else math.sqrt(2.0) * X[i, j] for i in range(n) for j in range(i, n)])


def symdet_idempotent(n, p):
    """Coordinates of E_p = diag(1,...,1,-1,...,-1) with 2p entries -1."""
    if not 0 <= 2 * p <= n:
        raise ArgumentError(f"E{p} requires 0 <= 2p <= n (n = {n})")
    return symdet_coordinates(np.diag([1.0] * (n - 2 * p) + [-1.0] * (2 * p)))


def _leibniz_source(n):
    names = symdet_names(n)
    pos = {}
    k = 0
    for i in range(n):
        for j in range(i, n):
            pos[(i, j)] = pos[(j, i)] = names[k]
            k += 1
    terms = []
    for perm in itertools.permutations(range(n)):
        sgn = _perm_sign(perm)
        factors = [pos[(i, j)] for i, j in enumerate(perm)]
        moved = sum(1 for i, j in enumerate(perm) if i != j)
        coeff = sgn * 2.0 ** (-moved / 2)
        factors.sort()
        mono = "*".join(factors)
        terms.append((coeff, mono))
    # combine equal monomials
    combined = {}
    for c, mono in terms:
        combined[mono] = combined.get(mono, 0.0) + c
    pieces = []
    for mono, c in combined.items():
        if c == 0:
            continue
        s = f"{_num(abs(c))}*{mono}" if abs(c) != 1 else mono
        pieces.append(("- " if c < 0 else "+ ") + s)
    out = " ".join(pieces)
    return out[2:] if out.startswith("+ ") else "-" + out[2:]


def _perm_sign(perm):
    sgn, seen = 1, set()
    for i in range(len(perm)):
        if i in seen:
            continue
        j, length = i, 0
        while j not in seen:
            seen.add(j)
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sgn = -sgn
    return sgn


def symdet(n=2):
    from .forms import determinant

    n = int(n)
    if not 2 <= n <= 4:
        raise ArgumentError("symdet supports n in 2..4")
    names = symdet_names(n)

    def fn(xs):
        return determinant(symdet_matrix(xs, n))

    return FieldSpec(dim=len(names), var_names=names, fn=fn, source=_leibniz_source(n), tag="symdet", params=(n,))


def cheng_yau_det(n=2):
    n = int(n)
    det = symdet(n)
    c = (n + 1) / 2.0
    shift = (n / 2.0) * math.log(c)

    def fn(xs):
        return -c * (jets.log(det.fn(xs)) - shift)

    src = f"-{_num(c)}*(log({det.source}) - {_num(n / 2.0)}*log({_num(c)}))"
    return FieldSpec(dim=det.dim, var_names=det.var_names, fn=fn, source=src, tag="cheng_yau_det", params=(n,))


def graph(f, m=None):
    """F = x_{m+1} - f(x_1..x_m)."""
    probe = parse(str(f), jets.MAX_DIM, xnames(jets.MAX_DIM))
    used = variables_used(probe)
    m = int(m) if m is not None else (max(used) + 1 if used else 1)
    if used and max(used) >= m:
        raise ArgumentError(f"f uses x{max(used) + 1} but m = {m}")
    names = xnames(m + 1)
    fnode = parse(str(f), m + 1, names)
    node = BinOp("-", Var(m, names[m]), fnode)
    return _from_ast(node, names, "graph", (to_string(fnode),))


def paraboloid(m=2):
    m = int(m)
    f = "(" + " + ".join(f"x{i + 1}^2" for i in range(m)) + ")/2"
    fld = graph(f, m)
    return FieldSpec(**{**fld.__dict__, "tag": "paraboloid", "params": (m,)})


def sphere(m=3):
    m = int(m)
    text = "(" + " + ".join(f"x{i + 1}^2" for i in range(m)) + ")/2"
    return from_expression(text, xnames(m), tag="sphere", params=(m,))


def ruled(A, Q="0"):
    from .ruled import CentroaffineImmersion, build_ruled_field

    comps = [A] if isinstance(A, str) else list(A)
    if len(comps) == 1 and ";" in comps[0]:
        comps = comps[0].split(";")
    imm = CentroaffineImmersion.from_expressions(comps)
    return build_ruled_field(imm, Q).field


BUILTINS = {
    "helicoid3": helicoid3,
    "genhel": genhel,
    "gn": gn,
    "symdet": symdet,
    "graph": graph,
    "paraboloid": paraboloid,
    "cheng_yau_det": cheng_yau_det,
    "sphere": sphere,
    "ruled": ruled,
}


def builtin(tag, *params):
    try:
        factory = BUILTINS[tag]
    except KeyError:
        raise ArgumentError(f"unknown builtin {tag!r}; known: {', '.join(sorted(BUILTINS))}") from None
    try:
        return factory(*params)
    except TypeError as exc:
        raise ArgumentError(f"builtin {tag!r}: wrong number of parameters ({exc})") from None
