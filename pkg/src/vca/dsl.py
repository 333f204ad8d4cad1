"""Textual composition language: parser, pretty-printer and evaluator.

Surface syntax (grammar shipped in docs/grammar.ebnf):

    SFO - OAK                          difference of two named views
    compose(SFO, OAK, op="*")          any binary arithmetic operator
    compose(daily, monthly, reagg=max) hierarchy-aware reaggregation choice
    union(SFO, OAK)                    binary union
    union(explode(ALL, src))           n-ary union of a viewset
    extract(SFO, date = 2)             row subset as a standalone view
    explode(ALL, src)                  one view per src value
    lift(SFO, linear, [date], [])      fit per-group linear models
    render(lift(SFO, linear, [date], []))
    stat([SFO, OAK], avg)              n-ary statistic over a viewset
    SFO - 12                           numeric literals are 0-D constants

Unary calls bind tighter than the binary +/- operators, which associate left.
Names resolve at evaluation time, not at parse time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .compose import compose_pair, constant_view, explode, extract, viewset_stat, viewset_union
from .errors import UnboundView, VcaError, VcaSyntaxError
from .modelview import ModelView, compose_model_model, compose_view_model, lift, render_model
from .relalg import (
    And,
    Cmp,
    InSet,
    Not,
    Or,
    Predicate,
    TruePred,
    pred_text,
)
from .tables import Database
from .views import View, ViewSet, make_viewset

CALL_KEYWORDS = ("compose", "union", "extract", "explode", "lift", "stat", "render")


@dataclass
class Env:
    db: Database
    views: dict
    hierarchy: object | None = None


# --- AST -------------------------------------------------------------------------

@dataclass(frozen=True)
class ViewRef:
    name: str
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ConstNum:
    value: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class StatCompose:
    left: "VcaExpr"
    right: "VcaExpr"
    op: str = "-"
    override: bool = False
    reagg: str | None = None
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class UnionCompose:
    left: "VcaExpr"
    right: "VcaExpr"
    reagg: str | None = None
    override: bool = False
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Extract:
    input: "VcaExpr"
    pred: Predicate
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Explode:
    input: "VcaExpr"
    attrs: tuple
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Lift:
    input: "VcaExpr"
    kind: str
    ad: tuple
    ac: tuple
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ViewsetStat:
    input: "VcaExpr"
    fstar: str
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ViewsetUnion:
    input: "VcaExpr"
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ViewsetLit:
    items: tuple
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Render:
    input: "VcaExpr"
    pos: tuple = field(default=(0, 0), compare=False)


VcaExpr = (ViewRef | ConstNum | StatCompose | UnionCompose | Extract | Explode
           | Lift | ViewsetStat | ViewsetUnion | ViewsetLit | Render)


# --- tokenizer ----------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>\d+\.\d+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>'(?:\\.|[^'\\])*'|"(?:\\.|[^"\\])*")
  | (?P<cmp><=|>=|!=|=|<|>)
  | (?P<punct>[()\[\],+\-*/])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise VcaSyntaxError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        i = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


def _unquote(text: str) -> str:
    body = text[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


# --- parser -------------------------------------------------------------------------

class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, expected: str = ""):
        raise VcaSyntaxError(message, self.tok.line, self.tok.col, expected)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("punct", "cmp", "ident"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            self.error(f"found {self.tok.text or 'end of input'!r}", expected=repr(text))
        return self.advance()

    def parse(self) -> VcaExpr:
        e = self.expr()
        if self.tok.kind != "eof":
            self.error(f"trailing input {self.tok.text!r}")
        return e

    def expr(self) -> VcaExpr:
        left = self.primary()
        while self.tok.text in ("+", "-") and self.tok.kind == "punct":
            pos = (self.tok.line, self.tok.col)
            op = self.advance().text
            right = self.primary()
            left = StatCompose(left, right, op, pos=pos)
        return left

    def primary(self) -> VcaExpr:
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "number":
            self.advance()
            return ConstNum(self._number(t), pos=pos)
        if t.text == "-" and self.tokens[self.i + 1].kind == "number":
            self.advance()
            n = self.advance()
            value = self._number(n)
            return ConstNum(-value, pos=pos)
        if t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.text == "[":
            return self.viewset_literal()
        if t.kind == "ident":
            if t.text in CALL_KEYWORDS and self.tokens[self.i + 1].text == "(":
                return self.call()
            self.advance()
            return ViewRef(t.text, pos=pos)
        self.error(f"found {t.text or 'end of input'!r}", expected="an expression")

    @staticmethod
    def _number(t: Token):
        return float(t.text) if "." in t.text else int(t.text)

    def viewset_literal(self) -> ViewsetLit:
        pos = (self.tok.line, self.tok.col)
        self.expect("[")
        items = [self.expr()]
        while self.accept(","):
            items.append(self.expr())
        self.expect("]")
        return ViewsetLit(tuple(items), pos=pos)

    def call(self) -> VcaExpr:
        name_tok = self.advance()
        pos = (name_tok.line, name_tok.col)
        self.expect("(")
        name = name_tok.text

        if name == "compose":
            left = self.expr()
            self.expect(",")
            right = self.expr()
            op, reagg, override = "-", None, False
            while self.accept(","):
                key = self.advance()
                if key.text == "op":
                    self.expect("=")
                    op = _unquote(self.expect_kind("string").text)
                elif key.text == "reagg":
                    self.expect("=")
                    reagg = self.expect_kind("ident").text
                elif key.text == "override":
                    override = True
                else:
                    self.error(f"unknown keyword {key.text!r}",
                               expected="op=, reagg= or override")
            self.expect(")")
            return StatCompose(left, right, op, override, reagg, pos=pos)

        if name == "union":
            first = self.expr()
            second = None
            reagg, override = None, False
            while self.accept(","):
                if self.tok.text in ("reagg", "override") and \
                        self.tokens[self.i + 1].text in ("=", ",", ")"):
                    key = self.advance()
                    if key.text == "reagg":
                        self.expect("=")
                        reagg = self.expect_kind("ident").text
                    else:
                        override = True
                elif second is None:
                    second = self.expr()
                else:
                    self.error("too many union operands")
            self.expect(")")
            if second is None:
                if reagg is not None or override:
                    self.error("viewset union takes no keywords")
                return ViewsetUnion(first, pos=pos)
            return UnionCompose(first, second, reagg, override, pos=pos)

        if name == "extract":
            e = self.expr()
            pred: Predicate = TruePred()
            if self.accept(","):
                pred = self.pred()
            self.expect(")")
            return Extract(e, pred, pos=pos)

        if name == "explode":
            e = self.expr()
            attrs = []
            while self.accept(","):
                attrs.append(self.expect_kind("ident").text)
            self.expect(")")
            return Explode(e, tuple(attrs), pos=pos)

        if name == "lift":
            e = self.expr()
            self.expect(",")
            kind = self.expect_kind("ident").text
            self.expect(",")
            ad = self.name_list()
            self.expect(",")
            ac = self.name_list()
            self.expect(")")
            return Lift(e, kind, ad, ac, pos=pos)

        if name == "stat":
            e = self.expr()
            self.expect(",")
            fstar = self.expect_kind("ident").text
            self.expect(")")
            return ViewsetStat(e, fstar, pos=pos)

        if name == "render":
            e = self.expr()
            self.expect(")")
            return Render(e, pos=pos)

        self.error(f"unknown call {name!r}")

    def expect_kind(self, kind: str) -> Token:
        if self.tok.kind != kind:
            self.error(f"found {self.tok.text!r}", expected=kind)
        return self.advance()

    def name_list(self) -> tuple:
        self.expect("[")
        names = []
        if self.tok.text != "]":
            names.append(self.expect_kind("ident").text)
            while self.accept(","):
                names.append(self.expect_kind("ident").text)
        self.expect("]")
        return tuple(names)

    # --- predicates -------------------------------------------------------------

    def pred(self) -> Predicate:
        left = self.pred_and()
        parts = [left]
        while self.tok.text == "or":
            self.advance()
            parts.append(self.pred_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def pred_and(self) -> Predicate:
        parts = [self.pred_unary()]
        while self.tok.text == "and":
            self.advance()
            parts.append(self.pred_unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def pred_unary(self) -> Predicate:
        if self.tok.text == "not":
            self.advance()
            return Not(self.pred_unary())
        if self.tok.text == "true":
            self.advance()
            return TruePred()
        if self.tok.text == "(":
            self.advance()
            p = self.pred()
            self.expect(")")
            return p
        return self.pred_atom()

    def pred_atom(self) -> Predicate:
        attr = self.expect_kind("ident").text
        if self.tok.text == "in":
            self.advance()
            self.expect("(")
            values = [self.pred_literal()]
            while self.accept(","):
                values.append(self.pred_literal())
            self.expect(")")
            return InSet(attr, tuple(values))
        if self.tok.kind != "cmp":
            self.error(f"found {self.tok.text!r}", expected="a comparison operator or 'in'")
        op = self.advance().text
        return Cmp(op, attr, self.pred_literal())

    def pred_literal(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            return self._number(t)
        if t.text == "-" and self.tokens[self.i + 1].kind == "number":
            self.advance()
            return -self._number(self.advance())
        if t.kind == "string":
            self.advance()
            return _unquote(t.text)
        self.error(f"found {t.text!r}", expected="a literal")


def parse(text: str) -> VcaExpr:
    return Parser(text).parse()


# --- pretty printer -------------------------------------------------------------------

def _string_lit(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_expr(e: VcaExpr) -> str:
    if isinstance(e, ViewRef):
        return e.name
    if isinstance(e, ConstNum):
        return repr(e.value)
    if isinstance(e, StatCompose):
        plain = e.op in ("+", "-") and not e.override and e.reagg is None
        if plain:
            return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
        parts = [format_expr(e.left), format_expr(e.right), f"op={_string_lit(e.op)}"]
        if e.reagg:
            parts.append(f"reagg={e.reagg}")
        if e.override:
            parts.append("override")
        return f"compose({', '.join(parts)})"
    if isinstance(e, UnionCompose):
        parts = [format_expr(e.left), format_expr(e.right)]
        if e.reagg:
            parts.append(f"reagg={e.reagg}")
        if e.override:
            parts.append("override")
        return f"union({', '.join(parts)})"
    if isinstance(e, Extract):
        if isinstance(e.pred, TruePred):
            return f"extract({format_expr(e.input)})"
        return f"extract({format_expr(e.input)}, {pred_text(e.pred)})"
    if isinstance(e, Explode):
        tail = "".join(f", {a}" for a in e.attrs)
        return f"explode({format_expr(e.input)}{tail})"
    if isinstance(e, Lift):
        ad = ", ".join(e.ad)
        ac = ", ".join(e.ac)
        return f"lift({format_expr(e.input)}, {e.kind}, [{ad}], [{ac}])"
    if isinstance(e, ViewsetStat):
        return f"stat({format_expr(e.input)}, {e.fstar})"
    if isinstance(e, ViewsetUnion):
        return f"union({format_expr(e.input)})"
    if isinstance(e, ViewsetLit):
        return "[" + ", ".join(format_expr(i) for i in e.items) + "]"
    if isinstance(e, Render):
        return f"render({format_expr(e.input)})"
    raise VcaError(f"unknown expression node {e!r}")


# --- evaluation -------------------------------------------------------------------------

def _at(e: VcaExpr) -> str:
    line, col = e.pos
    return f" (at line {line}, column {col})" if line else ""


def eval_expr(e: VcaExpr, env: Env):
    """Evaluate a parsed expression to a View, ViewSet or ModelView."""
    try:
        return _eval(e, env)
    except VcaSyntaxError:
        raise
    except VcaError as err:
        if getattr(err, "_spanned", False):
            raise
        err._spanned = True
        err.args = (f"{err}{_at(e)}",)
        raise


def _eval(e: VcaExpr, env: Env):
    db = env.db
    h = env.hierarchy

    if isinstance(e, ViewRef):
        if e.name not in env.views:
            raise UnboundView(f"unknown view {e.name!r}{_at(e)}")
        return env.views[e.name]

    if isinstance(e, ConstNum):
        return constant_view(db, e.value)

    if isinstance(e, ViewsetLit):
        views = [eval_expr(i, env) for i in e.items]
        for v in views:
            if not isinstance(v, View):
                raise UnboundView(f"viewset literals hold views, got {type(v).__name__}{_at(e)}")
        return make_viewset(views, db)

    if isinstance(e, (StatCompose, UnionCompose)):
        left = eval_expr(e.left, env)
        right = eval_expr(e.right, env)
        how = "union" if isinstance(e, UnionCompose) else "stat"
        op = getattr(e, "op", "-")
        lm, rm = isinstance(left, ModelView), isinstance(right, ModelView)
        if lm and rm:
            return compose_model_model(db, left, right, op=op, how=how, override=e.override)
        if rm:
            return compose_view_model(db, left, right, op=op, side="left", how=how,
                                      override=e.override)
        if lm:
            return compose_view_model(db, right, left, op=op, side="right", how=how,
                                      override=e.override)
        return compose_pair(db, left, right, op=op, how=how, override=e.override,
                            h=h, reagg=e.reagg)

    if isinstance(e, Extract):
        v = eval_expr(e.input, env)
        return extract(db, v, e.pred)

    if isinstance(e, Explode):
        v = eval_expr(e.input, env)
        return explode(db, v, list(e.attrs))

    if isinstance(e, Lift):
        v = eval_expr(e.input, env)
        return lift(db, v, e.kind, ad=list(e.ad), ac=list(e.ac))

    if isinstance(e, ViewsetStat):
        vs = eval_expr(e.input, env)
        if isinstance(vs, View):
            vs = ViewSet([vs])
        return viewset_stat(db, vs, e.fstar)

    if isinstance(e, ViewsetUnion):
        vs = eval_expr(e.input, env)
        if isinstance(vs, View):
            vs = ViewSet([vs])
        return viewset_union(db, vs)

    if isinstance(e, Render):
        mv = eval_expr(e.input, env)
        if not isinstance(mv, ModelView):
            raise UnboundView(f"render() takes a lifted model view{_at(e)}")
        return render_model(db, mv)

    raise VcaError(f"unknown expression node {e!r}")


def evaluate_text(text: str, env: Env):
    return eval_expr(parse(text), env)
