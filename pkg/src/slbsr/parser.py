"""S-expression input format: parser and printer."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .formula import (
    EMP,
    FALSE,
    NIL,
    RESERVED,
    TRUE,
    And,
    Bot,
    Const,
    Emp,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Nil,
    Not,
    Or,
    PointsTo,
    Sep,
    Term,
    Top,
    Var,
    Wand,
)


class ParseError(ValueError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


class SortError(ParseError):
    pass


@dataclass(frozen=True)
class Problem:
    k: int
    constants: Tuple[Const, ...]
    assertion: Formula
    commands: Tuple[str, ...] = field(default=(), compare=False)


# ---------------------------------------------------------------------------
# S-expressions


@dataclass(frozen=True)
class Atom:
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class SList:
    items: Tuple[Union["SList", Atom], ...]
    line: int
    col: int


SExpr = Union[Atom, SList]


def read_sexprs(text: str) -> List[SExpr]:
    stack: List[Tuple[list, int, int]] = []
    top: List[SExpr] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == "(":
            stack.append(([], line, col))
            i += 1
            col += 1
            continue
        if ch == ")":
            if not stack:
                raise ParseError(line, col, "unbalanced ')'")
            items, l0, c0 = stack.pop()
            node = SList(tuple(items), l0, c0)
            (stack[-1][0] if stack else top).append(node)
            i += 1
            col += 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "();":
            j += 1
        atom = Atom(text[i:j], line, col)
        (stack[-1][0] if stack else top).append(atom)
        col += j - i
        i = j
    if stack:
        _, l0, c0 = stack[-1]
        raise ParseError(l0, c0, "unclosed '('")
    return top


# ---------------------------------------------------------------------------
# parsing

SORT = "U"
FORMULA_HEADS = {"emp", "pto", "sep", "wand", "and", "or", "not", "=>", "=", "distinct", "exists", "forall"}
RESERVED_WORDS = FORMULA_HEADS | {"true", "false", "nil", "tuple", "Tuple", SORT}


def _err(node: SExpr, message: str, cls=ParseError) -> ParseError:
    return cls(node.line, node.col, message)


def _head(node: SExpr) -> Optional[str]:
    if isinstance(node, SList) and node.items and isinstance(node.items[0], Atom):
        return node.items[0].text
    return None


class _Parser:
    def __init__(self) -> None:
        self.k: Optional[int] = None
        self.sort_declared = False
        self.constants: Dict[str, Const] = {}

    def identifier(self, node: SExpr) -> str:
        if not isinstance(node, Atom):
            raise _err(node, "expected an identifier")
        name = node.text
        if name.startswith(RESERVED):
            raise _err(node, f"identifiers may not start with {RESERVED!r}")
        if name in RESERVED_WORDS or not name or name[0].isdigit():
            raise _err(node, f"{name!r} is not a valid identifier")
        return name

    def sort(self, node: SExpr) -> None:
        if not (isinstance(node, Atom) and node.text == SORT):
            raise _err(node, f"expected sort {SORT}", SortError)

    def term(self, node: SExpr, scope: Dict[str, Var]) -> Term:
        if isinstance(node, SList):
            raise _err(node, "expected a location term", SortError)
        if node.text == "nil":
            return NIL
        if node.text in ("true", "false"):
            raise _err(node, f"{node.text} is a formula, not a location", SortError)
        if node.text in scope:
            return scope[node.text]
        if node.text in self.constants:
            return self.constants[node.text]
        raise _err(node, f"unknown symbol {node.text!r}")

    def data(self, node: SExpr, scope) -> Tuple[Term, ...]:
        if _head(node) == "tuple":
            items = node.items[1:]
            if not items:
                raise _err(node, "empty tuple")
            out = tuple(self.term(t, scope) for t in items)
        else:
            out = (self.term(node, scope),)
        if len(out) != self.k:
            raise _err(node, f"points-to needs {self.k} data values, got {len(out)}", SortError)
        return out

    def formula(self, node: SExpr, scope: Dict[str, Var]) -> Formula:
        if isinstance(node, Atom):
            if node.text == "true":
                return TRUE
            if node.text == "false":
                return FALSE
            if node.text in scope or node.text in self.constants or node.text == "nil":
                raise _err(node, f"location {node.text!r} used as a formula", SortError)
            raise _err(node, f"unknown symbol {node.text!r}")
        head = _head(node)
        if head is None:
            raise _err(node, "expected a formula")
        args = node.items[1:]

        def arity(lo: int, hi: Optional[int] = None) -> None:
            if len(args) < lo or (hi is not None and len(args) > hi):
                want = f"{lo}" if hi == lo else f"at least {lo}" if hi is None else f"{lo}..{hi}"
                raise _err(node, f"{head} expects {want} arguments")

        if head == "emp":
            arity(0, 0)
            return EMP
        if head == "pto":
            arity(2, 2)
            return PointsTo(self.term(args[0], scope), self.data(args[1], scope))
        if head in ("sep", "and", "or"):
            arity(2 if head == "sep" else 1)
            parts = [self.formula(a, scope) for a in args]
            cls = {"sep": Sep, "and": And, "or": Or}[head]
            out = parts[-1]
            for p in reversed(parts[:-1]):
                out = cls(p, out)
            return out
        if head == "wand":
            arity(2, 2)
            return Wand(self.formula(args[0], scope), self.formula(args[1], scope))
        if head == "not":
            arity(1, 1)
            return Not(self.formula(args[0], scope))
        if head == "=>":
            arity(2, 2)
            return Implies(self.formula(args[0], scope), self.formula(args[1], scope))
        if head in ("=", "distinct"):
            arity(2, 2)
            eq = Eq(self.term(args[0], scope), self.term(args[1], scope))
            return eq if head == "=" else Not(eq)
        if head in ("exists", "forall"):
            arity(2, 2)
            binders = args[0]
            if not isinstance(binders, SList) or not binders.items:
                raise _err(binders, "expected a non-empty binder list")
            names = []
            for b in binders.items:
                if not isinstance(b, SList) or len(b.items) != 2:
                    raise _err(b, "expected (name U)")
                names.append(self.identifier(b.items[0]))
                self.sort(b.items[1])
            inner = dict(scope)
            vs = []
            for name in names:
                inner[name] = Var(name)
                vs.append(inner[name])
            body = self.formula(args[1], inner)
            cls = Exists if head == "exists" else Forall
            for v in reversed(vs):
                body = cls(v, body)
            return body
        raise _err(node, f"unknown operator {head!r}")

    def problem(self, text: str) -> Problem:
        cmds = read_sexprs(text)
        assertions: List[Formula] = []
        commands: List[str] = []
        checks = 0
        for cmd in cmds:
            head = _head(cmd)
            if head is None:
                raise _err(cmd, "expected a command")
            args = cmd.items[1:]
            if head == "declare-sort":
                if len(args) != 2 or not all(isinstance(a, Atom) for a in args) \
                        or args[0].text != SORT or args[1].text != "0":
                    raise _err(cmd, f"expected (declare-sort {SORT} 0)")
                self.sort_declared = True
            elif head == "declare-heap":
                if self.k is not None:
                    raise _err(cmd, "duplicate declare-heap")
                if len(args) != 1 or not isinstance(args[0], SList) or len(args[0].items) != 2:
                    raise _err(cmd, "expected (declare-heap (U D))")
                loc, d = args[0].items
                self.sort(loc)
                if isinstance(d, Atom):
                    self.sort(d)
                    self.k = 1
                elif _head(d) == "Tuple" and len(d.items) > 1:
                    for s in d.items[1:]:
                        self.sort(s)
                    self.k = len(d.items) - 1
                else:
                    raise _err(d, "expected U or (Tuple U+)", SortError)
            elif head == "declare-const":
                if len(args) != 2:
                    raise _err(cmd, "expected (declare-const ID U)")
                name = self.identifier(args[0])
                self.sort(args[1])
                if name in self.constants:
                    raise _err(args[0], f"duplicate constant {name!r}")
                self.constants[name] = Const(name)
            elif head == "assert":
                if len(args) != 1:
                    raise _err(cmd, "assert expects one formula")
                if self.k is None:
                    raise _err(cmd, "assert before declare-heap")
                assertions.append(self.formula(args[0], {}))
            elif head == "check-sat":
                if args:
                    raise _err(cmd, "check-sat takes no arguments")
                checks += 1
            else:
                raise _err(cmd, f"unknown command {head!r}")
            commands.append(head)
        if self.k is None:
            raise ParseError(1, 1, "missing declare-heap")
        if checks != 1:
            raise ParseError(1, 1, f"expected exactly one check-sat, found {checks}")
        if not assertions:
            raise ParseError(1, 1, "no assertion")
        assertion = assertions[-1]
        for a in reversed(assertions[:-1]):
            assertion = And(a, assertion)
        return Problem(self.k, tuple(self.constants.values()), assertion, tuple(commands))


def parse(text: str) -> Problem:
    return _Parser().problem(text)


# ---------------------------------------------------------------------------
# printing


def print_term(t: Term) -> str:
    if isinstance(t, Nil):
        return "nil"
    return t.name


def print_formula(f: Formula) -> str:
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bot):
        return "false"
    if isinstance(f, Emp):
        return "(emp)"
    if isinstance(f, Eq):
        return f"(= {print_term(f.lhs)} {print_term(f.rhs)})"
    if isinstance(f, PointsTo):
        return f"(pto {print_term(f.loc)} (tuple {' '.join(print_term(t) for t in f.data)}))"
    if isinstance(f, Not):
        return f"(not {print_formula(f.arg)})"
    if isinstance(f, (Exists, Forall)):
        q = "exists" if isinstance(f, Exists) else "forall"
        return f"({q} (({f.var.name} {SORT})) {print_formula(f.body)})"
    names = {And: "and", Or: "or", Sep: "sep", Wand: "wand", Implies: "=>"}
    for cls, name in names.items():
        if isinstance(f, cls):
            return f"({name} {print_formula(f.left)} {print_formula(f.right)})"
    raise TypeError(f"cannot print {f!r}")


def print_problem(p: Problem) -> str:
    heap = SORT if p.k == 1 else f"(Tuple {' '.join([SORT] * p.k)})"
    lines = [f"(declare-sort {SORT} 0)", f"(declare-heap ({SORT} {heap}))"]
    lines += [f"(declare-const {c.name} {SORT})" for c in p.constants]
    lines += [f"(assert {print_formula(p.assertion)})", "(check-sat)"]
    return "\n".join(lines) + "\n"
