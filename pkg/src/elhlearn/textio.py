"""Line-oriented text format for TBoxes, ABoxes and queries.

Grammar (UTF-8, one statement per line, ``#`` starts a comment)::

    tbox-line   ::= 'CI:' concept '[=' concept
                  | 'CI:' concept '==' concept        (expands to both CIs)
                  | 'RI:' NAME '[=' NAME
    abox-line   ::= 'A:' NAME '(' NAME ')'
                  | 'A:' NAME '(' NAME ',' NAME ')'
                  | 'IND:' NAME                       (declare a bare individual)
    query-line  ::= 'Q: AQ' NAME '(' NAME [',' NAME] ')'
                  | 'Q: IQ' NAME '(' NAME ',' NAME ')'
                  | 'Q: IQ' NAME ':' concept
                  | 'Q: CQ' [inds] ';' 'exists' [vars] ';' atom {',' atom}

    concept     ::= unit {'and' unit}
    unit        ::= 'top' | NAME | 'some' NAME '.' unit | '(' concept ')'

``some`` binds tighter than ``and``: ``some r. A and B`` is the conjunction
of ``some r. A`` with ``B``; a conjunctive filler needs parentheses.  In a
CQ line the terms listed after ``exists`` are variables, all other terms are
individuals.
"""

from __future__ import annotations

import re

from .syntax import (
    ABox,
    Atom,
    AtomicQuery,
    CI,
    Concept,
    ConceptAtom,
    ConceptQuery,
    ConjunctiveQuery,
    Exists,
    Query,
    RI,
    RoleAtom,
    RoleQuery,
    TBox,
    TOP,
    Term,
    Top,
    And,
    Var,
    check_name,
    conj,
    terminology,
)
from .syntax import ElhError


class ParseError(ElhError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, col {col}: {message}" if line else message)
        self.line = line
        self.col = col


_TOKEN = re.compile(r"\s*(\[=|==|[A-Za-z][A-Za-z0-9_]*|[().,;:])")


class _Tokens:
    def __init__(self, text: str, line: int):
        self.line = line
        self.items: list[tuple[str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                if text[pos:].strip():
                    raise ParseError(f"unexpected character {text[pos]!r}", line, pos + 1)
                break
            self.items.append((m.group(1), m.start(1) + 1))
            pos = m.end()
        self.i = 0

    def peek(self) -> str | None:
        return self.items[self.i][0] if self.i < len(self.items) else None

    def next(self) -> str:
        if self.i >= len(self.items):
            raise ParseError("unexpected end of line", self.line, 0)
        tok, _ = self.items[self.i]
        self.i += 1
        return tok

    def expect(self, want: str) -> str:
        tok = self.peek()
        if tok != want:
            col = self.items[self.i][1] if self.i < len(self.items) else 0
            raise ParseError(f"expected {want!r}, found {tok!r}", self.line, col)
        return self.next()

    def name(self) -> str:
        tok = self.next()
        if not re.match(r"^[A-Za-z][A-Za-z0-9_]*$", tok):
            raise ParseError(f"expected a name, found {tok!r}", self.line, 0)
        return tok

    def done(self) -> None:
        if self.i < len(self.items):
            tok, col = self.items[self.i]
            raise ParseError(f"trailing input {tok!r}", self.line, col)


def _parse_unit(ts: _Tokens) -> Concept:
    tok = ts.peek()
    if tok == "top":
        ts.next()
        return TOP
    if tok == "some":
        ts.next()
        role = ts.name()
        ts.expect(".")
        return Exists(role, _parse_unit(ts))
    if tok == "(":
        ts.next()
        inner = _parse_concept(ts)
        ts.expect(")")
        return inner
    if tok is None:
        raise ParseError("expected a concept", ts.line, 0)
    return Atom(ts.name())


def _parse_concept(ts: _Tokens) -> Concept:
    parts = [_parse_unit(ts)]
    while ts.peek() == "and":
        ts.next()
        parts.append(_parse_unit(ts))
    return conj(*parts)


def parse_concept(text: str, line: int = 0) -> Concept:
    ts = _Tokens(text, line)
    c = _parse_concept(ts)
    ts.done()
    return c


def serialize_concept(c: Concept) -> str:
    if isinstance(c, Top):
        return "top"
    if isinstance(c, Atom):
        return c.name
    if isinstance(c, Exists):
        filler = serialize_concept(c.filler)
        if isinstance(c.filler, And):
            return f"some {c.role}. ({filler})"
        return f"some {c.role}. {filler}"
    if isinstance(c, And):
        return " and ".join(
            f"({serialize_concept(a)})" if isinstance(a, And) else serialize_concept(a)
            for a in c.args
        )
    raise TypeError(f"not a concept: {c!r}")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_tbox(text: str, auto_merge: bool = True, allow_equiv: bool = True) -> TBox:
    cis: list[CI] = []
    ris: list[RI] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip(raw)
        if not body:
            continue
        if body.startswith("CI:"):
            ts = _Tokens(body[3:], lineno)
            lhs = _parse_concept(ts)
            op = ts.next()
            if op == "==":
                if not allow_equiv:
                    raise ParseError("equivalence lines disabled", lineno, 0)
                rhs = _parse_concept(ts)
                ts.done()
                cis.append(CI(lhs, rhs))
                cis.append(CI(rhs, lhs))
                continue
            if op != "[=":
                raise ParseError(f"expected '[=' or '==', found {op!r}", lineno, 0)
            rhs = _parse_concept(ts)
            ts.done()
            cis.append(CI(lhs, rhs))
        elif body.startswith("RI:"):
            ts = _Tokens(body[3:], lineno)
            lhs = ts.name()
            ts.expect("[=")
            rhs = ts.name()
            ts.done()
            ris.append(RI(lhs, rhs))
        else:
            raise ParseError(f"unknown statement {body.split(':')[0]!r}", lineno, 1)
    return terminology(cis, ris, auto_merge=auto_merge)


def serialize_tbox(t: TBox) -> str:
    from .syntax import canonical

    lines = [
        f"CI: {serialize_concept(ci.lhs)} [= {serialize_concept(ci.rhs)}"
        for ci in sorted(t.cis, key=lambda ci: (canonical(ci.lhs), canonical(ci.rhs)))
    ]
    lines += [f"RI: {ri.lhs} [= {ri.rhs}" for ri in sorted(t.ris, key=lambda ri: (ri.lhs, ri.rhs))]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_abox(text: str) -> ABox:
    concepts: set[tuple[str, str]] = set()
    roles: set[tuple[str, str, str]] = set()
    declared: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip(raw)
        if not body:
            continue
        if body.startswith("IND:"):
            declared.add(check_name(body[4:].strip()))
            continue
        if not body.startswith("A:"):
            raise ParseError(f"unknown statement {body.split(':')[0]!r}", lineno, 1)
        ts = _Tokens(body[2:], lineno)
        pred = ts.name()
        ts.expect("(")
        first = ts.name()
        if ts.peek() == ",":
            ts.next()
            second = ts.name()
            ts.expect(")")
            ts.done()
            roles.add((pred, first, second))
        else:
            ts.expect(")")
            ts.done()
            concepts.add((pred, first))
    return ABox(frozenset(concepts), frozenset(roles), frozenset(declared))


def serialize_abox(a: ABox) -> str:
    lines = [f"A: {n}({i})" for n, i in sorted(a.concept_assertions)]
    lines += [f"A: {r}({x},{y})" for r, x, y in sorted(a.role_assertions)]
    mentioned = {i for _, i in a.concept_assertions}
    for _, x, y in a.role_assertions:
        mentioned.update((x, y))
    lines += [f"IND: {i}" for i in sorted(a.declared - mentioned)]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_query(body: str, lineno: int = 0) -> Query:
    if not body.startswith("Q:"):
        raise ParseError("query line must start with 'Q:'", lineno, 1)
    rest = body[2:].strip()
    if rest.startswith("AQ"):
        ts = _Tokens(rest[2:], lineno)
        pred = ts.name()
        ts.expect("(")
        args = [ts.name()]
        if ts.peek() == ",":
            ts.next()
            args.append(ts.name())
        ts.expect(")")
        ts.done()
        return AtomicQuery(pred, tuple(args))
    if rest.startswith("IQ"):
        payload = rest[2:].strip()
        if ":" in payload:
            ind_part, concept_part = payload.split(":", 1)
            ind = check_name(ind_part.strip())
            return ConceptQuery(parse_concept(concept_part, lineno), ind)
        ts = _Tokens(payload, lineno)
        role = ts.name()
        ts.expect("(")
        subj = ts.name()
        ts.expect(",")
        obj = ts.name()
        ts.expect(")")
        ts.done()
        return RoleQuery(role, subj, obj)
    if rest.startswith("CQ"):
        pieces = rest[2:].split(";")
        if len(pieces) != 3:
            raise ParseError("CQ needs 'answers ; exists vars ; atoms'", lineno, 0)
        answer_inds = tuple(check_name(x.strip()) for x in pieces[0].split(",") if x.strip())
        exists_part = pieces[1].strip()
        if not exists_part.startswith("exists"):
            raise ParseError("second CQ section must start with 'exists'", lineno, 0)
        var_names = [x.strip() for x in exists_part[len("exists"):].split(",") if x.strip()]
        variables = {check_name(v) for v in var_names}
        return _parse_cq_atoms(pieces[2], answer_inds, variables, lineno)
    raise ParseError(f"unknown query language in {rest!r}", lineno, 0)


def _parse_cq_atoms(
    text: str, answer_inds: tuple[str, ...], variables: set[str], lineno: int
) -> ConjunctiveQuery:
    atoms: set = set()

    def term(tok: str) -> Term:
        return Var(tok) if tok in variables else tok

    for m in re.finditer(r"([A-Za-z]\w*)\(\s*([A-Za-z]\w*)\s*(?:,\s*([A-Za-z]\w*)\s*)?\)", text):
        pred, first, second = m.group(1), m.group(2), m.group(3)
        if second is None:
            atoms.add(ConceptAtom(pred, term(first)))
        else:
            atoms.add(RoleAtom(pred, term(first), term(second)))
    leftover = re.sub(r"([A-Za-z]\w*)\(\s*([A-Za-z]\w*)\s*(?:,\s*([A-Za-z]\w*)\s*)?\)", "", text)
    if leftover.replace(",", "").strip():
        raise ParseError(f"bad CQ atoms near {leftover.strip()!r}", lineno, 0)
    if not atoms:
        raise ParseError("CQ needs at least one atom", lineno, 0)
    return ConjunctiveQuery(answer_inds, frozenset(Var(v) for v in variables), frozenset(atoms))


def parse_queries(text: str) -> list[Query]:
    out: list[Query] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip(raw)
        if body:
            out.append(parse_query(body, lineno))
    return out


def serialize_query(q: Query) -> str:
    if isinstance(q, AtomicQuery):
        return f"Q: AQ {q.pred}({','.join(q.args)})"
    if isinstance(q, ConceptQuery):
        return f"Q: IQ {q.ind} : {serialize_concept(q.concept)}"
    if isinstance(q, RoleQuery):
        return f"Q: IQ {q.role}({q.subj},{q.obj})"
    if isinstance(q, ConjunctiveQuery):
        def tname(t: Term) -> str:
            return t.name if isinstance(t, Var) else t

        def akey(a) -> tuple:
            if isinstance(a, ConceptAtom):
                return (0, a.name, tname(a.term), "")
            return (1, a.role, tname(a.subj), tname(a.obj))

        rendered = []
        for a in sorted(q.atoms, key=akey):
            if isinstance(a, ConceptAtom):
                rendered.append(f"{a.name}({tname(a.term)})")
            else:
                rendered.append(f"{a.role}({tname(a.subj)},{tname(a.obj)})")
        inds = ", ".join(q.answer_inds)
        variables = ", ".join(sorted(v.name for v in q.exist_vars))
        return f"Q: CQ {inds} ; exists {variables} ; {', '.join(rendered)}"
    raise TypeError(f"not a query: {q!r}")
