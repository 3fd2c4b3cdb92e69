"""Recursive-descent parser for the nGQL subset.

Supported for execution: ``GO``, ``FETCH PROP ON <tag>``, ``LOOKUP ON``,
``MATCH`` (linear patterns, comma-separated), and pipes of ``ORDER BY``,
``LIMIT``, ``SKIP``/``OFFSET``, ``GROUP BY ... YIELD``, ``YIELD``/``RETURN``,
``WHERE`` and piped ``GO``/``FETCH``. Mutations, DDL, ``GET SUBGRAPH``,
``FIND PATH``, ``WITH``, ``UNWIND``, ``OPTIONAL MATCH`` and ``SHOW`` are
parsed into :class:`Unsupported` so they still count as syntactically valid.
"""

from __future__ import annotations

from . import ast as A
from .lexer import EOF, IDENTIFIER, KEYWORD, NUMBER, PIPE, STRING, SYMBOL, VARIABLE, Token, tokenize
from ..errors import GqlSyntaxError

MAX_DEPTH = 64

# identifiers that may stand alone in GO / FETCH / LOOKUP expressions
_CONTEXT_WORDS = {"vertex", "edge", "vertices", "edges", "path"}


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.depth = 0
        self.match_scope = False

    # -- token helpers -------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        j = min(self.i + k, len(self.tokens) - 1)
        return self.tokens[j]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != EOF:
            self.i += 1
        return t

    def error(self, expected: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == EOF else repr(tok.text)
        raise GqlSyntaxError(f"expected {expected}, found {found}", tok.position, expected, found)

    def at_kw(self, *words: str) -> bool:
        return self.tok.kind == KEYWORD and self.tok.text in words

    def at_word(self, *words: str) -> bool:
        return self.tok.kind in (KEYWORD, IDENTIFIER) and self.tok.text.upper() in words

    def at_sym(self, *syms: str) -> bool:
        return self.tok.kind == SYMBOL and self.tok.text in syms

    def accept_kw(self, word: str) -> bool:
        if self.at_kw(word):
            self.advance()
            return True
        return False

    def accept_word(self, word: str) -> bool:
        if self.at_word(word):
            self.advance()
            return True
        return False

    def accept_sym(self, sym: str) -> bool:
        if self.at_sym(sym):
            self.advance()
            return True
        return False

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            self.error(word)
        return self.advance()

    def expect_word(self, word: str) -> Token:
        if not self.at_word(word):
            self.error(word)
        return self.advance()

    def expect_sym(self, sym: str) -> Token:
        if not self.at_sym(sym):
            self.error(repr(sym))
        return self.advance()

    def ident(self, what: str = "identifier") -> str:
        if self.tok.kind != IDENTIFIER:
            self.error(what)
        return self.advance().text

    def name(self, what: str = "name") -> str:
        """An identifier, or a keyword used in name position (after ``.`` etc.)."""
        if self.tok.kind in (IDENTIFIER, KEYWORD):
            t = self.advance()
            return t.text if t.kind == IDENTIFIER else t.text.lower()
        self.error(what)

    def integer(self, what: str = "integer") -> int:
        if self.tok.kind != NUMBER or not self.tok.text.isdigit():
            self.error(what)
        return int(self.advance().text)

    def enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise GqlSyntaxError("expression nested too deeply", self.tok.position)

    def leave(self):
        self.depth -= 1

    # -- entry -----------------------------------------------------------

    def statement(self):
        if self.tok.kind == EOF:
            self.error("a statement")
        head = self.sentence()
        stages = []
        while self.tok.kind == PIPE:
            if isinstance(head, A.Unsupported):
                self.error("end of statement")
            self.advance()
            stages.append(self.pipe_stage())
        self.accept_sym(";")
        if self.tok.kind != EOF:
            self.error("end of statement")
        if stages:
            return A.PipeStmt(head, tuple(stages))
        return head

    def sentence(self):
        t = self.tok
        if self.at_kw("GO"):
            return self.go_stmt()
        if self.at_kw("FETCH"):
            return self.fetch_stmt()
        if self.at_kw("LOOKUP"):
            return self.lookup_stmt()
        if self.at_kw("MATCH"):
            return self.match_stmt()
        if self.at_kw("OPTIONAL"):
            return self.unsupported(self.optional_match, "OPTIONAL MATCH")
        if self.at_kw("UNWIND"):
            return self.unsupported(self.unwind_stmt, "UNWIND")
        if self.at_kw("CREATE"):
            return self.unsupported(self.create_stmt)
        if self.at_kw("INSERT"):
            return self.unsupported(self.insert_stmt, "INSERT")
        if self.at_kw("UPDATE", "UPSERT"):
            return self.unsupported(self.update_stmt, t.text)
        if self.at_kw("DELETE"):
            return self.unsupported(self.delete_stmt, "DELETE")
        if self.at_kw("GET"):
            return self.unsupported(self.subgraph_stmt, "GET SUBGRAPH")
        if self.at_kw("FIND"):
            return self.unsupported(self.find_path_stmt, "FIND PATH")
        if self.at_kw("SHOW"):
            return self.unsupported(self.show_stmt, "SHOW")
        self.error("a statement keyword (GO, FETCH, LOOKUP, MATCH, ...)")

    def unsupported(self, rule, keyword: str | None = None):
        start = self.i
        result = rule()
        if isinstance(result, tuple):
            keyword, head, clauses = result
        else:
            head, clauses = keyword, ()
            keyword = keyword or result
        toks = tuple((t.kind, t.text) for t in self.tokens[start:self.i])
        return A.Unsupported(keyword, head, tuple(clauses), toks)

    # -- expressions -----------------------------------------------------

    def expr(self):
        self.enter()
        try:
            return self.or_expr()
        finally:
            self.leave()

    def or_expr(self):
        left = self.xor_expr()
        while self.at_kw("OR") or self.at_sym("||"):
            pos = self.advance().position
            left = A.Binary("OR", left, self.xor_expr(), pos)
        return left

    def xor_expr(self):
        left = self.and_expr()
        while self.at_kw("XOR"):
            pos = self.advance().position
            left = A.Binary("XOR", left, self.and_expr(), pos)
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.at_kw("AND") or self.at_sym("&&"):
            pos = self.advance().position
            left = A.Binary("AND", left, self.not_expr(), pos)
        return left

    def not_expr(self):
        if self.at_kw("NOT") or self.at_sym("!"):
            pos = self.advance().position
            self.enter()
            try:
                return A.Unary("NOT", self.not_expr(), pos)
            finally:
                self.leave()
        return self.comparison()

    _CMP = ("==", "!=", "<>", "<", "<=", ">", ">=")

    def comparison(self):
        left = self.additive()
        while True:
            if self.at_sym(*self._CMP):
                tok = self.advance()
                op = "!=" if tok.text == "<>" else tok.text
                left = A.Binary(op, left, self.additive(), tok.position)
            elif self.at_sym("=") and not self.match_scope:
                # single '=' is only an assignment, never a comparison
                self.error("'=='")
            elif self.at_kw("IN"):
                pos = self.advance().position
                left = A.Binary("IN", left, self.additive(), pos)
            elif self.at_kw("NOT") and self.peek().kind == KEYWORD and self.peek().text == "IN":
                pos = self.advance().position
                self.advance()
                left = A.Unary("NOT", A.Binary("IN", left, self.additive(), pos), pos)
            elif self.at_kw("CONTAINS"):
                pos = self.advance().position
                left = A.Binary("CONTAINS", left, self.additive(), pos)
            elif self.at_kw("STARTS", "ENDS"):
                tok = self.advance()
                self.expect_kw("WITH")
                left = A.Binary(f"{tok.text} WITH", left, self.additive(), tok.position)
            elif self.at_kw("IS"):
                pos = self.advance().position
                negated = self.accept_kw("NOT")
                self.expect_kw("NULL")
                left = A.IsNull(left, negated, pos)
            else:
                return left

    def additive(self):
        left = self.multiplicative()
        while self.at_sym("+", "-") and not (self.at_sym("-") and self._pattern_edge_ahead()):
            tok = self.advance()
            left = A.Binary(tok.text, left, self.multiplicative(), tok.position)
        return left

    def _pattern_edge_ahead(self) -> bool:
        # inside MATCH a '-' followed by '[', '-', '->' or '(' starts an edge
        return self.match_scope and self.peek().kind == SYMBOL and self.peek().text in ("[", "-", "->")

    def multiplicative(self):
        left = self.unary()
        while self.at_sym("*", "/", "%"):
            tok = self.advance()
            left = A.Binary(tok.text, left, self.unary(), tok.position)
        return left

    def unary(self):
        if self.at_sym("-") and self.peek().kind == SYMBOL and self.peek().text == ".":
            # `-.col` is accepted as shorthand for `$-.col`
            pos = self.advance().position
            return self.postfix(A.Var("$-", pos))
        if self.at_sym("-", "+"):
            tok = self.advance()
            self.enter()
            try:
                operand = self.unary()
            finally:
                self.leave()
            if isinstance(operand, A.Literal) and operand.kind in ("int", "float") and tok.text == "-":
                return A.Literal(operand.kind, -operand.value, tok.position)
            return A.Unary(tok.text, operand, tok.position)
        return self.postfix(self.primary())

    def postfix(self, base):
        while self.at_sym("."):
            self.advance()
            pos = self.tok.position
            base = A.Prop(base, self.name("property name"), pos)
        return base

    def primary(self):
        t = self.tok
        if t.kind == STRING:
            self.advance()
            return A.Literal("string", t.text, t.position)
        if t.kind == NUMBER:
            self.advance()
            if any(c in t.text for c in ".eE"):
                return A.Literal("float", float(t.text), t.position)
            return A.Literal("int", int(t.text), t.position)
        if self.at_kw("TRUE", "FALSE"):
            self.advance()
            return A.Literal("bool", t.text == "TRUE", t.position)
        if self.at_kw("NULL"):
            self.advance()
            return A.Literal("null", None, t.position)
        if t.kind == VARIABLE:
            if t.text not in ("$$", "$^", "$-"):
                raise GqlSyntaxError("user variables are not supported", t.position, "$$, $^ or $-", t.text)
            self.advance()
            return A.Var(t.text, t.position)
        if self.at_sym("("):
            self.advance()
            inner = self.expr()
            self.expect_sym(")")
            return inner
        if self.at_sym("["):
            self.advance()
            items = []
            if not self.at_sym("]"):
                items.append(self.expr())
                while self.accept_sym(","):
                    items.append(self.expr())
            self.expect_sym("]")
            return A.ListExpr(tuple(items), t.position)
        if self.at_sym("{"):
            return self.map_literal()
        if t.kind == IDENTIFIER:
            self.advance()
            if self.at_sym("("):
                return self.call(t)
            return A.Ident(t.text, t.position)
        self.error("an expression")

    def call(self, name_tok: Token):
        self.expect_sym("(")
        name = name_tok.text.lower()
        if self.accept_sym("*"):
            self.expect_sym(")")
            if name != "count":
                raise GqlSyntaxError("only count accepts '*'", name_tok.position, "count(*)", name)
            return A.Call(name, (), True, False, name_tok.position)
        distinct = self.accept_kw("DISTINCT")
        args = []
        if not self.at_sym(")"):
            args.append(self.expr())
            while self.accept_sym(","):
                args.append(self.expr())
        self.expect_sym(")")
        return A.Call(name, tuple(args), False, distinct, name_tok.position)

    def map_literal(self):
        pos = self.expect_sym("{").position
        items = []
        if not self.at_sym("}"):
            while True:
                key = self.name("map key") if self.tok.kind != STRING else self.advance().text
                self.expect_sym(":")
                items.append((key, self.expr()))
                if not self.accept_sym(","):
                    break
        self.expect_sym("}")
        return A.MapExpr(tuple(items), pos)

    # -- qualification check for GO / FETCH / LOOKUP / pipes ------------

    def check_qualified(self, expr):
        """Reject bare property names such as ``age`` outside MATCH."""
        allowed_bases = set()
        for e in A.walk(expr):
            if isinstance(e, A.Prop) and isinstance(e.base, A.Ident):
                allowed_bases.add(id(e.base))
        for e in A.walk(expr):
            if isinstance(e, A.Ident) and id(e) not in allowed_bases:
                if e.name.lower() not in _CONTEXT_WORDS:
                    raise GqlSyntaxError(
                        f"bare name {e.name!r} must be qualified (e.g. tag.{e.name} or $-.{e.name})",
                        e.pos, "qualified property reference", e.name)
        return expr

    def q_expr(self):
        return self.check_qualified(self.expr())

    # -- shared clauses --------------------------------------------------

    def alias(self) -> str | None:
        if self.accept_kw("AS"):
            return self.name("alias")
        return None

    def yield_items(self, qualified: bool = True) -> tuple[A.YieldItem, ...]:
        items = []
        while True:
            e = self.q_expr() if qualified else self.expr()
            items.append(A.YieldItem(e, self.alias()))
            if not self.accept_sym(","):
                return tuple(items)

    def order_keys(self, qualified: bool) -> tuple[A.OrderKey, ...]:
        keys = []
        while True:
            e = self.q_expr() if qualified else self.expr()
            desc = False
            if self.accept_kw("DESC"):
                desc = True
            else:
                self.accept_kw("ASC")
            keys.append(A.OrderKey(e, desc))
            if not self.accept_sym(","):
                return tuple(keys)

    def int_list(self) -> tuple[int, ...]:
        self.expect_sym("[")
        vals = [self.integer()]
        while self.accept_sym(","):
            vals.append(self.integer())
        self.expect_sym("]")
        return tuple(vals)

    def vid_list(self, allow_input: bool):
        """``"a", "b"`` or ``$-.col`` (inside a pipe)."""
        if self.tok.kind == VARIABLE or (self.at_sym("-") and self.peek().text == "."):
            ref = self.expr()
            if not (isinstance(ref, A.Prop) and isinstance(ref.base, A.Var) and ref.base.name == "$-"):
                self.error("vertex id or $-.column")
            if not allow_input:
                raise GqlSyntaxError("$- is only valid after a pipe", ref.pos, "vertex id", "$-")
            return (ref,)
        vids = []
        while True:
            e = self.expr()
            if not isinstance(e, A.Literal) or e.kind not in ("string", "int"):
                self.error("vertex id literal", self.tokens[self.i - 1])
            vids.append(e)
            if not self.accept_sym(","):
                return tuple(vids)

    def edge_list(self) -> tuple[str, ...]:
        if self.accept_sym("*"):
            return ("*",)
        names = [self.ident("edge type")]
        while self.accept_sym(","):
            names.append(self.ident("edge type"))
        return tuple(names)

    # -- GO --------------------------------------------------------------

    def go_stmt(self, in_pipe: bool = False):
        start = self.i
        self.expect_kw("GO")
        steps = 1
        if self.tok.kind == NUMBER:
            steps = self.integer("step count")
            if self.at_kw("TO"):
                self.i = start
                return self.unsupported(self._go_range, "GO M TO N STEPS")
            self.expect_kw("STEPS")
            if steps < 1:
                raise GqlSyntaxError("step count must be >= 1", self.tokens[self.i - 2].position, ">= 1", "0")
        self.expect_kw("FROM")
        vids = self.vid_list(in_pipe)
        self.expect_kw("OVER")
        over = self.edge_list()
        direction = "outgoing"
        if self.accept_kw("REVERSELY"):
            direction = "reversed"
        elif self.accept_kw("BIDIRECT"):
            direction = "bidirect"
        where = self.q_expr() if self.accept_kw("WHERE") else None
        distinct = False
        implicit = False
        if self.accept_kw("YIELD"):
            distinct = self.accept_kw("DISTINCT")
            items = self.yield_items()
        else:
            implicit = True
            items = (A.YieldItem(A.Call("dst", (A.Ident("edge"),))),)
        sample = limit = row_limit = None
        if self.accept_kw("SAMPLE"):
            sample = self.int_list()
        if self.accept_kw("LIMIT"):
            if self.at_sym("["):
                limit = self.int_list()
            else:
                row_limit = self.integer("row count")
        return A.GoStmt(steps, vids, over, direction, where, items, distinct, sample, limit,
                        row_limit, implicit)

    def _go_range(self):
        self.expect_kw("GO")
        self.integer()
        self.expect_kw("TO")
        self.integer()
        self.expect_kw("STEPS")
        self.expect_kw("FROM")
        self.vid_list(True)
        self.expect_kw("OVER")
        self.edge_list()
        if not self.accept_kw("REVERSELY"):
            self.accept_kw("BIDIRECT")
        if self.accept_kw("WHERE"):
            self.q_expr()
        if self.accept_kw("YIELD"):
            self.accept_kw("DISTINCT")
            self.yield_items()
        return "GO M TO N STEPS", "GO", ()

    # -- FETCH / LOOKUP ----------------------------------------------------

    def fetch_stmt(self, in_pipe: bool = False):
        start = self.i
        self.expect_kw("FETCH")
        self.expect_kw("PROP")
        self.expect_kw("ON")
        if self.accept_sym("*"):
            tag = "*"
        else:
            tag = self.ident("tag or edge type")
            while self.accept_sym(","):
                self.ident("tag")  # multi-tag fetch: handled below as unsupported
                self.i = start
                return self.unsupported(self._fetch_generic, "FETCH")
        if self.tok.kind == STRING and self.peek().kind == SYMBOL and self.peek().text == "->":
            self.i = start
            return self.unsupported(self._fetch_generic, "FETCH")
        vids = self.vid_list(in_pipe)
        distinct = False
        implicit = False
        if self.accept_kw("YIELD"):
            distinct = self.accept_kw("DISTINCT")
            items = self.yield_items()
        else:
            implicit = True
            items = (A.YieldItem(A.Call("properties", (A.Ident("vertex"),))),)
        return A.FetchStmt(tag, vids, items, distinct, implicit)

    def _fetch_generic(self):
        self.expect_kw("FETCH")
        self.expect_kw("PROP")
        self.expect_kw("ON")
        names = [self.ident("tag or edge type")]
        while self.accept_sym(","):
            names.append(self.ident("tag"))
        if self.tok.kind == STRING and self.peek().text == "->":
            while True:
                self.expr()
                self.expect_sym("->")
                self.expr()
                if self.accept_sym("@"):
                    self.integer("rank")
                if not self.accept_sym(","):
                    break
        else:
            self.vid_list(True)
        if self.accept_kw("YIELD"):
            self.accept_kw("DISTINCT")
            self.yield_items()
        return "FETCH", "FETCH", ()

    def lookup_stmt(self):
        self.expect_kw("LOOKUP")
        self.expect_kw("ON")
        tag = self.ident("tag")
        where = self.q_expr() if self.accept_kw("WHERE") else None
        distinct = False
        implicit = False
        if self.accept_kw("YIELD"):
            distinct = self.accept_kw("DISTINCT")
            items = self.yield_items()
        else:
            implicit = True
            items = (A.YieldItem(A.Call("id", (A.Ident("vertex"),))),)
        return A.LookupStmt(tag, where, items, distinct, implicit)

    # -- MATCH -----------------------------------------------------------

    def match_stmt(self):
        start = self.i
        self.expect_kw("MATCH")
        self.match_scope = True
        try:
            patterns = self.patterns()
            where = self.expr() if self.accept_kw("WHERE") else None
            if self.at_kw("WITH", "UNWIND", "MATCH", "OPTIONAL"):
                self.i = start
                return self.unsupported(self._match_chain)
            return self.match_tail(patterns, where)
        finally:
            self.match_scope = False

    def match_tail(self, patterns, where):
        self.expect_kw("RETURN")
        distinct = self.accept_kw("DISTINCT")
        items = self.yield_items(qualified=False)
        order = ()
        skip = limit = None
        if self.accept_kw("ORDER"):
            self.expect_kw("BY")
            order = self.order_keys(qualified=False)
        if self.accept_kw("SKIP"):
            skip = self.integer("skip count")
        if self.accept_kw("LIMIT"):
            limit = self.integer("limit count")
        return A.MatchStmt(tuple(patterns), where, items, distinct, order, skip, limit)

    def _match_chain(self):
        """MATCH/OPTIONAL MATCH/WITH/UNWIND chains ending in RETURN."""
        head = None
        clauses = []
        blocking = None
        while True:
            if self.at_kw("MATCH") or self.at_kw("OPTIONAL"):
                if self.accept_kw("OPTIONAL"):
                    blocking = blocking or "OPTIONAL MATCH"
                    head = head or "OPTIONAL MATCH"
                self.expect_kw("MATCH")
                head = head or "MATCH"
                self.patterns()
                if self.accept_kw("WHERE"):
                    clauses.append("WHERE")
                    self.expr()
                if head == "MATCH" and not self.at_kw("RETURN") and blocking is None:
                    blocking = self.tok.text if self.at_kw("WITH", "UNWIND") else "MATCH"
            elif self.at_kw("WITH"):
                self.advance()
                head = head or "WITH"
                blocking = blocking or "WITH"
                clauses.append("WITH")
                self.accept_kw("DISTINCT")
                self.yield_items(qualified=False)
                if self.accept_kw("ORDER"):
                    self.expect_kw("BY")
                    clauses.append("ORDER BY")
                    self.order_keys(qualified=False)
                if self.accept_kw("SKIP"):
                    clauses.append("SKIP")
                    self.integer()
                if self.accept_kw("LIMIT"):
                    clauses.append("LIMIT")
                    self.integer()
                if self.accept_kw("WHERE"):
                    clauses.append("WHERE")
                    self.expr()
            elif self.at_kw("UNWIND"):
                self.advance()
                head = head or "UNWIND"
                blocking = blocking or "UNWIND"
                clauses.append("UNWIND")
                self.expr()
                self.expect_kw("AS")
                self.name("variable")
            elif self.at_kw("RETURN"):
                self.advance()
                self.accept_kw("DISTINCT")
                self.yield_items(qualified=False)
                if self.accept_kw("ORDER"):
                    self.expect_kw("BY")
                    clauses.append("ORDER BY")
                    self.order_keys(qualified=False)
                if self.accept_kw("SKIP"):
                    clauses.append("SKIP")
                    self.integer()
                if self.accept_kw("LIMIT"):
                    clauses.append("LIMIT")
                    self.integer()
                return blocking or head, head, tuple(dict.fromkeys(clauses))
            else:
                self.error("MATCH, WITH, UNWIND or RETURN")

    def optional_match(self):
        self.match_scope = True
        try:
            return self._match_chain()
        finally:
            self.match_scope = False

    def unwind_stmt(self):
        self.match_scope = True
        try:
            return self._match_chain()
        finally:
            self.match_scope = False

    def patterns(self) -> list[A.PathPattern]:
        pats = [self.path_pattern()]
        while self.accept_sym(","):
            pats.append(self.path_pattern())
        return pats

    def path_pattern(self) -> A.PathPattern:
        path_var = None
        if self.tok.kind == IDENTIFIER and self.peek().kind == SYMBOL and self.peek().text == "=":
            path_var = self.advance().text
            self.advance()
        nodes = [self.node_pattern()]
        edges = []
        while self.at_sym("-", "<"):
            edges.append(self.edge_pattern())
            nodes.append(self.node_pattern())
        return A.PathPattern(tuple(nodes), tuple(edges), path_var)

    def node_pattern(self) -> A.NodePattern:
        self.expect_sym("(")
        var = None
        if self.tok.kind == IDENTIFIER:
            var = self.advance().text
        labels = []
        while self.accept_sym(":"):
            labels.append(self.ident("tag"))
        props = self.pattern_props()
        self.expect_sym(")")
        return A.NodePattern(var, tuple(labels), props)

    def pattern_props(self) -> tuple:
        if not self.at_sym("{"):
            return ()
        m = self.map_literal()
        return m.items

    def edge_pattern(self) -> A.EdgePattern:
        left = self.accept_sym("<")
        self.expect_sym("-")
        var = None
        types: list[str] = []
        props: tuple = ()
        hops = None
        if self.accept_sym("["):
            if self.tok.kind == IDENTIFIER:
                var = self.advance().text
            if self.accept_sym(":"):
                types.append(self.ident("edge type"))
                while self.tok.kind == PIPE:
                    self.advance()
                    self.accept_sym(":")
                    types.append(self.ident("edge type"))
            if self.accept_sym("*"):
                lo = self.integer() if self.tok.kind == NUMBER else 1
                hi = lo
                if self.accept_sym(".."):
                    hi = self.integer() if self.tok.kind == NUMBER else None
                hops = (lo, hi)
            props = self.pattern_props()
            self.expect_sym("]")
        if self.accept_sym("->"):
            right = True
        else:
            self.expect_sym("-")
            right = self.accept_sym(">")
        if left and right:
            self.error("a single edge direction", self.tokens[self.i - 1])
        direction = "left" if left else "right" if right else "both"
        return A.EdgePattern(var, tuple(types), props, direction, hops)

    # -- pipe stages -----------------------------------------------------

    def pipe_stage(self):
        if self.accept_kw("ORDER"):
            self.expect_kw("BY")
            return A.OrderByStage(self.order_keys(qualified=True))
        if self.accept_kw("LIMIT"):
            first = self.integer("row count")
            if self.accept_sym(","):
                return A.LimitStage(self.integer("row count"), first)
            return A.LimitStage(first)
        if self.accept_kw("SKIP") or self.accept_kw("OFFSET"):
            n = self.integer("row count")
            if self.accept_kw("LIMIT"):
                self.i -= 1
            return A.SkipStage(n)
        if self.accept_kw("GROUP"):
            self.expect_kw("BY")
            keys = [self.q_expr()]
            while self.accept_sym(","):
                keys.append(self.q_expr())
            self.expect_kw("YIELD")
            return A.GroupByStage(tuple(keys), self.yield_items())
        if self.at_kw("YIELD", "RETURN"):
            kw = self.advance().text
            distinct = self.accept_kw("DISTINCT")
            return A.YieldStage(self.yield_items(), distinct, kw)
        if self.accept_kw("WHERE"):
            return A.WhereStage(self.q_expr())
        if self.at_kw("GO"):
            return self.go_stmt(in_pipe=True)
        if self.at_kw("FETCH"):
            stmt = self.fetch_stmt(in_pipe=True)
            if isinstance(stmt, A.Unsupported):
                raise GqlSyntaxError("edge FETCH cannot follow a pipe", self.tok.position)
            return stmt
        self.error("a pipe stage (ORDER BY, LIMIT, GROUP BY, YIELD, WHERE, GO, FETCH)")

    # -- statements parsed but not executed --------------------------------

    def if_not_exists(self):
        if self.accept_word("IF"):
            self.expect_kw("NOT")
            self.expect_word("EXISTS")

    def create_stmt(self):
        self.expect_kw("CREATE")
        if self.accept_word("SPACE"):
            self.if_not_exists()
            self.ident("space name")
            if self.at_sym("("):
                self.balanced()
            while self.tok.kind == IDENTIFIER:
                self.ident()
                self.expect_sym("=")
                self.expr()
            return "CREATE SPACE", "CREATE SPACE", ()
        if self.at_word("TAG", "EDGE"):
            kind = self.advance().text.upper()
            if self.accept_word("INDEX"):
                self.if_not_exists()
                self.ident("index name")
                self.expect_kw("ON")
                self.ident(kind.lower())
                self.balanced()
                return f"CREATE {kind}", f"CREATE {kind}", ()
            self.if_not_exists()
            self.ident(f"{kind.lower()} name")
            self.expect_sym("(")
            if not self.at_sym(")"):
                while True:
                    self.prop_def()
                    if not self.accept_sym(","):
                        break
            self.expect_sym(")")
            while self.tok.kind == IDENTIFIER:
                self.ident()
                self.expect_sym("=")
                self.expr()
                self.accept_sym(",")
            return f"CREATE {kind}", f"CREATE {kind}", ()
        self.error("SPACE, TAG or EDGE")

    def prop_def(self):
        self.name("property name")
        self.accept_sym(":")
        self.name("property type")
        if self.accept_sym("("):
            self.integer()
            self.expect_sym(")")
        while True:
            if self.accept_kw("NOT"):
                self.expect_kw("NULL")
            elif self.accept_kw("NULL"):
                pass
            elif self.accept_word("DEFAULT"):
                self.expr()
            elif self.accept_word("COMMENT"):
                if self.tok.kind != STRING:
                    self.error("comment string")
                self.advance()
            else:
                return

    def balanced(self):
        opener = self.expect_sym("(")
        depth = 1
        while depth:
            t = self.tok
            if t.kind == EOF:
                self.error("')'", t)
            if t.kind == SYMBOL and t.text == "(":
                depth += 1
                if depth > MAX_DEPTH:
                    raise GqlSyntaxError("nesting too deep", t.position)
            elif t.kind == SYMBOL and t.text == ")":
                depth -= 1
            elif t.kind == PIPE:
                self.error("')'", t)
            self.advance()
        return opener

    def insert_stmt(self):
        self.expect_kw("INSERT")
        if self.accept_word("VERTEX"):
            self.if_not_exists()
            while True:
                self.ident("tag")
                self.name_list()
                if not self.accept_sym(","):
                    break
            self.expect_kw("VALUES")
            while True:
                self.expr()
                self.expect_sym(":")
                self.expr_tuple()
                if not self.accept_sym(","):
                    break
            return "INSERT"
        if self.accept_word("EDGE"):
            self.if_not_exists()
            self.ident("edge type")
            self.name_list()
            self.expect_kw("VALUES")
            while True:
                self.edge_key()
                self.expect_sym(":")
                self.expr_tuple()
                if not self.accept_sym(","):
                    break
            return "INSERT"
        self.error("VERTEX or EDGE")

    def name_list(self):
        self.expect_sym("(")
        if not self.at_sym(")"):
            self.name()
            while self.accept_sym(","):
                self.name()
        self.expect_sym(")")

    def expr_tuple(self):
        self.expect_sym("(")
        if not self.at_sym(")"):
            self.expr()
            while self.accept_sym(","):
                self.expr()
        self.expect_sym(")")

    def edge_key(self):
        self.expr()
        self.expect_sym("->")
        self.expr()
        if self.accept_sym("@"):
            self.integer("rank")

    def assignments(self):
        while True:
            self.name("property")
            if self.accept_sym("."):
                self.name("property")
            self.expect_sym("=")
            self.expr()
            if not self.accept_sym(","):
                return

    def update_stmt(self):
        kw = self.advance().text
        if self.accept_word("VERTEX"):
            if self.accept_kw("ON"):
                self.ident("tag")
            self.expr()
        elif self.accept_word("EDGE"):
            if self.accept_kw("ON"):
                self.ident("edge type")
            self.edge_key()
            if self.accept_word("OF"):
                self.ident("edge type")
        else:
            self.error("VERTEX or EDGE")
        self.expect_kw("SET")
        self.assignments()
        if self.accept_word("WHEN"):
            self.expr()
        if self.accept_kw("YIELD"):
            self.yield_items(qualified=False)
        return kw

    def delete_stmt(self):
        self.expect_kw("DELETE")
        if self.accept_word("VERTEX"):
            self.vid_list(False)
            if self.accept_kw("WITH"):
                self.expect_word("EDGE")
            return "DELETE"
        if self.accept_word("EDGE"):
            self.ident("edge type")
            while True:
                self.edge_key()
                if not self.accept_sym(","):
                    break
            return "DELETE"
        if self.accept_word("TAG"):
            if not self.accept_sym("*"):
                self.ident("tag")
                while self.accept_sym(","):
                    self.ident("tag")
            self.expect_kw("FROM")
            self.vid_list(False)
            return "DELETE"
        self.error("VERTEX, EDGE or TAG")

    def subgraph_stmt(self):
        self.expect_kw("GET")
        self.expect_word("SUBGRAPH")
        if self.accept_kw("WITH"):
            self.expect_kw("PROP")
        if self.tok.kind == NUMBER:
            self.integer()
            self.expect_kw("STEPS")
        self.expect_kw("FROM")
        self.vid_list(False)
        if self.at_word("IN", "OUT", "BOTH"):
            self.advance()
            self.edge_list()
        if self.accept_kw("WHERE"):
            self.expr()
        if self.accept_kw("YIELD"):
            self.yield_items(qualified=False)
        return "GET SUBGRAPH"

    def find_path_stmt(self):
        self.expect_kw("FIND")
        if not (self.accept_word("SHORTEST") or self.accept_word("ALL") or self.accept_word("NOLOOP")):
            self.error("SHORTEST, ALL or NOLOOP")
        self.expect_word("PATH")
        if self.accept_kw("WITH"):
            self.expect_kw("PROP")
        self.expect_kw("FROM")
        self.vid_list(False)
        self.expect_kw("TO")
        self.vid_list(False)
        self.expect_kw("OVER")
        self.edge_list()
        if not self.accept_kw("REVERSELY"):
            self.accept_kw("BIDIRECT")
        if self.accept_kw("WHERE"):
            self.expr()
        if self.accept_word("UPTO"):
            self.integer()
            self.expect_kw("STEPS")
        if self.accept_kw("YIELD"):
            self.yield_items(qualified=False)
        return "FIND PATH"

    def show_stmt(self):
        self.expect_kw("SHOW")
        if self.tok.kind not in (IDENTIFIER, KEYWORD):
            self.error("what to show")
        while self.tok.kind in (IDENTIFIER, KEYWORD, STRING):
            self.advance()
        return "SHOW"


def parse(text: str | bytes):
    """Parse one nGQL statement (optionally ending in ``;``).

    Raises:
        GqlSyntaxError: with ``position``, ``expected`` and ``found`` set.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GqlSyntaxError("input is not valid UTF-8", (1, exc.start + 1)) from None
    if not isinstance(text, str):
        raise TypeError("parse() expects str or bytes")
    try:
        return _Parser(text).statement()
    except RecursionError:
        raise GqlSyntaxError("statement nested too deeply", (1, 1)) from None


def validate(text: str | bytes) -> GqlSyntaxError | None:
    """``None`` when ``text`` parses, otherwise the syntax error. Never raises."""
    try:
        parse(text)
    except GqlSyntaxError as exc:
        return exc
    return None


def is_valid(text: str | bytes) -> bool:
    return validate(text) is None
