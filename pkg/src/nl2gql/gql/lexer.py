"""Tokenizer for the nGQL subset."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import GqlSyntaxError

KEYWORD = "keyword"
IDENTIFIER = "identifier"
STRING = "string_lit"
NUMBER = "number_lit"
SYMBOL = "symbol"
PIPE = "pipe"
VARIABLE = "variable"
COMMENT = "comment"
EOF = "eof"

# Reserved words. Other words with special meaning in some position
# (VERTEX, EDGE, PATH, SHORTEST, ...) stay identifiers and are matched by
# text, so they remain usable as names elsewhere.
KEYWORDS = frozenset("""
    GO FROM OVER WHERE YIELD MATCH RETURN FETCH PROP ON LOOKUP AND OR NOT XOR AS
    ORDER BY LIMIT SKIP SAMPLE GROUP DISTINCT REVERSELY BIDIRECT STEPS TO ASC DESC
    INSERT UPDATE UPSERT DELETE CREATE GET FIND WITH UNWIND OPTIONAL SHOW SET VALUES
    TRUE FALSE NULL IN IS CONTAINS STARTS ENDS OFFSET
""".split())

_MULTI = ("...", "..", "==", "!=", "<>", "<=", ">=", "->", "&&", "||")
_SINGLE = set("()[]{},.:;=<>+-*/%@!")
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f", "0": "\0"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int
    offset: int = 0

    @property
    def position(self) -> tuple[int, int]:
        return (self.line, self.col)

    def is_word(self, word: str) -> bool:
        return self.kind in (KEYWORD, IDENTIFIER) and self.text.upper() == word

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def _is_ident_start(ch: str) -> bool:
    return ch == "_" or ch.isalpha()


def _is_ident_char(ch: str) -> bool:
    return ch == "_" or ch.isalnum()


def tokenize(text: str, keep_comments: bool = False) -> list[Token]:
    """Split ``text`` into tokens, ending with an ``eof`` token.

    Keywords are matched case-insensitively and canonicalised to upper case.
    String tokens carry their unescaped value.

    Raises:
        GqlSyntaxError: unterminated string or comment, or a stray character.
    """
    tokens: list[Token] = []
    i = 0
    n = len(text)
    line, line_start = 1, 0

    def pos(at: int) -> tuple[int, int]:
        return (line, at - line_start + 1)

    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            line_start = i + 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            continue
        start = i
        here = pos(i)

        if ch == "#" or text.startswith("//", i):
            end = text.find("\n", i)
            end = n if end < 0 else end
            if keep_comments:
                tokens.append(Token(COMMENT, text[i:end], *here, start))
            i = end
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise GqlSyntaxError("unterminated comment", here, "*/", "end of input")
            body = text[i:end + 2]
            if keep_comments:
                tokens.append(Token(COMMENT, body, *here, start))
            for k in range(i, end + 2):
                if text[k] == "\n":
                    line += 1
                    line_start = k + 1
            i = end + 2
            continue

        if ch in "\"'":
            quote = ch
            i += 1
            buf = []
            while True:
                if i >= n:
                    raise GqlSyntaxError("unterminated string literal", here, quote, "end of input")
                c = text[i]
                if c == quote:
                    i += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        raise GqlSyntaxError("unterminated string literal", here, quote, "end of input")
                    nxt = text[i + 1]
                    buf.append(_ESCAPES.get(nxt, nxt))
                    i += 2
                    continue
                if c == "\n":
                    line += 1
                    line_start = i + 1
                buf.append(c)
                i += 1
            tokens.append(Token(STRING, "".join(buf), *here, start))
            continue

        if ch == "`":
            end = text.find("`", i + 1)
            if end < 0 or end == i + 1 or "\n" in text[i + 1:end]:
                raise GqlSyntaxError("bad quoted identifier", here, "`", "end of input")
            tokens.append(Token(IDENTIFIER, text[i + 1:end], *here, start))
            i = end + 1
            continue

        if ch.isdigit() and ch.isascii():
            j = i
            while j < n and text[j].isascii() and text[j].isdigit():
                j += 1
            if j + 1 < n and text[j] == "." and text[j + 1].isascii() and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isascii() and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isascii() and text[k].isdigit():
                    j = k
                    while j < n and text[j].isascii() and text[j].isdigit():
                        j += 1
            tokens.append(Token(NUMBER, text[i:j], *here, start))
            i = j
            continue

        if _is_ident_start(ch):
            j = i + 1
            while j < n and _is_ident_char(text[j]):
                j += 1
            word = text[i:j]
            if word.upper() in KEYWORDS:
                tokens.append(Token(KEYWORD, word.upper(), *here, start))
            else:
                tokens.append(Token(IDENTIFIER, word, *here, start))
            i = j
            continue

        if ch == "$":
            nxt = text[i + 1] if i + 1 < n else ""
            if nxt in ("$", "^", "-"):
                tokens.append(Token(VARIABLE, "$" + nxt, *here, start))
                i += 2
                continue
            if nxt and _is_ident_start(nxt):
                j = i + 2
                while j < n and _is_ident_char(text[j]):
                    j += 1
                tokens.append(Token(VARIABLE, text[i:j], *here, start))
                i = j
                continue
            raise GqlSyntaxError("bad variable reference", here, "$$, $^, $- or $name", repr(ch + nxt))

        if ch == "|" and not text.startswith("||", i):
            tokens.append(Token(PIPE, "|", *here, start))
            i += 1
            continue

        for sym in _MULTI:
            if text.startswith(sym, i):
                tokens.append(Token(SYMBOL, sym, *here, start))
                i += len(sym)
                break
        else:
            if ch in _SINGLE:
                tokens.append(Token(SYMBOL, ch, *here, start))
                i += 1
            else:
                raise GqlSyntaxError(f"unexpected character {ch!r}", here, None, ch)

    tokens.append(Token(EOF, "", *pos(i), i))
    return tokens
