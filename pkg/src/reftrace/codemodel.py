"""Line-oriented Java lexing: tokens, line kinds, declarations and node categories.

Nothing here builds a syntax tree. Every consumer in the package works at
line granularity, so a string-aware token stream plus brace-depth tracking is
all that is needed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

# Lexical carry states between physical lines.
CODE = "code"
BLOCK = "block"  # inside /* ... */
TEXT_BLOCK = "text-block"  # inside """ ... """

IDENTIFIER = "identifier"
KEYWORD = "keyword"
LITERAL = "literal"
OPERATOR = "operator"
SEPARATOR = "separator"
COMMENT = "comment-text"

JAVA_KEYWORDS = frozenset(
    """
    abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while
    """.split()
)

PRIMITIVE_TYPES = frozenset("boolean byte char double float int long short void".split())
CONTROL_KEYWORDS = frozenset(
    "if else for while do switch case default break continue return try catch finally throw yield".split()
)
MODIFIERS = frozenset(
    "public protected private static final abstract native synchronized transient volatile strictfp default".split()
)

_OPERATORS = sorted(
    """
    >>>= <<= >>= >>> -> ++ -- && || == != <= >= += -= *= /= %= &= |= ^= << >>
    = > < ! ~ ? : + - * / & | ^ %
    """.split(),
    key=len,
    reverse=True,
)
_SEPARATORS = ("...", "::", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@")

_IDENT_RE = re.compile(r"(?:[^\W\d]|\$)(?:\w|\$)*")
_NUMBER_RE = re.compile(
    r"""
    0[xX][0-9a-fA-F_]*(?:\.[0-9a-fA-F_]*)?(?:[pP][+-]?\d+)?[lLfFdD]?
  | 0[bB][01_]+[lL]?
  | (?:\d[\d_]*(?:\.[\d_]*)?|\.\d[\d_]*)(?:[eE][+-]?\d[\d_]*)?[lLfFdD]?
    """,
    re.VERBOSE,
)
_STRING_RE = re.compile(r'"(?:[^"\\]|\\.)*"')
_CHAR_RE = re.compile(r"'(?:[^'\\]|\\.)+'")
_WS_RE = re.compile(r"\s+")


class LexicalError(ValueError):
    """An unterminated literal or an unknown character on one line."""

    def __init__(self, line_index: int, message: str):
        super().__init__(f"line {line_index}: {message}")
        self.line_index = line_index


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int

    @property
    def end(self) -> int:
        return self.column + len(self.text)


def _scan(line: str, state: str, line_index: int):
    """Return (tokens, new_state, error message or None); always consumes the line."""
    tokens: List[Token] = []
    error = None
    pos = 0
    n = len(line)

    def emit(kind, start, stop):
        tokens.append(Token(kind, line[start:stop], line_index, start))

    while pos < n:
        if state == BLOCK:
            start = pos
            while start < n and line[start].isspace():
                start += 1
            if start >= n:
                break
            close = line.find("*/", start)
            if close < 0:
                stop = len(line.rstrip())
                emit(COMMENT, start, stop)
                pos = n
                break
            emit(COMMENT, start, close + 2)
            pos = close + 2
            state = CODE
            continue
        if state == TEXT_BLOCK:
            start = pos
            while start < n and line[start].isspace():
                start += 1
            if start >= n:
                break
            close = _find_text_block_end(line, start)
            if close < 0:
                emit(LITERAL, start, len(line.rstrip()))
                pos = n
                break
            emit(LITERAL, start, close + 3)
            pos = close + 3
            state = CODE
            continue

        ch = line[pos]
        if ch.isspace():
            pos += 1
            continue
        if line.startswith("//", pos):
            emit(COMMENT, pos, len(line.rstrip()))
            pos = n
            break
        if line.startswith("/*", pos):
            close = line.find("*/", pos + 2)
            if close < 0:
                emit(COMMENT, pos, len(line.rstrip()))
                state = BLOCK
                pos = n
                break
            emit(COMMENT, pos, close + 2)
            pos = close + 2
            continue
        if line.startswith('"""', pos):
            close = _find_text_block_end(line, pos + 3)
            if close < 0:
                emit(LITERAL, pos, len(line.rstrip()))
                state = TEXT_BLOCK
                pos = n
                break
            emit(LITERAL, pos, close + 3)
            pos = close + 3
            continue
        if ch == '"':
            m = _STRING_RE.match(line, pos)
            if m is None:
                error = error or "unterminated string literal"
                emit(LITERAL, pos, len(line.rstrip()))
                pos = n
                break
            emit(LITERAL, pos, m.end())
            pos = m.end()
            continue
        if ch == "'":
            m = _CHAR_RE.match(line, pos)
            if m is None:
                error = error or "unterminated character literal"
                emit(LITERAL, pos, len(line.rstrip()))
                pos = n
                break
            emit(LITERAL, pos, m.end())
            pos = m.end()
            continue
        if ch.isdigit() or (ch == "." and pos + 1 < n and line[pos + 1].isdigit()):
            m = _NUMBER_RE.match(line, pos)
            emit(LITERAL, pos, m.end())
            pos = m.end()
            continue
        m = _IDENT_RE.match(line, pos)
        if m is not None:
            word = m.group()
            if word in ("true", "false", "null"):
                kind = LITERAL
            elif word in JAVA_KEYWORDS:
                kind = KEYWORD
            else:
                kind = IDENTIFIER
            emit(kind, pos, m.end())
            pos = m.end()
            continue
        for sep in _SEPARATORS:
            if line.startswith(sep, pos):
                emit(SEPARATOR, pos, pos + len(sep))
                pos += len(sep)
                break
        else:
            for op in _OPERATORS:
                if line.startswith(op, pos):
                    emit(OPERATOR, pos, pos + len(op))
                    pos += len(op)
                    break
            else:
                error = error or f"unexpected character {ch!r}"
                emit(OPERATOR, pos, pos + 1)
                pos += 1
    return tokens, state, error


def _find_text_block_end(line: str, start: int) -> int:
    i = start
    while True:
        i = line.find('"""', i)
        if i < 0:
            return -1
        backslashes = 0
        j = i - 1
        while j >= start and line[j] == "\\":
            backslashes += 1
            j -= 1
        if backslashes % 2 == 0:
            return i
        i += 1


def tokenize_line(line: str, state: str = CODE, line_index: int = 0) -> Tuple[List[Token], str]:
    """Tokenize one physical line given the carry state of the lines before it.

    Raises LexicalError on an unterminated string/char literal or an unknown
    character. Use `scan_source` for the lenient whole-file variant.
    """
    if "\n" in line or "\r" in line:
        raise ValueError("tokenize_line expects a single physical line")
    tokens, new_state, error = _scan(line, state, line_index)
    if error is not None:
        raise LexicalError(line_index, error)
    return tokens, new_state


@dataclass(frozen=True)
class LineKind:
    value: str  # "code" | "comment-only" | "blank"
    has_inline_comment: bool = False


BLANK = LineKind("blank")
COMMENT_ONLY = LineKind("comment-only")


def kind_from_tokens(line: str, tokens: Sequence[Token]) -> LineKind:
    if not line.strip():
        return BLANK
    if not tokens or all(t.kind == COMMENT for t in tokens):
        # Whitespace-free text with no tokens cannot happen; tokens empty means
        # the line was all whitespace inside a comment region.
        return COMMENT_ONLY if tokens else BLANK
    seen_code = False
    inline = False
    for tok in tokens:
        if tok.kind == COMMENT:
            if seen_code:
                inline = True
        else:
            seen_code = True
    return LineKind("code", inline)


def classify_line_kind(line: str, state: str = CODE) -> LineKind:
    tokens, _, _ = _scan(line, state, 0)
    return kind_from_tokens(line, tokens)


def split_lines(text: str) -> List[str]:
    """Physical lines split on LF; a trailing CR is dropped, a final newline adds no line."""
    if not text:
        return []
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    return [ln[:-1] if ln.endswith("\r") else ln for ln in lines]


def newline_style(text: str) -> str:
    return "\r\n" if "\r\n" in text else "\n"


def join_lines(lines: Sequence[str], like: str) -> str:
    """Join lines with the newline convention of `like`, keeping its final-newline status."""
    if not lines:
        return ""
    eol = newline_style(like)
    out = eol.join(lines)
    if like.endswith("\n"):
        out += eol
    return out


@dataclass(frozen=True)
class LineInfo:
    index: int
    text: str
    tokens: Tuple[Token, ...]
    kind: LineKind
    state_in: str
    error: Optional[str] = None

    @property
    def code_tokens(self) -> Tuple[Token, ...]:
        return tuple(t for t in self.tokens if t.kind != COMMENT)

    @property
    def comment_tokens(self) -> Tuple[Token, ...]:
        return tuple(t for t in self.tokens if t.kind == COMMENT)


@lru_cache(maxsize=512)
def scan_source(text: str) -> Tuple[LineInfo, ...]:
    """Lex a whole file leniently; lexical errors are recorded per line, never raised."""
    state = CODE
    out = []
    for i, line in enumerate(split_lines(text)):
        tokens, new_state, error = _scan(line, state, i)
        out.append(LineInfo(i, line, tuple(tokens), kind_from_tokens(line, tokens), state, error))
        state = new_state
    return tuple(out)


# --- declarations -----------------------------------------------------------


@dataclass
class DeclarationIndex:
    classes: List[str] = field(default_factory=list)
    methods: List[Tuple[str, int]] = field(default_factory=list)
    constructors: List[Tuple[str, int]] = field(default_factory=list)
    variables: List[Tuple[str, str]] = field(default_factory=list)
    parameters: List[Tuple[str, str]] = field(default_factory=list)
    # Ordered (kind, name) declarations as first encountered in the file.
    order: List[Tuple[str, str]] = field(default_factory=list)
    # Methods carrying @Override.
    overrides: List[str] = field(default_factory=list)
    fields: List[str] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)

    @property
    def method_names(self) -> List[str]:
        return [name for name, _ in self.methods]


_TYPE_DECL_WORDS = {"class", "interface", "enum", "record"}


def _is_typeish(tokens: Sequence[Token], k: int) -> bool:
    """True when tokens[k] can end a type (so an identifier after it is being declared)."""
    if k < 0:
        return False
    tok = tokens[k]
    if tok.kind == IDENTIFIER:
        # `@Override int` - the annotation name is not a type
        return not (k >= 1 and tokens[k - 1].text == "@") and tok.text != "yield"
    if tok.text == "...":
        return True
    if tok.kind == KEYWORD and tok.text in PRIMITIVE_TYPES:
        return True
    if tok.text == "]":
        return k >= 1 and tokens[k - 1].text == "["
    if tok.text in (">", ">>", ">>>"):
        return _closes_generic(tokens, k)
    return False


_GENERIC_INNER = {",", "?", ".", "[", "]", "&", "extends", "super"}


def _closes_generic(tokens: Sequence[Token], k: int) -> bool:
    depth = 0
    j = k
    while j >= 0:
        t = tokens[j].text
        if t in (">", ">>", ">>>"):
            depth += len(t)
        elif t == "<":
            depth -= 1
            if depth == 0:
                return j >= 1 and tokens[j - 1].kind == IDENTIFIER
        elif tokens[j].kind == IDENTIFIER or tokens[j].kind == KEYWORD and tokens[j].text in PRIMITIVE_TYPES:
            pass
        elif t not in _GENERIC_INNER and tokens[j].kind != COMMENT:
            return False
        j -= 1
    return False


@dataclass
class _Scope:
    kind: str  # "type" | "interface" | "method" | "block" | "init"
    name: str
    paren_depth: int


def code_token_stream(text: str) -> List[Token]:
    return [t for info in scan_source(text) for t in info.tokens if t.kind != COMMENT]


def extract_declarations(source: str) -> DeclarationIndex:
    """Scan the token stream for class, method, constructor, field, local and parameter declarations."""
    index = DeclarationIndex()
    toks = code_token_stream(source)
    n = len(toks)
    scopes: List[_Scope] = []
    pending_type: Optional[Tuple[str, str]] = None  # (decl word, name)
    pending_method: Optional[Tuple[str, str]] = None  # (kind, name) awaiting body or ';'
    paren_stack: List[Tuple[int, Optional[str]]] = []  # (open index, role)
    header_close = -1  # index of ')' closing a method/ctor header
    anon_close = -1
    decl_stmt: Optional[Tuple[int, int]] = None  # (brace depth, paren depth) of a running declaration
    seen_names = set()

    def add(kind, name, scope_name, line):
        if kind == "class":
            index.classes.append(name)
        elif kind == "method":
            index.methods.append((name, line))
        elif kind == "constructor":
            index.constructors.append((name, line))
        elif kind == "variable":
            index.variables.append((name, scope_name))
        elif kind == "parameter":
            index.parameters.append((name, scope_name))
        key = (kind, name)
        if key not in seen_names:
            seen_names.add(key)
            index.order.append(key)

    def current(kinds):
        for s in reversed(scopes):
            if s.kind in kinds:
                return s
        return None

    def owner_name():
        s = current(("method",))
        if s is not None:
            return s.name
        s = current(("type", "interface"))
        return s.name if s is not None else ""

    def annotated_override(k):
        # Walk back over modifiers, annotations and type tokens to the previous statement end.
        j = k
        while j >= 0 and toks[j].text not in (";", "{", "}"):
            if toks[j].text == "Override" and j >= 1 and toks[j - 1].text == "@":
                return True
            j -= 1
        return False

    i = 0
    while i < n:
        tok = toks[i]
        text = tok.text
        prev = toks[i - 1] if i > 0 else None
        nxt = toks[i + 1] if i + 1 < n else None
        in_body = scopes[-1] if scopes else None

        if tok.kind == KEYWORD and text in ("class", "interface", "enum") or (
            tok.kind == IDENTIFIER and text == "record" and nxt is not None and nxt.kind == IDENTIFIER
            and i + 2 < n and toks[i + 2].text in ("(", "<")
        ):
            if prev is not None and prev.text == "." or prev is not None and prev.text == "@":
                i += 1
                continue
            if nxt is not None and nxt.kind == IDENTIFIER:
                pending_type = (text, nxt.text)
                add("class", nxt.text, owner_name(), nxt.line)
                if text == "record":
                    pending_method = ("record", nxt.text)
                i += 2
                continue

        if text == "(":
            role = None
            if pending_method is not None and pending_method[0] == "record" and not paren_stack:
                role = "header"
            elif (
                prev is not None
                and prev.kind == IDENTIFIER
                and in_body is not None
                and in_body.kind in ("type", "interface")
                and len(paren_stack) == in_body.paren_depth
                and pending_type is None
            ):
                before = i - 2
                if _is_typeish(toks, before) and not _after_new(toks, before):
                    pending_method = ("method", prev.text)
                    add("method", prev.text, in_body.name, prev.line)
                    if annotated_override(i - 1):
                        index.overrides.append(prev.text)
                    role = "header"
                elif prev.text == in_body.name and _starts_member(toks, before):
                    pending_method = ("constructor", prev.text)
                    add("constructor", prev.text, in_body.name, prev.line)
                    role = "header"
            elif prev is not None and prev.kind == KEYWORD and prev.text == "catch":
                role = "catch"
            elif prev is not None and (prev.kind == IDENTIFIER or prev.text == ">") and _after_new(toks, i - 1):
                role = "new"
            paren_stack.append((i, role))
            i += 1
            continue

        if text == ")":
            if paren_stack:
                _, role = paren_stack.pop()
                if role == "header":
                    header_close = i
                elif role == "new":
                    anon_close = i
            i += 1
            continue

        if text == "{":
            if pending_type is not None:
                kind = "interface" if pending_type[0] == "interface" else "type"
                scopes.append(_Scope(kind, pending_type[1], len(paren_stack)))
                pending_type = None
                pending_method = None
            elif pending_method is not None and header_close >= 0:
                scopes.append(_Scope("method", pending_method[1], len(paren_stack)))
                pending_method = None
                header_close = -1
            elif anon_close == i - 1:
                scopes.append(_Scope("type", "", len(paren_stack)))
                anon_close = -1
            elif prev is not None and (
                prev.text in ("=", "]") or prev.text in (",", "{") and in_body is not None and in_body.kind == "init"
            ):
                scopes.append(_Scope("init", "", len(paren_stack)))
            else:
                scopes.append(_Scope("block", "", len(paren_stack)))
            i += 1
            continue

        if text == "}":
            if scopes:
                closed = scopes.pop()
                if closed.kind != "init":
                    decl_stmt = None
            else:
                index.errors.append(f"unbalanced '}}' at line {tok.line}")
            i += 1
            continue

        if text == ";":
            if pending_method is not None and header_close >= 0 and pending_method[0] == "method":
                # Bodiless signature: abstract/interface/native method.
                in_interface = in_body is not None and in_body.kind == "interface"
                if in_interface:
                    name = pending_method[1]
                    for k in range(len(index.methods) - 1, -1, -1):
                        if index.methods[k][0] == name:
                            del index.methods[k]
                            break
                pending_method = None
                header_close = -1
            if paren_stack and toks[paren_stack[-1][0]].text == "(" and decl_stmt is not None:
                # for (int i = 0; ...) - the declaration ends but the paren stays open
                decl_stmt = None
            elif not paren_stack:
                decl_stmt = None
            i += 1
            continue

        if tok.kind == IDENTIFIER and nxt is not None:
            depth = len(paren_stack)
            # Parameters inside a method/constructor/record header or a catch clause.
            if paren_stack and paren_stack[-1][1] in ("header", "catch") and nxt.text in (",", ")") and _is_typeish(toks, i - 1):
                role = paren_stack[-1][1]
                if role == "header":
                    owner = pending_method[1] if pending_method else owner_name()
                    if pending_method is not None and pending_method[0] == "record":
                        add("variable", text, owner, tok.line)
                        index.fields.append(text)
                    else:
                        add("parameter", text, owner, tok.line)
                else:
                    add("variable", text, owner_name(), tok.line)
                i += 1
                continue
            # Lambda parameters: `x ->` and `(a, b) ->`.
            if nxt.text == "->" and (prev is None or prev.text != "."):
                add("variable", text, owner_name(), tok.line)
                i += 1
                continue
            if nxt.text in (",", ")") and _in_lambda_params(toks, i):
                add("variable", text, owner_name(), tok.line)
                i += 1
                continue
            # Field or local variable declarators.
            if nxt.text in ("=", ";", ",", ":", "[") and (prev is None or prev.text != "."):
                declared = False
                if _is_typeish(toks, i - 1) and not _is_expression_context(toks, i - 1):
                    declared = True
                    decl_stmt = (len(scopes), depth)
                elif prev is not None and prev.text == "," and decl_stmt == (len(scopes), depth):
                    declared = True
                if declared and nxt.text == "[" and not (i + 2 < n and toks[i + 2].text == "]"):
                    declared = False
                if declared and nxt.text == ":" and not (paren_stack and toks[paren_stack[-1][0] - 1].text == "for"):
                    declared = False
                if declared:
                    scope = in_body
                    if scope is not None and scope.kind in ("type", "interface") and depth == scope.paren_depth:
                        index.fields.append(text)
                        add("variable", text, scope.name, tok.line)
                    else:
                        add("variable", text, owner_name(), tok.line)
        i += 1

    if scopes:
        index.errors.append(f"{len(scopes)} unclosed '{{'")
    if paren_stack:
        index.errors.append(f"{len(paren_stack)} unclosed '('")
    return index


_EXPR_BEFORE_TYPE = {"return", "new", "throw", "case", "instanceof", "else", "assert", "yield"}


def _is_expression_context(toks: Sequence[Token], k: int) -> bool:
    """True if the 'type' ending at k is really part of an expression (e.g. `return a;`)."""
    tok = toks[k]
    if tok.kind == IDENTIFIER:
        before = toks[k - 1] if k >= 1 else None
        if before is not None and before.text in _EXPR_BEFORE_TYPE:
            return True
        if before is not None and before.kind == OPERATOR and before.text not in ("<", ">", ">>", ">>>"):
            # `x = y z` is not Java; `? y :` ternaries and friends are expressions
            return True
    return False


def _starts_member(toks: Sequence[Token], k: int) -> bool:
    """Token k may directly precede a constructor name (modifier, annotation or statement end)."""
    if k < 0:
        return True
    tok = toks[k]
    if tok.text in (";", "{", "}", ")"):
        return True
    if tok.kind == KEYWORD and tok.text in MODIFIERS:
        return True
    return tok.kind == IDENTIFIER and k >= 1 and toks[k - 1].text == "@"


def _after_new(toks: Sequence[Token], k: int) -> bool:
    j = k
    while j >= 0:
        t = toks[j]
        if t.text == "new":
            return True
        if t.kind == IDENTIFIER or t.text in (".", "<", ">", ">>", ",", "?", "[", "]"):
            j -= 1
            continue
        return False
    return False


def _in_lambda_params(toks: Sequence[Token], k: int) -> bool:
    """Identifier k sits in a parenthesized lambda parameter list `(a, b) ->`."""
    j = k
    depth = 0
    while j < len(toks):
        t = toks[j].text
        if t == "(":
            depth += 1
        elif t == ")":
            if depth == 0:
                return j + 1 < len(toks) and toks[j + 1].text == "->"
            depth -= 1
        elif t in (";", "{", "}", "=", "->"):
            return False
        j += 1
    return False


def count_methods(source: str) -> int:
    return len(extract_declarations(source).methods)


# --- node categories --------------------------------------------------------

NODE_CATEGORIES = (
    "ExpressionNode",
    "ControlNode",
    "CallNode",
    "LiteralNode",
    "DeclarationNode",
    "CommentNode",
    "OtherNode",
)


def node_category(tokens: Sequence[Token], k: int) -> str:
    """Category of the syntactic construct token k belongs to, judged from its neighbours."""
    tok = tokens[k]
    nxt = tokens[k + 1] if k + 1 < len(tokens) else None
    if tok.kind == COMMENT:
        return "CommentNode"
    if tok.kind == KEYWORD:
        if tok.text in CONTROL_KEYWORDS:
            return "ControlNode"
        if tok.text in PRIMITIVE_TYPES or tok.text in MODIFIERS or tok.text in _TYPE_DECL_WORDS or tok.text in ("throws", "extends", "implements"):
            return "DeclarationNode"
        if tok.text == "new":
            return "CallNode"
        return "ExpressionNode"
    if tok.kind == LITERAL:
        return "LiteralNode"
    if tok.kind == OPERATOR:
        return "ExpressionNode"
    if tok.kind == IDENTIFIER:
        if nxt is not None and nxt.text == "(":
            return "CallNode" if not _is_typeish(tokens, k - 1) else "DeclarationNode"
        if _is_typeish(tokens, k - 1) and not _is_expression_context(tokens, k - 1):
            return "DeclarationNode"
        return "ExpressionNode"
    return "OtherNode"


def iter_code_lines(infos: Iterable[LineInfo]):
    for info in infos:
        if info.kind.value == "code":
            yield info
