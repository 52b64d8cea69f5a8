"""Thin wrapper turning lark failures into ParseError."""
from __future__ import annotations

from functools import lru_cache

from lark import Lark
from lark.exceptions import LarkError, UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, VisitError

from .errors import ParseError

COMMON = r"""
VAR: /\?[A-Za-z_][\w]*/
NAME: /[A-Za-z_][\w]*/
CONST: /[\w\-']+/
INT: /\d+/
COMMENT: /#[^\n]*/
%import common.WS
%ignore WS
%ignore COMMENT
"""


@lru_cache(maxsize=None)
def parser(grammar: str, start: str = "start", positions: bool = False) -> Lark:
    return Lark(grammar + COMMON, start=start, parser="earley", lexer="dynamic", propagate_positions=positions)


def run(grammar: str, text: str, transformer, start: str = "start", positions: bool = False):
    try:
        tree = parser(grammar, start, positions).parse(text)
        return transformer.transform(tree)
    except VisitError as exc:
        orig = exc.orig_exc
        if isinstance(orig, ParseError):
            raise orig from None
        raise ParseError(str(orig)) from None
    except UnexpectedEOF:
        raise ParseError("unexpected end of input", *_end(text)) from None
    except (UnexpectedCharacters, UnexpectedInput) as exc:
        raise ParseError(f"syntax error near {_snippet(text, exc)!r}",
                         getattr(exc, "line", None), getattr(exc, "column", None)) from None
    except LarkError as exc:
        raise ParseError(str(exc)) from None


def _end(text: str) -> tuple[int, int]:
    lines = text.split("\n")
    return len(lines), len(lines[-1]) + 1


def _snippet(text: str, exc) -> str:
    pos = getattr(exc, "pos_in_stream", None)
    if pos is None:
        return ""
    return text[pos:pos + 12]
