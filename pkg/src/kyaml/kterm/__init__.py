"""Term language: parsing, printing, matching, evaluation and simplification."""

from .evaluate import canonical_map, compile_concrete, eval_concrete, word_bytes
from .lemmas import load_lemmas, parse_lemma, parse_lemmas
from .linear import delinearize, linearize
from .parser import TermSyntaxError, parse_term
from .printer import print_term
from .reasoning import Assumptions, interval, unsat
from .rewrite import Bindings, match_pattern, substitute
from .simplify import Lemma, LemmaError, NonTermination, Simplifier, negate, simplify
from .terms import (
    ANY,
    BOOL,
    BYTES,
    EMPTY_BUF,
    EMPTY_MAP,
    FALSE,
    INT,
    LIST,
    MAP,
    POW160,
    POW256,
    TRUE,
    WILDCARD,
    WORD_MAX,
    Apply,
    ArityMismatch,
    Buf,
    BufConcat,
    FunctionSymbol,
    IntLit,
    SortMismatch,
    StrLit,
    SymVar,
    Term,
    TermError,
    Tuple,
    UnboundVariable,
    UnknownSymbol,
    app,
    boolean,
    free_vars,
    is_false,
    is_true,
    lit,
    lookup,
    sort_of,
    subterms,
)

__all__ = [name for name in dir() if not name.startswith("_")]
