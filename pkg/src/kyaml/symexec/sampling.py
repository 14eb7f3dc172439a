"""Concrete instances of claim preconditions.

Candidate values are boundary-first: 0, 1, the word maximum and the bounds
implied by the constraints come before harvested constants, which come
before random draws. Map variables are filled in from `select(M, k)` atoms,
sampled like integers. A slot pinned by an equation `slot ==Int T` is
computed from T instead of being drawn. Every instance is checked against
the constraints by concrete evaluation (rejection sampling).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from ..kterm import (
    BOOL,
    BYTES,
    INT,
    LIST,
    MAP,
    WORD_MAX,
    Apply,
    Assumptions,
    IntLit,
    SymVar,
    Term,
    TermError,
    eval_concrete,
    free_vars,
    subterms,
)
from ..kterm.standins import VALID_V

BASE_VALUES = (0, 1, 2, WORD_MAX, WORD_MAX - 1, 2**255)
SMALL_RANGE = 64


def harvest_constants(terms: Iterable[Term], extra: Iterable[int] = ()) -> list[int]:
    """Literals occurring in `terms` (and `extra`), each with its neighbours."""
    seen: set[int] = set()
    for t in terms:
        for s in subterms(t):
            if isinstance(s, IntLit):
                seen.add(s.value)
    seen.update(extra)
    seen.update(VALID_V)
    out = set()
    for v in seen:
        for d in (-1, 0, 1):
            if 0 <= v + d <= WORD_MAX:
                out.add(v + d)
    return sorted(out)


def _conjuncts(t: Term) -> list[Term]:
    if isinstance(t, Apply) and t.symbol == "andBool":
        return _conjuncts(t.args[0]) + _conjuncts(t.args[1])
    return [t]


def _is_slot(t: Term) -> bool:
    return (isinstance(t, SymVar) and t.sort == INT) or (
        isinstance(t, Apply) and t.symbol == "select" and isinstance(t.args[0], SymVar)
        and isinstance(t.args[1], IntLit))


def _definitions(constraints: Iterable[Term]) -> list[tuple[Term, Term]]:
    """(slot, defining term) pairs from top-level equations, no slot defined twice."""
    out: list[tuple[Term, Term]] = []
    defined: set[Term] = set()
    for c in constraints:
        for conj in _conjuncts(c):
            if not (isinstance(conj, Apply) and conj.symbol == "==Int"):
                continue
            for lhs, rhs in (conj.args, conj.args[::-1]):
                if not _is_slot(lhs) or lhs in defined or isinstance(rhs, IntLit):
                    continue
                inner = set(subterms(rhs))
                if lhs in inner or any(d in inner for d in defined) or any(lhs in set(subterms(r)) for _, r in out):
                    continue
                out.append((lhs, rhs))
                defined.add(lhs)
                break
    return out


def _signature_v_atoms(terms: Iterable[Term]) -> set[Term]:
    """Atoms passed as the V component of an ecrecover abstraction."""
    out = set()
    for t in terms:
        for s in subterms(t):
            if isinstance(s, Apply) and s.symbol in ("#ecrecEmpty", "#symEcrec"):
                out.add(s.args[1])
    return out


def _select_atoms(terms: Iterable[Term]) -> list[Term]:
    out = []
    for t in terms:
        for s in subterms(t):
            if (isinstance(s, Apply) and s.symbol == "select" and isinstance(s.args[0], SymVar)
                    and isinstance(s.args[1], IntLit) and s not in out):
                out.append(s)
    return out


@dataclass
class _Slot:
    """One sampled integer position: a variable or a `select(M, k)` atom."""

    term: Term
    lo: int
    hi: int
    boundary: list[int]
    hints: list[int]


class Sampler:
    def __init__(self, constraints: Sequence[Term], variables: Iterable[SymVar] = (),
                 constants: Iterable[int] = (), seed: int = 0):
        self.constraints = tuple(constraints)
        self.rng = random.Random(seed)
        vars_ = set(variables)
        for t in self.constraints:
            vars_ |= free_vars(t)
        self.variables = sorted(vars_, key=lambda v: v.name)
        self.constants = harvest_constants(self.constraints, constants)
        facts = Assumptions(self.constraints)
        self.slots: list[_Slot] = []
        self.definitions = _definitions(self.constraints)
        derived = {d for d, _ in self.definitions}
        atoms = [v for v in self.variables if v.sort == INT] + _select_atoms(self.constraints)
        v_atoms = _signature_v_atoms(self.constraints)
        for atom in atoms:
            if atom in derived:
                continue
            lo, hi = facts.atom_bounds(atom)
            lo = 0 if lo is None else max(lo, 0)
            hi = WORD_MAX if hi is None else min(hi, WORD_MAX)
            if lo > hi:  # contradictory bounds; fall back to the word range
                lo, hi = 0, WORD_MAX
            hints = [v for v in VALID_V if lo <= v <= hi] if atom in v_atoms else []
            boundary = [v for v in tuple(hints) + (lo, lo + 1, hi, hi - 1) + BASE_VALUES if lo <= v <= hi]
            self.slots.append(_Slot(atom, lo, hi, list(dict.fromkeys(boundary)), hints))

    def _pick(self, slot: _Slot, attempt: int, index: int) -> int:
        pool = slot.boundary
        if attempt < len(pool) * 2:
            # deterministic boundary-first sweep, staggered per slot
            return pool[(attempt + index) % len(pool)]
        roll = self.rng.random()
        if slot.hints and self.rng.random() < 0.5:
            return self.rng.choice(slot.hints)
        consts = [c for c in self.constants if slot.lo <= c <= slot.hi]
        if roll < 0.4 and consts:
            return self.rng.choice(consts)
        if roll < 0.6:
            return self.rng.choice(pool)
        if slot.hi - slot.lo <= SMALL_RANGE or roll < 0.85:
            return self.rng.randint(slot.lo, slot.hi)
        return self.rng.randint(0, WORD_MAX)

    def candidate(self, attempt: int) -> dict:
        env: dict = {}
        maps: dict[str, dict[int, int]] = {}
        for i, slot in enumerate(self.slots):
            value = self._pick(slot, attempt, i)
            if isinstance(slot.term, SymVar):
                env[slot.term.name] = value
            else:
                m, k = slot.term.args
                maps.setdefault(m.name, {})[k.value] = value
        for v in self.variables:
            if v.name in env:
                continue
            if v.sort == MAP:
                env[v.name] = {k: x for k, x in maps.get(v.name, {}).items() if x}
            elif v.sort == BOOL:
                env[v.name] = self.rng.random() < 0.5
            elif v.sort == BYTES:
                env[v.name] = bytes(self.rng.randrange(256) for _ in range(self.rng.choice((0, 4, 36))))
            elif v.sort == LIST:
                env[v.name] = tuple(self.rng.randint(0, 1) for _ in range(4))
            else:
                env[v.name] = self.rng.randint(0, WORD_MAX)
        for slot, rhs in self.definitions:
            try:
                value = eval_concrete(rhs, env)
            except (TermError, TypeError, ValueError, KeyError):
                continue
            if not isinstance(value, int) or isinstance(value, bool):
                continue
            if isinstance(slot, SymVar):
                env[slot.name] = value
            else:
                m, k = slot.args
                entries = dict(env.get(m.name, {}))
                if value:
                    entries[k.value] = value
                else:
                    entries.pop(k.value, None)
                env[m.name] = entries
        return env

    def satisfies(self, env: Mapping) -> bool:
        try:
            return all(eval_concrete(t, env) for t in self.constraints)
        except (TermError, TypeError, ValueError, KeyError):
            return False

    def samples(self, attempts: int) -> Iterator[dict]:
        """Constraint-satisfying environments found within `attempts` tries."""
        for attempt in range(attempts):
            env = self.candidate(attempt)
            if self.satisfies(env):
                yield env


def find_witness(constraints: Sequence[Term], attempts: int = 2000, seed: int = 0) -> dict | None:
    for env in Sampler(constraints, seed=seed).samples(attempts):
        return env
    return None
