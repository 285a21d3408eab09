"""Finite words, coding trees and leveled vertical graphs.

Words are tuples of 1-based symbols; the empty tuple is the root.  A
:class:`VerticalGraph` stores levels of hashable vertices together with the
parent/child relation between consecutive levels.  Vertices are words for
coding trees (the canonical member word for quotient classes) and plain
strings for hand-written graphs.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .errors import InvalidInput, InvalidParameter
from .scalars import is_exact

log = logging.getLogger(__name__)

Word = tuple
ROOT: Word = ()
ROOT_LABEL = "ϑ"


def word_str(w: Word) -> str:
    """Compact text form: ``'112'``; symbols above 9 are dot-separated."""
    if not w:
        return ROOT_LABEL
    if all(0 <= s <= 9 for s in w):
        return "".join(map(str, w))
    # a trailing dot marks single multi-digit symbols such as "10."
    return ".".join(map(str, w)) + ("." if len(w) == 1 else "")


def parse_word(s: str) -> Word:
    s = s.strip()
    if s in (ROOT_LABEL, ""):
        return ROOT
    if "." in s:
        return tuple(int(t) for t in s.split(".") if t)
    if not s.isdigit():
        raise InvalidInput(f"not a word: {s!r}")
    return tuple(int(c) for c in s)


def is_prefix(u: Word, w: Word) -> bool:
    return len(u) <= len(w) and w[: len(u)] == u


@dataclass(frozen=True)
class WeightVector:
    """Weights s_1..s_N in (0, 1); exact values keep regrouping ties reliable."""

    s: tuple

    def __post_init__(self):
        if len(self.s) < 2:
            raise InvalidParameter("need at least two weights")
        for v in self.s:
            if not 0 < v < 1:
                raise InvalidParameter(f"weight {v} outside (0, 1)")

    @property
    def n(self) -> int:
        return len(self.s)

    @property
    def s_min(self):
        return min(self.s)

    @property
    def s_max(self):
        return max(self.s)

    def weight(self, w: Word):
        out = Fraction(1)
        for j in w:
            out = out * self.s[j - 1]
        return out

    def is_homogeneous(self) -> bool:
        return all(v == self.s[0] for v in self.s)


@dataclass(frozen=True, eq=False)
class VerticalGraph:
    levels: tuple
    parents: Mapping
    children: Mapping
    level_of: Mapping
    kind: str = "words"          # "words" or "labels"
    alphabet: int | None = None
    members: Mapping | None = None   # quotient classes: vertex -> member words
    _order: Mapping = field(default=None, repr=False)

    # -- construction ---------------------------------------------------
    @classmethod
    def from_levels(cls, levels: Sequence[Sequence[Hashable]], parents: Mapping[Hashable, Sequence[Hashable]],
                    kind: str = "words", alphabet: int | None = None,
                    members: Mapping | None = None) -> "VerticalGraph":
        if not levels or len(levels[0]) != 1:
            raise InvalidInput("level 0 must contain exactly the root")
        lv = tuple(tuple(level) for level in levels)
        level_of = {}
        for n, level in enumerate(lv):
            for v in level:
                if v in level_of:
                    raise InvalidInput(f"vertex {v!r} appears twice")
                level_of[v] = n
        order = {}
        for level in lv:
            for i, v in enumerate(level):
                order[v] = i
        par = {lv[0][0]: ()}
        children: dict = {v: [] for v in level_of}
        for n, level in enumerate(lv[1:], start=1):
            for v in level:
                ps = tuple(sorted(set(parents.get(v, ())), key=order.__getitem__))
                if not ps:
                    raise InvalidInput(f"vertex {v!r} at level {n} has no parent")
                for p in ps:
                    if level_of.get(p) != n - 1:
                        raise InvalidInput(f"parent {p!r} of {v!r} is not on level {n - 1}")
                    children[p].append(v)
                par[v] = ps
        ch = {v: tuple(sorted(c, key=order.__getitem__)) for v, c in children.items()}
        for n, level in enumerate(lv[:-1]):
            for v in level:
                if not ch[v]:
                    log.warning("vertex %r at level %d has no children", v, n)
        mem = MappingProxyType(dict(members)) if members is not None else None
        return cls(lv, MappingProxyType(par), MappingProxyType(ch), MappingProxyType(level_of),
                   kind, alphabet, mem, MappingProxyType(order))

    # -- queries --------------------------------------------------------
    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def root(self):
        return self.levels[0][0]

    def __contains__(self, v) -> bool:
        return v in self.level_of

    def __len__(self) -> int:
        return len(self.level_of)

    def vertices(self) -> Iterable:
        for level in self.levels:
            yield from level

    def index(self, v) -> int:
        """Position of v inside its level."""
        return self._order[v]

    def is_tree(self) -> bool:
        return all(len(p) <= 1 for p in self.parents.values())

    def label(self, v) -> str:
        return word_str(v) if self.kind == "words" else str(v)

    def sort_key(self, v):
        return (self.level_of[v], self._order[v])

    def truncate(self, depth: int) -> "VerticalGraph":
        if depth >= self.depth:
            return self
        levels = self.levels[: depth + 1]
        keep = {v for level in levels for v in level}
        members = None if self.members is None else {v: self.members[v] for v in keep}
        return VerticalGraph.from_levels(levels, {v: self.parents[v] for v in keep}, self.kind,
                                         self.alphabet, members)

    def same_structure(self, other: "VerticalGraph") -> bool:
        return (self.levels == other.levels and dict(self.parents) == dict(other.parents)
                and self.kind == other.kind
                and (dict(self.members or {}) == dict(other.members or {})))


def build_full_tree(N: int, D: int) -> VerticalGraph:
    """The N-ary coding tree truncated at depth D."""
    if N < 2 or D < 0:
        raise InvalidParameter(f"need N >= 2 and D >= 0, got N={N}, D={D}")
    levels = [list(itertools.product(range(1, N + 1), repeat=n)) for n in range(D + 1)]
    parents = {w: (w[:-1],) for level in levels[1:] for w in level}
    return VerticalGraph.from_levels(levels, parents, "words", N)


def build_regrouped_tree(s: WeightVector | Sequence, D: int) -> VerticalGraph:
    """Words regrouped so that level n holds the words whose weight first drops to <= s_min^n."""
    if not isinstance(s, WeightVector):
        s = WeightVector(tuple(s))
    if D < 0:
        raise InvalidParameter(f"depth must be >= 0, got {D}")
    N = s.n
    if s.is_homogeneous():
        return build_full_tree(N, D)
    s_min = s.s_min
    levels = [[ROOT]]
    weights = {ROOT: Fraction(1)}
    parents = {}
    for n in range(1, D + 1):
        bound = s_min ** n
        nxt = []
        for x in levels[-1]:
            stack = [(x, weights[x])]
            found = []
            while stack:
                w, sw = stack.pop()
                for j in range(1, N + 1):
                    v, sv = w + (j,), sw * s.s[j - 1]
                    if sv <= bound:
                        found.append(v)
                        weights[v] = sv
                    else:
                        stack.append((v, sv))
            for v in found:
                parents[v] = (x,)
            nxt.extend(found)
        if not nxt:
            raise InvalidParameter(f"level {n} of the regrouped tree is empty")
        levels.append(sorted(nxt))
    return VerticalGraph.from_levels(levels, parents, "words", N)


def _check_exact(value, word):
    if not is_exact(value):
        raise InvalidParameter(
            f"evaluation of {word_str(word)} returned an inexact value {value!r}; "
            "quotienting needs exact equality")


def quotient_by_evaluation(tree: VerticalGraph, evaluate: Callable[[Word], object]) -> VerticalGraph:
    """Merge same-level words with equal exact evaluation.

    Each class is named by its lexicographically least member; vertical
    edges are induced from all member edges, so the result may fail to be a tree.
    """
    if tree.kind != "words":
        raise InvalidParameter("quotient needs a word-labelled graph")
    if tree.members is not None:
        raise InvalidParameter("graph is already a quotient")
    class_of: dict = {}
    members: dict = {}
    levels = []
    for level in tree.levels:
        groups: dict = {}
        for w in level:
            val = evaluate(w)
            _check_exact(val, w)
            groups.setdefault(val, []).append(w)
        reps = []
        for ms in groups.values():
            ms.sort()
            rep = ms[0]
            for m in ms:
                class_of[m] = rep
            members[rep] = tuple(ms)
            reps.append(rep)
        levels.append(sorted(reps))
    parents = {}
    for level in levels[1:]:
        for rep in level:
            ps = set()
            for m in members[rep]:
                for p in tree.parents[m]:
                    ps.add(class_of[p])
            parents[rep] = tuple(sorted(ps))
    return VerticalGraph.from_levels(levels, parents, "words", tree.alphabet, members)


def descendants(g: VerticalGraph, x, m: int, strict: bool = False) -> frozenset:
    """The m-th descendant set of x; negative m gives predecessors."""
    if x not in g:
        raise InvalidInput(f"{x!r} is not a vertex")
    target = g.level_of[x] + m
    if target < 0 or target > g.depth:
        if strict:
            raise InvalidParameter(f"level {target} outside 0..{g.depth}")
        log.warning("descendant level %d outside 0..%d; returning empty set", target, g.depth)
        return frozenset()
    rel = g.children if m >= 0 else g.parents
    cur = {x}
    for _ in range(abs(m)):
        cur = {y for v in cur for y in rel[v]}
    return frozenset(cur)


def ancestors_at(g: VerticalGraph, x, level: int) -> frozenset:
    return descendants(g, x, level - g.level_of[x])


# -- serialization ------------------------------------------------------

def _fmt_vertex(g: VerticalGraph, v) -> str:
    return g.label(v)


def dump_lines(g: VerticalGraph) -> tuple[list[str], dict]:
    """Vertex lines ``level, id, label, parent ids[, members]`` and the id table."""
    ids = {}
    for v in g.vertices():
        ids[v] = len(ids)
    lines = [f"# kind: {g.kind}"]
    if g.alphabet is not None:
        lines.append(f"# alphabet: {g.alphabet}")
    for n, level in enumerate(g.levels):
        for v in level:
            label = _fmt_vertex(g, v)
            if "\t" in label or "\n" in label:
                raise InvalidInput(f"label {label!r} contains a tab or newline")
            row = [str(n), str(ids[v]), label, ",".join(str(ids[p]) for p in g.parents[v])]
            if g.members is not None:
                row.append(",".join(word_str(m) for m in g.members[v]))
            lines.append("\t".join(row))
    return lines, ids


def dumps(g: VerticalGraph) -> str:
    return "\n".join(dump_lines(g)[0]) + "\n"


def parse_lines(lines: Iterable[str]):
    """Parse vertex lines; returns (graph, id table, remaining non-vertex rows)."""
    kind, alphabet = "words", None
    rows, other = [], []
    for raw in lines:
        line = raw.rstrip("\n")
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            if key.strip() == "kind":
                kind = val.strip()
            elif key.strip() == "alphabet":
                alphabet = int(val)
            continue
        parts = line.split("\t")
        if parts[0].isdigit():
            rows.append(parts)
        else:
            other.append(parts)
    by_id, levels, parent_ids, members = {}, [], {}, {}
    has_members = any(len(r) >= 5 for r in rows)
    for r in rows:
        n, vid, label = int(r[0]), int(r[1]), r[2]
        v = parse_word(label) if kind == "words" else label
        by_id[vid] = v
        while len(levels) <= n:
            levels.append([])
        levels[n].append(v)
        parent_ids[v] = [int(t) for t in r[3].split(",") if t] if len(r) > 3 else []
        if has_members:
            members[v] = tuple(parse_word(t) for t in r[4].split(",")) if len(r) > 4 and r[4] else (v,)
    parents = {v: tuple(by_id[i] for i in ps) for v, ps in parent_ids.items()}
    g = VerticalGraph.from_levels(levels, parents, kind, alphabet, members if has_members else None)
    return g, by_id, other


def loads(text: str) -> VerticalGraph:
    g, _, other = parse_lines(text.splitlines())
    if other:
        raise InvalidInput(f"unexpected record {other[0][0]!r} in a vertical graph")
    return g
