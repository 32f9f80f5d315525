"""Finite relations between two carriers."""

from __future__ import annotations

import re
from typing import Callable, FrozenSet, Hashable, Iterable, Optional, Set, Tuple


class RelationError(ValueError):
    pass


class Relation:
    """A relation given by explicit pairs or by a predicate.

    ``image``/``preimage``, when present, list the values related to a given
    value; they let lifting searches extend their window beyond the two
    supports.  ``None`` means the relation cannot enumerate them.
    """

    def __init__(self, pred: Callable[[Hashable, Hashable], bool], name: str = "custom",
                 image: Optional[Callable[[Hashable], Iterable]] = None,
                 preimage: Optional[Callable[[Hashable], Iterable]] = None,
                 pairs: Optional[FrozenSet[Tuple[Hashable, Hashable]]] = None):
        self.pred = pred
        self.name = name
        self.image = image
        self.preimage = preimage
        self.pairs = pairs

    def __call__(self, a, b) -> bool:
        return bool(self.pred(a, b))

    def __repr__(self) -> str:
        return f"Relation({self.name})"

    @classmethod
    def explicit(cls, pairs: Iterable[Tuple[Hashable, Hashable]], name: str = "explicit") -> "Relation":
        ps = frozenset((a, b) for a, b in pairs)
        fwd: dict = {}
        bwd: dict = {}
        for a, b in ps:
            fwd.setdefault(a, set()).add(b)
            bwd.setdefault(b, set()).add(a)
        return cls(lambda a, b: (a, b) in ps, name,
                   image=lambda a: fwd.get(a, ()), preimage=lambda b: bwd.get(b, ()),
                   pairs=ps)

    @classmethod
    def predicate(cls, pred: Callable[[Hashable, Hashable], bool], name: str = "predicate") -> "Relation":
        return cls(pred, name)


def equality() -> Relation:
    return Relation(lambda a, b: a == b, "eq", image=lambda a: (a,), preimage=lambda b: (b,))


def shift(k: int) -> Relation:
    """x1 + k = x2."""
    return Relation(lambda a, b: a + k == b, f"shift:{k}",
                    image=lambda a: (a + k,), preimage=lambda b: (b - k,))


def difference(c: int) -> Relation:
    """x1 - x2 = c."""
    return Relation(lambda a, b: a - b == c, f"diff:{c}",
                    image=lambda a: (a - c,), preimage=lambda b: (b + c,))


def pointwise(v) -> Relation:
    """x1 = v implies x2 = v."""
    return Relation(lambda a, b: a != v or b == v, f"impl:{v}",
                    image=lambda a: (v,), preimage=lambda b: (v,))


def event_implication(e1: Callable, e2: Callable, name: str = "event") -> Relation:
    """x1 in E1 implies x2 in E2."""
    return Relation(lambda a, b: (not e1(a)) or bool(e2(b)), name)


_BUILTIN = re.compile(r"(eq)|(shift|diff|impl):(-?\d+)")


def parse_relation(spec: str) -> Relation:
    """Built-in relation from its name: ``eq``, ``shift:k``, ``diff:c``, ``impl:b``."""
    m = _BUILTIN.fullmatch(spec.strip())
    if not m:
        raise RelationError(f"unknown relation {spec!r}")
    if m.group(1):
        return equality()
    arg = int(m.group(3))
    return {"shift": shift, "diff": difference, "impl": pointwise}[m.group(2)](arg)


def reachable(rel: Relation, values: Iterable[Hashable], forward: bool = True) -> Set[Hashable]:
    fn = rel.image if forward else rel.preimage
    out: Set[Hashable] = set()
    if fn is None:
        return out
    for v in values:
        out.update(fn(v))
    return out
