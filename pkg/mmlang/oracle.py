"""
Reference implementation of dispatch, used to cross-check the linked tables.

Nothing here shares code with the hierarchy layout or the pre-linker: subtype
answers come from enumerating inheritance paths, and selection scans every
specialization for every argument tuple.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Optional, Sequence, Union

from mmlang.models.errors import SizeLimitExceeded
from mmlang.models.ir import Specialization
from mmlang.models.types import ClassEntry, TypeRef
from mmlang.utils.config import get_settings


class _Ambiguous:
    def __repr__(self) -> str:
        return "AMBIGUOUS"


AMBIGUOUS = _Ambiguous()
Verdict = Union[int, _Ambiguous, None]


class Oracle:
    """
    Brute-force view of a set of classes.

    A subobject is identified by the inheritance path that reaches it, cut at
    the last virtual edge: everything reached through the same virtual base is
    shared.
    """

    def __init__(self, classes: Iterable[ClassEntry]):
        self.classes = {c.name: c for c in classes}
        self.names = tuple(sorted(self.classes))
        self._subobjects: dict[str, list[tuple]] = {}

    def _paths(self, name: str) -> list[tuple]:
        """Identities of every subobject of `name`: (virtual base or None, class chain)."""
        if name not in self._subobjects:
            found = [(None, (name,))]
            for parent in self.classes[name].parents:
                for anchor, chain in self._paths(parent.name):
                    if anchor is None and parent.is_virtual:
                        found.append((parent.name, chain))
                    elif anchor is None:
                        found.append((None, (name, *chain)))
                    else:
                        found.append((anchor, chain))
            self._subobjects[name] = found
        return self._subobjects[name]

    def subobjects(self, sub: str, sup: str) -> list[tuple]:
        return sorted({p for p in self._paths(sub) if p[1][-1] == sup}, key=repr)

    def count(self, sub: str, sup: str) -> int:
        return len(self.subobjects(sub, sup))

    def dispatch_count(self, t: TypeRef, u: TypeRef) -> int:
        if t.is_const and not u.is_const:
            return 0
        return self.count(t.name, u.name)

    @property
    def universe(self) -> list[TypeRef]:
        return [TypeRef(name=n, is_const=c) for n in self.names for c in (False, True)]

    # ------------------------------------------------------------ offsets

    def _nv_size(self, name: str) -> int:
        entry = self.classes[name]
        return len(entry.fields) + sum(
            self._nv_size(p.name) for p in entry.parents if not p.is_virtual
        )

    def _virtual_bases(self, name: str) -> list[str]:
        """Parents before children; among the rest, smallest name first."""
        remaining = {anchor for anchor, _ in self._paths(name) if anchor is not None}
        order = []
        while remaining:
            ready = min(
                n for n in remaining if not any(m != n and self.count(n, m) for m in remaining)
            )
            order.append(ready)
            remaining.discard(ready)
        return order

    def offset(self, sub: str, identity: tuple) -> int:
        """Slot offset of the subobject `identity` inside a complete `sub` object."""
        anchor, chain = identity
        if anchor is None:
            start, walk = 0, chain
        else:
            start = self._nv_size(sub)
            for vbase in self._virtual_bases(sub):
                if vbase == anchor:
                    break
                start += self._nv_size(vbase)
            walk = chain
        for outer, inner in zip(walk, walk[1:]):
            for parent in self.classes[outer].parents:
                if parent.name == inner:
                    break
                if not parent.is_virtual:
                    start += self._nv_size(parent.name)
        return start

    def expected_offset(self, sub: str, sup: str) -> Optional[int]:
        """Offset of the unique `sup` subobject of `sub`, None when absent or ambiguous."""
        found = self.subobjects(sub, sup)
        if len(found) != 1:
            return None
        return self.offset(sub, found[0])

    # ------------------------------------------------------------ selection

    def _applies(self, spec: Specialization, args: Sequence[TypeRef]) -> bool:
        return all(self.dispatch_count(a, p) == 1 for a, p in zip(args, spec.dispatch_types))

    def _more_specific(self, s1: Specialization, s2: Specialization) -> bool:
        return all(
            self.dispatch_count(a, b) == 1 for a, b in zip(s1.dispatch_types, s2.dispatch_types)
        )

    def naive_select(
        self, specs: Sequence[Specialization], args: Sequence[TypeRef]
    ) -> Verdict:
        """Index in `specs` of the most specific applicable specialization."""
        indices = [i for i, s in enumerate(specs) if self._applies(s, args)]
        best = [
            i
            for i in indices
            if not any(
                j != i
                and self._more_specific(specs[j], specs[i])
                and not self._more_specific(specs[i], specs[j])
                for j in indices
            )
        ]
        if not best:
            return None
        if len(best) > 1:
            return AMBIGUOUS
        return best[0]

    def blocked_types(self, specs: Sequence[Specialization], position: int) -> list[TypeRef]:
        """
        Types at `position` of some argument tuple that selects nothing although
        a specialization would apply if an ambiguous subtype were accepted there.
        """
        arity = len(specs[0].dispatch_positions) if specs else 0
        found: set[TypeRef] = set()
        for args in itertools.product(self.universe, repeat=arity):
            if args[position] in found or self.naive_select(specs, args) is not None:
                continue
            for spec in specs:
                counts = [self.dispatch_count(a, p) for a, p in zip(args, spec.dispatch_types)]
                if all(counts) and counts[position] > 1:
                    found.add(args[position])
                    break
        return [t for t in self.universe if t in found]

    def full_table(
        self, specs: Sequence[Specialization], budget: Optional[int] = None
    ) -> dict[tuple[TypeRef, ...], Verdict]:
        """
        Selection for every dispatch-type tuple.

        Raises:
            SizeLimitExceeded: When the tuple count exceeds the budget
        """
        budget = budget or get_settings().oracle_tuple_budget
        arity = len(specs[0].dispatch_positions) if specs else 0
        universe = self.universe
        if len(universe) ** arity > budget:
            raise SizeLimitExceeded(
                f"{len(universe)}^{arity} argument tuples exceed the budget of {budget}"
            )
        return {
            args: self.naive_select(specs, args)
            for args in itertools.product(universe, repeat=arity)
        }


def naive_select(
    classes: Iterable[ClassEntry], specs: Sequence[Specialization], args: Sequence[TypeRef]
) -> Verdict:
    return Oracle(classes).naive_select(specs, args)


def full_table(
    classes: Iterable[ClassEntry], specs: Sequence[Specialization], budget: Optional[int] = None
) -> dict[tuple[TypeRef, ...], Verdict]:
    return Oracle(classes).full_table(specs, budget)
