"""
Randomized cross-check of the pre-linker against the brute-force oracle.

For every dispatch-type tuple, the pole lookup plus the selection matrix must
pick what scanning every specialization picks, and realign each argument to
the subobject the oracle locates by walking inheritance paths.
"""

import random

import pytest

from mmlang.hierarchy import build, rttable
from mmlang.models.diagnostics import Code
from mmlang.oracle import AMBIGUOUS, Oracle
from mmlang.prelink import build_dispatch

SEEDS = range(500)


def _realigned_offset(h, structures, entry, position, t):
    anchor = entry.anchor(position)
    if anchor is not None:
        start = rttable(h, t.name).ancestor_offset(h.class_id(anchor))
        return start + entry.offsets[position]
    vector = structures.realign_vectors[position][h.dispatch_id(t)]
    return vector + entry.offsets[position]


@pytest.mark.parametrize("seed", SEEDS)
def test_subtype_answers_match_path_counting(seed, make_classes):
    rng = random.Random(seed)
    classes = make_classes(rng)
    h = build(classes)
    oracle = Oracle(classes)
    for sub in h.names:
        for sup in h.names:
            answer = h.subtype(sub, sup)
            identities = oracle.subobjects(sub, sup)
            assert len(answer.offsets) == len(identities), (sub, sup)
            expected = sorted(oracle.offset(sub, identity) for identity in identities)
            assert list(answer.offsets) == expected, (sub, sup)


@pytest.mark.parametrize("seed", SEEDS)
def test_dispatch_tables_match_oracle(seed, make_classes, make_family):
    rng = random.Random(seed)
    classes = make_classes(rng)
    arity = rng.randint(1, 2)
    specs = make_family(rng, classes, arity, rng.randint(1, 4))
    h = build(classes)
    spec_ids = {s.signature_key(): i for i, s in enumerate(specs)}
    structures, diagnostics = build_dispatch(h, specs[0].key, specs, spec_ids)
    codes = {d.code for d in diagnostics}
    oracle = Oracle(classes)

    for args, verdict in oracle.full_table(specs).items():
        poles = tuple(structures.pole_vectors[i][h.dispatch_id(t)] for i, t in enumerate(args))
        if None in poles:
            assert verdict is None, args
            continue
        entry = structures.entry(poles)
        if verdict is None:
            assert entry.is_trap, args
        elif verdict is AMBIGUOUS:
            assert entry.is_trap, args
            assert Code.E_LINK_AMBIGUOUS in codes
        else:
            winner = specs[verdict]
            assert entry.spec == spec_ids[winner.signature_key()], args
            for i, (t, param) in enumerate(zip(args, winner.dispatch_types)):
                expected = oracle.expected_offset(t.name, param.name)
                assert _realigned_offset(h, structures, entry, i, t) == expected, (args, i)

    blocked = any(oracle.blocked_types(specs, i) for i in range(arity))
    assert (Code.E_AMBIG_POLE in codes) == blocked
