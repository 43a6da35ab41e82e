import itertools
import math
import random

import pytest

from cogpat.metagraph import (
    EDGE,
    NODE,
    BindingError,
    EmptySupportError,
    CanonicalizationError,
    MgIntegrityError,
    MgTypeError,
    TruthValue,
    TypedMetagraph,
    canonical_form,
    join,
    sample_atoms,
    slot_ref,
    submetagraph,
)


def chi_square_2(counts, probs, total):
    return sum((c - p * total) ** 2 / (p * total) for c, p in zip(counts, probs))


class TestTruthValue:
    def test_count_and_beta(self):
        tv = TruthValue(0.8, 0.5)
        assert tv.n == pytest.approx(1.0)
        a, b = tv.beta_params
        assert a == pytest.approx(1.8)
        assert b == pytest.approx(1.2)
        assert a >= 1 and b >= 1

    def test_zero_confidence(self):
        tv = TruthValue(0.3, 0.0)
        assert tv.n == 0.0
        assert tv.beta_params == (1.0, 1.0)

    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            TruthValue(1.2, 0.5)
        with pytest.raises(ValueError):
            TruthValue(0.5, 1.0)

    def test_evidence_scaling_constant(self):
        tv = TruthValue(0.5, 0.5, k=10.0)
        assert tv.n == pytest.approx(10.0)

    def test_from_count_roundtrip(self):
        tv = TruthValue.from_count(0.7, 3.0)
        assert tv.n == pytest.approx(3.0)


class TestAddAtom:
    def test_first_insertion(self):
        mg = TypedMetagraph()
        assert mg.version == 0
        i = mg.add_node("A")
        assert i == 0
        assert mg.version == 1

    def test_well_formed_edge(self):
        mg = TypedMetagraph()
        a = mg.add_node("Concept")
        b = mg.add_node("Concept")
        e = mg.add_edge("Inheritance", [a, b])
        assert e == 2
        assert mg.atom(e).targets == (0, 1)

    def test_broken_reference(self):
        mg = TypedMetagraph()
        mg.add_node("Concept")
        mg.add_node("Concept")
        with pytest.raises(MgIntegrityError):
            mg.add_edge("Inheritance", [0, 9])

    def test_version_strictly_increases(self):
        mg = TypedMetagraph()
        seen = [mg.version]
        mg.add_node("A")
        seen.append(mg.version)
        mg.add_node("B")
        seen.append(mg.version)
        mg.set_sti(0, 1.0)
        seen.append(mg.version)
        assert seen == sorted(set(seen))


class TestJoin:
    def edge_with_slot(self):
        m = TypedMetagraph()
        s = m.declare_dangling("Concept")
        a = m.add_node("Concept")
        m.add_edge("Link", [a, slot_ref(s)])
        return m

    def test_full_binding(self):
        m1 = self.edge_with_slot()
        m2 = TypedMetagraph()
        m2.add_node("Concept")
        joined = join(m1, m2, {0: 0})
        assert len(joined.dangling) == 0
        assert len(joined) == 3
        # operands untouched
        assert len(m1.dangling) == 1
        assert len(m2) == 1

    def test_type_mismatch(self):
        m1 = TypedMetagraph()
        m1.declare_dangling("Number")
        m1.add_edge("Link", [slot_ref(0)])
        m2 = TypedMetagraph()
        m2.add_node("Concept")
        with pytest.raises(MgTypeError):
            join(m1, m2, {0: 0})

    def test_missing_slot(self):
        m1 = TypedMetagraph()
        m2 = TypedMetagraph()
        m2.add_node("Concept")
        with pytest.raises(BindingError):
            join(m1, m2, {3: 0})

    def test_unbound_slots_stay_dangling(self):
        m1 = TypedMetagraph()
        m1.declare_dangling("A")
        m1.declare_dangling("B")
        m2 = TypedMetagraph()
        m2.add_node("B")
        # bind nothing: both remain
        joined = join(m1, m2, {})
        assert [d.type_label for d in joined.dangling] == ["A", "B"]

    def test_associative_up_to_canonical_form(self):
        # three pieces: a has 2 slots, b and c are nodes; all binding orders
        def piece_a():
            m = TypedMetagraph()
            s0 = m.declare_dangling("Concept")
            s1 = m.declare_dangling("Concept")
            m.add_edge("Rel", [slot_ref(s0), slot_ref(s1)])
            return m

        def node_piece(label):
            m = TypedMetagraph()
            m.add_node("Concept", tv=TruthValue(0.5, 0.5) if label else None)
            return m

        a, b, c = piece_a(), node_piece(False), node_piece(True)
        # (a+b)+c : bind a slot0 to b, then remaining slot (now slot 0) to c
        left = join(join(a, b, {0: 0}), c, {0: 0})
        # a+(b stays), alternative order: bind slot1 first
        right = join(join(a, c, {1: 0}), b, {0: 0})
        assert canonical_form(left) == canonical_form(right)


class TestCanonicalForm:
    def test_empty(self):
        assert canonical_form(TypedMetagraph()) == "MG()"

    def test_id_permutation_invariance(self):
        def build(order):
            mg = TypedMetagraph()
            ids = {}
            for name in order:
                ids[name] = mg.add_node("C" + name)
            mg.add_edge("E", [ids["a"], ids["b"]])
            return mg

        tokens = {canonical_form(build(o)) for o in itertools.permutations("abc")}
        assert len(tokens) == 1

    def test_ordered_targets_distinguished(self):
        m1 = TypedMetagraph()
        a = m1.add_node("A")
        b = m1.add_node("B")
        m1.add_edge("E", [a, b])
        m2 = TypedMetagraph()
        a2 = m2.add_node("A")
        b2 = m2.add_node("B")
        m2.add_edge("E", [b2, a2])
        assert canonical_form(m1) != canonical_form(m2)

    def test_exhaustive_on_six_atom_fixture(self):
        # 4 same-typed nodes + 2 edges; relabel ids every way
        def build(perm):
            mg = TypedMetagraph()
            for _ in range(4):
                mg.add_node("N")
            p = list(perm)
            mg.add_edge("E", [p[0], p[1]])
            mg.add_edge("E", [p[1], p[2]])
            return mg

        base = canonical_form(build([0, 1, 2, 3]))
        # same shape under node renaming must canonicalize identically
        for perm in itertools.permutations(range(4)):
            assert canonical_form(build(perm)) == base

    def test_rejects_large(self):
        mg = TypedMetagraph()
        for _ in range(13):
            mg.add_node("N")
        with pytest.raises(CanonicalizationError):
            canonical_form(mg)


class TestSampleAtoms:
    def test_unit_support(self):
        mg = TypedMetagraph()
        mg.add_node("A")
        assert sample_atoms(mg, {0: 2.0}, 5, seed=1) == [0] * 5

    def test_frequencies_chi_square(self):
        mg = TypedMetagraph()
        mg.add_node("A")
        mg.add_node("B")
        draws = sample_atoms(mg, {0: 1.0, 1: 3.0}, 10000, seed=42)
        counts = [draws.count(0), draws.count(1)]
        # chi-square with 1 dof; 3-sigma-ish bound ~ 9
        assert chi_square_2(counts, [0.25, 0.75], 10000) < 9.0

    def test_empty_support(self):
        mg = TypedMetagraph()
        mg.add_node("A")
        with pytest.raises(EmptySupportError):
            sample_atoms(mg, {0: 0.0}, 1, seed=0)

    def test_seed_reproducible(self):
        mg = TypedMetagraph()
        for _ in range(5):
            mg.add_node("A")
        w = {i: i + 1.0 for i in range(5)}
        assert sample_atoms(mg, w, 100, seed=7) == sample_atoms(mg, w, 100, seed=7)


class TestSnapshot:
    def test_mutation_not_visible(self):
        mg = TypedMetagraph()
        mg.add_node("A")
        view = mg.snapshot()
        mg.add_node("B")
        assert len(view) == 1
        assert len(mg) == 2

    def test_snapshot_of_snapshot(self):
        mg = TypedMetagraph()
        mg.add_node("A")
        v1 = mg.snapshot()
        v2 = v1.snapshot()
        assert v1.stamp == v2.stamp

    def test_staleness(self):
        mg = TypedMetagraph()
        mg.add_node("A")
        view = mg.snapshot()
        assert not view.is_stale()
        mg.add_node("B")
        assert view.is_stale()
        assert view.stamp < mg.version


class TestFuzzIntegrity:
    def test_random_ops_keep_referential_integrity(self):
        rng = random.Random(13)
        mg = TypedMetagraph()
        for _ in range(10_000):
            op = rng.random()
            if op < 0.5 or not mg.atoms:
                mg.add_node(rng.choice("ABC"))
            elif op < 0.9:
                ids = sorted(mg.atoms)
                k = rng.randint(1, min(3, len(ids)))
                mg.add_edge("E", [rng.choice(ids) for _ in range(k)])
            else:
                mg.declare_dangling(rng.choice("ABC"))
        for a in mg.atoms.values():
            for t in a.targets:
                if t >= 0:
                    assert t in mg.atoms
                else:
                    assert -t - 1 < len(mg.dangling)


class TestSubmetagraph:
    def test_external_targets_become_slots(self):
        mg = TypedMetagraph()
        a = mg.add_node("A")
        b = mg.add_node("B")
        e = mg.add_edge("E", [a, b])
        sub = submetagraph(mg, [b, e])
        assert len(sub) == 2
        assert len(sub.dangling) == 1
        assert sub.dangling[0].type_label == "A"


class TestJsonRoundTrip:
    def test_lossless(self):
        mg = TypedMetagraph()
        mg.declare_dangling("Concept")
        a = mg.add_node("Concept", tv=TruthValue(0.8, 0.5), sti=1.5)
        b = mg.add_node("Concept")
        mg.add_edge("Inheritance", [a, b])
        mg.add_edge("E", [a, slot_ref(0)])
        text = mg.to_json()
        back = TypedMetagraph.from_json(text)
        assert back.to_json() == text
        assert canonical_form(back) == canonical_form(mg)
