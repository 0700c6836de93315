import random

from viewforge.homomorphism import (
    all_homomorphisms,
    cq_homomorphism,
    enumerate_matches,
    find_homomorphism,
    query_holds,
    verify_homomorphism,
)
from viewforge.model import (
    Atom,
    ConjunctiveQuery,
    Constant,
    Instance,
    NullFactory,
    RelationSymbol,
    Variable,
    build_canondb,
)

from bruteforce import naive_answers, naive_homomorphisms

R = RelationSymbol("R", 2, ("s",))
S = RelationSymbol("S", 1, ("s",))
x, y = Variable("x"), Variable("y")
a, b, c = Constant("a"), Constant("b"), Constant("c")


class TestFindHomomorphism:
    def test_binary_atom_binds_both(self):
        h = find_homomorphism([Atom(R, (x, y))], Instance.of([Atom(R, (a, b))]))
        assert h == {x: a, y: b}

    def test_repeated_variable_blocks(self):
        h = find_homomorphism([Atom(R, (x, x))], Instance.of([Atom(R, (a, b))]))
        assert h is None

    def test_self_loop_secret_misses_square_canondb(self, square):
        p1 = square.secrets["P1"]
        q = square.queries["Q"]
        assert find_homomorphism(p1.atoms, build_canondb(q)) is None

    def test_pinned_entries_are_respected(self):
        i = Instance.of([Atom(R, (a, b)), Atom(R, (b, c))])
        h = find_homomorphism([Atom(R, (x, y))], i, pinned={x: b})
        assert h == {x: b, y: c}

    def test_rigid_constant_pinned_away_fails(self):
        i = Instance.of([Atom(R, (a, b))])
        assert find_homomorphism([Atom(R, (a, y))], i, pinned={a: b}) is None


class TestEnumerateMatches:
    def test_set_semantics_dedupes(self):
        q = ConjunctiveQuery("q", (x,), (Atom(R, (x, y)),))
        i = Instance.of([Atom(R, (a, b)), Atom(R, (a, c))])
        assert enumerate_matches(q, i) == [(a,)]

    def test_boolean_query_on_own_canondb(self, square):
        q = square.queries["Q"]
        assert enumerate_matches(q, build_canondb(q)) == [()]

    def test_boolean_query_on_collapsed_loop(self, square):
        q = square.queries["Q"]
        schema = square.schema
        loop = Instance.of([
            Atom(schema.relation("T"), (a, a)),
            Atom(schema.relation("S"), (a, a)),
            Atom(schema.relation("P"), (a, a)),
        ])
        assert enumerate_matches(q, loop) == [()]
        assert query_holds(q, loop)

    def test_empty_query_always_holds(self):
        q = ConjunctiveQuery("t", (), ())
        assert enumerate_matches(q, Instance.of([])) == [()]


class TestVerifyHomomorphism:
    def test_accepts_found_mapping(self):
        i = Instance.of([Atom(R, (a, b))])
        atoms = [Atom(R, (x, y))]
        h = find_homomorphism(atoms, i)
        assert verify_homomorphism(h, atoms, i)

    def test_rejects_wrong_mapping(self):
        i = Instance.of([Atom(R, (a, b))])
        assert not verify_homomorphism({x: b, y: a}, [Atom(R, (x, y))], i)

    def test_explicit_entry_moves_a_constant(self):
        i = Instance.of([Atom(R, (b, b))])
        assert verify_homomorphism({a: b, y: b}, [Atom(R, (a, y))], i)


class TestCqHomomorphism:
    def test_containment_direction(self):
        loopy = ConjunctiveQuery("l", (), (Atom(R, (x, x)),))
        broad = ConjunctiveQuery("b", (), (Atom(R, (x, y)),))
        assert cq_homomorphism(broad, loopy) is not None
        assert cq_homomorphism(loopy, broad) is None

    def test_identity_on_free_variables(self):
        z = Variable("z")
        q1 = ConjunctiveQuery("a", (x,), (Atom(R, (x, y)),))
        q2 = ConjunctiveQuery("b", (x,), (Atom(R, (x, z)), Atom(S, (z,))))
        h = cq_homomorphism(q1, q2)
        assert h is not None and h[x] == Constant("c_x")
        swapped_head = ConjunctiveQuery("c", (y,), (Atom(R, (y, x)),))
        assert cq_homomorphism(q1, swapped_head) is None


def _random_query(rng, relations, n_atoms, n_vars):
    pool = [Variable(f"v{i}") for i in range(n_vars)]
    atoms = tuple(
        Atom(r, tuple(rng.choice(pool) for _ in range(r.arity)))
        for r in (rng.choice(relations) for _ in range(n_atoms)))
    return ConjunctiveQuery("q", (), atoms)


def _random_instance(rng, relations, domain, n_facts):
    return Instance.of(
        Atom(r, tuple(rng.choice(domain) for _ in range(r.arity)))
        for r in (rng.choice(relations) for _ in range(n_facts)))


class TestAgainstBruteForce:
    def test_matches_agree_on_small_instances(self):
        rng = random.Random(11)
        relations = [R, S]
        domain = [a, b, c, Constant("d")]
        for _ in range(60):
            q = _random_query(rng, relations, rng.randint(1, 3), 3)
            free = [v for v in {v for at in q.atoms for v in at.variables()}]
            q = ConjunctiveQuery(
                "q", tuple(sorted(free, key=str)[:rng.randint(0, 2)]), q.atoms)
            i = _random_instance(rng, relations, domain, rng.randint(0, 4))
            assert frozenset(enumerate_matches(q, i)) == naive_answers(q, i)

    def test_all_homomorphisms_agree_with_naive(self):
        rng = random.Random(12)
        relations = [R, S]
        domain = [a, b, c]
        for _ in range(40):
            q = _random_query(rng, relations, rng.randint(1, 3), 3)
            i = _random_instance(rng, relations, domain, rng.randint(0, 4))
            fast = {tuple(sorted((str(k), str(v)) for k, v in h.items()))
                    for h in all_homomorphisms(q.atoms, i)}
            slow = {tuple(sorted((str(k), str(v)) for k, v in h.items()))
                    for h in naive_homomorphisms(q.atoms, i)}
            assert fast == slow


class TestComposition:
    def test_composed_image_lands_in_final_instance(self):
        rng = random.Random(13)
        relations = [R, S]
        consts = [a, b, c]
        for _ in range(30):
            src = _random_query(rng, relations, rng.randint(1, 3), 3).atoms
            nulls = NullFactory()
            mid_sub = {}
            for at in src:
                for v in at.variables():
                    if v not in mid_sub:
                        mid_sub[v] = (nulls.fresh(v.name) if rng.random() < 0.5
                                      else rng.choice(consts))
            mid = Instance.of(
                Atom(at.relation, tuple(mid_sub.get(t, t) for t in at.args))
                for at in src)
            h = find_homomorphism(src, mid)
            assert h is not None
            end_sub = {n: rng.choice(consts)
                       for f in mid for n in f.args if n not in consts}
            end = Instance.of(
                Atom(f.relation, tuple(end_sub.get(t, t) for t in f.args))
                for f in mid)
            g = find_homomorphism(list(mid.facts), end)
            assert g is not None
            composed = {v: g.get(t, t) for v, t in h.items()}
            assert verify_homomorphism(composed, src, end)
