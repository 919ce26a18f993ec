import itertools
import math

import numpy as np
import pytest

from dialectometry.atlas import Atlas, Citation, Concept, IsoglossFeature, Site, atlas_from_dict
from dialectometry.metrics import (
    METRICS,
    CostModel,
    IncompleteMatrixError,
    MetricRequirementError,
    MetricSpec,
    build_matrix,
    citation_distance,
    levenshtein,
    site_pair_distance,
)
from dialectometry.transcript import default_feature_system, default_inventory, phone_distance, tokenize

from oracles import edit_script_min_cost, textbook_edit_distance
from synth import random_atlas, random_form

INV = default_inventory()
FS = default_feature_system()


def seq(form):
    return tokenize(form, INV)


def test_worked_values():
    assert levenshtein(seq("AL:i"), seq("aLi"), CostModel.flat()) == 2
    assert levenshtein(seq("AL:i"), seq("khruh"), CostModel.flat()) == 5


def test_default_cost_model_is_flat():
    assert levenshtein(seq("AL:i"), seq("aLi")) == 2.0


def test_identity_and_empty():
    for cm in (CostModel.flat(), CostModel.feature()):
        assert levenshtein(seq("bulo:g"), seq("bulo:g"), cm) == 0
        assert levenshtein(seq(""), seq(""), cm) == 0
        assert levenshtein(seq(""), seq("abc"), cm) == 3 * cm.indel_cost
        assert levenshtein(seq("abc"), seq(""), cm) == 3 * cm.indel_cost


@pytest.mark.parametrize("kind", ["flat", "feature"])
def test_matches_edit_script_enumeration(kind):
    rng = np.random.default_rng(11)
    cm = CostModel.flat() if kind == "flat" else CostModel.feature(FS, 0.5)
    for _ in range(150):
        a, b = seq(random_form(rng, 5)), seq(random_form(rng, 5))
        expected = edit_script_min_cost(tuple(a), tuple(b), cm.substitution, cm.indel_cost)
        assert levenshtein(a, b, cm) == expected


def test_flat_matches_textbook_on_strings():
    rng = np.random.default_rng(5)
    for _ in range(200):
        s = "".join(rng.choice(list("abcd"), size=int(rng.integers(0, 8))))
        t = "".join(rng.choice(list("abcd"), size=int(rng.integers(0, 8))))
        assert levenshtein(tuple(s), tuple(t), CostModel.flat()) == textbook_edit_distance(s, t)


def test_symmetry():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a, b = seq(random_form(rng)), seq(random_form(rng))
        for cm in (CostModel.flat(), CostModel.feature()):
            assert levenshtein(a, b, cm) == levenshtein(b, a, cm)


def test_feature_substitution_uses_phone_distance():
    a, b = seq("t"), seq("d")
    d = phone_distance(a[0], b[0], FS)
    assert levenshtein(a, b, CostModel.feature(FS, 0.5)) == min(d, 1.0)


def test_cost_model_validation():
    with pytest.raises(ValueError):
        CostModel("flat", 2.0)
    with pytest.raises(ValueError):
        CostModel.feature(FS, 0.0)
    with pytest.raises(ValueError):
        CostModel("other")
    with pytest.raises(ValueError):
        MetricSpec("nosuch")
    with pytest.raises(ValueError):
        MetricSpec("word", aggregate="max")


def cit(form, word=None, etymon=None, site="s", concept="k"):
    return Citation(site, concept, form, word, etymon)


def test_citation_examples():
    assert citation_distance(cit("bulo:g", etymon="bull-"), cit("bula:n", etymon="bull-"), MetricSpec("etymon")) == 0
    c1 = cit("bula:na:n", word="bullán+án", etymon="bull-")
    c2 = cit("bula:no:g", word="bullán+óg", etymon="bull-")
    assert citation_distance(c1, c2, MetricSpec("word")) == 1
    assert citation_distance(c1, c2, MetricSpec("etymon")) == 0
    assert citation_distance(c1, c2, MetricSpec("feature_same_word")) is None
    assert citation_distance(c1, c2, MetricSpec("phone_string")) == 2


def test_citation_requires_annotation():
    with pytest.raises(MetricRequirementError):
        citation_distance(cit("a"), cit("a"), MetricSpec("etymon"))
    with pytest.raises(ValueError):
        citation_distance(cit("a", concept="k1"), cit("a", concept="k2"), MetricSpec("phone_string"))


def _two_site_atlas(forms1, forms2, features=()):
    sites = (Site("a", "a", ("a",)), Site("b", "b", ("b",)))
    concepts = tuple(Concept(f"k{i}", "") for i in range(max(len(forms1), len(forms2))))
    cits = []
    for sid, forms in (("a", forms1), ("b", forms2)):
        for i, f in enumerate(forms):
            if f is not None:
                cits.append(Citation(sid, f"k{i}", f, f"w{f}", "e"))
    return Atlas(sites, concepts, tuple(cits), tuple(features))


def test_isogloss_partial_agreement():
    sites = tuple(Site(s, s, (s,)) for s in "abc")
    features = (
        IsoglossFeature("f1", {"a": "x", "b": "x", "c": "y"}),
        IsoglossFeature("f2", {"a": "x", "b": "y", "c": "y"}),
        # f3 does not cover c, so pairs with c average over two features.
        IsoglossFeature("f3", {"a": "x", "b": "y"}),
    )
    atlas = Atlas(sites, (Concept("k", ""),), tuple(Citation(s.id, "k", "a") for s in sites), features)
    spec = MetricSpec("isogloss")
    assert site_pair_distance(atlas, "b", "c", spec) == 0.5
    assert site_pair_distance(atlas, "a", "c", spec) == 1.0
    assert site_pair_distance(atlas, "a", "b", spec) == pytest.approx(2 / 3)


def test_same_site_is_zero(mini_atlas):
    for name in METRICS:
        assert site_pair_distance(mini_atlas, "C", "C", MetricSpec(name)) == 0.0


def test_mini_phone_string_hand_values(mini_atlas):
    spec = MetricSpec("phone_string")
    # A-B differ by one substitution in each of c01, c05, c06 and c09.
    assert site_pair_distance(mini_atlas, "A", "B", spec) == pytest.approx(0.4, abs=1e-12)
    assert site_pair_distance(mini_atlas, "A", "E", spec) == pytest.approx(2.2, abs=1e-12)
    assert site_pair_distance(mini_atlas, "B", "A", spec) == site_pair_distance(mini_atlas, "A", "B", spec)


def _etymon_oracle(raw, s1, s2):
    by = {}
    for c in raw["citations"]:
        by.setdefault((c["site"], c["concept"]), []).append(c["etymon"])
    per_concept = []
    for concept in raw["concepts"]:
        left = by.get((s1, concept["id"]), [])
        right = by.get((s2, concept["id"]), [])
        if left and right:
            pairs = [x != y for x in left for y in right]
            per_concept.append(sum(pairs) / len(pairs))
    return sum(per_concept) / len(per_concept)


def test_mini_etymon_matrix(mini_atlas, mini_raw):
    m = build_matrix(mini_atlas, MetricSpec("etymon"))
    hand = {("A", "B"): 0.0, ("A", "C"): 0.05, ("A", "E"): 0.3, ("C", "G"): 0.15, ("E", "H"): 1 / 9}
    for (s, t), v in hand.items():
        assert m.get(s, t) == pytest.approx(v, abs=1e-12)
    for s, t in itertools.combinations("ABCDEFGH", 2):
        assert m.get(s, t) == pytest.approx(_etymon_oracle(mini_raw, s, t), abs=1e-12)


def test_two_identical_sites():
    atlas = _two_site_atlas(["bo:"], ["bo:"])
    for name in ("phone_string", "feature_all_word", "feature_same_word", "word", "etymon"):
        m = build_matrix(atlas, MetricSpec(name))
        assert m.cells.tolist() == [[0.0, 0.0], [0.0, 0.0]]


def test_no_shared_concept_is_incomplete():
    atlas = _two_site_atlas(["bo:", None], [None, "ba"])
    with pytest.raises(IncompleteMatrixError) as err:
        build_matrix(atlas, MetricSpec("phone_string"))
    assert err.value.pairs == (("a", "b"),)
    assert "a-b" in str(err.value)


def test_impute_fills_with_mean():
    sites = tuple(Site(s, s, (s,)) for s in "abc")
    concepts = (Concept("k0", ""), Concept("k1", ""))
    cits = (
        Citation("a", "k0", "ba"),
        Citation("b", "k0", "bo"),
        Citation("b", "k1", "ta"),
        Citation("c", "k1", "tata"),
    )
    atlas = Atlas(sites, concepts, cits)
    with pytest.raises(IncompleteMatrixError):
        build_matrix(atlas, MetricSpec("phone_string"))
    m = build_matrix(atlas, MetricSpec("phone_string"), impute=True)
    assert m.imputed == (("a", "c"),)
    assert m.get("a", "c") == pytest.approx((1 + 2) / 2)


def test_requirement_errors(minimal_dict):
    for c in minimal_dict["citations"]:
        c["word"] = None
    atlas = atlas_from_dict(minimal_dict)
    for name in ("word", "feature_same_word"):
        with pytest.raises(MetricRequirementError, match="word"):
            build_matrix(atlas, MetricSpec(name))
    build_matrix(atlas, MetricSpec("etymon"))


def test_word_dominates_etymon(mini_atlas):
    w = build_matrix(mini_atlas, MetricSpec("word")).cells
    e = build_matrix(mini_atlas, MetricSpec("etymon")).cells
    assert np.all(w >= e)


def test_unattested_concept_changes_nothing(mini_raw):
    base = atlas_from_dict(mini_raw)
    extra = dict(mini_raw, concepts=mini_raw["concepts"] + [{"id": "c99", "gloss": "unused"}])
    extended = atlas_from_dict(extra)
    for name in METRICS:
        assert build_matrix(base, MetricSpec(name)) == build_matrix(extended, MetricSpec(name))


def test_workers_do_not_change_output(mini_atlas):
    for name in METRICS:
        spec = MetricSpec(name)
        assert build_matrix(mini_atlas, spec).to_tsv() == build_matrix(mini_atlas, spec, workers=4).to_tsv()


def test_normalize_and_min_aggregation(mini_atlas):
    raw = build_matrix(mini_atlas, MetricSpec("phone_string"))
    norm = build_matrix(mini_atlas, MetricSpec("phone_string", normalize=True))
    assert np.all(norm.cells <= raw.cells + 1e-12)
    # C has two variant c02 forms; min takes the one identical to A's.
    mean_cd = site_pair_distance(mini_atlas, "A", "C", MetricSpec("phone_string"))
    min_cd = site_pair_distance(mini_atlas, "A", "C", MetricSpec("phone_string", aggregate="min"))
    assert min_cd < mean_cd
    c02 = [levenshtein(seq("AL:i"), seq(f)) for f in ("AL:i", "khruh")]
    assert mean_cd - min_cd == pytest.approx((sum(c02) / 2 - min(c02)) / 10)


def test_random_atlases_axioms():
    rng = np.random.default_rng(21)
    for _ in range(20):
        atlas = random_atlas(rng)
        for name in METRICS:
            m = build_matrix(atlas, MetricSpec(name), impute=True)
            assert np.array_equal(m.cells, m.cells.T)
            assert np.all(m.cells >= 0)
            assert np.all(np.diag(m.cells) == 0)
            assert all(math.isfinite(v) for v in m.cells.ravel())
