"""Question/statement templates and cluster generation."""

from __future__ import annotations

import dataclasses

import pytest

import conceptcheck as cc
from conceptcheck.clusters import (
    SUBSUMPTION_FORMS,
    gen_inverse_clusters,
    gen_negative_clusters,
    gen_path_clusters,
    gen_positive_clusters,
    gen_property_clusters,
    property_question,
    property_statement,
    subsumption_question,
    subsumption_statement,
)
from conftest import make_graph

T = cc.ClusterType


def clusters_of(dataset, kind):
    return [c for c in dataset.clusters if c.type is kind]


# --- templates ---------------------------------------------------------------


def test_subsumption_question_forms():
    a, b = "surgeon", "medical specialist"
    assert subsumption_question("plain", a, b) == "is a surgeon a medical specialist ?"
    assert subsumption_question("type_of", a, b) == "is a surgeon a type of medical specialist ?"
    assert subsumption_question("every", a, b) == "is every surgeon a medical specialist ?"
    assert subsumption_question("also", a, b) == "is a surgeon also a medical specialist ?"


def test_subsumption_statement_forms():
    a, b = "surgeon", "medical specialist"
    assert subsumption_statement("plain", a, b) == "a surgeon is a medical specialist"
    assert subsumption_statement("type_of", a, b) == "a surgeon is a type of medical specialist"
    assert subsumption_statement("every", a, b) == "every surgeon is a medical specialist"
    assert subsumption_statement("also", a, b) == "a surgeon is also a medical specialist"


def test_property_forms():
    prop, subject, value = "field of occupation", "surgeon", "surgery"
    assert (
        property_question("property_of", prop, subject, value)
        == "is the field of occupation of a surgeon surgery ?"
    )
    assert (
        property_question("value_is", prop, subject, value)
        == "is surgery the field of occupation of a surgeon ?"
    )
    assert (
        property_statement("property_of", prop, subject, value)
        == "the field of occupation of a surgeon is surgery"
    )
    assert (
        property_statement("value_is", prop, subject, value)
        == "surgery is the field of occupation of a surgeon"
    )


def test_literal_article_is_default_even_before_vowels():
    assert (
        subsumption_question("plain", "orthopedic pediatric surgeon", "medical specialist")
        == "is a orthopedic pediatric surgeon a medical specialist ?"
    )


def test_grammatical_article_style():
    q = subsumption_question("plain", "orthopedian", "engineer", style="grammatical")
    assert q == "is an orthopedian an engineer ?"
    s = subsumption_statement("every", "surgeon", "expert", style="grammatical")
    assert s == "every surgeon is an expert"


def test_unknown_template_form():
    with pytest.raises(cc.UnknownTemplate):
        subsumption_question("rhetorical", "a", "b")
    with pytest.raises(cc.UnknownTemplate):
        property_statement("rhetorical", "p", "s", "v")


# --- question_to_statement ---------------------------------------------------


@pytest.mark.parametrize("a,b", [("surgeon", "medical specialist"), ("pediatric surgeon", "surgeon")])
@pytest.mark.parametrize("form", SUBSUMPTION_FORMS)
def test_question_to_statement_round_trips_subsumption(form, a, b):
    q = subsumption_question(form, a, b)
    assert cc.question_to_statement(q) == subsumption_statement(form, a, b)


def test_question_to_statement_round_trips_properties():
    q = property_question("property_of", "field of occupation", "surgeon", "surgery")
    assert cc.question_to_statement(q) == "the field of occupation of a surgeon is surgery"
    q = property_question("value_is", "field of occupation", "orthopedic pediatric surgeon", "pediatric surgery")
    assert (
        cc.question_to_statement(q)
        == "pediatric surgery is the field of occupation of a orthopedic pediatric surgeon"
    )


def test_question_to_statement_ambiguous_property_takes_shortest_subject():
    # With a multi-word subject the property form is textually ambiguous;
    # the rewrite picks the shortest subject. Datasets are unaffected since
    # they carry the true statement alongside each question.
    q = property_question("property_of", "field of occupation", "pediatric surgeon", "pediatric surgery")
    assert cc.question_to_statement(q) == "the field of occupation of a pediatric is surgeon pediatric surgery"


def test_question_to_statement_rejects_foreign_text():
    for bad in ("what is a surgeon ?", "is a surgeon a medical specialist", "yes", ""):
        with pytest.raises(cc.UnknownTemplate):
            cc.question_to_statement(bad)


# --- per-type generators -----------------------------------------------------


def test_positive_clusters_cover_every_edge(medical_graph):
    clusters = gen_positive_clusters(medical_graph, cc.MEDICAL_GENERATION)
    assert len(clusters) == 15
    assert {(c.source, c.target) for c in clusters} == set(medical_graph.edges)
    assert all(c.expected is cc.Answer.YES for c in clusters)
    assert all(len(c.questions) == 4 for c in clusters)
    surgeon = next(c for c in clusters if c.source == "surgeon")
    assert surgeon.id == "positive-edge:surgeon:medical-specialist"
    assert surgeon.questions == (
        "is a surgeon a medical specialist ?",
        "is a surgeon a type of medical specialist ?",
        "is every surgeon a medical specialist ?",
        "is a surgeon also a medical specialist ?",
    )


def test_inverse_clusters_flip_direction(medical_graph):
    clusters = gen_inverse_clusters(medical_graph, cc.MEDICAL_GENERATION)
    assert len(clusters) == 15
    assert {(c.target, c.source) for c in clusters} == set(medical_graph.edges)
    assert all(c.expected is cc.Answer.NO for c in clusters)
    flipped = next(c for c in clusters if c.target == "surgeon" and c.source == "medical-specialist")
    assert flipped.questions[0] == "is a medical specialist a surgeon ?"


def test_inverse_clusters_skip_same_as_edges():
    g = make_graph([("b", "a"), ("c", "a")], same_as=[("b", "a")])
    config = cc.GenerationConfig(seed=1)
    assert len(gen_positive_clusters(g, config)) == 2
    inverse = gen_inverse_clusters(g, config)
    assert len(inverse) == 1
    assert (inverse[0].source, inverse[0].target) == ("a", "c")


def test_negative_clusters_sample_unrelated_pairs(medical_graph, medical_closure):
    config = cc.GenerationConfig(seed=1, negative_count=66)
    clusters = gen_negative_clusters(medical_graph, medical_closure, config)
    assert len(clusters) == 66
    for c in clusters:
        assert c.expected is cc.Answer.NO
        assert (c.source, c.target) not in medical_closure.implied
        assert (c.target, c.source) not in medical_closure.implied
    assert gen_negative_clusters(medical_graph, medical_closure, config) == clusters
    none = gen_negative_clusters(medical_graph, medical_closure, cc.GenerationConfig(seed=1))
    assert none == []


def test_path_clusters_pair_granularity(medical_graph, medical_closure):
    clusters = gen_path_clusters(medical_graph, medical_closure, cc.MEDICAL_GENERATION)
    assert len(clusters) == 6
    assert {(c.source, c.target) for c in clusters} == set(medical_closure.strictly_implied)
    assert all(c.expected is cc.Answer.YES for c in clusters)
    # A pair reachable several ways records the lexicographically first witness.
    wide = next(c for c in clusters if c.source == "orthopedic-pediatric-surgeon" and c.target == "medical-specialist")
    assert wide.path == (
        "orthopedic-pediatric-surgeon",
        "orthopedic-surgeon",
        "orthopedian",
        "medical-specialist",
    )
    assert wide.questions[0] == "is a orthopedic pediatric surgeon a medical specialist ?"


def test_path_clusters_path_granularity(medical_graph, medical_closure):
    config = dataclasses.replace(cc.MEDICAL_GENERATION, path_granularity="path")
    clusters = gen_path_clusters(medical_graph, medical_closure, config)
    assert len(clusters) == 12
    assert len({c.id for c in clusters}) == 12
    multi = [c for c in clusters if c.source == "orthopedic-pediatric-surgeon" and c.target == "medical-specialist"]
    assert len(multi) == 4
    assert all(":via:" in c.id for c in multi)


def test_path_clusters_skip_pairs_with_redundant_direct_edge():
    g = make_graph([("a", "b"), ("b", "c"), ("a", "c")])
    closure = cc.deductive_closure(g)
    assert gen_path_clusters(g, closure, cc.GenerationConfig(seed=1)) == []


def test_property_clusters_compose_four_probes(medical_graph, medical_closure):
    clusters = gen_property_clusters(medical_graph, medical_closure, cc.MEDICAL_GENERATION)
    assert len(clusters) == 9
    by_subject: dict[str, int] = {}
    for c in clusters:
        by_subject[c.target] = by_subject.get(c.target, 0) + 1
    assert by_subject == {
        "surgeon": 3,
        "pediatrician": 2,
        "orthopedian": 2,
        "pediatric-surgeon": 1,
        "orthopedic-surgeon": 1,
    }
    probe = next(c for c in clusters if c.target == "surgeon" and c.source == "pediatric-surgeon")
    assert probe.questions == (
        "is the field of occupation of a surgeon surgery ?",
        "is a pediatric surgeon a surgeon ?",
        "is the field of occupation of a pediatric surgeon surgery ?",
        "is surgery the field of occupation of a pediatric surgeon ?",
    )
    assert probe.statements[1] == "a pediatric surgeon is a surgeon"
    assert probe.expected is cc.Answer.YES


def test_property_clusters_have_two_property_forms_per_specialty(medical_graph, medical_closure):
    for c in gen_property_clusters(medical_graph, medical_closure, cc.MEDICAL_GENERATION):
        desc_label = medical_graph.label_of(c.source)
        specialty_forms = [q for q in c.questions if f"of a {desc_label} " in q or f"of a {desc_label} ?" in q]
        assert len(specialty_forms) == 2


# --- whole-dataset generation --------------------------------------------------


def test_generate_dataset_counts(medical_dataset):
    per_type = {t: len(clusters_of(medical_dataset, t)) for t in T}
    assert per_type == {
        T.POSITIVE_EDGE: 15,
        T.INVERSE_EDGE: 15,
        T.NEGATIVE_EDGE: 66,
        T.PATH: 6,
        T.PROPERTY_INHERITANCE: 9,
    }
    assert len(medical_dataset.clusters) == 111
    assert sum(len(c.questions) for c in medical_dataset.clusters) == 444


def test_generate_dataset_path_granularity_counts(medical_graph):
    config = dataclasses.replace(cc.MEDICAL_GENERATION, path_granularity="path")
    dataset = cc.generate_dataset(medical_graph, config)
    assert len(clusters_of(dataset, T.PATH)) == 12
    assert len(dataset.clusters) == 117
    assert sum(len(c.questions) for c in dataset.clusters) == 468


def test_generate_dataset_is_deterministic(medical_graph, medical_dataset, tmp_path):
    again = cc.generate_dataset(medical_graph, cc.MEDICAL_GENERATION)
    assert again == medical_dataset
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cc.write_dataset(medical_dataset, a)
    cc.write_dataset(again, b)
    assert a.read_bytes() == b.read_bytes()


def test_generated_expectations_match_closure(medical_dataset, medical_closure):
    for c in medical_dataset.clusters:
        if c.type in (T.POSITIVE_EDGE, T.PATH):
            assert (c.source, c.target) in medical_closure.implied
            assert c.expected is cc.Answer.YES
        elif c.type in (T.INVERSE_EDGE, T.NEGATIVE_EDGE):
            assert (c.source, c.target) not in medical_closure.implied
            assert c.expected is cc.Answer.NO
        else:
            assert (c.source, c.target) in medical_closure.implied
            assert c.expected is cc.Answer.YES


def test_questions_and_statements_are_parallel(medical_dataset):
    ambiguous = 0
    for c in medical_dataset.clusters:
        assert len(c.questions) == len(c.statements) == 4
        for q, s in zip(c.questions, c.statements):
            assert q.endswith(" ?")
            assert sorted(q[:-2].split()) == sorted(s.split())
            rewritten = cc.question_to_statement(q)
            if rewritten != s:
                # Only the documented ambiguity: a property question whose
                # subject label is multi-word.
                assert c.type is T.PROPERTY_INHERITANCE
                ambiguous += 1
    assert ambiguous > 0  # the fixture exercises the ambiguous case


def test_generate_dataset_binds_graph_fingerprint(medical_graph, medical_dataset):
    assert medical_dataset.graph_fingerprint == medical_graph.fingerprint
    assert medical_dataset.version == "1"


def test_cluster_ids_are_unique(medical_dataset):
    ids = [c.id for c in medical_dataset.clusters]
    assert len(ids) == len(set(ids))


# --- dataset files -----------------------------------------------------------


def test_dataset_round_trip(tmp_path, medical_dataset):
    path = tmp_path / "dataset.json"
    cc.write_dataset(medical_dataset, path)
    assert cc.read_dataset(path) == medical_dataset


def test_dataset_fingerprint_tracks_content(tmp_path, medical_dataset, medical_graph):
    fp = cc.dataset_fingerprint(medical_dataset)
    path = tmp_path / "dataset.json"
    cc.write_dataset(medical_dataset, path)
    assert cc.dataset_fingerprint(cc.read_dataset(path)) == fp
    smaller = dataclasses.replace(medical_dataset, clusters=medical_dataset.clusters[:-1])
    assert cc.dataset_fingerprint(smaller) != fp


def test_read_dataset_names_offending_cluster(tmp_path, medical_dataset):
    import json

    path = tmp_path / "dataset.json"
    cc.write_dataset(medical_dataset, path)
    data = json.loads(path.read_text())
    del data["clusters"][3]["expected"]
    path.write_text(json.dumps(data))
    with pytest.raises(cc.SchemaViolation) as err:
        cc.read_dataset(path)
    assert data["clusters"][3]["id"] in str(err.value)


def test_read_dataset_rejects_mismatched_statements(tmp_path, medical_dataset):
    import json

    path = tmp_path / "dataset.json"
    cc.write_dataset(medical_dataset, path)
    data = json.loads(path.read_text())
    data["clusters"][0]["statements"] = data["clusters"][0]["statements"][:2]
    path.write_text(json.dumps(data))
    with pytest.raises(cc.SchemaViolation):
        cc.read_dataset(path)


def test_read_dataset_rejects_bad_envelope(tmp_path):
    import json

    path = tmp_path / "dataset.json"
    with pytest.raises(cc.UnreadableSource):
        cc.read_dataset(path)
    path.write_text("[]")
    with pytest.raises(cc.SchemaViolation):
        cc.read_dataset(path)
    path.write_text(json.dumps({"version": "99"}))
    with pytest.raises(cc.SchemaViolation):
        cc.read_dataset(path)


# --- config validation ---------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        {"seed": 1, "negative_count": -1},
        {"seed": None, "negative_count": 5},
        {"seed": 1, "min_distance": 0},
        {"seed": 1, "min_path_len": 0},
        {"seed": 1, "article_style": "telegraphic"},
        {"seed": 1, "path_granularity": "edge"},
        {"seed": 1, "template_set": "v2"},
    ],
)
def test_generation_config_validation(medical_graph, kwargs):
    with pytest.raises(cc.ConfigError):
        cc.generate_dataset(medical_graph, cc.GenerationConfig(**kwargs))


def test_generation_config_round_trip():
    config = cc.GenerationConfig(seed=7, negative_count=3, article_style="grammatical")
    assert cc.GenerationConfig.from_dict(config.to_dict()) == config
    with pytest.raises(cc.SchemaViolation):
        cc.GenerationConfig.from_dict({"seed": 1, "surprise": True})
