"""Shared fixtures: the bundled medical graph, its closure, and a generated
dataset are expensive enough to build once per session."""

from __future__ import annotations

import pytest

import conceptcheck as cc


@pytest.fixture(scope="session")
def medical_graph() -> cc.ConceptGraph:
    return cc.load_medical_graph()


@pytest.fixture(scope="session")
def medical_closure(medical_graph) -> cc.DeductiveClosure:
    return cc.deductive_closure(medical_graph)


@pytest.fixture(scope="session")
def medical_dataset(medical_graph) -> cc.ClusterDataset:
    return cc.generate_dataset(medical_graph, cc.MEDICAL_GENERATION)


@pytest.fixture(scope="session")
def template() -> cc.PromptTemplate:
    return cc.load_default_prompt()


def make_graph(edges, properties=(), same_as=(), extra=()):
    """Build a small graph whose concept ids double as labels.

    `edges` are (child, parent) pairs; `extra` adds isolated concepts.
    """
    ids = sorted({c for e in edges for c in e} | set(extra))
    concepts = [cc.Concept(id=i, label=i, aliases=()) for i in ids]
    props = [cc.PropertyAssertion(subject=s, property=p, value=v) for s, p, v in properties]
    return cc.build_graph(concepts, edges, props, same_as)
