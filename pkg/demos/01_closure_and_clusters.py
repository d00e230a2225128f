"""From a concept graph to a consistency-test dataset.

Loads the bundled medical-specialist hierarchy, computes its deductive
closure, and generates the five kinds of question clusters, showing what
each kind looks like.
"""

from collections import Counter

import conceptcheck as cc


def heading(text):
    print(f"\n=== {text} ===")


graph = cc.load_medical_graph()
heading("the graph")
print(f"{len(graph.concepts)} concepts, {len(graph.edges)} subconcept edges, "
      f"{len(graph.properties)} property assertions")
for child, parent in sorted(graph.edges)[:5]:
    print(f"  {graph.label_of(child)} -> {graph.label_of(parent)}")
print("  ...")

heading("deductive closure")
closure = cc.deductive_closure(graph)
print(f"direct pairs:          {len(closure.direct)}")
print(f"implied pairs (total): {len(closure.implied)}")
print(f"strictly implied:      {len(closure.strictly_implied)} (transitive, non-adjacent)")
print("\nevery strictly implied pair, with one witness path:")
paths = {p[0] + "->" + p[-1]: p for p in cc.implied_paths(graph)}
for child, parent in sorted(closure.strictly_implied):
    witness = paths[child + "->" + parent]
    print("  " + " -> ".join(graph.label_of(c) for c in witness))

heading("the generated dataset")
dataset = cc.generate_dataset(graph, cc.MEDICAL_GENERATION)
counts = Counter(c.type.value for c in dataset.clusters)
for kind in cc.ClusterType:
    print(f"  {kind.value:<22} {counts[kind.value]:>3} clusters")
print(f"  {'total':<22} {len(dataset.clusters):>3} clusters, "
      f"{sum(len(c.questions) for c in dataset.clusters)} questions")

heading("one cluster of each kind")
seen = set()
for cluster in dataset.clusters:
    if cluster.type in seen:
        continue
    seen.add(cluster.type)
    print(f"\n[{cluster.type.value}] expected answer: {cluster.expected.value}")
    for question, statement in zip(cluster.questions, cluster.statements):
        print(f"  Q: {question}")
        print(f"     as a statement: {statement}")

heading("why clusters")
print("All four questions in a cluster are entailed by the same fact, so a")
print("coherent answerer must give them the same truth value. Mixed answers")
print("inside one cluster expose an inconsistency no single question could.")
