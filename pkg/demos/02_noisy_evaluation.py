"""Evaluating backends and classifying clusters.

Runs the perfect oracle and two noisy oracles over the medical dataset,
prints the consistency report, and dissects one inconsistent cluster.
"""

import conceptcheck as cc

graph = cc.load_medical_graph()
closure = cc.deductive_closure(graph)
dataset = cc.generate_dataset(graph, cc.MEDICAL_GENERATION)
template = cc.load_default_prompt()

print("evaluating three backends over "
      f"{len(dataset.clusters)} clusters / {sum(len(c.questions) for c in dataset.clusters)} questions...")

backends = [
    cc.PerfectOracle(closure, dataset),
    cc.NoisyOracle(closure, dataset, flip_probability=0.1, seed=7),
    cc.NoisyOracle(closure, dataset, flip_probability=0.3, seed=7),
]
resultsets = [cc.evaluate_dataset(dataset, b, template) for b in backends]
rows = [cc.compute_report(rs, dataset) for rs in resultsets]

print()
print(cc.render_markdown(rows, dataset_fingerprint=cc.dataset_fingerprint(dataset)))

print("The noisy oracle flips each answer independently, so a cluster lands")
print("inconsistent when some but not all of its four answers flip, and")
print("incomplete when all four flip. Higher flip rates mostly create more")
print("inconsistency; total ignorance (all four wrong) stays rare.\n")

noisy = resultsets[2]
verdict_of = noisy.verdicts
cluster = next(c for c in dataset.clusters if verdict_of[c.id] is cc.Verdict.INCONSISTENT)
print(f"=== one inconsistent cluster under {noisy.backend_id} ===")
print(f"[{cluster.type.value}] every answer should be: {cluster.expected.value}")
records = {(r.cluster_id, r.question_index): r for r in noisy.records}
for idx, question in enumerate(cluster.questions):
    record = records[(cluster.id, idx)]
    mark = "ok " if record.correct else "XXX"
    print(f"  {mark} {question}  -> {record.raw}")
print("\nAffirming some phrasings while denying others is a contradiction:")
print("the model cannot be describing any one hierarchy.")
