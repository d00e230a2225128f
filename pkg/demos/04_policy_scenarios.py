"""Policy scenarios: does a rule get applied to exactly the right concepts?

Each bundled scenario states a policy about one anchor concept ("surgeons
must supervise..."). The policy applies to a specialist exactly when the
hierarchy says the specialist is subsumed by the anchor. For each specialist
the backend gets an applicability question and a policy question; a scenario
whose answers are partly right and partly wrong is inconsistent.
"""

import json

import conceptcheck as cc

graph = cc.load_medical_graph()
closure = cc.deductive_closure(graph)
template = cc.load_default_prompt()
scenarios = cc.load_medical_scenarios()
specialists = list(cc.MEDICAL_SPECIALISTS)

print(f"{len(scenarios)} scenarios x {len(specialists)} specialists x 2 questions "
      f"= {len(scenarios) * len(specialists) * 2} questions\n")

scenario = scenarios[0]
print(f"=== scenario {scenario.id!r} ({scenario.polarity}, anchor: {scenario.anchor}) ===")
print(f"policy: {scenario.policy_text}\n")
for q in cc.gen_scenario_questions(scenario, specialists, graph, closure):
    print(f"  [{q.kind.value}] {q.question}  (expected: {q.expected.value})")

print("\n=== a perfect backend ===")
oracle = cc.ScenarioOracle(scenarios, specialists, graph, closure, template)
results, summary = cc.evaluate_scenarios(scenarios, specialists, graph, closure, oracle, template)
print(f"incorrect answers: {summary.incorrect_questions}/{summary.total_questions}, "
      f"inconsistent scenarios: {summary.inconsistent_scenarios}/{summary.total_scenarios}")

print("\n=== a backend that answers yes to everything ===")
yes_man = cc.ScriptedBackend({}, default="yes", id="yes-man")
results, summary = cc.evaluate_scenarios(scenarios, specialists, graph, closure, yes_man, template)
print(cc.render_scenario_markdown(results, summary, yes_man.id))

print("Saying yes everywhere looks agreeable but contradicts itself: the")
print("restriction scenarios expect no for the specialists they cover, so")
print("every scenario mixing yes- and no-expectations comes out inconsistent.")
print("\nThe same check drives `conceptcheck scenarios`; scenario files are")
print("plain JSON:")
print(json.dumps({
    "id": scenario.id, "anchor": scenario.anchor, "polarity": scenario.polarity,
    "policy_text": scenario.policy_text,
    "applicability_template": scenario.applicability_template,
    "policy_question_template": scenario.policy_question_template,
}, indent=2))
