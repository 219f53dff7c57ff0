#include <doctest.h>

#include <set>

#include "cipmc/fixtures.hpp"
#include "cipmc/search.hpp"
#include "oracles.hpp"

using namespace cipmc;

TEST_CASE("guided search finds the two-initiator attack first") {
  LoadedScenario l = builtin("ns").load(2);
  CheckResult r = find_attack(l.scenario, l.property);
  REQUIRE(r.verdict == Verdict::Attack);
  REQUIRE(r.attack.has_value());
  CHECK(r.attack->context() == "{A_1, A_2}");

  // The trace replays to its final state and falsifies the property there.
  State replayed = replay(l.scenario, r.attack->transitions);
  CHECK(replayed.dedup_key() == r.attack->final_state.dedup_key());
  CHECK_FALSE(evaluate(EvalContext{*replayed.kappa, replayed.chi}, r.attack->violated));
  CHECK(is_completed(replayed));
}

TEST_CASE("the never-pruned baseline agrees and expands more") {
  LoadedScenario l = builtin("ns").load(2);
  StrategyReport report = compare_strategies(l.scenario, l.property);
  CHECK(report.verdicts_agree);
  CHECK(report.guided.verdict == Verdict::Attack);
  CHECK(report.guided.stats.states_expanded < report.bfs.stats.states_expanded);
  CHECK(report.guided_not_worse);
}

TEST_CASE("dfs also finds an attack") {
  LoadedScenario l = builtin("ns").load(2);
  SearchConfig cfg;
  cfg.strategy = Strategy::DFS;
  CheckResult r = find_attack(l.scenario, l.property, cfg);
  CHECK(r.verdict == Verdict::Attack);
}

TEST_CASE("the pairing scenario has no attack at bound 2") {
  LoadedScenario l = builtin("ksl").load(2);
  CheckResult r = find_attack(l.scenario, l.property);
  CHECK(r.verdict == Verdict::NoAttack);
  REQUIRE(r.stats.pruned_context_summaries.size() == 2);
  CHECK(r.stats.pruned_context_summaries[0] == "{A_1, A_2}");
  CHECK(r.stats.pruned_context_summaries[1] == "{B_1, B_2}");
  CHECK(r.stats.contexts_total == 4);
  CHECK(r.stats.contexts_pruned == 2);

  SearchConfig bfs;
  bfs.strategy = Strategy::BFS;
  CHECK(find_attack(l.scenario, l.property, bfs).verdict == Verdict::NoAttack);
}

TEST_CASE("the pairing scenario has an attack at bound 3") {
  LoadedScenario l = builtin("ksl").load(3);
  CheckResult r = find_attack(l.scenario, l.property);
  REQUIRE(r.verdict == Verdict::Attack);
  State replayed = replay(l.scenario, r.attack->transitions);
  CHECK_FALSE(evaluate(EvalContext{*replayed.kappa, replayed.chi}, r.attack->violated));
  CHECK(is_completed(replayed));
}

TEST_CASE("attacks found at a bound persist at the next bound") {
  LoadedScenario two = builtin("ns").load(2);
  LoadedScenario three = builtin("ns").load(3);
  CHECK(find_attack(two.scenario, two.property).verdict == Verdict::Attack);
  CHECK(find_attack(three.scenario, three.property).verdict == Verdict::Attack);
}

TEST_CASE("a tiny state cap reports bound exhaustion, not no-attack") {
  LoadedScenario l = builtin("ns").load(2);
  SearchConfig cfg;
  cfg.max_states = 5;
  CheckResult r = find_attack(l.scenario, l.property, cfg);
  CHECK(r.verdict == Verdict::BoundExhausted);
}

TEST_CASE("pruned nodes are never expanded") {
  LoadedScenario l = builtin("ns").load(2);
  CheckResult guided = find_attack(l.scenario, l.property);
  CHECK(guided.stats.join_nodes_pruned == 1);
  CHECK(guided.stats.join_leaves_pruned == 1);
  CHECK(guided.stats.join_leaves_total == 6);
  CHECK(guided.stats.contexts_pruned_fraction == doctest::Approx(1.0 / 6.0));

  // Exhaustive guided exploration never visits a state whose context is the
  // pruned one.
  SearchConfig cfg;
  cfg.stop_at_first = false;
  CheckResult full = find_attack(l.scenario, l.property, cfg);
  for (const auto& tr : full.attacks) CHECK(tr.context() != "{B_1, B_2}");
}

TEST_CASE("exhaustive guided exploration also reports the initiator-responder attack") {
  LoadedScenario l = builtin("ns").load(2);
  SearchConfig cfg;
  cfg.stop_at_first = false;
  CheckResult r = find_attack(l.scenario, l.property, cfg);
  REQUIRE(r.verdict == Verdict::Attack);
  std::set<std::string> contexts;
  for (const auto& tr : r.attacks) contexts.insert(tr.context());
  CHECK(contexts.count("{A_1, A_2}") == 1);
  CHECK(contexts.count("{A_1, B_2}") == 1);
  CHECK(contexts.count("{B_1, A_2}") == 1);
  CHECK(contexts.count("{B_1, B_2}") == 0);
}

TEST_CASE("checking at all states flags unassigned variables immediately") {
  LoadedScenario l = builtin("ns").load(2);
  SearchConfig cfg;
  cfg.check_at = CheckAt::AllStates;
  CheckResult r = find_attack(l.scenario, l.property, cfg);
  REQUIRE(r.verdict == Verdict::Attack);
  // Stricter than the default: the run need not be completed.
  CHECK(r.attack->transitions.size() < 8);
}

TEST_CASE("trace rendering follows the attack-table style") {
  AttackTrace tr;
  tr.violated = parse_property("forall i:A. K |> na[i]");
  CHECK(render_trace(tr).empty());  // empty transition list

  LoadedScenario l = builtin("ns").load(2);
  CheckResult r = find_attack(l.scenario, l.property);
  REQUIRE(r.attack.has_value());
  const std::string& witness = r.attack->witness;
  CHECK(witness.find("1. A_1 → I : {na_1, A_1}_{I^+}\n") == 0);
  CHECK(witness.find("κ ▷") != std::string::npos);
  // Six numbered communication steps in a completed bound-2 run.
  CHECK(witness.find("6. ") != std::string::npos);
  CHECK(witness.find("7. ") == std::string::npos);
}

TEST_CASE("search statistics render as key-value lines") {
  LoadedScenario l = builtin("ns").load(2);
  CheckResult r = find_attack(l.scenario, l.property);
  std::string text = render_stats(r.stats);
  CHECK(text.find("states_generated=") != std::string::npos);
  CHECK(text.find("states_expanded=") != std::string::npos);
  CHECK(text.find("join_nodes_pruned=1") != std::string::npos);
  CHECK(text.find("pruned_contexts={B_1, B_2}") != std::string::npos);
}

TEST_CASE("no falsifying state hides below a pruned join node") {
  // The correctness theorem behind the pruning, checked exhaustively on the
  // bound-2 builtin scenarios.
  for (const char* name : {"ns", "ksl"}) {
    LoadedScenario l = builtin(name).load(2);
    Formula phi = pnf(l.property);
    WeightedJoinTree tree = build_weighted_tree(l.scenario, l.property);
    for (int id : tree.pruned_nodes()) {
      sweep(l.scenario, tree.nodes[id].state, false, [&](const State& s) {
        CHECK(evaluate(EvalContext{*s.kappa, s.chi}, phi));
        return true;
      });
    }
  }
}

TEST_CASE("a single-principal existential scenario has nothing to prune") {
  Scenario sc;
  sc.protocol = parse_protocol("A: ()[ out(na) ]");
  sc.max_instances = 1;
  sc.initial_knowledge = default_initial_knowledge();
  Formula phi = parse_property("exists i:A. K |> na[i]");
  StrategyReport report = compare_strategies(sc, phi);
  CHECK(report.verdicts_agree);
  CHECK(report.guided.stats.join_nodes_pruned == 0);
}
