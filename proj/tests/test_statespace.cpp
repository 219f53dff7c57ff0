#include <doctest.h>

#include <functional>
#include <set>

#include "cipmc/fixtures.hpp"
#include "cipmc/search.hpp"
#include "cipmc/statespace.hpp"

using namespace cipmc;

namespace {

LoadedScenario ns(uint32_t bound = 2) { return builtin("ns").load(bound); }

const JoinData& join_of(const Transition& t) { return std::get<JoinData>(t); }

// Finds the join transition for `principal` whose binding maps every listed
// variable to the listed term.
std::optional<Transition> find_join(const std::vector<Transition>& ts,
                                    const std::string& principal,
                                    const Substitution& binding = {}) {
  for (const auto& t : ts) {
    if (!is_join(t)) continue;
    const JoinData& j = join_of(t);
    if (j.principal != principal) continue;
    bool ok = true;
    for (const auto& [k, v] : binding) {
      auto it = j.binding.find(k);
      if (it == j.binding.end() || !equal(it->second, v)) ok = false;
    }
    if (ok) return t;
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("initial state is empty with the default knowledge") {
  LoadedScenario l = ns();
  State s0 = initial_state(l.scenario);
  CHECK(s0.context.empty());
  CHECK(s0.chi.empty());
  CHECK(s0.joins_left == 2);
  CHECK(s0.next_index == 1);
  REQUIRE(s0.kappa->base().size() == 3);
  CHECK(s0.kappa->in_base(identity("I")));
  CHECK(s0.kappa->in_base(pub_key(identity("I"))));
  CHECK(s0.kappa->in_base(priv_key(identity("I"))));
}

TEST_CASE("a zero instance budget is rejected at validation") {
  LoadedScenario l = ns();
  l.scenario.max_instances = 0;
  CHECK_THROWS_AS(initial_state(l.scenario), std::invalid_argument);
}

TEST_CASE("the worked join/out/in prefix") {
  // s0 -join B-> s1 -join A (partner B)-> s2 -out-> s3 -in-> s4, following
  // the worked example; with sequential indexing B gets index 1, A gets 2.
  LoadedScenario l = ns();
  State s0 = initial_state(l.scenario);

  auto joins0 = join_transitions(s0, l.scenario);
  // A can only bind its open variable to the intruder at the root.
  REQUIRE(find_join(joins0, "A", {{VarKey{"r", 1}, identity("I")}}).has_value());
  CHECK_FALSE(find_join(joins0, "A", {{VarKey{"r", 1}, identity("B", 1)}}).has_value());
  REQUIRE(find_join(joins0, "B").has_value());

  State s1 = apply_transition(s0, *find_join(joins0, "B"), l.scenario);
  CHECK(s1.context_summary() == "{B_1}");
  CHECK(s1.kappa->in_base(identity("B", 1)));
  CHECK(s1.kappa->in_base(pub_key(identity("B", 1))));
  CHECK(s1.chi.empty());
  CHECK(s1.joins_left == 1);

  auto joins1 = join_transitions(s1, l.scenario);
  // Now A may pick the responder's identity for its open variable.
  auto join_a = find_join(joins1, "A", {{VarKey{"r", 2}, identity("B", 1)}});
  REQUIRE(join_a.has_value());
  State s2 = apply_transition(s1, *join_a, l.scenario);
  CHECK(s2.context_summary() == "{B_1, A_2}");
  CHECK(equal(s2.chi.at(VarKey{"r", 2}), identity("B", 1)));
  CHECK(s2.joins_left == 0);

  auto comms2 = comm_transitions(s2);
  std::optional<OutData> out;
  for (const auto& c : comms2)
    if (const auto* o = std::get_if<OutData>(&c)) out = *o;
  REQUIRE(out.has_value());
  CHECK(equal(out->message,
              enc(tuple({nonce("na", 2), identity("A", 2)}), pub_key(identity("B", 1)))));

  State s3 = apply_transition(s2, Transition{*out}, l.scenario);
  CHECK(s3.kappa->in_base(out->message));
  CHECK(s3.find_instance(2)->pc == 1);

  // B_1 can now receive the recorded message: among the realizable inputs is
  // the directed assignment x -> na_2, y -> A_2.
  std::optional<Transition> directed;
  for (const auto& c : comm_transitions(s3)) {
    const auto* in = std::get_if<InData>(&c);
    if (in && in->instance_index == 1 && equal(in->sigma.at(VarKey{"x", 1}), nonce("na", 2)) &&
        equal(in->sigma.at(VarKey{"y", 1}), identity("A", 2)))
      directed = c;
  }
  REQUIRE(directed.has_value());
  State s4 = apply_transition(s3, *directed, l.scenario);
  CHECK(equal(s4.chi.at(VarKey{"x", 1}), nonce("na", 2)));
  CHECK(equal(s4.chi.at(VarKey{"y", 1}), identity("A", 2)));
  CHECK(s4.kappa->same_base(*s3.kappa));
}

TEST_CASE("paper indices can be replayed explicitly") {
  // Applying Join(B, 2) then Join(A, 1, r_1 -> B_2) reproduces the displayed
  // states with the original indices.
  LoadedScenario l = ns();
  State s0 = initial_state(l.scenario);
  State s1 = apply_transition(s0, JoinData{"B", 2, {}}, l.scenario);
  CHECK(s1.context_summary() == "{B_2}");
  State s2 = apply_transition(
      s1, JoinData{"A", 1, {{VarKey{"r", 1}, identity("B", 2)}}}, l.scenario);
  CHECK(s2.context_summary() == "{A_1, B_2}");
  CHECK(equal(s2.chi.at(VarKey{"r", 1}), identity("B", 2)));
  CHECK(render_instance(*s2.find_instance(1)) ==
        "A_1: [out({na_1, A_1}_{B_2^+}); in({na_1, ?z_1}_{A_1^-}); out({z_1}_{B_2^+})]");
}

TEST_CASE("joins are exhausted at the bound") {
  LoadedScenario l = ns();
  State s = initial_state(l.scenario);
  auto joins = join_transitions(s, l.scenario);
  s = apply_transition(s, joins[0], l.scenario);
  s = apply_transition(s, join_transitions(s, l.scenario)[0], l.scenario);
  CHECK(s.joins_left == 0);
  CHECK(join_transitions(s, l.scenario).empty());
}

TEST_CASE("applying a consumed out twice is an error") {
  LoadedScenario l = ns();
  State s = initial_state(l.scenario);
  s = apply_transition(s, *find_join(join_transitions(s, l.scenario), "A"), l.scenario);
  s = apply_transition(s, *find_join(join_transitions(s, l.scenario), "B"), l.scenario);
  auto comms = comm_transitions(s);
  REQUIRE(!comms.empty());
  State next = apply_transition(s, comms[0], l.scenario);
  CHECK_THROWS_AS(apply_transition(next, comms[0], l.scenario), std::logic_error);
}

TEST_CASE("terminal and completed states") {
  LoadedScenario l = ns();
  State s = initial_state(l.scenario);
  CHECK_FALSE(is_terminal(s, l.scenario));
  CHECK(is_completed(s));  // vacuously: no instances yet

  // Drive the two-initiator context to completion.
  auto j0 = find_join(join_transitions(s, l.scenario), "A",
                      {{VarKey{"r", 1}, identity("I")}});
  s = apply_transition(s, *j0, l.scenario);
  auto j1 = find_join(join_transitions(s, l.scenario), "A",
                      {{VarKey{"r", 2}, identity("I")}});
  s = apply_transition(s, *j1, l.scenario);
  CHECK_FALSE(is_completed(s));
  while (!is_completed(s)) {
    auto comms = comm_transitions(s);
    REQUIRE(!comms.empty());
    s = apply_transition(s, comms[0], l.scenario);
  }
  CHECK(is_terminal(s, l.scenario));

  // A deadlocked state: B_1 alone answers its own challenge to itself
  // (y -> B_1), so its final input would need nb_1, which stays opaque.
  Scenario sc1 = builtin("ns").load(1).scenario;
  State t = initial_state(sc1);
  t = apply_transition(t, *find_join(join_transitions(t, sc1), "B"), sc1);
  std::optional<Transition> self_directed;
  for (const auto& c : comm_transitions(t)) {
    const auto* in = std::get_if<InData>(&c);
    if (in && equal(in->sigma.at(VarKey{"y", 1}), identity("B", 1))) self_directed = c;
  }
  REQUIRE(self_directed.has_value());
  t = apply_transition(t, *self_directed, sc1);
  t = apply_transition(t, comm_transitions(t)[0], sc1);  // out({x, nb_1}_{B_1^+})
  CHECK(comm_transitions(t).empty());
  CHECK(is_terminal(t, sc1));
  CHECK_FALSE(is_completed(t));
}

TEST_CASE("kappa and chi grow monotonically along every path") {
  LoadedScenario l = ns();
  sweep(l.scenario, initial_state(l.scenario), false, [&](const State& s) {
    std::vector<Transition> succ = join_transitions(s, l.scenario);
    auto comms = comm_transitions(s);
    succ.insert(succ.end(), comms.begin(), comms.end());
    for (const auto& t : succ) {
      State next = apply_transition(s, t, l.scenario);
      for (const auto& term : s.kappa->base()) CHECK(next.kappa->in_base(term));
      for (const auto& [k, v] : s.chi) CHECK(equal(next.chi.at(k), v));
    }
    return true;
  });
}

TEST_CASE("the join-reachable subgraph is a tree") {
  // Distinct join sequences never converge on the same state.
  for (const char* name : {"ns", "ksl"}) {
    LoadedScenario l = builtin(name).load(2);
    std::set<std::string> seen;
    std::function<void(const State&)> walk = [&](const State& s) {
      CHECK(seen.insert(s.dedup_key()).second);
      for (const auto& t : join_transitions(s, l.scenario))
        walk(apply_transition(s, t, l.scenario));
    };
    walk(initial_state(l.scenario));
  }
}

TEST_CASE("apply_transition is deterministic") {
  LoadedScenario l = ns();
  State s = initial_state(l.scenario);
  auto joins = join_transitions(s, l.scenario);
  State a = apply_transition(s, joins[0], l.scenario);
  State b = apply_transition(s, joins[0], l.scenario);
  CHECK(a.dedup_key() == b.dedup_key());
}

TEST_CASE("terminal knowledge/assignment sets agree across schedulings") {
  // Join-first and fully interleaved scheduling reach the same terminal
  // (kappa, chi) pairs on the bound-2 public-key scenario.
  LoadedScenario l = ns();
  auto collect = [&](bool interleave) {
    std::set<std::string> out;
    sweep(l.scenario, initial_state(l.scenario), interleave, [&](const State& s) {
      if (is_terminal(s, l.scenario)) {
        std::string key;
        for (const auto& t : s.kappa->base()) key += render(t) + ";";
        key += "|";
        for (const auto& [k, v] : s.chi) key += k.str() + "=" + render(v) + ";";
        out.insert(key);
      }
      return true;
    });
    return out;
  };
  auto join_first = collect(false);
  auto interleaved = collect(true);
  CHECK(join_first == interleaved);
  CHECK(!join_first.empty());
}

TEST_CASE("scenario files round trip") {
  for (const char* name : {"ns", "ksl"}) {
    ScenarioFile f = parse_scenario_file(builtin(name).scenario_text);
    ScenarioFile again = parse_scenario_file(render_scenario_file(f));
    CHECK(f.protocol_path == again.protocol_path);
    CHECK(f.property_path == again.property_path);
    CHECK(f.max_instances == again.max_instances);
    CHECK(f.bind_templates.size() == again.bind_templates.size());
    REQUIRE(f.knowledge.has_value());
    REQUIRE(again.knowledge.has_value());
    REQUIRE(f.knowledge->size() == again.knowledge->size());
    for (size_t i = 0; i < f.knowledge->size(); ++i)
      CHECK(equal((*f.knowledge)[i], (*again.knowledge)[i]));
  }
  CHECK_THROWS_AS(parse_scenario_file("protocol x.cip\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario_file("frobnicate 3\n"), ParseError);
}

TEST_CASE("key-sorted open variables come from bind templates") {
  LoadedScenario l = builtin("ksl").load(2);
  State s0 = initial_state(l.scenario);
  auto joins = join_transitions(s0, l.scenario);

  // A as slot 1: the honest template anticipates B_2, the other pairs with I.
  auto honest = find_join(joins, "A", {{VarKey{"b", 1}, identity("B", 2)}});
  REQUIRE(honest.has_value());
  CHECK(equal(join_of(*honest).binding.at(VarKey{"sk", 1}), sym_key("kab")));
  CHECK(equal(join_of(*honest).binding.at(VarKey{"tk", 1}), sym_key("kbb")));
  auto rogue = find_join(joins, "A", {{VarKey{"b", 1}, identity("I")}});
  REQUIRE(rogue.has_value());
  CHECK(equal(join_of(*rogue).binding.at(VarKey{"sk", 1}), sym_key("kai")));

  // Committing slot 2 to B forces the second join to be B.
  State s1 = apply_transition(s0, *honest, l.scenario);
  auto joins1 = join_transitions(s1, l.scenario);
  for (const auto& t : joins1) CHECK(join_of(t).principal == "B");
  // B may reciprocate with the joined A_1 or pair with the intruder.
  CHECK(find_join(joins1, "B", {{VarKey{"a", 2}, identity("A", 1)}}).has_value());
  CHECK(find_join(joins1, "B", {{VarKey{"a", 2}, identity("I")}}).has_value());
}

TEST_CASE("self-binding is excluded by default and enabled by flag") {
  LoadedScenario l = ns();
  State s0 = initial_state(l.scenario);
  State s1 = apply_transition(
      s0, *find_join(join_transitions(s0, l.scenario), "A"), l.scenario);
  auto joins = join_transitions(s1, l.scenario);
  CHECK_FALSE(find_join(joins, "A", {{VarKey{"r", 2}, identity("A", 2)}}).has_value());
  CHECK(find_join(joins, "A", {{VarKey{"r", 2}, identity("A", 1)}}).has_value());

  l.scenario.allow_self_binding = true;
  auto joins_self = join_transitions(s1, l.scenario);
  CHECK(find_join(joins_self, "A", {{VarKey{"r", 2}, identity("A", 2)}}).has_value());
}
