#pragma once

// Attack search over the weighted join tree.
//
// The guided strategy weights the join tree, discards -inf subtrees, orders
// the surviving join leaves by descending path weight (lexicographically over
// the edge weights root-to-leaf, ties broken by declaration order) and then
// exhaustively explores communications within each surviving context in
// order. Properties are checked per CheckAt: Terminal checks the states in
// which every joined instance has run its script to completion (attacks are
// read off completed runs; a deadlocked state ends exploration but is not
// checked), AllStates checks everywhere. BFS/DFS baselines explore the same
// space unweighted and unpruned.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cipmc/heuristic.hpp"
#include "cipmc/logic.hpp"
#include "cipmc/statespace.hpp"

namespace cipmc {

enum class Strategy : uint8_t { Guided, BFS, DFS };
enum class CheckAt : uint8_t { Terminal, AllStates };
enum class Verdict : uint8_t { Attack, NoAttack, BoundExhausted };

std::string to_string(Strategy s);
std::string to_string(Verdict v);

struct SearchConfig {
  Strategy strategy = Strategy::Guided;
  CheckAt check_at = CheckAt::Terminal;
  bool interleave_joins = false;   // baselines only; Guided is join-first
  uint64_t max_states = 2'000'000; // generation cap; exceeding it yields BoundExhausted
  bool stop_at_first = true;       // false: keep exploring, collect one attack per leaf
};

struct AttackTrace {
  std::vector<Transition> transitions;  // replayable from the initial state
  State final_state;
  Formula violated;
  std::string witness;  // rendering in the paper's attack-table style

  std::string context() const { return final_state.context_summary(); }
};

struct SearchStats {
  uint64_t states_generated = 0;
  uint64_t states_expanded = 0;
  uint64_t join_nodes_pruned = 0;
  uint64_t join_leaves_total = 0;
  uint64_t join_leaves_pruned = 0;
  uint64_t contexts_total = 0;   // distinct context summaries over join leaves
  uint64_t contexts_pruned = 0;  // contexts all of whose leaves are pruned
  double contexts_pruned_fraction = 0.0;  // pruned join leaves / total join leaves
  double wall_time_ms = 0.0;
  std::vector<std::string> pruned_context_summaries;
};

std::string render_stats(const SearchStats& st);

struct CheckResult {
  Verdict verdict = Verdict::NoAttack;
  std::optional<AttackTrace> attack;          // first attack found
  std::vector<AttackTrace> attacks;           // one per leaf when !stop_at_first
  SearchStats stats;
};

// `phi` must be closed; it is normalized to PNF internally and the verdict
// refers to the normalized formula.
CheckResult find_attack(const Scenario& sc, const Formula& phi, const SearchConfig& cfg = {});

struct StrategyReport {
  CheckResult guided;
  CheckResult bfs;
  bool verdicts_agree = false;
  bool guided_not_worse = false;  // states_expanded(guided) <= states_expanded(bfs)
  std::string summary() const;
};

// Runs Guided and BFS on the same scenario. A verdict mismatch between the
// two strategies is a soundness bug and throws std::logic_error.
StrategyReport compare_strategies(const Scenario& sc, const Formula& phi);

// Numbered "X -> Y : message" lines for the communication steps, with
// "k |> ..." side conditions on intruder-sent messages. Join transitions are
// not numbered (the CLI prints context and bindings separately).
std::string render_trace(const AttackTrace& tr);

// Replays tr.transitions from the initial state; throws on an inapplicable
// transition. Used by tests to validate traces.
State replay(const Scenario& sc, const std::vector<Transition>& transitions);

// Exhaustively enumerates the states reachable from `from` (join-first
// scheduling unless `interleave`), calling visit on each state exactly once.
// Returns the number of states visited; stops early when visit returns false.
uint64_t sweep(const Scenario& sc, const State& from, bool interleave,
               const std::function<bool(const State&)>& visit);

}  // namespace cipmc
