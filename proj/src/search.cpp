#include "cipmc/search.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace cipmc {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Guided: return "guided";
    case Strategy::BFS: return "bfs";
    case Strategy::DFS: return "dfs";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Attack: return "attack";
    case Verdict::NoAttack: return "no-attack";
    case Verdict::BoundExhausted: return "bound-exhausted";
  }
  return "?";
}

std::string render_stats(const SearchStats& st) {
  std::ostringstream out;
  out << "states_generated=" << st.states_generated << "\n";
  out << "states_expanded=" << st.states_expanded << "\n";
  out << "join_nodes_pruned=" << st.join_nodes_pruned << "\n";
  out << "join_leaves_total=" << st.join_leaves_total << "\n";
  out << "join_leaves_pruned=" << st.join_leaves_pruned << "\n";
  out << "contexts_total=" << st.contexts_total << "\n";
  out << "contexts_pruned=" << st.contexts_pruned << "\n";
  out << "contexts_pruned_fraction=" << st.contexts_pruned_fraction << "\n";
  out << "wall_time_ms=" << st.wall_time_ms << "\n";
  std::string pruned;
  for (size_t i = 0; i < st.pruned_context_summaries.size(); ++i) {
    if (i) pruned += " ";
    pruned += st.pruned_context_summaries[i];
  }
  out << "pruned_contexts=" << pruned << "\n";
  return out.str();
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Terminal checking looks at finished runs: the join phase is closed and
// every joined instance has consumed its script.
bool should_check(const State& s, const Scenario& sc, CheckAt check_at) {
  if (check_at == CheckAt::AllStates) return true;
  if (!is_completed(s)) return false;
  return s.joins_left == 0 || join_transitions(s, sc).empty();
}

// Delivered wire message of an in-step.
Term delivered_message(const InData& in) {
  return apply_binders(wire_form(in.pattern), in.sigma);
}

struct SearchNode {
  State state;
  int64_t parent;
  std::optional<Transition> via;
};

std::vector<Transition> trace_of(const std::vector<SearchNode>& nodes, int64_t id,
                                 const std::vector<Transition>& prefix) {
  std::vector<Transition> out = prefix;
  std::vector<Transition> tail;
  for (int64_t cur = id; cur >= 0 && nodes[cur].via; cur = nodes[cur].parent)
    tail.push_back(*nodes[cur].via);
  out.insert(out.end(), tail.rbegin(), tail.rend());
  return out;
}

struct Explorer {
  const Scenario& sc;
  const Formula& phi;
  const SearchConfig& cfg;
  SearchStats& stats;
  bool aborted = false;

  // Exhaustive search over the subspace rooted at `root`. `joins_allowed`
  // selects whether join transitions participate (baselines) or only
  // communications (guided leaf exploration). Returns attacks found (one per
  // call when cfg.stop_at_first).
  std::vector<AttackTrace> run(const State& root, const std::vector<Transition>& prefix,
                               bool joins_allowed, bool breadth_first) {
    std::vector<AttackTrace> found;
    std::vector<SearchNode> nodes;
    std::deque<int64_t> queue;
    std::set<std::string> visited;

    auto add = [&](State s, int64_t parent, std::optional<Transition> via) -> bool {
      if (!visited.insert(s.dedup_key()).second) return true;
      if (++stats.states_generated > cfg.max_states) {
        aborted = true;
        return false;
      }
      nodes.push_back(SearchNode{std::move(s), parent, std::move(via)});
      int64_t id = static_cast<int64_t>(nodes.size()) - 1;
      const State& state = nodes[id].state;
      if (should_check(state, sc, cfg.check_at) &&
          !evaluate(EvalContext{*state.kappa, state.chi}, phi)) {
        AttackTrace tr;
        tr.transitions = trace_of(nodes, id, prefix);
        tr.final_state = state;
        tr.violated = phi;
        found.push_back(std::move(tr));
        if (cfg.stop_at_first) return false;
      }
      queue.push_back(id);
      return true;
    };

    if (!add(root, -1, std::nullopt)) return found;
    while (!queue.empty()) {
      int64_t id;
      if (breadth_first) {
        id = queue.front();
        queue.pop_front();
      } else {
        id = queue.back();
        queue.pop_back();
      }
      State state = nodes[id].state;  // copy: nodes may reallocate below
      ++stats.states_expanded;

      std::vector<Transition> succ;
      if (joins_allowed) {
        bool join_phase = state.joins_left > 0;
        if (join_phase) succ = join_transitions(state, sc);
        if (!join_phase || cfg.interleave_joins) {
          std::vector<Transition> comms = comm_transitions(state);
          succ.insert(succ.end(), comms.begin(), comms.end());
        }
      } else {
        succ = comm_transitions(state);
      }
      for (const auto& t : succ)
        if (!add(apply_transition(state, t, sc), id, t)) return found;
    }
    return found;
  }
};

void fill_tree_stats(const WeightedJoinTree& tree, SearchStats& stats) {
  stats.join_nodes_pruned = tree.pruned_nodes().size();
  std::map<std::string, std::pair<uint64_t, uint64_t>> per_context;  // total, pruned
  for (int leaf : tree.leaves()) {
    ++stats.join_leaves_total;
    auto& [total, pruned] = per_context[tree.nodes[leaf].state.context_summary()];
    ++total;
    if (tree.nodes[leaf].pruned) {
      ++stats.join_leaves_pruned;
      ++pruned;
    }
  }
  stats.contexts_total = per_context.size();
  for (const auto& [summary, counts] : per_context) {
    if (counts.second == counts.first) {
      ++stats.contexts_pruned;
      stats.pruned_context_summaries.push_back(summary);
    }
  }
  stats.contexts_pruned_fraction =
      stats.join_leaves_total
          ? static_cast<double>(stats.join_leaves_pruned) / stats.join_leaves_total
          : 0.0;
}

CheckResult guided_search(const Scenario& sc, const Formula& phi, const SearchConfig& cfg) {
  auto start = Clock::now();
  CheckResult result;

  WeightedJoinTree tree = build_weighted_tree(sc, phi);
  result.stats.states_generated = tree.nodes.size();
  fill_tree_stats(tree, result.stats);

  // Surviving leaves in descending path-weight order (lexicographic over the
  // edge weights, a missing element ranking lowest), ties in tree order.
  std::vector<int> leaves;
  for (int leaf : tree.leaves())
    if (!tree.nodes[leaf].pruned) leaves.push_back(leaf);
  std::map<int, std::vector<HeuristicValue>> weights;
  for (int leaf : leaves) weights[leaf] = tree.path_weights(leaf);
  std::stable_sort(leaves.begin(), leaves.end(), [&](int a, int b) {
    const auto& wa = weights[a];
    const auto& wb = weights[b];
    size_t n = std::min(wa.size(), wb.size());
    for (size_t i = 0; i < n; ++i) {
      if (wb[i] < wa[i]) return true;
      if (wa[i] < wb[i]) return false;
    }
    return wa.size() > wb.size();
  });

  Explorer explorer{sc, phi, cfg, result.stats};
  for (int leaf : leaves) {
    std::vector<Transition> prefix = tree.path_transitions(leaf);
    std::vector<AttackTrace> found =
        explorer.run(tree.nodes[leaf].state, prefix, /*joins_allowed=*/false,
                     /*breadth_first=*/true);
    for (auto& tr : found) {
      tr.witness = render_trace(tr);
      if (!result.attack) result.attack = tr;
      result.attacks.push_back(std::move(tr));
    }
    if (explorer.aborted || (result.attack && cfg.stop_at_first)) break;
  }

  result.verdict = explorer.aborted ? Verdict::BoundExhausted
                   : result.attack  ? Verdict::Attack
                                    : Verdict::NoAttack;
  result.stats.wall_time_ms = ms_since(start);
  return result;
}

CheckResult baseline_search(const Scenario& sc, const Formula& phi, const SearchConfig& cfg) {
  auto start = Clock::now();
  CheckResult result;

  Explorer explorer{sc, phi, cfg, result.stats};
  std::vector<AttackTrace> found =
      explorer.run(initial_state(sc), {}, /*joins_allowed=*/true,
                   /*breadth_first=*/cfg.strategy != Strategy::DFS);
  for (auto& tr : found) {
    tr.witness = render_trace(tr);
    if (!result.attack) result.attack = tr;
    result.attacks.push_back(std::move(tr));
  }

  result.verdict = explorer.aborted ? Verdict::BoundExhausted
                   : result.attack  ? Verdict::Attack
                                    : Verdict::NoAttack;
  result.stats.wall_time_ms = ms_since(start);
  return result;
}

}  // namespace

CheckResult find_attack(const Scenario& sc, const Formula& phi, const SearchConfig& cfg) {
  if (!is_closed(phi)) throw std::invalid_argument("property must be a closed formula");
  Formula normalized = pnf(phi);
  if (cfg.strategy == Strategy::Guided) return guided_search(sc, normalized, cfg);
  return baseline_search(sc, normalized, cfg);
}

StrategyReport compare_strategies(const Scenario& sc, const Formula& phi) {
  StrategyReport report;
  SearchConfig guided_cfg;
  report.guided = find_attack(sc, phi, guided_cfg);
  SearchConfig bfs_cfg;
  bfs_cfg.strategy = Strategy::BFS;
  report.bfs = find_attack(sc, phi, bfs_cfg);

  report.verdicts_agree = report.guided.verdict == report.bfs.verdict;
  report.guided_not_worse =
      report.guided.stats.states_expanded <= report.bfs.stats.states_expanded;
  if (!report.verdicts_agree)
    throw std::logic_error("strategy verdict mismatch: guided=" +
                           to_string(report.guided.verdict) +
                           " bfs=" + to_string(report.bfs.verdict));
  return report;
}

std::string StrategyReport::summary() const {
  std::ostringstream out;
  out << "guided: " << to_string(guided.verdict)
      << " expanded=" << guided.stats.states_expanded << "\n";
  out << "bfs:    " << to_string(bfs.verdict) << " expanded=" << bfs.stats.states_expanded
      << "\n";
  out << "verdicts_agree=" << (verdicts_agree ? "yes" : "no")
      << " guided_not_worse=" << (guided_not_worse ? "yes" : "no") << "\n";
  return out.str();
}

std::string render_trace(const AttackTrace& tr) {
  std::string out;
  int step = 0;
  for (const auto& t : tr.transitions) {
    if (const auto* o = std::get_if<OutData>(&t)) {
      const Instance* inst = tr.final_state.find_instance(o->instance_index);
      std::string who = inst ? inst->label() : "?";
      out += std::to_string(++step) + ". " + who + " → I : " + render(o->message) + "\n";
    } else if (const auto* in = std::get_if<InData>(&t)) {
      const Instance* inst = tr.final_state.find_instance(in->instance_index);
      std::string who = inst ? inst->label() : "?";
      Term msg = delivered_message(*in);
      out += std::to_string(++step) + ". I → " + who + " : " + render(msg);
      // Side condition: the components the intruder derived.
      std::vector<Term> parts;
      if (msg->kind == TermKind::Enc) {
        const Term& payload = msg->payload();
        if (payload->kind == TermKind::Tuple)
          parts = payload->children;
        else
          parts = {payload};
      } else if (msg->kind == TermKind::Tuple) {
        parts = msg->children;
      } else {
        parts = {msg};
      }
      out += ", κ ▷ ";
      for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ", ";
        out += render(parts[i]);
      }
      out += "\n";
    }
  }
  return out;
}

State replay(const Scenario& sc, const std::vector<Transition>& transitions) {
  State s = initial_state(sc);
  for (const auto& t : transitions) s = apply_transition(s, t, sc);
  return s;
}

uint64_t sweep(const Scenario& sc, const State& from, bool interleave,
               const std::function<bool(const State&)>& visit) {
  std::deque<State> queue;
  std::set<std::string> visited;
  uint64_t count = 0;

  auto add = [&](State s) -> bool {
    if (!visited.insert(s.dedup_key()).second) return true;
    ++count;
    if (!visit(s)) return false;
    queue.push_back(std::move(s));
    return true;
  };

  if (!add(from)) return count;
  while (!queue.empty()) {
    State state = std::move(queue.front());
    queue.pop_front();
    std::vector<Transition> succ;
    bool join_phase = state.joins_left > 0 && !join_transitions(state, sc).empty();
    if (join_phase) succ = join_transitions(state, sc);
    if (!join_phase || interleave) {
      std::vector<Transition> comms = comm_transitions(state);
      succ.insert(succ.end(), comms.begin(), comms.end());
    }
    for (const auto& t : succ)
      if (!add(apply_transition(state, t, sc))) return count;
  }
  return count;
}

}  // namespace cipmc
