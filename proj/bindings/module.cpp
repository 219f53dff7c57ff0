// Python bindings for the main operations: parsing, PNF, evaluation,
// intruder knowledge and the attack search.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cipmc/fixtures.hpp"
#include "cipmc/heuristic.hpp"
#include "cipmc/search.hpp"

namespace py = pybind11;
using namespace cipmc;

namespace {

LoadedScenario assemble(const std::string& protocol_text, const std::string& property_text,
                        uint32_t max_instances, const std::vector<std::string>& knowledge,
                        const std::vector<std::string>& bind,
                        bool allow_self_binding) {
  std::string scn = "protocol p.cip\nproperty p.pl\nmax_instances " +
                    std::to_string(max_instances) + "\n";
  if (!knowledge.empty()) {
    scn += "knowledge ";
    for (size_t i = 0; i < knowledge.size(); ++i) {
      if (i) scn += ", ";
      scn += knowledge[i];
    }
    scn += "\n";
  }
  for (const auto& line : bind) scn += "bind " + line + "\n";
  if (allow_self_binding) scn += "allow_self_binding true\n";
  return load_scenario(parse_scenario_file(scn), protocol_text, property_text);
}

SearchConfig make_config(const std::string& strategy, const std::string& check_at,
                         bool interleave_joins, uint64_t max_states) {
  SearchConfig cfg;
  if (strategy == "guided") cfg.strategy = Strategy::Guided;
  else if (strategy == "bfs") cfg.strategy = Strategy::BFS;
  else if (strategy == "dfs") cfg.strategy = Strategy::DFS;
  else throw std::invalid_argument("unknown strategy '" + strategy + "'");
  if (check_at == "terminal") cfg.check_at = CheckAt::Terminal;
  else if (check_at == "all") cfg.check_at = CheckAt::AllStates;
  else throw std::invalid_argument("unknown check_at '" + check_at + "'");
  cfg.interleave_joins = interleave_joins;
  cfg.max_states = max_states;
  return cfg;
}

py::dict stats_dict(const SearchStats& st) {
  py::dict d;
  d["states_generated"] = st.states_generated;
  d["states_expanded"] = st.states_expanded;
  d["join_nodes_pruned"] = st.join_nodes_pruned;
  d["join_leaves_total"] = st.join_leaves_total;
  d["join_leaves_pruned"] = st.join_leaves_pruned;
  d["contexts_total"] = st.contexts_total;
  d["contexts_pruned"] = st.contexts_pruned;
  d["contexts_pruned_fraction"] = st.contexts_pruned_fraction;
  d["wall_time_ms"] = st.wall_time_ms;
  d["pruned_contexts"] = st.pruned_context_summaries;
  return d;
}

py::dict result_dict(const CheckResult& result) {
  py::dict d;
  d["verdict"] = to_string(result.verdict);
  if (result.attack) {
    py::dict a;
    a["context"] = result.attack->context();
    a["trace"] = result.attack->witness;
    a["violated"] = render_formula(result.attack->violated);
    d["attack"] = a;
  } else {
    d["attack"] = py::none();
  }
  d["stats"] = stats_dict(result.stats);
  return d;
}

}  // namespace

PYBIND11_MODULE(cipmc, m) {
  m.doc() = "heuristic-guided model checker for cryptographic protocols";

  m.def("parse_protocol",
        [](const std::string& text) { return render_protocol(parse_protocol(text)); },
        py::arg("text"),
        "Parse a protocol and return its pretty-printed form.");

  m.def("parse_property",
        [](const std::string& text, const std::string& protocol_text) {
          SymbolTable symbols;
          if (!protocol_text.empty())
            symbols = SymbolTable::from_protocol(parse_protocol(protocol_text));
          return render_formula(parse_property(text, symbols));
        },
        py::arg("text"), py::arg("protocol") = "",
        "Parse a property and return its rendering.");

  m.def("pnf",
        [](const std::string& text) { return render_formula(pnf(parse_property(text))); },
        py::arg("text"), "Prenex normal form of a property.");

  m.def("is_pnf",
        [](const std::string& text) { return is_pnf(parse_property(text)); },
        py::arg("text"));

  m.def("analyze",
        [](const std::vector<std::string>& base) {
          std::vector<Term> terms;
          for (const auto& s : base) terms.push_back(parse_term(s));
          std::vector<std::string> out;
          for (const auto& t : Knowledge::analyze(terms).analyzed()) out.push_back(render(t));
          std::sort(out.begin(), out.end());
          return out;
        },
        py::arg("base"), "Analysis closure of a set of terms, sorted by rendering.");

  m.def("derives",
        [](const std::vector<std::string>& base, const std::string& query) {
          std::vector<Term> terms;
          for (const auto& s : base) terms.push_back(parse_term(s));
          return Knowledge::analyze(terms).derives(parse_term(query));
        },
        py::arg("base"), py::arg("query"), "Dolev-Yao derivability kappa |> m.");

  m.def("builtin",
        [](const std::string& name) {
          const BuiltinFixture& f = builtin(name);
          py::dict d;
          d["protocol"] = f.protocol_text;
          d["property"] = f.property_text;
          d["scenario"] = f.scenario_text;
          return d;
        },
        py::arg("name"), "Built-in scenario texts ('ns' or 'ksl').");

  m.def("check",
        [](const std::string& protocol, const std::string& property, uint32_t max_instances,
           const std::vector<std::string>& knowledge, const std::vector<std::string>& bind,
           bool allow_self_binding, const std::string& strategy, const std::string& check_at,
           bool interleave_joins, uint64_t max_states) {
          LoadedScenario loaded = assemble(protocol, property, max_instances, knowledge,
                                           bind, allow_self_binding);
          SearchConfig cfg = make_config(strategy, check_at, interleave_joins, max_states);
          return result_dict(find_attack(loaded.scenario, loaded.property, cfg));
        },
        py::arg("protocol"), py::arg("property"), py::arg("max_instances"),
        py::arg("knowledge") = std::vector<std::string>{},
        py::arg("bind") = std::vector<std::string>{},
        py::arg("allow_self_binding") = false, py::arg("strategy") = "guided",
        py::arg("check_at") = "terminal", py::arg("interleave_joins") = false,
        py::arg("max_states") = uint64_t{2'000'000},
        "Search a scenario for attacks; returns verdict, attack and stats.");

  m.def("check_builtin",
        [](const std::string& name, uint32_t max_instances, const std::string& strategy) {
          LoadedScenario loaded = builtin(name).load(max_instances);
          SearchConfig cfg;
          if (strategy == "bfs") cfg.strategy = Strategy::BFS;
          else if (strategy == "dfs") cfg.strategy = Strategy::DFS;
          return result_dict(find_attack(loaded.scenario, loaded.property, cfg));
        },
        py::arg("name"), py::arg("max_instances") = 2, py::arg("strategy") = "guided");

  m.def("join_tree_dot",
        [](const std::string& name, uint32_t max_instances) {
          LoadedScenario loaded = builtin(name).load(max_instances);
          return to_dot(build_weighted_tree(loaded.scenario, loaded.property));
        },
        py::arg("name"), py::arg("max_instances") = 2,
        "DOT rendering of a builtin's weighted join tree.");
}
