// cipmc: heuristic-guided model checking of cryptographic protocols.
//
// Subcommands:
//   check    search a scenario for attacks (exit 0 no attack, 1 attack,
//            2 input error, 3 bound exhausted)
//   parse    parse a protocol or property file (exit 0 parsed, 2 error)
//   pnf      print the prenex normal form of a property
//   closure  print the analysis closure of a knowledge file
//   builtin  print or emit the built-in scenarios

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cipmc/fixtures.hpp"
#include "cipmc/heuristic.hpp"
#include "cipmc/search.hpp"

namespace fs = std::filesystem;
using namespace cipmc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAttack = 1;
constexpr int kExitInputError = 2;
constexpr int kExitBoundExhausted = 3;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

struct CheckArgs {
  std::string scenario_path;
  std::string protocol_path;
  std::string property_path;
  uint32_t max_instances = 0;
  std::string strategy = "guided";
  std::string check_at = "terminal";
  bool interleave_joins = false;
  bool allow_self_binding = false;
  uint64_t max_states = 2'000'000;
  std::string dot_path;
  std::string stats_path;
};

LoadedScenario load_from_args(const CheckArgs& args) {
  if (!args.scenario_path.empty()) {
    fs::path scn(args.scenario_path);
    ScenarioFile file = parse_scenario_file(read_file(scn));
    if (args.max_instances) file.max_instances = args.max_instances;
    if (args.allow_self_binding) file.allow_self_binding = true;
    fs::path base = scn.parent_path();
    return load_scenario(file, read_file(base / file.protocol_path),
                         read_file(base / file.property_path));
  }
  if (args.protocol_path.empty() || args.property_path.empty())
    throw std::runtime_error("check needs --scenario or both --protocol and --property");
  ScenarioFile file;
  file.protocol_path = args.protocol_path;
  file.property_path = args.property_path;
  file.max_instances = args.max_instances ? args.max_instances : 2;
  file.allow_self_binding = args.allow_self_binding;
  return load_scenario(file, read_file(args.protocol_path), read_file(args.property_path));
}

int run_check(const CheckArgs& args) {
  LoadedScenario loaded = load_from_args(args);

  SearchConfig cfg;
  if (args.strategy == "guided") cfg.strategy = Strategy::Guided;
  else if (args.strategy == "bfs") cfg.strategy = Strategy::BFS;
  else if (args.strategy == "dfs") cfg.strategy = Strategy::DFS;
  else throw std::runtime_error("unknown strategy '" + args.strategy + "'");
  if (args.check_at == "terminal") cfg.check_at = CheckAt::Terminal;
  else if (args.check_at == "all") cfg.check_at = CheckAt::AllStates;
  else throw std::runtime_error("unknown check-at mode '" + args.check_at + "'");
  cfg.interleave_joins = args.interleave_joins;
  cfg.max_states = args.max_states;

  if (!args.dot_path.empty())
    write_file(args.dot_path, to_dot(build_weighted_tree(loaded.scenario, loaded.property)));

  CheckResult result = find_attack(loaded.scenario, loaded.property, cfg);

  if (!args.stats_path.empty()) write_file(args.stats_path, render_stats(result.stats));

  switch (result.verdict) {
    case Verdict::Attack: {
      const AttackTrace& tr = *result.attack;
      std::cout << "attack found in context " << tr.context() << "\n";
      for (const auto& t : tr.transitions)
        if (is_join(t)) std::cout << render_transition(t) << "\n";
      std::cout << tr.witness;
      std::cout << "violated: " << render_formula(tr.violated) << "\n";
      return kExitAttack;
    }
    case Verdict::NoAttack:
      std::cout << "no attack (bound " << loaded.scenario.max_instances << ", "
                << result.stats.states_expanded << " states expanded)\n";
      return kExitOk;
    case Verdict::BoundExhausted:
      std::cout << "bound exhausted after " << result.stats.states_generated
                << " states; verdict unknown\n";
      return kExitBoundExhausted;
  }
  return kExitInputError;
}

int run_parse(const std::string& protocol_path, const std::string& property_path) {
  if (!protocol_path.empty()) {
    auto defs = parse_protocol(read_file(protocol_path));
    std::cout << render_protocol(defs);
    if (!property_path.empty()) {
      SymbolTable symbols = SymbolTable::from_protocol(defs);
      std::cout << render_formula(parse_property(read_file(property_path), symbols)) << "\n";
    }
    return kExitOk;
  }
  if (!property_path.empty()) {
    std::cout << render_formula(parse_property(read_file(property_path))) << "\n";
    return kExitOk;
  }
  throw std::runtime_error("parse needs --protocol and/or --property");
}

int run_pnf(const std::string& property_path) {
  Formula f = parse_property(read_file(property_path));
  std::cout << render_formula(pnf(f)) << "\n";
  return kExitOk;
}

int run_closure(const std::string& knowledge_path) {
  std::istringstream in(read_file(knowledge_path));
  std::vector<Term> base;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t\r");
    base.push_back(parse_term(line.substr(a, b - a + 1)));
  }
  std::cout << Knowledge::analyze(base).render_closure();
  return kExitOk;
}

int run_builtin(const std::string& name, bool emit, const std::string& dir) {
  const BuiltinFixture& fixture = builtin(name);
  if (emit) {
    fs::path base(dir.empty() ? "." : dir);
    fs::create_directories(base);
    write_file(base / (fixture.name + ".cip"), fixture.protocol_text);
    write_file(base / (fixture.name + ".pl"), fixture.property_text);
    write_file(base / (fixture.name + ".scn"), fixture.scenario_text);
    std::cout << (base / (fixture.name + ".scn")).string() << "\n";
  } else {
    std::cout << "# " << fixture.name << ".cip\n" << fixture.protocol_text;
    std::cout << "# " << fixture.name << ".pl\n" << fixture.property_text;
    std::cout << "# " << fixture.name << ".scn\n" << fixture.scenario_text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cipmc: heuristic-guided model checker for cryptographic protocols"};
  app.require_subcommand(1);

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "search a scenario for attacks");
  check->add_option("--scenario", check_args.scenario_path, "scenario file");
  check->add_option("--protocol", check_args.protocol_path, "protocol file");
  check->add_option("--property", check_args.property_path, "property file");
  check->add_option("--max-instances", check_args.max_instances, "instance budget");
  check->add_option("--strategy", check_args.strategy, "guided|bfs|dfs");
  check->add_option("--check-at", check_args.check_at, "terminal|all");
  check->add_flag("--interleave-joins", check_args.interleave_joins,
                  "allow joins after communication steps (baselines)");
  check->add_flag("--allow-self-binding", check_args.allow_self_binding,
                  "let identity-sorted open variables bind the joining instance");
  check->add_option("--max-states", check_args.max_states, "state generation cap");
  check->add_option("--emit-dot", check_args.dot_path, "write the weighted join tree (DOT)");
  check->add_option("--stats", check_args.stats_path, "write search statistics");

  std::string parse_protocol_path, parse_property_path;
  auto* parse = app.add_subcommand("parse", "parse and pretty-print inputs");
  parse->add_option("--protocol", parse_protocol_path, "protocol file");
  parse->add_option("--property", parse_property_path, "property file");

  std::string pnf_property_path;
  auto* pnf_cmd = app.add_subcommand("pnf", "print the prenex normal form of a property");
  pnf_cmd->add_option("property", pnf_property_path, "property file")->required();

  std::string closure_path;
  auto* closure = app.add_subcommand("closure", "print an analysis closure, one term per line");
  closure->add_option("knowledge", closure_path, "file with one term per line")->required();

  std::string builtin_name, builtin_dir;
  bool builtin_emit = false;
  auto* builtin_cmd = app.add_subcommand("builtin", "show or emit built-in scenarios");
  builtin_cmd->add_option("name", builtin_name, "ns|ksl")->required();
  builtin_cmd->add_flag("--emit", builtin_emit, "write the files");
  builtin_cmd->add_option("--dir", builtin_dir, "output directory (default .)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return run_check(check_args);
    if (*parse) return run_parse(parse_protocol_path, parse_property_path);
    if (*pnf_cmd) return run_pnf(pnf_property_path);
    if (*closure) return run_closure(closure_path);
    if (*builtin_cmd) return run_builtin(builtin_name, builtin_emit, builtin_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
