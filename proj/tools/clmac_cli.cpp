#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clmac/continual.hpp"
#include "clmac/harness.hpp"
#include "clmac/oracle.hpp"

namespace fs = std::filesystem;
using namespace clmac;

namespace {

bool quiet() {
  const char* v = std::getenv("CLMAC_LOG");
  return v != nullptr && std::string(v) == "quiet";
}

std::string run_stem(AgentKind kind, std::uint64_t seed) {
  std::ostringstream os;
  os << to_string(kind) << "_seed" << seed;
  return os.str();
}

int cmd_run(const std::string& scenario_path, const std::string& agent_name,
            const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
            bool dump_slots) {
  const ScenarioSpec spec = ScenarioSpec::from_json(read_file(scenario_path));
  const AgentKind kind = agent_kind_from_string(agent_name);
  fs::create_directories(out_dir);
  RunOptions opts;
  opts.dump_slots = dump_slots;
  std::vector<RunResult> runs;
  for (std::uint64_t seed : seeds) {
    RunResult run = run_scenario(spec, kind, seed, opts);
    const std::string stem = (fs::path(out_dir) / run_stem(kind, seed)).string();
    write_file(stem + "_metrics.csv", metrics_csv(run));
    write_file(stem + "_fairness.csv", fairness_csv(run));
    write_file(stem + "_trace.csv", trace_csv(run));
    write_file(stem + "_registry.csv", registry_csv(run));
    if (dump_slots) {
      std::ostringstream os;
      os << "slot,channel,transmitter_ids\n";
      for (const std::string& row : run.slot_rows) os << row << "\n";
      write_file(stem + "_slots.csv", os.str());
    }
    if (!quiet()) {
      std::cout << stem << ": decisions=" << run.decisions
                << " announcements=" << run.announcements
                << " registry=" << run.registry.size();
      if (!run.windows.empty())
        std::cout << " final_throughput=" << run.windows.back().throughput
                  << " final_collision=" << run.windows.back().collision_rate;
      std::cout << "\n";
    }
    runs.push_back(std::move(run));
  }
  const Aggregate agg = aggregate(runs);
  const std::string summary =
      (fs::path(out_dir) / (to_string(kind) + "_summary.csv")).string();
  write_file(summary, aggregate_csv(agg));
  if (!quiet()) {
    std::cout << "summary: " << summary << "\n";
    const auto summaries = interval_summaries(runs.front());
    for (const IntervalSummary& s : summaries)
      std::cout << "interval " << s.index << " [" << s.from << ", " << s.until
                << "): mean_throughput=" << s.mean_throughput
                << " mean_collision=" << s.mean_collision
                << " mean_jain=" << s.mean_jain << " (seed " << runs.front().seed
                << ")\n";
  }
  return 0;
}

int cmd_oracle(const std::string& instance_path, const std::string& out_dir) {
  const OracleInstance inst = OracleInstance::from_json(read_file(instance_path));
  const OracleResult res = brute_force_optimum(inst);
  const ConstraintReport rep =
      check_constraints(res.schedule, inst.busy_matrix(), inst.chi, inst.window);
  std::cout << "objective=" << res.objective << " nodes=" << res.nodes
            << " constraints=" << (rep.ok() ? "pass" : "FAIL") << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const std::string path = (fs::path(out_dir) / "result.csv").string();
    std::ostringstream os;
    os << "# objective," << res.objective << "\n" << schedule_csv(res.schedule);
    write_file(path, os.str());
    std::cout << "schedule: " << path << "\n";
  }
  return rep.ok() ? 0 : 1;
}

int cmd_bound(int types, int channels) {
  std::cout << context_bound(types, channels) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slotted multi-channel MAC simulator and learning harness"};
  app.require_subcommand(1);

  std::string scenario_path, agent_name = "cl-d3ql", out_dir = "out";
  std::vector<std::uint64_t> seeds{1};
  bool dump_slots = false;
  CLI::App* run = app.add_subcommand("run", "run a scenario");
  run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--agent", agent_name, "cl-d3ql | d3ql | random");
  run->add_option("--seeds", seeds, "comma-separated seed list")->delimiter(',');
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--dump-slots", dump_slots, "also write per-slot transmitter CSVs");

  std::string instance_path, oracle_out;
  CLI::App* oracle = app.add_subcommand("oracle", "solve a small planning instance");
  oracle->add_option("--instance", instance_path, "instance JSON file")->required();
  oracle->add_option("--out", oracle_out, "directory for the schedule CSV");

  int types = 0, channels = 0;
  CLI::App* bound = app.add_subcommand("bound", "max distinct canonical contexts");
  bound->add_option("--types", types, "distinct per-channel signatures")->required();
  bound->add_option("--channels", channels, "number of channels")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed())
      return cmd_run(scenario_path, agent_name, seeds, out_dir, dump_slots);
    if (oracle->parsed()) return cmd_oracle(instance_path, oracle_out);
    if (bound->parsed()) return cmd_bound(types, channels);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
