// occrisk run --scenario FILE [--occlusion on|off] [--out DIR] [--compare]
//             [--dump-grids] [--set KEY=VALUE ...]
//
// Exit status: 0 finished, 2 collision, 3 solver failure (braking fallback
// was applied), 1 bad input.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "occrisk/sim.hpp"

namespace fs = std::filesystem;
using namespace occrisk;

namespace {

struct Run {
  ScenarioConfig cfg;
  RunMetrics m;
  int exit_code{0};
};

Run run_one(ScenarioConfig cfg, const fs::path& out, bool dump_grids) {
  fs::create_directories(out);
  RunOptions opts;
  if (dump_grids) opts.grid_dir = out / "grids";
  const auto recs = run_scenario(cfg, opts);
  Run r{cfg, metrics(recs, cfg)};
  {
    std::ofstream f(out / "steps.csv");
    write_steps_csv(f, recs, cfg);
  }
  {
    std::ofstream f(out / "solves.csv");
    write_solves_csv(f, recs);
  }
  {
    std::ofstream f(out / "summary.txt");
    write_summary(f, cfg, r.m);
  }
  r.exit_code = r.m.collision ? 2 : r.m.fallbacks > 0 ? 3 : 0;
  return r;
}

void print_summary(const Run& r) {
  std::printf("%s (occlusion %s): min clearance %.3f m, collision %s, mean solve %.2f ms\n", r.cfg.name.c_str(),
              r.cfg.occlusion_tracking ? "on" : "off", r.m.min_clearance,
              r.m.collision ? ("yes, " + r.m.collided_with).c_str() : "no", r.m.mean_solve_ms);
}

std::string detection(const AgentMetrics& a) {
  if (!a.first_detection) return "never";
  char buf[96];
  std::snprintf(buf, sizeof buf, "t=%.1f d=%.2f v-=%.2f", a.detection_time, a.detection_distance,
                a.ego_speed_before_detection);
  return buf;
}

void print_comparison(const Run& on, const Run& off) {
  const auto row = [](const std::string& k, const std::string& a, const std::string& b) {
    std::printf("%-28s %-30s %-30s\n", k.c_str(), a.c_str(), b.c_str());
  };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  row("", "occlusion on", "occlusion off");
  row("collision", on.m.collision ? "yes (" + on.m.collided_with + ")" : "no",
      off.m.collision ? "yes (" + off.m.collided_with + ")" : "no");
  row("min clearance [m]", num(on.m.min_clearance), num(off.m.min_clearance));
  row("standstill intervals", std::to_string(on.m.standstill.size()), std::to_string(off.m.standstill.size()));
  row("mean solve [ms]", num(on.m.mean_solve_ms), num(off.m.mean_solve_ms));
  row("max iterations", std::to_string(on.m.max_iterations), std::to_string(off.m.max_iterations));
  row("fallbacks", std::to_string(on.m.fallbacks), std::to_string(off.m.fallbacks));
  row("soundness violations", std::to_string(on.m.soundness_violations), std::to_string(off.m.soundness_violations));
  for (std::size_t i = 0; i < on.m.agents.size(); ++i) {
    row("detect " + on.m.agents[i].id, detection(on.m.agents[i]), detection(off.m.agents[i]));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occlusion-aware risk-field MPC simulator"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "run a scenario");
  std::string scenario;
  std::string occlusion;
  std::string out = "out";
  bool compare = false;
  bool dump_grids = false;
  std::vector<std::string> sets;
  run->add_option("--scenario", scenario, "scenario JSON file")->required();
  run->add_option("--occlusion", occlusion, "override occlusion tracking")->check(CLI::IsMember({"on", "off"}));
  run->add_option("--out", out, "output directory");
  run->add_flag("--compare", compare, "run with occlusion tracking on and off");
  run->add_flag("--dump-grids", dump_grids, "write hidden sets as PGM");
  run->add_option("--set", sets, "override a config value, KEY=VALUE")->take_all();
  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError(s, "expected KEY=VALUE");
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!occlusion.empty()) overrides.emplace_back("occlusion_tracking", occlusion == "on" ? "true" : "false");
    const ScenarioConfig cfg = load_config(scenario, overrides);
    write_parameter_header(std::cout, cfg);

    if (!compare) {
      const Run r = run_one(cfg, out, dump_grids);
      print_summary(r);
      return r.exit_code;
    }
    ScenarioConfig on = cfg, off = cfg;
    on.occlusion_tracking = true;
    off.occlusion_tracking = false;
    const Run a = run_one(on, fs::path(out) / "occlusion_on", dump_grids);
    const Run b = run_one(off, fs::path(out) / "occlusion_off", dump_grids);
    print_summary(a);
    print_summary(b);
    print_comparison(a, b);
    return std::max(a.exit_code == 3 ? 3 : 0, b.exit_code == 3 ? 3 : 0);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
