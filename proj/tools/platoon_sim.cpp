#include <cstdio>
#include <exception>
#include <iostream>

#include "platoon/io.hpp"
#include "platoon/simulation.hpp"

using namespace platoon;

int main(int argc, char** argv) {
  CliCommand cmd;
  try {
    cmd = parse_args(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  if (cmd.kind == CliCommand::Kind::Help) {
    std::cout << cmd.help_text;
    return 0;
  }
  if (cmd.kind == CliCommand::Kind::List) {
    for (const auto& name : scenario_names()) std::cout << name << "\n";
    return 0;
  }

  try {
    const ScenarioConfig cfg = build_scenario(cmd.run);
    const RunResult res = run(cfg);
    write_log(res.log, cmd.run.format, cmd.run.out);
    if (cmd.run.plot_dir) {
      const PlotOutput plots = emit_plotdata(res.log, *cmd.run.plot_dir);
      if (plots.warning) std::cerr << "warning: " << *plots.warning << "\n";
    }

    std::cout << cfg.name << " / " << to_string(cfg.ctrl.variant) << ": ";
    if (res.collision.occurred) {
      std::printf("collision at t=%.2f s between %d and %d", res.collision.first_time,
                  res.collision.pair.first, res.collision.pair.second);
    } else {
      std::printf("no collision");
    }
    std::printf(", min TTC %.3g s", res.collision.min_ttc);
    if (!res.infeasible.empty()) {
      std::printf(", first infeasible QP at t=%.2f s (vehicle %d)", res.infeasible.front().t,
                  res.infeasible.front().id);
    }
    std::printf("\n");
    for (const auto& ev : res.transitions) {
      std::cout << "  t=" << format_number(ev.t) << " vehicle " << ev.id << ": "
                << to_string(ev.from) << " -> " << to_string(ev.to) << "\n";
    }
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
