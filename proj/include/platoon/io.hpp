#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "platoon/controller.hpp"
#include "platoon/scenario.hpp"
#include "platoon/simulation.hpp"

namespace platoon {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration overrides

/// Applies flat `key = value` overrides (one per line, '#' starts a comment)
/// to a scenario. Throws ConfigError naming the line for unknown keys and
/// malformed values.
void apply_config_text(ScenarioConfig& cfg, const std::string& text);
void apply_config_file(ScenarioConfig& cfg, const std::filesystem::path& path);

/// Every recognized key for the given scenario, with its current value.
std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& cfg);

// ---------------------------------------------------------------------------
// Trajectory serialization

enum class LogFormat { Csv, Json };

inline constexpr const char* kCsvHeader =
    "t,id,x,y,psi,v,a,beta,fsm_state,h_fc,h_ft,h_bt,delta_l,delta_y,delta_psi,feasible,collision";

/// Nine significant digits, shortest form.
std::string format_number(double value);

std::string log_to_csv(const TrajectoryLog& log);
std::string log_to_json(const TrajectoryLog& log);
TrajectoryLog log_from_csv(const std::string& text);

/// Writes the log; throws IoError with the path on failure.
void write_log(const TrajectoryLog& log, LogFormat format, const std::filesystem::path& path);

struct PlotOutput {
  std::vector<std::filesystem::path> files;
  std::optional<std::string> warning;
};

/// Two-column text series into `dir`: velocity_<id>.dat (t v), trajectory_<id>.dat
/// (x y), barrier_<id>_<fc|ft|bt>.dat (t h) and collision.dat (t 0/1).
PlotOutput emit_plotdata(const TrajectoryLog& log, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Command line

struct RunRequest {
  std::string scenario;
  ControllerVariant variant = ControllerVariant::ClfCbfQp;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;
  LogFormat format = LogFormat::Csv;
  std::optional<double> duration;
  std::optional<std::filesystem::path> plot_dir;
};

struct CliCommand {
  enum class Kind { Run, List, Help };
  Kind kind = Kind::Help;
  RunRequest run;
  std::string help_text;
};

/// `run <scenario> --controller <variant> --out <path> [--config <path>]
/// [--format csv|json] [--duration <s>] [--plot-dir <dir>]` or `list`.
/// Throws UsageError with the usage text on bad input.
CliCommand parse_args(int argc, const char* const* argv);

/// Builds the scenario for a request (preset, config file, duration override).
ScenarioConfig build_scenario(const RunRequest& req);

}  // namespace platoon
