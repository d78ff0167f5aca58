#include "platoon/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace platoon {

namespace {

// ---------------------------------------------------------------------------
// Config registry

struct Entry {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v)) {
    throw ConfigError("expected a finite number, got '" + text + "'");
  }
  return v;
}

int parse_int(const std::string& text) {
  const double v = parse_double(text);
  if (v != std::floor(v)) throw ConfigError("expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("expected true/false, got '" + text + "'");
}

class Registry {
 public:
  void number(const std::string& key, double& ref) {
    entries_.push_back({key, [&ref] { return format_number(ref); },
                        [&ref](const std::string& v) { ref = parse_double(v); }});
  }
  void integer(const std::string& key, int& ref) {
    entries_.push_back({key, [&ref] { return std::to_string(ref); },
                        [&ref](const std::string& v) { ref = parse_int(v); }});
  }
  void flag(const std::string& key, bool& ref) {
    entries_.push_back({key, [&ref] { return ref ? "true" : "false"; },
                        [&ref](const std::string& v) { ref = parse_bool(v); }});
  }
  void custom(Entry e) { entries_.push_back(std::move(e)); }

  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

void register_state(Registry& r, const std::string& prefix, VehicleState& s) {
  r.number(prefix + ".x", s.x);
  r.number(prefix + ".y", s.y);
  r.number(prefix + ".v", s.v);
}

void register_script(Registry& r, const std::string& prefix, HdvScript& script, int home_lane) {
  register_state(r, prefix, script.initial);
  auto maneuver = [&script, home_lane]() -> LaneManeuver& {
    if (!script.maneuver) script.maneuver = LaneManeuver{0.0, home_lane, 3.0};
    return *script.maneuver;
  };
  const auto& m = script.maneuver;
  r.custom({prefix + ".maneuver.start", [&m] { return m ? format_number(m->start) : "none"; },
            [maneuver](const std::string& v) { maneuver().start = parse_double(v); }});
  r.custom({prefix + ".maneuver.duration",
            [&m] { return m ? format_number(m->duration) : "none"; },
            [maneuver](const std::string& v) { maneuver().duration = parse_double(v); }});
  r.custom({prefix + ".maneuver.lane", [&m] { return m ? std::to_string(m->target_lane) : "none"; },
            [maneuver](const std::string& v) { maneuver().target_lane = parse_int(v); }});

  // seg<k> for each existing segment plus one more to append.
  auto& segs = script.segments;
  for (std::size_t k = 0; k <= segs.size(); ++k) {
    const std::string p = prefix + ".seg" + std::to_string(k);
    auto slot = [&segs, k]() -> SpeedSegment& {
      if (k == segs.size()) segs.push_back({});
      return segs[k];
    };
    const bool exists = k < segs.size();
    r.custom({p + ".start", [&segs, k, exists] { return exists ? format_number(segs[k].start) : "none"; },
              [slot](const std::string& v) { slot().start = parse_double(v); }});
    r.custom({p + ".accel", [&segs, k, exists] { return exists ? format_number(segs[k].accel) : "none"; },
              [slot](const std::string& v) { slot().accel = parse_double(v); }});
    r.custom({p + ".target",
              [&segs, k, exists] {
                return exists && segs[k].target ? format_number(*segs[k].target) : "none";
              },
              [slot](const std::string& v) {
                if (v == "none") {
                  slot().target.reset();
                } else {
                  slot().target = parse_double(v);
                }
              }});
  }
}

Registry build_registry(ScenarioConfig& cfg) {
  Registry r;
  r.number("sim.dt", cfg.dt);
  r.number("sim.duration", cfg.duration);
  r.number("sim.command_time", cfg.command_time);
  r.integer("sim.lane_changer", cfg.lane_changer);
  r.integer("sim.direction", cfg.direction);
  r.flag("sim.neighbor_accel", cfg.neighbor_accel);
  r.custom({"sim.seed", [&cfg] { return std::to_string(cfg.seed); },
            [&cfg](const std::string& v) { cfg.seed = static_cast<unsigned>(parse_int(v)); }});

  r.number("lanes.width", cfg.lanes.lane_width);
  r.integer("lanes.count", cfg.lanes.lane_count);
  r.number("geom.l_r", cfg.geom.l_r);
  r.number("geom.l_f", cfg.geom.l_f);
  r.number("geom.l_fc", cfg.geom.l_fc);
  r.number("geom.l_rc", cfg.geom.l_rc);
  r.number("geom.w", cfg.geom.w);

  r.number("clf.alpha1", cfg.clf.alpha1);
  r.number("clf.alpha2", cfg.clf.alpha2);
  r.number("clf.v_d", cfg.clf.v_d);
  r.number("clf.s_0", cfg.clf.s_0);

  r.number("cbf.eps_x", cfg.cbf.eps_x);
  r.number("cbf.eps_y", cfg.cbf.eps_y);
  r.number("cbf.a_max", cfg.cbf.a_max);
  r.number("cbf.gamma_fc", cfg.cbf.gamma_fc);
  r.number("cbf.gamma_ft", cfg.cbf.gamma_ft);
  r.number("cbf.gamma_bt", cfg.cbf.gamma_bt);

  auto& H = cfg.ctrl.H;
  r.number("ctrl.h11", H(0, 0));
  r.custom({"ctrl.h12", [&H] { return format_number(H(0, 1)); },
            [&H](const std::string& v) { H(0, 1) = H(1, 0) = parse_double(v); }});
  r.number("ctrl.h22", H(1, 1));
  r.number("ctrl.p_l", cfg.ctrl.p_l);
  r.number("ctrl.p_y", cfg.ctrl.p_y);
  r.number("ctrl.p_psi", cfg.ctrl.p_psi);
  r.number("ctrl.alpha_l", cfg.ctrl.alpha_l);
  r.number("ctrl.alpha_y", cfg.ctrl.alpha_y);
  r.number("ctrl.alpha_psi", cfg.ctrl.alpha_psi);
  r.number("ctrl.a_max", cfg.ctrl.a_max);
  r.number("ctrl.beta_max", cfg.ctrl.beta_max);

  auto& co = cfg.coordination;
  r.flag("coord.changer_splits", co.changer_splits);
  r.integer("coord.retry_debounce_ticks", co.retry_debounce_ticks);
  r.number("coord.join_settle_tol", co.join_settle_tol);
  r.number("coord.progress_heading_tol", co.progress_heading_tol);
  r.number("coord.tau_min", co.headway_template.tau_min);
  r.number("coord.tau_max", co.headway_template.tau_max);
  r.number("coord.tau_rate", co.headway_template.rate);

  for (auto& c : cfg.cavs) register_state(r, "cav." + c.name, c.initial);
  for (auto& h : cfg.hdvs) {
    register_script(r, "hdv." + h.name, h.script, cfg.lanes.lane_of(h.script.initial.y));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Log fields

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> read_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

double rounded(double v) { return std::stod(format_number(v)); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

void apply_config_text(ScenarioConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    // Rebuilt per line: appending a script segment creates new keys.
    const Registry reg = build_registry(cfg);
    const Entry* entry = nullptr;
    for (const auto& e : reg.entries()) {
      if (e.key == key) entry = &e;
    }
    if (!entry) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    try {
      entry->set(value);
    } catch (const ConfigError& err) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + key + ": " + err.what());
    }
  }
  if (const auto problem = cfg.validate()) throw ConfigError(*problem);
}

void apply_config_file(ScenarioConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    apply_config_text(cfg, buf.str());
  } catch (const ConfigError& err) {
    throw ConfigError(path.string() + ": " + err.what());
  }
}

std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& cfg) {
  ScenarioConfig copy = cfg;
  std::vector<std::pair<std::string, std::string>> out;
  const Registry registry = build_registry(copy);
  for (const auto& e : registry.entries()) out.emplace_back(e.key, e.get());
  return out;
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string log_to_csv(const TrajectoryLog& log) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : log) {
    const std::string fields[] = {
        format_number(r.t),
        std::to_string(r.id),
        format_number(r.x),
        format_number(r.y),
        format_number(r.psi),
        format_number(r.v),
        format_number(r.a),
        opt_number(r.beta),
        r.fsm_state ? std::string(to_string(*r.fsm_state)) : "",
        opt_number(r.h_fc),
        opt_number(r.h_ft),
        opt_number(r.h_bt),
        opt_number(r.delta_l),
        opt_number(r.delta_y),
        opt_number(r.delta_psi),
        r.feasible ? (*r.feasible ? "1" : "0") : "",
        r.collision ? "1" : "0",
    };
    bool first = true;
    for (const auto& f : fields) {
      if (!first) out += ',';
      out += f;
      first = false;
    }
    out += '\n';
  }
  return out;
}

std::string log_to_json(const TrajectoryLog& log) {
  using nlohmann::ordered_json;
  ordered_json ticks = ordered_json::array();
  auto opt = [](const std::optional<double>& v) -> ordered_json {
    return v ? ordered_json(rounded(*v)) : ordered_json(nullptr);
  };
  for (std::size_t i = 0; i < log.size();) {
    ordered_json tick;
    tick["t"] = rounded(log[i].t);
    ordered_json vehicles = ordered_json::array();
    const double t = log[i].t;
    for (; i < log.size() && log[i].t == t; ++i) {
      const auto& r = log[i];
      ordered_json v;
      v["id"] = r.id;
      v["x"] = rounded(r.x);
      v["y"] = rounded(r.y);
      v["psi"] = rounded(r.psi);
      v["v"] = rounded(r.v);
      v["a"] = rounded(r.a);
      v["beta"] = opt(r.beta);
      v["fsm_state"] = r.fsm_state ? ordered_json(std::string(to_string(*r.fsm_state)))
                                   : ordered_json(nullptr);
      v["h_fc"] = opt(r.h_fc);
      v["h_ft"] = opt(r.h_ft);
      v["h_bt"] = opt(r.h_bt);
      v["delta_l"] = opt(r.delta_l);
      v["delta_y"] = opt(r.delta_y);
      v["delta_psi"] = opt(r.delta_psi);
      v["feasible"] = r.feasible ? ordered_json(*r.feasible) : ordered_json(nullptr);
      v["collision"] = r.collision;
      vehicles.push_back(std::move(v));
    }
    tick["vehicles"] = std::move(vehicles);
    ticks.push_back(std::move(tick));
  }
  return ticks.dump(1) + "\n";
}

TrajectoryLog log_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) {
    throw IoError("trajectory CSV: unexpected header");
  }
  TrajectoryLog log;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 17) throw IoError("trajectory CSV: expected 17 fields in '" + line + "'");
    LogRow r;
    r.t = std::stod(f[0]);
    r.id = std::stoi(f[1]);
    r.x = std::stod(f[2]);
    r.y = std::stod(f[3]);
    r.psi = std::stod(f[4]);
    r.v = std::stod(f[5]);
    r.a = std::stod(f[6]);
    r.beta = read_opt(f[7]);
    if (!f[8].empty()) r.fsm_state = fsm_state_from_string(f[8]);
    r.h_fc = read_opt(f[9]);
    r.h_ft = read_opt(f[10]);
    r.h_bt = read_opt(f[11]);
    r.delta_l = read_opt(f[12]);
    r.delta_y = read_opt(f[13]);
    r.delta_psi = read_opt(f[14]);
    if (!f[15].empty()) r.feasible = f[15] == "1";
    r.collision = f[16] == "1";
    log.push_back(r);
  }
  return log;
}

void write_log(const TrajectoryLog& log, LogFormat format, const std::filesystem::path& path) {
  write_text(path, format == LogFormat::Csv ? log_to_csv(log) : log_to_json(log));
}

PlotOutput emit_plotdata(const TrajectoryLog& log, const std::filesystem::path& dir) {
  PlotOutput out;
  if (log.empty()) {
    out.warning = "empty trajectory log: no plot data written";
    return out;
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  std::map<int, std::string> velocity, trajectory;
  std::map<std::string, std::string> barrier;
  std::string indicator;
  std::map<double, bool> collided;  // keyed by tick time, ordered
  auto line = [](double a, double b) { return format_number(a) + " " + format_number(b) + "\n"; };

  for (const auto& r : log) {
    velocity[r.id] += line(r.t, r.v);
    trajectory[r.id] += line(r.x, r.y);
    const std::pair<const char*, const std::optional<double>*> hs[] = {
        {"fc", &r.h_fc}, {"ft", &r.h_ft}, {"bt", &r.h_bt}};
    for (const auto& [role, h] : hs) {
      if (*h) barrier["barrier_" + std::to_string(r.id) + "_" + role] += line(r.t, **h);
    }
    collided[r.t] = collided[r.t] || r.collision;
  }
  for (const auto& [t, hit] : collided) indicator += line(t, hit ? 1.0 : 0.0);

  auto emit = [&](const std::string& name, const std::string& body) {
    const auto path = dir / (name + ".dat");
    write_text(path, body);
    out.files.push_back(path);
  };
  for (const auto& [id, body] : velocity) emit("velocity_" + std::to_string(id), body);
  for (const auto& [id, body] : trajectory) emit("trajectory_" + std::to_string(id), body);
  for (const auto& [name, body] : barrier) emit(name, body);
  emit("collision", indicator);
  return out;
}

CliCommand parse_args(int argc, const char* const* argv) {
  CLI::App app{"Platoon lane-change simulator"};
  app.require_subcommand(1);

  CliCommand cmd;
  std::string controller = "clf-cbf-qp";
  std::string format = "csv";
  std::string out, config, plot_dir;
  double duration = 0.0;

  auto* run = app.add_subcommand("run", "Run a scenario preset and write its trajectory log");
  run->add_option("scenario", cmd.run.scenario, "Scenario preset")
      ->required()
      ->check(CLI::IsMember(scenario_names()));
  run->add_option("--controller", controller, "Controller variant")
      ->check(CLI::IsMember({"clf-cbf-qp", "clf-qp", "single-cbf"}));
  auto* out_opt = run->add_option("--out", out, "Output file (default <scenario>.<format>)");
  auto* cfg_opt = run->add_option("--config", config, "key = value parameter overrides");
  run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  auto* dur_opt =
      run->add_option("--duration", duration, "Simulated time (s)")->check(CLI::PositiveNumber);
  auto* plot_opt = run->add_option("--plot-dir", plot_dir, "Directory for plot series files");
  auto* list = app.add_subcommand("list", "List scenario presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    cmd.kind = CliCommand::Kind::Help;
    cmd.help_text = app.help();
    return cmd;
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n" + app.help());
  }

  if (list->parsed()) {
    cmd.kind = CliCommand::Kind::List;
    return cmd;
  }
  cmd.kind = CliCommand::Kind::Run;
  cmd.run.variant = *variant_from_string(controller);
  cmd.run.format = format == "json" ? LogFormat::Json : LogFormat::Csv;
  cmd.run.out = out_opt->count() ? std::filesystem::path(out)
                                 : std::filesystem::path(cmd.run.scenario + "." + format);
  if (cfg_opt->count()) cmd.run.config = config;
  if (dur_opt->count()) cmd.run.duration = duration;
  if (plot_opt->count()) cmd.run.plot_dir = plot_dir;
  return cmd;
}

ScenarioConfig build_scenario(const RunRequest& req) {
  ScenarioConfig cfg;
  try {
    cfg = scenario_preset(req.scenario);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.ctrl.variant = req.variant;
  if (req.config) apply_config_file(cfg, *req.config);
  if (req.duration) cfg.duration = *req.duration;
  if (const auto problem = cfg.validate()) throw ConfigError(*problem);
  return cfg;
}

}  // namespace platoon
