#include "relaymec/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "relaymec/errors.hpp"

namespace relaymec {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& raw, const std::string& field,
                    int line) {
  const std::string v = trim(raw);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("malformed number '" + v + "' for '" + field + "'",
                      line, field);
  }
  return out;
}

std::vector<double> parse_list(const std::string& raw, const std::string& field,
                               int line) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    const std::size_t comma = raw.find(',', pos);
    const std::string part =
        raw.substr(pos, comma == std::string::npos ? std::string::npos
                                                   : comma - pos);
    out.push_back(parse_double(part, field, line));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

long parse_long(const std::string& raw, const std::string& field, int line) {
  const std::string v = trim(raw);
  long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("malformed integer '" + v + "' for '" + field + "'",
                      line, field);
  }
  return out;
}

std::uint64_t parse_u64(const std::string& raw, const std::string& field,
                        int line) {
  const std::string v = trim(raw);
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("malformed integer '" + v + "' for '" + field + "'",
                      line, field);
  }
  return out;
}

bool parse_bool(const std::string& raw, const std::string& field, int line) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("malformed boolean '" + v + "' for '" + field + "'", line,
                    field);
}

}  // namespace

CliConfig parse_config(std::istream& is, const std::string& name) {
  CliConfig cfg;
  cfg.base = default_template();

  std::optional<double> g_ap_pr, g_pt_pr, g_pt_ap;
  std::optional<std::vector<double>> g_iot;

  using Handler = std::function<void(const std::string&, int)>;
  std::map<std::string, Handler> handlers;
  // power-like quantities appear under two keys; remember which group a key
  // settles so the dbm and watt spellings cannot both be given
  std::map<std::string, std::string> group_of;
  const auto add = [&](const std::string& key, Handler h) {
    handlers.emplace(key, std::move(h));
  };
  const auto add_power = [&](const std::string& section,
                             const std::string& stem, double* target) {
    group_of[section + "." + stem + "_dbm"] = section + "." + stem;
    group_of[section + "." + stem + "_watt"] = section + "." + stem;
    add(section + "." + stem + "_dbm",
        [target](const std::string& v, int line) {
          *target = dbm_to_watt(parse_double(v, "dbm", line));
        });
    add(section + "." + stem + "_watt",
        [target](const std::string& v, int line) {
          *target = parse_double(v, "watt", line);
        });
  };

  add("system.frame_s", [&](const std::string& v, int l) {
    cfg.base.system.T = parse_double(v, "system.frame_s", l);
  });
  add("system.bandwidth_hz", [&](const std::string& v, int l) {
    cfg.base.system.B_w = parse_double(v, "system.bandwidth_hz", l);
  });
  add_power("system", "noise", &cfg.base.system.sigma2);
  add_power("system", "p_pt", &cfg.base.system.P_PT);
  add_power("system", "p_ap", &cfg.base.system.P_AP);
  add("system.f_mec_max_hz", [&](const std::string& v, int l) {
    cfg.base.system.f_mec_max = parse_double(v, "system.f_mec_max_hz", l);
  });
  add("system.alpha", [&](const std::string& v, int l) {
    cfg.base.system.alpha = parse_double(v, "system.alpha", l);
  });
  add("system.eta1", [&](const std::string& v, int l) {
    cfg.base.system.eta1 = parse_double(v, "system.eta1", l);
  });
  add("system.eta2", [&](const std::string& v, int l) {
    cfg.base.system.eta2 = parse_double(v, "system.eta2", l);
  });
  add("system.eta3", [&](const std::string& v, int l) {
    cfg.base.system.eta3 = parse_double(v, "system.eta3", l);
  });
  add("system.eta4", [&](const std::string& v, int l) {
    cfg.base.system.eta4 = parse_double(v, "system.eta4", l);
  });

  add("geometry.d_pt_pr_m", [&](const std::string& v, int l) {
    cfg.base.d_pt_pr = parse_double(v, "geometry.d_pt_pr_m", l);
  });
  add("geometry.d_pt_ap_m", [&](const std::string& v, int l) {
    cfg.base.d_pt_ap = parse_double(v, "geometry.d_pt_ap_m", l);
  });
  add("geometry.d_ap_pr_m", [&](const std::string& v, int l) {
    cfg.base.d_ap_pr = parse_double(v, "geometry.d_ap_pr_m", l);
  });
  add("geometry.d_iot_m", [&](const std::string& v, int l) {
    cfg.base.d_iot = parse_double(v, "geometry.d_iot_m", l);
  });

  add("nodes.count", [&](const std::string& v, int l) {
    const long n = parse_long(v, "nodes.count", l);
    if (n < 1) throw ConfigError("nodes.count must be >= 1", l, "nodes.count");
    cfg.base.M = static_cast<std::size_t>(n);
  });
  add("nodes.cycles_per_bit", [&](const std::string& v, int l) {
    cfg.base.cycles_per_bit = parse_double(v, "nodes.cycles_per_bit", l);
  });
  add("nodes.cpu_hz", [&](const std::string& v, int l) {
    cfg.base.cpu_hz = parse_double(v, "nodes.cpu_hz", l);
  });
  add("nodes.chip_coeff", [&](const std::string& v, int l) {
    cfg.base.chip_coeff = parse_double(v, "nodes.chip_coeff", l);
  });
  add("nodes.battery_j", [&](const std::string& v, int l) {
    cfg.base.battery_j = parse_double(v, "nodes.battery_j", l);
  });

  add("channels.mean_ap_pr", [&](const std::string& v, int l) {
    cfg.base.means.ap_pr = parse_double(v, "channels.mean_ap_pr", l);
  });
  add("channels.mean_pt_pr", [&](const std::string& v, int l) {
    cfg.base.means.pt_pr = parse_double(v, "channels.mean_pt_pr", l);
  });
  add("channels.mean_pt_ap", [&](const std::string& v, int l) {
    cfg.base.means.pt_ap = parse_double(v, "channels.mean_pt_ap", l);
  });
  add("channels.mean_iot", [&](const std::string& v, int l) {
    cfg.base.means.iot = parse_double(v, "channels.mean_iot", l);
  });
  add("channels.g_ap_pr", [&](const std::string& v, int l) {
    g_ap_pr = parse_double(v, "channels.g_ap_pr", l);
  });
  add("channels.g_pt_pr", [&](const std::string& v, int l) {
    g_pt_pr = parse_double(v, "channels.g_pt_pr", l);
  });
  add("channels.g_pt_ap", [&](const std::string& v, int l) {
    g_pt_ap = parse_double(v, "channels.g_pt_ap", l);
  });
  add("channels.g_iot", [&](const std::string& v, int l) {
    g_iot = parse_list(v, "channels.g_iot", l);
  });

  add("solver.tolerance", [&](const std::string& v, int l) {
    cfg.solver.tolerance = parse_double(v, "solver.tolerance", l);
  });
  add("solver.dual_tolerance", [&](const std::string& v, int l) {
    cfg.solver.dual_tolerance = parse_double(v, "solver.dual_tolerance", l);
  });
  add("solver.max_iterations", [&](const std::string& v, int l) {
    cfg.solver.max_iterations = parse_long(v, "solver.max_iterations", l);
  });
  add("solver.check_every", [&](const std::string& v, int l) {
    cfg.solver.check_every = parse_long(v, "solver.check_every", l);
  });
  add("solver.keep_trace", [&](const std::string& v, int l) {
    cfg.solver.keep_trace = parse_bool(v, "solver.keep_trace", l);
  });

  add("sweep.alpha_grid", [&](const std::string& v, int l) {
    cfg.sweep.alpha_grid = parse_list(v, "sweep.alpha_grid", l);
  });
  add("sweep.placements_m", [&](const std::string& v, int l) {
    cfg.sweep.placements = parse_list(v, "sweep.placements_m", l);
  });
  add("sweep.energy_levels_j", [&](const std::string& v, int l) {
    cfg.sweep.energy_levels = parse_list(v, "sweep.energy_levels_j", l);
  });
  add("sweep.trials", [&](const std::string& v, int l) {
    cfg.sweep.trials = parse_long(v, "sweep.trials", l);
  });
  add("sweep.seed", [&](const std::string& v, int l) {
    cfg.seed = parse_u64(v, "sweep.seed", l);
  });
  add("sweep.threads", [&](const std::string& v, int l) {
    const long n = parse_long(v, "sweep.threads", l);
    if (n < 0) {
      throw ConfigError("sweep.threads must be >= 0", l, "sweep.threads");
    }
    cfg.sweep.threads = static_cast<int>(n);
  });

  static const std::set<std::string> known_sections = {
      "system", "geometry", "nodes", "channels", "solver", "sweep"};

  std::string section;
  std::set<std::string> seen_keys;
  std::set<std::string> seen_groups;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    const std::string text = trim(line);
    if (text.empty()) continue;

    if (text.front() == '[') {
      if (text.back() != ']') {
        throw ConfigError(name + ": unterminated section header", line_no);
      }
      section = trim(text.substr(1, text.size() - 2));
      if (!known_sections.count(section)) {
        throw ConfigError(name + ": unknown section '" + section + "'",
                          line_no, section);
      }
      continue;
    }

    const std::size_t eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(name + ": expected 'key = value'", line_no);
    }
    if (section.empty()) {
      throw ConfigError(name + ": key before any section", line_no);
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = text.substr(eq + 1);
    const std::string full = section + "." + key;

    const auto handler = handlers.find(full);
    if (handler == handlers.end()) {
      throw ConfigError(name + ": unknown key '" + full + "'", line_no, full);
    }
    if (!seen_keys.insert(full).second) {
      throw ConfigError(name + ": duplicate key '" + full + "'", line_no,
                        full);
    }
    const auto group = group_of.find(full);
    if (group != group_of.end() && !seen_groups.insert(group->second).second) {
      throw ConfigError(
          name + ": '" + group->second + "' given in both dbm and watt",
          line_no, full);
    }
    handler->second(value, line_no);
  }

  const bool any_pinned =
      g_ap_pr.has_value() || g_pt_pr.has_value() || g_pt_ap.has_value() ||
      g_iot.has_value();
  if (any_pinned) {
    if (!(g_ap_pr && g_pt_pr && g_pt_ap && g_iot)) {
      throw ConfigError(name +
                        ": pinned gains need channels.g_ap_pr, g_pt_pr, "
                        "g_pt_ap, and g_iot together");
    }
    ChannelGains gains;
    gains.g_ap_pr = *g_ap_pr;
    gains.g_pt_pr = *g_pt_pr;
    gains.g_pt_ap = *g_pt_ap;
    if (g_iot->size() == 1) {
      gains.g_iot.assign(cfg.base.M, g_iot->front());
    } else if (g_iot->size() == cfg.base.M) {
      gains.g_iot = *g_iot;
    } else {
      throw ConfigError(name + ": channels.g_iot needs 1 or nodes.count "
                               "values",
                        0, "channels.g_iot");
    }
    cfg.pinned_gains = std::move(gains);
  }

  cfg.sweep.base = cfg.base;
  cfg.sweep.solver = cfg.solver;
  cfg.sweep.seed = cfg.seed;
  return cfg;
}

CliConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(file, path);
}

Instance CliConfig::make_instance() const {
  if (pinned_gains) return base.make(*pinned_gains);
  return base.make(sample_channels({seed, 0}, base.means, base.M));
}

}  // namespace relaymec
