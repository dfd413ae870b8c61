#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "relaymec/montecarlo.hpp"
#include "relaymec/types.hpp"

namespace relaymec {

// Parsed scenario file. Single solves draw channels from (seed, trial 0)
// unless the file pins explicit gains; sweeps reuse the same template.
struct CliConfig {
  InstanceTemplate base = default_template();
  std::optional<ChannelGains> pinned_gains;  // set when [channels] lists g_*
  SolveSettings solver;
  SweepConfig sweep;  // base and solver mirrored in, [sweep] keys applied
  std::uint64_t seed = 1234;

  Instance make_instance() const;  // pinned gains or the (seed, 0) draw
};

// INI-style text: [section] headers, key = value lines, # or ; comments.
// Sections: system, geometry, nodes, channels, solver, sweep. Power-like
// fields take either a _dbm or a _watt key. List values are comma
// separated. Unknown sections or keys, malformed numbers, duplicate or
// conflicting keys all throw ConfigError carrying line and field.
CliConfig parse_config(std::istream& is, const std::string& name);

// parse_config over the file's contents; unreadable path throws ConfigError.
CliConfig load_config(const std::string& path);

}  // namespace relaymec
