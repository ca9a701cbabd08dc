#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mflab/lattice.hpp"

namespace mflab {

inline constexpr const char* kToolVersion = "mflab 0.1.0";
inline constexpr int kSchemaVersion = 1;

struct RunOptions {
  std::string config_path;
  std::string out_dir;
  int workers = 1;
  std::uint64_t seed = 0;
  Index dense_cap = 5000;
  bool check_assertions = true;
};

// exit codes: 0 ok, 1 assertion failed, 2 invalid config, 3 budget breach
int run_command(const RunOptions& opt, std::ostream& log);

// merge summaries of several runs into one table; refuses schema mismatches
// and conflicting duplicate rows
int report_command(const std::vector<std::string>& run_dirs,
                   const std::string& out_path, std::ostream& log);

}  // namespace mflab
