#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mflab/fock.hpp"
#include "mflab/lattice.hpp"
#include "mflab/marginals.hpp"

namespace mflab {

/// Flat key = value run configuration; '#' starts a comment. Keys keep file
/// order so manifests reproduce the input faithfully.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const { return map_.count(key) > 0; }
  const std::string& raw_text() const { return text_; }
  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int_or(const std::string& key, int fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

 private:
  std::string text_;
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::string> map_;
};

std::uint64_t fnv1a64(const std::string& data);
std::string hash_hex(std::uint64_t value);

// full round-trip decimal formatting (%.17g)
std::string format_full(double value);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// one CSV table; every numeric cell must already be fully formatted
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Fock vector snapshots with a basis descriptor header
void save_fock_text(const std::string& path, const FockVector& psi);
FockVector load_fock_text(const std::string& path);
void save_fock_binary(const std::string& path, const FockVector& psi);
FockVector load_fock_binary(const std::string& path);

// flat complex-matrix export with a (k, grid) header
void save_rdm(const std::string& path, const ReducedDensityMatrix& rdm);
ReducedDensityMatrix load_rdm(const std::string& path);

}  // namespace mflab
