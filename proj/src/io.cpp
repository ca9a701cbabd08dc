#include "mflab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mflab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config cfg;
  cfg.text_ = text;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno),
                        "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno), "empty key");
    if (cfg.map_.count(key))
      throw ConfigError(key, "duplicate key");
    cfg.entries_.emplace_back(key, value);
    cfg.map_[key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  return parse_string(read_text_file(path));
}

std::string Config::get(const std::string& key) const {
  const auto it = map_.find(key);
  if (it == map_.end()) throw ConfigError(key, "missing required key");
  return it->second;
}

std::string Config::get_or(const std::string& key,
                           const std::string& fallback) const {
  const auto it = map_.find(key);
  return it == map_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get(key);
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "not a number: '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError(key, "trailing junk in number");
  return d;
}

double Config::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
  const double d = get_double(key);
  const int i = static_cast<int>(std::llround(d));
  if (std::abs(d - i) > 1e-9) throw ConfigError(key, "expected an integer");
  return i;
}

int Config::get_int_or(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected a boolean");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  const std::string v = get(key);
  std::vector<double> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError(key, "not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const double d : get_double_list(key)) {
    const int i = static_cast<int>(std::llround(d));
    if (std::abs(d - i) > 1e-9) throw ConfigError(key, "expected integers");
    out.push_back(i);
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

std::string format_full(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "\n");
  write_text_file(path, out.str());
}

namespace {

std::string sector_tag(const Sector& s) {
  return (s.is_cutoff() ? std::string("cutoff ") : std::string("fixed ")) +
         std::to_string(s.n);
}

std::shared_ptr<const FockBasis> basis_from_header(int dim, int m, double h,
                                                   const std::string& kind,
                                                   int n) {
  const Sector sector =
      kind == "cutoff" ? Sector::cutoff(n) : Sector::fixed(n);
  return std::make_shared<const FockBasis>(Grid(dim, m, h), sector);
}

}  // namespace

void save_fock_text(const std::string& path, const FockVector& psi) {
  const FockBasis& b = *psi.basis;
  std::ostringstream out;
  out << "mflab-fockvec 1\n";
  out << "enumeration " << FockBasis::kEnumerationVersion << "\n";
  out << "grid " << b.grid().dim() << " " << b.grid().points_per_axis() << " "
      << format_full(b.grid().spacing()) << "\n";
  out << "sector " << sector_tag(b.sector()) << "\n";
  out << "dim " << b.dim() << "\n";
  out << "leakage " << format_full(psi.leakage) << "\n";
  for (Index i = 0; i < b.dim(); ++i)
    out << format_full(psi.coeffs[i].real()) << " "
        << format_full(psi.coeffs[i].imag()) << "\n";
  write_text_file(path, out.str());
}

FockVector load_fock_text(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string magic, enum_tag, enum_ver, grid_tag, sector_tag_, kind;
  int version = 0, dim = 0, m = 0, n = 0;
  double h = 0;
  in >> magic >> version >> enum_tag >> enum_ver >> grid_tag >> dim >> m >> h;
  in >> sector_tag_ >> kind >> n;
  if (magic != "mflab-fockvec" || version != 1)
    throw std::runtime_error(path + ": not a fock vector file");
  if (enum_ver != FockBasis::kEnumerationVersion)
    throw std::runtime_error(path + ": enumeration version mismatch");
  std::string dim_tag, leak_tag;
  Index count = 0;
  double leakage = 0;
  in >> dim_tag >> count >> leak_tag >> leakage;
  FockVector psi;
  psi.basis = basis_from_header(dim, m, h, kind, n);
  if (psi.basis->dim() != count)
    throw std::runtime_error(path + ": dimension mismatch");
  psi.leakage = leakage;
  psi.coeffs.resize(count);
  for (Index i = 0; i < count; ++i) {
    double re = 0, im = 0;
    in >> re >> im;
    psi.coeffs[i] = Complex(re, im);
  }
  if (!in) throw std::runtime_error(path + ": truncated file");
  return psi;
}

void save_fock_binary(const std::string& path, const FockVector& psi) {
  const FockBasis& b = *psi.basis;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const char magic[8] = {'m', 'f', 'v', 'e', 'c', '0', '0', '1'};
  out.write(magic, 8);
  const std::string ever = FockBasis::kEnumerationVersion;
  const std::int32_t header[5] = {
      static_cast<std::int32_t>(b.grid().dim()),
      static_cast<std::int32_t>(b.grid().points_per_axis()),
      b.sector().is_cutoff() ? 1 : 0, static_cast<std::int32_t>(b.sector().n),
      static_cast<std::int32_t>(ever.size())};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(ever.data(), static_cast<std::streamsize>(ever.size()));
  const double spacing = b.grid().spacing();
  out.write(reinterpret_cast<const char*>(&spacing), sizeof spacing);
  out.write(reinterpret_cast<const char*>(&psi.leakage), sizeof psi.leakage);
  const std::int64_t count = b.dim();
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(psi.coeffs.data()),
            static_cast<std::streamsize>(count * sizeof(Complex)));
}

FockVector load_fock_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != "mfvec001")
    throw std::runtime_error(path + ": not a fock vector file");
  std::int32_t header[5];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  std::string ever(header[4], '\0');
  in.read(ever.data(), header[4]);
  if (ever != FockBasis::kEnumerationVersion)
    throw std::runtime_error(path + ": enumeration version mismatch");
  double spacing = 0;
  in.read(reinterpret_cast<char*>(&spacing), sizeof spacing);
  FockVector psi;
  in.read(reinterpret_cast<char*>(&psi.leakage), sizeof psi.leakage);
  std::int64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  psi.basis = basis_from_header(header[0], header[1], spacing,
                                header[2] ? "cutoff" : "fixed", header[3]);
  if (psi.basis->dim() != count)
    throw std::runtime_error(path + ": dimension mismatch");
  psi.coeffs.resize(count);
  in.read(reinterpret_cast<char*>(psi.coeffs.data()),
          static_cast<std::streamsize>(count * sizeof(Complex)));
  if (!in) throw std::runtime_error(path + ": truncated file");
  return psi;
}

void save_rdm(const std::string& path, const ReducedDensityMatrix& rdm) {
  std::ostringstream out;
  out << "mflab-rdm 1\n";
  out << "k " << rdm.k << "\n";
  out << "grid " << rdm.grid.dim() << " " << rdm.grid.points_per_axis() << " "
      << format_full(rdm.grid.spacing()) << "\n";
  out << "side " << rdm.side() << "\n";
  for (Index r = 0; r < rdm.side(); ++r) {
    for (Index c = 0; c < rdm.side(); ++c)
      out << format_full(rdm.rho(r, c).real()) << " "
          << format_full(rdm.rho(r, c).imag())
          << (c + 1 < rdm.side() ? " " : "\n");
  }
  write_text_file(path, out.str());
}

ReducedDensityMatrix load_rdm(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string magic, ktag, gtag, stag;
  int version = 0, k = 0, dim = 0, m = 0;
  double h = 0;
  Index side = 0;
  in >> magic >> version >> ktag >> k >> gtag >> dim >> m >> h >> stag >> side;
  if (magic != "mflab-rdm" || version != 1)
    throw std::runtime_error(path + ": not an rdm file");
  ReducedDensityMatrix rdm{Grid(dim, m, h), k, MatrixXcd(side, side)};
  for (Index r = 0; r < side; ++r)
    for (Index c = 0; c < side; ++c) {
      double re = 0, im = 0;
      in >> re >> im;
      rdm.rho(r, c) = Complex(re, im);
    }
  if (!in) throw std::runtime_error(path + ": truncated file");
  return rdm;
}

}  // namespace mflab
