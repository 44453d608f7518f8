#pragma once
// File formats: CSV tables with a JSON header line, sample CSVs, rank
// histogram JSON and the on-disk reference cache.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankdiv/error.hpp"
#include "rankdiv/sample_set.hpp"
#include "rankdiv/univariate.hpp"

#ifndef RANKDIV_VERSION
#define RANKDIV_VERSION "0.1.0"
#endif

namespace rankdiv {

using json = nlohmann::json;

inline std::string version_string() { return RANKDIV_VERSION; }

/// Shortest round-tripping text for a double.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// A CSV table whose first line is "# " followed by a one-line JSON header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw DomainError("CSV row has the wrong number of cells");
    rows_.push_back(std::move(cells));
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string str(const json& header) const {
    std::ostringstream os;
    os << "# " << header.dump() << "\n";
    write_line(os, columns_);
    for (const auto& r : rows_) write_line(os, r);
    return os.str();
  }

  void write(const std::filesystem::path& path, const json& header) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file " + path.string());
    f << str(header);
  }

 private:
  static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << "\n";
  }
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Header object embedded in every output file.
inline json output_header(const std::string& experiment, const json& config) {
  return json{{"experiment", experiment}, {"version", version_string()}, {"config", config}};
}

inline json to_json(const RankHistogram& h) {
  return json{{"K", h.order}, {"probs", h.probs}, {"provenance", std::string(to_string(h.provenance))}};
}

inline RankHistogram histogram_from_json(const json& j) {
  RankHistogram h{j.at("K").get<int>(), j.at("probs").get<std::vector<double>>(),
                  parse_provenance(j.at("provenance").get<std::string>())};
  h.validate(1e-9);
  return h;
}

/// Reads a numeric CSV (rows = samples, columns = coordinates). Lines
/// starting with '#' and a non-numeric first line are skipped.
inline SampleSet read_samples_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open sample file " + path.string());
  std::vector<double> data;
  std::size_t d = 0, n = 0;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError("non-numeric cell in " + path.string());
    }
    first = false;
    if (d == 0) d = row.size();
    if (row.size() != d) throw ConfigError("ragged rows in " + path.string());
    data.insert(data.end(), row.begin(), row.end());
    ++n;
  }
  if (n == 0) throw ConfigError("no samples in " + path.string());
  return SampleSet(n, d, std::move(data));
}

inline void write_samples_csv(const std::filesystem::path& path, const SampleSet& s, const json& header) {
  std::vector<std::string> cols;
  for (std::size_t j = 0; j < s.dim(); ++j) cols.push_back("x" + std::to_string(j));
  CsvTable t(cols);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    std::vector<std::string> r;
    for (std::size_t j = 0; j < s.dim(); ++j) r.push_back(fmt_double(s(i, j)));
    t.add_row(std::move(r));
  }
  t.write(path, header);
}

struct CachedReference {
  double value = 0.0;
  std::size_t n_ref = 0;
  std::uint64_t seed = 0;
  std::string route;
};

/// JSON file mapping a canonical key to a reference value. Writes are
/// serialized and replace the file atomically; reads see the loaded map.
class ReferenceCache {
 public:
  explicit ReferenceCache(std::filesystem::path path) : path_(std::move(path)) { load(); }

  /// Path from RANKDIV_CACHE, falling back to `fallback`.
  static std::filesystem::path default_path(const std::filesystem::path& fallback = "rankdiv_reference_cache.json") {
    if (const char* env = std::getenv("RANKDIV_CACHE"); env && *env) return env;
    return fallback;
  }

  const std::filesystem::path& path() const { return path_; }

  std::optional<CachedReference> get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& key, const CachedReference& ref) {
    std::lock_guard lock(mu_);
    entries_[key] = ref;
    json j = json::object();
    for (const auto& [k, v] : entries_)
      j[k] = {{"value", v.value}, {"n_ref", v.n_ref}, {"seed", v.seed}, {"route", v.route}};
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    const auto tmp = path_.string() + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary);
      if (!f) throw ConfigError("cannot write reference cache " + tmp);
      f << j.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path_);
  }

  template <class F>
  CachedReference get_or_compute(const std::string& key, F compute) {
    if (auto hit = get(key)) return *hit;
    auto ref = compute();
    put(key, ref);
    return ref;
  }

 private:
  void load() {
    std::ifstream f(path_);
    if (!f) return;
    json j;
    try {
      f >> j;
    } catch (const json::exception&) {
      return;  // unreadable cache: start empty, the next put rewrites it
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& v = it.value();
      entries_[it.key()] = {v.value("value", 0.0), v.value("n_ref", std::size_t{0}), v.value("seed", std::uint64_t{0}),
                            v.value("route", std::string{})};
    }
  }

  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, CachedReference> entries_;
};

}  // namespace rankdiv
