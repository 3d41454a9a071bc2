#pragma once

// Self-describing reports: a common header, JSON bodies, CSV tables, and
// atomic file output.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "lis/analysis.hpp"
#include "lis/io.hpp"

namespace lis {

inline constexpr const char* kToolName = "lis-lab";
inline constexpr const char* kVersion = "1.0.0";

struct RunSettings {
  EnumerationCap cap{};
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

inline Json report_header(const std::string& command, const ParsedSpec& spec, const RunSettings& run) {
  return Json{{"tool", kToolName},
              {"version", kVersion},
              {"command", command},
              {"spec_hash", spec_hash(spec.canonical)},
              {"label", spec.label},
              {"memory_depth", spec.kernel.memory_depth()},
              {"truncation_tail", spec.kernel.truncation_tail()},
              {"caps", {{"max_configurations", run.cap.max_configurations}, {"max_alphabet", kMaxAlphabetSize}}},
              {"tolerances",
               {{"comparison", kTolerance},
                {"normalization", kNormalizationTolerance},
                {"residual", 1e-12},
                {"series_term", 1e-12}}},
              {"seeds", {{"run", run.seed}}}};
}

inline Json verdict_to_json(const CriterionVerdict& v) {
  Json scalars = Json::object();
  for (const auto& [k, x] : v.scalars) scalars[k] = x;
  return Json{{"criterion", v.criterion},
              {"satisfied", v.satisfied},
              {"scalars", scalars},
              {"truncation_tail", v.truncation_tail},
              {"depth", v.depth},
              {"notes", v.notes}};
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Plot-ready table; empty optionals become empty CSV fields and JSON nulls.
class Table {
 public:
  using Cell = std::optional<double>;

  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw std::logic_error("table row width mismatch");
    rows_.push_back(std::move(row));
  }

  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }

  std::string csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns_.size(); ++c) out += (c ? "," : "") + columns_[c];
    out += "\n";
    for (const auto& row : rows_) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ",";
        if (row[c] && std::isfinite(*row[c])) out += format_number(*row[c]);
      }
      out += "\n";
    }
    return out;
  }

  Json json() const {
    Json arr = Json::array();
    for (const auto& row : rows_) {
      Json o = Json::object();
      for (std::size_t c = 0; c < row.size(); ++c) o[columns_[c]] = row[c] ? Json(*row[c]) : Json(nullptr);
      arr.push_back(std::move(o));
    }
    return Json{{"columns", columns_}, {"rows", arr}};
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

/// Writes through a temporary file in the same directory, then renames.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InvalidInput("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw InvalidInput("cannot move report into place at " + path + ": " + ec.message());
  }
}

}  // namespace lis
