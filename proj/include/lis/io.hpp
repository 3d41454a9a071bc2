#pragma once

// Kernel spec files: strict JSON parsing with path diagnostics, canonical
// serialization and a content hash.
//
//   {
//     "label": "K1",
//     "alphabet": {"symbols": ["0", "1"], "metric": [[0, 1], [1, 0]]},
//     "memory_depth": 1,
//     "kernel": {"type": "markov", "range": 1, "rows": [[0.7, 0.3], [0.3, 0.7]]}
//   }
//
// kernel types:
//   markov        range, rows (|E|^range rows), optional validate
//   table         rows (|E|^memory_depth rows), optional depth, optional validate
//   linear        coefficients (a_{-1}..a_{-R}), optional intercept, declared_tail
//   site_indexed  default: kernel, sites: [{"site": i, "kernel": kernel}, ...]

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lis/core.hpp"
#include "lis/kernels.hpp"

namespace lis {

using Json = nlohmann::json;

class SpecError : public InvalidInput {
 public:
  SpecError(const std::string& path, const std::string& what) : InvalidInput(path + ": " + what) {}
};

struct ParsedSpec {
  Alphabet alphabet = Alphabet::binary();
  KernelSpec kernel = KernelSpec::iid(Alphabet::binary(), {0.5, 0.5});
  std::string label;
  Json canonical;  // normalized document used for hashing and reports
};

namespace detail {

class Fields {
 public:
  Fields(const Json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SpecError(path_, "expected an object");
    for (const auto& [key, value] : j_.items()) {
      if (!allowed.count(key)) throw SpecError(path_ + "." + key, "unknown field");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string at(const std::string& key) const { return path_ + "." + key; }

  const Json& required(const std::string& key) const {
    if (!j_.contains(key)) throw SpecError(at(key), "missing required field");
    return j_.at(key);
  }

  double number(const std::string& key) const { return as_number(required(key), at(key)); }
  double number_or(const std::string& key, double fallback) const {
    return has(key) ? as_number(j_.at(key), at(key)) : fallback;
  }
  std::size_t count(const std::string& key) const { return as_count(required(key), at(key)); }
  bool flag_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw SpecError(at(key), "expected a boolean");
    return j_.at(key).get<bool>();
  }
  std::string string_or(const std::string& key, std::string fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) throw SpecError(at(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  static double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw SpecError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SpecError(path, "expected a finite number");
    return d;
  }
  static std::size_t as_count(const Json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw SpecError(path, "expected a non-negative integer");
    return static_cast<std::size_t>(v.get<long long>());
  }
  static std::vector<double> vector(const Json& v, const std::string& path) {
    if (!v.is_array()) throw SpecError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }
  static std::vector<std::vector<double>> matrix(const Json& v, const std::string& path) {
    if (!v.is_array()) throw SpecError(path, "expected an array of rows");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(vector(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
};

// Re-throws library validation errors with the spec path attached.
template <class Fn>
auto at_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const SpecError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw SpecError(path, e.what());
  }
}

inline Alphabet parse_alphabet(const Json& j, const std::string& path) {
  const Fields f(j, path, {"symbols", "metric"});
  const Json& syms = f.required("symbols");
  if (!syms.is_array()) throw SpecError(f.at("symbols"), "expected an array of labels");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < syms.size(); ++i) {
    const std::string p = f.at("symbols") + "[" + std::to_string(i) + "]";
    if (syms[i].is_string()) {
      labels.push_back(syms[i].get<std::string>());
    } else if (syms[i].is_number_integer()) {
      labels.push_back(std::to_string(syms[i].get<long long>()));
    } else {
      throw SpecError(p, "expected a string label");
    }
  }
  if (f.has("metric")) {
    auto rows = Fields::matrix(j.at("metric"), f.at("metric"));
    return at_path(f.at("metric"), [&] { return Alphabet::with_metric(labels, rows); });
  }
  return at_path(f.at("symbols"), [&] { return Alphabet::discrete(labels); });
}

inline KernelSpec parse_kernel(const Json& j, const std::string& path, const Alphabet& alphabet, std::size_t depth,
                               bool allow_site_indexed) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw SpecError(path + ".type", "expected one of markov, table, linear, site_indexed");
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "markov") {
    const Fields f(j, path, {"type", "range", "rows", "validate"});
    const std::size_t range = f.count("range");
    auto rows = Fields::matrix(f.required("rows"), f.at("rows"));
    const auto v = f.flag_or("validate", true) ? Validation::strict : Validation::skip;
    return at_path(path, [&] { return KernelSpec::markov(alphabet, range, std::move(rows), depth, {}, v); });
  }
  if (type == "table") {
    const Fields f(j, path, {"type", "depth", "rows", "validate"});
    const std::size_t d = f.has("depth") ? f.count("depth") : depth;
    if (d > depth) throw SpecError(f.at("depth"), "exceeds the declared memory depth");
    auto rows = Fields::matrix(f.required("rows"), f.at("rows"));
    const auto v = f.flag_or("validate", true) ? Validation::strict : Validation::skip;
    if (d < depth) {
      // widen to the declared depth so every component reads the same past length
      return at_path(path, [&] { return KernelSpec::markov(alphabet, d, std::move(rows), depth, {}, v); });
    }
    return at_path(path, [&] { return KernelSpec::general(alphabet, d, std::move(rows), {}, v); });
  }
  if (type == "linear") {
    const Fields f(j, path, {"type", "intercept", "coefficients", "declared_tail"});
    auto coeffs = Fields::vector(f.required("coefficients"), f.at("coefficients"));
    if (coeffs.size() > depth) throw SpecError(f.at("coefficients"), "longer than the declared memory depth");
    coeffs.resize(depth, 0.0);
    const double a0 = f.number_or("intercept", 0.0);
    const double tail = f.number_or("declared_tail", 0.0);
    return at_path(path, [&] { return KernelSpec::linear(alphabet, a0, std::move(coeffs), tail); });
  }
  if (type == "site_indexed") {
    if (!allow_site_indexed) throw SpecError(path, "site-indexed kernels cannot be nested");
    const Fields f(j, path, {"type", "default", "sites"});
    const KernelSpec fallback = parse_kernel(f.required("default"), f.at("default"), alphabet, depth, false);
    const Json& sites = f.required("sites");
    if (!sites.is_array()) throw SpecError(f.at("sites"), "expected an array");
    std::map<Site, KernelSpec> overrides;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const std::string p = f.at("sites") + "[" + std::to_string(i) + "]";
      const Fields s(sites[i], p, {"site", "kernel"});
      const Json& site = s.required("site");
      if (!site.is_number_integer()) throw SpecError(s.at("site"), "expected an integer site");
      const Site at = site.get<Site>();
      if (overrides.count(at)) throw SpecError(s.at("site"), "duplicate site " + std::to_string(at));
      overrides.emplace(at, parse_kernel(s.required("kernel"), s.at("kernel"), alphabet, depth, false));
    }
    return at_path(path, [&] { return KernelSpec::site_indexed(fallback, overrides); });
  }
  throw SpecError(path + ".type", "unknown kernel type '" + type + "'");
}

inline Json kernel_to_json(const KernelSpec& k) {
  return std::visit(
      [&](const auto& fam) -> Json {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, MarkovTable>) {
          return Json{{"type", "markov"}, {"range", fam.range}, {"rows", fam.rows}};
        } else if constexpr (std::is_same_v<T, GeneralTable>) {
          return Json{{"type", "table"}, {"rows", fam.rows}};
        } else if constexpr (std::is_same_v<T, LinearLongMemory>) {
          return Json{{"type", "linear"},
                      {"intercept", fam.intercept},
                      {"coefficients", fam.coefficients},
                      {"declared_tail", fam.declared_tail}};
        } else {
          Json sites = Json::array();
          for (const auto& [site, sub] : fam.overrides) sites.push_back({{"site", site}, {"kernel", kernel_to_json(*sub)}});
          return Json{{"type", "site_indexed"}, {"default", kernel_to_json(*fam.fallback)}, {"sites", sites}};
        }
      },
      k.family());
}

}  // namespace detail

inline Json alphabet_to_json(const Alphabet& a) {
  Json j{{"symbols", a.labels()}};
  if (!a.is_discrete()) j["metric"] = a.metric_rows();
  return j;
}

inline Json spec_to_json(const KernelSpec& k, const std::string& label) {
  Json j{{"alphabet", alphabet_to_json(k.alphabet())},
         {"memory_depth", k.memory_depth()},
         {"kernel", detail::kernel_to_json(k)}};
  if (!label.empty()) j["label"] = label;
  return j;
}

inline ParsedSpec parse_spec(const Json& j) {
  const detail::Fields f(j, "$", {"alphabet", "kernel", "memory_depth", "label"});
  ParsedSpec out;
  out.alphabet = detail::parse_alphabet(f.required("alphabet"), f.at("alphabet"));
  const std::size_t depth = f.count("memory_depth");
  out.label = f.string_or("label", "");
  out.kernel = detail::parse_kernel(f.required("kernel"), f.at("kernel"), out.alphabet, depth, true);
  if (out.kernel.memory_depth() != depth) {
    throw SpecError(f.at("memory_depth"), "declared " + std::to_string(depth) + " but the kernel reads " +
                                              std::to_string(out.kernel.memory_depth()) + " past symbols");
  }
  out.canonical = spec_to_json(out.kernel, out.label);
  return out;
}

inline ParsedSpec parse_spec_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SpecError("$", std::string("malformed JSON: ") + e.what());
  }
  return parse_spec(j);
}

inline ParsedSpec load_spec(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw SpecError(file, "cannot open spec file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec_text(ss.str());
}

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
inline std::string spec_hash(const Json& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lis
