#pragma once

// The lis-lab commands as plain functions: each takes parsed options, writes
// its report, and returns the process exit code (0 pass, 1 input error,
// 2 criterion or verification failure).

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lis/analysis.hpp"
#include "lis/bounds.hpp"
#include "lis/io.hpp"
#include "lis/oracle.hpp"
#include "lis/parallel.hpp"
#include "lis/report.hpp"
#include "lis/sim.hpp"

namespace lis::cli {

enum ExitCode : int { kPass = 0, kInputError = 1, kFailure = 2 };

struct SpecSource {
  std::string path;     // JSON spec file
  std::string example;  // builtin: markov | powerlaw
  double p01 = 0.3;
  double p11 = 0.7;
  double epsilon = 0.5;
  std::size_t depth = 4;
  std::string normalization = "infinite";
};

struct Options {
  SpecSource spec;
  RunSettings run;
  std::string out;  // JSON report path; stdout when empty
  std::string csv;  // CSV table path
  // check
  std::string criterion = "all";
  std::optional<std::size_t> horizon;
  // bound / simulate
  std::string bound_kind = "memory";
  std::size_t max_n = 8;
  std::size_t max_lag = 8;
  Site past_site = -1;
  std::optional<std::size_t> symbol;
  bool verify = false;
  std::size_t samples = 0;
  std::optional<std::size_t> burn_in;
  SpecSource other;
  // verify
  std::size_t trials = 20;
  // simulate
  std::size_t length = 100000;
};

inline ParsedSpec resolve_spec(const SpecSource& src) {
  if (!src.example.empty()) {
    if (!src.path.empty()) throw InvalidInput("give either a spec file or --example, not both");
    ParsedSpec out;
    if (src.example == "markov") {
      out.kernel = two_state_markov(src.p01, src.p11);
      out.label = "markov p01=" + format_number(src.p01) + " p11=" + format_number(src.p11);
    } else if (src.example == "powerlaw" || src.example == "paper-powerlaw") {
      PowerLawNormalization norm;
      if (src.normalization == "infinite") {
        norm = PowerLawNormalization::infinite;
      } else if (src.normalization == "truncated") {
        norm = PowerLawNormalization::truncated;
      } else {
        throw InvalidInput("normalization must be infinite or truncated");
      }
      out.kernel = power_law_kernel(src.epsilon, src.depth, norm);
      out.label = out.kernel.label();
    } else {
      throw InvalidInput("unknown example '" + src.example + "' (expected markov or powerlaw)");
    }
    out.alphabet = out.kernel.alphabet();
    out.canonical = spec_to_json(out.kernel, out.label);
    return out;
  }
  if (src.path.empty()) throw InvalidInput("no spec given: pass a spec file or --example");
  return load_spec(src.path);
}

namespace detail {

inline void emit(const Options& opt, const Json& report, const Table* table, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (opt.out.empty()) {
    out << text;
  } else {
    write_atomic(opt.out, text);
  }
  if (!opt.csv.empty()) {
    if (!table) throw InvalidInput("this command produces no table for --csv");
    write_atomic(opt.csv, table->csv());
  }
}

inline Symbol pick_symbol(const Options& opt, const Alphabet& alphabet) {
  const std::size_t s = opt.symbol.value_or(alphabet.size() - 1);
  if (s >= alphabet.size()) throw InvalidInput("--symbol is outside the alphabet");
  return static_cast<Symbol>(s);
}

// Exact stationary law when the block chain is small and ergodic.
inline std::optional<FiniteDistribution> try_stationary(const KernelSpec& f, const EnumerationCap& cap,
                                                        std::vector<std::string>& notes) {
  try {
    return stationary_measure(f, {}, cap);
  } catch (const std::exception& e) {
    notes.push_back(std::string("no exact stationary law: ") + e.what());
    return std::nullopt;
  }
}

}  // namespace detail

inline int run_check(const Options& opt, std::ostream& out = std::cout) {
  const ParsedSpec spec = resolve_spec(opt.spec);
  const KernelSpec& f = spec.kernel;
  if (opt.criterion != "all" && opt.criterion != "dobrushin" && opt.criterion != "boundary") {
    throw InvalidInput("--criterion must be dobrushin, boundary or all");
  }
  const SensitivityMatrix alpha = build_sensitivity_matrix(f, opt.run.cap);
  const CriterionVerdict dob = dobrushin_check(alpha, f.truncation_tail());
  const CriterionVerdict bu =
      boundary_uniformity_check(f, opt.horizon.value_or(f.memory_depth()), opt.run.cap);

  Json report = report_header("check", spec, opt.run);
  report["criterion"] = opt.criterion;
  report["verdicts"] = Json::array({verdict_to_json(dob), verdict_to_json(bu)});
  report["sensitivity"] = {{"stationary", alpha.is_stationary()}, {"lags", alpha.lags()}};
  if (!alpha.is_stationary()) {
    Json rows = Json::object();
    for (const auto& [site, lags] : alpha.rows()) rows[std::to_string(site)] = lags;
    report["sensitivity"]["site_rows"] = rows;
  }
  if (f.stationary() && f.memory_depth() <= 1) report["ergodic_coefficient"] = ergodic_coefficient(f);

  bool pass = true;
  if (opt.criterion != "boundary") pass = pass && dob.satisfied;
  if (opt.criterion != "dobrushin") pass = pass && bu.satisfied;
  report["passed"] = pass;
  report["exit_code"] = pass ? kPass : kFailure;
  detail::emit(opt, report, nullptr, out);
  return pass ? kPass : kFailure;
}

inline int run_bound_memory(const Options& opt, const ParsedSpec& spec, Json& report, Table& table) {
  const KernelSpec& f = spec.kernel;
  if (opt.past_site >= 0) throw InvalidInput("--past-site must be negative (left of the window [0, n])");
  const SensitivityMatrix alpha = build_sensitivity_matrix(f, opt.run.cap);
  const Symbol sym = detail::pick_symbol(opt, f.alphabet());
  std::optional<DecaySpec> decay;
  try {
    const double target = 0.5 * (1.0 + alpha.sup_row_sum());
    decay = fit_decay_rate(alpha, DecaySpec::Family::exponential, std::min(target, 1.0 - 1e-6));
    report["decay"] = {{"family", to_string(decay->family)}, {"rate", decay->rate}, {"gamma_target", target}};
  } catch (const CriterionNotMet& e) {
    report["decay"] = {{"error", e.what()}};
  }
  const Site j = opt.past_site;
  bool pass = true;
  for (std::size_t n = 1; n <= opt.max_n; ++n) {
    const Window w{0, static_cast<Site>(n)};
    const Observable h = Observable::indicator(f.alphabet(), w.hi, sym);
    const double bound = memory_bound_general(alpha, w, h, j);
    Table::Cell expo, exact, slack;
    if (decay) {
      try {
        expo = memory_bound_exponential(alpha, *decay, w, h, j).bound;
      } catch (const CriterionNotMet&) {
      }
    }
    if (opt.verify) {
      try {
        exact = exact_oscillation_of_average(f, w, h, j, opt.run.cap);
        slack = bound - *exact;
        if (*slack < -1e-12) pass = false;
      } catch (const CapExceeded&) {
      }
    }
    table.add({static_cast<double>(n), bound, expo, exact, slack});
  }
  report["past_site"] = j;
  report["observable"] = "indicator of symbol " + f.alphabet().label(sym) + " at site n";
  return pass ? kPass : kFailure;
}

inline int run_bound_correlation(const Options& opt, const ParsedSpec& spec, Json& report, Table& table) {
  const KernelSpec& f = spec.kernel;
  const SensitivityMatrix alpha = build_sensitivity_matrix(f, opt.run.cap);
  const CriterionVerdict dob = dobrushin_check(alpha, f.truncation_tail());
  report["dobrushin"] = verdict_to_json(dob);
  if (!dob.satisfied) {
    report["error"] = "correlation bound needs the Dobrushin condition";
    return kFailure;
  }
  const Symbol sym = detail::pick_symbol(opt, f.alphabet());
  const Observable h_past = Observable::indicator(f.alphabet(), 0, sym);
  std::vector<std::string> notes;
  std::optional<FiniteDistribution> mu;
  if (opt.verify) mu = detail::try_stationary(f, opt.run.cap, notes);
  std::vector<Symbol> path;
  std::size_t burn = 0;
  if (opt.samples > 0) {
    burn = opt.burn_in ? *opt.burn_in : default_burn_in(f, opt.run.cap);
    path = sample_path(f, opt.samples + burn + opt.max_lag + 1, opt.run.seed);
    report["simulation"] = {{"samples", opt.samples}, {"burn_in", burn}, {"seed", opt.run.seed}};
  }
  bool pass = true;
  double max_terms = 0;
  for (std::size_t lag = 1; lag <= opt.max_lag; ++lag) {
    const Observable h_future = Observable::indicator(f.alphabet(), static_cast<Site>(lag), sym);
    const TruncatedSum b = correlation_bound(alpha, Window::single(static_cast<Site>(lag)), Window::single(0), h_future,
                                             h_past, f.alphabet().diameter());
    max_terms = std::max(max_terms, static_cast<double>(b.terms));
    Table::Cell exact, emp, se;
    if (mu) {
      exact = exact_correlation(f, Observable::indicator(f.alphabet(), 0, sym), h_past, lag, opt.run.cap, &*mu);
      if (*exact > b.value + 1e-12) pass = false;
    }
    if (!path.empty()) {
      const auto est = estimate_correlation(path, Observable::indicator(f.alphabet(), 0, sym), h_past, lag, burn);
      emp = est.estimate;
      se = est.standard_error;
    }
    table.add({static_cast<double>(lag), b.value, b.tail_certificate, exact, emp, se});
  }
  report["series_terms_max"] = max_terms;
  report["observables"] = "indicators of symbol " + f.alphabet().label(sym) + " at sites 0 and lag";
  report["notes"] = notes;
  return pass ? kPass : kFailure;
}

inline int run_bound_compare(const Options& opt, const ParsedSpec& spec, Json& report, Table& table) {
  const KernelSpec& f = spec.kernel;
  if (opt.other.path.empty() && opt.other.example.empty()) throw InvalidInput("compare needs --other <spec.json>");
  const ParsedSpec other = resolve_spec(opt.other);
  report["other"] = {{"spec_hash", spec_hash(other.canonical)}, {"label", other.label}};
  std::vector<std::string> notes;
  std::optional<FiniteDistribution> mu, mu_other;
  if (opt.verify) {
    mu = detail::try_stationary(f, opt.run.cap, notes);
    mu_other = detail::try_stationary(other.kernel, opt.run.cap, notes);
  }
  bool pass = true;
  for (std::size_t s = 0; s < f.alphabet().size(); ++s) {
    if (opt.symbol && *opt.symbol != s) continue;
    const Observable h = Observable::indicator(f.alphabet(), 0, static_cast<Symbol>(s));
    const ComparisonBound cb = comparison_bound(f, other.kernel, Window::single(0), h, {}, opt.run.cap);
    Table::Cell exact;
    if (mu && mu_other) {
      exact = std::abs(stationary_expectation(f, *mu, h, opt.run.cap) -
                       stationary_expectation(other.kernel, *mu_other, h, opt.run.cap));
      if (*exact > cb.sum.value + 1e-12) pass = false;
    }
    table.add({static_cast<double>(s), cb.sum.value, cb.b_max, cb.sum.tail_certificate, exact});
  }
  report["notes"] = notes;
  return pass ? kPass : kFailure;
}

inline int run_bound(const Options& opt, std::ostream& out = std::cout) {
  const ParsedSpec spec = resolve_spec(opt.spec);
  Json report = report_header("bound", spec, opt.run);
  report["kind"] = opt.bound_kind;
  report["verify"] = opt.verify;
  int code = kPass;
  std::optional<Table> table;
  try {
    if (opt.bound_kind == "memory") {
      table.emplace(std::vector<std::string>{"n", "bound", "exponential_bound", "exact", "slack"});
      code = run_bound_memory(opt, spec, report, *table);
    } else if (opt.bound_kind == "correlation") {
      table.emplace(std::vector<std::string>{"lag", "bound", "tail_certificate", "exact", "empirical", "standard_error"});
      code = run_bound_correlation(opt, spec, report, *table);
    } else if (opt.bound_kind == "compare") {
      table.emplace(std::vector<std::string>{"symbol", "bound", "b_max", "tail_certificate", "exact"});
      code = run_bound_compare(opt, spec, report, *table);
    } else {
      throw InvalidInput("bound kind must be memory, correlation or compare");
    }
  } catch (const CriterionNotMet& e) {
    report["error"] = e.what();
    code = kFailure;
  }
  if (table) report["table"] = table->json();
  report["passed"] = code == kPass;
  report["exit_code"] = code;
  detail::emit(opt, report, table ? &*table : nullptr, out);
  return code;
}

struct PropertyResult {
  std::string name;
  std::size_t checks = 0;
  double worst = 0.0;  // largest residual, or smallest slack
  bool passed = true;
  bool skipped = false;
  std::string note;
};

namespace detail {

template <class Fn>
PropertyResult guarded(const std::string& name, Fn&& fn) {
  try {
    PropertyResult r = fn();
    r.name = name;
    return r;
  } catch (const CapExceeded& e) {
    PropertyResult r;
    r.name = name;
    r.skipped = true;
    r.note = e.what();
    return r;
  } catch (const CriterionNotMet& e) {
    PropertyResult r;
    r.name = name;
    r.skipped = true;
    r.note = e.what();
    return r;
  } catch (const InvalidInput& e) {
    // a kernel that breaks an invariant mid-check fails the property
    PropertyResult r;
    r.name = name;
    r.passed = false;
    r.note = e.what();
    return r;
  }
}

inline PropertyResult from_residual(const ResidualReport& rep, PropertyResult acc = {}) {
  acc.checks += rep.checks;
  acc.worst = std::max(acc.worst, rep.max_residual);
  acc.passed = acc.passed && rep.passed();
  return acc;
}

}  // namespace detail

/// The oracle property suite for one kernel.
inline std::vector<PropertyResult> verify_suite(const KernelSpec& f, const RunSettings& run, std::size_t trials) {
  constexpr double kResidual = 1e-12;
  const EnumerationCap& cap = run.cap;
  const Window outer{0, 3};
  std::vector<PropertyResult> out;

  out.push_back(detail::guarded("normalization", [&] {
    PropertyResult r;
    Rng rng(trial_seed(run.seed, 0));
    const Observable one = Observable::constant(f.alphabet(), 0, 1.0);
    for (std::size_t t = 0; t < trials; ++t) {
      const PastConfig past = random_past(f.alphabet(), std::max<std::size_t>(f.memory_depth(), 1), rng);
      for (Site hi = 0; hi <= outer.hi; ++hi) {
        const double res = std::abs(compose_window(f, Window{0, hi}, past, one, cap) - 1.0);
        r.worst = std::max(r.worst, res);
        ++r.checks;
      }
    }
    r.passed = r.worst <= kResidual;
    return r;
  }));

  out.push_back(detail::guarded("consistency", [&] {
    PropertyResult r;
    std::uint64_t s = run.seed;
    for (Site lo = outer.lo; lo <= outer.hi; ++lo)
      for (Site hi = lo; hi <= outer.hi; ++hi) r = detail::from_residual(verify_consistency(f, outer, Window{lo, hi}, trials, kResidual, ++s, cap), r);
    return r;
  }));

  out.push_back(detail::guarded("factorization", [&] {
    return detail::from_residual(verify_factorization(f, outer, trials, kResidual, run.seed, cap));
  }));

  std::optional<SensitivityMatrix> built;
  out.push_back(detail::guarded("sensitivity matrix", [&] {
    built = build_sensitivity_matrix(f, cap);
    PropertyResult r;
    r.checks = 1;
    return r;
  }));
  if (!built) return out;
  const SensitivityMatrix& alpha = *built;
  for (Site len = 1; len <= 2; ++len) {
    out.push_back(detail::guarded("dusting V=[0," + std::to_string(len - 1) + "]", [&] {
      const DustingReport d = verify_dusting(f, Window{0, len - 1}, alpha, trials, run.seed, cap, run.threads);
      PropertyResult r;
      r.checks = d.instances;
      r.worst = d.min_slack;
      r.passed = d.violations == 0;
      return r;
    }));
  }

  out.push_back(detail::guarded("memory domination", [&] {
    PropertyResult r;
    r.worst = std::numeric_limits<double>::infinity();
    const Window w{0, 2};
    const Site strip = static_cast<Site>(std::max<std::size_t>(f.memory_depth(), 1));
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng(trial_seed(run.seed, 1000 + t));
      const Observable h = random_observable(f.alphabet(), w, rng, cap);
      for (Site j = -strip; j < 0; ++j) {
        const double slack = memory_bound_general(alpha, w, h, j) - exact_oscillation_of_average(f, w, h, j, cap);
        r.worst = std::min(r.worst, slack);
        ++r.checks;
      }
    }
    r.passed = r.worst >= -kResidual;
    return r;
  }));

  if (f.stationary()) {
    out.push_back(detail::guarded("correlation domination", [&] {
      PropertyResult r;
      r.worst = std::numeric_limits<double>::infinity();
      if (!(alpha.sup_row_sum() < 1.0)) throw CriterionNotMet("Dobrushin condition fails", alpha.sup_row_sum());
      std::vector<std::string> notes;
      const auto mu = detail::try_stationary(f, cap, notes);
      if (!mu) {
        r.skipped = true;
        r.note = notes.front();
        return r;
      }
      for (std::size_t s = 0; s < f.alphabet().size(); ++s) {
        const Observable h = Observable::indicator(f.alphabet(), 0, static_cast<Symbol>(s));
        for (std::size_t lag = 1; lag <= 4; ++lag) {
          const double exact = exact_correlation(f, h, h, lag, cap, &*mu);
          const double bound = correlation_bound(alpha, Window::single(static_cast<Site>(lag)), Window::single(0),
                                                 h.shifted(static_cast<Site>(lag)), h, f.alphabet().diameter())
                                   .value;
          r.worst = std::min(r.worst, bound - exact);
          ++r.checks;
        }
      }
      r.passed = r.worst >= -kResidual;
      return r;
    }));
  }
  return out;
}

inline int run_verify(const Options& opt, std::ostream& out = std::cout) {
  const ParsedSpec spec = resolve_spec(opt.spec);
  const auto results = verify_suite(spec.kernel, opt.run, opt.trials);
  Json report = report_header("verify", spec, opt.run);
  report["trials"] = opt.trials;
  Json props = Json::array();
  bool pass = true;
  for (const auto& r : results) {
    props.push_back({{"property", r.name},
                     {"checks", r.checks},
                     {"worst", r.worst},
                     {"passed", r.passed},
                     {"skipped", r.skipped},
                     {"note", r.note}});
    pass = pass && (r.skipped || r.passed);
  }
  report["properties"] = props;
  if (spec.kernel.truncation_tail() > 0.0) {
    report["notes"] = Json::array({"kernel drops coefficient mass " + format_number(spec.kernel.truncation_tail()) +
                                   " beyond its memory depth; checks apply to the truncated kernel"});
  }
  report["passed"] = pass;
  report["exit_code"] = pass ? kPass : kFailure;
  detail::emit(opt, report, nullptr, out);
  return pass ? kPass : kFailure;
}

inline int run_simulate(const Options& opt, std::ostream& out = std::cout) {
  const ParsedSpec spec = resolve_spec(opt.spec);
  const KernelSpec& f = spec.kernel;
  const Symbol sym = detail::pick_symbol(opt, f.alphabet());
  const std::size_t burn = opt.burn_in ? *opt.burn_in : default_burn_in(f, opt.run.cap);
  const auto path = sample_path(f, opt.length + burn + opt.max_lag + 1, opt.run.seed);
  const SensitivityMatrix alpha = build_sensitivity_matrix(f, opt.run.cap);
  const bool dobrushin = alpha.sup_row_sum() < 1.0;
  std::vector<std::string> notes;
  std::optional<FiniteDistribution> mu;
  if (f.stationary()) mu = detail::try_stationary(f, opt.run.cap, notes);
  if (!dobrushin) notes.push_back("Dobrushin condition fails; no analytic bound column");

  const Observable h = Observable::indicator(f.alphabet(), 0, sym);
  auto one = [&](std::size_t i) {
    const std::size_t lag = i + 1;
    const auto est = estimate_correlation(path, h, h, lag, burn);
    Table::Cell bound, exact;
    if (dobrushin) {
      bound = correlation_bound(alpha, Window::single(static_cast<Site>(lag)), Window::single(0),
                                h.shifted(static_cast<Site>(lag)), h, f.alphabet().diameter())
                  .value;
    }
    if (mu) exact = exact_covariance(f, h, h, lag, opt.run.cap, &*mu);
    return std::vector<Table::Cell>{static_cast<double>(lag), est.estimate, est.standard_error, bound, exact};
  };
  Table table({"lag", "empirical", "standard_error", "bound", "exact"});
  for (auto& row : parallel_map(opt.max_lag, one, opt.run.threads)) table.add(std::move(row));

  std::size_t ones = 0;
  for (std::size_t t = burn; t < path.size(); ++t) ones += path[t] == sym;
  Json report = report_header("simulate", spec, opt.run);
  report["length"] = opt.length;
  report["burn_in"] = burn;
  report["symbol"] = f.alphabet().label(sym);
  report["symbol_frequency"] = static_cast<double>(ones) / static_cast<double>(path.size() - burn);
  report["batches"] = kBatchCount;
  report["table"] = table.json();
  report["notes"] = notes;
  report["passed"] = true;
  report["exit_code"] = kPass;
  detail::emit(opt, report, &table, out);
  return kPass;
}

/// Runs a command, mapping input errors to exit code 1.
template <class Fn>
int guarded_run(Fn&& fn, std::ostream& err = std::cerr) {
  try {
    return fn();
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
  } catch (const CapExceeded& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kInputError;
}

}  // namespace lis::cli
