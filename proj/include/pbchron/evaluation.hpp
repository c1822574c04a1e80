#pragma once
// Scoring against ground truth and the subsampling comparison experiment:
// for each (scenario, information percent, replicate), subsample the master
// core, date it with each engine, and record per-depth offset, interval
// length, and offset normalized by the model's own sd proxy.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pbchron/chronology.hpp"
#include "pbchron/crs.hpp"
#include "pbchron/dataset.hpp"
#include "pbchron/plum.hpp"
#include "pbchron/rng.hpp"
#include "pbchron/simulator.hpp"
#include "pbchron/stats.hpp"

namespace pbchron {

struct ComparisonRecord {
  std::string scenario;  // "S1".."S3" or custom id
  int percent = 100;
  int replicate = 0;
  Method method = Method::ci_crs;
  double depth = 0.0;
  double true_age = 0.0;
  double offset = 0.0;             // |estimate - truth|, yr
  double signed_offset = 0.0;      // estimate - truth, yr
  double interval_length = 0.0;    // upper95 - lower95, yr
  double normalized_offset = 0.0;  // offset / sd_proxy; +inf when sd_proxy = 0
  bool normalized_valid = true;
};

// One record per dated estimate; undated depths are skipped.
inline std::vector<ComparisonRecord> score_chronology(const Chronology& c, const Scenario& scn) {
  std::vector<ComparisonRecord> out;
  for (const auto& e : c.estimates) {
    if (!e.dated) continue;
    if (!(e.depth >= 0.0 && e.depth <= kCoreDepth))
      throw std::domain_error("score_chronology: depth outside [0, 30]");
    ComparisonRecord r;
    r.scenario = scenario_name(scn.id);
    r.method = c.method;
    r.depth = e.depth;
    r.true_age = true_age(scn, e.depth);
    r.signed_offset = e.age_mean - r.true_age;
    r.offset = std::abs(r.signed_offset);
    r.interval_length = e.upper95 - e.lower95;
    if (e.sd_proxy > 0.0) {
      r.normalized_offset = r.offset / e.sd_proxy;
    } else {
      r.normalized_offset = r.offset == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      r.normalized_valid = r.offset == 0.0;
    }
    out.push_back(std::move(r));
  }
  return out;
}

struct SkippedRun {
  std::string scenario;
  int percent = 0;
  int replicate = 0;
  Method method = Method::ci_crs;
  std::string reason;
};

struct ExperimentPlan {
  std::vector<Scenario> scenarios;
  std::vector<int> percents;  // subset of {10,15,...,95,100}
  int replicates = 100;       // per percent below 100; the 100% core runs once
  std::uint64_t master_seed = 0;
  bool run_ci_crs = true;
  bool run_r_crs = false;
  bool run_plum = true;
  int r_crs_draws = 2000;
  NoiseConfig noise{};          // used to simulate master cores (seed derived per scenario)
  CrsOptions crs{};
  PlumPriors plum_priors{};
  McmcConfig plum_mcmc{};
  int jobs = 1;
  // Optional pre-built master cores, one per scenario, overriding simulation.
  std::vector<Dataset> master_datasets;
};

inline void validate_plan(const ExperimentPlan& plan) {
  if (plan.scenarios.empty()) throw ValidationError("experiment: need at least one scenario");
  if (plan.percents.empty()) throw ValidationError("experiment: need at least one percent level");
  for (int p : plan.percents)
    if (!valid_information_percent(p))
      throw ValidationError("experiment: percent " + std::to_string(p) + " not in {10,15,...,95,100}");
  if (plan.replicates < 1) throw ValidationError("experiment: replicates must be >= 1");
  if (!plan.run_ci_crs && !plan.run_r_crs && !plan.run_plum)
    throw ValidationError("experiment: no engine selected");
  if (!plan.master_datasets.empty() && plan.master_datasets.size() != plan.scenarios.size())
    throw ValidationError("experiment: master datasets must match scenarios one-to-one");
  if (plan.jobs < 1) throw ValidationError("experiment: jobs must be >= 1");
}

struct ExperimentResult {
  std::vector<ComparisonRecord> records;
  std::vector<SkippedRun> skips;
  long attempted = 0;  // per-engine run attempts, summed over engines
  long completed = 0;
};

namespace detail {

struct ExperimentJob {
  std::size_t scenario_index = 0;
  int percent = 100;
  int replicate = 0;
};

inline void run_one_job(const ExperimentPlan& plan, const std::vector<Dataset>& masters,
                        const ExperimentJob& job, std::vector<ComparisonRecord>& records,
                        std::vector<SkippedRun>& skips, long& attempted, long& completed) {
  const Scenario& scn = plan.scenarios[job.scenario_index];
  const auto s_label = static_cast<std::uint64_t>(job.scenario_index);
  const auto p_label = static_cast<std::uint64_t>(job.percent);
  const auto r_label = static_cast<std::uint64_t>(job.replicate);
  Rng sub_rng(derive_seed(plan.master_seed, 0x5b5a, s_label, p_label, r_label));
  const Dataset sub = subsample(masters[job.scenario_index], job.percent, sub_rng);

  auto attempt = [&](Method method, auto&& engine) {
    ++attempted;
    try {
      const Chronology chron = engine();
      auto recs = score_chronology(chron, scn);
      for (auto& r : recs) {
        r.percent = job.percent;
        r.replicate = job.replicate;
      }
      records.insert(records.end(), recs.begin(), recs.end());
      ++completed;
    } catch (const std::exception& ex) {
      skips.push_back({scenario_name(scn.id), job.percent, job.replicate, method, ex.what()});
    }
  };

  if (plan.run_ci_crs)
    attempt(Method::ci_crs, [&] { return ci_crs_chronology(sub, plan.crs); });
  if (plan.run_r_crs)
    attempt(Method::r_crs, [&] {
      const std::uint64_t seed = derive_seed(plan.master_seed, 0x2c25, s_label, p_label, r_label);
      return r_crs_chronology(sub, plan.r_crs_draws, seed, plan.crs);
    });
  if (plan.run_plum)
    attempt(Method::plum, [&] {
      McmcConfig mcmc = plan.plum_mcmc;
      mcmc.seed = derive_seed(plan.master_seed, 0x91f3, s_label, p_label, r_label);
      const PosteriorDraws draws = sample_posterior(sub, plan.plum_priors, mcmc);
      std::vector<double> depths;
      for (int x = 1; x <= kSectionCount; ++x) depths.push_back(static_cast<double>(x));
      return summarize_chronology(draws, depths);
    });
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentPlan& plan) {
  validate_plan(plan);

  std::vector<Dataset> masters;
  if (!plan.master_datasets.empty()) {
    masters = plan.master_datasets;
  } else {
    for (std::size_t s = 0; s < plan.scenarios.size(); ++s) {
      NoiseConfig noise = plan.noise;
      noise.seed = derive_seed(plan.master_seed, 0x3a57, static_cast<std::uint64_t>(s));
      masters.push_back(simulate_core(plan.scenarios[s], noise));
    }
  }

  std::vector<detail::ExperimentJob> jobs;
  for (std::size_t s = 0; s < plan.scenarios.size(); ++s)
    for (int p : plan.percents) {
      const int reps = p == 100 ? 1 : plan.replicates;
      for (int r = 0; r < reps; ++r) jobs.push_back({s, p, r});
    }

  struct Slot {
    std::vector<ComparisonRecord> records;
    std::vector<SkippedRun> skips;
    long attempted = 0;
    long completed = 0;
  };
  std::vector<Slot> slots(jobs.size());

  const unsigned worker_count =
      std::min<unsigned>(static_cast<unsigned>(plan.jobs), static_cast<unsigned>(jobs.size()));
  if (worker_count <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i)
      detail::run_one_job(plan, masters, jobs[i], slots[i].records, slots[i].skips,
                          slots[i].attempted, slots[i].completed);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        detail::run_one_job(plan, masters, jobs[i], slots[i].records, slots[i].skips,
                            slots[i].attempted, slots[i].completed);
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < worker_count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Merge in job order: output is identical regardless of --jobs.
  ExperimentResult out;
  for (auto& slot : slots) {
    out.records.insert(out.records.end(), slot.records.begin(), slot.records.end());
    out.skips.insert(out.skips.end(), slot.skips.begin(), slot.skips.end());
    out.attempted += slot.attempted;
    out.completed += slot.completed;
  }
  return out;
}

struct GroupStats {
  Method method = Method::ci_crs;
  std::string scenario = "all";  // "all" pools scenarios
  int percent = -1;              // -1 pools percents ("overall" row)
  long n_records = 0;
  long n_excluded_normalized = 0;  // infinite normalized offsets left out of the mean
  long n_runs = 0;
  double mean_offset = 0.0;
  double mean_interval = 0.0;
  double mean_normalized = 0.0;
  double frac_norm_le1 = 0.0;  // fraction of runs with mean normalized offset <= 1
  double frac_norm_le2 = 0.0;
};

namespace detail {

struct RunKey {
  std::string scenario;
  int percent;
  int replicate;
  Method method;
  bool operator<(const RunKey& o) const {
    if (scenario != o.scenario) return scenario < o.scenario;
    if (percent != o.percent) return percent < o.percent;
    if (replicate != o.replicate) return replicate < o.replicate;
    return static_cast<int>(method) < static_cast<int>(o.method);
  }
  bool operator==(const RunKey& o) const {
    return scenario == o.scenario && percent == o.percent && replicate == o.replicate && method == o.method;
  }
};

}  // namespace detail

// Grouped means plus run-level coverage fractions. Emits per-(method,percent)
// rows pooled over scenarios, one overall row per method, and per-scenario
// overall rows. Records with infinite normalized offset are excluded from
// normalized means with their count reported.
inline std::vector<GroupStats> aggregate_summary(const std::vector<ComparisonRecord>& records) {
  if (records.empty()) throw std::domain_error("aggregate_summary: no records");

  // Per-run mean normalized offsets for the coverage fractions.
  std::vector<std::pair<detail::RunKey, std::pair<double, long>>> runs;  // key -> (sum, n valid)
  auto run_of = [&](const ComparisonRecord& r) {
    return detail::RunKey{r.scenario, r.percent, r.replicate, r.method};
  };
  {
    std::vector<std::pair<detail::RunKey, const ComparisonRecord*>> tagged;
    tagged.reserve(records.size());
    for (const auto& r : records) tagged.push_back({run_of(r), &r});
    std::stable_sort(tagged.begin(), tagged.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [key, rec] : tagged) {
      if (runs.empty() || !(runs.back().first == key)) runs.push_back({key, {0.0, 0}});
      if (rec->normalized_valid) {
        runs.back().second.first += rec->normalized_offset;
        runs.back().second.second += 1;
      }
    }
  }

  struct Accum {
    long n = 0, n_excl = 0, n_runs = 0, runs_le1 = 0, runs_le2 = 0;
    double sum_off = 0.0, sum_int = 0.0, sum_norm = 0.0;
    long n_norm = 0;
  };
  auto fold_record = [](Accum& a, const ComparisonRecord& r) {
    a.n += 1;
    a.sum_off += r.offset;
    a.sum_int += r.interval_length;
    if (r.normalized_valid) {
      a.sum_norm += r.normalized_offset;
      a.n_norm += 1;
    } else {
      a.n_excl += 1;
    }
  };
  auto fold_run = [](Accum& a, double mean_norm, bool has_valid) {
    a.n_runs += 1;
    if (!has_valid) return;
    if (mean_norm <= 1.0) a.runs_le1 += 1;
    if (mean_norm <= 2.0) a.runs_le2 += 1;
  };

  // Group keys, in emission order: (method, percent) over all scenarios;
  // (method, -1) overall; (method, scenario, -1) per scenario.
  std::vector<Method> methods;
  std::vector<int> percents;
  std::vector<std::string> scenarios;
  for (const auto& r : records) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    if (std::find(percents.begin(), percents.end(), r.percent) == percents.end()) percents.push_back(r.percent);
    if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end())
      scenarios.push_back(r.scenario);
  }
  std::sort(methods.begin(), methods.end(),
            [](Method a, Method b) { return static_cast<int>(a) < static_cast<int>(b); });
  std::sort(percents.begin(), percents.end());
  std::sort(scenarios.begin(), scenarios.end());

  std::vector<GroupStats> out;
  auto emit = [&](Method m, const std::string& scen, int pct) {
    Accum a;
    for (const auto& r : records) {
      if (r.method != m) continue;
      if (pct != -1 && r.percent != pct) continue;
      if (scen != "all" && r.scenario != scen) continue;
      fold_record(a, r);
    }
    for (const auto& [key, v] : runs) {
      if (key.method != m) continue;
      if (pct != -1 && key.percent != pct) continue;
      if (scen != "all" && key.scenario != scen) continue;
      fold_run(a, v.second > 0 ? v.first / static_cast<double>(v.second) : 0.0, v.second > 0);
    }
    if (a.n == 0) return;
    GroupStats g;
    g.method = m;
    g.scenario = scen;
    g.percent = pct;
    g.n_records = a.n;
    g.n_excluded_normalized = a.n_excl;
    g.n_runs = a.n_runs;
    g.mean_offset = a.sum_off / static_cast<double>(a.n);
    g.mean_interval = a.sum_int / static_cast<double>(a.n);
    g.mean_normalized = a.n_norm > 0 ? a.sum_norm / static_cast<double>(a.n_norm) : 0.0;
    g.frac_norm_le1 = a.n_runs > 0 ? static_cast<double>(a.runs_le1) / static_cast<double>(a.n_runs) : 0.0;
    g.frac_norm_le2 = a.n_runs > 0 ? static_cast<double>(a.runs_le2) / static_cast<double>(a.n_runs) : 0.0;
    out.push_back(g);
  };

  for (Method m : methods)
    for (int p : percents) emit(m, "all", p);
  for (Method m : methods) emit(m, "all", -1);
  for (Method m : methods)
    for (const auto& s : scenarios)
      if (scenarios.size() > 1) emit(m, s, -1);
  return out;
}

inline const char* kRecordsHeader =
    "scenario,percent,replicate,method,depth,true_age,offset,signed_offset,interval_length,"
    "normalized_offset";

inline void write_records(const std::vector<ComparisonRecord>& records, const std::string& path,
                          const std::vector<std::string>& extra_comments = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write records file: " + path);
  for (const auto& c : extra_comments) out << "# " << c << "\n";
  out << kRecordsHeader << "\n";
  for (const auto& r : records) {
    out << r.scenario << ',' << r.percent << ',' << r.replicate << ',' << method_name(r.method) << ','
        << detail::fmt(r.depth) << ',' << detail::fmt(r.true_age) << ',' << detail::fmt(r.offset) << ','
        << detail::fmt(r.signed_offset) << ',' << detail::fmt(r.interval_length) << ',';
    if (r.normalized_valid) out << detail::fmt(r.normalized_offset);
    else out << "inf";
    out << "\n";
  }
  if (!out) throw std::runtime_error("I/O failure writing " + path);
}

inline std::vector<ComparisonRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open records file: " + path);
  std::vector<ComparisonRecord> out;
  std::string line;
  bool header_seen = false;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kRecordsHeader)
        throw FormatError("bad header: expected '" + std::string(kRecordsHeader) + "'");
      header_seen = true;
      continue;
    }
    ++row_number;
    const auto f = detail::split_csv(line);
    if (f.size() != 10)
      throw FormatError("parse failure at row " + std::to_string(row_number) + ": expected 10 fields");
    ComparisonRecord r;
    r.scenario = detail::trim(f[0]);
    r.percent = static_cast<int>(detail::parse_number(detail::trim(f[1]), row_number, 2));
    r.replicate = static_cast<int>(detail::parse_number(detail::trim(f[2]), row_number, 3));
    r.method = method_from_name(detail::trim(f[3]));
    r.depth = detail::parse_number(detail::trim(f[4]), row_number, 5);
    r.true_age = detail::parse_number(detail::trim(f[5]), row_number, 6);
    r.offset = detail::parse_number(detail::trim(f[6]), row_number, 7);
    r.signed_offset = detail::parse_number(detail::trim(f[7]), row_number, 8);
    r.interval_length = detail::parse_number(detail::trim(f[8]), row_number, 9);
    const std::string norm = detail::trim(f[9]);
    if (norm == "inf") {
      r.normalized_offset = std::numeric_limits<double>::infinity();
      r.normalized_valid = false;
    } else {
      r.normalized_offset = detail::parse_number(norm, row_number, 10);
    }
    out.push_back(std::move(r));
  }
  if (!header_seen) throw FormatError("missing header line in " + path);
  return out;
}

inline const char* kSummaryHeader =
    "method,scenario,percent,n_runs,n_records,n_excluded_normalized,mean_offset,mean_interval,"
    "mean_normalized,frac_norm_le1,frac_norm_le2";

inline void write_summary(const std::vector<GroupStats>& summary, const std::string& path,
                          const std::vector<std::string>& extra_comments = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write summary file: " + path);
  for (const auto& c : extra_comments) out << "# " << c << "\n";
  out << kSummaryHeader << "\n";
  for (const auto& g : summary) {
    out << method_name(g.method) << ',' << g.scenario << ','
        << (g.percent < 0 ? std::string("overall") : std::to_string(g.percent)) << ',' << g.n_runs << ','
        << g.n_records << ',' << g.n_excluded_normalized << ',' << detail::fmt(g.mean_offset) << ','
        << detail::fmt(g.mean_interval) << ',' << detail::fmt(g.mean_normalized) << ','
        << detail::fmt(g.frac_norm_le1) << ',' << detail::fmt(g.frac_norm_le2) << "\n";
  }
  if (!out) throw std::runtime_error("I/O failure writing " + path);
}

}  // namespace pbchron
