#pragma once
// Forward simulation: build 210Pb/226Ra core datasets from a known age-depth
// function under a constant-supply model, apply the three-stage measurement
// noise (scatter -> occasional outlier shift -> lab error with a reported sd
// floor), and subsample cores by information percentage.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbchron/dataset.hpp"
#include "pbchron/rng.hpp"
#include "pbchron/units.hpp"

namespace pbchron {

// t(x) = linear*x + quadratic*x^2 + sine_amp*sin(x/sine_period).
struct AgeCurve {
  double linear = 0.0;
  double quadratic = 0.0;
  double sine_amp = 0.0;
  double sine_period = 1.0;

  double operator()(double x) const {
    double t = linear * x + quadratic * x * x;
    if (sine_amp != 0.0) t += sine_amp * std::sin(x / sine_period);
    return t;
  }
};

enum class ScenarioId { s1, s2, s3, custom };

inline const char* scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::s1: return "S1";
    case ScenarioId::s2: return "S2";
    case ScenarioId::s3: return "S3";
    case ScenarioId::custom: return "custom";
  }
  return "?";
}

struct Scenario {
  ScenarioId id = ScenarioId::custom;
  AgeCurve age_fn;
  double phi = 50.0;        // Bq/(m^2 yr), 210Pb supply
  double supported = 25.0;  // Bq/kg
};

// Built-in scenarios. These supply/supported pairings are the ones the
// bundled reference cores (data/sim01..03.csv) were generated from; the
// swapped S1/S2 pairing (100/10 and 50/25) is reachable through the
// phi/supported overrides.
inline Scenario scenario_s1() { return {ScenarioId::s1, {0.5, 0.25, 0.0, 1.0}, 50.0, 25.0}; }
inline Scenario scenario_s2() { return {ScenarioId::s2, {12.0, -0.2, 0.0, 1.0}, 100.0, 10.0}; }
inline Scenario scenario_s3() {
  return {ScenarioId::s3, {8.0, 0.0, 25.0, std::numbers::pi}, 500.0, 15.0};
}

inline Scenario builtin_scenario(int number) {
  switch (number) {
    case 1: return scenario_s1();
    case 2: return scenario_s2();
    case 3: return scenario_s3();
  }
  throw std::domain_error("scenario number must be 1, 2 or 3");
}

inline constexpr double kCoreDepth = 30.0;  // cm; full simulated core length

inline void validate_scenario(const Scenario& s) {
  if (!(s.phi > 0.0)) throw ValidationError("scenario: phi must be > 0");
  if (!(s.supported >= 0.0)) throw ValidationError("scenario: supported must be >= 0");
  if (std::abs(s.age_fn(0.0)) > 1e-12) throw ValidationError("scenario: age at surface must be 0");
  // Superposition: ages may not decrease downward.
  double prev = 0.0;
  for (int i = 1; i <= 3000; ++i) {
    const double t = s.age_fn(kCoreDepth * i / 3000.0);
    if (t < prev - 1e-9) throw ValidationError("scenario: age function decreases within the core");
    prev = t;
  }
}

inline double true_age(const Scenario& s, double depth) {
  if (!(depth >= 0.0)) throw std::domain_error("true_age: depth must be >= 0");
  return s.age_fn(depth);
}

// Dry bulk density profile shared by all scenarios, evaluated at a slab
// midpoint.
inline double density_at(double depth_mid) {
  if (!(depth_mid >= 0.0 && depth_mid <= kCoreDepth))
    throw std::domain_error("density_at: midpoint outside [0, 30]");
  return 0.15 - 0.05 * std::cos(std::numbers::pi * depth_mid / kCoreDepth);
}

// Average total concentration over the slab [x-delta, x): supported level
// plus the slab's excess inventory divided by its dry mass per area.
inline double true_total_concentration(const Scenario& s, double top, double bottom,
                                       const DecayConstants& decay = {}) {
  if (!(top >= 0.0 && bottom > top && bottom <= kCoreDepth))
    throw std::domain_error("true_total_concentration: slab must satisfy 0 <= top < bottom <= 30");
  const double delta = bottom - top;
  const double rho = density_at(0.5 * (top + bottom));
  const double inventory =
      (s.phi / decay.lambda) *
      (std::exp(-decay.lambda * s.age_fn(top)) - std::exp(-decay.lambda * s.age_fn(bottom)));
  return s.supported + inventory / (kMassAreaFactor * rho * delta);
}

struct NoiseConfig {
  double scatter_var = 10.0;         // (Bq/kg)^2, variance of the pre-lab scatter
  double p_out = 0.05;               // outlier probability per slab
  double x_shift = 0.0;              // Bq/kg outlier half-width; <=0 means 3*sqrt(scatter_var)
  double sigma_min = 1.0;            // Bq/kg, reported-sd floor
  double epsilon = 0.01;             // nominal analytical uncertainty fraction
  double y_scat = 1.5;               // nominal error multiplier
  double reported_sd_factor = 0.045; // operative sd rule: max(sigma_min, factor*value)
  std::uint64_t seed = 0;
  bool apply_lab_noise = true;       // false: report sd but return the pre-lab value

  double effective_x_shift() const {
    return x_shift > 0.0 ? x_shift : 3.0 * std::sqrt(scatter_var);
  }

  static NoiseConfig disabled() {
    NoiseConfig c;
    c.scatter_var = 0.0;
    c.p_out = 0.0;
    c.apply_lab_noise = false;
    return c;
  }
};

inline void validate_noise(const NoiseConfig& c) {
  if (!(c.scatter_var >= 0.0)) throw ValidationError("noise: scatter_var must be >= 0");
  if (!(c.p_out >= 0.0 && c.p_out <= 1.0)) throw ValidationError("noise: p_out must be in [0,1]");
  if (!(c.sigma_min > 0.0)) throw ValidationError("noise: sigma_min must be > 0");
  if (!(c.reported_sd_factor > 0.0)) throw ValidationError("noise: reported_sd_factor must be > 0");
}

struct PerturbedValue {
  double measured = 0.0;
  double reported_sd = 0.0;
};

// Three-stage noise: scatter about the true value, an occasional uniform
// outlier shift, then the lab draw at the reported sd.
inline PerturbedValue perturb_measurement(double true_conc, const NoiseConfig& cfg, Rng& rng) {
  double theta = cfg.scatter_var > 0.0 ? rng.normal(true_conc, std::sqrt(cfg.scatter_var)) : true_conc;
  if (cfg.p_out > 0.0 && rng.uniform() < cfg.p_out) {
    const double shift = cfg.effective_x_shift();
    theta = rng.uniform(theta - shift, theta + shift);
  }
  const double sd = std::max(cfg.sigma_min, theta * cfg.reported_sd_factor);
  const double measured = cfg.apply_lab_noise ? rng.normal(theta, sd) : theta;
  return {measured, sd};
}

inline Dataset simulate_core(const Scenario& s, const NoiseConfig& cfg, double delta = 1.0,
                             double max_depth = kCoreDepth, const std::string& core_id = "",
                             const DecayConstants& decay = {}) {
  validate_scenario(s);
  validate_noise(cfg);
  if (!(delta > 0.0)) throw std::domain_error("simulate_core: delta must be > 0");
  if (!(max_depth > 0.0 && max_depth <= kCoreDepth))
    throw std::domain_error("simulate_core: max_depth must be in (0, 30]");
  const double slabs = max_depth / delta;
  const long n = std::lround(slabs);
  if (n < 1 || std::abs(slabs - static_cast<double>(n)) > 1e-9)
    throw std::domain_error("simulate_core: max_depth must be a multiple of delta");
  if (!(s.supported > 0.0))
    throw std::domain_error("simulate_core: supported must be > 0 to generate 226Ra data");

  Dataset d;
  d.core_id = core_id.empty() ? scenario_name(s.id) : core_id;
  Rng rng(derive_seed(cfg.seed, 0xc04e));
  const double ra_sd = s.supported * cfg.reported_sd_factor;
  for (long i = 1; i <= n; ++i) {
    const double top = delta * static_cast<double>(i - 1);
    const double bottom = delta * static_cast<double>(i);
    Measurement m;
    char label[64];
    std::snprintf(label, sizeof(label), "%s-%02ld", d.core_id.c_str(), i);
    m.label = label;
    m.depth = bottom;
    m.thickness = delta;
    m.density = density_at(0.5 * (top + bottom));
    const double conc = true_total_concentration(s, top, bottom, decay);
    const PerturbedValue p = perturb_measurement(conc, cfg, rng);
    m.pb210 = p.measured;
    m.pb210_sd = p.reported_sd;
    m.ra226 = cfg.apply_lab_noise ? rng.normal(s.supported, ra_sd) : s.supported;
    m.ra226_sd = ra_sd;
    d.measurements.push_back(std::move(m));
  }
  validate_dataset(d);
  return d;
}

inline const std::vector<int>& information_percent_grid() {
  static const std::vector<int> grid = [] {
    std::vector<int> g;
    for (int p = 10; p <= 95; p += 5) g.push_back(p);
    g.push_back(100);
    return g;
  }();
  return grid;
}

inline bool valid_information_percent(int percent) {
  return percent == 100 || (percent >= 10 && percent <= 95 && percent % 5 == 0);
}

// Keep round(percent/100 * n) slabs chosen uniformly without replacement; the
// deepest slab is always kept (it anchors the equilibrium level).
inline Dataset subsample(const Dataset& d, int percent, Rng& rng) {
  validate_dataset(d);
  if (!valid_information_percent(percent))
    throw std::domain_error("subsample: percent must be one of 10,15,...,95,100");
  if (percent == 100) return d;
  const std::size_t n = d.measurements.size();
  auto keep = static_cast<std::size_t>(std::lround(percent / 100.0 * static_cast<double>(n)));
  if (keep < 1) keep = 1;
  if (keep > n) keep = n;

  // Partial Fisher-Yates over the n-1 shallower rows for the keep-1 free picks.
  std::vector<std::size_t> index(n - 1);
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  std::vector<std::size_t> chosen;
  for (std::size_t k = 0; k + 1 < keep; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(index.size() - k));
    std::swap(index[k], index[j]);
    chosen.push_back(index[k]);
  }
  chosen.push_back(n - 1);
  std::sort(chosen.begin(), chosen.end());

  Dataset out;
  out.core_id = d.core_id;
  out.sampling_year = d.sampling_year;
  for (std::size_t i : chosen) out.measurements.push_back(d.measurements[i]);
  return out;
}

}  // namespace pbchron
