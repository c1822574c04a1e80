#pragma once
// Classical constant-rate-of-supply dating. Pipeline: estimate the supported
// level from 226Ra, subtract it, integrate per-slab excess inventories
// (linear interpolation of areal activity density across unmeasured gaps),
// then apply t(x) = ln(A0/A(x))/lambda with first-order error propagation
// (CI variant) or Monte Carlo resampling of the inputs (R variant). The
// deepest slab anchors the equilibrium level: it contributes inventory but is
// never dated, and dating stops at the first non-positive excess above it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbchron/chronology.hpp"
#include "pbchron/dataset.hpp"
#include "pbchron/rng.hpp"
#include "pbchron/stats.hpp"
#include "pbchron/units.hpp"

namespace pbchron {

struct CrsOptions {
  bool include_supported_sd = true;  // fold the supported-mean SE into excess sd
  bool include_lambda_sd = false;    // fold decay-constant uncertainty into age sd
  bool use_covariance = false;       // subtract the shared-sum A0/Ax covariance term
  DecayConstants decay{};
};

struct SupportedEstimate {
  double value = 0.0;  // Bq/kg, mean of the 226Ra column
  double sd = 0.0;     // standard error of that mean
  bool degenerate = false;  // single measurement: sd is 0 and meaningless
};

inline SupportedEstimate estimate_supported(const Dataset& d) {
  if (d.measurements.empty()) throw std::domain_error("estimate_supported: empty dataset");
  std::vector<double> ra;
  ra.reserve(d.measurements.size());
  for (const auto& m : d.measurements) ra.push_back(m.ra226);
  SupportedEstimate e;
  e.value = mean(ra);
  e.sd = ra.size() > 1 ? standard_error(ra) : 0.0;
  e.degenerate = ra.size() == 1;
  return e;
}

struct ExcessEntry {
  double depth = 0.0;      // slab bottom, cm
  double top = 0.0;        // slab top, cm
  double thickness = 0.0;  // cm
  double density = 0.0;    // g/cm^3
  double excess = 0.0;     // Bq/kg, total minus supported (any sign)
  double sd = 0.0;         // Bq/kg
  bool marker = false;     // deepest slab: equilibrium anchor, not dated
  bool datable = false;    // non-marker and above any truncation
};

struct ExcessProfile {
  std::vector<ExcessEntry> entries;  // sorted by depth, one per slab
  SupportedEstimate supported;
  std::optional<double> truncation_depth;  // first non-positive excess above the marker
};

inline ExcessProfile excess_profile(const Dataset& d, const CrsOptions& opts = {}) {
  validate_dataset(d, /*require_positive_sd=*/false);
  ExcessProfile p;
  p.supported = estimate_supported(d);
  const double supported_var = opts.include_supported_sd ? p.supported.sd * p.supported.sd : 0.0;
  const std::size_t n = d.measurements.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Measurement& m = d.measurements[i];
    ExcessEntry e;
    e.depth = m.depth;
    e.top = m.top();
    e.thickness = m.thickness;
    e.density = m.density;
    e.excess = m.pb210 - p.supported.value;
    e.sd = std::sqrt(m.pb210_sd * m.pb210_sd + supported_var);
    e.marker = i + 1 == n;
    p.entries.push_back(e);
  }
  for (auto& e : p.entries) {
    if (e.marker) break;
    if (e.excess <= 0.0 && !p.truncation_depth) p.truncation_depth = e.depth;
    e.datable = !p.truncation_depth || e.depth < *p.truncation_depth;
  }
  const auto datable_count =
      std::count_if(p.entries.begin(), p.entries.end(), [](const ExcessEntry& e) { return e.datable; });
  if (datable_count == 0) throw std::domain_error("no datable excess above the equilibrium anchor");
  return p;
}

struct InventoryBoundary {
  double depth = 0.0;    // slab bottom, cm
  double a_below = 0.0;  // Bq/m^2 strictly below this depth
  double sd = 0.0;       // Bq/m^2
  bool datable = false;
};

struct InventoryProfile {
  double a0 = 0.0;     // Bq/m^2, complete excess inventory
  double a0_sd = 0.0;  // Bq/m^2
  std::vector<InventoryBoundary> boundaries;  // one per slab bottom, sorted by depth
  bool surface_extrapolated = false;  // shallowest slab did not reach the surface
  // Linear-propagation coefficients of each slab's excess in A0 and in each
  // boundary's A_below; kept for the optional covariance term.
  std::vector<double> a0_coef;
  std::vector<std::vector<double>> boundary_coef;
};

// Inventory integration. Every slab contributes its measured excess inventory
// (marker and below-truncation slabs included -- classical sums run over the
// whole profile); gaps between measured slabs are filled by linearly
// interpolating excess areal activity density (Bq/m^2 per cm) between the
// neighboring slab midpoints, and a gap above the shallowest slab is filled
// flat from that slab. Nothing is assumed below the deepest slab.
inline InventoryProfile inventory_profile(const ExcessProfile& p, const CrsOptions& opts = {}) {
  (void)opts;
  const auto& e = p.entries;
  const std::size_t n = e.size();
  // One datable slab plus the anchor below it is the minimal dateable core.
  if (n < 2) throw std::domain_error("inventory_profile: need at least 2 slabs");

  // Areal activity density at each slab midpoint, Bq/m^2 per cm, and its
  // coefficient on that slab's excess.
  auto dens_coef = [&](std::size_t j) { return e[j].density * kMassAreaFactor; };

  InventoryProfile inv;
  inv.boundaries.resize(n);
  inv.boundary_coef.assign(n, {});
  inv.a0_coef.assign(n, 0.0);

  std::vector<double> coef(n, 0.0);  // running coefficients of excess_j in the sum so far
  double acc = 0.0;

  auto snapshot_var = [&]() {
    double v = 0.0;
    for (std::size_t j = 0; j < n; ++j) v += coef[j] * coef[j] * e[j].sd * e[j].sd;
    return v;
  };

  // Walk from the deepest boundary upward; A_below(deepest bottom) = 0.
  for (std::size_t idx = n; idx-- > 0;) {
    inv.boundaries[idx].depth = e[idx].depth;
    inv.boundaries[idx].datable = e[idx].datable;
    inv.boundaries[idx].a_below = acc;
    inv.boundaries[idx].sd = std::sqrt(snapshot_var());
    inv.boundary_coef[idx] = coef;

    // Moving above boundary idx: pick up slab idx and the gap above it.
    coef[idx] += dens_coef(idx) * e[idx].thickness;
    acc += e[idx].excess * dens_coef(idx) * e[idx].thickness;
    const double gap_top = idx == 0 ? 0.0 : e[idx - 1].depth;
    const double gap = e[idx].top - gap_top;
    if (gap > 1e-9) {
      const double center = 0.5 * (gap_top + e[idx].top);
      if (idx == 0) {
        // Surface gap: extend the shallowest slab's density flat.
        coef[0] += dens_coef(0) * gap;
        acc += e[0].excess * dens_coef(0) * gap;
        inv.surface_extrapolated = true;
      } else {
        const double m_lo = 0.5 * (e[idx - 1].top + e[idx - 1].depth);
        const double m_hi = 0.5 * (e[idx].top + e[idx].depth);
        const double c = (center - m_lo) / (m_hi - m_lo);
        coef[idx - 1] += dens_coef(idx - 1) * gap * (1.0 - c);
        coef[idx] += dens_coef(idx) * gap * c;
        acc += (e[idx - 1].excess * dens_coef(idx - 1) * (1.0 - c) + e[idx].excess * dens_coef(idx) * c) * gap;
      }
    }
  }
  inv.a0 = acc;
  inv.a0_sd = std::sqrt(snapshot_var());
  inv.a0_coef = coef;
  return inv;
}

inline Chronology ci_crs_chronology(const Dataset& d, const CrsOptions& opts = {}) {
  const ExcessProfile prof = excess_profile(d, opts);
  const InventoryProfile inv = inventory_profile(prof, opts);
  Chronology c;
  c.method = Method::ci_crs;
  if (prof.supported.degenerate)
    c.warnings.push_back("supported level from a single 226Ra value; its uncertainty is unknown");
  if (inv.surface_extrapolated)
    c.warnings.push_back("no measurement at the surface; inventory extrapolated flat above the shallowest slab");
  if (prof.truncation_depth)
    c.warnings.push_back("excess non-positive at " + detail::fmt(*prof.truncation_depth) +
                         " cm; dating truncated there");
  if (!(inv.a0 > 0.0)) throw std::domain_error("total excess inventory is non-positive");
  const double lambda = opts.decay.lambda;
  const std::size_t n = inv.boundaries.size();
  for (std::size_t i = 0; i < n; ++i) {
    const InventoryBoundary& b = inv.boundaries[i];
    if (!b.datable) continue;
    if (!(b.a_below > 0.0)) {
      c.warnings.push_back("inventory non-positive below " + detail::fmt(b.depth) +
                           " cm; chronology terminated at the previous boundary");
      break;
    }
    const double age = std::log(inv.a0 / b.a_below) / lambda;
    const double rel0 = inv.a0_sd / inv.a0;
    const double relx = b.sd / b.a_below;
    double var = rel0 * rel0 + relx * relx;
    if (opts.use_covariance) {
      double cov = 0.0;
      for (std::size_t j = 0; j < prof.entries.size(); ++j)
        cov += inv.a0_coef[j] * inv.boundary_coef[i][j] * prof.entries[j].sd * prof.entries[j].sd;
      var -= 2.0 * cov / (inv.a0 * b.a_below);
      if (var < 0.0) var = 0.0;
    }
    double sd = std::sqrt(var) / lambda;
    if (opts.include_lambda_sd) {
      const double dl = age * opts.decay.lambda_sd / lambda;
      sd = std::sqrt(sd * sd + dl * dl);
    }
    AgeEstimate est;
    est.depth = b.depth;
    est.age_mean = age;
    est.sd_proxy = sd;
    est.lower95 = age - 1.96 * sd;
    est.upper95 = age + 1.96 * sd;
    c.estimates.push_back(est);
  }
  if (c.estimates.empty()) throw std::domain_error("no boundary could be dated");
  return c;
}

inline Chronology r_crs_chronology(const Dataset& d, int n_draws = 10000, std::uint64_t seed = 0,
                                   const CrsOptions& opts = {}) {
  if (n_draws < 2) throw std::domain_error("r_crs_chronology: draws must be >= 2");
  validate_dataset(d, /*require_positive_sd=*/false);
  const std::size_t n = d.measurements.size();
  if (n < 2) throw std::domain_error("r_crs_chronology: need at least 2 slabs");

  // Candidate dated depths: every slab bottom except the equilibrium anchor.
  std::vector<double> depths;
  for (std::size_t i = 0; i + 1 < n; ++i) depths.push_back(d.measurements[i].depth);
  std::vector<std::vector<double>> ages(depths.size());
  for (auto& a : ages) a.reserve(static_cast<std::size_t>(n_draws));

  int failed_draws = 0;
  Dataset draw = d;
  for (int k = 0; k < n_draws; ++k) {
    Rng rng(derive_seed(seed, 0xd2a3, static_cast<std::uint64_t>(k)));
    for (std::size_t i = 0; i < n; ++i) {
      draw.measurements[i].pb210 = rng.normal(d.measurements[i].pb210, d.measurements[i].pb210_sd);
      draw.measurements[i].ra226 = rng.normal(d.measurements[i].ra226, d.measurements[i].ra226_sd);
    }
    Chronology ci;
    try {
      ci = ci_crs_chronology(draw, opts);
    } catch (const std::exception&) {
      ++failed_draws;
      continue;
    }
    std::size_t j = 0;
    for (const auto& est : ci.estimates) {
      while (j < depths.size() && depths[j] < est.depth - 1e-9) ++j;
      if (j < depths.size() && std::abs(depths[j] - est.depth) <= 1e-9) ages[j].push_back(est.age_mean);
    }
  }

  Chronology c;
  c.method = Method::r_crs;
  if (failed_draws > 0)
    c.warnings.push_back(std::to_string(failed_draws) + " of " + std::to_string(n_draws) +
                         " draws produced no datable profile");
  for (std::size_t j = 0; j < depths.size(); ++j) {
    AgeEstimate est;
    est.depth = depths[j];
    est.mc_excluded = n_draws - static_cast<int>(ages[j].size());
    if (2 * est.mc_excluded > n_draws || ages[j].empty()) {
      est.dated = false;
      est.age_mean = est.sd_proxy = est.lower95 = est.upper95 = std::nan("");
      c.estimates.push_back(est);
      continue;
    }
    std::vector<double> v = ages[j];
    std::sort(v.begin(), v.end());
    const bool degenerate = v.front() == v.back();
    est.age_mean = degenerate ? v.front() : mean(v);
    est.sd_proxy = degenerate ? 0.0 : sample_sd(v);
    est.lower95 = quantile(v, 0.025);
    est.upper95 = quantile(v, 0.975);
    c.estimates.push_back(est);
  }
  const bool any_dated =
      std::any_of(c.estimates.begin(), c.estimates.end(), [](const AgeEstimate& e) { return e.dated; });
  if (!any_dated) throw std::domain_error("no depth was datable in a majority of draws");
  int undated = 0;
  for (const auto& e : c.estimates)
    if (!e.dated) ++undated;
  if (undated > 0)
    c.warnings.push_back(std::to_string(undated) + " depth(s) undated (truncated in over half the draws)");
  return c;
}

}  // namespace pbchron
