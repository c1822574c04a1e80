#pragma once
// Bayesian 210Pb dating. The age-depth model is piecewise linear over 1-cm
// sections with an autoregressive gamma prior on section slopes:
//   alphas[0] = g_1,  alphas[j] = w*alphas[j-1] + (1-w)*g_{j+1},  g ~ Gamma.
// A single supply rate phi and supported level s are inferred jointly from
// the total-210Pb forward model (areal form) and the 226Ra measurements.
// Sampling is Metropolis-within-Gibbs random walk on unconstrained
// coordinates (ln g, logit w, ln phi, ln s) with burn-in-only scale
// adaptation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbchron/chronology.hpp"
#include "pbchron/dataset.hpp"
#include "pbchron/rng.hpp"
#include "pbchron/stats.hpp"
#include "pbchron/units.hpp"

namespace pbchron {

inline constexpr double kSectionThickness = 1.0;  // cm
inline constexpr int kSectionCount = 30;          // sections over [0, 30] cm

struct PlumParams {
  std::vector<double> alphas;  // yr/cm per section, all > 0
  double w = 0.5;              // memory, in (0,1)
  double phi = 50.0;           // Bq/(m^2 yr)
  double supported = 10.0;     // Bq/kg
};

struct PlumPriors {
  double acc_shape = 1.5;
  double acc_mean = 10.0;     // yr/cm
  double mem_mean = 0.5;
  double mem_strength = 10.0;
  double phi_shape = 2.0;
  double phi_mean = 50.0;     // Bq/(m^2 yr)
  double s_shape = 2.0;
  double s_mean = 0.0;        // Bq/kg; <=0 means "take the dataset's mean 226Ra"

  PlumPriors resolved_for(const Dataset& d) const {
    PlumPriors p = *this;
    if (p.s_mean <= 0.0) {
      if (d.measurements.empty())
        throw std::domain_error("plum priors: s_mean must be set explicitly without data");
      double s = 0.0;
      for (const auto& m : d.measurements) s += m.ra226;
      p.s_mean = s / static_cast<double>(d.measurements.size());
    }
    return p;
  }
};

inline void validate_priors(const PlumPriors& p) {
  if (!(p.acc_shape > 0.0 && p.acc_mean > 0.0)) throw ValidationError("plum priors: accumulation shape/mean must be > 0");
  if (!(p.mem_mean > 0.0 && p.mem_mean < 1.0)) throw ValidationError("plum priors: mem_mean must be in (0,1)");
  if (!(p.mem_strength > 0.0)) throw ValidationError("plum priors: mem_strength must be > 0");
  if (!(p.phi_shape > 0.0 && p.phi_mean > 0.0)) throw ValidationError("plum priors: phi shape/mean must be > 0");
  if (!(p.s_shape > 0.0)) throw ValidationError("plum priors: s_shape must be > 0");
}

struct McmcConfig {
  int iterations = 25000;  // total sweeps, burn-in included
  int burn_in = 5000;
  int thinning = 10;
  std::uint64_t seed = 0;
  double ess_floor = 100.0;  // warn when any reported block ESS falls below
};

inline void validate_mcmc(const McmcConfig& c) {
  if (!(c.iterations > c.burn_in && c.burn_in >= 0)) throw ValidationError("mcmc: need iterations > burn_in >= 0");
  if (!(c.thinning >= 1)) throw ValidationError("mcmc: thinning must be >= 1");
}

// Piecewise-linear age at depth; t(0) = 0.
inline double age_at(const PlumParams& p, double depth) {
  const double max_depth = static_cast<double>(p.alphas.size()) * kSectionThickness;
  if (!(depth >= 0.0 && depth <= max_depth + 1e-9))
    throw std::domain_error("age_at: depth outside the section grid");
  double t = 0.0;
  std::size_t j = 0;
  double remaining = depth;
  while (j < p.alphas.size() && remaining > kSectionThickness) {
    t += p.alphas[j] * kSectionThickness;
    remaining -= kSectionThickness;
    ++j;
  }
  if (j < p.alphas.size()) t += p.alphas[j] * remaining;
  return t;
}

// Innovations g implied by a slope vector under the AR(1) construction.
inline std::vector<double> plum_innovations(const PlumParams& p) {
  std::vector<double> g(p.alphas.size());
  if (p.alphas.empty()) return g;
  g[0] = p.alphas[0];
  for (std::size_t j = 1; j < p.alphas.size(); ++j)
    g[j] = (p.alphas[j] - p.w * p.alphas[j - 1]) / (1.0 - p.w);
  return g;
}

// Log prior density of (alphas, w, phi, supported) in slope coordinates.
// The AR(1) map (g, w) -> (alphas, w) has Jacobian (1-w)^(K-1), hence the
// extra -(K-1)*log(1-w) term next to the per-innovation gamma densities.
inline double log_prior(const PlumParams& p, const PlumPriors& priors) {
  validate_priors(priors);
  if (!(priors.s_mean > 0.0)) throw std::domain_error("log_prior: s_mean must be resolved (> 0)");
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (p.alphas.empty()) return neg_inf;
  if (!(p.w > 0.0 && p.w < 1.0)) return neg_inf;
  if (!(p.phi > 0.0) || !(p.supported > 0.0)) return neg_inf;
  for (double a : p.alphas)
    if (!(a > 0.0)) return neg_inf;
  double lp = 0.0;
  const auto g = plum_innovations(p);
  for (double gj : g) {
    if (!(gj > 0.0)) return neg_inf;
    lp += log_gamma_pdf(gj, priors.acc_shape, priors.acc_mean);
  }
  lp -= static_cast<double>(p.alphas.size() - 1) * std::log1p(-p.w);
  lp += log_beta_pdf(p.w, priors.mem_strength * priors.mem_mean,
                     priors.mem_strength * (1.0 - priors.mem_mean));
  lp += log_gamma_pdf(p.phi, priors.phi_shape, priors.phi_mean);
  lp += log_gamma_pdf(p.supported, priors.s_shape, priors.s_mean);
  return lp;
}

namespace detail {

// Per-measurement constants of the areal-form likelihood.
struct PreparedSlab {
  double top = 0.0;
  double bottom = 0.0;
  double y_areal = 0.0;     // observed activity * 10*rho*delta, Bq/m^2
  double scale = 0.0;       // 10*rho*delta
  double sd_areal = 0.0;    // reported sd * scale
  double log_norm = 0.0;    // -log(sd_areal * sqrt(2*pi))
};

struct PreparedRa {
  double value = 0.0;
  double sd = 0.0;
  double log_norm = 0.0;
};

struct PreparedData {
  std::vector<PreparedSlab> slabs;
  std::vector<PreparedRa> ra;
};

inline PreparedData prepare_data(const Dataset& d) {
  PreparedData out;
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (const auto& m : d.measurements) {
    PreparedSlab s;
    s.top = m.top();
    s.bottom = m.depth;
    s.scale = kMassAreaFactor * m.density * m.thickness;
    s.y_areal = m.pb210 * s.scale;
    s.sd_areal = m.pb210_sd * s.scale;
    if (!(s.sd_areal > 0.0)) throw std::domain_error("plum likelihood: pb210_sd must be > 0");
    s.log_norm = -std::log(s.sd_areal) - half_log_2pi;
    out.slabs.push_back(s);
    PreparedRa r;
    r.value = m.ra226;
    r.sd = m.ra226_sd;
    if (!(r.sd > 0.0)) throw std::domain_error("plum likelihood: ra226_sd must be > 0");
    r.log_norm = -std::log(r.sd) - half_log_2pi;
    out.ra.push_back(r);
  }
  return out;
}

inline double log_likelihood_prepared(const PlumParams& p, const PreparedData& data,
                                      const DecayConstants& decay) {
  double ll = 0.0;
  for (const auto& s : data.slabs) {
    const double mu = s.scale * p.supported +
                      (p.phi / decay.lambda) * (std::exp(-decay.lambda * age_at(p, s.top)) -
                                                std::exp(-decay.lambda * age_at(p, s.bottom)));
    const double z = (s.y_areal - mu) / s.sd_areal;
    ll += s.log_norm - 0.5 * z * z;
  }
  for (const auto& r : data.ra) {
    const double z = (r.value - p.supported) / r.sd;
    ll += r.log_norm - 0.5 * z * z;
  }
  return ll;
}

}  // namespace detail

// Gaussian log-likelihood of the dataset under the forward model, in areal
// units: Y_i = y_i*10*rho*delta with mean 10*rho*delta*s + (phi/lambda) *
// (exp(-lambda t(top)) - exp(-lambda t(bottom))) and sd sigma_i*10*rho*delta,
// plus Gaussian 226Ra terms centered on the supported level. phi = 0 is
// admitted here (zero-excess boundary); the prior excludes it.
inline double log_likelihood(const PlumParams& p, const Dataset& d,
                             const DecayConstants& decay = {}) {
  if (!(p.phi >= 0.0) || !(p.supported > 0.0)) throw std::domain_error("log_likelihood: invalid params");
  for (double a : p.alphas)
    if (!(a > 0.0)) throw std::domain_error("log_likelihood: alphas must be > 0");
  return detail::log_likelihood_prepared(p, detail::prepare_data(d), decay);
}

struct PlumGradient {
  double dphi = 0.0;
  double dsupported = 0.0;
  std::vector<double> dalphas;
};

// Analytic gradient of log_likelihood in (phi, supported, alphas). The
// memory w does not enter the likelihood. Overlap of section k = [k, k+1)
// with [0, x] gives dt(x)/dalpha_k.
inline PlumGradient log_likelihood_gradient(const PlumParams& p, const Dataset& d,
                                            const DecayConstants& decay = {}) {
  const auto data = detail::prepare_data(d);
  PlumGradient g;
  g.dalphas.assign(p.alphas.size(), 0.0);
  const double lambda = decay.lambda;
  auto overlap = [&](double x, std::size_t k) {
    const double lo = static_cast<double>(k) * kSectionThickness;
    return std::max(0.0, std::min(x, lo + kSectionThickness) - lo);
  };
  for (const auto& s : data.slabs) {
    const double e_top = std::exp(-lambda * age_at(p, s.top));
    const double e_bot = std::exp(-lambda * age_at(p, s.bottom));
    const double mu = s.scale * p.supported + (p.phi / lambda) * (e_top - e_bot);
    const double r = (s.y_areal - mu) / (s.sd_areal * s.sd_areal);
    g.dphi += r * (e_top - e_bot) / lambda;
    g.dsupported += r * s.scale;
    for (std::size_t k = 0; k < p.alphas.size(); ++k) {
      const double ov_top = overlap(s.top, k);
      const double ov_bot = overlap(s.bottom, k);
      if (ov_top == 0.0 && ov_bot == 0.0) continue;
      g.dalphas[k] += r * p.phi * (e_bot * ov_bot - e_top * ov_top);
    }
  }
  for (const auto& r : data.ra) g.dsupported += (r.value - p.supported) / (r.sd * r.sd);
  return g;
}

struct EssReport {
  double phi = 0.0;
  double supported = 0.0;
  double w = 0.0;
  double mean_alpha = 0.0;
};

struct PosteriorDraws {
  std::vector<PlumParams> draws;
  std::vector<double> log_posterior;
  double acceptance_rate = 0.0;         // overall, post burn-in
  double acceptance_min = 0.0;          // worst single coordinate, post burn-in
  double acceptance_max = 0.0;
  EssReport ess;
  std::vector<std::string> warnings;
};

namespace detail {

// Sampler state in unconstrained coordinates:
//   u[0..K-1] = ln g, u[K] = logit w, u[K+1] = ln phi, u[K+2] = ln s.
struct PlumTarget {
  const PlumPriors* priors;
  const PreparedData* data;
  DecayConstants decay;
  int K = kSectionCount;
  bool use_likelihood = true;

  // Precomputed gamma/beta normalization constants.
  double acc_scale, acc_norm, phi_scale, phi_norm, s_scale, s_norm;
  double beta_a, beta_b, beta_norm;

  explicit PlumTarget(const PlumPriors& pr) : priors(&pr) {
    acc_scale = pr.acc_mean / pr.acc_shape;
    acc_norm = -std::lgamma(pr.acc_shape) - pr.acc_shape * std::log(acc_scale);
    phi_scale = pr.phi_mean / pr.phi_shape;
    phi_norm = -std::lgamma(pr.phi_shape) - pr.phi_shape * std::log(phi_scale);
    s_scale = pr.s_mean / pr.s_shape;
    s_norm = -std::lgamma(pr.s_shape) - pr.s_shape * std::log(s_scale);
    beta_a = pr.mem_strength * pr.mem_mean;
    beta_b = pr.mem_strength * (1.0 - pr.mem_mean);
    beta_norm = std::lgamma(beta_a + beta_b) - std::lgamma(beta_a) - std::lgamma(beta_b);
  }

  PlumParams unpack(const std::vector<double>& u) const {
    PlumParams p;
    p.alphas.resize(static_cast<std::size_t>(K));
    p.w = 1.0 / (1.0 + std::exp(-u[static_cast<std::size_t>(K)]));
    p.phi = std::exp(u[static_cast<std::size_t>(K) + 1]);
    p.supported = std::exp(u[static_cast<std::size_t>(K) + 2]);
    double prev = 0.0;
    for (int j = 0; j < K; ++j) {
      const double gj = std::exp(u[static_cast<std::size_t>(j)]);
      prev = j == 0 ? gj : p.w * prev + (1.0 - p.w) * gj;
      p.alphas[static_cast<std::size_t>(j)] = prev;
    }
    return p;
  }

  // Log posterior density in u-space (prior x likelihood x transform
  // Jacobians); the state caches params to avoid re-unpacking.
  double operator()(const std::vector<double>& u, PlumParams& scratch) const {
    scratch = unpack(u);
    double lp = 0.0;
    for (int j = 0; j < K; ++j) {
      const double uj = u[static_cast<std::size_t>(j)];
      const double gj = std::exp(uj);
      lp += priors->acc_shape * uj - gj / acc_scale + acc_norm;  // gamma pdf + ln g Jacobian
    }
    const double w = scratch.w;
    lp += beta_norm + beta_a * std::log(w) + beta_b * std::log1p(-w);  // beta pdf + logit Jacobian
    const double u_phi = u[static_cast<std::size_t>(K) + 1];
    lp += phi_shape_term(u_phi, scratch.phi);
    const double u_s = u[static_cast<std::size_t>(K) + 2];
    lp += s_shape_term(u_s, scratch.supported);
    if (use_likelihood) lp += log_likelihood_prepared(scratch, *data, decay);
    return lp;
  }

  double phi_shape_term(double u, double phi) const { return priors->phi_shape * u - phi / phi_scale + phi_norm; }
  double s_shape_term(double u, double s) const { return priors->s_shape * u - s / s_scale + s_norm; }
};

}  // namespace detail

inline PosteriorDraws sample_posterior(const Dataset& d, const PlumPriors& priors_in,
                                       const McmcConfig& cfg, const DecayConstants& decay = {}) {
  validate_mcmc(cfg);
  const PlumPriors priors = priors_in.resolved_for(d);
  validate_priors(priors);
  const bool have_data = !d.measurements.empty();
  detail::PreparedData data;
  if (have_data) {
    validate_dataset(d);
    for (const auto& m : d.measurements)
      if (m.depth > kSectionCount * kSectionThickness + 1e-9)
        throw std::domain_error("sample_posterior: dataset deeper than the section grid");
    data = detail::prepare_data(d);
  }

  detail::PlumTarget target(priors);
  target.data = &data;
  target.decay = decay;
  target.use_likelihood = have_data;

  const std::size_t dim = static_cast<std::size_t>(target.K) + 3;
  std::vector<double> u(dim);
  // Deterministic start at the prior means.
  for (int j = 0; j < target.K; ++j) u[static_cast<std::size_t>(j)] = std::log(priors.acc_mean);
  u[static_cast<std::size_t>(target.K)] = std::log(priors.mem_mean / (1.0 - priors.mem_mean));
  u[static_cast<std::size_t>(target.K) + 1] = std::log(priors.phi_mean);
  u[static_cast<std::size_t>(target.K) + 2] = std::log(priors.s_mean);

  PlumParams scratch;
  double current = target(u, scratch);

  Rng rng(derive_seed(cfg.seed, 0x91cb));
  std::vector<double> scale(dim, 0.3);
  std::vector<long> batch_accepts(dim, 0);
  std::vector<long> accepts(dim, 0), proposals(dim, 0);
  constexpr int kAdaptBatch = 50;

  PosteriorDraws out;
  const int retained_hint = (cfg.iterations - cfg.burn_in) / cfg.thinning;
  out.draws.reserve(static_cast<std::size_t>(std::max(retained_hint, 0)));

  for (int sweep = 1; sweep <= cfg.iterations; ++sweep) {
    const bool adapting = sweep <= cfg.burn_in;
    for (std::size_t c = 0; c < dim; ++c) {
      const double old = u[c];
      u[c] = old + scale[c] * rng.normal(0.0, 1.0);
      const double proposed = target(u, scratch);
      const double log_u = std::log(std::max(rng.uniform(), 1e-300));
      if (log_u < proposed - current) {
        current = proposed;
        if (adapting) ++batch_accepts[c];
        else ++accepts[c];
      } else {
        u[c] = old;
      }
      if (!adapting) ++proposals[c];
    }
    if (adapting && sweep % kAdaptBatch == 0) {
      for (std::size_t c = 0; c < dim; ++c) {
        const double rate = static_cast<double>(batch_accepts[c]) / kAdaptBatch;
        const double step = std::clamp(rate - 0.35, -0.25, 0.25);
        scale[c] *= std::exp(step);
        batch_accepts[c] = 0;
      }
    }
    if (!adapting && (sweep - cfg.burn_in) % cfg.thinning == 0) {
      out.draws.push_back(target.unpack(u));
      out.log_posterior.push_back(current);
    }
  }

  long total_acc = 0, total_prop = 0;
  double acc_min = 1.0, acc_max = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    total_acc += accepts[c];
    total_prop += proposals[c];
    if (proposals[c] > 0) {
      const double r = static_cast<double>(accepts[c]) / static_cast<double>(proposals[c]);
      acc_min = std::min(acc_min, r);
      acc_max = std::max(acc_max, r);
    }
  }
  out.acceptance_rate = total_prop > 0 ? static_cast<double>(total_acc) / static_cast<double>(total_prop) : 0.0;
  out.acceptance_min = acc_min;
  out.acceptance_max = acc_max;

  const std::size_t nd = out.draws.size();
  std::vector<double> phi_s(nd), s_s(nd), w_s(nd), a_s(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    phi_s[i] = out.draws[i].phi;
    s_s[i] = out.draws[i].supported;
    w_s[i] = out.draws[i].w;
    a_s[i] = mean(out.draws[i].alphas);
  }
  out.ess.phi = effective_sample_size(phi_s);
  out.ess.supported = effective_sample_size(s_s);
  out.ess.w = effective_sample_size(w_s);
  out.ess.mean_alpha = effective_sample_size(a_s);
  const double worst = std::min(std::min(out.ess.phi, out.ess.supported),
                                std::min(out.ess.w, out.ess.mean_alpha));
  if (worst < cfg.ess_floor)
    out.warnings.push_back("effective sample size " + detail::fmt(worst) + " below floor " +
                           detail::fmt(cfg.ess_floor) + "; treat intervals with caution");
  return out;
}

// Posterior age summaries at the requested depths: mean, central 95%
// interval, and interval-width/4 as the sd proxy.
inline Chronology summarize_chronology(const PosteriorDraws& draws, std::vector<double> depths) {
  if (draws.draws.size() < 100) throw std::domain_error("summarize_chronology: need at least 100 draws");
  std::sort(depths.begin(), depths.end());
  Chronology c;
  c.method = Method::plum;
  c.warnings = draws.warnings;
  std::vector<double> ages(draws.draws.size());
  for (double depth : depths) {
    for (std::size_t i = 0; i < draws.draws.size(); ++i) ages[i] = age_at(draws.draws[i], depth);
    AgeEstimate e;
    e.depth = depth;
    e.age_mean = ages.front() == ages.back() && std::equal(ages.begin() + 1, ages.end(), ages.begin())
                     ? ages.front()
                     : mean(ages);
    e.lower95 = quantile(ages, 0.025);
    e.upper95 = quantile(ages, 0.975);
    e.sd_proxy = (e.upper95 - e.lower95) / 4.0;
    c.estimates.push_back(e);
  }
  return c;
}

}  // namespace pbchron
