// Model Reference Adaptive Search over the continuous policy space.
//
// Each iteration draws L candidates from independent per-state Gaussians,
// scores them, keeps the elites above a monotonically nondecreasing threshold
// and refits the Gaussians with exponentially tilted weights e^{(k-1)Phi}.
// Candidates falling outside (0,1) on any component score -inf and can never
// become elites, so the search stays inside the feasible policy space.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "specrec/mdp.hpp"
#include "specrec/parallel.hpp"
#include "specrec/rng.hpp"

namespace specrec {

// Per-state sampling distribution N(mu_R, sigma_R^2).
struct GaussianPolicyModel {
  std::vector<double> mu;
  std::vector<double> sigma;

  double max_sigma() const {
    double m = 0.0;
    for (double s : sigma) m = std::max(m, s);
    return m;
  }
};

struct MrasConfig {
  int num_candidates = 500;   // L
  double elite_ratio = 0.1;   // rho
  double stop_sigma = 1e-3;   // xi
  int max_iterations = 200;
  double mu_init = 0.5;
  double sigma_init = 0.5;

  void validate() const {
    if (num_candidates < 2) throw std::invalid_argument("MrasConfig: L must be >= 2");
    if (!(elite_ratio > 0.0 && elite_ratio < 1.0))
      throw std::invalid_argument("MrasConfig: elite ratio must lie in (0,1)");
    if (!(stop_sigma > 0.0)) throw std::invalid_argument("MrasConfig: stop_sigma must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("MrasConfig: max_iterations must be >= 1");
  }
};

struct MrasIterationRecord {
  int iteration = 0;
  double gamma = 0.0;
  double best_phi = kNegInf;
  std::vector<double> mu;
  std::vector<double> sigma;
  long feasible_count = 0;
};

struct MrasTrace {
  std::vector<MrasIterationRecord> iterations;
  bool converged = false;
  double final_max_sigma = std::numeric_limits<double>::infinity();
  double phi_returned = kNegInf;

  long iterations_used() const { return static_cast<long>(iterations.size()); }
};

struct ConvergenceReport {
  bool converged = false;
  long iterations = 0;
  double final_max_sigma = 0.0;
  double phi_returned = kNegInf;
  std::vector<double> best_phi_series;
};

// During the update sigma is floored just above zero so an exact collapse
// cannot precede the stop check.
inline constexpr double kSigmaFloor = 1e-12;

inline std::vector<std::vector<double>> sample_gaussian_vectors(const GaussianPolicyModel& gm,
                                                                int count, RandomStream& rng) {
  if (count < 1) throw std::invalid_argument("sample_gaussian_vectors: count must be >= 1");
  std::vector<std::vector<double>> out(count);
  const std::size_t dim = gm.mu.size();
  for (int i = 0; i < count; ++i) {
    out[i].resize(dim);
    for (std::size_t d = 0; d < dim; ++d) out[i][d] = rng.normal(gm.mu[d], gm.sigma[d]);
  }
  return out;
}

inline std::vector<Policy> sample_policies(const GaussianPolicyModel& gm, int count,
                                           RandomStream& rng) {
  auto raw = sample_gaussian_vectors(gm, count, rng);
  std::vector<Policy> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i].p_rec = std::move(raw[i]);
  return out;
}

// gamma_k = max(scores[ceil((1-rho)L)], gamma_prev), 1-based into the
// ascending order. All-infeasible batches are an error; callers resample.
inline double elite_threshold(std::span<const double> scores_ascending, double rho,
                              double gamma_prev) {
  const long l = static_cast<long>(scores_ascending.size());
  if (l == 0) throw std::invalid_argument("elite_threshold: empty score list");
  if (scores_ascending.back() == kNegInf)
    throw std::runtime_error("elite_threshold: no feasible candidate in batch");
  long idx = static_cast<long>(std::ceil((1.0 - rho) * static_cast<double>(l) - 1e-9));
  idx = std::clamp(idx, 1L, l);
  return std::max(scores_ascending[idx - 1], gamma_prev);
}

struct ScoredSample {
  std::vector<double> x;
  double phi = kNegInf;
};

// Refit the Gaussians from the elite set with weights w_i = e^{(k-1)Phi_i},
// computed in log space with max subtraction. The variance is taken around
// the freshly updated mean.
inline GaussianPolicyModel update_params(std::span<const ScoredSample> elites, int k) {
  if (elites.empty()) throw std::invalid_argument("update_params: empty elite set");
  const std::size_t dim = elites.front().x.size();
  double log_max = kNegInf;
  for (const auto& e : elites) {
    if (!std::isfinite(e.phi)) throw std::invalid_argument("update_params: non-finite elite score");
    log_max = std::max(log_max, (k - 1) * e.phi);
  }
  std::vector<double> w(elites.size());
  double total = 0.0;
  for (std::size_t i = 0; i < elites.size(); ++i) {
    w[i] = std::exp((k - 1) * elites[i].phi - log_max);
    total += w[i];
  }

  GaussianPolicyModel gm;
  gm.mu.assign(dim, 0.0);
  gm.sigma.assign(dim, 0.0);
  for (std::size_t i = 0; i < elites.size(); ++i)
    for (std::size_t d = 0; d < dim; ++d) gm.mu[d] += w[i] * elites[i].x[d];
  for (std::size_t d = 0; d < dim; ++d) gm.mu[d] /= total;
  for (std::size_t i = 0; i < elites.size(); ++i)
    for (std::size_t d = 0; d < dim; ++d) {
      const double dev = elites[i].x[d] - gm.mu[d];
      gm.sigma[d] += w[i] * dev * dev;
    }
  for (std::size_t d = 0; d < dim; ++d)
    gm.sigma[d] = std::max(std::sqrt(gm.sigma[d] / total), kSigmaFloor);
  return gm;
}

struct MrasRunResult {
  std::vector<double> best_x;
  MrasTrace trace;
};

// Generic MRAS loop over dim-dimensional parameter vectors. The objective is
// a pure function of (x, ordinal); the ordinal is a globally increasing
// candidate counter used by stochastic objectives to derive private streams.
// Candidate scoring fans out over the thread budget; the reduction order is
// fixed by candidate index.
template <typename Objective>
MrasRunResult mras_optimize(int dim, Objective&& phi_fn, const MrasConfig& cfg,
                            RandomStream& rng) {
  cfg.validate();
  GaussianPolicyModel gm;
  gm.mu.assign(dim, cfg.mu_init);
  gm.sigma.assign(dim, cfg.sigma_init);

  double gamma = 0.0;
  std::vector<double> best_x;
  double best_phi = kNegInf;
  long ordinal = 0;

  MrasRunResult run;
  const int threads = thread_budget();
  for (int k = 1; k <= cfg.max_iterations; ++k) {
    std::vector<std::vector<double>> candidates;
    std::vector<double> scores;
    long feasible = 0;
    int attempts = 0;
    for (;;) {
      candidates = sample_gaussian_vectors(gm, cfg.num_candidates, rng);
      scores.assign(candidates.size(), kNegInf);
      const long base_ordinal = ordinal;
      parallel_for(
          static_cast<long>(candidates.size()),
          [&](long i) { scores[i] = phi_fn(candidates[i], base_ordinal + i); }, threads);
      ordinal += static_cast<long>(candidates.size());
      feasible = std::count_if(scores.begin(), scores.end(),
                               [](double s) { return std::isfinite(s); });
      if (feasible > 0) break;
      if (++attempts >= 5)
        throw std::runtime_error("mras_optimize: no feasible candidate after 5 resamples");
    }

    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    gamma = elite_threshold(sorted, cfg.elite_ratio, gamma);

    std::vector<ScoredSample> elites;
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (std::isfinite(scores[i]) && scores[i] >= gamma)
        elites.push_back({candidates[i], scores[i]});
    if (elites.empty()) {
      // Threshold carried over from earlier iterations can exceed the whole
      // batch; fall back to the batch's own top elite fraction.
      std::vector<std::size_t> order(candidates.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
      const long want = std::max<long>(
          1, static_cast<long>(std::ceil(cfg.elite_ratio * cfg.num_candidates)));
      for (std::size_t i = 0; i < order.size() && static_cast<long>(elites.size()) < want; ++i)
        if (std::isfinite(scores[order[i]])) elites.push_back({candidates[order[i]], scores[order[i]]});
    }

    double batch_best = kNegInf;
    std::size_t batch_best_idx = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] > batch_best) {
        batch_best = scores[i];
        batch_best_idx = i;
      }
    if (batch_best > best_phi) {
      best_phi = batch_best;
      best_x = candidates[batch_best_idx];
    }

    gm = update_params(elites, k);

    MrasIterationRecord rec;
    rec.iteration = k;
    rec.gamma = gamma;
    rec.best_phi = batch_best;
    rec.mu = gm.mu;
    rec.sigma = gm.sigma;
    rec.feasible_count = feasible;
    run.trace.iterations.push_back(std::move(rec));

    if (gm.max_sigma() < cfg.stop_sigma) {
      run.trace.converged = true;
      break;
    }
  }
  run.trace.final_max_sigma = gm.max_sigma();

  if (run.trace.converged) {
    run.best_x = gm.mu;
    for (double& v : run.best_x) v = std::clamp(v, kActionFloor, 1.0 - kActionFloor);
  } else {
    run.best_x = best_x;
  }
  run.trace.phi_returned = phi_fn(run.best_x, ordinal);
  return run;
}

// MRAS-based solver for the adaptive-recommendation MDP. Returns the final
// Gaussian means (clamped into the action space) as the policy once
// max_R sigma_R drops below xi.
inline std::pair<Policy, MrasTrace> mras_solve(const MdpModel& model, const MrasConfig& cfg,
                                               RandomStream& rng,
                                               TransitionFormula formula = TransitionFormula::Exact) {
  const int dim = model.num_states();
  auto objective = [&model, formula](const std::vector<double>& x, long /*ordinal*/) {
    Policy pol;
    pol.p_rec = x;
    return policy_throughput(model, pol, formula);
  };
  auto run = mras_optimize(dim, objective, cfg, rng);
  Policy pol;
  pol.p_rec = std::move(run.best_x);
  return {std::move(pol), std::move(run.trace)};
}

inline ConvergenceReport convergence_report(const MrasTrace& trace, double xi) {
  if (trace.iterations.empty())
    throw std::invalid_argument("convergence_report: empty trace");
  ConvergenceReport rep;
  rep.converged = trace.converged && trace.final_max_sigma < xi;
  rep.iterations = trace.iterations_used();
  rep.final_max_sigma = trace.final_max_sigma;
  rep.phi_returned = trace.phi_returned;
  rep.best_phi_series.reserve(trace.iterations.size());
  for (const auto& it : trace.iterations) rep.best_phi_series.push_back(it.best_phi);
  return rep;
}

// CSV trace export: iteration, gamma, best_phi, max_sigma, feasible_count.
inline void write_trace_csv(const MrasTrace& trace, std::ostream& os) {
  os << "iteration,gamma,best_phi,max_sigma,feasible_count\n";
  for (const auto& it : trace.iterations) {
    double max_sigma = 0.0;
    for (double s : it.sigma) max_sigma = std::max(max_sigma, s);
    os << it.iteration << ',' << it.gamma << ',' << it.best_phi << ',' << max_sigma << ','
       << it.feasible_count << '\n';
  }
}

}  // namespace specrec
