#pragma once

// Seeded trial drivers for the NMF and clustering simulations. Trial i draws
// from Rng(seed).derive(i), so results do not depend on the worker count.

#include <cmath>
#include <exception>
#include <limits>
#include <vector>

#include "icm/genericity.hpp"
#include "icm/latent/clustering.hpp"
#include "icm/latent/nmf.hpp"
#include "icm/latent/trial.hpp"
#include "icm/parallel.hpp"

namespace icm::latent {

namespace detail {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class F>
double ratio_or_nan(F&& f, std::string& error) {
  try {
    return f();
  } catch (const std::exception& e) {
    if (error.empty()) error = e.what();
    return kNaN;
  }
}

}  // namespace detail

inline TrialRecord run_nmf_trial(const NmfExperimentConfig& cfg, std::size_t index) {
  TrialRecord rec;
  rec.trial_index = index;
  Rng rng = Rng(cfg.seed).derive(index);
  try {
    const NmfInstance inst = generate_nmf_instance(cfg, rng);
    const NmfResult fit = fit_nmf(cfg.algorithm, inst.x, cfg.n_est, {cfg.max_iters, cfg.tol}, rng);
    rec.converged = fit.converged;
    rec.performance = nmf_performance(inst.w, fit.factors.w());
    const NmfFactors est = normalize_factors(fit.factors);
    const NmfFactors truth = normalize_factors(NmfFactors(inst.w, inst.v));
    rec.generic_ratio_estimated = detail::ratio_or_nan([&] { return nmf_generic_ratio(est); }, rec.error);
    rec.generic_ratio_ground_truth =
        detail::ratio_or_nan([&] { return nmf_generic_ratio(truth); }, rec.error);
    if (cfg.null_samples > 0 && std::isfinite(rec.generic_ratio_estimated)) {
      const auto null = nmf_permutation_null(est, cfg.null_samples, rng);
      rec.p_value = genericity::randomization_test(contrasts::nmf_centered_contrast(est), null);
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.generic_ratio_estimated = detail::kNaN;
    rec.generic_ratio_ground_truth = detail::kNaN;
  }
  return rec;
}

inline std::vector<TrialRecord> run_nmf_experiment(const NmfExperimentConfig& cfg,
                                                   std::size_t jobs = default_parallelism()) {
  cfg.validate();
  std::vector<TrialRecord> out(cfg.n_trials);
  parallel_for(cfg.n_trials, jobs, [&](std::size_t i) { out[i] = run_nmf_trial(cfg, i); });
  return out;
}

inline TrialRecord run_cluster_trial(const ClusterExperimentConfig& cfg, std::size_t index) {
  TrialRecord rec;
  rec.trial_index = index;
  Rng rng = Rng(cfg.seed).derive(index);
  try {
    const GmmInstance inst = generate_gmm_instance(cfg, rng);
    const ClusterFit fit = fit_clusters(cfg.algorithm, inst.samples, cfg.k, cfg.max_iters, cfg.tol, rng);
    rec.converged = fit.converged && !fit.degenerate;
    if (fit.degenerate && rec.error.empty()) rec.error = "degenerate fit";
    rec.performance = cluster_performance(inst.labels, fit.labels);
    rec.generic_ratio_estimated =
        detail::ratio_or_nan([&] { return cluster_generic_ratio(fit.mixture); }, rec.error);
    rec.generic_ratio_ground_truth =
        detail::ratio_or_nan([&] { return cluster_generic_ratio(inst.truth); }, rec.error);
    if (cfg.null_samples > 0 && std::isfinite(rec.generic_ratio_estimated)) {
      const GaussianMixture centered = fit.mixture.centered();
      const auto null = mixture_rotation_null(centered, cfg.null_samples, cfg.group, rng);
      rec.p_value = genericity::randomization_test(
          contrasts::mixture_quartic_contrast_unchecked(centered), null);
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.generic_ratio_estimated = detail::kNaN;
    rec.generic_ratio_ground_truth = detail::kNaN;
  }
  return rec;
}

inline std::vector<TrialRecord> run_cluster_experiment(const ClusterExperimentConfig& cfg,
                                                       std::size_t jobs = default_parallelism()) {
  cfg.validate();
  std::vector<TrialRecord> out(cfg.n_trials);
  parallel_for(cfg.n_trials, jobs, [&](std::size_t i) { out[i] = run_cluster_trial(cfg, i); });
  return out;
}

inline bool is_success(const TrialRecord& r, double threshold) { return r.performance >= threshold; }

}  // namespace icm::latent
