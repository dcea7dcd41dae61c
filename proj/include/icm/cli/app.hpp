#pragma once

// Command-line front end. run() parses arguments, validates every parameter
// before doing work, and maps library errors to exit codes:
//   0 success, 2 configuration / usage, 3 data, 4 numerical degeneracy.
// Reports never include the worker count, so output is identical for any --jobs.

#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icm/cli/io.hpp"
#include "icm/error.hpp"
#include "icm/genericity.hpp"
#include "icm/groups.hpp"
#include "icm/latent/experiments.hpp"
#include "icm/pairwise/sic.hpp"
#include "icm/pairwise/trace_method.hpp"
#include "icm/parallel.hpp"
#include "icm/scenes.hpp"

namespace icm::cli {

namespace detail {

inline json verdict_json(const pairwise::DirectionVerdict& v) {
  return {{"direction", std::string(pairwise::to_string(v.direction))},
          {"forward_ratio", v.forward_ratio},
          {"backward_ratio", v.backward_ratio},
          {"margin", v.margin},
          {"threshold", v.threshold}};
}

inline void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path + "'");
  write(f);
  if (!f) throw DataError("write failed for '" + path + "'");
}

inline void emit_json(const std::string& path, std::ostream& out, const json& report) {
  emit(path, out, [&](std::ostream& o) { o << report.dump(2) << "\n"; });
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---- egc-mc scenarios -------------------------------------------------------

inline CovarianceMatrix covariance_from_json(const json& j, const std::string& what) {
  return CovarianceMatrix(matrix_from_json(j, what));
}

inline bool use_special(const json& s, bool def) {
  const std::string g = s.value("group", std::string(def ? "SO" : "O"));
  if (g == "SO") return true;
  if (g == "O") return false;
  throw ConfigError("scenario: group must be \"O\" or \"SO\"");
}

struct ScenarioOutcome {
  std::string family;
  std::string group;
  double contrast = 0.0;
  double closed_form = 0.0;
  genericity::McEstimate mc;
};

inline ScenarioOutcome run_scenario(const json& s, std::size_t samples, Rng& rng) {
  const std::string family = s.value("family", std::string());
  ScenarioOutcome r;
  r.family = family;
  if (family == "trace") {
    const Matrix m = matrix_from_json(s.at("mechanism"), "mechanism");
    const CovarianceMatrix sx = covariance_from_json(s.at("cause_covariance"), "cause_covariance");
    if (sx.dim() != m.cols()) throw ConfigError("scenario: mechanism columns must match cause_covariance");
    std::optional<Matrix> se;
    if (s.contains("noise_covariance")) {
      se = covariance_from_json(s.at("noise_covariance"), "noise_covariance").matrix();
      if (se->rows() != m.rows()) throw ConfigError("scenario: noise_covariance must match mechanism rows");
    }
    const bool special = use_special(s, true);
    r.group = special ? "SO" : "O";
    auto effect = [&](const Matrix& cause) {
      Matrix e = m * cause * m.transpose();
      if (se) e += *se;
      return contrasts::normalized_trace(e);
    };
    r.contrast = effect(sx.matrix());
    r.closed_form = genericity::egc_trace(m, sx.matrix(), se);
    const Index n = sx.dim();
    r.mc = genericity::egc_monte_carlo(
        [&](Rng& g) { return special ? groups::sample_special_orthogonal(n, g) : groups::sample_orthogonal(n, g); },
        [&](const groups::OrthogonalMatrix& u) { return effect(u.conjugate(sx.matrix())); }, samples, rng);
  } else if (family == "nmf") {
    const NmfFactors f(matrix_from_json(s.at("w"), "w"), matrix_from_json(s.at("v"), "v"));
    r.group = "S";
    r.contrast = contrasts::nmf_centered_contrast(f);
    r.closed_form = genericity::egc_nmf(f);
    r.mc = genericity::egc_monte_carlo(
        [&](Rng& g) { return groups::sample_permutation(static_cast<std::size_t>(f.components()), g); },
        [&](const groups::Permutation& p) {
          return contrasts::nmf_centered_contrast(NmfFactors(p.permute_columns(f.w()), f.v()));
        },
        samples, rng);
  } else if (family == "mixture") {
    std::vector<double> w;
    for (const auto& x : s.at("weights")) w.push_back(x.get<double>());
    std::vector<Vector> mu;
    for (const auto& x : s.at("means")) mu.push_back(vector_from_json(x, "means"));
    std::vector<CovarianceMatrix> cov;
    for (const auto& x : s.at("covariances")) cov.push_back(covariance_from_json(x, "covariances"));
    const GaussianMixture g = GaussianMixture(std::move(w), std::move(mu), std::move(cov)).centered();
    const bool special = use_special(s, false);
    r.group = special ? "SO" : "O";
    r.contrast = contrasts::mixture_quartic_contrast(g);
    r.closed_form = genericity::egc_mixture(g);
    r.mc = genericity::egc_monte_carlo(
        [&](Rng& rr) {
          return special ? groups::sample_special_orthogonal(g.dim(), rr) : groups::sample_orthogonal(g.dim(), rr);
        },
        [&](const groups::OrthogonalMatrix& u) {
          std::vector<Vector> rotated;
          for (const auto& m : g.means()) rotated.push_back(u.apply(m));
          return contrasts::mixture_quartic_contrast_unchecked(GaussianMixture(g.weights(), rotated, g.covariances()));
        },
        samples, rng);
  } else if (family == "sic") {
    const SampledPsd sxx(s.at("input_psd").get<std::vector<double>>());
    const SampledPsd h2(s.at("transfer").get<std::vector<double>>());
    if (sxx.bins() != h2.bins()) throw ConfigError("scenario: input_psd and transfer must have equal length");
    r.group = "shift mod 1/2";
    auto overlap = [&](const SampledPsd& in) {
      double acc = 0.0;
      for (std::size_t b = 0; b < in.bins(); ++b) acc += in[b] * h2[b];
      return 2.0 * in.delta_nu() * acc;
    };
    r.contrast = overlap(sxx);
    r.closed_form = contrasts::total_power(sxx) * contrasts::total_power(h2);
    r.mc = genericity::egc_monte_carlo([&](Rng& g) { return groups::sample_circular_shift(0.5, g); },
                                       [&](const groups::CircularShift& sh) {
                                         return overlap(groups::apply_shift_to_psd(sxx, sh));
                                       },
                                       samples, rng);
  } else {
    throw ConfigError("scenario: family must be one of trace, nmf, mixture, sic");
  }
  return r;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Group-invariance diagnostics for causal generative models", "genericity"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::uint64_t seed = 1;
  std::size_t jobs = default_parallelism();
  std::string input, output;

  auto add_common = [&](CLI::App* sc, bool parallel) {
    sc->add_option("--seed", seed, "64-bit random seed")->capture_default_str();
    sc->add_option("--out", output, "Output path (default: standard output)");
    if (parallel)
      sc->add_option("--jobs", jobs, "Worker threads (default from GENERICITY_JOBS)")
          ->check(CLI::PositiveNumber);
  };

  // pair-trace
  double threshold = pairwise::kDefaultDecisionThreshold;
  auto* trace = app.add_subcommand("pair-trace", "Trace Method on a multivariate linear pair (CSV x0.. y0..)");
  trace->add_option("--input", input, "CSV file with columns x0..x(n-1), y0..y(n-1)")->required();
  trace->add_option("--threshold", threshold, "Undecided band on |log f| - |log b|")->capture_default_str();
  add_common(trace, false);

  // pair-sic
  pairwise::SpectralConfig spectral;
  auto* sic = app.add_subcommand("pair-sic", "Spectral independence criterion on a time-series pair (CSV x, y)");
  sic->add_option("--input", input, "CSV file with columns x and y")->required();
  sic->add_option("--segment", spectral.segment, "Welch segment length (power of two)")->capture_default_str();
  sic->add_option("--overlap", spectral.overlap, "Welch segment overlap in [0, 1)")->capture_default_str();
  sic->add_option("--threshold", spectral.threshold, "Undecided band on |log f| - |log b|")->capture_default_str();
  add_common(sic, false);

  // nmf-experiment
  latent::NmfExperimentConfig nmf;
  std::string nmf_algorithm = "mult";
  auto* nmfc = app.add_subcommand("nmf-experiment", "Seeded NMF simulation; per-trial CSV");
  nmfc->add_option("--trials", nmf.n_trials, "Number of trials")->capture_default_str();
  nmfc->add_option("--algorithm", nmf_algorithm, "mult or als")->capture_default_str();
  nmfc->add_option("--rows", nmf.d, "Rows d of W and X")->capture_default_str();
  nmfc->add_option("--cols", nmf.s, "Rows s of V (columns of X)")->capture_default_str();
  nmfc->add_option("--components", nmf.n_true, "True component count")->capture_default_str();
  nmfc->add_option("--n-est", nmf.n_est, "Assumed component count")->capture_default_str();
  nmfc->add_option("--sparsity", nmf.p_bernoulli, "Bernoulli probability of a nonzero in V")->capture_default_str();
  nmfc->add_option("--noise", nmf.noise_amplitude, "Uniform noise amplitude")->capture_default_str();
  nmfc->add_option("--max-iters", nmf.max_iters, "Solver iteration cap")->capture_default_str();
  nmfc->add_option("--tol", nmf.tol, "Relative loss-change tolerance")->capture_default_str();
  nmfc->add_option("--null-samples", nmf.null_samples, "Permutations per p-value (0 disables)")->capture_default_str();
  add_common(nmfc, true);

  // cluster-experiment
  latent::ClusterExperimentConfig cl;
  std::string cl_algorithm = "kmeans", cl_group = "O";
  auto* clc = app.add_subcommand("cluster-experiment", "Seeded Gaussian-mixture clustering simulation; per-trial CSV");
  clc->add_option("--trials", cl.n_trials, "Number of trials")->capture_default_str();
  clc->add_option("--algorithm", cl_algorithm, "kmeans or gm-em")->capture_default_str();
  clc->add_option("--clusters", cl.k, "Number of clusters K")->capture_default_str();
  clc->add_option("--dim", cl.p, "Dimension p")->capture_default_str();
  clc->add_option("--mean-std", cl.mean_std, "Standard deviation of cluster means")->capture_default_str();
  clc->add_option("--eigen-lo", cl.eigen_lo, "Lower end of the log-uniform eigenvalue range")->capture_default_str();
  clc->add_option("--eigen-hi", cl.eigen_hi, "Upper end of the log-uniform eigenvalue range")->capture_default_str();
  clc->add_option("--samples", cl.samples_per_trial, "Samples per trial")->capture_default_str();
  clc->add_option("--success-threshold", cl.success_threshold, "Accuracy marking a successful fit")
      ->capture_default_str();
  clc->add_option("--max-iters", cl.max_iters, "Iteration cap")->capture_default_str();
  clc->add_option("--tol", cl.tol, "EM mean log-likelihood tolerance")->capture_default_str();
  clc->add_option("--group", cl_group, "Null group on the means: O or SO")->capture_default_str();
  clc->add_option("--null-samples", cl.null_samples, "Group draws per p-value (0 disables)")->capture_default_str();
  add_common(clc, true);

  // egc-mc
  std::size_t mc_samples = 10000;
  auto* egc = app.add_subcommand("egc-mc", "Monte-Carlo EGC of a JSON scenario, with its closed form");
  egc->add_option("--scenario", input, "Scenario JSON file")->required();
  egc->add_option("--samples", mc_samples, "Group samples")->capture_default_str();
  add_common(egc, false);

  // scene-demo
  std::size_t rotations = 200;
  std::string rotate_label;
  auto* scene = app.add_subcommand("scene-demo", "Occlusion-order inference on a scene fixture");
  scene->add_option("--fixture", input, "Scene fixture JSON file")->required();
  scene->add_option("--rotations", rotations, "Random rotations per hypothesis")->capture_default_str();
  scene->add_option("--rotate", rotate_label, "Label of the object to rotate (default: the back object)");
  add_common(scene, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return static_cast<int>(ErrorKind::config);
  }

  try {
    if (*trace) {
      if (!(threshold >= 0.0)) throw ConfigError("--threshold must be nonnegative");
      const CsvTable t = read_csv(input);
      const Matrix x = prefixed_columns(t, 'x'), y = prefixed_columns(t, 'y');
      const auto v = pairwise::infer_direction_trace(x, y, threshold);
      json report = {{"command", "pair-trace"},
                     {"config", {{"input", input}, {"threshold", threshold}, {"seed", seed}}},
                     {"samples", x.rows()},
                     {"dimension", x.cols()},
                     {"verdict", detail::verdict_json(v)}};
      detail::emit_json(output, out, report);
    } else if (*sic) {
      pairwise::detail::validate(spectral, std::numeric_limits<std::size_t>::max());
      if (!(spectral.threshold >= 0.0)) throw ConfigError("--threshold must be nonnegative");
      const CsvTable t = read_csv(input);
      const pairwise::TimeSeriesPair pair(t.values(t.column(t.has_column("x") ? "x" : "x0")),
                                          t.values(t.column(t.has_column("y") ? "y" : "y0")));
      const auto d = pairwise::infer_direction_sic_detailed(pair, spectral);
      json report = {{"command", "pair-sic"},
                     {"config",
                      {{"input", input},
                       {"segment", spectral.segment},
                       {"overlap", spectral.overlap},
                       {"threshold", spectral.threshold},
                       {"seed", seed}}},
                     {"samples", pair.x.size()},
                     {"transfer_estimator", "cross-spectral |S_yx|^2 / S_xx^2 (estimated from data)"},
                     {"floored_bins_forward", d.floored_forward.size()},
                     {"floored_bins_backward", d.floored_backward.size()},
                     {"verdict", detail::verdict_json(d.verdict)}};
      detail::emit_json(output, out, report);
    } else if (*nmfc) {
      nmf.algorithm = latent::parse_nmf_algorithm(nmf_algorithm);
      nmf.seed = seed;
      nmf.validate();
      const json config = {{"command", "nmf-experiment"},
                           {"trials", nmf.n_trials},
                           {"algorithm", latent::to_string(nmf.algorithm)},
                           {"rows", nmf.d},
                           {"cols", nmf.s},
                           {"components", nmf.n_true},
                           {"n_est", nmf.n_est},
                           {"sparsity", nmf.p_bernoulli},
                           {"noise", nmf.noise_amplitude},
                           {"max_iters", nmf.max_iters},
                           {"tol", nmf.tol},
                           {"null_samples", nmf.null_samples},
                           {"performance_metric", "mean cosine similarity of Hungarian-matched W columns"},
                           {"seed", seed}};
      const auto trials = latent::run_nmf_experiment(nmf, jobs);
      detail::emit(output, out, [&](std::ostream& o) { write_trials_csv(o, config, trials); });
    } else if (*clc) {
      cl.algorithm = latent::parse_cluster_algorithm(cl_algorithm);
      if (cl_group == "O") cl.group = latent::MeanGroup::orthogonal;
      else if (cl_group == "SO") cl.group = latent::MeanGroup::special_orthogonal;
      else throw ConfigError("--group must be O or SO");
      cl.seed = seed;
      cl.validate();
      const json config = {{"command", "cluster-experiment"},
                           {"trials", cl.n_trials},
                           {"algorithm", latent::to_string(cl.algorithm)},
                           {"clusters", cl.k},
                           {"dim", cl.p},
                           {"mean_std", cl.mean_std},
                           {"eigen_range", {cl.eigen_lo, cl.eigen_hi}},
                           {"samples", cl.samples_per_trial},
                           {"success_threshold", cl.success_threshold},
                           {"max_iters", cl.max_iters},
                           {"tol", cl.tol},
                           {"group", cl_group},
                           {"null_samples", cl.null_samples},
                           {"performance_metric", "accuracy under optimal label matching"},
                           {"seed", seed}};
      const auto trials = latent::run_cluster_experiment(cl, jobs);
      detail::emit(output, out, [&](std::ostream& o) { write_trials_csv(o, config, trials); });
    } else if (*egc) {
      if (mc_samples < 2) throw ConfigError("--samples must be at least 2");
      const json scenario = read_json(input);
      Rng rng(seed);
      const auto r = detail::run_scenario(scenario, mc_samples, rng);
      const auto rep = genericity::make_report(r.contrast, r.mc);
      json report = {{"command", "egc-mc"},
                     {"config", {{"scenario", scenario}, {"samples", mc_samples}, {"seed", seed}}},
                     {"family", r.family},
                     {"group", r.group},
                     {"contrast", r.contrast},
                     {"egc_monte_carlo", rep.egc},
                     {"mc_std_error", detail::optional_json(rep.mc_stderr)},
                     {"egc_closed_form", r.closed_form},
                     {"generic_ratio", rep.generic_ratio},
                     {"generic_ratio_closed_form", genericity::generic_ratio(r.contrast, r.closed_form)},
                     {"p_value", detail::optional_json(rep.p_value)},
                     {"group_samples", rep.n_group_samples}};
      detail::emit_json(output, out, report);
    } else if (*scene) {
      if (rotations < scenes::kMinRotations) throw ConfigError("--rotations must be at least 50");
      const SceneFixture fx = read_scene_fixture(input);
      scenes::OcclusionOptions opt;
      opt.n_rotations = rotations;
      opt.rotate_label = rotate_label;
      Rng rng(seed);
      const auto res = scenes::infer_occlusion_order(fx.hypotheses[0], fx.hypotheses[1], opt, rng);
      auto score = [&](const scenes::HypothesisScore& s) {
        std::size_t plus2 = 0;
        double mean = 0.0;
        for (auto c : s.rotated_counts) {
          plus2 += c >= s.observed_count + 2;
          mean += static_cast<double>(c);
        }
        return json{{"name", s.name},
                    {"rotated_object", s.rotated_object},
                    {"typicality", s.typicality},
                    {"mean_rotated_count", mean / static_cast<double>(s.rotated_counts.size())},
                    {"fraction_at_least_observed_plus_2",
                     static_cast<double>(plus2) / static_cast<double>(s.rotated_counts.size())}};
      };
      const std::string winner = res.verdict == scenes::OcclusionVerdict::first    ? res.first.name
                                 : res.verdict == scenes::OcclusionVerdict::second ? res.second.name
                                                                                   : std::string("undecided");
      json report = {{"command", "scene-demo"},
                     {"config",
                      {{"fixture", input},
                       {"rotations", rotations},
                       {"rotate", rotate_label.empty() ? std::string("back") : rotate_label},
                       {"seed", seed}}},
                     {"scene", fx.name},
                     {"observed_count", res.observed_count},
                     {"hypotheses", {score(res.first), score(res.second)}},
                     {"verdict", winner}};
      detail::emit_json(output, out, report);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const json::exception& e) {
    err << "error: malformed input: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::data);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::data);
  }
  return 0;
}

}  // namespace icm::cli
