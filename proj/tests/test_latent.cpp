#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icm/latent/clustering.hpp"
#include "icm/latent/experiments.hpp"
#include "icm/latent/nmf.hpp"
#include "icm/stats.hpp"

using namespace icm;
using namespace icm::latent;

namespace {

Matrix uniform_matrix(Index r, Index c, Rng& rng) {
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = rng.uniform();
  return m;
}

NmfExperimentConfig noiseless() {
  NmfExperimentConfig cfg;
  cfg.noise_amplitude = 0.0;
  return cfg;
}

// Three tight, far-apart clusters in the plane.
struct Blobs {
  Matrix x;
  std::vector<std::size_t> labels;
};

Blobs separated_blobs(std::size_t per, Rng& rng) {
  const double centers[3][2] = {{0.0, 0.0}, {20.0, 0.0}, {0.0, 20.0}};
  Blobs b{Matrix(static_cast<Index>(3 * per), 2), {}};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < per; ++i) {
      const auto row = static_cast<Index>(c * per + i);
      b.x(row, 0) = centers[c][0] + rng.normal();
      b.x(row, 1) = centers[c][1] + 0.5 * rng.normal();
      b.labels.push_back(c);
    }
  return b;
}

}  // namespace

TEST(GenerateNmfInstance, NoiselessIsExactProduct) {
  Rng rng(1);
  const auto inst = generate_nmf_instance(noiseless(), rng);
  EXPECT_EQ(inst.x, Matrix(inst.w * inst.v.transpose()));
  EXPECT_EQ(inst.w.rows(), 20);
  EXPECT_EQ(inst.v.rows(), 50);
  EXPECT_EQ(inst.w.cols(), 5);
}

TEST(GenerateNmfInstance, DefaultsAreNonnegative) {
  Rng rng(2);
  const auto inst = generate_nmf_instance(NmfExperimentConfig{}, rng);
  EXPECT_GE(inst.x.minCoeff(), 0.0);
  EXPECT_GE(inst.v.minCoeff(), 0.0);
  EXPECT_GE(inst.w.minCoeff(), 0.0);
}

TEST(GenerateNmfInstance, SparsityRate) {
  Rng rng(3);
  double nonzero = 0.0, total = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto inst = generate_nmf_instance(NmfExperimentConfig{}, rng);
    nonzero += static_cast<double>((inst.v.array() > 0.0).count());
    total += static_cast<double>(inst.v.size());
    for (Index j = 0; j < inst.v.cols(); ++j) ASSERT_GT(inst.v.col(j).maxCoeff(), 0.0);
  }
  // Bernoulli(0.1) conditioned on a nonzero column of 50: 0.1 / (1 - 0.9^50).
  const double conditioned = 0.1 / (1.0 - std::pow(0.9, 50));
  EXPECT_NEAR(nonzero / total, 0.1, 0.01);
  EXPECT_NEAR(nonzero / total, conditioned, 0.003);
}

TEST(GenerateNmfInstance, InvalidConfig) {
  Rng rng(4);
  NmfExperimentConfig cfg;
  cfg.p_bernoulli = 0.0;
  EXPECT_THROW(generate_nmf_instance(cfg, rng), ConfigError);
  cfg = {};
  cfg.n_true = 30;
  EXPECT_THROW(generate_nmf_instance(cfg, rng), ConfigError);
}

TEST(NmfMultiplicative, ExactFactorizationIsUsuallyRecovered) {
  Rng rng(5);
  int good = 0;
  const int runs = 20;
  for (int r = 0; r < runs; ++r) {
    const auto inst = generate_nmf_instance(noiseless(), rng);
    const auto fit = nmf_multiplicative(inst.x, 5, {20000, 0.0}, rng);
    if (relative_error(inst.x, fit.factors) < 1e-3) ++good;
  }
  EXPECT_GE(good, 0.9 * runs) << good << " of " << runs;
}

TEST(NmfSolvers, RankOneIsSolved) {
  Rng rng(6);
  const Matrix w = uniform_matrix(12, 1, rng), v = uniform_matrix(9, 1, rng);
  const Matrix x = w * v.transpose();
  for (auto algo : {NmfAlgorithm::mult, NmfAlgorithm::als}) {
    const auto fit = fit_nmf(algo, x, 1, {2000, 1e-14}, rng);
    EXPECT_LT(relative_error(x, fit.factors), 1e-6) << to_string(algo);
  }
}

TEST(NmfMultiplicative, LossIsMonotone) {
  Rng rng(7);
  const auto inst = generate_nmf_instance(NmfExperimentConfig{}, rng);
  const auto fit = nmf_multiplicative(inst.x, 5, {500, 0.0}, rng);
  ASSERT_EQ(fit.loss.size(), 500u);
  for (std::size_t i = 1; i < fit.loss.size(); ++i) EXPECT_LE(fit.loss[i], fit.loss[i - 1] + 1e-10);
  EXPECT_GE(fit.factors.w().minCoeff(), 0.0);
  EXPECT_GE(fit.factors.v().minCoeff(), 0.0);
}

TEST(NmfAls, DeterministicAndNonnegative) {
  const auto inst = [] {
    Rng rng(8);
    return generate_nmf_instance(NmfExperimentConfig{}, rng);
  }();
  Rng a(9), b(9);
  const auto fa = nmf_als(inst.x, 5, {}, a);
  const auto fb = nmf_als(inst.x, 5, {}, b);
  EXPECT_EQ(fa.factors.w(), fb.factors.w());
  EXPECT_EQ(fa.factors.v(), fb.factors.v());
  EXPECT_GE(fa.factors.w().minCoeff(), 0.0);
}

TEST(NmfSolvers, RejectInvalidInput) {
  Rng rng(10);
  Matrix x = Matrix::Ones(3, 3);
  x(1, 1) = -1.0;
  EXPECT_THROW(nmf_multiplicative(x, 2, {}, rng), DataError);
  EXPECT_THROW(nmf_als(Matrix(0, 0), 2, {}, rng), DataError);
  EXPECT_THROW(nmf_als(Matrix::Ones(3, 3), 0, {}, rng), ConfigError);
}

TEST(NormalizeFactors, PreservesProductAndOrdersColumns) {
  Rng rng(11);
  const NmfFactors f(uniform_matrix(6, 4, rng), uniform_matrix(8, 4, rng));
  const auto g = normalize_factors(f);
  EXPECT_TRUE(Matrix(g.w() * g.v().transpose()).isApprox(Matrix(f.w() * f.v().transpose()), 1e-13));
  for (Index j = 0; j < 4; ++j) EXPECT_NEAR(g.v().col(j).norm(), 1.0, 1e-14);
  for (Index j = 1; j < 4; ++j) EXPECT_GE(g.w().col(j - 1).norm(), g.w().col(j).norm());
}

TEST(NmfPerformance, Examples) {
  Rng rng(12);
  const Matrix w = uniform_matrix(10, 4, rng);
  const auto p = groups::sample_permutation(4, rng);
  EXPECT_NEAR(nmf_performance(w, p.permute_columns(w)), 1.0, 1e-12);
  Matrix scaled = w;
  for (Index j = 0; j < 4; ++j) scaled.col(j) *= 0.5 + j;
  EXPECT_NEAR(nmf_performance(w, scaled), 1.0, 1e-12);
  Matrix a = Matrix::Zero(4, 2), b = Matrix::Zero(4, 2);
  a(0, 0) = a(1, 1) = 1.0;
  b(2, 0) = b(3, 1) = 1.0;
  EXPECT_EQ(nmf_performance(a, b), 0.0);
  EXPECT_THROW(nmf_performance(Matrix::Ones(3, 2), Matrix::Ones(4, 2)), DataError);
}

TEST(NmfGenericRatio, IidColumnsAverageToOne) {
  Rng rng(13);
  std::vector<double> r;
  for (int i = 0; i < 1000; ++i) r.push_back(nmf_generic_ratio(NmfFactors(uniform_matrix(20, 5, rng), uniform_matrix(50, 5, rng))));
  EXPECT_NEAR(stats::mean(r), 1.0, 0.05);
}

TEST(NmfGenericRatio, GroundTruthConcentrates) {
  Rng rng(14);
  std::vector<double> r;
  for (int i = 0; i < 200; ++i) {
    const auto inst = generate_nmf_instance(NmfExperimentConfig{}, rng);
    r.push_back(nmf_generic_ratio(normalize_factors(NmfFactors(inst.w, inst.v))));
  }
  EXPECT_LT(stats::stddev(r), 0.2);
}

TEST(NmfGenericRatio, AlignedFactorsExceedOne) {
  Matrix w(4, 3);
  w << 3, 0, 0,
       1, 0.2, 0,
       0, 1, 0.1,
       0, 0, 0.3;
  EXPECT_GT(nmf_generic_ratio(NmfFactors(w, w)), 1.0);
  EXPECT_THROW(nmf_generic_ratio(NmfFactors(Matrix::Ones(3, 2), Matrix::Ones(3, 2))), DegenerateError);
}

TEST(NmfPermutationNull, MatchesClosedFormOnAverage) {
  Rng rng(15);
  const NmfFactors f(uniform_matrix(6, 4, rng), uniform_matrix(7, 4, rng));
  const auto null = nmf_permutation_null(f, 4000, rng);
  const double se = stats::stddev(null) / std::sqrt(double(null.size()));
  EXPECT_NEAR(stats::mean(null), genericity::egc_nmf(f), 4.0 * se + 1e-12);
}

TEST(GenerateGmmInstance, CollapsedEigenvaluesGiveIdentity) {
  ClusterExperimentConfig cfg;
  cfg.eigen_lo = cfg.eigen_hi = 1.0;
  Rng rng(16);
  const auto inst = generate_gmm_instance(cfg, rng);
  for (const auto& c : inst.truth.covariances())
    EXPECT_LT((c.matrix() - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GenerateGmmInstance, ClassFrequenciesWithinThreeSigma) {
  // Each class frequency should sit within 3 sigma of 1/K (two-sided rate 0.27%).
  ClusterExperimentConfig cfg;
  const double n = static_cast<double>(cfg.samples_per_trial), k = 5.0;
  const double band = 3.0 * std::sqrt((1.0 / k) * (1.0 - 1.0 / k) / n);
  Rng rng(17);
  int outside = 0, checked = 0;
  for (int t = 0; t < 200; ++t) {
    const auto inst = generate_gmm_instance(cfg, rng);
    std::vector<double> counts(5, 0.0);
    for (auto l : inst.labels) counts[l] += 1.0;
    for (double c : counts) {
      ++checked;
      if (std::abs(c / n - 1.0 / k) > band) ++outside;
    }
  }
  EXPECT_LE(outside, checked / 100) << outside << " of " << checked;
}

TEST(GenerateGmmInstance, ClusterMeansWithinFourSigma) {
  ClusterExperimentConfig cfg;
  cfg.samples_per_trial = 20000;
  Rng rng(17);
  const auto inst = generate_gmm_instance(cfg, rng);
  std::vector<double> counts(5, 0.0);
  std::vector<Vector> sums(5, Vector::Zero(20));
  for (std::size_t i = 0; i < inst.labels.size(); ++i) {
    counts[inst.labels[i]] += 1.0;
    sums[inst.labels[i]] += inst.samples.row(static_cast<Index>(i)).transpose();
  }
  for (std::size_t c = 0; c < 5; ++c) {
    const Vector mean = sums[c] / counts[c];
    const Matrix& s = inst.truth.covariances()[c].matrix();
    for (Index j = 0; j < 20; ++j)
      EXPECT_NEAR(mean(j), inst.truth.means()[c](j), 4.0 * std::sqrt(s(j, j) / counts[c]));
  }
}

TEST(Kmeans, SeparatedClustersAreRecovered) {
  Rng rng(18);
  const auto b = separated_blobs(100, rng);
  const auto fit = kmeans(b.x, 3, 100, rng);
  EXPECT_EQ(cluster_performance(b.labels, fit.labels), 1.0);
  EXPECT_TRUE(fit.converged);
  for (std::size_t i = 1; i < fit.objective.size(); ++i)
    EXPECT_LE(fit.objective[i], fit.objective[i - 1] + 1e-9);
}

TEST(Kmeans, SingleClusterMeanIsSampleMean) {
  Rng rng(19);
  const auto b = separated_blobs(20, rng);
  const auto fit = kmeans(b.x, 1, 10, rng);
  EXPECT_LT((fit.mixture.means()[0] - Vector(b.x.colwise().mean().transpose())).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(kmeans(b.x.topRows(5), 2, 10, rng), DataError);
}

TEST(GmmEm, SingleGaussianMatchesEmpiricalMoments) {
  Rng rng(20);
  Matrix x(500, 3);
  for (Index i = 0; i < 500; ++i) x.row(i) << rng.normal(), 2.0 * rng.normal() + 1.0, rng.normal() - 3.0;
  const auto fit = gmm_em(x, 1, 50, 1e-10, rng);
  const Vector mean = x.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - mean.transpose();
  const Matrix cov = xc.transpose() * xc / 500.0;
  EXPECT_LT((fit.mixture.means()[0] - mean).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((fit.mixture.covariances()[0].matrix() - cov).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GmmEm, DefaultEnsembleSeparatedAndMonotone) {
  Rng rng(21);
  const auto b = separated_blobs(100, rng);
  const auto fit = gmm_em(b.x, 3, 200, 1e-10, rng);
  EXPECT_EQ(cluster_performance(b.labels, fit.labels), 1.0);
  for (std::size_t i = 1; i < fit.objective.size(); ++i)
    EXPECT_GE(fit.objective[i], fit.objective[i - 1] - 1e-9);
  const Matrix& r = fit.responsibilities;
  for (Index i = 0; i < r.rows(); ++i) EXPECT_NEAR(r.row(i).sum(), 1.0, 1e-12);
}

TEST(ClusterPerformance, Examples) {
  const std::vector<std::size_t> truth{0, 0, 1, 1, 1, 2, 2, 2, 2, 0};
  std::vector<std::size_t> relabeled;
  for (auto l : truth) relabeled.push_back((l + 1) % 3);
  EXPECT_EQ(cluster_performance(truth, relabeled), 1.0);
  EXPECT_DOUBLE_EQ(cluster_performance(truth, std::vector<std::size_t>(10, 0)), 0.4);
  Rng rng(22);
  std::vector<std::size_t> t(1000), e(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    t[i] = rng.below(5);
    e[i] = rng.below(5);
  }
  const double acc = cluster_performance(t, e);
  EXPECT_GT(acc, 0.2 - 0.05);
  EXPECT_LT(acc, 0.2 + 0.06);
  EXPECT_THROW(cluster_performance({0, 1}, {0}), DataError);
}

TEST(ClusterGenericRatio, Examples) {
  const auto iso = GaussianMixture({0.5, 0.5}, {Vector::Constant(2, 1.0), Vector::Constant(2, -3.0)},
                                   {CovarianceMatrix::identity(2), CovarianceMatrix::diagonal(Vector::Constant(2, 4.0))});
  EXPECT_NEAR(cluster_generic_ratio(iso), 1.0, 1e-14);
  Vector d(2);
  d << 2.0, 1.0;
  Vector m(2);
  m << 1.0, 0.0;
  const auto worked = GaussianMixture({0.5, 0.5}, {m, Vector(-m)},
                                      {CovarianceMatrix::diagonal(d), CovarianceMatrix::diagonal(d)});
  EXPECT_NEAR(cluster_generic_ratio(worked), 1.0625, 1e-12);
}

TEST(ClusterGenericRatio, ElongatedGaussianSplitAcrossShortAxis) {
  // Halves of N(0, diag(4, 0.25)) on either side of the long axis.
  const double s = 0.5 * std::sqrt(2.0 / std::acos(-1.0));  // E|Z| for sd 0.5
  Vector d(2);
  d << 4.0, 0.25 * (1.0 - 2.0 / std::acos(-1.0));
  Vector m(2);
  m << 0.0, s;
  const auto split = GaussianMixture({0.5, 0.5}, {m, Vector(-m)},
                                     {CovarianceMatrix::diagonal(d), CovarianceMatrix::diagonal(d)});
  const Matrix& sig = split.covariances()[0].matrix();
  EXPECT_LT(m.dot(sig * m), m.squaredNorm() * sig.trace() / 2.0);
  EXPECT_LT(cluster_generic_ratio(split), 1.0);
}

TEST(MixtureRotationNull, AveragesToClosedForm) {
  Rng rng(23);
  Vector d(3);
  d << 3.0, 1.0, 0.2;
  Vector m(3);
  m << 1.0, 0.5, -0.5;
  const auto g = GaussianMixture({0.5, 0.5}, {m, Vector(-m)},
                                 {CovarianceMatrix::diagonal(d), CovarianceMatrix::identity(3)});
  for (auto group : {MeanGroup::orthogonal, MeanGroup::special_orthogonal}) {
    const auto null = mixture_rotation_null(g, 5000, group, rng);
    const double se = stats::stddev(null) / std::sqrt(double(null.size()));
    EXPECT_NEAR(stats::mean(null), genericity::egc_mixture(g), 4.0 * se);
  }
}

TEST(Experiments, NmfTrialsAreIndependentOfParallelism) {
  NmfExperimentConfig cfg;
  cfg.n_trials = 6;
  cfg.null_samples = 20;
  const auto a = run_nmf_experiment(cfg, 1);
  const auto b = run_nmf_experiment(cfg, 3);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].trial_index, i);
    EXPECT_EQ(a[i].performance, b[i].performance);
    EXPECT_EQ(a[i].generic_ratio_estimated, b[i].generic_ratio_estimated);
    EXPECT_EQ(a[i].p_value, b[i].p_value);
    EXPECT_GE(a[i].performance, 0.0);
    EXPECT_LE(a[i].performance, 1.0);
  }
}

TEST(Experiments, ClusterTrialsRecordResults) {
  ClusterExperimentConfig cfg;
  cfg.n_trials = 4;
  cfg.null_samples = 0;
  cfg.algorithm = ClusterAlgorithm::gm_em;
  const auto a = run_cluster_experiment(cfg, 1);
  const auto b = run_cluster_experiment(cfg, 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].generic_ratio_estimated, b[i].generic_ratio_estimated);
    EXPECT_FALSE(a[i].p_value.has_value());
    EXPECT_NEAR(a[i].generic_ratio_ground_truth, 1.0, 0.05);
  }
  cfg.k = 1;
  EXPECT_THROW(run_cluster_experiment(cfg, 1), ConfigError);
}

TEST(Algorithms, NamesRoundTrip) {
  EXPECT_EQ(parse_nmf_algorithm("als"), NmfAlgorithm::als);
  EXPECT_EQ(to_string(NmfAlgorithm::mult), "mult");
  EXPECT_EQ(parse_cluster_algorithm("gm_em"), ClusterAlgorithm::gm_em);
  EXPECT_EQ(to_string(parse_cluster_algorithm("gm-em")), "gm-em");
  EXPECT_THROW(parse_nmf_algorithm("svd"), ConfigError);
  EXPECT_THROW(parse_cluster_algorithm("dbscan"), ConfigError);
}
