#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "icm/genericity.hpp"
#include "icm/pairwise/sic.hpp"
#include "icm/pairwise/trace_method.hpp"
#include "synth.hpp"

using namespace icm;
using namespace icm::pairwise;

namespace {

Matrix diag(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v.asDiagonal();
}

struct TraceData {
  Matrix x, y;
};

TraceData trace_pair(Index n, Index n_samples, double noise, Rng& rng) {
  const Matrix m = synth::random_mechanism(n, rng);
  TraceData d;
  d.x = synth::gaussian_samples(synth::random_covariance(n, rng), n_samples, rng);
  d.y = d.x * m.transpose() + synth::gaussian_noise(n_samples, n, noise, rng);
  return d;
}

}  // namespace

TEST(FitLinearPair, RecoversNoiselessMechanism) {
  Rng rng(1);
  const Matrix m = synth::random_mechanism(3, rng);
  const Matrix x = synth::gaussian_samples(synth::random_covariance(3, rng), 200, rng);
  const auto fit = fit_linear_pair(x, Matrix(x * m.transpose()));
  EXPECT_LT((fit.m - m).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(fit.sigma_e.matrix().cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FitLinearPair, IndependentDataGivesNearZeroMechanism) {
  Rng rng(2);
  const Index n = 10000;
  const Matrix x = synth::gaussian_noise(n, 2, 1.0, rng);
  const Matrix y = synth::gaussian_noise(n, 2, 1.0, rng);
  const auto fit = fit_linear_pair(x, y);
  EXPECT_LT(fit.m.cwiseAbs().maxCoeff(), 4.0 / std::sqrt(double(n)));
}

TEST(FitLinearPair, TooFewSamplesOrSingular) {
  Rng rng(3);
  EXPECT_THROW(fit_linear_pair(synth::gaussian_noise(3, 3, 1.0, rng), synth::gaussian_noise(3, 3, 1.0, rng)),
               DataError);
  Matrix x = synth::gaussian_noise(50, 2, 1.0, rng);
  x.col(1) = 2.0 * x.col(0);
  EXPECT_THROW(fit_linear_pair(x, synth::gaussian_noise(50, 2, 1.0, rng)), DataError);
  EXPECT_THROW(fit_linear_pair(x, synth::gaussian_noise(49, 2, 1.0, rng)), DataError);
}

TEST(TraceConditionRatio, Examples) {
  Rng rng(4);
  const Matrix s = synth::random_covariance(4, rng);
  EXPECT_NEAR(trace_condition_ratio(groups::sample_orthogonal(4, rng).matrix(), s), 1.0, 1e-12);
  EXPECT_NEAR(trace_condition_ratio(diag({2.0, 1.0}), diag({1.0, 3.0})), 0.7, 1e-14);
  EXPECT_NEAR(trace_condition_ratio(synth::random_mechanism(4, rng), Matrix::Identity(4, 4)), 1.0, 1e-12);
  EXPECT_THROW(trace_condition_ratio(Matrix::Zero(2, 2), Matrix::Identity(2, 2)), DegenerateError);
}

TEST(TraceConditionRatio, ScaleInvariantInCause) {
  Rng rng(5);
  const Matrix m = synth::random_mechanism(5, rng), s = synth::random_covariance(5, rng);
  for (double c : {0.01, 0.5, 7.0, 1e4})
    EXPECT_NEAR(trace_condition_ratio(m, Matrix(c * s)), trace_condition_ratio(m, s), 1e-12);
}

TEST(InferDirectionTrace, CorrectOnGenericEnsemble) {
  Rng rng(6);
  int correct = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const auto d = trace_pair(10, 10000, 0.05, rng);
    if (infer_direction_trace(d.x, d.y).direction == Direction::x_causes_y) ++correct;
  }
  EXPECT_GT(correct, 0.9 * trials) << correct << " of " << trials;
}

TEST(InferDirectionTrace, SwapFlipsVerdictAndRatios) {
  Rng rng(7);
  const auto d = trace_pair(4, 2000, 0.1, rng);
  const auto a = infer_direction_trace(d.x, d.y);
  const auto b = infer_direction_trace(d.y, d.x);
  EXPECT_EQ(a.forward_ratio, b.backward_ratio);
  EXPECT_EQ(a.backward_ratio, b.forward_ratio);
  EXPECT_EQ(a.margin, -b.margin);
  const Direction mirrored = a.direction == Direction::x_causes_y   ? Direction::y_causes_x
                             : a.direction == Direction::y_causes_x ? Direction::x_causes_y
                                                                    : Direction::undecided;
  EXPECT_EQ(b.direction, mirrored);
}

TEST(InferDirectionTrace, OrthogonalMechanismIsUndecided) {
  Rng rng(8);
  const Matrix q = groups::sample_orthogonal(3, rng).matrix();
  const Matrix x = synth::gaussian_samples(synth::random_covariance(3, rng), 500, rng);
  const auto v = infer_direction_trace(x, Matrix(x * q.transpose()));
  EXPECT_EQ(v.direction, Direction::undecided);
  EXPECT_NEAR(v.forward_ratio, 1.0, 1e-10);
  EXPECT_NEAR(v.backward_ratio, 1.0, 1e-10);
}

TEST(InferDirectionTrace, NotApplicableCases) {
  Rng rng(9);
  const Matrix x = synth::gaussian_noise(100, 3, 1.0, rng);
  EXPECT_THROW(infer_direction_trace(x, synth::gaussian_noise(100, 2, 1.0, rng)), ConfigError);
  Matrix m = Matrix::Identity(3, 3);
  m(2, 2) = 0.0;
  EXPECT_THROW(infer_direction_trace(x, Matrix(x * m)), Error);
}

TEST(InferDirectionTrace, FittedForwardBackwardProduct) {
  Rng rng(10);
  const Matrix m = synth::random_mechanism(5, rng);
  const Matrix x = synth::gaussian_samples(synth::random_covariance(5, rng), 1000, rng);
  const auto v = infer_direction_trace(x, Matrix(x * m.transpose()));
  EXPECT_NEAR(v.forward_ratio * v.backward_ratio, forward_backward_product(m), 1e-6);
}

TEST(WelchPsd, WhiteNoiseIsFlatWithUnitPower) {
  Rng rng(11);
  const auto psd = welch_psd(synth::white_noise(1 << 16, rng));
  EXPECT_EQ(psd.bins(), 128u);
  EXPECT_NEAR(contrasts::total_power(psd), 1.0, 0.05);
}

TEST(WelchPsd, SinusoidConcentratesNearItsBin) {
  const std::size_t t = 1 << 14, bin = 40;
  std::vector<double> x(t);
  for (std::size_t i = 0; i < t; ++i) x[i] = std::sin(2.0 * std::numbers::pi * double(bin) / 256.0 * double(i));
  const auto psd = welch_psd(x);
  double near = 0.0, all = 0.0;
  for (std::size_t b = 0; b < psd.bins(); ++b) {
    all += psd[b];
    if (b + 2 >= bin && b <= bin + 2) near += psd[b];
  }
  EXPECT_GT(near / all, 0.95);
}

TEST(WelchPsd, ConstantSeriesHasZeroSpectrum) {
  const auto psd = welch_psd(std::vector<double>(1024, 3.0));
  for (double v : psd.values()) EXPECT_NEAR(v, 0.0, 1e-20);
}

TEST(WelchPsd, InvalidConfig) {
  const std::vector<double> x(512, 1.0);
  EXPECT_THROW(welch_psd(x, {1024, 0.5, 0.01}), ConfigError);
  EXPECT_THROW(welch_psd(x, {100, 0.5, 0.01}), ConfigError);
  EXPECT_THROW(welch_psd(x, {256, 1.0, 0.01}), ConfigError);
}

TEST(EstimateTransfer, IdentityAndDelayAreAllpass) {
  Rng rng(12);
  const auto x = synth::white_noise(1 << 15, rng);
  const auto same = estimate_transfer_magnitude(x, x);
  for (double v : same.h2.values()) EXPECT_NEAR(v, 1.0, 0.05);
  std::vector<double> h(6, 0.0);
  h[5] = 1.0;
  const auto delayed = estimate_transfer_magnitude(x, synth::fir(x, h));
  for (double v : delayed.h2.values()) EXPECT_NEAR(v, 1.0, 0.05);
}

TEST(EstimateTransfer, MovingAverageTwo) {
  Rng rng(13);
  const auto x = synth::white_noise(1 << 16, rng);
  const auto est = estimate_transfer_magnitude(x, synth::fir(x, {1.0, 1.0}));
  const auto& h2 = est.h2;
  for (std::size_t b = 1; b + 1 < h2.bins(); ++b) {
    const double c = std::cos(std::numbers::pi * h2.frequency(b));
    const double expected = 4.0 * c * c;
    if (expected > 0.1) {
      EXPECT_NEAR(h2[b], expected, 0.1 * expected) << "bin " << b;
    }
  }
}

TEST(EstimateTransfer, ZeroInputIsDegenerate) {
  const std::vector<double> zero(512, 0.0);
  EXPECT_THROW(estimate_transfer_magnitude(zero, zero), DegenerateError);
}

TEST(SicRatio, Examples) {
  const SampledPsd flat(std::vector<double>(8, 1.0));
  const SampledPsd bumpy({0.1, 3.0, 0.5, 2.0, 0.0, 1.0, 4.0, 0.2});
  EXPECT_NEAR(sic_ratio(flat, bumpy), 1.0, 1e-14);
  EXPECT_NEAR(sic_ratio(bumpy, flat), 1.0, 1e-14);
  for (double scale : {1.0, 0.3}) {
    const SampledPsd s({2.0 * scale, 0.0, 0.0, 0.0});
    EXPECT_NEAR(sic_ratio(s, SampledPsd({2.0, 0.0, 0.0, 0.0})), 4.0, 1e-14);
  }
  EXPECT_THROW(sic_ratio(flat, SampledPsd({1.0})), ConfigError);
  EXPECT_THROW(sic_ratio(SampledPsd(std::vector<double>(8, 0.0)), flat), DegenerateError);
}

TEST(SicRatio, ShiftAverageReproducesProductOfPowers) {
  Rng rng(14);
  std::vector<double> a(64), b(64);
  for (auto& v : a) v = rng.uniform();
  for (auto& v : b) v = rng.uniform() * rng.uniform();
  const SampledPsd sxx(a), h2(b);
  const auto est = genericity::egc_monte_carlo(
      [](Rng& r) { return groups::sample_circular_shift(0.5, r); },
      [&](const groups::CircularShift& s) {
        return sic_ratio(groups::apply_shift_to_psd(sxx, s), h2) * contrasts::total_power(sxx) *
               contrasts::total_power(h2);
      },
      20000, rng);
  const double product = contrasts::total_power(sxx) * contrasts::total_power(h2);
  EXPECT_NEAR(est.mean, product, 4.0 * est.std_error);
  // Exact average over all bin shifts.
  double exact = 0.0;
  for (std::size_t k = 0; k < sxx.bins(); ++k) {
    const groups::CircularShift s(0.5, 0.5 * double(k) / double(sxx.bins()));
    exact += sic_ratio(groups::apply_shift_to_psd(sxx, s), h2);
  }
  EXPECT_NEAR(exact / double(sxx.bins()), 1.0, 1e-10);
}

TEST(InferDirectionSic, WhiteInputIsBlind) {
  Rng rng(15);
  const auto x = synth::white_noise(1 << 15, rng);
  const auto v = infer_direction_sic(TimeSeriesPair(x, synth::fir(x, {1.0, 0.5, 0.25})));
  EXPECT_NEAR(v.forward_ratio, 1.0, 0.05);
}

TEST(InferDirectionSic, SwapFlipsVerdict) {
  Rng rng(16);
  const auto x = synth::ar1(1 << 14, 0.8, rng);
  const auto y = synth::fir(x, {1.0, 1.0, 1.0});
  const auto a = infer_direction_sic(TimeSeriesPair(x, y));
  const auto b = infer_direction_sic(TimeSeriesPair(y, x));
  EXPECT_EQ(a.forward_ratio, b.backward_ratio);
  EXPECT_EQ(a.backward_ratio, b.forward_ratio);
  EXPECT_EQ(a.direction, Direction::x_causes_y);
  EXPECT_EQ(b.direction, Direction::y_causes_x);
}

TEST(TimeSeriesPair, Validation) {
  EXPECT_THROW(TimeSeriesPair(std::vector<double>(300), std::vector<double>(299)), DataError);
  EXPECT_THROW(TimeSeriesPair(std::vector<double>(100), std::vector<double>(100)), DataError);
}
