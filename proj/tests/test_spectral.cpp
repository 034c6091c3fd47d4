#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "muxsim/spectral.hpp"

using namespace muxsim;

namespace {

// Normalized amplitude overlap |<psi_a|psi_b>|^2 with psi = sqrt(intensity).
double overlap_by_quadrature(const SpectrumModel& a, const SpectrumModel& b) {
  using boost::math::quadrature::gauss_kronrod;
  const double inf = std::numeric_limits<double>::infinity();
  auto integrate = [&](auto f) { return gauss_kronrod<double, 61>::integrate(f, -inf, inf, 15, 1e-14); };
  const double cross = integrate([&](double l) { return std::sqrt(a.intensity(l) * b.intensity(l)); });
  const double na = integrate([&](double l) { return a.intensity(l); });
  const double nb = integrate([&](double l) { return b.intensity(l); });
  return cross * cross / (na * nb);
}

std::vector<SpectrumSample> sampled(const SpectrumModel& m, double noise, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, noise);
  std::vector<SpectrumSample> out;
  for (double l = m.center_nm - 3 * m.fwhm_nm; l <= m.center_nm + 3 * m.fwhm_nm; l += m.fwhm_nm / 20)
    out.push_back({l, std::max(0.0, m.intensity(l) + n(gen) * m.amplitude)});
  return out;
}

}  // namespace

TEST(Overlap, ClosedFormMatchesQuadrature) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> c(1549.0, 1551.0), w(0.3, 2.0), a(0.1, 10.0);
  for (int k = 0; k < 50; ++k) {
    // Shifted into the origin for the integrator; the overlap is translation invariant.
    const double shift = c(gen);
    SpectrumModel x{c(gen) - shift, w(gen), a(gen)}, y{c(gen) - shift, w(gen), a(gen)};
    EXPECT_NEAR(overlap_gamma(x, y), overlap_by_quadrature(x, y), 1e-8);
  }
}

TEST(Overlap, FrozenValues) {
  const SpectrumModel a{0.0, kFwhmPerSigma, 1.0}, b{1.0, kFwhmPerSigma, 3.0};
  // Equal unit widths one sigma apart.
  EXPECT_NEAR(overlap_gamma(a, b), std::exp(-0.25), 1e-15);
  EXPECT_DOUBLE_EQ(overlap_gamma(a, a), 1.0);
  const SpectrumModel wide{0.0, 2 * kFwhmPerSigma, 1.0};
  EXPECT_NEAR(overlap_gamma(a, wide), 0.8, 1e-15);
  EXPECT_THROW(overlap_gamma(a, SpectrumModel{0.0, 0.0, 1.0}), domain_error);
}

TEST(Overlap, SymmetricAndBounded) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> c(-3, 3), w(0.1, 5);
  for (int k = 0; k < 1000; ++k) {
    SpectrumModel x{c(gen), w(gen), 1}, y{c(gen), w(gen), 1};
    const double g = overlap_gamma(x, y);
    EXPECT_EQ(g, overlap_gamma(y, x));
    EXPECT_GE(g, 0.0);
    EXPECT_LE(g, 1.0);
  }
}

TEST(GaussianFit, RecoversNoiselessParameters) {
  const SpectrumModel truth{1550.3, 0.9, 1234.0};
  const auto fit = fit_gaussian(sampled(truth, 0.0, 1));
  EXPECT_NEAR(fit.model.center_nm, truth.center_nm, 1e-7);
  EXPECT_NEAR(fit.model.fwhm_nm, truth.fwhm_nm, 1e-7);
  EXPECT_NEAR(fit.model.amplitude, truth.amplitude, 1e-6 * truth.amplitude);
  EXPECT_LT(fit.residual_norm, 1e-6 * truth.amplitude);
}

TEST(GaussianFit, NoisySpectraGiveNearUnitOverlap) {
  const SpectrumModel truth{1550.0, 1.0, 500.0};
  std::vector<SpectrumModel> fits;
  for (std::uint64_t s = 1; s <= 8; ++s) fits.push_back(fit_gaussian(sampled(truth, 0.02, s)).model);
  const auto table = indistinguishability_table(fits);
  double mean = 0;
  int n = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    EXPECT_EQ(table[i][i], 1.0);
    for (std::size_t j = i + 1; j < table.size(); ++j) {
      EXPECT_EQ(table[i][j], table[j][i]);
      mean += table[i][j];
      ++n;
    }
  }
  EXPECT_GT(mean / n, 0.98);
}

TEST(GaussianFit, IdenticalSpectraOverlapExactlyOne) {
  const auto s = sampled({1549.7, 1.2, 80.0}, 0.05, 4);
  const auto a = fit_gaussian(s).model, b = fit_gaussian(s).model;
  EXPECT_EQ(overlap_gamma(a, b), 1.0);
}

TEST(GaussianFit, RejectsDegenerateSpectra) {
  EXPECT_THROW(fit_gaussian({{1, 1}, {2, 2}, {3, 1}}), fit_error);
  EXPECT_THROW(fit_gaussian({{1, 0}, {2, 0}, {3, 0}, {4, 0}}), fit_error);
  EXPECT_THROW(fit_gaussian({{1, 1}, {2, 1}, {3, 1}, {4, 1}}), fit_error);
  EXPECT_THROW(fit_gaussian({{1, 1}, {2, 2}, {3, 3}, {4, 4}}), fit_error);
  EXPECT_THROW(fit_gaussian({{1, 1}, {2, -2}, {3, 3}, {4, 4}}), fit_error);
  EXPECT_THROW(fit_gaussian({{1, 1}, {2, NAN}, {3, 3}, {4, 4}}), fit_error);
}
