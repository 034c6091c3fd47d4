#pragma once

// Gaussian fits of measured signal spectra and spectral overlap bounds.
//
// The fitted curve is an intensity spectrum I(l) = A exp(-(l - l0)^2 / (2 s^2)).
// The amplitude wavefunction is taken as sqrt(I), normalized, so the overlap
// of two fits is gamma = |<psi_a|psi_b>|^2 with the closed form
//   gamma = 2 s_a s_b / (s_a^2 + s_b^2) * exp(-(l0_a - l0_b)^2 / (2 (s_a^2 + s_b^2))).

#include <array>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "muxsim/errors.hpp"
#include "muxsim/nelder_mead.hpp"

namespace muxsim {

inline const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::log(2.0));

struct SpectrumModel {
  double center_nm = 0.0;
  double fwhm_nm = 1.0;
  double amplitude = 1.0;

  double sigma_nm() const { return fwhm_nm / kFwhmPerSigma; }
  double intensity(double wavelength_nm) const {
    const double u = (wavelength_nm - center_nm) / sigma_nm();
    return amplitude * std::exp(-0.5 * u * u);
  }
};

struct SpectrumSample {
  double wavelength_nm = 0.0;
  double counts = 0.0;
};

struct SpectrumFit {
  SpectrumModel model;
  double residual_norm = 0.0;
};

namespace detail {

// Solve a 3x3 linear system by Gaussian elimination with partial pivoting.
inline bool solve3(std::array<std::array<double, 4>, 3> m, std::array<double, 3>& out) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (std::abs(m[piv][c]) < 1e-300) return false;
    std::swap(m[c], m[piv]);
    for (int r = c + 1; r < 3; ++r) {
      const double k = m[r][c] / m[c][c];
      for (int j = c; j < 4; ++j) m[r][j] -= k * m[c][j];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = m[r][3];
    for (int j = r + 1; j < 3; ++j) s -= m[r][j] * out[j];
    out[r] = s / m[r][r];
  }
  return true;
}

inline double residual_sq(const SpectrumModel& m, const std::vector<SpectrumSample>& s) {
  double acc = 0.0;
  for (const auto& p : s) {
    const double r = m.intensity(p.wavelength_nm) - p.counts;
    acc += r * r;
  }
  return acc;
}

}  // namespace detail

/// Least-squares Gaussian fit. A parabola fitted to log(counts) over the peak
/// region seeds a simplex refinement of (center, log sigma, log amplitude).
inline SpectrumFit fit_gaussian(const std::vector<SpectrumSample>& samples) {
  std::set<double> distinct;
  double peak = 0.0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.wavelength_nm) || !std::isfinite(s.counts)) throw fit_error("non-finite spectrum sample");
    if (s.counts < 0.0) throw fit_error("negative counts in spectrum");
    distinct.insert(s.wavelength_nm);
    peak = std::max(peak, s.counts);
  }
  if (distinct.size() < 4) throw fit_error("need at least 4 distinct wavelengths");
  if (!(peak > 0.0)) throw fit_error("spectrum has no counts");

  // Log-parabola on points above 20% of the peak, weighted by counts^2 (log-space variance ~ 1/counts^2).
  std::array<std::array<double, 4>, 3> normal{};
  std::set<double> used;
  double l_ref = 0.0;
  double w_sum = 0.0;
  for (const auto& s : samples)
    if (s.counts > 0.2 * peak) {
      l_ref += s.counts * s.wavelength_nm;
      w_sum += s.counts;
    }
  l_ref /= w_sum;
  for (const auto& s : samples) {
    if (s.counts <= 0.2 * peak) continue;
    used.insert(s.wavelength_nm);
    const double u = s.wavelength_nm - l_ref;
    const double w = s.counts * s.counts;
    const double basis[3] = {1.0, u, u * u};
    const double y = std::log(s.counts);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) normal[i][j] += w * basis[i] * basis[j];
      normal[i][3] += w * basis[i] * y;
    }
  }
  std::array<double, 3> coef{};
  if (used.size() < 3 || !detail::solve3(normal, coef) || !(coef[2] < 0.0))
    throw fit_error("spectrum has no Gaussian peak (flat, monotone or collinear data)");

  const double sigma0 = std::sqrt(-0.5 / coef[2]);
  const double center0 = l_ref - coef[1] / (2.0 * coef[2]);
  const double amp0 = std::exp(coef[0] - coef[1] * coef[1] / (4.0 * coef[2]));
  if (center0 < *distinct.begin() || center0 > *distinct.rbegin())
    throw fit_error("spectrum peak lies outside the sampled range");

  auto to_model = [](const std::vector<double>& x) {
    SpectrumModel m;
    m.center_nm = x[0];
    m.fwhm_nm = std::exp(x[1]) * kFwhmPerSigma;
    m.amplitude = std::exp(x[2]);
    return m;
  };
  const double scale = peak * peak * static_cast<double>(samples.size());
  auto objective = [&](const std::vector<double>& x) { return detail::residual_sq(to_model(x), samples) / scale; };

  NelderMeadOptions opt;
  opt.initial_step = {0.05 * sigma0, 0.05, 0.05};
  opt.x_tolerance = 1e-13;
  opt.f_tolerance = 1e-15;
  std::vector<double> x = {center0, std::log(sigma0), std::log(amp0)};
  double best = objective(x);
  for (int round = 0; round < 4; ++round) {
    const auto r = nelder_mead(objective, x, opt);
    if (!(r.value < best)) break;
    best = r.value;
    x = r.x;
    opt.initial_step = {0.01 * std::exp(x[1]), 0.01, 0.01};
  }

  SpectrumFit fit;
  fit.model = to_model(x);
  if (!std::isfinite(fit.model.center_nm) || !(fit.model.fwhm_nm > 0.0)) throw fit_error("Gaussian fit diverged");
  if (fit.model.center_nm < *distinct.begin() || fit.model.center_nm > *distinct.rbegin())
    throw fit_error("spectrum peak lies outside the sampled range");
  fit.residual_norm = std::sqrt(detail::residual_sq(fit.model, samples));
  return fit;
}

inline double overlap_gamma(const SpectrumModel& a, const SpectrumModel& b) {
  if (!(a.fwhm_nm > 0.0) || !(b.fwhm_nm > 0.0)) throw domain_error("fwhm must be positive");
  const double sa = a.sigma_nm(), sb = b.sigma_nm();
  const double ss = sa * sa + sb * sb;
  const double d = a.center_nm - b.center_nm;
  const double g = 2.0 * sa * sb / ss * std::exp(-d * d / (2.0 * ss));
  return std::min(1.0, std::max(0.0, g));
}

/// Symmetric overlap matrix with unit diagonal.
inline std::vector<std::vector<double>> indistinguishability_table(const std::vector<SpectrumModel>& models) {
  const std::size_t n = models.size();
  std::vector<std::vector<double>> g(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) g[i][j] = g[j][i] = overlap_gamma(models[i], models[j]);
  return g;
}

}  // namespace muxsim
