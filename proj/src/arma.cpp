// Copyright 2026 The KARMA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "karma/arma.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

#include "karma/polynomial.hpp"

namespace karma {

std::vector<double> ArmaModel::denominator() const {
  std::vector<double> d(ar.size());
  for (size_t i = 0; i < ar.size(); ++i) d[i] = -ar[i];
  return d;
}

bool ArmaModel::is_minimum_phase() const {
  return poly::is_minimum_phase(denominator()) && poly::is_minimum_phase(ma);
}

double ArmaModel::power_spectrum(double omega) const {
  const auto num = poly::evaluate(ma, omega);
  const auto den = poly::evaluate(denominator(), omega);
  return noise_variance * std::norm(num) / std::norm(den);
}

namespace {

std::vector<double> autocorrelation(std::span<const double> x, int max_lag) {
  const size_t n = x.size();
  std::vector<double> r(max_lag + 1, 0.0);
  for (int k = 0; k <= max_lag && static_cast<size_t>(k) < n; ++k) {
    double acc = 0.0;
    for (size_t m = k; m < n; ++m) acc += x[m] * x[m - k];
    r[k] = acc / static_cast<double>(n);
  }
  return r;
}

// Levinson-Durbin on r[0..p]. Returns predictor coefficients a_1..a_p and
// writes the final prediction error power. Stops early (leaving the
// remaining coefficients zero) if a reflection coefficient reaches the unit
// circle, which only happens for numerically singular Toeplitz systems.
std::vector<double> levinson(const std::vector<double>& r, int p,
                             double* error) {
  std::vector<double> a(p, 0.0);
  double e = r[0];
  std::vector<double> prev(p, 0.0);
  for (int m = 1; m <= p; ++m) {
    double acc = r[m];
    for (int i = 1; i < m; ++i) acc -= a[i - 1] * r[m - i];
    const double k = acc / e;
    if (!std::isfinite(k) || std::abs(k) >= 1.0 - 1e-12) break;
    std::copy(a.begin(), a.begin() + m - 1, prev.begin());
    a[m - 1] = k;
    for (int i = 1; i < m; ++i) a[i - 1] = prev[i - 1] - k * prev[m - i - 1];
    e *= 1.0 - k * k;
  }
  *error = e;
  return a;
}

bool all_zero(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
}

// Reflects and clips the roots of a monic z^-1 polynomial. Multiplies
// *gain_sq by |r|^2 for each reflected root.
std::vector<double> stabilize(const std::vector<double>& coeffs,
                              double max_radius, double* gain_sq,
                              bool* changed) {
  if (coeffs.empty()) return coeffs;
  auto r = poly::roots(coeffs);
  bool moved = false;
  for (auto& root : r) {
    double mag = std::abs(root);
    if (mag >= 1.0) {
      *gain_sq *= mag * mag;
      root = 1.0 / std::conj(root);
      mag = 1.0 / mag;
      moved = true;
    }
    if (mag > max_radius) {
      root *= max_radius / mag;
      moved = true;
    }
  }
  if (!moved) return coeffs;
  *changed = true;
  return poly::from_roots(r);
}

// u[t] = x[t] - sum a_i x[t-i] - sum b_j u[t-j], zero initial conditions.
std::vector<double> innovations(std::span<const double> x,
                                const std::vector<double>& a,
                                const std::vector<double>& b) {
  const int n = static_cast<int>(x.size());
  std::vector<double> u(n);
  for (int t = 0; t < n; ++t) {
    double acc = x[t];
    for (int i = 1; i <= static_cast<int>(a.size()) && i <= t; ++i) {
      acc -= a[i - 1] * x[t - i];
    }
    for (int j = 1; j <= static_cast<int>(b.size()) && j <= t; ++j) {
      acc -= b[j - 1] * u[t - j];
    }
    u[t] = acc;
  }
  return u;
}

// y = x / B(z) with zero initial conditions.
std::vector<double> inverse_ma_filter(const std::vector<double>& x,
                                      const std::vector<double>& b) {
  const int n = static_cast<int>(x.size());
  std::vector<double> y(n);
  for (int t = 0; t < n; ++t) {
    double acc = x[t];
    for (int j = 1; j <= static_cast<int>(b.size()) && j <= t; ++j) {
      acc -= b[j - 1] * y[t - j];
    }
    y[t] = acc;
  }
  return y;
}

double sum_squares(const std::vector<double>& u) {
  return std::inner_product(u.begin(), u.end(), u.begin(), 0.0);
}

// Hannan-Rissanen: long AR innovations, then least squares on lagged data
// and lagged innovations.
void hannan_rissanen(std::span<const double> x, int p, int q, int long_order,
                     std::vector<double>* a, std::vector<double>* b) {
  const int n = static_cast<int>(x.size());
  const ArmaModel long_ar = estimate_ar(x, long_order);
  const std::vector<double> e = innovations(x, long_ar.ar, {});

  const int start = std::max({long_order, p, q});
  const int rows = n - start;
  Eigen::MatrixXd reg(rows, p + q);
  Eigen::VectorXd target(rows);
  for (int r = 0; r < rows; ++r) {
    const int t = start + r;
    for (int i = 1; i <= p; ++i) reg(r, i - 1) = x[t - i];
    for (int j = 1; j <= q; ++j) reg(r, p + j - 1) = e[t - j];
    target[r] = x[t];
  }
  const Eigen::VectorXd theta = reg.colPivHouseholderQr().solve(target);
  a->assign(theta.data(), theta.data() + p);
  b->assign(theta.data() + p, theta.data() + p + q);
}

}  // namespace

ArmaModel estimate_ar(std::span<const double> frame, int p) {
  if (p < 1) throw std::invalid_argument("AR order must be positive");
  if (static_cast<int>(frame.size()) <= p) {
    throw std::invalid_argument("frame length must exceed the AR order");
  }
  ArmaModel m;
  m.ar.assign(p, 0.0);
  const std::vector<double> r = autocorrelation(frame, p);
  if (r[0] <= 0.0) {
    m.zero_energy = true;
    return m;
  }
  double error = 0.0;
  m.ar = levinson(r, p, &error);
  m.noise_variance = std::max(0.0, error);
  return m;
}

ArmaFit fit_arma(std::span<const double> frame, int p, int q,
                 const ArmaOptions& options) {
  if (q < 0) throw std::invalid_argument("MA order must be nonnegative");
  if (q == 0) return ArmaFit{estimate_ar(frame, p), {}};
  if (p < 1) throw std::invalid_argument("AR order must be positive");
  const int n = static_cast<int>(frame.size());
  if (n <= p + q + 1) {
    throw std::invalid_argument("frame length must exceed p + q + 1");
  }

  ArmaFit fit;
  if (all_zero(frame)) {
    fit.model.ar.assign(p, 0.0);
    fit.model.ma.assign(q, 0.0);
    fit.model.zero_energy = true;
    return fit;
  }

  int long_order = options.long_ar_order > 0 ? options.long_ar_order
                                             : std::max(2 * (p + q), 10);
  // Leave enough rows for the regression.
  long_order = std::min(long_order, std::max(1, (n - p - q - 1) / 2));

  std::vector<double> a, b;
  hannan_rissanen(frame, p, q, long_order, &a, &b);
  double unused = 1.0;
  bool changed = false;
  b = stabilize(b, options.max_root_radius, &unused, &changed);

  std::vector<double> u = innovations(frame, a, b);
  double cost = sum_squares(u);
  const std::vector<double> x(frame.begin(), frame.end());

  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    fit.objective.push_back(cost);
    // du/da_i = -(x/B)[t-i], du/db_j = -(u/B)[t-j].
    const std::vector<double> xf = inverse_ma_filter(x, b);
    const std::vector<double> uf = inverse_ma_filter(u, b);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, p + q);
    for (int t = 0; t < n; ++t) {
      for (int i = 1; i <= p && i <= t; ++i) jac(t, i - 1) = -xf[t - i];
      for (int j = 1; j <= q && j <= t; ++j) jac(t, p + j - 1) = -uf[t - j];
    }
    const Eigen::Map<const Eigen::VectorXd> resid(u.data(), n);
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-resid);

    // Backtrack until the objective decreases with an invertible MA part.
    bool improved = false;
    double scale = 1.0;
    for (int half = 0; half < 30; ++half, scale *= 0.5) {
      std::vector<double> a_try(a), b_try(b);
      for (int i = 0; i < p; ++i) a_try[i] += scale * step[i];
      for (int j = 0; j < q; ++j) b_try[j] += scale * step[p + j];
      if (!poly::is_minimum_phase(b_try)) continue;
      std::vector<double> u_try = innovations(frame, a_try, b_try);
      const double cost_try = sum_squares(u_try);
      if (cost_try < cost) {
        const double decrease = (cost - cost_try) / std::max(cost, 1e-300);
        a = std::move(a_try);
        b = std::move(b_try);
        u = std::move(u_try);
        cost = cost_try;
        improved = true;
        if (decrease < options.relative_tolerance) converged = true;
        break;
      }
    }
    if (!improved) converged = true;
    if (converged) {
      ++iter;
      break;
    }
  }
  fit.objective.push_back(cost);

  fit.model.ar = std::move(a);
  fit.model.ma = std::move(b);
  fit.model.noise_variance = cost / n;
  fit.model.iterations = iter;
  fit.model.converged = converged;
  fit.model = enforce_minimum_phase(fit.model, options.max_root_radius);
  return fit;
}

ArmaModel enforce_minimum_phase(const ArmaModel& m, double max_radius) {
  double pole_gain = 1.0;
  double zero_gain = 1.0;
  bool changed = false;
  std::vector<double> den =
      stabilize(m.denominator(), max_radius, &pole_gain, &changed);
  std::vector<double> num = stabilize(m.ma, max_radius, &zero_gain, &changed);
  if (!changed) return m;
  ArmaModel out = m;
  out.ar.resize(den.size());
  for (size_t i = 0; i < den.size(); ++i) out.ar[i] = -den[i];
  out.ma = std::move(num);
  out.noise_variance = m.noise_variance * zero_gain / pole_gain;
  return out;
}

}  // namespace karma
