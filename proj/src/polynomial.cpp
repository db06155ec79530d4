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

#include "karma/polynomial.hpp"

#include <Eigen/Core>
#include <cmath>
#include <unsupported/Eigen/Polynomials>

namespace karma::poly {

std::vector<std::complex<double>> roots(std::span<const double> coeffs) {
  const int n = static_cast<int>(coeffs.size());
  if (n == 0) return {};
  // z^n + c1 z^(n-1) + ... + cn, coefficients in increasing degree.
  Eigen::VectorXd p(n + 1);
  for (int k = 0; k < n; ++k) p[k] = coeffs[n - 1 - k];
  p[n] = 1.0;
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(p);
  const auto& r = solver.roots();
  return std::vector<std::complex<double>>(r.data(), r.data() + r.size());
}

std::vector<double> from_roots(std::span<const std::complex<double>> roots) {
  std::vector<std::complex<double>> c(roots.size() + 1, 0.0);
  c[0] = 1.0;
  for (size_t k = 0; k < roots.size(); ++k) {
    for (size_t i = k + 1; i >= 1; --i) c[i] -= roots[k] * c[i - 1];
  }
  std::vector<double> out(roots.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = c[i + 1].real();
  return out;
}

bool is_minimum_phase(std::span<const double> coeffs) {
  std::vector<double> c(coeffs.begin(), coeffs.end());
  for (int m = static_cast<int>(c.size()); m >= 1; --m) {
    const double k = c[m - 1];
    if (!std::isfinite(k) || std::abs(k) >= 1.0) return false;
    const double denom = 1.0 - k * k;
    std::vector<double> next(m - 1);
    for (int i = 1; i < m; ++i) next[i - 1] = (c[i - 1] - k * c[m - i - 1]) / denom;
    c = std::move(next);
  }
  return true;
}

std::complex<double> evaluate(std::span<const double> coeffs, double omega) {
  std::complex<double> acc = 1.0;
  for (size_t k = 0; k < coeffs.size(); ++k) {
    acc += coeffs[k] * std::polar(1.0, -omega * static_cast<double>(k + 1));
  }
  return acc;
}

}  // namespace karma::poly
