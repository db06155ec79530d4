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

// Per-frame AR and ARMA model fitting.
//
// Sign conventions follow the transfer function
//
//            1 + sum_j ma[j] z^-j
//   T(z) = ------------------------
//            1 - sum_i ar[i] z^-i
//
// so the process is s[m] = sum_i ar[i] s[m-i] + sum_j ma[j] u[m-j] + u[m].

#ifndef KARMA_ARMA_HPP_
#define KARMA_ARMA_HPP_

#include <span>
#include <vector>

namespace karma {

struct ArmaModel {
  std::vector<double> ar;  // a_1..a_p
  std::vector<double> ma;  // b_1..b_q
  double noise_variance = 0.0;

  // Set when the frame had no energy; coefficients are then all zero.
  bool zero_energy = false;
  // Cleared when an iterative fit stopped at its iteration limit.
  bool converged = true;
  int iterations = 0;

  int p() const { return static_cast<int>(ar.size()); }
  int q() const { return static_cast<int>(ma.size()); }

  // Trailing coefficients of the denominator 1 - sum a_i z^-i.
  std::vector<double> denominator() const;
  // Trailing coefficients of the numerator 1 + sum b_j z^-j.
  std::vector<double> numerator() const { return ma; }

  bool is_minimum_phase() const;

  // noise_variance * |T(e^{j omega})|^2.
  double power_spectrum(double omega) const;
};

// Autocorrelation-method linear prediction solved by Levinson-Durbin.
// Biased autocorrelation estimates make the result minimum phase.
ArmaModel estimate_ar(std::span<const double> frame, int p);

struct ArmaOptions {
  int max_iterations = 50;
  double relative_tolerance = 1e-8;
  // Order of the long AR model used to estimate innovations; 0 selects
  // max(2 (p + q), 10), capped by the frame length.
  int long_ar_order = 0;
  double max_root_radius = 1.0 - 1e-6;
};

struct ArmaFit {
  ArmaModel model;
  // Prediction-error sum of squares at the start of each Gauss-Newton
  // iteration, followed by the final value.
  std::vector<double> objective;
};

// Prediction-error ARMA fit: Hannan-Rissanen initialization followed by
// damped Gauss-Newton refinement. Both polynomials are reflected into the
// unit circle afterwards. q == 0 defers to estimate_ar.
ArmaFit fit_arma(std::span<const double> frame, int p, int q,
                 const ArmaOptions& options = {});

inline ArmaModel estimate_arma(std::span<const double> frame, int p, int q,
                               const ArmaOptions& options = {}) {
  return fit_arma(frame, p, q, options).model;
}

// Reflects every pole and zero with |r| >= 1 to 1/conj(r) and then pulls any
// root beyond max_radius onto it. noise_variance is rescaled so the power
// spectrum is unchanged for pure reflections. Models with nothing to move
// are returned as is.
ArmaModel enforce_minimum_phase(const ArmaModel& m,
                                double max_radius = 1.0 - 1e-12);

}  // namespace karma

#endif  // KARMA_ARMA_HPP_
