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

// Cepstral observation maps: ARMA coefficients to cepstrum, resonance
// parameters to cepstrum with its Jacobian, and the nonparametric real
// cepstrum of a frame.

#ifndef KARMA_CEPSTRUM_HPP_
#define KARMA_CEPSTRUM_HPP_

#include <Eigen/Core>
#include <span>
#include <vector>

#include "karma/arma.hpp"

namespace karma {

// Cepstral coefficients C_1..C_N; C_0 is never stored. coeffs[n - 1] holds
// C_n.
struct CepstralVector {
  Eigen::VectorXd coeffs;

  int order() const { return static_cast<int>(coeffs.size()); }
  double operator()(int n) const { return coeffs[n - 1]; }
};

// I formants and J antiformants, each a (frequency, bandwidth) pair in Hz.
// The packed layout (f_1..f_I, b_1..b_I, f'_1..f'_J, b'_1..b'_J) is the
// tracker's state vector.
struct ResonanceState {
  std::vector<double> formant_freqs;
  std::vector<double> formant_bws;
  std::vector<double> antiformant_freqs;
  std::vector<double> antiformant_bws;
  double sample_rate_hz = 0.0;

  int num_formants() const { return static_cast<int>(formant_freqs.size()); }
  int num_antiformants() const {
    return static_cast<int>(antiformant_freqs.size());
  }
  int dimension() const { return 2 * (num_formants() + num_antiformants()); }

  Eigen::VectorXd pack() const;
  static ResonanceState unpack(const Eigen::Ref<const Eigen::VectorXd>& x,
                               int formants, int antiformants,
                               double sample_rate_hz);
  // Throws std::invalid_argument unless 0 < f < fs/2 and b > 0 everywhere.
  void validate() const;
};

// Layout helpers for the packed state vector.
struct StateLayout {
  int formants = 0;
  int antiformants = 0;

  int dimension() const { return 2 * (formants + antiformants); }
  int formant_freq(int i) const { return i; }
  int formant_bw(int i) const { return formants + i; }
  int antiformant_freq(int j) const { return 2 * formants + j; }
  int antiformant_bw(int j) const { return 2 * formants + antiformants + j; }
  bool is_frequency(int k) const {
    return k < formants ||
           (k >= 2 * formants && k < 2 * formants + antiformants);
  }
};

// Recursions for log(1/A(z)) and log(1/B(z)), differenced. The MA
// recursion runs on -b_j so that the result is the series of log T(z).
// Throws std::domain_error("cepstrum undefined: reflect roots first") for
// non-minimum-phase input.
CepstralVector arma_to_cepstrum(const ArmaModel& m, int order);

// C_n = (2/n) sum_i exp(-pi n b_i/fs) cos(2 pi n f_i/fs)
//     - (2/n) sum_j exp(-pi n b'_j/fs) cos(2 pi n f'_j/fs).
CepstralVector state_to_cepstrum(const ResonanceState& x, int order);

// Same map on a packed state. `active` (optional, one entry per track in
// formant-then-antiformant order) drops inactive tracks from the sum.
Eigen::VectorXd cepstrum_of_state(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const StateLayout& layout, double fs,
                                  int order,
                                  const std::vector<bool>* active = nullptr);

// N x (2I + 2J) Jacobian in the packed-state column order.
Eigen::MatrixXd cepstrum_jacobian(const ResonanceState& x, int order);
Eigen::MatrixXd cepstrum_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const StateLayout& layout, double fs,
                                  int order,
                                  const std::vector<bool>* active = nullptr);

// Inverse FFT of the log magnitude spectrum. The FFT size is the smallest
// power of two >= 4x the frame length and the log argument is floored at
// 1e-12 of the spectral maximum. Coefficients n >= 1 are doubled so that,
// for minimum-phase frames, they estimate the complex cepstrum.
// Throws std::domain_error("undefined log spectrum") on all-zero frames.
CepstralVector real_cepstrum(std::span<const double> frame, int order);

}  // namespace karma

#endif  // KARMA_CEPSTRUM_HPP_
