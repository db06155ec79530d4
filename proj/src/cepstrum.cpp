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

#include "karma/cepstrum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <unsupported/Eigen/FFT>

#include "karma/polynomial.hpp"

namespace karma {

namespace {

constexpr double kPi = std::numbers::pi;

// Cepstrum of 1/(1 - sum c_k z^-k) for n = 1..order.
Eigen::VectorXd all_pole_cepstrum(const std::vector<double>& c, int order) {
  const int p = static_cast<int>(c.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(order);
  for (int n = 1; n <= order; ++n) {
    double acc = n <= p ? c[n - 1] : 0.0;
    for (int i = std::max(1, n - p); i < n; ++i) {
      acc += (static_cast<double>(i) / n) * c[n - i - 1] * out[i - 1];
    }
    out[n - 1] = acc;
  }
  return out;
}

}  // namespace

Eigen::VectorXd ResonanceState::pack() const {
  const StateLayout layout{num_formants(), num_antiformants()};
  Eigen::VectorXd x(layout.dimension());
  for (int i = 0; i < layout.formants; ++i) {
    x[layout.formant_freq(i)] = formant_freqs[i];
    x[layout.formant_bw(i)] = formant_bws[i];
  }
  for (int j = 0; j < layout.antiformants; ++j) {
    x[layout.antiformant_freq(j)] = antiformant_freqs[j];
    x[layout.antiformant_bw(j)] = antiformant_bws[j];
  }
  return x;
}

ResonanceState ResonanceState::unpack(
    const Eigen::Ref<const Eigen::VectorXd>& x, int formants, int antiformants,
    double sample_rate_hz) {
  const StateLayout layout{formants, antiformants};
  if (x.size() != layout.dimension()) {
    throw std::invalid_argument("state dimension mismatch");
  }
  ResonanceState s;
  s.sample_rate_hz = sample_rate_hz;
  for (int i = 0; i < formants; ++i) {
    s.formant_freqs.push_back(x[layout.formant_freq(i)]);
    s.formant_bws.push_back(x[layout.formant_bw(i)]);
  }
  for (int j = 0; j < antiformants; ++j) {
    s.antiformant_freqs.push_back(x[layout.antiformant_freq(j)]);
    s.antiformant_bws.push_back(x[layout.antiformant_bw(j)]);
  }
  return s;
}

void ResonanceState::validate() const {
  if (!(sample_rate_hz > 0.0)) {
    throw std::invalid_argument("sample rate must be positive");
  }
  if (formant_bws.size() != formant_freqs.size() ||
      antiformant_bws.size() != antiformant_freqs.size()) {
    throw std::invalid_argument("frequency/bandwidth count mismatch");
  }
  const double nyquist = 0.5 * sample_rate_hz;
  auto check = [nyquist](const std::vector<double>& f,
                         const std::vector<double>& b) {
    for (size_t k = 0; k < f.size(); ++k) {
      if (!(f[k] > 0.0 && f[k] < nyquist)) {
        throw std::invalid_argument("resonance frequency outside (0, fs/2)");
      }
      if (!(b[k] > 0.0)) {
        throw std::invalid_argument("resonance bandwidth must be positive");
      }
    }
  };
  check(formant_freqs, formant_bws);
  check(antiformant_freqs, antiformant_bws);
}

CepstralVector arma_to_cepstrum(const ArmaModel& m, int order) {
  if (order < 1) throw std::invalid_argument("cepstral order must be >= 1");
  if (!m.is_minimum_phase()) {
    throw std::domain_error("cepstrum undefined: reflect roots first");
  }
  std::vector<double> neg_ma(m.ma.size());
  for (size_t j = 0; j < m.ma.size(); ++j) neg_ma[j] = -m.ma[j];
  return CepstralVector{all_pole_cepstrum(m.ar, order) -
                        all_pole_cepstrum(neg_ma, order)};
}

Eigen::VectorXd cepstrum_of_state(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const StateLayout& layout, double fs,
                                  int order, const std::vector<bool>* active) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(order);
  auto add = [&](double f, double b, double sign) {
    const double decay = std::exp(-kPi * b / fs);
    const double angle = 2.0 * kPi * f / fs;
    double radius_n = 1.0;
    for (int n = 1; n <= order; ++n) {
      radius_n *= decay;
      c[n - 1] += sign * (2.0 / n) * radius_n * std::cos(angle * n);
    }
  };
  for (int i = 0; i < layout.formants; ++i) {
    if (active && !(*active)[i]) continue;
    add(x[layout.formant_freq(i)], x[layout.formant_bw(i)], 1.0);
  }
  for (int j = 0; j < layout.antiformants; ++j) {
    if (active && !(*active)[layout.formants + j]) continue;
    add(x[layout.antiformant_freq(j)], x[layout.antiformant_bw(j)], -1.0);
  }
  return c;
}

CepstralVector state_to_cepstrum(const ResonanceState& x, int order) {
  if (order < 1) throw std::invalid_argument("cepstral order must be >= 1");
  x.validate();
  const StateLayout layout{x.num_formants(), x.num_antiformants()};
  return CepstralVector{
      cepstrum_of_state(x.pack(), layout, x.sample_rate_hz, order)};
}

Eigen::MatrixXd cepstrum_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const StateLayout& layout, double fs,
                                  int order, const std::vector<bool>* active) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(order, layout.dimension());
  auto fill = [&](int col_f, int col_b, double sign) {
    const double f = x[col_f];
    const double b = x[col_b];
    const double decay = std::exp(-kPi * b / fs);
    const double angle = 2.0 * kPi * f / fs;
    double radius_n = 1.0;
    for (int n = 1; n <= order; ++n) {
      radius_n *= decay;
      jac(n - 1, col_f) = -sign * (4.0 * kPi / fs) * radius_n *
                          std::sin(angle * n);
      jac(n - 1, col_b) = -sign * (2.0 * kPi / fs) * radius_n *
                          std::cos(angle * n);
    }
  };
  for (int i = 0; i < layout.formants; ++i) {
    if (active && !(*active)[i]) continue;
    fill(layout.formant_freq(i), layout.formant_bw(i), 1.0);
  }
  for (int j = 0; j < layout.antiformants; ++j) {
    if (active && !(*active)[layout.formants + j]) continue;
    fill(layout.antiformant_freq(j), layout.antiformant_bw(j), -1.0);
  }
  return jac;
}

Eigen::MatrixXd cepstrum_jacobian(const ResonanceState& x, int order) {
  const StateLayout layout{x.num_formants(), x.num_antiformants()};
  return cepstrum_jacobian(x.pack(), layout, x.sample_rate_hz, order);
}

CepstralVector real_cepstrum(std::span<const double> frame, int order) {
  if (order < 1) throw std::invalid_argument("cepstral order must be >= 1");
  if (std::all_of(frame.begin(), frame.end(),
                  [](double v) { return v == 0.0; })) {
    throw std::domain_error("undefined log spectrum");
  }
  size_t nfft = 1;
  while (nfft < 4 * frame.size()) nfft <<= 1;
  while (nfft < static_cast<size_t>(2 * order + 2)) nfft <<= 1;

  std::vector<double> padded(nfft, 0.0);
  std::copy(frame.begin(), frame.end(), padded.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, padded);

  double peak = 0.0;
  for (const auto& s : spectrum) peak = std::max(peak, std::abs(s));
  const double floor = 1e-12 * peak;
  std::vector<std::complex<double>> log_mag(nfft);
  for (size_t k = 0; k < nfft; ++k) {
    log_mag[k] = std::log(std::max(std::abs(spectrum[k]), floor));
  }
  std::vector<std::complex<double>> cep;
  fft.inv(cep, log_mag);

  CepstralVector out{Eigen::VectorXd(order)};
  for (int n = 1; n <= order; ++n) out.coeffs[n - 1] = 2.0 * cep[n].real();
  return out;
}

}  // namespace karma
