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

#include "karma/particle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace karma {

namespace {

// Symmetric square root of a PSD matrix; handles exact zeros from frozen
// entries where a Cholesky factor would not exist.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
  return m.completeOrthogonalDecomposition().pseudoInverse();
}

}  // namespace

std::vector<int> systematic_resample(const Eigen::VectorXd& weights,
                                     double u0) {
  const int n = static_cast<int>(weights.size());
  std::vector<int> parents(n);
  const double step = 1.0 / n;
  double cumulative = weights[0];
  int i = 0;
  for (int m = 0; m < n; ++m) {
    const double u = u0 + m * step;
    while (u > cumulative && i < n - 1) {
      ++i;
      cumulative += weights[i];
    }
    parents[m] = i;
  }
  return parents;
}

TrackResult pf_track(const std::vector<CepstralVector>& obs,
                     const TrackerParams& params, const ObservationModel& model,
                     const ActivityMask& mask, int n_particles, uint64_t seed) {
  params.validate();
  if (n_particles < 10) throw std::invalid_argument("need at least 10 particles");
  const int frames = static_cast<int>(obs.size());
  if (frames < 1) throw std::invalid_argument("no observations");
  if (mask.size() != 0 && mask.size() != frames) {
    throw std::invalid_argument("activity mask length mismatch");
  }
  const int d = params.state_dim();
  const int tracks = params.layout.dimension() == d
                         ? params.layout.formants + params.layout.antiformants
                         : d;
  const std::vector<bool> all_active(tracks, true);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0 / n_particles);
  auto draw = [&](int rows) {
    Eigen::MatrixXd z(rows, d);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < d; ++c) z(r, c) = normal(rng);
    }
    return z;
  };

  ParticleEnsemble ens;
  ens.rng_seed = seed;
  ens.particles = draw(n_particles) * psd_sqrt(params.initial_cov);
  ens.particles.rowwise() += params.initial_mean.transpose();
  ens.weights = Eigen::VectorXd::Constant(n_particles, 1.0 / n_particles);

  const Eigen::MatrixXd q_sqrt = psd_sqrt(params.process_noise);
  const Eigen::MatrixXd r_inv = pseudo_inverse(params.observation_noise);
  const Eigen::MatrixXd f_t = params.transition.transpose();

  TrackResult out;
  out.layout = params.layout;
  out.order = params.obs_dim();
  out.sample_rate_hz = params.sample_rate_hz;

  Eigen::VectorXd log_w(n_particles);
  for (int t = 0; t < frames; ++t) {
    ens.particles = ens.particles * f_t + draw(n_particles) * q_sqrt;

    const bool speech = mask.size() == 0 || mask.flags[t];
    if (speech) {
      for (int k = 0; k < n_particles; ++k) {
        const Eigen::VectorXd x = ens.particles.row(k).transpose();
        const Eigen::VectorXd e = obs[t].coeffs - model.h(x, all_active);
        log_w[k] = std::log(ens.weights[k]) - 0.5 * e.dot(r_inv * e);
      }
      const double peak = log_w.maxCoeff();
      if (!std::isfinite(peak)) {
        ens.weights.setConstant(1.0 / n_particles);
        out.warnings.push_back("frame " + std::to_string(t) +
                               ": particle weights underflowed; reset");
      } else {
        ens.weights = (log_w.array() - peak).exp();
        const double total = ens.weights.sum();
        if (!(total > 0.0) || !std::isfinite(total)) {
          ens.weights.setConstant(1.0 / n_particles);
          out.warnings.push_back("frame " + std::to_string(t) +
                                 ": particle weights underflowed; reset");
        } else {
          ens.weights /= total;
        }
      }
    }

    const Eigen::VectorXd mean = ens.particles.transpose() * ens.weights;
    const Eigen::MatrixXd centered = ens.particles.rowwise() - mean.transpose();
    Eigen::MatrixXd cov =
        centered.transpose() * ens.weights.asDiagonal() * centered;
    cov = 0.5 * (cov + cov.transpose()).eval();
    out.means.push_back(mean);
    out.covariances.push_back(std::move(cov));
    out.speech.push_back(speech);
    out.track_active.push_back(all_active);

    if (ens.effective_size() < 0.5 * n_particles) {
      const std::vector<int> parents =
          systematic_resample(ens.weights, uniform(rng));
      Eigen::MatrixXd next(n_particles, d);
      for (int k = 0; k < n_particles; ++k) {
        next.row(k) = ens.particles.row(parents[k]);
      }
      ens.particles = std::move(next);
      ens.weights.setConstant(1.0 / n_particles);
    }
  }
  return out;
}

TrackResult pf_track(const std::vector<CepstralVector>& obs,
                     const TrackerParams& params, const ActivityMask& mask,
                     int n_particles, uint64_t seed) {
  return pf_track(obs, params,
                  cepstral_observation(params.layout, params.sample_rate_hz,
                                       params.obs_dim()),
                  mask, n_particles, seed);
}

SimulatedSequence simulate_sequence(const TrackerParams& params,
                                    const ObservationModel& model, int frames,
                                    uint64_t seed) {
  params.validate();
  const int d = params.state_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](int n) {
    Eigen::VectorXd z(n);
    for (int k = 0; k < n; ++k) z[k] = normal(rng);
    return z;
  };
  const Eigen::MatrixXd q_sqrt = psd_sqrt(params.process_noise);
  const Eigen::MatrixXd r_sqrt = psd_sqrt(params.observation_noise);
  const std::vector<bool> all_active(
      params.layout.dimension() == d
          ? params.layout.formants + params.layout.antiformants
          : d,
      true);

  SimulatedSequence seq;
  Eigen::VectorXd x = params.initial_mean + psd_sqrt(params.initial_cov) * draw(d);
  for (int t = 0; t < frames; ++t) {
    x = params.transition * x + q_sqrt * draw(d);
    seq.states.push_back(x);
    seq.observations.push_back(CepstralVector{
        model.h(x, all_active) + r_sqrt * draw(params.obs_dim())});
  }
  return seq;
}

TrackerParams comparison_params(int order) {
  constexpr double kFs = 10000.0;
  constexpr int kFormants = 4;
  const double freqs[kFormants] = {500.0, 1500.0, 2500.0, 3500.0};
  const double bws[kFormants] = {80.0, 120.0, 160.0, 200.0};
  TrackerParams p = default_params(kFormants, 0, kFs, order);
  std::vector<int> pinned;
  std::vector<double> values;
  for (int i = 0; i < kFormants; ++i) {
    p.initial_mean[p.layout.formant_freq(i)] = freqs[i];
    p.process_noise(p.layout.formant_freq(i), p.layout.formant_freq(i)) = 100.0;
    pinned.push_back(p.layout.formant_bw(i));
    values.push_back(bws[i]);
  }
  p.initial_cov = p.process_noise;
  p.observation_noise *= 0.01;
  freeze_states(p, pinned, values);
  return p;
}

std::vector<ComparisonPoint> compare_ekf_pf(const TrackerParams& params,
                                            int trials, int frames,
                                            const std::vector<int>& particles,
                                            uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  const ObservationModel model = cepstral_observation(
      params.layout, params.sample_rate_hz, params.obs_dim());
  const ActivityMask mask = ActivityMask::all(frames, true);
  const int formants = params.layout.formants;
  auto rmse = [&](const TrackResult& est, const SimulatedSequence& seq) {
    double sum = 0.0;
    for (int t = 0; t < frames; ++t) {
      for (int i = 0; i < formants; ++i) {
        const int k = params.layout.formant_freq(i);
        const double e = est.means[t][k] - seq.states[t][k];
        sum += e * e;
      }
    }
    return std::sqrt(sum / (static_cast<double>(frames) * formants));
  };

  std::vector<SimulatedSequence> data;
  double ekf = 0.0;
  for (int r = 0; r < trials; ++r) {
    data.push_back(simulate_sequence(params, model, frames, seed + r));
    ekf += rmse(ekf_filter(data.back().observations, params, model, mask),
                data.back()) / trials;
  }

  std::vector<ComparisonPoint> points;
  for (int n : particles) {
    std::vector<double> values;
    for (int r = 0; r < trials; ++r) {
      const TrackResult pf = pf_track(data[r].observations, params, model, mask,
                                      n, seed + 1000003ULL * (r + 1) + n);
      values.push_back(rmse(pf, data[r]));
    }
    ComparisonPoint pt;
    pt.particles = n;
    pt.ekf_rmse = ekf;
    for (double v : values) pt.pf_rmse += v / trials;
    double ss = 0.0;
    for (double v : values) ss += (v - pt.pf_rmse) * (v - pt.pf_rmse);
    pt.pf_sd = trials > 1 ? std::sqrt(ss / (trials - 1)) : 0.0;
    const double half = 1.96 * pt.pf_sd / std::sqrt(static_cast<double>(trials));
    pt.ci_low = pt.pf_rmse - half;
    pt.ci_high = pt.pf_rmse + half;
    points.push_back(pt);
  }
  return points;
}

}  // namespace karma
