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

// Bootstrap particle filter over the tracker's state-space model. It avoids
// linearizing the observation map and serves as a reference for the
// extended Kalman filter.

#ifndef KARMA_PARTICLE_HPP_
#define KARMA_PARTICLE_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "karma/tracker.hpp"

namespace karma {

struct ParticleEnsemble {
  Eigen::MatrixXd particles;  // n_particles x state_dim
  Eigen::VectorXd weights;    // sums to one
  uint64_t rng_seed = 0;

  int size() const { return static_cast<int>(particles.rows()); }
  double effective_size() const { return 1.0 / weights.squaredNorm(); }
};

// Low-variance (systematic) resampling with a single uniform offset u0 in
// [0, 1/n). Returns the selected parent indices.
std::vector<int> systematic_resample(const Eigen::VectorXd& weights, double u0);

// Particles start from N(mu0, Sigma0) and move through x' = F x + w,
// w ~ N(0, Q). Speech frames reweight by the Gaussian likelihood of the
// observation under h and R; ensembles whose effective size drops below
// half the particle count are resampled systematically. Reported moments
// are the weighted mean and covariance after reweighting.
TrackResult pf_track(const std::vector<CepstralVector>& obs,
                     const TrackerParams& params, const ObservationModel& model,
                     const ActivityMask& mask, int n_particles, uint64_t seed);
TrackResult pf_track(const std::vector<CepstralVector>& obs,
                     const TrackerParams& params, const ActivityMask& mask,
                     int n_particles, uint64_t seed);

// Draws x_0 ~ N(mu0, Sigma0), then x_t = F x_{t-1} + w_t and
// y_t = h(x_t) + v_t for t = 1..frames with w ~ N(0, Q), v ~ N(0, R).
struct SimulatedSequence {
  std::vector<Eigen::VectorXd> states;
  std::vector<CepstralVector> observations;
};
SimulatedSequence simulate_sequence(const TrackerParams& params,
                                    const ObservationModel& model, int frames,
                                    uint64_t seed);

// Four formants at 10 kHz with bandwidths pinned to their true values,
// frequency random walk of 10 Hz per frame, F = I and R_nn = 0.01/n.
TrackerParams comparison_params(int order = 15);

struct ComparisonPoint {
  int particles = 0;
  double pf_rmse = 0.0;  // mean over trials
  double pf_sd = 0.0;    // sample standard deviation over trials
  double ci_low = 0.0;   // 95 % interval of the mean
  double ci_high = 0.0;
  double ekf_rmse = 0.0;  // mean over the same trials
};

// Monte Carlo comparison of the extended Kalman filter with the particle
// filter on simulated sequences. RMSE covers formant frequencies only.
std::vector<ComparisonPoint> compare_ekf_pf(const TrackerParams& params,
                                            int trials, int frames,
                                            const std::vector<int>& particles,
                                            uint64_t seed);

}  // namespace karma

#endif  // KARMA_PARTICLE_HPP_
