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

// State-space tracking of resonance parameters: extended Kalman filter,
// Rauch-Tung-Striebel smoother, coasting through silence, dynamic track
// activation and identification of the model parameters.

#ifndef KARMA_TRACKER_HPP_
#define KARMA_TRACKER_HPP_

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "karma/cepstrum.hpp"
#include "karma/dsp.hpp"

namespace karma {

// theta = (F, Q, R, mu0, Sigma0), plus the layout and sampling rate the
// cepstral observation map needs.
struct TrackerParams {
  Eigen::MatrixXd transition;        // F
  Eigen::MatrixXd process_noise;     // Q
  Eigen::MatrixXd observation_noise;  // R, N x N
  Eigen::VectorXd initial_mean;      // mu0
  Eigen::MatrixXd initial_cov;       // Sigma0
  StateLayout layout;
  double sample_rate_hz = 0.0;
  // Relabel present formants (and antiformants) in increasing frequency
  // after each update. The cepstral map is symmetric in the resonances, so
  // without this two tracks can cross and swap identities.
  bool order_tracks = true;

  int state_dim() const { return static_cast<int>(initial_mean.size()); }
  int obs_dim() const { return static_cast<int>(observation_noise.rows()); }
  // Throws std::invalid_argument on inconsistent dimensions or asymmetric
  // covariances.
  void validate() const;
};

// Q has standard deviations of 320 Hz on frequencies and 100 Hz on
// bandwidths, R_nn = 1/n, Sigma0 = Q and F = I. Formants start at
// 500, 1500, 2500, ... Hz with bandwidths 80, 120, 160, ... Hz; antiformants
// at 1000, 2000, ... Hz with 80 Hz bandwidths. If the formant ladder would
// reach fs/2, formants are instead spaced uniformly below Nyquist.
TrackerParams default_params(int formants, int antiformants,
                             double sample_rate_hz, int order);

// Pins the given state entries: mean set to the value, zero variance and no
// coupling through F, Q or Sigma0. Disables track ordering.
void freeze_states(TrackerParams& params, const std::vector<int>& indices,
                   const std::vector<double>& values);

// Per-frame presence of each track, formants first then antiformants.
// An empty schedule means every track is always present.
struct TrackActivation {
  std::vector<std::vector<bool>> active;

  int size() const { return static_cast<int>(active.size()); }
  static TrackActivation constant(int frames, int tracks, bool value) {
    return TrackActivation{std::vector<std::vector<bool>>(
        frames, std::vector<bool>(tracks, value))};
  }
};

struct TrackResult {
  StateLayout layout;
  int order = 0;
  double sample_rate_hz = 0.0;
  double hop_s = 0.01;
  double start_s = 0.0;  // time of frame 0
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  std::vector<bool> speech;
  std::vector<std::vector<bool>> track_active;
  std::vector<std::string> warnings;

  int frames() const { return static_cast<int>(means.size()); }
  double time_s(int t) const { return start_s + t * hop_s; }
  double variance(int t, int k) const { return covariances[t](k, k); }
};

// Observation map y = h(x) with its Jacobian, restricted to active tracks,
// and an optional projection of the state onto the model's domain.
struct ObservationModel {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                const std::vector<bool>&)>
      h;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&,
                                const std::vector<bool>&)>
      jacobian;
  std::function<void(Eigen::VectorXd&)> constrain;
};

// Cepstral map of the resonance state. Frequencies are kept inside
// [1, fs/2 - 1] Hz and bandwidths at or above 1 Hz.
ObservationModel cepstral_observation(const StateLayout& layout, double fs,
                                      int order);
// y = H x; no constraint.
ObservationModel linear_observation(const Eigen::MatrixXd& h);

// Filter output plus the one-step predictions the smoother needs.
struct FilterPass {
  TrackResult filtered;
  std::vector<Eigen::VectorXd> predicted_means;
  std::vector<Eigen::MatrixXd> predicted_covs;
  // Effective transition into frame t (F with activation changes applied).
  std::vector<Eigen::MatrixXd> transitions;
};

FilterPass run_filter(const std::vector<CepstralVector>& obs,
                      const TrackerParams& params,
                      const ObservationModel& model, const ActivityMask& mask,
                      const TrackActivation& activation);

TrackResult ekf_filter(const std::vector<CepstralVector>& obs,
                       const TrackerParams& params, const ActivityMask& mask,
                       const TrackActivation& activation = {});
TrackResult ekf_filter(const std::vector<CepstralVector>& obs,
                       const TrackerParams& params,
                       const ObservationModel& model, const ActivityMask& mask,
                       const TrackActivation& activation = {});

// Backward pass over a stored forward pass.
TrackResult rts_smooth(const FilterPass& pass);

TrackResult eks_smooth(const std::vector<CepstralVector>& obs,
                       const TrackerParams& params, const ActivityMask& mask,
                       const TrackActivation& activation = {});
TrackResult eks_smooth(const std::vector<CepstralVector>& obs,
                       const TrackerParams& params,
                       const ObservationModel& model, const ActivityMask& mask,
                       const TrackActivation& activation = {});

// Resets the mean and covariance entries of one track (index in formant-
// then-antiformant order) from mu0 and Sigma0, removing its correlation with
// every other entry. Throws std::out_of_range on a bad index.
void reactivate_track(Eigen::VectorXd& mean, Eigen::MatrixXd& cov, int track,
                      const TrackerParams& params);

struct TransitionEstimate {
  Eigen::MatrixXd transition;
  bool fallback = false;  // identity because the regressors were deficient
  bool scaled = false;    // spectral radius was clipped
  std::string warning;
};

// Least-squares fit of x_{t+1} ~ F x_t over consecutive rows (frames) of
// `tracks`. With a mask, only pairs of consecutive speech frames are used.
// Spectral radius is clipped to max_radius by scaling.
TransitionEstimate estimate_transition(const Eigen::MatrixXd& tracks,
                                       const ActivityMask* mask = nullptr,
                                       double max_radius = 0.999);

}  // namespace karma

#endif  // KARMA_TRACKER_HPP_
