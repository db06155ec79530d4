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

#include "karma/tracker.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace karma {

namespace {

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

bool is_symmetric(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale;
}

// Projects tiny negative eigenvalues (round-off) back to zero.
bool guard_psd(Eigen::MatrixXd& p) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
  const Eigen::VectorXd& values = eig.eigenvalues();
  if (values.minCoeff() >= 0.0) return false;
  p = eig.eigenvectors() * values.cwiseMax(0.0).asDiagonal() *
      eig.eigenvectors().transpose();
  symmetrize(p);
  return true;
}

// Maps per-track flags to per-state-entry flags. When the state is not a
// resonance layout (e.g. a linear test model), every entry is active.
std::vector<bool> state_flags(const StateLayout& layout, int dim,
                              const std::vector<bool>& tracks) {
  std::vector<bool> out(dim, true);
  if (layout.dimension() != dim) return out;
  for (int i = 0; i < layout.formants; ++i) {
    out[layout.formant_freq(i)] = tracks[i];
    out[layout.formant_bw(i)] = tracks[i];
  }
  for (int j = 0; j < layout.antiformants; ++j) {
    const bool a = tracks[layout.formants + j];
    out[layout.antiformant_freq(j)] = a;
    out[layout.antiformant_bw(j)] = a;
  }
  return out;
}

std::vector<int> track_entries(const StateLayout& layout, int dim, int track) {
  if (layout.dimension() != dim) return {track};
  if (track < layout.formants) {
    return {layout.formant_freq(track), layout.formant_bw(track)};
  }
  const int j = track - layout.formants;
  return {layout.antiformant_freq(j), layout.antiformant_bw(j)};
}

// Permutes present tracks of each kind into increasing frequency, moving
// frequency and bandwidth entries together with their covariances.
void order_present_tracks(Eigen::VectorXd& m, Eigen::MatrixXd& p,
                          const StateLayout& layout,
                          const std::vector<bool>& present) {
  const int d = static_cast<int>(m.size());
  if (layout.dimension() != d) return;
  std::vector<int> perm(d);
  for (int k = 0; k < d; ++k) perm[k] = k;
  bool changed = false;
  auto sort_group = [&](int first, int count, auto freq, auto bw) {
    std::vector<int> slots;
    for (int k = 0; k < count; ++k) {
      if (present[first + k]) slots.push_back(k);
    }
    std::vector<int> sorted = slots;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](int a, int b) { return m[freq(a)] < m[freq(b)]; });
    for (size_t s = 0; s < slots.size(); ++s) {
      if (sorted[s] == slots[s]) continue;
      changed = true;
      perm[freq(slots[s])] = freq(sorted[s]);
      perm[bw(slots[s])] = bw(sorted[s]);
    }
  };
  sort_group(0, layout.formants,
             [&](int i) { return layout.formant_freq(i); },
             [&](int i) { return layout.formant_bw(i); });
  sort_group(layout.formants, layout.antiformants,
             [&](int j) { return layout.antiformant_freq(j); },
             [&](int j) { return layout.antiformant_bw(j); });
  if (!changed) return;
  const Eigen::VectorXd m_old = m;
  const Eigen::MatrixXd p_old = p;
  for (int a = 0; a < d; ++a) {
    m[a] = m_old[perm[a]];
    for (int b = 0; b < d; ++b) p(a, b) = p_old(perm[a], perm[b]);
  }
}

int track_count(const StateLayout& layout, int dim) {
  return layout.dimension() == dim ? layout.formants + layout.antiformants
                                   : dim;
}

}  // namespace

void TrackerParams::validate() const {
  const int d = state_dim();
  if (d == 0) throw std::invalid_argument("empty state");
  if (transition.rows() != d || transition.cols() != d ||
      process_noise.rows() != d || process_noise.cols() != d ||
      initial_cov.rows() != d || initial_cov.cols() != d) {
    throw std::invalid_argument("tracker parameter dimensions inconsistent");
  }
  if (observation_noise.rows() != observation_noise.cols() ||
      observation_noise.rows() == 0) {
    throw std::invalid_argument("observation noise must be square");
  }
  if (!is_symmetric(process_noise) || !is_symmetric(observation_noise) ||
      !is_symmetric(initial_cov)) {
    throw std::invalid_argument("covariances must be symmetric");
  }
  if (layout.dimension() != 0 && layout.dimension() != d) {
    throw std::invalid_argument("state layout does not match dimension");
  }
}

TrackerParams default_params(int formants, int antiformants,
                             double sample_rate_hz, int order) {
  if (formants < 0 || antiformants < 0 || formants + antiformants == 0) {
    throw std::invalid_argument("need at least one track");
  }
  if (order < 1) throw std::invalid_argument("cepstral order must be >= 1");
  TrackerParams p;
  p.layout = StateLayout{formants, antiformants};
  p.sample_rate_hz = sample_rate_hz;
  const int d = p.layout.dimension();
  const double nyquist = 0.5 * sample_rate_hz;

  p.initial_mean.resize(d);
  const bool ladder_fits = 500.0 + 1000.0 * (formants - 1) < nyquist;
  for (int i = 0; i < formants; ++i) {
    p.initial_mean[p.layout.formant_freq(i)] =
        ladder_fits ? 500.0 + 1000.0 * i
                    : (2.0 * i + 1.0) * nyquist / (2.0 * formants);
    p.initial_mean[p.layout.formant_bw(i)] = 80.0 + 40.0 * i;
  }
  for (int j = 0; j < antiformants; ++j) {
    p.initial_mean[p.layout.antiformant_freq(j)] =
        std::min(1000.0 * (j + 1), nyquist * (j + 1) / (antiformants + 1));
    p.initial_mean[p.layout.antiformant_bw(j)] = 80.0;
  }

  Eigen::VectorXd q(d);
  for (int k = 0; k < d; ++k) {
    q[k] = p.layout.is_frequency(k) ? 320.0 * 320.0 : 100.0 * 100.0;
  }
  p.process_noise = q.asDiagonal();
  p.initial_cov = p.process_noise;
  p.transition = Eigen::MatrixXd::Identity(d, d);

  Eigen::VectorXd r(order);
  for (int n = 1; n <= order; ++n) r[n - 1] = 1.0 / n;
  p.observation_noise = r.asDiagonal();
  return p;
}

void freeze_states(TrackerParams& params, const std::vector<int>& indices,
                   const std::vector<double>& values) {
  if (indices.size() != values.size()) {
    throw std::invalid_argument("one value per frozen index required");
  }
  const int d = params.state_dim();
  for (size_t k = 0; k < indices.size(); ++k) {
    const int i = indices[k];
    if (i < 0 || i >= d) throw std::out_of_range("frozen index out of range");
    params.initial_mean[i] = values[k];
    params.process_noise.row(i).setZero();
    params.process_noise.col(i).setZero();
    params.initial_cov.row(i).setZero();
    params.initial_cov.col(i).setZero();
    params.transition.row(i).setZero();
    params.transition.col(i).setZero();
    params.transition(i, i) = 1.0;
  }
  // Pinned entries are tied to their slot, so slots must not be relabelled.
  if (!indices.empty()) params.order_tracks = false;
}

ObservationModel cepstral_observation(const StateLayout& layout, double fs,
                                      int order) {
  ObservationModel model;
  model.h = [layout, fs, order](const Eigen::VectorXd& x,
                                const std::vector<bool>& active) {
    return cepstrum_of_state(x, layout, fs, order, &active);
  };
  model.jacobian = [layout, fs, order](const Eigen::VectorXd& x,
                                       const std::vector<bool>& active) {
    return cepstrum_jacobian(x, layout, fs, order, &active);
  };
  model.constrain = [layout, fs](Eigen::VectorXd& x) {
    for (int k = 0; k < layout.dimension(); ++k) {
      if (layout.is_frequency(k)) {
        x[k] = std::clamp(x[k], 1.0, 0.5 * fs - 1.0);
      } else {
        x[k] = std::max(x[k], 1.0);
      }
    }
  };
  return model;
}

ObservationModel linear_observation(const Eigen::MatrixXd& h) {
  ObservationModel model;
  model.h = [h](const Eigen::VectorXd& x, const std::vector<bool>&) {
    return Eigen::VectorXd(h * x);
  };
  model.jacobian = [h](const Eigen::VectorXd&, const std::vector<bool>&) {
    return h;
  };
  return model;
}

void reactivate_track(Eigen::VectorXd& mean, Eigen::MatrixXd& cov, int track,
                      const TrackerParams& params) {
  const int d = static_cast<int>(mean.size());
  if (track < 0 || track >= track_count(params.layout, d)) {
    throw std::out_of_range("track index out of range");
  }
  const std::vector<int> entries = track_entries(params.layout, d, track);
  for (int i : entries) {
    mean[i] = params.initial_mean[i];
    cov.row(i).setZero();
    cov.col(i).setZero();
  }
  for (int i : entries) {
    for (int j : entries) cov(i, j) = params.initial_cov(i, j);
  }
}

FilterPass run_filter(const std::vector<CepstralVector>& obs,
                      const TrackerParams& params,
                      const ObservationModel& model, const ActivityMask& mask,
                      const TrackActivation& activation) {
  params.validate();
  const int frames = static_cast<int>(obs.size());
  if (frames < 1) throw std::invalid_argument("no observations");
  if (mask.size() != 0 && mask.size() != frames) {
    throw std::invalid_argument("activity mask length mismatch");
  }
  if (activation.size() != 0 && activation.size() != frames) {
    throw std::invalid_argument("track activation length mismatch");
  }
  const int d = params.state_dim();
  const int n_obs = params.obs_dim();
  const int tracks = track_count(params.layout, d);

  FilterPass pass;
  TrackResult& out = pass.filtered;
  out.layout = params.layout;
  out.order = n_obs;
  out.sample_rate_hz = params.sample_rate_hz;

  Eigen::VectorXd m = params.initial_mean;
  Eigen::MatrixXd p = params.initial_cov;
  std::vector<bool> previous(tracks, true);

  for (int t = 0; t < frames; ++t) {
    if (obs[t].order() != n_obs) {
      throw std::invalid_argument("observation order mismatch at frame " +
                                  std::to_string(t));
    }
    const std::vector<bool> current =
        activation.size() ? activation.active[t] : std::vector<bool>(tracks, true);
    if (static_cast<int>(current.size()) != tracks) {
      throw std::invalid_argument("track activation width mismatch");
    }
    const std::vector<bool> cur_state = state_flags(params.layout, d, current);

    // Present and absent tracks evolve independently of each other.
    Eigen::MatrixXd f = params.transition;
    Eigen::MatrixXd q = params.process_noise;
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        if (cur_state[a] != cur_state[b]) {
          f(a, b) = 0.0;
          q(a, b) = 0.0;
        }
      }
    }
    Eigen::VectorXd m_pred = f * m;
    Eigen::MatrixXd p_pred = f * p * f.transpose() + q;
    for (int k = 0; k < tracks; ++k) {
      if (current[k] && !previous[k]) {
        reactivate_track(m_pred, p_pred, k, params);
        for (int i : track_entries(params.layout, d, k)) f.row(i).setZero();
      }
    }
    symmetrize(p_pred);

    const bool speech = mask.size() == 0 || mask.flags[t];
    const bool any_active =
        std::find(cur_state.begin(), cur_state.end(), true) != cur_state.end();
    if (speech && any_active) {
      const Eigen::MatrixXd h = model.jacobian(m_pred, current);
      const Eigen::VectorXd innovation = obs[t].coeffs - model.h(m_pred, current);
      Eigen::MatrixXd s = h * p_pred * h.transpose() + params.observation_noise;
      symmetrize(s);
      Eigen::LLT<Eigen::MatrixXd> llt(s);
      for (int attempt = 0; llt.info() != Eigen::Success && attempt < 8;
           ++attempt) {
        const double bump =
            std::max(1e-8 * s.trace() / n_obs, 1e-300) * std::pow(10.0, attempt);
        s.diagonal().array() += bump;
        llt.compute(s);
        out.warnings.push_back("frame " + std::to_string(t) +
                               ": singular innovation covariance regularized");
      }
      // K = P H' S^-1, formed as (S^-1 H P)'.
      const Eigen::MatrixXd gain = llt.solve(h * p_pred).transpose();
      m = m_pred + gain * innovation;
      p = p_pred - gain * h * p_pred;
      symmetrize(p);
      if (model.constrain) model.constrain(m);
      if (params.order_tracks) order_present_tracks(m, p, params.layout, current);
    } else {
      m = m_pred;
      p = p_pred;
    }
    guard_psd(p);

    out.means.push_back(m);
    out.covariances.push_back(p);
    out.speech.push_back(speech);
    out.track_active.push_back(current);
    pass.predicted_means.push_back(std::move(m_pred));
    pass.predicted_covs.push_back(std::move(p_pred));
    pass.transitions.push_back(std::move(f));
    previous = current;
  }
  return pass;
}

TrackResult rts_smooth(const FilterPass& pass) {
  TrackResult out = pass.filtered;
  const int frames = out.frames();
  for (int t = frames - 1; t >= 1; --t) {
    const Eigen::MatrixXd& p_filt = pass.filtered.covariances[t - 1];
    const Eigen::MatrixXd& p_pred = pass.predicted_covs[t];
    const Eigen::MatrixXd& f = pass.transitions[t];
    // S = P_{t-1|t-1} F' P_{t|t-1}^+ ; pseudo-inverse tolerates frozen
    // (zero-variance) entries.
    const Eigen::MatrixXd gain =
        p_pred.completeOrthogonalDecomposition().solve(f * p_filt).transpose();
    out.means[t - 1] = pass.filtered.means[t - 1] +
                       gain * (out.means[t] - pass.predicted_means[t]);
    Eigen::MatrixXd p = p_filt + gain * (out.covariances[t] - p_pred) *
                                     gain.transpose();
    symmetrize(p);
    guard_psd(p);
    out.covariances[t - 1] = std::move(p);
  }
  return out;
}

TrackResult ekf_filter(const std::vector<CepstralVector>& obs,
                       const TrackerParams& params,
                       const ObservationModel& model, const ActivityMask& mask,
                       const TrackActivation& activation) {
  return run_filter(obs, params, model, mask, activation).filtered;
}

TrackResult ekf_filter(const std::vector<CepstralVector>& obs,
                       const TrackerParams& params, const ActivityMask& mask,
                       const TrackActivation& activation) {
  const int order = params.obs_dim();
  return ekf_filter(obs, params,
                    cepstral_observation(params.layout, params.sample_rate_hz,
                                         order),
                    mask, activation);
}

TrackResult eks_smooth(const std::vector<CepstralVector>& obs,
                       const TrackerParams& params,
                       const ObservationModel& model, const ActivityMask& mask,
                       const TrackActivation& activation) {
  return rts_smooth(run_filter(obs, params, model, mask, activation));
}

TrackResult eks_smooth(const std::vector<CepstralVector>& obs,
                       const TrackerParams& params, const ActivityMask& mask,
                       const TrackActivation& activation) {
  const int order = params.obs_dim();
  return eks_smooth(obs, params,
                    cepstral_observation(params.layout, params.sample_rate_hz,
                                         order),
                    mask, activation);
}

TransitionEstimate estimate_transition(const Eigen::MatrixXd& tracks,
                                       const ActivityMask* mask,
                                       double max_radius) {
  const int frames = static_cast<int>(tracks.rows());
  const int d = static_cast<int>(tracks.cols());
  TransitionEstimate est;
  est.transition = Eigen::MatrixXd::Identity(d, d);

  std::vector<int> rows;
  for (int t = 0; t + 1 < frames; ++t) {
    if (mask && !(mask->flags[t] && mask->flags[t + 1])) continue;
    if (!tracks.row(t).allFinite() || !tracks.row(t + 1).allFinite()) continue;
    rows.push_back(t);
  }
  const int n = static_cast<int>(rows.size());
  if (n < 2 * d) {
    est.fallback = true;
    est.warning = "too few frames to estimate the transition; using identity";
    return est;
  }
  Eigen::MatrixXd current(n, d), next(n, d);
  for (int r = 0; r < n; ++r) {
    current.row(r) = tracks.row(rows[r]);
    next.row(r) = tracks.row(rows[r] + 1);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(current);
  qr.setThreshold(1e-10);
  if (qr.rank() < d) {
    est.fallback = true;
    est.warning = "rank-deficient track regressors; using identity";
    return est;
  }
  // current * F' = next
  est.transition = qr.solve(next).transpose();
  const double radius =
      Eigen::EigenSolver<Eigen::MatrixXd>(est.transition, false)
          .eigenvalues()
          .cwiseAbs()
          .maxCoeff();
  if (radius > max_radius) {
    est.transition *= max_radius / radius;
    est.scaled = true;
  }
  return est;
}

}  // namespace karma
