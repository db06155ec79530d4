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

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "karma/evaluation.hpp"
#include "karma/pipeline.hpp"
#include "karma/synthesis.hpp"
#include "karma/tracker.hpp"

namespace karma {
namespace {

struct LinearCase {
  TrackerParams params;
  Eigen::MatrixXd h;
  std::vector<CepstralVector> obs;
};

// Two-state linear-Gaussian system observed through three channels.
LinearCase MakeLinearCase(int frames, uint64_t seed) {
  LinearCase c;
  TrackerParams& p = c.params;
  p.layout = StateLayout{1, 0};
  p.sample_rate_hz = 1.0;
  p.transition = (Eigen::MatrixXd(2, 2) << 0.95, 0.1, -0.05, 0.9).finished();
  p.process_noise = (Eigen::MatrixXd(2, 2) << 0.2, 0.05, 0.05, 0.1).finished();
  p.observation_noise = Eigen::Vector3d(0.5, 0.3, 0.8).asDiagonal();
  p.initial_mean = Eigen::Vector2d(1.0, -2.0);
  p.initial_cov = (Eigen::MatrixXd(2, 2) << 2.0, 0.3, 0.3, 1.0).finished();
  c.h = (Eigen::MatrixXd(3, 2) << 1.0, 0.0, 0.5, 1.0, -0.3, 0.7).finished();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::Vector2d x = p.initial_mean;
  for (int t = 0; t < frames; ++t) {
    x = p.transition * x + Eigen::Vector2d(0.4 * normal(rng), 0.3 * normal(rng));
    Eigen::Vector3d y = c.h * x;
    for (int n = 0; n < 3; ++n) y[n] += 0.6 * normal(rng);
    c.obs.push_back(CepstralVector{y});
  }
  return c;
}

// Textbook recursion with Joseph-form covariance update.
void ReferenceKalman(const LinearCase& c, const ActivityMask& mask,
                     std::vector<Eigen::VectorXd>& means,
                     std::vector<Eigen::MatrixXd>& covs) {
  const TrackerParams& p = c.params;
  Eigen::VectorXd m = p.initial_mean;
  Eigen::MatrixXd P = p.initial_cov;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  for (size_t t = 0; t < c.obs.size(); ++t) {
    m = p.transition * m;
    P = p.transition * P * p.transition.transpose() + p.process_noise;
    if (mask.flags[t]) {
      const Eigen::MatrixXd S = c.h * P * c.h.transpose() + p.observation_noise;
      const Eigen::MatrixXd K = P * c.h.transpose() * S.inverse();
      m = m + K * (c.obs[t].coeffs - c.h * m);
      P = (eye - K * c.h) * P * (eye - K * c.h).transpose() +
          K * p.observation_noise * K.transpose();
    }
    means.push_back(m);
    covs.push_back(P);
  }
}

// Joint MAP over x_0..x_T as one linear system; the inverse Hessian gives
// the smoothed covariances.
void BatchMap(const LinearCase& c, const ActivityMask& mask,
              std::vector<Eigen::VectorXd>& means,
              std::vector<Eigen::MatrixXd>& covs) {
  const TrackerParams& p = c.params;
  const int T = static_cast<int>(c.obs.size());
  const int n = 2 * (T + 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  const Eigen::MatrixXd s0 = p.initial_cov.inverse();
  const Eigen::MatrixXd qi = p.process_noise.inverse();
  const Eigen::MatrixXd ri = p.observation_noise.inverse();
  const Eigen::MatrixXd& F = p.transition;
  A.block(0, 0, 2, 2) += s0;
  rhs.segment(0, 2) += s0 * p.initial_mean;
  for (int t = 1; t <= T; ++t) {
    const int a = 2 * (t - 1), b = 2 * t;
    A.block(a, a, 2, 2) += F.transpose() * qi * F;
    A.block(a, b, 2, 2) -= F.transpose() * qi;
    A.block(b, a, 2, 2) -= qi * F;
    A.block(b, b, 2, 2) += qi;
    if (mask.flags[t - 1]) {
      A.block(b, b, 2, 2) += c.h.transpose() * ri * c.h;
      rhs.segment(b, 2) += c.h.transpose() * ri * c.obs[t - 1].coeffs;
    }
  }
  const Eigen::VectorXd x = A.ldlt().solve(rhs);
  const Eigen::MatrixXd cov = A.inverse();
  for (int t = 1; t <= T; ++t) {
    means.push_back(x.segment(2 * t, 2));
    covs.push_back(cov.block(2 * t, 2 * t, 2, 2));
  }
}

ActivityMask Gappy(int frames) {
  ActivityMask m = ActivityMask::all(frames, true);
  for (int t = 10; t < 15 && t < frames; ++t) m.flags[t] = false;
  return m;
}

TEST(LinearSurrogate, FilterMatchesClosedForm) {
  const LinearCase c = MakeLinearCase(40, 31);
  const ActivityMask mask = Gappy(40);
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
  ReferenceKalman(c, mask, means, covs);
  const TrackResult r = ekf_filter(c.obs, c.params, linear_observation(c.h), mask);
  ASSERT_EQ(r.frames(), 40);
  for (int t = 0; t < 40; ++t) {
    EXPECT_LT((r.means[t] - means[t]).cwiseAbs().maxCoeff(), 1e-10) << t;
    EXPECT_LT((r.covariances[t] - covs[t]).cwiseAbs().maxCoeff(), 1e-10) << t;
  }
}

TEST(LinearSurrogate, SmootherMatchesBatchMap) {
  const LinearCase c = MakeLinearCase(40, 32);
  const ActivityMask mask = Gappy(40);
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
  BatchMap(c, mask, means, covs);
  const TrackResult r = eks_smooth(c.obs, c.params, linear_observation(c.h), mask);
  for (int t = 0; t < 40; ++t) {
    EXPECT_LT((r.means[t] - means[t]).cwiseAbs().maxCoeff(), 1e-8) << t;
    EXPECT_LT((r.covariances[t] - covs[t]).cwiseAbs().maxCoeff(), 1e-8) << t;
  }
}

TEST(LinearSurrogate, SmoothingNeverIncreasesTrace) {
  for (uint64_t seed = 40; seed < 45; ++seed) {
    const LinearCase c = MakeLinearCase(30, seed);
    const ActivityMask mask = Gappy(30);
    const ObservationModel model = linear_observation(c.h);
    const TrackResult f = ekf_filter(c.obs, c.params, model, mask);
    const TrackResult s = eks_smooth(c.obs, c.params, model, mask);
    for (int t = 0; t < 30; ++t) {
      EXPECT_LE(s.covariances[t].trace(), f.covariances[t].trace() + 1e-9);
    }
  }
}

TEST(LinearSurrogate, SingleFrameSmoothingIsFiltering) {
  const LinearCase c = MakeLinearCase(1, 33);
  const ObservationModel model = linear_observation(c.h);
  const ActivityMask mask = ActivityMask::all(1, true);
  const TrackResult f = ekf_filter(c.obs, c.params, model, mask);
  const TrackResult s = eks_smooth(c.obs, c.params, model, mask);
  EXPECT_EQ(s.means[0], f.means[0]);
  EXPECT_EQ(s.covariances[0], f.covariances[0]);
}

TEST(LinearSurrogate, ErrorShrinksMonotonicallyWithoutProcessNoise) {
  LinearCase c = MakeLinearCase(1, 34);
  c.params.transition.setIdentity();
  c.params.process_noise.setZero();
  const Eigen::Vector2d truth(0.7, 1.3);
  c.obs.assign(25, CepstralVector{c.h * truth});
  const TrackResult r = ekf_filter(c.obs, c.params, linear_observation(c.h),
                                   ActivityMask::all(25, true));
  double previous = (c.params.initial_mean - truth).norm();
  for (int t = 0; t < 25; ++t) {
    const double e = (r.means[t] - truth).norm();
    EXPECT_LE(e, previous + 1e-12) << t;
    previous = e;
  }
}

TEST(Coasting, AllSilentIsPurePrediction) {
  const LinearCase c = MakeLinearCase(12, 35);
  const TrackResult r = ekf_filter(c.obs, c.params, linear_observation(c.h),
                                   ActivityMask::all(12, false));
  Eigen::VectorXd m = c.params.initial_mean;
  Eigen::MatrixXd p = c.params.initial_cov;
  for (int t = 0; t < 12; ++t) {
    m = c.params.transition * m;
    p = c.params.transition * p * c.params.transition.transpose() + c.params.process_noise;
    EXPECT_LT((r.means[t] - m).norm(), 1e-12);
    EXPECT_LT((r.covariances[t] - p).norm(), 1e-10);
    EXPECT_FALSE(r.speech[t]);
  }
}

TEST(Coasting, SingularInnovationIsRegularized) {
  LinearCase c = MakeLinearCase(3, 36);
  c.params.process_noise.setZero();
  c.params.initial_cov.setZero();
  c.params.observation_noise.setZero();
  const TrackResult r = ekf_filter(c.obs, c.params, linear_observation(c.h),
                                   ActivityMask::all(3, true));
  EXPECT_FALSE(r.warnings.empty());
  for (const auto& m : r.means) EXPECT_TRUE(m.allFinite());
}

TEST(Params, DefaultsForThreeFormants) {
  const TrackerParams p = default_params(3, 0, 7000.0, 15);
  const Eigen::VectorXd expected =
      (Eigen::VectorXd(6) << 500, 1500, 2500, 80, 120, 160).finished();
  EXPECT_EQ(p.initial_mean, expected);
  EXPECT_DOUBLE_EQ(p.observation_noise(3, 3), 0.25);
  EXPECT_DOUBLE_EQ(p.observation_noise(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(p.process_noise(0, 0), 320.0 * 320.0);
  EXPECT_DOUBLE_EQ(p.process_noise(4, 4), 100.0 * 100.0);
  EXPECT_EQ(p.initial_cov, p.process_noise);
  EXPECT_TRUE(p.transition.isIdentity());
}

TEST(Params, AntiformantDefaults) {
  const TrackerParams p = default_params(3, 2, 8000.0, 20);
  const StateLayout& l = p.layout;
  EXPECT_DOUBLE_EQ(p.initial_mean[l.antiformant_freq(0)], 1000.0);
  EXPECT_DOUBLE_EQ(p.initial_mean[l.antiformant_freq(1)], 2000.0);
  EXPECT_DOUBLE_EQ(p.initial_mean[l.antiformant_bw(0)], 80.0);
  EXPECT_DOUBLE_EQ(p.initial_mean[l.antiformant_bw(1)], 80.0);
  EXPECT_EQ(p.obs_dim(), 20);
}

TEST(Params, FormantsStayBelowNyquist) {
  const TrackerParams p = default_params(4, 0, 7000.0, 15);
  for (int i = 0; i < 4; ++i) EXPECT_LT(p.initial_mean[i], 3500.0);
  for (int i = 1; i < 4; ++i) EXPECT_GT(p.initial_mean[i], p.initial_mean[i - 1]);
}

TEST(Params, ValidateCatchesShapes) {
  TrackerParams p = default_params(2, 0, 8000.0, 10);
  p.process_noise = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Activation, AllTrueMatchesPlainRun) {
  const SynthesisResult syn = synthesize(random_trajectory(3, 0.5, 7, 16000.0));
  RunConfig cfg;
  const Analysis a = analyze(syn.waveform, cfg);
  const TrackerParams p = tracker_params(cfg, a.sample_rate_hz);
  const TrackResult plain = eks_smooth(a.observations, p, a.speech);
  const TrackResult act = eks_smooth(a.observations, p, a.speech,
                                     TrackActivation::constant(a.frames.size(), 3, true));
  for (int t = 0; t < plain.frames(); ++t) {
    EXPECT_EQ(plain.means[t], act.means[t]);
    EXPECT_EQ(plain.covariances[t], act.covariances[t]);
  }
}

TEST(Activation, ReactivationRestartsFromPrior) {
  const int frames = 8;
  TrackerParams p = default_params(2, 1, 10000.0, 12);
  ResonanceState truth;
  truth.sample_rate_hz = 10000.0;
  truth.formant_freqs = {400.0, 1700.0};
  truth.formant_bws = {60.0, 90.0};
  truth.antiformant_freqs = {1300.0};
  truth.antiformant_bws = {70.0};
  std::vector<CepstralVector> obs(frames, state_to_cepstrum(truth, 12));
  TrackActivation act = TrackActivation::constant(frames, 3, true);
  for (int t = 3; t < 6; ++t) act.active[t][2] = false;
  ActivityMask mask = ActivityMask::all(frames, true);
  for (int t = 3; t < frames; ++t) mask.flags[t] = false;
  const TrackResult r = ekf_filter(obs, p, mask, act);
  const int f = p.layout.antiformant_freq(0), b = p.layout.antiformant_bw(0);
  EXPECT_NE(r.means[2][f], p.initial_mean[f]);
  EXPECT_DOUBLE_EQ(r.means[6][f], p.initial_mean[f]);
  EXPECT_DOUBLE_EQ(r.means[6][b], p.initial_mean[b]);
  // The reset replaces the predicted moments of the reactivation frame.
  EXPECT_DOUBLE_EQ(r.covariances[6](f, f), p.initial_cov(f, f));
  EXPECT_DOUBLE_EQ(r.covariances[6](f, 0), 0.0);
}

TEST(Activation, BadTrackIndexThrows) {
  const TrackerParams p = default_params(2, 0, 8000.0, 10);
  Eigen::VectorXd m = p.initial_mean;
  Eigen::MatrixXd c = p.initial_cov;
  EXPECT_THROW(reactivate_track(m, c, 2, p), std::out_of_range);
  EXPECT_THROW(reactivate_track(m, c, -1, p), std::out_of_range);
}

TEST(Activation, AbsentAntiformantIsLessCertainInVowel) {
  const SynthesisResult syn = synthesize(nan_trajectory(5));
  RunConfig cfg;
  cfg.target_sample_rate_hz = 10000.0;
  cfg.frame_ms = 30.0;
  cfg.preemphasis = 0.9;
  cfg.ar_order = 8;
  cfg.ma_order = 4;
  cfg.formants = 2;
  cfg.antiformants = 1;
  const Analysis a = analyze(syn.waveform, cfg);
  const TrackResult ref = align_reference(syn.reference, a.frames.size(),
                                          a.frames.frame_time_s(0), a.frames.hop_s());
  const TrackResult r = track_analysis(a, cfg, TrackActivation{ref.track_active});
  const int k = r.layout.antiformant_freq(0);
  double nasal = 0.0, vowel = 0.0;
  int nn = 0, nv = 0;
  for (int t = 10; t < r.frames(); ++t) {
    if (ref.track_active[t][2]) {
      nasal += r.covariances[t](k, k);
      ++nn;
    } else {
      vowel += r.covariances[t](k, k);
      ++nv;
    }
  }
  ASSERT_GT(nn, 0);
  ASSERT_GT(nv, 0);
  EXPECT_GT(vowel / nv, nasal / nn);
}

TEST(Ordering, SwappedStartIsRelabelled) {
  ResonanceState truth;
  truth.sample_rate_hz = 8000.0;
  truth.formant_freqs = {600.0, 1400.0};
  truth.formant_bws = {70.0, 110.0};
  std::vector<CepstralVector> obs(6, state_to_cepstrum(truth, 12));
  TrackerParams sorted = default_params(2, 0, 8000.0, 12);
  sorted.process_noise.diagonal() << 1e4, 1e4, 400, 400;
  sorted.initial_cov = sorted.process_noise;
  TrackerParams swapped = sorted;
  swapped.initial_mean << 1500, 500, 120, 80;
  sorted.initial_mean << 500, 1500, 80, 120;
  const ActivityMask mask = ActivityMask::all(6, true);
  const TrackResult a = ekf_filter(obs, sorted, mask);
  const TrackResult b = ekf_filter(obs, swapped, mask);
  for (int t = 0; t < 6; ++t) {
    EXPECT_LT(b.means[t][0], b.means[t][1]);
    EXPECT_LT((a.means[t] - b.means[t]).norm(), 1e-6);
    EXPECT_LT((a.covariances[t] - b.covariances[t]).norm(), 1e-6);
  }
}

TEST(Transition, RecoversNoiselessVar) {
  const Eigen::MatrixXd f =
      (Eigen::MatrixXd(3, 3) << 0.9, 0.1, 0.0, -0.05, 0.8, 0.1, 0.02, 0.0, 0.7).finished();
  Eigen::MatrixXd tracks(40, 3);
  tracks.row(0) << 1.0, -2.0, 0.5;
  for (int t = 1; t < 40; ++t) tracks.row(t) = (f * tracks.row(t - 1).transpose()).transpose();
  // Persistent excitation: restart from a fresh state halfway through.
  Eigen::MatrixXd two(80, 3);
  two << tracks, tracks;
  two.row(40) << -1.0, 0.3, 2.0;
  for (int t = 41; t < 80; ++t) two.row(t) = (f * two.row(t - 1).transpose()).transpose();
  ActivityMask mask = ActivityMask::all(80, true);
  mask.flags[40] = false;  // do not pair frame 39 with 40
  const TransitionEstimate est = estimate_transition(two, &mask);
  EXPECT_FALSE(est.fallback);
  EXPECT_FALSE(est.scaled);
  EXPECT_LT((est.transition - f).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Transition, ConstantTracksFallBack) {
  const Eigen::MatrixXd tracks = Eigen::MatrixXd::Constant(20, 3, 700.0);
  const TransitionEstimate est = estimate_transition(tracks);
  EXPECT_TRUE(est.fallback);
  EXPECT_FALSE(est.warning.empty());
  EXPECT_TRUE(est.transition.isIdentity());
}

TEST(Transition, WhiteNoiseGivesSmallEntries) {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd tracks(10000, 3);
  for (int t = 0; t < 10000; ++t) {
    for (int k = 0; k < 3; ++k) tracks(t, k) = normal(rng);
  }
  const TransitionEstimate est = estimate_transition(tracks);
  EXPECT_LT(est.transition.cwiseAbs().maxCoeff(), 0.05);
}

TEST(Transition, UnstableFitIsScaled) {
  Eigen::MatrixXd tracks(30, 1);
  for (int t = 0; t < 30; ++t) tracks(t, 0) = std::pow(1.1, t);
  const TransitionEstimate est = estimate_transition(tracks);
  EXPECT_TRUE(est.scaled);
  EXPECT_NEAR(est.transition(0, 0), 0.999, 1e-12);
}

}  // namespace
}  // namespace karma
