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

// End-to-end analysis: resample, frame, pre-emphasize, fit, track.

#ifndef KARMA_PIPELINE_HPP_
#define KARMA_PIPELINE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "karma/arma.hpp"
#include "karma/cepstrum.hpp"
#include "karma/dsp.hpp"
#include "karma/tracker.hpp"

namespace karma {

enum class ObservationSource { kArmaCepstrum, kRealCepstrum };
enum class TrackMode { kFilter, kSmooth };

ObservationSource parse_observation_source(const std::string& name);
std::string to_string(ObservationSource source);
TrackMode parse_track_mode(const std::string& name);
std::string to_string(TrackMode mode);

struct RunConfig {
  double target_sample_rate_hz = 7000.0;
  double frame_ms = 20.0;
  double overlap = 0.5;
  double preemphasis = 0.7;
  WindowKind window = WindowKind::kHamming;
  int ar_order = 12;           // p
  int ma_order = 0;            // q
  int cepstral_order = 15;     // N
  int formants = 3;            // I
  int antiformants = 0;        // J
  ObservationSource observation = ObservationSource::kArmaCepstrum;
  TrackMode mode = TrackMode::kSmooth;
  bool estimate_transition = true;
  double activity_threshold_db = -40.0;
  // Tracker noise scales; defaults match default_params.
  double q_frequency_std_hz = 320.0;
  double q_bandwidth_std_hz = 100.0;
  double r_scale = 1.0;
  // Optional initial mean in packed state order.
  std::vector<double> initial_mean;
  std::vector<std::string> silence_labels = default_silence_labels();

  // Throws std::invalid_argument, e.g. when N < max(p, q), p < 2I or
  // q < 2J.
  void validate() const;
};

// {"analysis": {target_sample_rate_hz, frame_ms, overlap, gamma, window,
//               p, q, N, I, J, observation_source, activity_threshold_db,
//               silence_labels},
//  "tracker": {estimate_transition, q_frequency_std_hz, q_bandwidth_std_hz,
//              r_scale, initial_mean},
//  "mode": "filter" | "smooth"}
std::string config_to_json(const RunConfig& config);
// Unknown keys are rejected; missing keys keep their defaults. Observation
// sources may be abbreviated "arma" and "realcep".
RunConfig config_from_json(const std::string& text);
RunConfig read_config(const std::string& path);

struct Analysis {
  FrameSequence frames;
  std::vector<CepstralVector> observations;
  ActivityMask speech;
  double sample_rate_hz = 0.0;
};

// Resamples to the target rate (when different), frames, pre-emphasizes
// each windowed frame and converts it to a cepstral observation. Speech
// activity comes from the energy detector unless labels are given
// (label positions in samples of the input rate).
Analysis analyze(const Waveform& w, const RunConfig& config,
                 const std::vector<LabelSegment>* labels = nullptr);

TrackerParams tracker_params(const RunConfig& config, double sample_rate_hz);

// Tracker parameters for the final pass. When transition estimation is on,
// a first pass with F = I supplies formant-frequency tracks and the fitted
// F replaces the formant-frequency block. Fit warnings go to `notes`.
TrackerParams fitted_params(const Analysis& analysis, const RunConfig& config,
                            const TrackActivation& activation = {},
                            std::vector<std::string>* notes = nullptr);

// Tracks an analysis with the configured mode using fitted_params.
TrackResult track_analysis(const Analysis& analysis, const RunConfig& config,
                           const TrackActivation& activation = {});

TrackResult track_waveform(const Waveform& w, const RunConfig& config,
                           const std::vector<LabelSegment>* labels = nullptr);

}  // namespace karma

#endif  // KARMA_PIPELINE_HPP_
