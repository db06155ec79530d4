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

#include "karma/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace karma {

ObservationSource parse_observation_source(const std::string& name) {
  if (name == "arma" || name == "arma_cepstrum") {
    return ObservationSource::kArmaCepstrum;
  }
  if (name == "realcep" || name == "real_cepstrum") {
    return ObservationSource::kRealCepstrum;
  }
  throw std::invalid_argument("unknown observation source: " + name);
}

std::string to_string(ObservationSource source) {
  return source == ObservationSource::kArmaCepstrum ? "arma_cepstrum"
                                                    : "real_cepstrum";
}

TrackMode parse_track_mode(const std::string& name) {
  if (name == "filter") return TrackMode::kFilter;
  if (name == "smooth") return TrackMode::kSmooth;
  throw std::invalid_argument("unknown mode: " + name);
}

std::string to_string(TrackMode mode) {
  return mode == TrackMode::kFilter ? "filter" : "smooth";
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid config: " + what);
  };
  if (!(target_sample_rate_hz > 0)) fail("sample rate must be positive");
  if (!(frame_ms > 0)) fail("frame length must be positive");
  if (!(overlap >= 0 && overlap < 1)) fail("overlap must be in [0, 1)");
  if (!(preemphasis >= 0 && preemphasis < 1)) fail("pre-emphasis in [0, 1)");
  if (formants < 0 || antiformants < 0 || formants + antiformants == 0) {
    fail("need at least one tracked resonance");
  }
  if (ar_order < 1 || ma_order < 0) fail("ARMA orders out of range");
  if (cepstral_order < std::max(ar_order, ma_order)) {
    fail("cepstral order N must be at least max(p, q)");
  }
  if (ar_order < 2 * formants) fail("p must be at least 2I");
  if (ma_order < 2 * antiformants) fail("q must be at least 2J");
  if (!(q_frequency_std_hz > 0 && q_bandwidth_std_hz > 0 && r_scale > 0)) {
    fail("noise scales must be positive");
  }
  if (!initial_mean.empty() &&
      static_cast<int>(initial_mean.size()) != 2 * (formants + antiformants)) {
    fail("initial mean has wrong length");
  }
}

std::string config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  auto& a = j["analysis"];
  a["target_sample_rate_hz"] = c.target_sample_rate_hz;
  a["frame_ms"] = c.frame_ms;
  a["overlap"] = c.overlap;
  a["gamma"] = c.preemphasis;
  a["window"] = to_string(c.window);
  a["p"] = c.ar_order;
  a["q"] = c.ma_order;
  a["N"] = c.cepstral_order;
  a["I"] = c.formants;
  a["J"] = c.antiformants;
  a["observation_source"] = to_string(c.observation);
  a["activity_threshold_db"] = c.activity_threshold_db;
  a["silence_labels"] = c.silence_labels;
  auto& t = j["tracker"];
  t["estimate_transition"] = c.estimate_transition;
  t["q_frequency_std_hz"] = c.q_frequency_std_hz;
  t["q_bandwidth_std_hz"] = c.q_bandwidth_std_hz;
  t["r_scale"] = c.r_scale;
  t["initial_mean"] = c.initial_mean;
  j["mode"] = to_string(c.mode);
  return j.dump(2) + "\n";
}

namespace {

void apply_analysis(const nlohmann::json& a, RunConfig& c) {
  for (auto it = a.begin(); it != a.end(); ++it) {
    const std::string& k = it.key();
    const nlohmann::json& v = it.value();
    if (k == "target_sample_rate_hz") c.target_sample_rate_hz = v.get<double>();
    else if (k == "frame_ms") c.frame_ms = v.get<double>();
    else if (k == "overlap") c.overlap = v.get<double>();
    else if (k == "gamma") c.preemphasis = v.get<double>();
    else if (k == "window") c.window = parse_window_kind(v.get<std::string>());
    else if (k == "p") c.ar_order = v.get<int>();
    else if (k == "q") c.ma_order = v.get<int>();
    else if (k == "N") c.cepstral_order = v.get<int>();
    else if (k == "I") c.formants = v.get<int>();
    else if (k == "J") c.antiformants = v.get<int>();
    else if (k == "observation_source") c.observation = parse_observation_source(v.get<std::string>());
    else if (k == "activity_threshold_db") c.activity_threshold_db = v.get<double>();
    else if (k == "silence_labels") c.silence_labels = v.get<std::vector<std::string>>();
    else throw std::invalid_argument("invalid config: unknown key analysis." + k);
  }
}

void apply_tracker(const nlohmann::json& t, RunConfig& c) {
  for (auto it = t.begin(); it != t.end(); ++it) {
    const std::string& k = it.key();
    const nlohmann::json& v = it.value();
    if (k == "estimate_transition") c.estimate_transition = v.get<bool>();
    else if (k == "q_frequency_std_hz") c.q_frequency_std_hz = v.get<double>();
    else if (k == "q_bandwidth_std_hz") c.q_bandwidth_std_hz = v.get<double>();
    else if (k == "r_scale") c.r_scale = v.get<double>();
    else if (k == "initial_mean") c.initial_mean = v.get<std::vector<double>>();
    else throw std::invalid_argument("invalid config: unknown key tracker." + k);
  }
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("invalid config: not an object");
  RunConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "analysis" && it->is_object()) apply_analysis(*it, c);
      else if (k == "tracker" && it->is_object()) apply_tracker(*it, c);
      else if (k == "mode") c.mode = parse_track_mode(it->get<std::string>());
      else throw std::invalid_argument("invalid config: unknown key " + k);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

Analysis analyze(const Waveform& w, const RunConfig& config,
                 const std::vector<LabelSegment>* labels) {
  config.validate();
  validate(w);
  const Waveform x = std::abs(w.sample_rate_hz - config.target_sample_rate_hz) > 1e-9
                         ? resample(w, config.target_sample_rate_hz)
                         : w;
  Analysis a;
  a.sample_rate_hz = x.sample_rate_hz;
  a.frames = window_frames(x, config.frame_ms, config.overlap, config.window);
  a.speech = labels ? activity_from_labels(*labels, a.frames, w.sample_rate_hz,
                                           config.silence_labels)
                    : detect_activity(a.frames, config.activity_threshold_db);
  const int n = config.cepstral_order;
  for (int t = 0; t < a.frames.size(); ++t) {
    const std::vector<double> frame =
        preemphasize(a.frames.frames[t], config.preemphasis);
    bool silent = true;
    for (double s : frame) silent = silent && s == 0.0;
    if (silent) {
      a.observations.push_back(CepstralVector{Eigen::VectorXd::Zero(n)});
      a.speech.flags[t] = false;
      continue;
    }
    if (config.observation == ObservationSource::kRealCepstrum) {
      a.observations.push_back(real_cepstrum(frame, n));
    } else {
      const ArmaModel m = estimate_arma(frame, config.ar_order, config.ma_order);
      a.observations.push_back(arma_to_cepstrum(m, n));
    }
  }
  return a;
}

TrackerParams tracker_params(const RunConfig& config, double sample_rate_hz) {
  TrackerParams p = default_params(config.formants, config.antiformants,
                                   sample_rate_hz, config.cepstral_order);
  const StateLayout& layout = p.layout;
  for (int k = 0; k < layout.dimension(); ++k) {
    const double sd = layout.is_frequency(k) ? config.q_frequency_std_hz
                                             : config.q_bandwidth_std_hz;
    p.process_noise(k, k) = sd * sd;
  }
  p.initial_cov = p.process_noise;
  p.observation_noise *= config.r_scale;
  if (!config.initial_mean.empty()) {
    p.initial_mean = Eigen::Map<const Eigen::VectorXd>(
        config.initial_mean.data(), config.initial_mean.size());
  }
  return p;
}

namespace {

TrackResult run_mode(const Analysis& a, const TrackerParams& params,
                     TrackMode mode, const TrackActivation& activation) {
  return mode == TrackMode::kFilter
             ? ekf_filter(a.observations, params, a.speech, activation)
             : eks_smooth(a.observations, params, a.speech, activation);
}

}  // namespace

TrackerParams fitted_params(const Analysis& a, const RunConfig& config,
                            const TrackActivation& activation,
                            std::vector<std::string>* notes) {
  TrackerParams params = tracker_params(config, a.sample_rate_hz);
  if (!config.estimate_transition || a.speech.count() <= 2) return params;
  const TrackResult first = run_mode(a, params, config.mode, activation);
  const int formants = config.formants;
  Eigen::MatrixXd tracks(first.frames(), formants);
  for (int t = 0; t < first.frames(); ++t) {
    for (int i = 0; i < formants; ++i) {
      tracks(t, i) = first.means[t][params.layout.formant_freq(i)];
    }
  }
  const TransitionEstimate est = estimate_transition(tracks, &a.speech);
  if (notes && !est.warning.empty()) notes->push_back(est.warning);
  for (int i = 0; i < formants; ++i) {
    for (int k = 0; k < formants; ++k) {
      params.transition(params.layout.formant_freq(i),
                        params.layout.formant_freq(k)) = est.transition(i, k);
    }
  }
  return params;
}

TrackResult track_analysis(const Analysis& a, const RunConfig& config,
                           const TrackActivation& activation) {
  std::vector<std::string> notes;
  const TrackerParams params = fitted_params(a, config, activation, &notes);
  TrackResult result = run_mode(a, params, config.mode, activation);
  result.hop_s = a.frames.hop_s();
  result.start_s = a.frames.frame_time_s(0);
  result.warnings.insert(result.warnings.begin(), notes.begin(), notes.end());
  return result;
}

TrackResult track_waveform(const Waveform& w, const RunConfig& config,
                           const std::vector<LabelSegment>* labels) {
  return track_analysis(analyze(w, config, labels), config);
}

}  // namespace karma
