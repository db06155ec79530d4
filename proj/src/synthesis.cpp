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

#include "karma/synthesis.hpp"

#include <algorithm>
#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>
#include <cmath>
#include <fstream>
#include "json.hpp"
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace karma {

namespace {

constexpr double kPi = std::numbers::pi;

// Coefficients of 1 - 2 r cos(theta) z^-1 + r^2 z^-2 multiplied into
// `poly` (trailing-coefficient form, leading 1 implied).
void multiply_section(std::vector<double>& poly, double freq, double bw,
                      double fs) {
  const double r = std::exp(-kPi * bw / fs);
  const double c1 = -2.0 * r * std::cos(2.0 * kPi * freq / fs);
  const double c2 = r * r;
  std::vector<double> full(poly.size() + 1);
  full[0] = 1.0;
  std::copy(poly.begin(), poly.end(), full.begin() + 1);
  std::vector<double> out(full.size() + 2, 0.0);
  for (size_t k = 0; k < full.size(); ++k) {
    out[k] += full[k];
    out[k + 1] += c1 * full[k];
    out[k + 2] += c2 * full[k];
  }
  poly.assign(out.begin() + 1, out.end());
}

std::vector<double> pchip_curve(std::vector<double> knots_t,
                                std::vector<double> knots_v,
                                const std::vector<double>& at) {
  if (knots_t.size() < 4) {
    // boost's pchip needs four knots; pad with interior midpoints.
    while (knots_t.size() < 4) {
      size_t widest = 0;
      for (size_t k = 1; k + 1 < knots_t.size(); ++k) {
        if (knots_t[k + 1] - knots_t[k] > knots_t[widest + 1] - knots_t[widest])
          widest = k;
      }
      const double tm = 0.5 * (knots_t[widest] + knots_t[widest + 1]);
      const double vm = 0.5 * (knots_v[widest] + knots_v[widest + 1]);
      knots_t.insert(knots_t.begin() + widest + 1, tm);
      knots_v.insert(knots_v.begin() + widest + 1, vm);
    }
  }
  const double t_lo = knots_t.front();
  const double t_hi = knots_t.back();
  using boost::math::interpolators::pchip;
  auto spline = pchip<std::vector<double>>(std::move(knots_t), std::move(knots_v));
  std::vector<double> out(at.size());
  for (size_t k = 0; k < at.size(); ++k) {
    out[k] = spline(std::clamp(at[k], t_lo, t_hi));
  }
  return out;
}

}  // namespace

SourceKind parse_source_kind(const std::string& name) {
  if (name == "white_noise") return SourceKind::kWhiteNoise;
  if (name == "rosenberg" || name == "rosenberg_c") return SourceKind::kRosenberg;
  if (name == "silence") return SourceKind::kSilence;
  throw std::invalid_argument("unknown source kind: " + name);
}

std::string to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::kWhiteNoise:
      return "white_noise";
    case SourceKind::kRosenberg:
      return "rosenberg";
    case SourceKind::kSilence:
      return "silence";
  }
  return "unknown";
}

int TrajectorySpec::formants() const {
  return frames.empty() ? 0 : frames.front().state.num_formants();
}

int TrajectorySpec::antiformants() const {
  return frames.empty() ? 0 : frames.front().state.num_antiformants();
}

void TrajectorySpec::validate() const {
  if (frames.empty()) throw std::invalid_argument("spec has no frames");
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("bad sample rate");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw std::invalid_argument("overlap must lie in [0, 1)");
  }
  if (frame_length_samples(frame_ms, sample_rate_hz) < 2) {
    throw std::invalid_argument("frame too short");
  }
  const int i = formants();
  const int j = antiformants();
  for (size_t t = 0; t < frames.size(); ++t) {
    const auto& f = frames[t];
    if (f.state.num_formants() != i || f.state.num_antiformants() != j) {
      throw std::invalid_argument("frame " + std::to_string(t) +
                                  ": inconsistent track count");
    }
    if (std::abs(f.state.sample_rate_hz - sample_rate_hz) > 1e-9) {
      throw std::invalid_argument("frame " + std::to_string(t) +
                                  ": sample rate mismatch");
    }
    f.state.validate();
    if (!f.active.empty() && static_cast<int>(f.active.size()) != i + j) {
      throw std::invalid_argument("frame " + std::to_string(t) +
                                  ": activity flag count mismatch");
    }
    if (f.source == SourceKind::kRosenberg &&
        !(f.f0_hz > 0.0 && f.f0_hz < 0.5 * sample_rate_hz)) {
      throw std::invalid_argument("frame " + std::to_string(t) +
                                  ": f0 must lie in (0, fs/2)");
    }
  }
}

ArmaModel resonator_cascade(const ResonanceState& x,
                            const std::vector<bool>& active) {
  const double fs = x.sample_rate_hz;
  const int formants = x.num_formants();
  std::vector<double> den, num;
  for (int i = 0; i < formants; ++i) {
    if (!active.empty() && !active[i]) continue;
    multiply_section(den, x.formant_freqs[i], x.formant_bws[i], fs);
  }
  for (int j = 0; j < x.num_antiformants(); ++j) {
    if (!active.empty() && !active[formants + j]) continue;
    multiply_section(num, x.antiformant_freqs[j], x.antiformant_bws[j], fs);
  }
  ArmaModel m;
  m.ar.resize(den.size());
  for (size_t k = 0; k < den.size(); ++k) m.ar[k] = -den[k];
  m.ma = std::move(num);
  m.noise_variance = 1.0;
  return m;
}

std::vector<double> rosenberg_source(std::span<const double> f0_per_segment,
                                     int segment_length, double sample_rate_hz,
                                     const RosenbergShape& shape) {
  for (double f0 : f0_per_segment) {
    if (!(f0 > 0.0 && f0 < 0.5 * sample_rate_hz)) {
      throw std::invalid_argument("f0 must lie in (0, fs/2)");
    }
  }
  const double open = shape.open_fraction;
  const double close = shape.close_fraction;
  std::vector<double> out;
  out.reserve(f0_per_segment.size() * segment_length);
  double phase = 0.0;
  for (double f0 : f0_per_segment) {
    const double step = f0 / sample_rate_hz;
    for (int m = 0; m < segment_length; ++m) {
      double g = 0.0;
      if (phase < open) {
        g = 0.5 * (1.0 - std::cos(kPi * phase / open));
      } else if (phase < open + close) {
        g = std::cos(0.5 * kPi * (phase - open) / close);
      }
      out.push_back(g);
      phase += step;
      if (phase >= 1.0 - 1e-9) phase = std::max(0.0, phase - 1.0);
    }
  }
  return out;
}

SynthesisResult synthesize(const TrajectorySpec& spec) {
  spec.validate();
  const double fs = spec.sample_rate_hz;
  const int length = frame_length_samples(spec.frame_ms, fs);
  const int hop = hop_samples(length, spec.overlap_fraction);
  const int frames = static_cast<int>(spec.frames.size());
  const long total = static_cast<long>(frames - 1) * hop + length;

  // Continuous excitations, sliced per frame.
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(total);
  for (double& v : noise) v = normal(rng);

  const long segments = (total + hop - 1) / hop;
  std::vector<double> f0(segments);
  double last_f0 = 100.0;
  for (const auto& f : spec.frames) {
    if (f.source == SourceKind::kRosenberg) {
      last_f0 = f.f0_hz;
      break;
    }
  }
  for (long s = 0; s < segments; ++s) {
    const auto& f = spec.frames[std::min<long>(s, frames - 1)];
    if (f.source == SourceKind::kRosenberg) last_f0 = f.f0_hz;
    f0[s] = last_f0;
  }
  // Lip radiation: voiced frames are excited by the differentiated flow.
  std::vector<double> glottal = rosenberg_source(f0, hop, fs, spec.rosenberg);
  for (size_t m = glottal.size(); m-- > 1;) glottal[m] -= glottal[m - 1];

  const std::vector<double> window =
      make_window(WindowKind::kHanning, length, /*periodic=*/true);
  Waveform out;
  out.sample_rate_hz = fs;
  out.samples.assign(total, 0.0);

  std::vector<double> x(length), y(length);
  for (int t = 0; t < frames; ++t) {
    const TrajectoryFrame& frame = spec.frames[t];
    if (frame.source == SourceKind::kSilence) continue;
    const long start = static_cast<long>(t) * hop;
    const std::vector<double>& src =
        frame.source == SourceKind::kWhiteNoise ? noise : glottal;
    std::copy(src.begin() + start, src.begin() + start + length, x.begin());

    const ArmaModel model = resonator_cascade(frame.state, frame.active);
    for (int m = 0; m < length; ++m) {
      double acc = x[m];
      for (int j = 1; j <= model.q() && j <= m; ++j) acc += model.ma[j - 1] * x[m - j];
      for (int i = 1; i <= model.p() && i <= m; ++i) acc += model.ar[i - 1] * y[m - i];
      y[m] = acc;
    }
    for (int m = 0; m < length; ++m) out.samples[start + m] += window[m] * y[m];
  }

  if (spec.peak_amplitude > 0.0) {
    double peak = 0.0;
    for (double s : out.samples) peak = std::max(peak, std::abs(s));
    if (peak > 0.0) {
      const double gain = spec.peak_amplitude / peak;
      for (double& s : out.samples) s *= gain;
    }
  }

  SynthesisResult result;
  result.waveform = std::move(out);
  TrackResult& ref = result.reference;
  ref.layout = StateLayout{spec.formants(), spec.antiformants()};
  ref.sample_rate_hz = fs;
  ref.hop_s = hop / fs;
  ref.start_s = 0.5 * length / fs;
  const int tracks = spec.formants() + spec.antiformants();
  const int d = ref.layout.dimension();
  for (const auto& frame : spec.frames) {
    ref.means.push_back(frame.state.pack());
    ref.covariances.push_back(Eigen::MatrixXd::Zero(d, d));
    ref.speech.push_back(frame.source != SourceKind::kSilence);
    ref.track_active.push_back(frame.active.empty()
                                   ? std::vector<bool>(tracks, true)
                                   : frame.active);
  }
  return result;
}

std::vector<FormantRange> default_formant_ranges() {
  return {{250.0, 900.0},
          {900.0, 2300.0},
          {1800.0, 3000.0},
          {3000.0, 4000.0},
          {3800.0, 4800.0}};
}

TrajectorySpec random_trajectory(int formants, double duration_s,
                                 uint64_t seed, double sample_rate_hz) {
  const auto ranges = default_formant_ranges();
  if (formants < 1 || formants > static_cast<int>(ranges.size())) {
    throw std::invalid_argument("random trajectories support 1-5 formants");
  }
  if (ranges[formants - 1].hi_hz >= 0.5 * sample_rate_hz) {
    throw std::invalid_argument("formant range exceeds Nyquist");
  }
  TrajectorySpec spec;
  spec.sample_rate_hz = sample_rate_hz;
  spec.seed = seed;
  const int length = frame_length_samples(spec.frame_ms, sample_rate_hz);
  const int hop = hop_samples(length, spec.overlap_fraction);
  const int frames = std::max<int>(
      1, static_cast<int>(std::lround((duration_s * sample_rate_hz - length) /
                                      hop)) + 1);

  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double span_s = (frames - 1) * hop / sample_rate_hz;
  std::vector<double> knot_t{0.0};
  while (knot_t.back() < span_s) {
    knot_t.push_back(knot_t.back() + 0.10 + 0.15 * unit(rng));
  }
  std::vector<double> times(frames);
  for (int t = 0; t < frames; ++t) times[t] = t * hop / sample_rate_hz;

  std::vector<std::vector<double>> freq(formants), bw(formants);
  for (int i = 0; i < formants; ++i) {
    std::vector<double> fv(knot_t.size()), bv(knot_t.size());
    for (size_t k = 0; k < knot_t.size(); ++k) {
      fv[k] = ranges[i].lo_hz + (ranges[i].hi_hz - ranges[i].lo_hz) * unit(rng);
      bv[k] = 40.0 + 210.0 * unit(rng);
    }
    freq[i] = pchip_curve(knot_t, fv, times);
    bw[i] = pchip_curve(knot_t, bv, times);
  }

  spec.frames.resize(frames);
  for (int t = 0; t < frames; ++t) {
    ResonanceState& s = spec.frames[t].state;
    s.sample_rate_hz = sample_rate_hz;
    for (int i = 0; i < formants; ++i) {
      double f = std::clamp(freq[i][t], ranges[i].lo_hz, ranges[i].hi_hz);
      if (i > 0) f = std::max(f, s.formant_freqs[i - 1] + 150.0);
      s.formant_freqs.push_back(f);
      s.formant_bws.push_back(std::clamp(bw[i][t], 40.0, 250.0));
    }
  }
  return spec;
}

TrajectorySpec with_glottal_source(TrajectorySpec spec, double f0_lo,
                                   double f0_hi, uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xD1B54A32D192ED03ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int frames = static_cast<int>(spec.frames.size());
  const int length = frame_length_samples(spec.frame_ms, spec.sample_rate_hz);
  const double hop_s =
      hop_samples(length, spec.overlap_fraction) / spec.sample_rate_hz;
  const double span_s = (frames - 1) * hop_s;
  std::vector<double> knot_t{0.0}, knot_v{f0_lo + (f0_hi - f0_lo) * unit(rng)};
  while (knot_t.back() < span_s) {
    knot_t.push_back(knot_t.back() + 0.15 + 0.2 * unit(rng));
    knot_v.push_back(f0_lo + (f0_hi - f0_lo) * unit(rng));
  }
  std::vector<double> times(frames);
  for (int t = 0; t < frames; ++t) times[t] = t * hop_s;
  const std::vector<double> f0 = pchip_curve(knot_t, knot_v, times);
  for (int t = 0; t < frames; ++t) {
    auto& f = spec.frames[t];
    if (f.source == SourceKind::kSilence) continue;
    f.source = SourceKind::kRosenberg;
    f.f0_hz = std::clamp(f0[t], f0_lo, f0_hi);
  }
  return spec;
}

TrajectorySpec with_silence(TrajectorySpec spec, int first, int count) {
  const int end = std::min<int>(first + count, spec.frames.size());
  for (int t = std::max(0, first); t < end; ++t) {
    spec.frames[t].source = SourceKind::kSilence;
  }
  return spec;
}

TrajectorySpec nan_trajectory(uint64_t seed, double f0_hz,
                              const NanLayout& layout) {
  constexpr double kFs = 10000.0;
  TrajectorySpec spec;
  spec.sample_rate_hz = kFs;
  spec.frame_ms = 100.0;
  spec.overlap_fraction = 0.5;
  spec.seed = seed;

  const double nasal_f[2] = {257.0, 1891.0};
  const double nasal_b[2] = {32.0, 100.0};
  const double vowel_f[2] = {850.0, 1500.0};
  const double vowel_b[2] = {80.0, 120.0};
  constexpr double kZeroF = 1223.0;
  constexpr double kZeroB = 52.0;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, layout.jitter_hz);
  double walk[3] = {0.0, 0.0, 0.0};

  spec.frames.resize(layout.frames);
  for (int t = 0; t < layout.frames; ++t) {
    // Vowel weight: 0 in /n/, 1 in /a/, linear across transitions.
    double w = 0.0;
    const int rise = layout.nasal_frames;
    const int fall = layout.frames - layout.nasal_frames;
    if (t >= rise && t < fall) {
      const double up = (t - rise + 1.0) / (layout.transition_frames + 1.0);
      const double down = (fall - t) / (layout.transition_frames + 1.0);
      w = std::min({1.0, up, down});
    }
    for (double& v : walk) v = (layout.random_walk ? v : 0.0) + step(rng);

    TrajectoryFrame& frame = spec.frames[t];
    ResonanceState& s = frame.state;
    s.sample_rate_hz = kFs;
    for (int i = 0; i < 2; ++i) {
      s.formant_freqs.push_back((1 - w) * nasal_f[i] + w * vowel_f[i] + walk[i]);
      s.formant_bws.push_back((1 - w) * nasal_b[i] + w * vowel_b[i]);
    }
    s.antiformant_freqs.push_back(kZeroF + walk[2]);
    s.antiformant_bws.push_back(kZeroB);
    frame.active = {true, true, layout.is_nasal(t)};
    frame.source = SourceKind::kRosenberg;
    frame.f0_hz = f0_hz;
  }
  return spec;
}

std::string spec_to_json(const TrajectorySpec& spec) {
  nlohmann::json j;
  j["sample_rate_hz"] = spec.sample_rate_hz;
  j["frame_ms"] = spec.frame_ms;
  j["overlap"] = spec.overlap_fraction;
  j["seed"] = spec.seed;
  j["formants"] = spec.formants();
  j["antiformants"] = spec.antiformants();
  j["rosenberg"] = {{"open", spec.rosenberg.open_fraction},
                    {"close", spec.rosenberg.close_fraction}};
  j["peak"] = spec.peak_amplitude;
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : spec.frames) {
    nlohmann::json fj;
    fj["f"] = f.state.formant_freqs;
    fj["b"] = f.state.formant_bws;
    fj["af"] = f.state.antiformant_freqs;
    fj["ab"] = f.state.antiformant_bws;
    fj["source"] = to_string(f.source);
    if (f.source == SourceKind::kRosenberg) fj["f0"] = f.f0_hz;
    if (!f.active.empty()) fj["active"] = f.active;
    frames.push_back(std::move(fj));
  }
  j["frames"] = std::move(frames);
  return j.dump(1);
}

TrajectorySpec spec_from_json(const std::string& text) {
  TrajectorySpec spec;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("spec must be an object");
    static const char* kKeys[] = {"sample_rate_hz", "frame_ms", "overlap",
                                  "seed", "formants", "antiformants",
                                  "rosenberg", "peak", "frames"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::find(std::begin(kKeys), std::end(kKeys), it.key()) ==
          std::end(kKeys)) {
        throw std::invalid_argument("unknown spec key: " + it.key());
      }
    }
    spec.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    spec.frame_ms = j.at("frame_ms").get<double>();
    spec.overlap_fraction = j.at("overlap").get<double>();
    spec.seed = j.at("seed").get<uint64_t>();
    const int formants = j.at("formants").get<int>();
    const int antiformants = j.at("antiformants").get<int>();
    if (j.contains("rosenberg")) {
      spec.rosenberg.open_fraction = j["rosenberg"].at("open").get<double>();
      spec.rosenberg.close_fraction = j["rosenberg"].at("close").get<double>();
    }
    if (j.contains("peak")) spec.peak_amplitude = j["peak"].get<double>();
    for (const auto& fj : j.at("frames")) {
      TrajectoryFrame f;
      f.state.sample_rate_hz = spec.sample_rate_hz;
      f.state.formant_freqs = fj.at("f").get<std::vector<double>>();
      f.state.formant_bws = fj.at("b").get<std::vector<double>>();
      f.state.antiformant_freqs =
          fj.value("af", std::vector<double>{});
      f.state.antiformant_bws = fj.value("ab", std::vector<double>{});
      if (f.state.num_formants() != formants ||
          f.state.num_antiformants() != antiformants) {
        throw std::invalid_argument("frame track count does not match header");
      }
      f.source = parse_source_kind(fj.at("source").get<std::string>());
      f.f0_hz = fj.value("f0", 0.0);
      if (fj.contains("active")) f.active = fj["active"].get<std::vector<bool>>();
      spec.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid spec json: ") + e.what());
  }
  spec.validate();
  return spec;
}

TrajectorySpec read_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return spec_from_json(buf.str());
}

void write_spec(const TrajectorySpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << spec_to_json(spec) << '\n';
}

}  // namespace karma
