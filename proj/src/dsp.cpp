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

#include "karma/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace karma {

void validate(const Waveform& w) {
  if (!(w.sample_rate_hz > 0.0) || !std::isfinite(w.sample_rate_hz)) {
    throw std::invalid_argument("sample rate must be positive");
  }
  for (double s : w.samples) {
    if (!std::isfinite(s)) {
      throw std::invalid_argument("waveform contains non-finite samples");
    }
  }
}

WindowKind parse_window_kind(const std::string& name) {
  if (name == "hamming") return WindowKind::kHamming;
  if (name == "hanning" || name == "hann") return WindowKind::kHanning;
  if (name == "rectangular" || name == "rect") return WindowKind::kRectangular;
  throw std::invalid_argument("unknown window kind: " + name);
}

std::string to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::kHamming:
      return "hamming";
    case WindowKind::kHanning:
      return "hanning";
    case WindowKind::kRectangular:
      return "rectangular";
  }
  return "unknown";
}

std::vector<double> make_window(WindowKind kind, int length, bool periodic) {
  std::vector<double> w(length, 1.0);
  if (kind == WindowKind::kRectangular || length <= 1) return w;
  const double denom = periodic ? length : length - 1;
  const double alpha = kind == WindowKind::kHamming ? 0.54 : 0.5;
  for (int n = 0; n < length; ++n) {
    w[n] = alpha - (1.0 - alpha) * std::cos(2.0 * std::numbers::pi * n / denom);
  }
  return w;
}

int ActivityMask::count() const {
  return static_cast<int>(std::count(flags.begin(), flags.end(), true));
}

int frame_length_samples(double frame_ms, double sample_rate_hz) {
  return static_cast<int>(std::lround(frame_ms * 1e-3 * sample_rate_hz));
}

int hop_samples(int frame_length, double overlap_fraction) {
  return std::max(1, static_cast<int>(
                         std::lround(frame_length * (1.0 - overlap_fraction))));
}

FrameSequence window_frames(const Waveform& w, double frame_ms,
                            double overlap_fraction, WindowKind kind) {
  validate(w);
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw std::invalid_argument("overlap fraction must lie in [0, 1)");
  }
  const int length = frame_length_samples(frame_ms, w.sample_rate_hz);
  if (length < 1) throw std::invalid_argument("frame shorter than one sample");
  const long total = static_cast<long>(w.samples.size());
  if (total < length) throw std::invalid_argument("input too short");

  FrameSequence seq;
  seq.frame_length = length;
  seq.hop = hop_samples(length, overlap_fraction);
  seq.window_kind = kind;
  seq.sample_rate_hz = w.sample_rate_hz;

  const std::vector<double> window = make_window(kind, length);
  long count = (total - length) / seq.hop + 1;
  if ((count - 1) * seq.hop + length < total) ++count;  // zero-padded tail
  seq.frames.reserve(count);
  for (long t = 0; t < count; ++t) {
    std::vector<double> frame(length, 0.0);
    const long start = t * seq.hop;
    for (int m = 0; m < length && start + m < total; ++m) {
      frame[m] = w.samples[start + m] * window[m];
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

std::vector<double> preemphasize(std::span<const double> frame, double gamma) {
  std::vector<double> out(frame.size());
  double prev = 0.0;
  for (size_t m = 0; m < frame.size(); ++m) {
    out[m] = frame[m] - gamma * prev;
    prev = frame[m];
  }
  return out;
}

std::vector<double> deemphasize(std::span<const double> frame, double gamma) {
  std::vector<double> out(frame.size());
  double prev = 0.0;
  for (size_t m = 0; m < frame.size(); ++m) {
    out[m] = frame[m] + gamma * prev;
    prev = out[m];
  }
  return out;
}

namespace {

// Zeroth-order modified Bessel function of the first kind (power series).
double bessel_i0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double half_sq = 0.25 * x * x;
  for (int k = 1; k < 200; ++k) {
    term *= half_sq / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// Tabulated half of a symmetric Kaiser-windowed sinc low-pass kernel,
// sampled at `oversample` points per input sample.
class SincKernel {
 public:
  SincKernel(double cutoff_cycles, double half_width, double beta)
      : half_width_(half_width) {
    const int n = static_cast<int>(std::ceil(half_width * kOversample)) + 2;
    table_.resize(n);
    const double i0_beta = bessel_i0(beta);
    for (int i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / kOversample;
      table_[i] = evaluate(u, cutoff_cycles, beta, i0_beta);
    }
  }

  double operator()(double u) const {
    u = std::abs(u);
    if (u >= half_width_) return 0.0;
    const double pos = u * kOversample;
    const int i = static_cast<int>(pos);
    const double frac = pos - i;
    return table_[i] + frac * (table_[i + 1] - table_[i]);
  }

  double half_width() const { return half_width_; }

 private:
  static constexpr int kOversample = 1024;

  double evaluate(double u, double fc, double beta, double i0_beta) const {
    if (u >= half_width_) return 0.0;
    const double x = 2.0 * fc * u;
    const double sinc =
        x == 0.0 ? 1.0
                 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double r = u / half_width_;
    const double window = bessel_i0(beta * std::sqrt(1.0 - r * r)) / i0_beta;
    return 2.0 * fc * sinc * window;
  }

  double half_width_;
  std::vector<double> table_;
};

}  // namespace

Waveform resample(const Waveform& w, double target_hz) {
  if (!(target_hz > 0.0)) throw std::invalid_argument("target rate must be > 0");
  if (target_hz == w.sample_rate_hz) return w;

  const double source_hz = w.sample_rate_hz;
  const double ratio = target_hz / source_hz;
  // Pass band to 85 % of the lower Nyquist rate, stop band from 100 %.
  const double nyquist = 0.5 * std::min(source_hz, target_hz);
  const double transition_hz = 0.15 * nyquist;
  const double cutoff_hz = nyquist - 0.5 * transition_hz;
  constexpr double kAttenuationDb = 80.0;
  const double beta = 0.1102 * (kAttenuationDb - 8.7);
  const double delta_omega =
      2.0 * std::numbers::pi * transition_hz / source_hz;
  const double taps = (kAttenuationDb - 7.95) / (2.285 * delta_omega);
  const SincKernel kernel(cutoff_hz / source_hz, 0.5 * taps + 1.0, beta);

  const long in_len = static_cast<long>(w.samples.size());
  const long out_len = std::lround(in_len * ratio);
  Waveform out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(out_len);
  const double reach = kernel.half_width();
  for (long k = 0; k < out_len; ++k) {
    const double t = k / ratio;
    const long lo = std::max(0L, static_cast<long>(std::ceil(t - reach)));
    const long hi =
        std::min(in_len - 1, static_cast<long>(std::floor(t + reach)));
    double acc = 0.0;
    for (long n = lo; n <= hi; ++n) acc += w.samples[n] * kernel(t - n);
    out.samples[k] = acc;
  }
  return out;
}

ActivityMask detect_activity(const FrameSequence& frames, double threshold_db) {
  std::vector<double> rms(frames.size(), 0.0);
  double peak = 0.0;
  for (int t = 0; t < frames.size(); ++t) {
    double energy = 0.0;
    for (double s : frames.frames[t]) energy += s * s;
    rms[t] = std::sqrt(energy / std::max<size_t>(1, frames.frames[t].size()));
    peak = std::max(peak, rms[t]);
  }
  ActivityMask mask;
  mask.flags.resize(frames.size());
  for (int t = 0; t < frames.size(); ++t) {
    const double level = rms[t] > 0.0
                             ? 20.0 * std::log10(rms[t] / peak)
                             : -std::numeric_limits<double>::infinity();
    mask.flags[t] = level >= threshold_db;
  }
  return mask;
}

std::vector<std::string> default_silence_labels() {
  return {"pau", "epi", "h#", "bcl", "dcl", "gcl", "pcl", "tcl", "kcl", "q"};
}

std::vector<LabelSegment> parse_labels(const std::string& text) {
  std::vector<LabelSegment> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    LabelSegment seg;
    if (!(fields >> seg.start_sample >> seg.end_sample >> seg.label) ||
        seg.end_sample < seg.start_sample) {
      throw std::runtime_error("malformed label at line " +
                               std::to_string(line_no));
    }
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<LabelSegment> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_labels(buf.str());
}

ActivityMask activity_from_labels(const std::vector<LabelSegment>& labels,
                                  const FrameSequence& frames,
                                  double label_rate_hz,
                                  const std::vector<std::string>& silence) {
  std::vector<std::pair<long, long>> silent;
  for (const auto& seg : labels) {
    if (std::find(silence.begin(), silence.end(), seg.label) != silence.end()) {
      silent.emplace_back(seg.start_sample, seg.end_sample);
    }
  }
  std::sort(silent.begin(), silent.end());
  // Merge touching silence segments so coverage is a single interval test.
  std::vector<std::pair<long, long>> merged;
  for (const auto& s : silent) {
    if (!merged.empty() && s.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, s.second);
    } else {
      merged.push_back(s);
    }
  }

  const double scale = label_rate_hz / frames.sample_rate_hz;
  ActivityMask mask;
  mask.flags.resize(frames.size(), true);
  for (int t = 0; t < frames.size(); ++t) {
    const long begin = static_cast<long>(std::floor(t * frames.hop * scale));
    const long end = static_cast<long>(
        std::ceil((t * frames.hop + frames.frame_length) * scale));
    for (const auto& [lo, hi] : merged) {
      if (lo <= begin && end <= hi) {
        mask.flags[t] = false;
        break;
      }
    }
  }
  return mask;
}

}  // namespace karma
