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

// Waveform ingestion and short-time analysis framing.

#ifndef KARMA_DSP_HPP_
#define KARMA_DSP_HPP_

#include <span>
#include <string>
#include <vector>

namespace karma {

struct Waveform {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Throws std::invalid_argument unless the rate is positive and every sample
// is finite.
void validate(const Waveform& w);

enum class WindowKind { kHamming, kHanning, kRectangular };

WindowKind parse_window_kind(const std::string& name);
std::string to_string(WindowKind kind);

// Periodic windows (the default) overlap-add to a constant at 50 % overlap;
// symmetric ones match the textbook definition.
std::vector<double> make_window(WindowKind kind, int length,
                                bool periodic = true);

struct FrameSequence {
  std::vector<std::vector<double>> frames;
  int frame_length = 0;
  int hop = 0;
  WindowKind window_kind = WindowKind::kHamming;
  double sample_rate_hz = 0.0;

  int size() const { return static_cast<int>(frames.size()); }
  double hop_s() const { return hop / sample_rate_hz; }
  // Time of the frame centre in seconds.
  double frame_time_s(int t) const {
    return (t * hop + 0.5 * frame_length) / sample_rate_hz;
  }
};

struct ActivityMask {
  std::vector<bool> flags;

  int size() const { return static_cast<int>(flags.size()); }
  int count() const;
  static ActivityMask all(int frames, bool value) {
    return ActivityMask{std::vector<bool>(frames, value)};
  }
};

int frame_length_samples(double frame_ms, double sample_rate_hz);
int hop_samples(int frame_length, double overlap_fraction);

// Frame t covers samples [t*hop, t*hop + frame_length). A nonempty tail
// beyond the last full frame produces one zero-padded extra frame.
FrameSequence window_frames(const Waveform& w, double frame_ms,
                            double overlap_fraction, WindowKind kind);

// out[m] = in[m] - gamma*in[m-1] with in[-1] = 0.
std::vector<double> preemphasize(std::span<const double> frame, double gamma);

// Inverse of preemphasize: y[m] = x[m] + gamma*y[m-1].
std::vector<double> deemphasize(std::span<const double> frame, double gamma);

// Band-limited (Kaiser windowed-sinc) sample-rate conversion. Output length
// is round(len * target / source). Content above target/2 is attenuated by
// at least 60 dB when downsampling.
Waveform resample(const Waveform& w, double target_hz);

// Flag is true iff the frame RMS level in dB relative to the loudest frame
// is at least threshold_db. All-zero frames are never active.
ActivityMask detect_activity(const FrameSequence& frames, double threshold_db);

struct LabelSegment {
  long start_sample = 0;
  long end_sample = 0;  // exclusive
  std::string label;
};

std::vector<std::string> default_silence_labels();

// Parses lines of "start_sample end_sample label". Throws std::runtime_error
// naming the line on malformed input.
std::vector<LabelSegment> read_labels(const std::string& path);
std::vector<LabelSegment> parse_labels(const std::string& text);

// A frame is silent iff all of its samples fall in segments whose label is
// in the silence set. Label sample indices are at label_rate_hz; frames are
// mapped onto that timeline.
ActivityMask activity_from_labels(const std::vector<LabelSegment>& labels,
                                  const FrameSequence& frames,
                                  double label_rate_hz,
                                  const std::vector<std::string>& silence);

}  // namespace karma

#endif  // KARMA_DSP_HPP_
