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

// Ground-truth-labelled speech-like waveforms: frame-wise resonator
// filtering of noise or glottal-pulse excitation with overlap-add.

#ifndef KARMA_SYNTHESIS_HPP_
#define KARMA_SYNTHESIS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "karma/arma.hpp"
#include "karma/cepstrum.hpp"
#include "karma/dsp.hpp"
#include "karma/tracker.hpp"

namespace karma {

enum class SourceKind { kWhiteNoise, kRosenberg, kSilence };

SourceKind parse_source_kind(const std::string& name);
std::string to_string(SourceKind kind);

struct TrajectoryFrame {
  ResonanceState state;
  SourceKind source = SourceKind::kWhiteNoise;
  double f0_hz = 0.0;  // used by kRosenberg frames
  // Per-track presence (formants then antiformants); empty means all.
  std::vector<bool> active;
};

struct RosenbergShape {
  double open_fraction = 0.40;
  double close_fraction = 0.16;
};

struct TrajectorySpec {
  std::vector<TrajectoryFrame> frames;
  double frame_ms = 20.0;
  double overlap_fraction = 0.5;
  double sample_rate_hz = 16000.0;
  uint64_t seed = 0;
  RosenbergShape rosenberg;
  // Output is scaled to this absolute peak; 0 leaves the raw level.
  double peak_amplitude = 0.9;

  int formants() const;
  int antiformants() const;
  // Throws std::invalid_argument on inconsistent or out-of-range content.
  void validate() const;
};

// Denominator: product over formants of
//   1 - 2 exp(-pi b/fs) cos(2 pi f/fs) z^-1 + exp(-2 pi b/fs) z^-2,
// numerator: the same product over antiformants. noise_variance is 1.
// Tracks switched off in `active` are left out.
ArmaModel resonator_cascade(const ResonanceState& x,
                            const std::vector<bool>& active = {});

// Rosenberg-C glottal flow: per period a raised-cosine opening phase
// (open_fraction of the period) and a quarter-cosine closing phase
// (close_fraction), zero otherwise, with unit peak. segment_length samples
// are produced per entry of f0_per_segment and the phase carries across
// segments. Throws std::invalid_argument if any f0 is not in (0, fs/2).
std::vector<double> rosenberg_source(std::span<const double> f0_per_segment,
                                     int segment_length,
                                     double sample_rate_hz,
                                     const RosenbergShape& shape = {});

struct SynthesisResult {
  Waveform waveform;
  // Ground truth at the synthesis frame centres; zero covariances.
  TrackResult reference;
};

// Each frame's excitation is filtered by its resonator cascade from zero
// initial state, Hann-windowed and overlap-added. Silence frames add
// nothing. Rosenberg frames are driven by the first difference of the
// glottal flow (lip radiation).
SynthesisResult synthesize(const TrajectorySpec& spec);

struct FormantRange {
  double lo_hz;
  double hi_hz;
};

// Default frequency ranges for formants 1..5.
std::vector<FormantRange> default_formant_ranges();

// Piecewise-smooth random formant trajectories: random keyframes every
// 100-250 ms joined by monotone cubic (PCHIP) interpolation, then ordered
// with at least 150 Hz separation. Bandwidths lie in [40, 250] Hz. White
// noise excitation, 20 ms frames, 50 % overlap.
TrajectorySpec random_trajectory(int formants, double duration_s, uint64_t seed,
                                 double sample_rate_hz);

// Switches every non-silent frame to Rosenberg excitation with a smooth
// random f0 contour in [f0_lo, f0_hi] Hz.
TrajectorySpec with_glottal_source(TrajectorySpec spec, double f0_lo,
                                   double f0_hi, uint64_t seed);

// Replaces frames [first, first + count) with silence.
TrajectorySpec with_silence(TrajectorySpec spec, int first, int count);

// Segment boundaries of the /n a n/ utterance, in synthesis frames.
struct NanLayout {
  int frames = 75;
  int nasal_frames = 20;      // each /n/ segment
  int transition_frames = 5;  // between /n/ and /a/
  double jitter_hz = 10.0;    // std of the frequency perturbation
  // Independent perturbation per frame by default; a random walk
  // accumulates the steps instead.
  bool random_walk = false;
  bool is_nasal(int t) const {
    return t < nasal_frames || t >= frames - nasal_frames;
  }
  bool is_vowel(int t) const {
    return t >= nasal_frames + transition_frames &&
           t < frames - nasal_frames - transition_frames;
  }
};

// Nasal-vowel-nasal utterance at 10 kHz with 75 frames of 100 ms at 50 %
// overlap. /n/: formants 257 Hz (32 Hz), 1891 Hz (100 Hz) and an
// antiformant at 1223 Hz (52 Hz); /a/: 850 Hz (80 Hz) and 1500 Hz
// (120 Hz). Every frequency gets a zero-mean Gaussian perturbation of
// layout.jitter_hz, states are linearly interpolated across transitions
// and the antiformant is present only in /n/ frames. Rosenberg excitation
// at f0_hz.
TrajectorySpec nan_trajectory(uint64_t seed, double f0_hz = 120.0,
                              const NanLayout& layout = {});

// JSON schema (all fields required unless noted):
// {
//   "sample_rate_hz": 10000, "frame_ms": 100, "overlap": 0.5, "seed": 1,
//   "formants": 2, "antiformants": 1,
//   "rosenberg": {"open": 0.4, "close": 0.16},        (optional)
//   "peak": 0.9,                                      (optional)
//   "frames": [{"f": [...], "b": [...], "af": [...], "ab": [...],
//               "source": "white_noise" | "rosenberg" | "silence",
//               "f0": 120, "active": [true, ...]}]   (f0, active optional)
// }
std::string spec_to_json(const TrajectorySpec& spec);
TrajectorySpec spec_from_json(const std::string& text);
TrajectorySpec read_spec(const std::string& path);
void write_spec(const TrajectorySpec& spec, const std::string& path);

}  // namespace karma

#endif  // KARMA_SYNTHESIS_HPP_
