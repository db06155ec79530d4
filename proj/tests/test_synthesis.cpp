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
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "gtest/gtest.h"
#include "karma/polynomial.hpp"
#include "karma/synthesis.hpp"

namespace karma {
namespace {

constexpr double kPi = std::numbers::pi;

double DftMagnitude(const std::vector<double>& x, size_t begin, size_t len,
                    double freq, double fs, bool hann = false) {
  std::complex<double> acc = 0.0;
  for (size_t m = 0; m < len; ++m) {
    const double w = hann ? 0.5 - 0.5 * std::cos(2 * kPi * m / len) : 1.0;
    acc += w * x[begin + m] * std::polar(1.0, -2 * kPi * freq * m / fs);
  }
  return std::abs(acc);
}

TEST(Resonator, QuarterRateCoefficients) {
  ResonanceState x;
  x.sample_rate_hz = 8000.0;
  x.formant_freqs = {2000.0};
  x.formant_bws = {100.0};
  const ArmaModel m = resonator_cascade(x);
  ASSERT_EQ(m.p(), 2);
  EXPECT_NEAR(m.ar[0], 0.0, 1e-15);
  EXPECT_NEAR(m.ar[1], -std::exp(-2 * kPi * 100.0 / 8000.0), 1e-15);
  EXPECT_EQ(m.q(), 0);
  EXPECT_EQ(m.noise_variance, 1.0);
}

TEST(Resonator, NasalPoleRadius) {
  ResonanceState x;
  x.sample_rate_hz = 10000.0;
  x.formant_freqs = {257.0};
  x.formant_bws = {32.0};
  const ArmaModel m = resonator_cascade(x);
  for (const auto& z : poly::roots(m.denominator())) {
    EXPECT_NEAR(std::abs(z), 0.98999, 1e-5);
    EXPECT_NEAR(std::abs(std::arg(z)), 2 * kPi * 257.0 / 10000.0, 1e-12);
  }
}

TEST(Resonator, ZerosComeFromAntiformants) {
  ResonanceState x;
  x.sample_rate_hz = 10000.0;
  x.formant_freqs = {500.0, 1500.0};
  x.formant_bws = {60.0, 90.0};
  x.antiformant_freqs = {1223.0};
  x.antiformant_bws = {52.0};
  EXPECT_EQ(resonator_cascade(x).q(), 2);
  EXPECT_EQ(resonator_cascade(x, {true, true, false}).q(), 0);
  EXPECT_EQ(resonator_cascade(x, {true, false, true}).p(), 2);
}

TEST(Rosenberg, PeriodIsExact) {
  const std::vector<double> f0(10, 100.0);
  const std::vector<double> g = rosenberg_source(f0, 100, 10000.0);
  ASSERT_EQ(g.size(), 1000u);
  for (size_t m = 0; m + 100 < g.size(); ++m) EXPECT_NEAR(g[m + 100], g[m], 1e-12);
  EXPECT_NEAR(*std::max_element(g.begin(), g.end()), 1.0, 1e-12);
}

TEST(Rosenberg, ClosedPhaseLength) {
  const std::vector<double> f0(2, 100.0);
  const std::vector<double> g = rosenberg_source(f0, 100, 10000.0);
  int zeros = 0;
  for (int m = 0; m < 100; ++m) zeros += g[m] == 0.0 && m > 0;
  // Sample 0 opens the period at zero flow.
  EXPECT_EQ(zeros, 44);
}

TEST(Rosenberg, HarmonicsAtMultiplesOfF0) {
  const double fs = 10000.0, f0 = 123.0;
  const int n = 8192;
  const std::vector<double> seg(1, f0);
  const std::vector<double> g = rosenberg_source(seg, n, fs);
  const double bin = fs / n;
  for (int k = 1; k <= 5; ++k) {
    double best = 0.0, where = 0.0;
    for (double f = k * f0 - 20.0; f <= k * f0 + 20.0; f += bin / 4) {
      const double mag = DftMagnitude(g, 0, n, f, fs, true);
      if (mag > best) {
        best = mag;
        where = f;
      }
    }
    EXPECT_LE(std::abs(where - k * f0), bin) << "harmonic " << k;
  }
}

TEST(Rosenberg, RejectsF0AboveNyquist) {
  const std::vector<double> f0{5000.0};
  EXPECT_THROW(rosenberg_source(f0, 10, 10000.0), std::invalid_argument);
}

TEST(Synthesize, SilenceOnlyIsZero) {
  TrajectorySpec spec = random_trajectory(3, 0.3, 1, 16000.0);
  spec = with_silence(spec, 0, static_cast<int>(spec.frames.size()));
  const SynthesisResult r = synthesize(spec);
  ASSERT_FALSE(r.waveform.samples.empty());
  for (double s : r.waveform.samples) EXPECT_EQ(s, 0.0);
  for (bool s : r.reference.speech) EXPECT_FALSE(s);
}

TEST(Synthesize, NanGeometry) {
  const TrajectorySpec spec = nan_trajectory(1);
  ASSERT_EQ(spec.frames.size(), 75u);
  const SynthesisResult r = synthesize(spec);
  EXPECT_EQ(r.waveform.sample_rate_hz, 10000.0);
  EXPECT_NEAR(r.waveform.duration_s(), 3.8, 1e-9);
  EXPECT_NEAR(r.reference.hop_s, 0.05, 1e-12);
  EXPECT_NEAR(r.reference.start_s, 0.05, 1e-12);
  double peak = 0.0;
  for (double s : r.waveform.samples) peak = std::max(peak, std::abs(s));
  EXPECT_NEAR(peak, 0.9, 1e-12);
  const NanLayout layout;
  for (int t = 0; t < 75; ++t) {
    EXPECT_EQ(spec.frames[t].active[2], layout.is_nasal(t));
    const double f1 = spec.frames[t].state.formant_freqs[0];
    if (layout.is_nasal(t)) EXPECT_NEAR(f1, 257.0, 50.0);
    if (layout.is_vowel(t)) EXPECT_NEAR(f1, 850.0, 50.0);
  }
}

TEST(Synthesize, NasalValleyNearAntiformant) {
  const SynthesisResult r = synthesize(nan_trajectory(2));
  const double fs = 10000.0, f0 = 120.0;
  const NanLayout layout;
  for (int t : {5, 10, 15, 60, 65}) {
    ASSERT_TRUE(layout.is_nasal(t));
    const size_t begin = static_cast<size_t>(t) * 500;
    // Envelope sampled at the harmonics; the valley is its smallest value.
    double lowest = 1e300, where = 0.0;
    for (int k = 7; k <= 14; ++k) {
      const double mag = DftMagnitude(r.waveform.samples, begin, 1000, k * f0, fs, true);
      if (mag < lowest) {
        lowest = mag;
        where = k * f0;
      }
    }
    EXPECT_LT(std::abs(where - 1223.0), 100.0) << "frame " << t;
  }
}

TEST(Synthesize, SeedChangesWaveformNotGeometry) {
  TrajectorySpec a = random_trajectory(3, 0.5, 9, 16000.0);
  TrajectorySpec b = a;
  b.seed = a.seed + 1;
  const SynthesisResult ra = synthesize(a), rb = synthesize(b);
  EXPECT_NE(ra.waveform.samples, rb.waveform.samples);
  EXPECT_EQ(ra.waveform.samples.size(), rb.waveform.samples.size());
  for (int t = 0; t < ra.reference.frames(); ++t) {
    EXPECT_EQ(ra.reference.means[t], rb.reference.means[t]);
  }
}

TEST(RandomTrajectory, Reproducible) {
  const TrajectorySpec a = random_trajectory(4, 1.0, 42, 16000.0);
  const TrajectorySpec b = random_trajectory(4, 1.0, 42, 16000.0);
  EXPECT_EQ(spec_to_json(a), spec_to_json(b));
  EXPECT_NE(spec_to_json(a), spec_to_json(random_trajectory(4, 1.0, 43, 16000.0)));
}

TEST(RandomTrajectory, OrderedAndBelowNyquist) {
  int frames = 0;
  for (uint64_t seed = 0; frames < 1000; ++seed) {
    const TrajectorySpec s = random_trajectory(5, 2.0, seed, 10000.0);
    for (const auto& f : s.frames) {
      const auto& x = f.state;
      for (int i = 0; i < 5; ++i) {
        EXPECT_LT(x.formant_freqs[i], 5000.0);
        EXPECT_GT(x.formant_bws[i], 0.0);
        if (i > 0) EXPECT_GT(x.formant_freqs[i], x.formant_freqs[i - 1]);
      }
      ++frames;
    }
  }
}

TEST(RandomTrajectory, TwoSecondFrameCount) {
  const TrajectorySpec s = random_trajectory(4, 2.0, 3, 16000.0);
  // 20 ms frames, 10 ms hop: 1 + (32000 - 320) / 160.
  EXPECT_EQ(s.frames.size(), 199u);
}

TEST(GlottalSource, F0WithinRange) {
  const TrajectorySpec s =
      with_glottal_source(random_trajectory(3, 1.0, 4, 16000.0), 90.0, 220.0, 5);
  for (const auto& f : s.frames) {
    EXPECT_EQ(f.source, SourceKind::kRosenberg);
    EXPECT_GE(f.f0_hz, 90.0);
    EXPECT_LE(f.f0_hz, 220.0);
  }
}

TEST(SpecJson, RoundTrip) {
  TrajectorySpec s = nan_trajectory(11);
  s = with_silence(s, 3, 2);
  const TrajectorySpec back = spec_from_json(spec_to_json(s));
  ASSERT_EQ(back.frames.size(), s.frames.size());
  EXPECT_EQ(back.seed, s.seed);
  EXPECT_EQ(back.sample_rate_hz, s.sample_rate_hz);
  for (size_t t = 0; t < s.frames.size(); ++t) {
    EXPECT_EQ(back.frames[t].source, s.frames[t].source);
    EXPECT_EQ(back.frames[t].active, s.frames[t].active);
    EXPECT_EQ(back.frames[t].state.pack(), s.frames[t].state.pack());
  }
  EXPECT_EQ(synthesize(back).waveform.samples, synthesize(s).waveform.samples);
}

TEST(SpecJson, SchemaViolationsAreRejected) {
  EXPECT_THROW(spec_from_json("{}"), std::invalid_argument);
  EXPECT_THROW(spec_from_json("not json"), std::invalid_argument);
  std::string text = spec_to_json(nan_trajectory(1));
  const size_t at = text.find("\"rosenberg\"");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 11, "\"unknown_key\"");
  EXPECT_THROW(spec_from_json(text), std::invalid_argument);
}

}  // namespace
}  // namespace karma
