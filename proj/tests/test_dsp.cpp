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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "karma/dsp.hpp"
#include "karma/wav.hpp"

namespace karma {
namespace {

constexpr double kPi = std::numbers::pi;

Waveform Sine(double freq, double fs, int n, double amp = 1.0) {
  Waveform w;
  w.sample_rate_hz = fs;
  for (int m = 0; m < n; ++m) w.samples.push_back(amp * std::sin(2 * kPi * freq * m / fs));
  return w;
}

// Amplitude of the DFT bin at `freq` over samples [begin, begin + len).
double BinAmplitude(const std::vector<double>& x, int begin, int len,
                    double freq, double fs) {
  double re = 0.0, im = 0.0;
  for (int m = 0; m < len; ++m) {
    const double phi = 2 * kPi * freq * m / fs;
    re += x[begin + m] * std::cos(phi);
    im -= x[begin + m] * std::sin(phi);
  }
  return 2.0 * std::hypot(re, im) / len;
}

TEST(Framing, ExactFitGivesOneFrame) {
  Waveform w{std::vector<double>(160, 1.0), 16000.0};
  const FrameSequence f = window_frames(w, 10.0, 0.5, WindowKind::kHamming);
  EXPECT_EQ(f.frame_length, 160);
  EXPECT_EQ(f.size(), 1);
}

TEST(Framing, CountFollowsHop) {
  Waveform w{std::vector<double>(320, 1.0), 16000.0};
  const FrameSequence f = window_frames(w, 10.0, 0.5, WindowKind::kHamming);
  EXPECT_EQ(f.hop, 80);
  EXPECT_EQ(f.size(), 3);
}

TEST(Framing, RectangularWindowKeepsSegments) {
  Waveform w;
  w.sample_rate_hz = 16000.0;
  for (int m = 0; m < 320; ++m) w.samples.push_back(0.001 * m);
  const FrameSequence f = window_frames(w, 10.0, 0.5, WindowKind::kRectangular);
  for (int t = 0; t < f.size(); ++t) {
    for (int m = 0; m < f.frame_length; ++m) {
      EXPECT_DOUBLE_EQ(f.frames[t][m], w.samples[t * f.hop + m]);
    }
  }
}

TEST(Framing, TailIsZeroPadded) {
  Waveform w{std::vector<double>(200, 1.0), 16000.0};
  const FrameSequence f = window_frames(w, 10.0, 0.5, WindowKind::kRectangular);
  ASSERT_EQ(f.size(), 2);
  EXPECT_DOUBLE_EQ(f.frames[1][119], 1.0);
  EXPECT_DOUBLE_EQ(f.frames[1][120], 0.0);
}

TEST(Framing, ShortInputIsRejected) {
  Waveform w{std::vector<double>(100, 1.0), 16000.0};
  try {
    window_frames(w, 10.0, 0.5, WindowKind::kHamming);
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "input too short");
  }
}

TEST(Framing, NonFiniteSamplesAreRejected) {
  Waveform w{std::vector<double>(400, 0.0), 16000.0};
  w.samples[7] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(window_frames(w, 10.0, 0.5, WindowKind::kHamming),
               std::invalid_argument);
}

TEST(Windows, PeriodicHannOverlapAddsToConstant) {
  const std::vector<double> win = make_window(WindowKind::kHanning, 64);
  for (int m = 0; m < 32; ++m) EXPECT_NEAR(win[m] + win[m + 32], 1.0, 1e-12);
}

TEST(Windows, SymmetricHammingEndpoints) {
  const std::vector<double> win = make_window(WindowKind::kHamming, 21, false);
  EXPECT_NEAR(win.front(), 0.08, 1e-12);
  EXPECT_NEAR(win[10], 1.0, 1e-12);
  EXPECT_NEAR(win.back(), 0.08, 1e-12);
}

TEST(Windows, ParseNames) {
  EXPECT_EQ(parse_window_kind("hamming"), WindowKind::kHamming);
  EXPECT_EQ(parse_window_kind("hanning"), WindowKind::kHanning);
  EXPECT_EQ(parse_window_kind("rectangular"), WindowKind::kRectangular);
  EXPECT_THROW(parse_window_kind("blackman"), std::invalid_argument);
}

TEST(PreEmphasis, ZeroGammaIsIdentity) {
  const std::vector<double> x{0.3, -1.2, 4.0, 2.5};
  EXPECT_EQ(preemphasize(x, 0.0), x);
}

TEST(PreEmphasis, UnitGammaIsFirstDifference) {
  const std::vector<double> x{1, 1, 1, 1};
  EXPECT_EQ(preemphasize(x, 1.0), (std::vector<double>{1, 0, 0, 0}));
}

TEST(PreEmphasis, DeemphasisInverts) {
  const std::vector<double> x{0.5, -0.25, 1.0, 0.75, -2.0};
  const std::vector<double> y = deemphasize(preemphasize(x, 0.7), 0.7);
  for (size_t m = 0; m < x.size(); ++m) EXPECT_NEAR(y[m], x[m], 1e-14);
}

TEST(Resample, SameRateIsIdentity) {
  const Waveform w = Sine(440.0, 16000.0, 1000);
  const Waveform r = resample(w, 16000.0);
  EXPECT_EQ(r.samples, w.samples);
  EXPECT_EQ(r.sample_rate_hz, 16000.0);
}

TEST(Resample, PassbandToneKeepsAmplitude) {
  const Waveform r = resample(Sine(1000.0, 16000.0, 16000), 8000.0);
  ASSERT_EQ(r.samples.size(), 8000u);
  EXPECT_NEAR(BinAmplitude(r.samples, 2000, 4000, 1000.0, 8000.0), 1.0, 0.01);
}

TEST(Resample, ToneAboveNewNyquistIsRemoved) {
  const Waveform r = resample(Sine(5000.0, 16000.0, 16000), 8000.0);
  double worst = 0.0;
  for (int k = 0; k <= 2000; ++k) {
    worst = std::max(worst, BinAmplitude(r.samples, 2000, 4000, 2.0 * k, 8000.0));
  }
  EXPECT_LT(worst, 0.001);
}

TEST(Resample, UpsamplingPreservesTone) {
  const Waveform r = resample(Sine(700.0, 7000.0, 7000), 16000.0);
  ASSERT_EQ(r.samples.size(), 16000u);
  EXPECT_NEAR(BinAmplitude(r.samples, 4000, 8000, 700.0, 16000.0), 1.0, 0.01);
}

FrameSequence FramesWithLevels(const std::vector<double>& levels) {
  FrameSequence f;
  f.frame_length = 4;
  f.hop = 4;
  f.sample_rate_hz = 1000.0;
  for (double a : levels) f.frames.push_back(std::vector<double>(4, a));
  return f;
}

TEST(Activity, ZeroFrameIsSilent) {
  const ActivityMask m = detect_activity(FramesWithLevels({1.0, 0.0}), -200.0);
  EXPECT_TRUE(m.flags[0]);
  EXPECT_FALSE(m.flags[1]);
}

TEST(Activity, MinusInfinityThresholdAcceptsNonzeroFrames) {
  const ActivityMask m = detect_activity(
      FramesWithLevels({1.0, 1e-9, 0.5}), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(m.count(), 3);
}

TEST(Activity, FiftyDecibelsDownIsSilentAtMinusForty) {
  const double quiet = std::pow(10.0, -50.0 / 20.0);
  const double loud = std::pow(10.0, -30.0 / 20.0);
  const ActivityMask m = detect_activity(FramesWithLevels({1.0, quiet, loud}), -40.0);
  EXPECT_TRUE(m.flags[0]);
  EXPECT_FALSE(m.flags[1]);
  EXPECT_TRUE(m.flags[2]);
}

TEST(Labels, FramesInsideSilenceAreMasked) {
  const std::vector<LabelSegment> labels =
      parse_labels("0 1600 h#\n1600 3200 aa\n3200 4800 pau\n");
  Waveform w{std::vector<double>(4800, 0.1), 16000.0};
  const FrameSequence f = window_frames(w, 20.0, 0.5, WindowKind::kHamming);
  const ActivityMask m = activity_from_labels(labels, f, 16000.0, default_silence_labels());
  ASSERT_EQ(m.size(), f.size());
  for (int t = 0; t < f.size(); ++t) {
    const long a = static_cast<long>(t) * f.hop;
    const long b = a + f.frame_length;
    const bool silent = b <= 1600 || a >= 3200;
    EXPECT_EQ(m.flags[t], !silent) << "frame " << t;
  }
}

TEST(Labels, UnlabelledSamplesCountAsSpeech) {
  const std::vector<LabelSegment> labels = parse_labels("0 100 pau\n");
  Waveform w{std::vector<double>(640, 0.1), 16000.0};
  const FrameSequence f = window_frames(w, 20.0, 0.5, WindowKind::kHamming);
  const ActivityMask m = activity_from_labels(labels, f, 16000.0, default_silence_labels());
  EXPECT_EQ(m.count(), m.size());
}

TEST(Labels, MalformedLineIsReported) {
  try {
    parse_labels("0 10 pau\nten 20 aa\n");
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Labels, DefaultSilenceSet) {
  const std::vector<std::string> s = default_silence_labels();
  for (const char* l : {"pau", "epi", "h#", "bcl", "dcl", "gcl", "pcl", "tcl", "kcl", "q"}) {
    EXPECT_NE(std::find(s.begin(), s.end(), l), s.end()) << l;
  }
}

// Hand-assembled RIFF container.
class WavFile {
 public:
  WavFile(uint16_t format, uint16_t channels, uint32_t rate, uint16_t bits) {
    const uint16_t block = channels * bits / 8;
    Tag("RIFF");
    U32(0);
    Tag("WAVE");
    Tag("fmt ");
    U32(16);
    U16(format);
    U16(channels);
    U32(rate);
    U32(rate * block);
    U16(block);
    U16(bits);
  }
  void Chunk(const std::string& tag, const std::string& payload) {
    Tag(tag);
    U32(static_cast<uint32_t>(payload.size()));
    bytes_ += payload;
    if (payload.size() % 2) bytes_.push_back('\0');
  }
  std::string Write() {
    const uint32_t riff = static_cast<uint32_t>(bytes_.size() - 8);
    for (int k = 0; k < 4; ++k) bytes_[4 + k] = static_cast<char>(riff >> (8 * k));
    const auto path = std::filesystem::temp_directory_path() /
                      ("karma_wav_" + std::to_string(counter_++) + ".wav");
    std::ofstream(path, std::ios::binary) << bytes_;
    return path.string();
  }
  static std::string Pcm16(const std::vector<int16_t>& v) {
    std::string s;
    for (int16_t x : v) {
      s.push_back(static_cast<char>(x & 0xff));
      s.push_back(static_cast<char>((x >> 8) & 0xff));
    }
    return s;
  }

 private:
  void Tag(const std::string& t) { bytes_ += t; }
  void U16(uint16_t v) {
    bytes_.push_back(static_cast<char>(v & 0xff));
    bytes_.push_back(static_cast<char>(v >> 8));
  }
  void U32(uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<char>(v >> (8 * k)));
  }
  std::string bytes_;
  static inline int counter_ = 0;
};

TEST(Wav, PcmScaling) {
  WavFile f(1, 1, 16000, 16);
  f.Chunk("data", WavFile::Pcm16({16384, -32768, 0}));
  const Waveform w = read_wav(f.Write());
  ASSERT_EQ(w.samples.size(), 3u);
  EXPECT_DOUBLE_EQ(w.samples[0], 0.5);
  EXPECT_DOUBLE_EQ(w.samples[1], -1.0);
  EXPECT_DOUBLE_EQ(w.sample_rate_hz, 16000.0);
}

TEST(Wav, OneSecondFile) {
  WavFile f(1, 1, 16000, 16);
  f.Chunk("LIST", "ignored metadata");
  f.Chunk("data", WavFile::Pcm16(std::vector<int16_t>(16000, 100)));
  const Waveform w = read_wav(f.Write());
  EXPECT_EQ(w.samples.size(), 16000u);
  EXPECT_DOUBLE_EQ(w.duration_s(), 1.0);
}

TEST(Wav, StereoIsAveraged) {
  WavFile f(3, 2, 8000, 32);
  const float lr[2] = {0.2f, 0.4f};
  f.Chunk("data", std::string(reinterpret_cast<const char*>(lr), sizeof lr));
  const Waveform w = read_wav(f.Write());
  ASSERT_EQ(w.samples.size(), 1u);
  EXPECT_NEAR(w.samples[0], 0.3, 1e-7);
}

TEST(Wav, CompressedCodecIsRejected) {
  WavFile f(2, 1, 8000, 4);  // ADPCM
  f.Chunk("data", "abcd");
  try {
    read_wav(f.Write());
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "unsupported codec");
  }
}

TEST(Wav, MalformedHeaderIsRejected) {
  const auto path = std::filesystem::temp_directory_path() / "karma_bad.wav";
  std::ofstream(path, std::ios::binary) << "RIFX0000WAVEjunk";
  try {
    read_wav(path.string());
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "unsupported wav");
  }
}

TEST(Wav, WriteReadRoundTrip) {
  Waveform w = Sine(300.0, 8000.0, 800, 0.8);
  const auto path = (std::filesystem::temp_directory_path() / "karma_rt.wav").string();
  write_wav(w, path);
  const Waveform r = read_wav(path);
  ASSERT_EQ(r.samples.size(), w.samples.size());
  EXPECT_EQ(r.sample_rate_hz, 8000.0);
  for (size_t m = 0; m < w.samples.size(); ++m) {
    EXPECT_NEAR(r.samples[m], w.samples[m], 0.5 / 32768 + 1e-12);
  }
}

}  // namespace
}  // namespace karma
