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

// Minimal RIFF/WAVE reader and writer for PCM and IEEE-float audio.

#ifndef KARMA_WAV_HPP_
#define KARMA_WAV_HPP_

#include <string>

#include "karma/dsp.hpp"

namespace karma {

// Reads 16-bit PCM or 32-bit float WAV data. Stereo (or wider) input is
// averaged to mono. PCM is scaled by 1/32768.
Waveform read_wav(const std::string& path);

// Writes 16-bit PCM mono. Samples are clipped to [-1, 1) before
// quantization; quantization rounds to nearest.
void write_wav(const Waveform& w, const std::string& path);

}  // namespace karma

#endif  // KARMA_WAV_HPP_
