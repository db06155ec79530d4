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

// Error metrics against reference trajectories and track file I/O.

#ifndef KARMA_EVALUATION_HPP_
#define KARMA_EVALUATION_HPP_

#include <string>
#include <vector>

#include "karma/dsp.hpp"
#include "karma/tracker.hpp"

namespace karma {

struct RmseReport {
  std::vector<double> per_track;  // Hz, one per evaluated state entry
  double overall = 0.0;           // pooled over all counted (track, frame)
  double mean_per_track = 0.0;    // unweighted mean of per_track
  int frames_counted = 0;
  int frames_skipped = 0;
};

// RMSE of the given state entries over frames where the mask is set.
// Estimated frame t is compared with reference frame t + offset; with a
// zero offset the frame counts must match. A mask is indexed by estimated
// frame (empty means every frame). Throws std::invalid_argument on a frame
// count mismatch and std::runtime_error("empty evaluation set") when no
// frame qualifies.
RmseReport rmse_entries(const TrackResult& estimated,
                        const TrackResult& reference, const ActivityMask& mask,
                        const std::vector<int>& entries, int offset = 0);

// Formant-frequency RMSE over the first formant_count formants.
RmseReport rmse(const TrackResult& estimated, const TrackResult& reference,
                const ActivityMask& mask, int formant_count, int offset = 0);

// Mean over utterances of each per-track RMSE and of both summary values.
RmseReport average_reports(const std::vector<RmseReport>& reports);

// Linear interpolation of reference means onto frame times start_s +
// t*hop_s. Speech and track presence come from the nearest reference
// frame; times outside the reference hold the end values.
TrackResult align_reference(const TrackResult& reference, int frames,
                            double start_s, double hop_s);

// CSV with header
//   time_s,f1..fI,b1..bI,af1..afJ,ab1..abJ,vf1..vfI,vb1..vbI,
//   vaf1..vafJ,vab1..vabJ,speech
// where v* columns hold posterior variances. LF line endings.
std::string tracks_to_csv(const TrackResult& result);
void write_tracks(const TrackResult& result, const std::string& path);

// Parses the CSV above. Negative expected counts skip the layout check.
// Throws std::runtime_error with the line number on malformed rows,
// "no frames" for empty input and a layout message when the header
// disagrees with the expected formant/antiformant counts.
TrackResult tracks_from_csv(const std::string& text, int expected_formants = -1,
                            int expected_antiformants = -1);
TrackResult read_tracks(const std::string& path, int expected_formants = -1,
                        int expected_antiformants = -1);

// Whitespace-separated text matrix, one frame per row:
//   f1 .. fK b1 .. bK    (kHz)
// as distributed with hand-corrected formant databases. Values are
// converted to Hz; frames are hop_s apart starting at start_s.
TrackResult read_vtr_matrix(const std::string& path, double hop_s = 0.01,
                            double start_s = 0.0);

}  // namespace karma

#endif  // KARMA_EVALUATION_HPP_
