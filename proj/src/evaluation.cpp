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

#include "karma/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace karma {

RmseReport rmse_entries(const TrackResult& estimated,
                        const TrackResult& reference, const ActivityMask& mask,
                        const std::vector<int>& entries, int offset) {
  const int frames = estimated.frames();
  if (offset == 0 && frames != reference.frames()) {
    throw std::invalid_argument("frame count mismatch: " +
                                std::to_string(frames) + " vs " +
                                std::to_string(reference.frames()));
  }
  if (mask.size() != 0 && mask.size() != frames) {
    throw std::invalid_argument("mask length mismatch");
  }
  RmseReport report;
  std::vector<double> sums(entries.size(), 0.0);
  for (int t = 0; t < frames; ++t) {
    const int r = t + offset;
    if (r < 0 || r >= reference.frames() || (mask.size() && !mask.flags[t])) {
      ++report.frames_skipped;
      continue;
    }
    ++report.frames_counted;
    for (size_t k = 0; k < entries.size(); ++k) {
      const double e =
          estimated.means[t][entries[k]] - reference.means[r][entries[k]];
      sums[k] += e * e;
    }
  }
  if (report.frames_counted == 0) {
    throw std::runtime_error("empty evaluation set");
  }
  double pooled = 0.0;
  for (double s : sums) {
    report.per_track.push_back(std::sqrt(s / report.frames_counted));
    report.mean_per_track += report.per_track.back() / entries.size();
    pooled += s;
  }
  report.overall = std::sqrt(
      pooled / (static_cast<double>(report.frames_counted) * entries.size()));
  return report;
}

RmseReport rmse(const TrackResult& estimated, const TrackResult& reference,
                const ActivityMask& mask, int formant_count, int offset) {
  if (formant_count < 1 || formant_count > estimated.layout.formants ||
      formant_count > reference.layout.formants) {
    throw std::invalid_argument("formant count exceeds tracked formants");
  }
  std::vector<int> entries(formant_count);
  for (int i = 0; i < formant_count; ++i) entries[i] = i;
  return rmse_entries(estimated, reference, mask, entries, offset);
}

RmseReport average_reports(const std::vector<RmseReport>& reports) {
  if (reports.empty()) throw std::runtime_error("empty evaluation set");
  RmseReport avg;
  avg.per_track.assign(reports.front().per_track.size(), 0.0);
  for (const auto& r : reports) {
    for (size_t k = 0; k < avg.per_track.size(); ++k) {
      avg.per_track[k] += r.per_track[k] / reports.size();
    }
    avg.overall += r.overall / reports.size();
    avg.mean_per_track += r.mean_per_track / reports.size();
    avg.frames_counted += r.frames_counted;
    avg.frames_skipped += r.frames_skipped;
  }
  return avg;
}

TrackResult align_reference(const TrackResult& reference, int frames,
                            double start_s, double hop_s) {
  TrackResult out;
  out.layout = reference.layout;
  out.order = reference.order;
  out.sample_rate_hz = reference.sample_rate_hz;
  out.start_s = start_s;
  out.hop_s = hop_s;
  const int n = reference.frames();
  for (int t = 0; t < frames; ++t) {
    const double pos = (start_s + t * hop_s - reference.start_s) / reference.hop_s;
    const double clamped = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    const int lo = std::min(static_cast<int>(std::floor(clamped)), n - 1);
    const int hi = std::min(lo + 1, n - 1);
    const double frac = clamped - lo;
    const int nearest = frac < 0.5 ? lo : hi;
    out.means.push_back((1.0 - frac) * reference.means[lo] +
                        frac * reference.means[hi]);
    out.covariances.push_back((1.0 - frac) * reference.covariances[lo] +
                              frac * reference.covariances[hi]);
    out.speech.push_back(reference.speech[nearest]);
    out.track_active.push_back(reference.track_active[nearest]);
  }
  return out;
}

namespace {

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string tracks_to_csv(const TrackResult& result) {
  const int formants = result.layout.formants;
  const int antiformants = result.layout.antiformants;
  std::ostringstream out;
  out << "time_s";
  const char* groups[4] = {"f", "b", "af", "ab"};
  for (const char* prefix : {"", "v"}) {
    for (int g = 0; g < 4; ++g) {
      const int count = g < 2 ? formants : antiformants;
      for (int k = 1; k <= count; ++k) out << ',' << prefix << groups[g] << k;
    }
  }
  out << ",speech\n";
  const int d = result.layout.dimension();
  for (int t = 0; t < result.frames(); ++t) {
    out << format_value(result.time_s(t));
    for (int k = 0; k < d; ++k) out << ',' << format_value(result.means[t][k]);
    for (int k = 0; k < d; ++k) {
      out << ',' << format_value(result.covariances[t](k, k));
    }
    out << ',' << (result.speech[t] ? 1 : 0) << '\n';
  }
  return out.str();
}

void write_tracks(const TrackResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << tracks_to_csv(result);
}

TrackResult tracks_from_csv(const std::string& text, int expected_formants,
                            int expected_antiformants) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("no frames");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split(line, ',');

  int formants = 0, antiformants = 0;
  const std::regex f_col("f[0-9]+"), af_col("af[0-9]+");
  for (const auto& h : header) {
    if (std::regex_match(h, f_col)) ++formants;
    if (std::regex_match(h, af_col)) ++antiformants;
  }
  TrackResult result;
  result.layout = StateLayout{formants, antiformants};
  const int d = result.layout.dimension();
  std::vector<std::string> expected{"time_s"};
  {
    const char* groups[4] = {"f", "b", "af", "ab"};
    for (const char* prefix : {"", "v"}) {
      for (int g = 0; g < 4; ++g) {
        const int count = g < 2 ? formants : antiformants;
        for (int k = 1; k <= count; ++k) {
          expected.push_back(std::string(prefix) + groups[g] + std::to_string(k));
        }
      }
    }
    expected.push_back("speech");
  }
  if (header != expected) {
    throw std::runtime_error("line 1: unrecognized track header");
  }
  if ((expected_formants >= 0 && expected_formants != formants) ||
      (expected_antiformants >= 0 && expected_antiformants != antiformants)) {
    throw std::runtime_error(
        "track layout mismatch: file has " + std::to_string(formants) +
        " formants and " + std::to_string(antiformants) + " antiformants");
  }

  std::vector<double> times;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != expected.size()) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected " + std::to_string(expected.size()) +
                               " fields");
    }
    std::vector<double> values(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) {
      try {
        size_t used = 0;
        values[c] = std::stod(cells[c], &used);
        if (used != cells[c].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": malformed value '" + cells[c] + "'");
      }
    }
    times.push_back(values[0]);
    Eigen::VectorXd mean(d);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (int k = 0; k < d; ++k) {
      mean[k] = values[1 + k];
      cov(k, k) = values[1 + d + k];
    }
    result.means.push_back(std::move(mean));
    result.covariances.push_back(std::move(cov));
    result.speech.push_back(values.back() != 0.0);
    result.track_active.emplace_back(formants + antiformants, true);
  }
  if (times.empty()) throw std::runtime_error("no frames");
  result.start_s = times.front();
  if (times.size() > 1) result.hop_s = times[1] - times[0];
  return result;
}

TrackResult read_tracks(const std::string& path, int expected_formants,
                        int expected_antiformants) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return tracks_from_csv(buf.str(), expected_formants, expected_antiformants);
}

TrackResult read_vtr_matrix(const std::string& path, double hop_s,
                            double start_s) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  TrackResult result;
  result.hop_s = hop_s;
  result.start_s = start_s;
  std::string line;
  int line_no = 0;
  int width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<double> row;
    double v;
    while (fields >> v) row.push_back(v);
    if (!fields.eof()) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": malformed value");
    }
    if (row.empty()) continue;
    if (width < 0) width = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != width || width % 2 != 0) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": inconsistent column count");
    }
    const int k = width / 2;
    result.layout = StateLayout{k, 0};
    Eigen::VectorXd mean(width);
    for (int c = 0; c < width; ++c) mean[c] = 1000.0 * row[c];
    result.means.push_back(std::move(mean));
    result.covariances.push_back(Eigen::MatrixXd::Zero(width, width));
    result.speech.push_back(true);
    result.track_active.emplace_back(k, true);
  }
  if (result.means.empty()) throw std::runtime_error("no frames");
  return result;
}

}  // namespace karma
