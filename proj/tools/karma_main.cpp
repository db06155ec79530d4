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

// Command-line front end: track, synth, eval, compare-pf, make-spec.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "karma/evaluation.hpp"
#include "karma/particle.hpp"
#include "karma/pipeline.hpp"
#include "karma/synthesis.hpp"
#include "karma/wav.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

// Raised for bad input paths and invalid configuration.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("no such file: " + path);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct TrackOptions {
  std::vector<std::string> inputs;
  std::string config;
  std::string mode;
  std::string labels;
  std::string obs;
  std::string out;
  int jobs = 1;
};

karma::RunConfig load_config(const std::string& path) {
  if (path.empty()) return karma::RunConfig{};
  require_file(path);
  try {
    return karma::read_config(path);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string summarize(const karma::TrackResult& r) {
  std::ostringstream s;
  const karma::StateLayout& l = r.layout;
  auto line = [&](const std::string& name, int k) {
    double mean = 0.0, sd = 0.0;
    for (int t = 0; t < r.frames(); ++t) {
      mean += r.means[t][k] / r.frames();
      sd += std::sqrt(std::max(0.0, r.variance(t, k))) / r.frames();
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-6s mean %8.1f Hz   mean std %7.1f Hz\n",
                  name.c_str(), mean, sd);
    s << buf;
  };
  for (int i = 0; i < l.formants; ++i) line("f" + std::to_string(i + 1), l.formant_freq(i));
  for (int i = 0; i < l.formants; ++i) line("b" + std::to_string(i + 1), l.formant_bw(i));
  for (int j = 0; j < l.antiformants; ++j) line("af" + std::to_string(j + 1), l.antiformant_freq(j));
  for (int j = 0; j < l.antiformants; ++j) line("ab" + std::to_string(j + 1), l.antiformant_bw(j));
  return s.str();
}

int run_track(const TrackOptions& o) {
  karma::RunConfig cfg = load_config(o.config);
  try {
    if (!o.mode.empty()) cfg.mode = karma::parse_track_mode(o.mode);
    if (!o.obs.empty()) cfg.observation = karma::parse_observation_source(o.obs);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  for (const auto& in : o.inputs) require_file(in);
  std::vector<karma::LabelSegment> labels;
  if (!o.labels.empty()) {
    require_file(o.labels);
    labels = karma::read_labels(o.labels);
  }
  const bool batch = o.inputs.size() > 1;
  if (batch) {
    if (o.out.empty()) throw UsageError("--out must name a directory for several inputs");
    fs::create_directories(o.out);
  }

  std::mutex io;
  std::atomic<size_t> next{0};
  std::atomic<int> failures{0};
  auto worker = [&] {
    for (size_t k = next++; k < o.inputs.size(); k = next++) {
      const std::string& in = o.inputs[k];
      try {
        const karma::Waveform w = karma::read_wav(in);
        const karma::TrackResult r =
            karma::track_waveform(w, cfg, labels.empty() ? nullptr : &labels);
        const std::string target =
            batch ? (fs::path(o.out) / fs::path(in).stem()).string() + ".csv" : o.out;
        write_text(target, karma::tracks_to_csv(r));
        std::lock_guard<std::mutex> lock(io);
        std::ostream& msg = target.empty() || target == "-" ? std::cerr : std::cout;
        msg << in << ": " << r.frames() << " frames\n" << summarize(r);
        for (const auto& w : r.warnings) std::cerr << in << ": warning: " << w << "\n";
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(io);
        std::cerr << in << ": " << e.what() << "\n";
        ++failures;
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(o.jobs, static_cast<int>(o.inputs.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return failures ? kRuntimeError : kOk;
}

int run_synth(const std::string& spec_path, const std::string& wav_out,
              const std::string& ref_out, std::optional<uint64_t> seed) {
  require_file(spec_path);
  karma::TrajectorySpec spec;
  try {
    spec = karma::spec_from_json(slurp(spec_path));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (seed) spec.seed = *seed;
  const karma::SynthesisResult r = karma::synthesize(spec);
  karma::write_wav(r.waveform, wav_out);
  if (!ref_out.empty()) karma::write_tracks(r.reference, ref_out);
  std::cout << wav_out << ": " << r.waveform.samples.size() << " samples at "
            << r.waveform.sample_rate_hz << " Hz (" << r.waveform.duration_s()
            << " s)\n";
  return kOk;
}

int run_eval(const std::string& est_path, const std::string& ref_path,
             int formants, int offset, bool align) {
  require_file(est_path);
  require_file(ref_path);
  const karma::TrackResult est = karma::read_tracks(est_path);
  karma::TrackResult ref = karma::read_tracks(ref_path);
  if (align) ref = karma::align_reference(ref, est.frames(), est.start_s, est.hop_s);
  if (!align && offset == 0 && est.frames() != ref.frames()) {
    throw UsageError("frame counts differ (" + std::to_string(est.frames()) +
                     " vs " + std::to_string(ref.frames()) +
                     "); pass --offset or --align");
  }
  karma::ActivityMask mask;
  for (int t = 0; t < est.frames(); ++t) {
    const int r = t + offset;
    mask.flags.push_back(est.speech[t] && r >= 0 && r < ref.frames() && ref.speech[r]);
  }
  karma::RmseReport rep;
  try {
    rep = karma::rmse(est, ref, mask, formants, offset);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::printf("%-8s %10s\n", "track", "rmse_hz");
  for (size_t i = 0; i < rep.per_track.size(); ++i) {
    std::printf("f%-7zu %10.2f\n", i + 1, rep.per_track[i]);
  }
  std::printf("%-8s %10.2f\n", "overall", rep.overall);
  std::printf("%-8s %10.2f\n", "mean", rep.mean_per_track);
  std::printf("frames counted %d, skipped %d\n", rep.frames_counted, rep.frames_skipped);
  nlohmann::ordered_json j;
  j["per_formant_hz"] = rep.per_track;
  j["overall_hz"] = rep.overall;
  j["mean_per_formant_hz"] = rep.mean_per_track;
  j["frames_counted"] = rep.frames_counted;
  j["frames_skipped"] = rep.frames_skipped;
  std::cout << j.dump() << "\n";
  return kOk;
}

int run_compare_pf(const std::string& config_path, int trials, int frames,
                   const std::vector<int>& particles, uint64_t seed,
                   const std::string& out) {
  const karma::RunConfig cfg = load_config(config_path);
  if (trials < 1 || frames < 1 || particles.empty()) {
    throw UsageError("trials, frames and particle counts must be positive");
  }
  for (int n : particles) {
    if (n < 10) throw UsageError("particle counts must be at least 10");
  }
  const auto points = karma::compare_ekf_pf(
      karma::comparison_params(cfg.cepstral_order), trials, frames, particles, seed);
  std::ostringstream csv;
  csv << "particles,pf_rmse_hz,ekf_rmse_hz,pf_ci_low_hz,pf_ci_high_hz\n";
  char buf[160];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f\n", p.particles,
                  p.pf_rmse, p.ekf_rmse, p.ci_low, p.ci_high);
    csv << buf;
  }
  write_text(out, csv.str());
  return kOk;
}

int run_make_spec(const std::string& kind, uint64_t seed, double duration,
                  int formants, double sample_rate, bool glottal,
                  const std::string& out) {
  karma::TrajectorySpec spec;
  if (kind == "nan") {
    spec = karma::nan_trajectory(seed);
  } else if (kind == "random") {
    spec = karma::random_trajectory(formants, duration, seed, sample_rate);
    if (glottal) spec = karma::with_glottal_source(spec, 90.0, 220.0, seed + 1);
  } else {
    throw UsageError("unknown spec kind: " + kind);
  }
  write_text(out, karma::spec_to_json(spec));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kalman-based formant and antiformant tracking"};
  app.require_subcommand(1);

  TrackOptions track;
  auto* cmd_track = app.add_subcommand("track", "track resonances in WAV files");
  cmd_track->add_option("inputs", track.inputs, "input WAV file(s)")->required();
  cmd_track->add_option("--config", track.config, "JSON run configuration");
  cmd_track->add_option("--mode", track.mode, "filter | smooth");
  cmd_track->add_option("--labels", track.labels, "label file: start end label");
  cmd_track->add_option("--obs", track.obs, "arma | realcep");
  cmd_track->add_option("--out", track.out, "output CSV (directory for several inputs)");
  cmd_track->add_option("--jobs", track.jobs, "parallel workers")->check(CLI::PositiveNumber);

  std::string spec_path, wav_out, ref_out;
  std::optional<uint64_t> synth_seed;
  auto* cmd_synth = app.add_subcommand("synth", "synthesize a trajectory spec");
  cmd_synth->add_option("spec", spec_path, "JSON trajectory spec")->required();
  cmd_synth->add_option("--out", wav_out, "output WAV")->required();
  cmd_synth->add_option("--ref", ref_out, "ground-truth CSV");
  cmd_synth->add_option("--seed", synth_seed, "override the spec seed");

  std::string est_path, eval_ref;
  int eval_formants = 3, eval_offset = 0;
  bool eval_align = false;
  auto* cmd_eval = app.add_subcommand("eval", "RMSE of tracks against a reference");
  cmd_eval->add_option("estimate", est_path, "estimated track CSV")->required();
  cmd_eval->add_option("reference", eval_ref, "reference track CSV")->required();
  cmd_eval->add_option("--formants", eval_formants, "formants to score");
  cmd_eval->add_option("--offset", eval_offset, "reference frame offset");
  cmd_eval->add_flag("--align", eval_align, "interpolate reference to estimate times");

  std::string pf_config, pf_out;
  int pf_trials = 25, pf_frames = 100;
  std::vector<int> pf_particles{10, 30, 100, 300, 1000};
  uint64_t pf_seed = 1;
  auto* cmd_pf = app.add_subcommand("compare-pf", "EKF vs particle filter Monte Carlo");
  cmd_pf->add_option("--config", pf_config, "JSON run configuration (uses N)");
  cmd_pf->add_option("--trials", pf_trials, "Monte Carlo trials");
  cmd_pf->add_option("--frames", pf_frames, "frames per trial");
  cmd_pf->add_option("--particles", pf_particles, "particle counts")->delimiter(',');
  cmd_pf->add_option("--seed", pf_seed, "random seed");
  cmd_pf->add_option("--out", pf_out, "output CSV (stdout if omitted)");

  std::string spec_kind, spec_out;
  uint64_t spec_seed = 1;
  double spec_duration = 2.0, spec_rate = 16000.0;
  int spec_formants = 4;
  bool spec_glottal = false;
  auto* cmd_spec = app.add_subcommand("make-spec", "write a trajectory spec");
  cmd_spec->add_option("kind", spec_kind, "nan | random")->required();
  cmd_spec->add_option("--seed", spec_seed, "random seed");
  cmd_spec->add_option("--duration", spec_duration, "seconds (random)");
  cmd_spec->add_option("--formants", spec_formants, "formant count (random)");
  cmd_spec->add_option("--rate", spec_rate, "sample rate (random)");
  cmd_spec->add_flag("--glottal", spec_glottal, "Rosenberg excitation (random)");
  cmd_spec->add_option("--out", spec_out, "output JSON (stdout if omitted)");

  auto* cmd_config = app.add_subcommand("config", "print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*cmd_track) return run_track(track);
    if (*cmd_synth) return run_synth(spec_path, wav_out, ref_out, synth_seed);
    if (*cmd_eval) {
      return run_eval(est_path, eval_ref, eval_formants, eval_offset, eval_align);
    }
    if (*cmd_pf) {
      return run_compare_pf(pf_config, pf_trials, pf_frames, pf_particles, pf_seed, pf_out);
    }
    if (*cmd_spec) {
      return run_make_spec(spec_kind, spec_seed, spec_duration, spec_formants,
                           spec_rate, spec_glottal, spec_out);
    }
    if (*cmd_config) {
      std::cout << karma::config_to_json(karma::RunConfig{});
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "karma: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "karma: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
