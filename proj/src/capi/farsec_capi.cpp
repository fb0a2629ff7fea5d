#include "farsec/farsec.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "farsec/config.hpp"
#include "farsec/error.hpp"
#include "farsec/evaluation.hpp"
#include "farsec/fps.hpp"
#include "farsec/frame.hpp"
#include "farsec/pipeline.hpp"
#include "farsec/scale.hpp"
#include "farsec/simulator.hpp"
#include "farsec/tracking.hpp"

struct farsec_config {
  farsec::PipelineConfig config;
};

struct farsec_run {
  farsec::RunSummary summary;
};

namespace {

thread_local std::string last_error;

farsec_status map_code(farsec::ErrorCode code) {
  using farsec::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidParameter: return FARSEC_INVALID_PARAMETER;
    case ErrorCode::SourceUnavailable: return FARSEC_SOURCE_UNAVAILABLE;
    case ErrorCode::UnsupportedFormat: return FARSEC_UNSUPPORTED_FORMAT;
    case ErrorCode::FrameShapeMismatch: return FARSEC_FRAME_SHAPE_MISMATCH;
    case ErrorCode::DetectorError: return FARSEC_DETECTOR_ERROR;
    case ErrorCode::TraceParseError: return FARSEC_TRACE_PARSE_ERROR;
    case ErrorCode::DegenerateLine: return FARSEC_DEGENERATE_LINE;
    case ErrorCode::NoIntersection: return FARSEC_NO_INTERSECTION;
    case ErrorCode::InsufficientSamples: return FARSEC_INSUFFICIENT_SAMPLES;
    case ErrorCode::InvalidTimestamps: return FARSEC_INVALID_TIMESTAMPS;
    case ErrorCode::BadDepthSample: return FARSEC_BAD_DEPTH_SAMPLE;
    case ErrorCode::CalibrationFailed: return FARSEC_CALIBRATION_FAILED;
    case ErrorCode::InsufficientEvidence: return FARSEC_INSUFFICIENT_EVIDENCE;
    case ErrorCode::InvalidPair: return FARSEC_INVALID_PAIR;
    case ErrorCode::DegenerateTrack: return FARSEC_DEGENERATE_TRACK;
    case ErrorCode::UnknownVehicle: return FARSEC_UNKNOWN_VEHICLE;
    case ErrorCode::EmptyEvaluation: return FARSEC_EMPTY_EVALUATION;
    case ErrorCode::ConfigError: return FARSEC_CONFIG_ERROR;
    case ErrorCode::IoError: return FARSEC_IO_ERROR;
  }
  return FARSEC_INTERNAL_ERROR;
}

template <typename F>
farsec_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return FARSEC_OK;
  } catch (const farsec::Error& e) {
    last_error = e.what();
    return map_code(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown exception";
  }
  return FARSEC_INTERNAL_ERROR;
}

void require(bool ok, const char* what) {
  if (!ok) throw farsec::Error(farsec::ErrorCode::InvalidParameter, what);
}

farsec_direction map_direction(farsec::Direction d) {
  switch (d) {
    case farsec::Direction::YIncreasing: return FARSEC_Y_INCREASING;
    case farsec::Direction::YDecreasing: return FARSEC_Y_DECREASING;
    case farsec::Direction::Unknown: return FARSEC_DIRECTION_UNKNOWN;
  }
  return FARSEC_DIRECTION_UNKNOWN;
}

void copy_stats(const farsec::eval::Stats& s, farsec_stats* out) {
  if (!out) return;
  *out = {s.support, s.mean, s.median, s.p95, s.worst};
}

}  // namespace

extern "C" {

const char* farsec_last_error(void) { return last_error.c_str(); }

const char* farsec_status_string(farsec_status status) {
  switch (status) {
    case FARSEC_OK: return "ok";
    case FARSEC_INVALID_PARAMETER: return "invalid parameter";
    case FARSEC_SOURCE_UNAVAILABLE: return "source unavailable";
    case FARSEC_UNSUPPORTED_FORMAT: return "unsupported format";
    case FARSEC_FRAME_SHAPE_MISMATCH: return "frame shape mismatch";
    case FARSEC_DETECTOR_ERROR: return "detector error";
    case FARSEC_TRACE_PARSE_ERROR: return "trace parse error";
    case FARSEC_DEGENERATE_LINE: return "degenerate line";
    case FARSEC_NO_INTERSECTION: return "no intersection";
    case FARSEC_INSUFFICIENT_SAMPLES: return "insufficient samples";
    case FARSEC_INVALID_TIMESTAMPS: return "invalid timestamps";
    case FARSEC_BAD_DEPTH_SAMPLE: return "bad depth sample";
    case FARSEC_CALIBRATION_FAILED: return "calibration failed";
    case FARSEC_INSUFFICIENT_EVIDENCE: return "insufficient evidence";
    case FARSEC_INVALID_PAIR: return "invalid pair";
    case FARSEC_DEGENERATE_TRACK: return "degenerate track";
    case FARSEC_UNKNOWN_VEHICLE: return "unknown vehicle";
    case FARSEC_EMPTY_EVALUATION: return "empty evaluation";
    case FARSEC_CONFIG_ERROR: return "config error";
    case FARSEC_IO_ERROR: return "i/o error";
    case FARSEC_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

const char* farsec_version(void) { return "1.0.0"; }

farsec_status farsec_config_new(farsec_config** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new farsec_config{};
  });
}

farsec_status farsec_config_load_file(farsec_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg && path, "null argument");
    for (const auto& [k, v] : farsec::read_key_values(path)) cfg->config.set(k, v);
  });
}

farsec_status farsec_config_set(farsec_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && key && value, "null argument");
    cfg->config.set(key, value);
  });
}

farsec_status farsec_config_get(const farsec_config* cfg, const char* key, char* buf, size_t len) {
  return guarded([&] {
    require(cfg && key && buf && len > 0, "null argument");
    for (const auto& [k, v] : cfg->config.entries()) {
      if (k != key) continue;
      if (v.size() + 1 > len) throw farsec::Error(farsec::ErrorCode::InvalidParameter, "buffer too small");
      std::memcpy(buf, v.c_str(), v.size() + 1);
      return;
    }
    throw farsec::Error(farsec::ErrorCode::ConfigError, std::string("unknown key '") + key + "'");
  });
}

void farsec_config_free(farsec_config* cfg) { delete cfg; }

farsec_status farsec_run_pipeline(const farsec_config* cfg, const char* log_path, farsec_run** out) {
  return guarded([&] {
    require(cfg && out, "null argument");
    *out = nullptr;
    const auto& config = cfg->config;
    config.validate();

    std::ofstream report_file;
    std::ostream* reports = &std::cout;
    if (!config.out.empty()) {
      report_file.open(config.out);
      if (!report_file) throw farsec::Error(farsec::ErrorCode::IoError, "cannot write " + config.out);
      reports = &report_file;
    }
    std::ofstream log_file;
    std::ostream* log = &std::cerr;
    if (log_path) {
      if (*log_path == '\0') {
        log = nullptr;
      } else {
        log_file.open(log_path);
        if (!log_file) throw farsec::Error(farsec::ErrorCode::IoError, std::string("cannot write ") + log_path);
        log = &log_file;
      }
    }
    auto run = std::make_unique<farsec_run>();
    run->summary = farsec::run_pipeline(config, {reports, log});
    reports->flush();
    *out = run.release();
  });
}

int64_t farsec_run_frames(const farsec_run* run) { return run ? run->summary.frames : 0; }
int64_t farsec_run_epochs(const farsec_run* run) { return run ? run->summary.epochs : 0; }
double farsec_run_wall_time(const farsec_run* run) { return run ? run->summary.wall_time_s : 0.0; }

size_t farsec_run_recalibration_count(const farsec_run* run) {
  return run ? run->summary.recalibrations.size() : 0;
}

farsec_status farsec_run_recalibration(const farsec_run* run, size_t i, int64_t* frame_index,
                                       double* changed_fraction) {
  return guarded([&] {
    require(run && i < run->summary.recalibrations.size(), "index out of range");
    const auto& r = run->summary.recalibrations[i];
    if (frame_index) *frame_index = r.frame_index;
    if (changed_fraction) *changed_fraction = r.changed_fraction;
  });
}

size_t farsec_run_scale_count(const farsec_run* run) { return run ? run->summary.scales.size() : 0; }

farsec_status farsec_run_scale(const farsec_run* run, size_t i, double* s_hat, size_t* pair_count) {
  return guarded([&] {
    require(run && i < run->summary.scales.size(), "index out of range");
    const auto& s = run->summary.scales[i];
    if (s_hat) *s_hat = s.s_hat;
    if (pair_count) *pair_count = s.pair_count;
  });
}

size_t farsec_run_report_count(const farsec_run* run) { return run ? run->summary.reports.size() : 0; }

farsec_status farsec_run_report(const farsec_run* run, size_t i, farsec_report* out) {
  return guarded([&] {
    require(run && out && i < run->summary.reports.size(), "index out of range");
    const auto& r = run->summary.reports[i];
    *out = {r.t,
            map_direction(r.direction),
            r.v_star_kmh.has_value() ? 1 : 0,
            r.v_star_kmh.value_or(0.0),
            static_cast<int64_t>(r.vehicle_count),
            r.window_s,
            r.epoch};
  });
}

size_t farsec_run_vehicle_count(const farsec_run* run) { return run ? run->summary.speeds.size() : 0; }

farsec_status farsec_run_vehicle(const farsec_run* run, size_t i, farsec_vehicle* out) {
  return guarded([&] {
    require(run && out && i < run->summary.speeds.size(), "index out of range");
    const auto& v = run->summary.speeds[i];
    *out = {v.track_id, v.v_kmh, v.t_last_seen, map_direction(v.direction), static_cast<int64_t>(v.frames_used),
            v.epoch};
  });
}

void farsec_run_free(farsec_run* run) { delete run; }

farsec_status farsec_sim_generate(const char* spec_path, const char* out_dir, int write_frames,
                                  const char* switch_spec_path, int64_t switch_frame) {
  return guarded([&] {
    require(spec_path && out_dir, "null argument");
    auto a = farsec::sim::generate(farsec::sim::read_scene(spec_path));
    if (switch_spec_path && *switch_spec_path) {
      auto b = farsec::sim::generate(farsec::sim::read_scene(switch_spec_path));
      auto composite = farsec::sim::inject_view_switch(std::move(a), std::move(b), switch_frame);
      farsec::sim::write_composite(composite, out_dir, write_frames != 0);
    } else {
      farsec::sim::write_scene(a, out_dir, write_frames != 0);
    }
  });
}

farsec_status farsec_evaluate(const char* truth_path, const char* predictions_path, const char* out_dir, double fps,
                              const char* video_id, farsec_stats* abs_total, farsec_stats* rel_total) {
  return guarded([&] {
    require(truth_path && predictions_path && out_dir, "null argument");
    std::optional<double> f;
    if (fps > 0) f = fps;
    const auto result =
        farsec::eval::run_evaluation(truth_path, predictions_path, out_dir, f, video_id ? video_id : "video");
    copy_stats(result.table.total.abs, abs_total);
    copy_stats(result.table.total.rel, rel_total);
  });
}

farsec_status farsec_augment(const char* in_dir, const char* out_dir, int blur_kernel, double noise_fraction,
                             uint64_t seed) {
  return guarded([&] {
    require(in_dir && out_dir, "null argument");
    require(blur_kernel >= 0, "blur kernel must be non-negative");
    require(noise_fraction >= 0.0 && noise_fraction <= 1.0, "noise fraction must lie in [0, 1]");
    const auto files = farsec::list_image_sequence(in_dir);
    if (files.empty()) throw farsec::Error(farsec::ErrorCode::SourceUnavailable, std::string("no images in ") + in_dir);
    std::filesystem::create_directories(out_dir);
    std::uint64_t index = 0;
    for (const auto& path : files) {
      farsec::Frame frame = farsec::read_image(path);
      if (blur_kernel > 0) frame = farsec::apply_blur(frame, blur_kernel);
      if (noise_fraction > 0) frame = farsec::apply_salt_noise(frame, noise_fraction, 1, seed + index);
      farsec::write_image(frame, std::filesystem::path(out_dir) / path.filename().replace_extension(".png"));
      ++index;
    }
  });
}

farsec_status farsec_max_trackable_speed(double lane_width_m, double fps, double* out_mps) {
  return guarded([&] {
    require(out_mps != nullptr, "null argument");
    *out_mps = farsec::max_trackable_speed(lane_width_m, fps);
  });
}

farsec_status farsec_estimate_scale(const double* d_model, const double* l_true, size_t n, size_t min_pairs,
                                    double* s_hat) {
  return guarded([&] {
    require(s_hat && (n == 0 || (d_model && l_true)), "null argument");
    std::vector<farsec::EvidencePair> pairs(n);
    for (size_t i = 0; i < n; ++i) {
      pairs[i].d_model = d_model[i];
      pairs[i].l_true = l_true[i];
    }
    *s_hat = farsec::estimate_scale(pairs, {min_pairs, true}).s_hat;
  });
}

farsec_status farsec_estimate_fps(const double* arrival_times_s, size_t n, size_t n_required, double* fps) {
  return guarded([&] {
    require(fps && (n == 0 || arrival_times_s), "null argument");
    *fps = farsec::estimate_fps(std::span<const double>(arrival_times_s, n), n_required).fps;
  });
}

}  // extern "C"
