#include "farsec/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "farsec/camera_move.hpp"
#include "farsec/channel.hpp"
#include "farsec/error.hpp"
#include "farsec/fps.hpp"
#include "farsec/tracking.hpp"

namespace farsec {

namespace {

using nlohmann::json;

class Logger {
 public:
  explicit Logger(std::ostream* out) : out_(out) {}
  void emit(const json& record) {
    if (out_) *out_ << record.dump() << '\n';
  }

 private:
  std::ostream* out_;
};

class ReportWriter {
 public:
  ReportWriter(std::ostream* out, OutputFormat format) : out_(out), format_(format) {
    if (out_ && format_ == OutputFormat::Csv) *out_ << "t,direction,v_star_kmh,count,window_s,epoch\n";
  }

  void write(const SpeedReport& r) {
    if (!out_) return;
    if (format_ == OutputFormat::Csv) {
      *out_ << format_number(r.t) << ',' << to_string(r.direction) << ','
            << (r.v_star_kmh ? format_number(*r.v_star_kmh) : std::string()) << ',' << r.vehicle_count << ','
            << format_number(r.window_s) << ',' << r.epoch << '\n';
    } else {
      json j;
      j["t"] = r.t;
      j["direction"] = to_string(r.direction);
      j["v_star_kmh"] = r.v_star_kmh ? json(*r.v_star_kmh) : json(nullptr);
      j["count"] = r.vehicle_count;
      j["window_s"] = r.window_s;
      j["epoch"] = r.epoch;
      *out_ << j.dump() << '\n';
    }
  }

 private:
  std::ostream* out_;
  OutputFormat format_;
};

class TrackDumper {
 public:
  TrackDumper(const std::string& path, const TraceHeader& header) {
    if (path.empty()) return;
    out_.open(path);
    if (!out_) throw Error(ErrorCode::IoError, "cannot write track dump " + path);
    out_ << "#farsec-trace v1";
    if (header.fps) out_ << " fps=" << format_number(*header.fps);
    out_ << " width=" << header.width << " height=" << header.height << '\n';
  }

  void dump(const Track& t) {
    if (!out_.is_open()) return;
    for (const auto& o : t.observations) {
      out_ << o.frame_index << ' ' << format_number(o.box.x_min) << ' ' << format_number(o.box.y_min) << ' '
           << format_number(o.box.x_max) << ' ' << format_number(o.box.y_max) << " car "
           << format_number(o.confidence) << ' ' << t.id << '\n';
    }
  }

 private:
  std::ofstream out_;
};

struct PendingTrack {
  Track track;
  bool evidence_done = false;
};

/// Everything calibrated for one camera view. Replaced wholesale on a
/// camera move.
struct Epoch {
  std::int64_t id = 0;
  std::int64_t start_frame = 0;
  Tracker tracker;
  SpeedWindow window;
  std::vector<double> timestamps;
  std::optional<FpsEstimate> fps;
  std::vector<Frame> calibration_frames;
  std::optional<DepthField> depth;
  std::optional<CameraIntrinsics> intrinsics;
  std::vector<EvidencePair> pairs;
  std::optional<ScaleCalibration> scale;
  std::vector<PendingTrack> pending;
  double next_report_t = 0.0;

  Epoch(std::int64_t id_, std::int64_t start, const TrackerConfig& tc, std::int64_t first_track_id, double window_s)
      : id(id_), start_frame(start), tracker(tc, first_track_id), window(window_s, id_) {}
};

class Driver {
 public:
  Driver(const PipelineConfig& config, PipelineBackends& backends, const PipelineSinks& sinks)
      : config_(config),
        backends_(backends),
        log_(sinks.log),
        writer_(sinks.reports, config.format),
        dumper_(config.dump_tracks, dump_header(backends)),
        move_({static_cast<std::size_t>(config.move_window), config.move_offset, config.move_pixel_delta,
               static_cast<std::size_t>(config.move_warmup)}) {
    tracker_config_ = {config.track_threshold_px, config.track_max_misses, config.track_min_frames,
                       config.track_dir_deadband};
    declared_fps_ = backends.source->declared_fps();
  }

  void process(Frame& frame) {
    ++summary_.frames;
    if (!epoch_) open_epoch(frame.index);

    if (config_.move_enabled && frame.has_pixels()) {
      const MoveVerdict verdict = move_.observe(frame);
      if (verdict.triggered) {
        summary_.recalibrations.push_back({frame.index, verdict.changed_fraction});
        log_.emit({{"type", "recalibrate"},
                   {"frame_index", frame.index},
                   {"changed_fraction", verdict.changed_fraction},
                   {"rolling_mean", verdict.rolling_mean},
                   {"epoch", epoch_->id + 1}});
        close_epoch(false);
        open_epoch(frame.index);
      }
    }
    Epoch& e = *epoch_;

    if (!e.fps) {
      e.timestamps.push_back(frame.timestamp_s);
      if (e.timestamps.size() >= static_cast<std::size_t>(config_.fps_samples)) resolve_fps(e);
    }
    if (!e.depth && (frame.index - e.start_frame) % config_.depth_stride == 0) {
      Frame copy = frame;
      e.calibration_frames.push_back(std::move(copy));
      if (e.calibration_frames.size() >= static_cast<std::size_t>(config_.depth_calib_frames)) calibrate_depth_now(e);
    }

    std::vector<Detection> detections;
    try {
      detections = filter_cars(backends_.detector->detect(frame));
    } catch (const Error& err) {
      log_.emit({{"type", "skip"}, {"frame_index", frame.index}, {"error", err.what()}});
    }
    summary_.detections += static_cast<std::int64_t>(detections.size());
    handle_retired(e, e.tracker.step(frame.index, frame.timestamp_s, detections));

    last_t_ = frame.timestamp_s;
    if (frame.timestamp_s + 1e-9 >= e.next_report_t) {
      emit_reports(e, frame.timestamp_s);
      while (e.next_report_t <= frame.timestamp_s + 1e-9) e.next_report_t += config_.speed_report_interval;
    }
  }

  RunSummary finish() {
    if (epoch_) close_epoch(true);
    return std::move(summary_);
  }

 private:
  static TraceHeader dump_header(const PipelineBackends& b) {
    if (auto* trace = dynamic_cast<const TraceDetector*>(b.detector.get())) return trace->header();
    return {};
  }

  void open_epoch(std::int64_t start_frame) {
    const std::int64_t id = epoch_ ? epoch_->id + 1 : 0;
    const std::int64_t first_track = epoch_ ? epoch_->tracker.next_id() : 0;
    epoch_.emplace(id, start_frame, tracker_config_, first_track, config_.speed_window_s);
    ++summary_.epochs;
    if (declared_fps_) resolve_fps(*epoch_);
  }

  void resolve_fps(Epoch& e) {
    try {
      e.fps = resolve_fps_checked(e);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::InsufficientSamples) throw;
      return;
    }
    log_.emit({{"type", "fps"},
               {"fps", e.fps->fps},
               {"source", e.fps->source == FpsSource::Metadata ? "metadata" : "measured"},
               {"samples", e.fps->sample_count},
               {"epoch", e.id}});
    if (config_.track_expected_max_kmh > 0) {
      const double limit_kmh = max_trackable_speed(config_.track_lane_width_m, e.fps->fps) * 3.6;
      if (config_.track_expected_max_kmh > limit_kmh)
        log_.emit({{"type", "warning"},
                   {"message", "expected speeds exceed the maximum trackable speed"},
                   {"max_trackable_kmh", limit_kmh},
                   {"epoch", e.id}});
    }
    progress(e);
  }

  FpsEstimate resolve_fps_checked(const Epoch& e) {
    return farsec::resolve_fps(declared_fps_, e.timestamps, static_cast<std::size_t>(config_.fps_samples));
  }

  void calibrate_depth_now(Epoch& e) {
    const Frame& ref = e.calibration_frames.front();
    e.depth = calibrate_depth(e.calibration_frames, *backends_.depth, e.id);
    e.intrinsics = CameraIntrinsics::from_fov(e.depth->width, e.depth->height, config_.camera_fov_deg);
    if (ref.width > 0 && (ref.width != e.depth->width || ref.height != e.depth->height))
      throw Error(ErrorCode::CalibrationFailed, "depth field does not match frame size");
    log_.emit({{"type", "depth"},
               {"frames_averaged", e.depth->frames_averaged},
               {"width", e.depth->width},
               {"height", e.depth->height},
               {"epoch", e.id}});
    e.calibration_frames.clear();
    progress(e);
  }

  void handle_retired(Epoch& e, std::vector<Track> retired) {
    for (auto& t : retired) {
      dumper_.dump(t);
      if (t.observations.size() < static_cast<std::size_t>(config_.track_min_frames)) continue;
      e.pending.push_back({std::move(t), false});
    }
    progress(e);
  }

  // Feeds pending tracks into scale evidence until the scale freezes, then
  // turns them into vehicle speeds once fps and scale are both known.
  void progress(Epoch& e) {
    if (!e.depth) return;
    if (!e.scale) {
      for (auto& p : e.pending) {
        if (p.evidence_done) continue;
        p.evidence_done = true;
        auto pairs = collect_pairs(p.track, *e.depth, *e.intrinsics, config_.scale_car_length_m,
                                   static_cast<std::size_t>(config_.track_min_frames));
        e.pairs.insert(e.pairs.end(), pairs.begin(), pairs.end());
        if (e.pairs.size() >= static_cast<std::size_t>(config_.scale_min_pairs)) {
          freeze_scale(e);
          break;
        }
      }
    }
    if (!e.scale || !e.fps) return;
    for (auto& p : e.pending) {
      try {
        VehicleSpeed v = vehicle_speed(p.track, *e.depth, *e.intrinsics, *e.scale, e.fps->fps,
                                       static_cast<std::size_t>(config_.track_min_frames));
        log_.emit({{"type", "vehicle"},
                   {"track_id", v.track_id},
                   {"v_kmh", v.v_kmh},
                   {"direction", to_string(v.direction)},
                   {"t_last_seen", v.t_last_seen},
                   {"frames_used", v.frames_used},
                   {"epoch", e.id}});
        summary_.speeds.push_back(v);
        if (v.direction != Direction::Unknown) e.window.add(v);
      } catch (const Error& err) {
        log_.emit({{"type", "skip"}, {"track_id", p.track.id}, {"error", err.what()}});
      }
    }
    e.pending.clear();
  }

  void freeze_scale(Epoch& e) {
    ScaleCalibration cal = estimate_scale(e.pairs, {static_cast<std::size_t>(config_.scale_min_pairs), true});
    cal.epoch = e.id;
    e.scale = cal;
    summary_.scales.push_back(cal);
    log_.emit({{"type", "scale"},
               {"s_hat", cal.s_hat},
               {"pair_count", cal.pair_count},
               {"residual_rms", cal.residual_rms},
               {"epoch", e.id}});
  }

  void emit_reports(Epoch& e, double t) {
    for (Direction d : {Direction::YIncreasing, Direction::YDecreasing}) {
      SpeedReport r = e.window.report(t, d);
      if (r.vehicle_count == 0) continue;
      if (r.epoch != e.id) throw Error(ErrorCode::InvalidParameter, "report mixes calibration epochs");
      writer_.write(r);
      summary_.reports.push_back(r);
    }
  }

  // At end of stream everything in flight is finalized with whatever
  // calibration can still be completed; on a camera move it is discarded.
  void close_epoch(bool end_of_stream) {
    Epoch& e = *epoch_;
    if (!end_of_stream) {
      for (const auto& t : e.tracker.finish()) dumper_.dump(t);
      log_.emit({{"type", "epoch_closed"},
                 {"epoch", e.id},
                 {"discarded_tracks", e.pending.size()},
                 {"pairs", e.pairs.size()}});
      return;
    }
    if (!e.fps && e.timestamps.size() >= 2) resolve_fps(e);
    if (!e.depth && !e.calibration_frames.empty()) calibrate_depth_now(e);
    handle_retired(e, e.tracker.finish());
    if (!e.scale) {
      log_.emit({{"type", "warning"},
                 {"message", "scale not calibrated: insufficient evidence pairs"},
                 {"pairs", e.pairs.size()},
                 {"epoch", e.id}});
    }
    if (summary_.frames > 0) emit_reports(e, last_t_);
  }

  const PipelineConfig& config_;
  PipelineBackends& backends_;
  Logger log_;
  ReportWriter writer_;
  TrackDumper dumper_;
  CameraMoveDetector move_;
  TrackerConfig tracker_config_;
  std::optional<double> declared_fps_;
  std::optional<Epoch> epoch_;
  double last_t_ = 0.0;
  RunSummary summary_;
};

Frame augment(Frame frame, const PipelineConfig& config) {
  if (!frame.has_pixels()) return frame;
  if (config.ingest_blur > 0) frame = apply_blur(frame, config.ingest_blur);
  if (config.ingest_noise > 0) {
    const std::uint64_t seed = config.ingest_seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(frame.index + 1));
    frame = apply_salt_noise(frame, config.ingest_noise, 1, seed);
  }
  return frame;
}

}  // namespace

PipelineBackends make_backends(const PipelineConfig& config) {
  PipelineBackends b;
  std::optional<TraceHeader> header;
  std::int64_t trace_frames = 0;
  if (config.detector.rfind("trace:", 0) == 0) {
    const DetectionTrace trace = read_trace(config.detector.substr(6));
    auto detector = std::make_unique<TraceDetector>(trace, config.detect_min_confidence);
    header = detector->header();
    trace_frames = detector->frame_count();
    b.detector = std::move(detector);
  } else if (config.detector == "external") {
    throw Error(ErrorCode::ConfigError, "detector=external needs an exported trace; use detector=trace:<path>");
  } else {
    throw Error(ErrorCode::ConfigError, "detector must be trace:<path>, got '" + config.detector + "'");
  }

  if (config.depth.rfind("file:", 0) == 0) {
    b.depth = std::make_unique<FileDepthBackend>(config.depth.substr(5));
  } else if (config.depth == "external") {
    throw Error(ErrorCode::ConfigError, "depth=external needs exported depth files; use depth=file:<path>");
  } else {
    throw Error(ErrorCode::ConfigError, "depth must be file:<path>, got '" + config.depth + "'");
  }

  std::optional<double> declared;
  if (config.ingest_fps > 0) declared = config.ingest_fps;
  else if (header && header->fps) declared = header->fps;

  if (!config.source.empty()) {
    SourceConfig sc;
    sc.uri = config.source;
    sc.max_fps = config.ingest_max_fps;
    sc.max_width = config.ingest_max_width;
    sc.max_height = config.ingest_max_height;
    sc.declared_fps = declared;
    b.source = open_source(sc);
  } else {
    if (!declared) throw Error(ErrorCode::ConfigError, "trace-only replay needs fps in the trace header or ingest.fps");
    if (header->width <= 0 || header->height <= 0)
      throw Error(ErrorCode::ConfigError, "trace-only replay needs width and height in the trace header");
    auto clock = std::make_unique<ClockSource>(trace_frames, *declared, header->width, header->height, "trace");
    b.source = std::make_unique<NormalizingSource>(std::move(clock), config.ingest_max_fps, config.ingest_max_width,
                                                   config.ingest_max_height);
  }
  return b;
}

RunSummary run_pipeline(const PipelineConfig& config, PipelineBackends backends, const PipelineSinks& sinks) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  {
    json cfg = {{"type", "config"}};
    for (const auto& [k, v] : config.entries()) cfg[k] = v;
    Logger(sinks.log).emit(cfg);
  }

  Driver driver(config, backends, sinks);
  BoundedChannel<Frame> channel(static_cast<std::size_t>(config.ingest_channel_capacity));
  FrameSource& source = *backends.source;
  std::thread producer([&] {
    try {
      while (auto frame = source.next()) {
        if (!channel.push(augment(std::move(*frame), config))) return;
      }
      channel.close();
    } catch (...) {
      channel.close(std::current_exception());
    }
  });

  struct JoinGuard {
    BoundedChannel<Frame>& ch;
    std::thread& th;
    ~JoinGuard() {
      ch.close();
      if (th.joinable()) th.join();
    }
  } guard{channel, producer};

  while (auto frame = channel.pop()) driver.process(*frame);
  RunSummary summary = driver.finish();
  summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

RunSummary run_pipeline(const PipelineConfig& config, const PipelineSinks& sinks) {
  return run_pipeline(config, make_backends(config), sinks);
}

}  // namespace farsec
