#include <farsec/farsec.h>

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

namespace {

int exit_code(farsec_status s) {
  switch (s) {
    case FARSEC_OK: return 0;
    case FARSEC_CONFIG_ERROR:
    case FARSEC_INVALID_PARAMETER: return 2;
    case FARSEC_SOURCE_UNAVAILABLE:
    case FARSEC_UNSUPPORTED_FORMAT: return 3;
    case FARSEC_CALIBRATION_FAILED: return 4;
    default: return 1;
  }
}

int fail(farsec_status s) {
  std::fprintf(stderr, "farsec: %s: %s\n", farsec_status_string(s), farsec_last_error());
  return exit_code(s);
}

struct RunArgs {
  std::string config;
  std::string source;
  std::optional<double> max_fps;
  std::optional<int> blur;
  std::optional<double> noise;
  std::optional<unsigned long long> seed;
  std::string detector;
  std::string depth;
  std::string out;
  std::string format;
  std::string dump_tracks;
  std::string log;
  std::vector<std::string> sets;
};

int run(const RunArgs& a) {
  farsec_config* cfg = nullptr;
  if (auto s = farsec_config_new(&cfg); s != FARSEC_OK) return fail(s);
  struct Free {
    farsec_config* c;
    ~Free() { farsec_config_free(c); }
  } guard{cfg};

  std::string config_path = a.config;
  if (config_path.empty()) {
    if (const char* env = std::getenv("FARSEC_CONFIG"); env && *env) config_path = env;
  }
  if (!config_path.empty()) {
    if (auto s = farsec_config_load_file(cfg, config_path.c_str()); s != FARSEC_OK) return fail(s);
  }

  std::vector<std::pair<std::string, std::string>> overrides;
  if (!a.source.empty()) overrides.emplace_back("source", a.source);
  if (a.max_fps) overrides.emplace_back("ingest.max_fps", std::to_string(*a.max_fps));
  if (a.blur) overrides.emplace_back("ingest.blur", std::to_string(*a.blur));
  if (a.noise) overrides.emplace_back("ingest.noise", std::to_string(*a.noise));
  if (a.seed) overrides.emplace_back("ingest.seed", std::to_string(*a.seed));
  if (!a.detector.empty()) overrides.emplace_back("detector", a.detector);
  if (!a.depth.empty()) overrides.emplace_back("depth", a.depth);
  if (!a.out.empty()) overrides.emplace_back("out", a.out);
  if (!a.format.empty()) overrides.emplace_back("format", a.format);
  if (!a.dump_tracks.empty()) overrides.emplace_back("dump_tracks", a.dump_tracks);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "farsec: --set expects key=value, got '%s'\n", kv.c_str());
      return 2;
    }
    overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [k, v] : overrides) {
    if (auto s = farsec_config_set(cfg, k.c_str(), v.c_str()); s != FARSEC_OK) return fail(s);
  }

  farsec_run* result = nullptr;
  const auto s = farsec_run_pipeline(cfg, a.log.empty() ? nullptr : a.log.c_str(), &result);
  if (s != FARSEC_OK) return fail(s);
  farsec_run_free(result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monocular vehicle speed estimation from a fixed traffic camera"};
  app.require_subcommand(1);
  app.set_version_flag("--version", farsec_version());

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Process a source and emit rolling speed reports");
  run_cmd->add_option("-c,--config", ra.config, "key=value config file (default: $FARSEC_CONFIG)");
  run_cmd->add_option("--source", ra.source, "Video file, image directory or stream URL");
  run_cmd->add_option("--max-fps", ra.max_fps, "Drop frames above this rate");
  run_cmd->add_option("--blur", ra.blur, "Box blur kernel size, 0 disables");
  run_cmd->add_option("--noise", ra.noise, "Salt noise fraction per frame");
  run_cmd->add_option("--seed", ra.seed, "Noise seed");
  run_cmd->add_option("--detector", ra.detector, "trace:<path>");
  run_cmd->add_option("--depth", ra.depth, "file:<path>");
  run_cmd->add_option("-o,--out", ra.out, "Report output path (default stdout)");
  run_cmd->add_option("--format", ra.format, "jsonl or csv");
  run_cmd->add_option("--dump-tracks", ra.dump_tracks, "Write finished tracks to this trace file");
  run_cmd->add_option("--log", ra.log, "Write structured log lines here instead of stderr");
  run_cmd->add_option("--set", ra.sets, "Override any config key: key=value");

  std::string scene, sim_out, switch_scene;
  long long switch_frame = 0;
  bool frames = false;
  auto* sim_cmd = app.add_subcommand("sim", "Render a synthetic scene with exact ground truth");
  sim_cmd->add_option("--spec,--scene", scene, "Scene file")->required();
  sim_cmd->add_option("-o,--out", sim_out, "Output directory")->required();
  sim_cmd->add_flag("--frames", frames, "Also write PNG frames");
  auto* sw = sim_cmd->add_option("--switch-scene", switch_scene, "Second view for a camera-move composite");
  sim_cmd->add_option("--switch-frame", switch_frame, "First frame of the second view")->needs(sw);

  std::string truth, pred, eval_out, video = "video";
  double fps = 0.0;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  eval_cmd->add_option("--truth", truth, "Ground-truth CSV")->required();
  eval_cmd->add_option("--pred", pred, "Report stream or per-vehicle CSV")->required();
  eval_cmd->add_option("-o,--out", eval_out, "Directory for the tables")->required();
  eval_cmd->add_option("--fps", fps, "Frame rate of the ground truth (default: scene_info.txt)");
  eval_cmd->add_option("--video", video, "Video id when the files carry none");

  std::string aug_in, aug_out;
  int aug_blur = 0;
  double aug_noise = 0.0;
  unsigned long long aug_seed = 0;
  auto* aug_cmd = app.add_subcommand("augment", "Blur and/or salt an image sequence");
  aug_cmd->add_option("--source", aug_in, "Input image directory")->required();
  aug_cmd->add_option("-o,--out", aug_out, "Output directory")->required();
  aug_cmd->add_option("--blur", aug_blur, "Box blur kernel size");
  aug_cmd->add_option("--noise", aug_noise, "Salt noise fraction");
  aug_cmd->add_option("--seed", aug_seed, "Noise seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*run_cmd) return run(ra);
  if (*sim_cmd) {
    const auto s = farsec_sim_generate(scene.c_str(), sim_out.c_str(), frames ? 1 : 0,
                                       switch_scene.empty() ? nullptr : switch_scene.c_str(), switch_frame);
    return s == FARSEC_OK ? 0 : fail(s);
  }
  if (*eval_cmd) {
    farsec_stats abs{}, rel{};
    const auto s = farsec_evaluate(truth.c_str(), pred.c_str(), eval_out.c_str(), fps, video.c_str(), &abs, &rel);
    if (s != FARSEC_OK) return fail(s);
    std::printf("support=%zu mean_abs_kmh=%.2f median_abs_kmh=%.2f p95_abs_kmh=%.2f mean_rel_pct=%.2f\n", abs.support,
                abs.mean, abs.median, abs.p95, rel.mean);
    return 0;
  }
  if (*aug_cmd) {
    const auto s = farsec_augment(aug_in.c_str(), aug_out.c_str(), aug_blur, aug_noise, aug_seed);
    return s == FARSEC_OK ? 0 : fail(s);
  }
  return 2;
}
