#ifndef FARSEC_FARSEC_H
#define FARSEC_FARSEC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FARSEC_BUILDING_LIBRARY)
#    define FARSEC_API __declspec(dllexport)
#  else
#    define FARSEC_API __declspec(dllimport)
#  endif
#else
#  define FARSEC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum farsec_status {
  FARSEC_OK = 0,
  FARSEC_INVALID_PARAMETER = 1,
  FARSEC_SOURCE_UNAVAILABLE = 2,
  FARSEC_UNSUPPORTED_FORMAT = 3,
  FARSEC_FRAME_SHAPE_MISMATCH = 4,
  FARSEC_DETECTOR_ERROR = 5,
  FARSEC_TRACE_PARSE_ERROR = 6,
  FARSEC_DEGENERATE_LINE = 7,
  FARSEC_NO_INTERSECTION = 8,
  FARSEC_INSUFFICIENT_SAMPLES = 9,
  FARSEC_INVALID_TIMESTAMPS = 10,
  FARSEC_BAD_DEPTH_SAMPLE = 11,
  FARSEC_CALIBRATION_FAILED = 12,
  FARSEC_INSUFFICIENT_EVIDENCE = 13,
  FARSEC_INVALID_PAIR = 14,
  FARSEC_DEGENERATE_TRACK = 15,
  FARSEC_UNKNOWN_VEHICLE = 16,
  FARSEC_EMPTY_EVALUATION = 17,
  FARSEC_CONFIG_ERROR = 18,
  FARSEC_IO_ERROR = 19,
  FARSEC_INTERNAL_ERROR = 99
} farsec_status;

typedef enum farsec_direction {
  FARSEC_Y_INCREASING = 0,
  FARSEC_Y_DECREASING = 1,
  FARSEC_DIRECTION_UNKNOWN = 2
} farsec_direction;

typedef struct farsec_config farsec_config;
typedef struct farsec_run farsec_run;

typedef struct farsec_report {
  double t;
  farsec_direction direction;
  int has_speed;
  double v_star_kmh;
  int64_t count;
  double window_s;
  int64_t epoch;
} farsec_report;

typedef struct farsec_vehicle {
  int64_t track_id;
  double v_kmh;
  double t_last_seen;
  farsec_direction direction;
  int64_t frames_used;
  int64_t epoch;
} farsec_vehicle;

typedef struct farsec_stats {
  size_t support;
  double mean;
  double median;
  double p95;
  double worst;
} farsec_stats;

/* Message of the last failed call on this thread. Never NULL. */
FARSEC_API const char* farsec_last_error(void);
FARSEC_API const char* farsec_status_string(farsec_status status);
FARSEC_API const char* farsec_version(void);

FARSEC_API farsec_status farsec_config_new(farsec_config** out);
/* Applies a key=value file. Later calls and farsec_config_set override it. */
FARSEC_API farsec_status farsec_config_load_file(farsec_config* cfg, const char* path);
FARSEC_API farsec_status farsec_config_set(farsec_config* cfg, const char* key, const char* value);
/* Copies the effective value of `key` into buf (always NUL-terminated). */
FARSEC_API farsec_status farsec_config_get(const farsec_config* cfg, const char* key, char* buf, size_t len);
FARSEC_API void farsec_config_free(farsec_config* cfg);

/* Runs the pipeline to end of stream. Reports go to the configured `out`
   path, or stdout when empty. Structured log lines go to log_path; NULL means
   stderr and "" discards them. */
FARSEC_API farsec_status farsec_run_pipeline(const farsec_config* cfg, const char* log_path, farsec_run** out);
FARSEC_API int64_t farsec_run_frames(const farsec_run* run);
FARSEC_API int64_t farsec_run_epochs(const farsec_run* run);
FARSEC_API double farsec_run_wall_time(const farsec_run* run);
FARSEC_API size_t farsec_run_recalibration_count(const farsec_run* run);
FARSEC_API farsec_status farsec_run_recalibration(const farsec_run* run, size_t i, int64_t* frame_index,
                                                  double* changed_fraction);
FARSEC_API size_t farsec_run_scale_count(const farsec_run* run);
FARSEC_API farsec_status farsec_run_scale(const farsec_run* run, size_t i, double* s_hat, size_t* pair_count);
FARSEC_API size_t farsec_run_report_count(const farsec_run* run);
FARSEC_API farsec_status farsec_run_report(const farsec_run* run, size_t i, farsec_report* out);
FARSEC_API size_t farsec_run_vehicle_count(const farsec_run* run);
FARSEC_API farsec_status farsec_run_vehicle(const farsec_run* run, size_t i, farsec_vehicle* out);
FARSEC_API void farsec_run_free(farsec_run* run);

/* Synthetic scene from a scene file. With switch_spec_path, frames from
   switch_frame on come from the second scene. */
FARSEC_API farsec_status farsec_sim_generate(const char* spec_path, const char* out_dir, int write_frames,
                                             const char* switch_spec_path, int64_t switch_frame);

/* fps <= 0 reads it from scene_info.txt next to the ground truth. Writes the
   tables into out_dir; totals may be NULL. */
FARSEC_API farsec_status farsec_evaluate(const char* truth_path, const char* predictions_path, const char* out_dir,
                                         double fps, const char* video_id, farsec_stats* abs_total,
                                         farsec_stats* rel_total);

/* Blurs and/or salts every image of a directory into out_dir. */
FARSEC_API farsec_status farsec_augment(const char* in_dir, const char* out_dir, int blur_kernel, double noise_fraction,
                                        uint64_t seed);

FARSEC_API farsec_status farsec_max_trackable_speed(double lane_width_m, double fps, double* out_mps);
FARSEC_API farsec_status farsec_estimate_scale(const double* d_model, const double* l_true, size_t n, size_t min_pairs,
                                               double* s_hat);
FARSEC_API farsec_status farsec_estimate_fps(const double* arrival_times_s, size_t n, size_t n_required,
                                             double* fps);

#ifdef __cplusplus
}
#endif

#endif
