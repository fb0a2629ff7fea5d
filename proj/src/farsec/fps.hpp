#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace farsec {

enum class FpsSource { Metadata, Measured };

struct FpsEstimate {
  double fps = 0.0;
  std::size_t sample_count = 0;
  FpsSource source = FpsSource::Measured;
};

/// Endpoint estimator (k - 1) / (t_k - t_1) over the first
/// k = min(n_required, available) arrival times. Interior jitter cancels.
/// Throws InsufficientSamples (< 2 samples) or InvalidTimestamps.
FpsEstimate estimate_fps(std::span<const double> arrival_times_s, std::size_t n_required = 120);

/// Uses `declared` verbatim when present, otherwise measures.
FpsEstimate resolve_fps(std::optional<double> declared, std::span<const double> arrival_times_s,
                        std::size_t n_required = 120);

}  // namespace farsec
