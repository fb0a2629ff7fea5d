#include "farsec/fps.hpp"

#include <algorithm>
#include <cmath>

#include "farsec/error.hpp"

namespace farsec {

FpsEstimate estimate_fps(std::span<const double> arrival_times_s, std::size_t n_required) {
  if (n_required < 2) throw Error(ErrorCode::InvalidParameter, "fps.samples must be at least 2");
  const std::size_t k = std::min(n_required, arrival_times_s.size());
  if (k < 2) throw Error(ErrorCode::InsufficientSamples, "need at least two timestamps");
  for (std::size_t i = 1; i < k; ++i) {
    if (!std::isfinite(arrival_times_s[i]) || !(arrival_times_s[i] > arrival_times_s[i - 1]))
      throw Error(ErrorCode::InvalidTimestamps, "timestamps must be strictly increasing");
  }
  const double span = arrival_times_s[k - 1] - arrival_times_s[0];
  return {static_cast<double>(k - 1) / span, k, FpsSource::Measured};
}

FpsEstimate resolve_fps(std::optional<double> declared, std::span<const double> arrival_times_s,
                        std::size_t n_required) {
  if (declared) {
    if (!(*declared > 0.0)) throw Error(ErrorCode::InvalidParameter, "declared fps must be positive");
    return {*declared, 0, FpsSource::Metadata};
  }
  return estimate_fps(arrival_times_s, n_required);
}

}  // namespace farsec
