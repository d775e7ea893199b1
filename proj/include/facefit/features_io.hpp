#pragma once

#include <string>
#include <vector>

#include "facefit/types.hpp"

namespace facefit {

/// CSV feature files: header f000..f256, one 257-entry row per frame,
/// lossless round trip at float32 precision.
void write_features(const std::vector<VecX>& rows, const std::string& path);
std::vector<VecX> parse_features(const std::string& path);

} // namespace facefit
