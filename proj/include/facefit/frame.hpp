#pragma once

#include <array>
#include <optional>

#include "facefit/image.hpp"
#include "facefit/types.hpp"

namespace facefit {

/// The 48 annotated landmark positions of one frame, in crop pixel
/// coordinates. Invalid entries (occluded or unannotated) drop out of the
/// landmark loss.
struct LandmarkSet {
    std::array<Vec2, dims::landmarks> points{};
    std::array<bool, dims::landmarks> validity{};

    int valid_count() const {
        int n = 0;
        for (bool v : validity) n += v ? 1 : 0;
        return n;
    }
};

struct CropRect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

/// One observed RGB frame with its ground-truth landmarks and the crop
/// rectangle that produced it (so coordinates remain reconstructible in
/// the original image).
struct FrameObservation {
    Image image;
    LandmarkSet landmarks;
    CropRect crop_rect;
    int frame_index = 0;
    std::optional<double> timestamp;
};

} // namespace facefit
