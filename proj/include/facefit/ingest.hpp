#pragma once

#include <string>
#include <vector>

#include "facefit/frame.hpp"
#include "facefit/types.hpp"

namespace facefit {

/// Fixed 48-of-68 subset of the standard 68-point annotation scheme,
/// covering the chin (5), eyebrows (10), nose (9), eye corners (4) and
/// mouth (20), in ascending source order.
extern const std::array<int, dims::landmarks> kLandmarkSubset68;

struct CropConfig {
    int output_size = 224;
    double expansion = 0.10; // per side, fraction of the box extent
};

struct CropOutput {
    Image image;                 // output_size x output_size
    std::vector<Vec2> remapped;  // all input points mapped to crop coords
    std::vector<bool> validity;  // propagated
    CropRect rect;               // final square rect in source coordinates
    double scale = 1.0;          // output pixels per source pixel
};

/// Tight bounding box of the valid landmarks, expanded 10% per side,
/// clamped to the image, square-padded to the longer side and resampled
/// with bilinear filtering. Rejects frames with fewer than two valid
/// points or a zero-area box. Out-of-image areas sample black.
CropOutput crop_face(const Image& image, const std::vector<Vec2>& points,
                     const std::vector<bool>& validity, const CropConfig& config = {});

/// Picks the 48-point subset out of 68 annotated points, propagating
/// validity flags. Rejects any other input count.
LandmarkSet select_landmark_subset(const std::vector<Vec2>& points_68,
                                   const std::vector<bool>& validity_68);

/// One row of a 68-point landmark CSV: 136 columns, "-1,-1" = invalid.
struct LandmarkRow {
    std::vector<Vec2> points;    // 68
    std::vector<bool> validity;  // 68
};

std::vector<LandmarkRow> load_landmark_csv(const std::string& path);
void save_landmark_csv(const std::vector<LandmarkRow>& rows, const std::string& path);

struct ManifestEntry {
    std::string video_id;
    std::string subject_id;
    int label = -1; // 0 truth, 1 deception, -1 unlabeled
    std::string frames_glob;
    std::string landmarks_path;
};

/// CSV with header video_id,subject_id,label,frames_glob,landmarks_path.
/// Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::string& path);
void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);

/// Expands a glob pattern ('*' and '?' in the filename part) against the
/// filesystem; results sort lexicographically. Relative patterns resolve
/// against base_dir.
std::vector<std::string> expand_glob(const std::string& pattern, const std::string& base_dir);

struct VideoIngest {
    std::vector<FrameObservation> frames;
    std::vector<int> rejected_frames; // indices of frames dropped at ingestion
};

/// Loads a manifest entry's frames and landmarks. With `crop` the face is
/// cropped per crop_face and landmarks are remapped; otherwise frames are
/// taken as-is with the subset landmarks in frame coordinates. Frames with
/// degenerate landmark boxes are rejected and logged, not fatal.
VideoIngest load_video(const ManifestEntry& entry, const std::string& base_dir, bool crop,
                       const CropConfig& config = {});

} // namespace facefit
