#pragma once

#include <vector>

#include "facefit/basis.hpp"
#include "facefit/camera.hpp"
#include "facefit/frame.hpp"

namespace facefit {

struct SyntheticVideoConfig {
    double identity_scale = 0.5;    // alpha, beta ~ N(0, 0.5^2) per dim
    double expression_scale = 0.2;  // first-frame delta draw
    double expression_decay = 1.0;  // per-dim decay of the delta draw/walk scales
    double expression_walk = 0.03;
    // per-axis first-frame rotation draw: pitch and roll are well
    // observed, sustained yaw is kept smaller (near-symmetric faces make
    // it the ill-conditioned axis)
    double pitch_scale = 0.08;
    double yaw_scale = 0.05;
    double roll_scale = 0.08;
    double rotation_walk = 0.008;
    double translation_jitter = 0.01; // relative to |z|
    double translation_walk = 0.004;
    double sh_band0 = 2.2;
    double sh_band0_jitter = 0.05;
    double sh_higher_scale = 0.06; // bands 1-2 initial draw
    double sh_walk = 0.005;
    double pixel_noise = 0.0; // gaussian, clamped to [0,1]
    int splat_radius = 0;
    int hole_fill_rounds = 4;
};

struct SyntheticVideo {
    std::vector<FrameObservation> frames; // frame images + 48 landmark annotations
    std::vector<CodeVector> ground_truth; // one code per frame, shared identity
};

/// Renders one synthetic video: a random identity with smooth per-frame
/// random walks on expression, pose and illumination. Landmark annotations
/// are the projected landmark vertices (invalid when off-image). Oracle
/// data for the fitting round trips.
SyntheticVideo generate_synthetic_video(const MorphableBasis& basis, const Camera& camera,
                                        std::uint64_t seed, int n_frames,
                                        const SyntheticVideoConfig& config = {});

} // namespace facefit
