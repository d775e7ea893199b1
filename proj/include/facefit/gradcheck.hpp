#pragma once

#include <array>
#include <string>

#include "facefit/basis.hpp"
#include "facefit/camera.hpp"
#include "facefit/energy.hpp"

namespace facefit {

struct GradCheckConfig {
    int n_configs = 20;
    double fd_step = 1e-4;     // central-difference step
    double tolerance = 1e-4;   // per-dimension relative error bound
    double denom_floor = 1e-3; // |fd - an| / max(|fd| + |an|, floor)
    std::uint64_t seed = 1;
    int image_size = 96;
};

struct GradCheckReport {
    bool passed = false;
    double max_rel_error = 0.0;
    int worst_dim = -1;
    int worst_config = -1;
    int configs_run = 0;
    int redraws = 0; // configurations rejected by the smoothness margins
    std::array<double, 6> block_max{}; // alpha, beta, delta, gamma, omega, t
};

inline constexpr std::array<const char*, 6> kGradBlockNames = {"alpha", "beta",  "delta",
                                                               "gamma", "omega", "t"};

/// Central finite differences of the total energy against the analytic
/// gradient, over random smooth configurations: smooth test images
/// (exactly affine per channel, so bilinear cell boundaries carry no slope
/// jumps) and configurations redrawn until every vertex clears the
/// visibility-flip, image-border and zero-residual margins the finite
/// difference stencil needs.
GradCheckReport run_gradcheck(const MorphableBasis& basis, const GradCheckConfig& config);

} // namespace facefit
