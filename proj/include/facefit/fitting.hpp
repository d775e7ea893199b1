#pragma once

#include <vector>

#include "facefit/energy.hpp"
#include "facefit/gradient.hpp"

namespace facefit {

/// Per-frame parameters: everything in the code vector that is allowed to
/// vary over time.
struct FrameParams {
    VecX delta = VecX::Zero(dims::expression);
    VecX gamma = VecX::Zero(dims::illumination);
    Vec3 omega = Vec3::Zero();
    Vec3 t = Vec3::Zero();

    VecX to_flat() const; // 97 entries, [delta | gamma | omega | t]
    static FrameParams from_flat(const VecX& flat);
};

/// Joint fit state for one video: a single identity block (alpha, beta)
/// shared by every frame, per-frame parameter records, and the Adam moment
/// accumulators.
struct VideoFitState {
    VecX identity = VecX::Zero(dims::geometry + dims::reflectance); // [alpha | beta]
    std::vector<FrameParams> frames;

    VecX identity_m = VecX::Zero(dims::geometry + dims::reflectance);
    VecX identity_v = VecX::Zero(dims::geometry + dims::reflectance);
    std::vector<VecX> frame_m;
    std::vector<VecX> frame_v;
    int step_count = 0;

    int frame_count() const { return static_cast<int>(frames.size()); }
    /// Full 257-d code of frame f (shared identity + that frame's block).
    CodeVector assemble(int f) const;
};

struct FitConfig {
    int max_iterations = 500;
    double learning_rate = 0.01; // peak Adam step size
    // Rate schedule: the pose group stays frozen and then ramps in while
    // illumination/reflectance converge, so the appearance-mismatch force
    // cannot drag the pre-fit pose into a wrong basin; an exponential tail
    // decay stops Adam from dithering around the valley floor at pixel
    // scale.
    int pose_warmup_iterations = 60;
    double final_lr_fraction = 0.02;
    // Coarse-to-fine schedule over box-downsampled copies of the frames,
    // ending at full resolution. Shares max_iterations across levels.
    std::vector<int> pyramid_factors = {4, 2, 1};
    int identity_frame_count = 3; // M frames sampled per iteration for the identity gradient
    double init_z_translation = 0.0; // 0 = derive from basis bounding box and focal length
    double init_sh_offset = 2.0;     // 0-th band SH coefficient per channel at start
    double convergence_tol = 1e-6;   // relative energy change over a 10-iteration window
    std::uint64_t seed = 0;
    int prefit_iterations = 100;
    double prefit_learning_rate = 0.05;
};

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One Adam update of the whole state. `gradients` holds one flat 257-d
/// gradient per frame; the identity-block update uses the average of the
/// identity gradients of `identity_frames` (all frames when empty), while
/// each frame block uses its own gradient. The pose segment (omega, t) of
/// each frame steps at learning_rate * pose_lr_scale; moments accumulate
/// normally either way. Omega is re-canonicalized to ||omega|| < pi
/// afterwards.
void adam_step(VideoFitState& state, const std::vector<VecX>& gradients,
               const std::vector<int>& identity_frames, double learning_rate,
               double pose_lr_scale = 1.0, const AdamParams& params = {});

struct FitResult {
    VideoFitState state;
    std::vector<std::vector<EnergyBreakdown>> history; // [iteration][frame]
    bool converged = false;
    int iterations_run = 0;
    double best_energy = 0.0;
};

/// Analysis-by-synthesis fit of a whole video with shared identity.
/// Initialization: zero coefficients, t = (0, 0, init_z) refined by a
/// landmark-only pose pre-fit, band-0 SH offset per channel. Then joint
/// Adam minimization of the summed per-frame energies. Returns the best
/// state seen; `converged` is false when the iteration cap was hit first.
FitResult fit_video(const std::vector<FrameObservation>& frames, const MorphableBasis& basis,
                    const Camera& camera, const FitConfig& config, const EnergyWeights& weights);

/// Per-frame 257-d vectors [alpha | beta | delta_f | gamma_f | omega_f | t_f].
std::vector<VecX> export_features(const VideoFitState& state);

struct ConsistencyReport {
    VecX alpha_std = VecX::Zero(dims::geometry);
    VecX beta_std = VecX::Zero(dims::reflectance);
    double mean_alpha_std = 0.0;
    double mean_beta_std = 0.0;
};

/// Sample standard deviation (n-1) of the identity blocks across
/// independent per-frame fits. Needs at least two fits.
ConsistencyReport identity_consistency_report(const std::vector<CodeVector>& fits);

/// Default z so the mean face's projected extent covers ~60% of the image
/// height. Negative (in front of the camera).
double default_init_z(const MorphableBasis& basis, const Camera& camera);

} // namespace facefit
