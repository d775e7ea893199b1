#include "facefit/fitting.hpp"

#include <algorithm>
#include <cmath>

#include "facefit/rng.hpp"
#include "facefit/rotation.hpp"

namespace facefit {

namespace {
constexpr int kFrameDims = dims::expression + dims::illumination + dims::rotation + dims::translation;
constexpr int kIdentityDims = dims::geometry + dims::reflectance;

void adam_update(VecX& param, VecX& m, VecX& v, const VecX& grad, int step, double lr,
                 const AdamParams& p) {
    m = p.beta1 * m + (1.0 - p.beta1) * grad;
    v = p.beta2 * v + (1.0 - p.beta2) * grad.cwiseProduct(grad);
    const double m_corr = 1.0 / (1.0 - std::pow(p.beta1, step));
    const double v_corr = 1.0 / (1.0 - std::pow(p.beta2, step));
    param.array() -= lr * (m_corr * m.array()) / ((v_corr * v.array()).sqrt() + p.epsilon);
}

// Same recurrence with a distinct learning rate for the trailing segment
// (the pose block of a frame parameter vector).
void adam_update_split(VecX& param, VecX& m, VecX& v, const VecX& grad, int step, double lr_head,
                       double lr_tail, int tail_len, const AdamParams& p) {
    m = p.beta1 * m + (1.0 - p.beta1) * grad;
    v = p.beta2 * v + (1.0 - p.beta2) * grad.cwiseProduct(grad);
    const double m_corr = 1.0 / (1.0 - std::pow(p.beta1, step));
    const double v_corr = 1.0 / (1.0 - std::pow(p.beta2, step));
    const VecX update = (m_corr * m.array() / ((v_corr * v.array()).sqrt() + p.epsilon)).matrix();
    const int head_len = static_cast<int>(param.size()) - tail_len;
    param.segment(0, head_len) -= lr_head * update.segment(0, head_len);
    param.segment(head_len, tail_len) -= lr_tail * update.segment(head_len, tail_len);
}

} // namespace

VecX FrameParams::to_flat() const {
    VecX out(kFrameDims);
    out.segment(0, dims::expression) = delta;
    out.segment(dims::expression, dims::illumination) = gamma;
    out.segment(dims::expression + dims::illumination, 3) = omega;
    out.segment(dims::expression + dims::illumination + 3, 3) = t;
    return out;
}

FrameParams FrameParams::from_flat(const VecX& flat) {
    if (flat.size() != kFrameDims)
        throw data_error("frame parameter block must have 97 entries");
    FrameParams fp;
    fp.delta = flat.segment(0, dims::expression);
    fp.gamma = flat.segment(dims::expression, dims::illumination);
    fp.omega = flat.segment(dims::expression + dims::illumination, 3);
    fp.t = flat.segment(dims::expression + dims::illumination + 3, 3);
    return fp;
}

CodeVector VideoFitState::assemble(int f) const {
    const FrameParams& fp = frames.at(static_cast<std::size_t>(f));
    CodeVector code;
    code.alpha = identity.segment(0, dims::geometry);
    code.beta = identity.segment(dims::geometry, dims::reflectance);
    code.delta = fp.delta;
    code.gamma = fp.gamma;
    code.omega = fp.omega;
    code.t = fp.t;
    return code;
}

void adam_step(VideoFitState& state, const std::vector<VecX>& gradients,
               const std::vector<int>& identity_frames, double learning_rate,
               double pose_lr_scale, const AdamParams& params) {
    const int n_frames = state.frame_count();
    if (static_cast<int>(gradients.size()) != n_frames)
        throw data_error("adam_step needs one gradient per frame");
    for (const VecX& g : gradients)
        if (g.size() != dims::code) throw data_error("adam_step gradients must be 257-d");

    ++state.step_count;

    VecX identity_grad = VecX::Zero(kIdentityDims);
    if (identity_frames.empty()) {
        for (const VecX& g : gradients) identity_grad += g.segment(0, kIdentityDims);
        identity_grad /= static_cast<double>(n_frames);
    } else {
        for (int f : identity_frames)
            identity_grad += gradients.at(static_cast<std::size_t>(f)).segment(0, kIdentityDims);
        identity_grad /= static_cast<double>(identity_frames.size());
    }
    adam_update(state.identity, state.identity_m, state.identity_v, identity_grad,
                state.step_count, learning_rate, params);

    for (int f = 0; f < n_frames; ++f) {
        const std::size_t sf = static_cast<std::size_t>(f);
        VecX flat = state.frames[sf].to_flat();
        const VecX frame_grad = gradients[sf].segment(kIdentityDims, kFrameDims);
        adam_update_split(flat, state.frame_m[sf], state.frame_v[sf], frame_grad,
                          state.step_count, learning_rate, learning_rate * pose_lr_scale,
                          dims::rotation + dims::translation, params);
        state.frames[sf] = FrameParams::from_flat(flat);
        state.frames[sf].omega = canonicalize_axis_angle(state.frames[sf].omega);
    }
}

double default_init_z(const MorphableBasis& basis, const Camera& camera) {
    const auto [lo, hi] = basis.mean_bounding_box();
    const double model_height = std::max(hi.y() - lo.y(), 1e-9);
    return -camera.focal_length * model_height / (0.6 * camera.image_height);
}

namespace {

// Landmark-only pose refinement: Adam over (omega, t) on the mean-landmark
// squared pixel error. Geometry is frozen, so only the 48 landmark
// vertices get transformed per iteration.
void landmark_pose_prefit(const VecX& model_positions,
                          const std::array<std::uint32_t, dims::landmarks>& landmark_indices,
                          const LandmarkSet& landmarks, const Camera& camera, FrameParams& fp,
                          int iterations, double lr) {
    const int valid = landmarks.valid_count();
    if (valid == 0) return;
    const AdamParams adam;
    const double decay = iterations > 1 ? std::pow(0.02, 1.0 / (iterations - 1)) : 1.0;
    VecX m = VecX::Zero(6), v = VecX::Zero(6);
    for (int it = 1; it <= iterations; ++it) {
        const Mat3 rot = rotation_from_axis_angle(fp.omega);
        const Mat3 jl_t = so3_left_jacobian(fp.omega).transpose();
        Vec3 g_omega = Vec3::Zero(), g_t = Vec3::Zero();
        for (int j = 0; j < dims::landmarks; ++j) {
            if (!landmarks.validity[static_cast<std::size_t>(j)]) continue;
            const int k = static_cast<int>(landmark_indices[static_cast<std::size_t>(j)]);
            const Vec3 rx = rot * Vec3(model_positions.segment<3>(3 * k));
            const Vec3 p = rx + fp.t;
            if (p.z() == 0.0) continue;
            const Vec2 uv = project_point(p, camera);
            const Vec2 e = (2.0 / valid) * (uv - landmarks.points[static_cast<std::size_t>(j)]);
            const double inv_z = 1.0 / p.z();
            const double focal = camera.focal_length;
            const Vec3 du_dp(-focal * inv_z, 0.0, focal * p.x() * inv_z * inv_z);
            const Vec3 dv_dp(0.0, focal * inv_z, -focal * p.y() * inv_z * inv_z);
            const Vec3 gp = e.x() * du_dp + e.y() * dv_dp;
            g_t += gp;
            g_omega += jl_t * rx.cross(gp);
        }
        VecX pose(6), grad(6);
        pose << fp.omega, fp.t;
        grad << g_omega, g_t;
        adam_update(pose, m, v, grad, it, lr * std::pow(decay, it - 1), adam);
        fp.omega = canonicalize_axis_angle(pose.segment<3>(0));
        fp.t = pose.segment<3>(3);
    }
}

} // namespace

FitResult fit_video(const std::vector<FrameObservation>& frames, const MorphableBasis& basis,
                    const Camera& camera, const FitConfig& config, const EnergyWeights& weights) {
    if (frames.empty()) throw data_error("fit_video needs at least one frame");
    for (std::size_t f = 0; f < frames.size(); ++f)
        if (frames[f].landmarks.valid_count() == 0)
            throw data_error("frame " + std::to_string(f) +
                             " has no valid landmarks; reject it at ingestion");
    camera.validate();

    const int n_frames = static_cast<int>(frames.size());
    FitResult result;
    VideoFitState& state = result.state;
    state.frames.resize(static_cast<std::size_t>(n_frames));
    state.frame_m.assign(static_cast<std::size_t>(n_frames), VecX::Zero(kFrameDims));
    state.frame_v.assign(static_cast<std::size_t>(n_frames), VecX::Zero(kFrameDims));

    const double init_z =
        config.init_z_translation != 0.0 ? config.init_z_translation : default_init_z(basis, camera);
    const VecX init_positions =
        evaluate_geometry(basis, VecX::Zero(dims::geometry), VecX::Zero(dims::expression));
    for (auto& fp : state.frames) {
        fp.t = Vec3(0.0, 0.0, init_z);
        for (int ch = 0; ch < 3; ++ch) fp.gamma[ch * dims::sh_bands] = config.init_sh_offset;
    }
    for (int f = 0; f < n_frames; ++f)
        landmark_pose_prefit(init_positions, basis.landmark_vertex_indices,
                             frames[static_cast<std::size_t>(f)].landmarks, camera,
                             state.frames[static_cast<std::size_t>(f)], config.prefit_iterations,
                             config.prefit_learning_rate);

    Rng rng(config.seed);
    const int m_frames = std::min(config.identity_frame_count, n_frames);

    // Coarse-to-fine levels. Feasible factors only; the last level is
    // always full resolution.
    std::vector<int> factors;
    for (int f : config.pyramid_factors)
        if (f >= 1 && frames.front().image.width / f >= 8 && frames.front().image.height / f >= 8)
            factors.push_back(f);
    if (factors.empty() || factors.back() != 1) factors.push_back(1);
    const int n_levels = static_cast<int>(factors.size());

    std::vector<int> level_iters(static_cast<std::size_t>(n_levels), 0);
    if (n_levels == 1) {
        level_iters[0] = config.max_iterations;
    } else {
        const int final_iters = (config.max_iterations * 45 + 99) / 100;
        const int coarse = (config.max_iterations - final_iters) / (n_levels - 1);
        for (int l = 0; l + 1 < n_levels; ++l) level_iters[static_cast<std::size_t>(l)] = coarse;
        level_iters[static_cast<std::size_t>(n_levels - 1)] =
            config.max_iterations - coarse * (n_levels - 1);
    }

    VideoFitState best_params = state;
    double best_energy = std::numeric_limits<double>::infinity();
    result.converged = false;

    std::vector<VecX> gradients(static_cast<std::size_t>(n_frames));
    std::vector<int> identity_frames(static_cast<std::size_t>(m_frames));

    for (int level = 0; level < n_levels; ++level) {
        const int factor = factors[static_cast<std::size_t>(level)];
        const bool final_level = level == n_levels - 1;
        const int iters = level_iters[static_cast<std::size_t>(level)];
        if (iters == 0) continue;

        // level camera and frames: scale about the principal point so
        // projections and landmarks stay mutually consistent
        Camera level_camera = camera;
        std::vector<FrameObservation> level_frames;
        const std::vector<FrameObservation>* active_frames = &frames;
        if (factor > 1) {
            level_camera.image_width = camera.image_width / factor;
            level_camera.image_height = camera.image_height / factor;
            level_camera.focal_length = camera.focal_length / factor;
            level_frames.resize(frames.size());
            for (std::size_t f = 0; f < frames.size(); ++f) {
                level_frames[f].image = downsample(frames[f].image, factor);
                level_frames[f].frame_index = frames[f].frame_index;
                level_frames[f].landmarks = frames[f].landmarks;
                for (int j = 0; j < dims::landmarks; ++j) {
                    const Vec2 p = frames[f].landmarks.points[static_cast<std::size_t>(j)];
                    level_frames[f].landmarks.points[static_cast<std::size_t>(j)] =
                        (p - camera.principal_point()) / factor + level_camera.principal_point();
                }
            }
            active_frames = &level_frames;
        }

        // fresh Adam statistics per level; gradient scales change with
        // the pixel units
        state.identity_m.setZero();
        state.identity_v.setZero();
        for (auto& m : state.frame_m) m.setZero();
        for (auto& v : state.frame_v) v.setZero();
        state.step_count = 0;

        const double lr_decay =
            iters > 1 ? std::pow(config.final_lr_fraction, 1.0 / (iters - 1)) : 1.0;
        std::vector<double> energy_trace;

        for (int it = 0; it < iters; ++it) {
            std::vector<EnergyBreakdown> breakdowns(static_cast<std::size_t>(n_frames));
            double total = 0.0;
            for (int f = 0; f < n_frames; ++f) {
                const std::size_t sf = static_cast<std::size_t>(f);
                const EnergyGradient eg = energy_gradient(
                    state.assemble(f), basis, level_camera, (*active_frames)[sf], weights);
                gradients[sf] = eg.gradient;
                breakdowns[sf] = eg.breakdown;
                total += eg.breakdown.total;
            }
            result.history.push_back(breakdowns);
            energy_trace.push_back(total);
            ++result.iterations_run;

            if (final_level && total < best_energy) {
                best_energy = total;
                best_params.identity = state.identity;
                best_params.frames = state.frames;
            }

            if (final_level && it >= 10) {
                const double previous = energy_trace[static_cast<std::size_t>(it - 10)];
                if (std::abs(previous - total) / std::max(std::abs(previous), 1e-12) <
                    config.convergence_tol) {
                    result.converged = true;
                    break;
                }
            }

            // distinct random frames for the identity gradient
            std::vector<int> pool(static_cast<std::size_t>(n_frames));
            for (int f = 0; f < n_frames; ++f) pool[static_cast<std::size_t>(f)] = f;
            for (int k = 0; k < m_frames; ++k) {
                const std::size_t pick =
                    static_cast<std::size_t>(k) + static_cast<std::size_t>(rng.uniform_index(
                                                      static_cast<std::uint64_t>(n_frames - k)));
                std::swap(pool[static_cast<std::size_t>(k)], pool[pick]);
                identity_frames[static_cast<std::size_t>(k)] = pool[static_cast<std::size_t>(k)];
            }

            const double lr = config.learning_rate * std::pow(lr_decay, it);
            const double pose_scale =
                level == 0 && config.pose_warmup_iterations > 0 &&
                        it < config.pose_warmup_iterations
                    ? static_cast<double>(it) / config.pose_warmup_iterations
                    : 1.0;
            adam_step(state, gradients, identity_frames, lr, pose_scale);
        }
    }

    // hand back the best full-resolution parameters seen, with the final
    // moments
    best_params.identity_m = state.identity_m;
    best_params.identity_v = state.identity_v;
    best_params.frame_m = state.frame_m;
    best_params.frame_v = state.frame_v;
    best_params.step_count = state.step_count;
    result.state = std::move(best_params);
    result.best_energy = best_energy;
    return result;
}

std::vector<VecX> export_features(const VideoFitState& state) {
    std::vector<VecX> out;
    out.reserve(state.frames.size());
    for (int f = 0; f < state.frame_count(); ++f) out.push_back(state.assemble(f).to_flat());
    return out;
}

ConsistencyReport identity_consistency_report(const std::vector<CodeVector>& fits) {
    if (fits.size() < 2)
        throw data_error("identity consistency report needs at least two fits");
    const auto n = static_cast<double>(fits.size());
    ConsistencyReport report;
    for (int block = 0; block < 2; ++block) {
        const int len = block == 0 ? dims::geometry : dims::reflectance;
        VecX mean = VecX::Zero(len);
        for (const auto& fit : fits) mean += block == 0 ? fit.alpha : fit.beta;
        mean /= n;
        VecX var = VecX::Zero(len);
        for (const auto& fit : fits) {
            const VecX diff = (block == 0 ? fit.alpha : fit.beta) - mean;
            var += diff.cwiseProduct(diff);
        }
        var /= (n - 1.0);
        if (block == 0) {
            report.alpha_std = var.cwiseSqrt();
            report.mean_alpha_std = report.alpha_std.mean();
        } else {
            report.beta_std = var.cwiseSqrt();
            report.mean_beta_std = report.beta_std.mean();
        }
    }
    return report;
}

} // namespace facefit
