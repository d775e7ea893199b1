#pragma once

#include <vector>

#include "facefit/basis.hpp"
#include "facefit/camera.hpp"
#include "facefit/frame.hpp"
#include "facefit/mesh.hpp"
#include "facefit/shading.hpp"

namespace facefit {

struct EnergyWeights {
    double w_land = 0.0019;
    double w_vert = 1.92;
    double w_alpha = 2.9e-5;
    double w_beta = 4.93e-8;
    double w_delta = 2.32e-5;
};

struct EnergyBreakdown {
    double e_land = 0.0;
    double e_vert = 0.0;
    double e_reg = 0.0;
    double total = 0.0;
    int visible_count = 0;   // |V| entering the photometric mean
    int valid_landmarks = 0; // |F_valid|
};

/// Mean squared pixel distance between projected landmark vertices and
/// annotations, over valid landmarks. Throws when no landmark is valid.
double landmark_loss(const ProjectedVertices& projected,
                     const std::array<std::uint32_t, dims::landmarks>& landmark_indices,
                     const LandmarkSet& landmarks);

struct PhotometricResult {
    double loss = 0.0;
    int used_count = 0;              // |V| after dropping invalid bilinear cells
    std::vector<double> residual_norms; // per vertex; 0 for unused vertices
};

/// L2,1 photometric term: mean over used vertices of the unsquared L2 norm
/// of the RGB residual between shaded vertex color and the bilinearly
/// sampled image. Vertices whose 2x2 sampling neighborhood exits the image
/// are dropped from V. Throws numerical_error when V is empty.
PhotometricResult photometric_loss(const VecX& shaded, const ProjectedVertices& projected,
                                   const std::vector<bool>& visible, const Image& image);

/// Tikhonov term: w_alpha sum a^2 + w_beta sum b^2 + w_delta sum d^2.
double regularization(const VecX& alpha, const VecX& beta, const VecX& delta,
                      const EnergyWeights& weights);

/// Everything the forward image formation pass produces for one frame,
/// cached so the analytic gradient can reuse it.
struct ForwardCache {
    double focal_length = 0.0;
    VecX positions;    // model space, 3N
    VecX reflectance;  // 3N
    VertexNormals vertex_normals;
    Mat3 rotation;
    VecX cam_positions; // 3N
    ProjectedVertices projected;
    VecX rotated_normals; // 3N
    VecX shade;  // per-channel SH response (before reflectance), 3N
    VecX colors; // shaded colors, 3N
    std::vector<bool> facing;    // camera-facing normal test
    std::vector<bool> used;      // photometric membership |V|
    std::vector<BilinearSampleGrad> samples;
    std::vector<Vec3> residuals;
    std::vector<double> residual_norms;
    int used_count = 0;
};

ForwardCache run_forward(const CodeVector& code, const MorphableBasis& basis,
                         const Camera& camera, const Image& image);

/// Runs the full forward model (evaluate -> transform -> project -> shade
/// -> visibility) and combines terms:
///   total = w_land E_land + w_vert E_vert + E_reg.
/// A term whose weight is zero is skipped rather than allowed to throw on
/// degenerate input.
EnergyBreakdown total_energy(const CodeVector& code, const MorphableBasis& basis,
                             const Camera& camera, const FrameObservation& frame,
                             const EnergyWeights& weights);

/// total_energy on top of an existing forward cache.
EnergyBreakdown energy_from_cache(const ForwardCache& cache, const CodeVector& code,
                                  const MorphableBasis& basis, const FrameObservation& frame,
                                  const EnergyWeights& weights);

} // namespace facefit
