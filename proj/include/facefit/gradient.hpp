#pragma once

#include "facefit/energy.hpp"

namespace facefit {

struct EnergyGradient {
    VecX gradient = VecX::Zero(dims::code); // flat 257, block order of CodeVector
    EnergyBreakdown breakdown;
};

/// Analytic gradient of the total energy with respect to all 257
/// parameters. The chain runs through geometry/reflectance evaluation,
/// 1-ring vertex normals, the rotation (compact SO(3) closed form),
/// perspective projection, spherical-harmonics shading and the bilinear
/// image sample. The visibility mask and the bilinear cell choice are
/// treated as locally constant; gradients flow through the bilinear
/// weights and the sampled uv position.
///
/// Throws numerical_error naming the offending block if any gradient
/// entry is not finite.
EnergyGradient energy_gradient(const CodeVector& code, const MorphableBasis& basis,
                               const Camera& camera, const FrameObservation& frame,
                               const EnergyWeights& weights);

/// Gradient on top of an existing forward cache for `code`.
EnergyGradient energy_gradient_from_cache(const ForwardCache& cache, const CodeVector& code,
                                          const MorphableBasis& basis,
                                          const FrameObservation& frame,
                                          const EnergyWeights& weights);

} // namespace facefit
