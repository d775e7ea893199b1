#include "facefit/sh.hpp"

#include <cmath>
#include <string>

namespace facefit {

namespace {
// 1/(2 sqrt(pi)), sqrt(3/(4 pi)), sqrt(15/(4 pi)), sqrt(5/(16 pi)), sqrt(15/(16 pi))
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.48860251190291992;
constexpr double kC2 = 1.09254843059207907;
constexpr double kC3 = 0.31539156525252005;
constexpr double kC4 = 0.54627421529603953;
} // namespace

std::array<double, dims::sh_bands> sh_basis_unchecked(const Vec3& n) {
    const double x = n.x(), y = n.y(), z = n.z();
    return {
        kC0,
        kC1 * y,
        kC1 * z,
        kC1 * x,
        kC2 * x * y,
        kC2 * y * z,
        kC3 * (3.0 * z * z - 1.0),
        kC2 * x * z,
        kC4 * (x * x - y * y),
    };
}

std::array<double, dims::sh_bands> sh_basis(const Vec3& n) {
    const double norm = n.norm();
    if (std::abs(norm - 1.0) > 1e-6)
        throw data_error("sh_basis requires a unit normal, got norm " + std::to_string(norm));
    return sh_basis_unchecked(n);
}

std::array<Vec3, dims::sh_bands> sh_basis_gradient(const Vec3& n) {
    const double x = n.x(), y = n.y(), z = n.z();
    return {
        Vec3(0.0, 0.0, 0.0),
        Vec3(0.0, kC1, 0.0),
        Vec3(0.0, 0.0, kC1),
        Vec3(kC1, 0.0, 0.0),
        Vec3(kC2 * y, kC2 * x, 0.0),
        Vec3(0.0, kC2 * z, kC2 * y),
        Vec3(0.0, 0.0, 6.0 * kC3 * z),
        Vec3(kC2 * z, 0.0, kC2 * x),
        Vec3(2.0 * kC4 * x, -2.0 * kC4 * y, 0.0),
    };
}

} // namespace facefit
