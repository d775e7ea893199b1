#include "facefit/basis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "facefit/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "FMB1 i/o assumes a little-endian host");

namespace facefit {

namespace {

constexpr char kMagic[8] = {'F', 'A', 'C', 'E', 'M', 'B', '0', '1'};
constexpr double kPi = 3.1415926535897932384626433832795;

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

void write_f32_vec(std::ostream& os, const VecX& v) {
    std::vector<float> buf(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

VecX read_f32_vec(std::istream& is, Eigen::Index n) {
    std::vector<float> buf(static_cast<std::size_t>(n));
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    VecX v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = buf[static_cast<std::size_t>(i)];
    return v;
}

void write_f32_mat(std::ostream& os, const MatX& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f32_vec(os, m.col(c));
}

MatX read_f32_mat(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    MatX m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) m.col(c) = read_f32_vec(is, rows);
    return m;
}

// Smooth random displacement field over the mesh: a few random
// low-frequency sinusoids of position per axis. `axis_weights` shapes how
// much of the field lives in each axis.
VecX smooth_field(Rng& rng, const VecX& positions, int n_vertices, double freq_max,
                  const Vec3& axis_weights = Vec3::Ones()) {
    const int waves = 3;
    VecX field = VecX::Zero(3 * n_vertices);
    for (int axis = 0; axis < 3; ++axis) {
        for (int w = 0; w < waves; ++w) {
            const Vec3 k(rng.uniform(-freq_max, freq_max), rng.uniform(-freq_max, freq_max),
                         rng.uniform(-freq_max, freq_max));
            const double phase = rng.uniform(0.0, 2.0 * kPi);
            const double amp = rng.normal() * axis_weights[axis];
            for (int i = 0; i < n_vertices; ++i) {
                const Vec3 p(positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]);
                field[3 * i + axis] += amp * std::sin(k.dot(p) + phase);
            }
        }
    }
    return field;
}

// Orthonormal basis of the 6 rigid-motion displacement fields (3
// translations, 3 infinitesimal rotations about the centroid) evaluated on
// the mesh. Shape components keep clear of this subspace, the way
// components built from rigidly aligned scans do; otherwise pose and shape
// trade off freely during fitting.
MatX rigid_motion_fields(const VecX& positions, int n_vertices) {
    Vec3 centroid = Vec3::Zero();
    for (int i = 0; i < n_vertices; ++i) centroid += Vec3(positions.segment<3>(3 * i));
    centroid /= n_vertices;
    MatX fields(3 * n_vertices, 6);
    for (int i = 0; i < n_vertices; ++i) {
        const Vec3 r = Vec3(positions.segment<3>(3 * i)) - centroid;
        for (int a = 0; a < 3; ++a) {
            Vec3 axis = Vec3::Zero();
            axis[a] = 1.0;
            fields.block<3, 1>(3 * i, a) = axis;
            fields.block<3, 1>(3 * i, 3 + a) = axis.cross(r);
        }
    }
    for (int c = 0; c < 6; ++c) {
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < c; ++j)
                fields.col(c) -= fields.col(j).dot(fields.col(c)) * fields.col(j);
        fields.col(c).normalize();
    }
    return fields;
}

// Draw smooth fields and orthonormalize them (modified Gram-Schmidt with
// one reorthogonalization pass) against each other and against the
// `excluded` subspace. Redraws rank-deficient candidates.
MatX orthonormal_smooth_components(Rng& rng, const VecX& positions, int n_vertices, int count,
                                   const Vec3& axis_weights, const MatX& excluded) {
    MatX comps(3 * n_vertices, count);
    for (int c = 0; c < count; ++c) {
        bool accepted = false;
        for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
            VecX cand = smooth_field(rng, positions, n_vertices, 2.5 + 0.5 * attempt, axis_weights);
            const double orig = cand.norm();
            if (orig < 1e-12) continue;
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index j = 0; j < excluded.cols(); ++j)
                    cand -= excluded.col(j).dot(cand) * excluded.col(j);
                for (int j = 0; j < c; ++j) cand -= comps.col(j).dot(cand) * comps.col(j);
            }
            if (cand.norm() < 1e-6 * orig) continue;
            comps.col(c) = cand / cand.norm();
            accepted = true;
        }
        if (!accepted)
            throw data_error("synthetic basis: could not orthonormalize " + std::to_string(count) +
                             " components over " + std::to_string(n_vertices) + " vertices");
    }
    return comps;
}

} // namespace

void MorphableBasis::validate() const {
    if (n_vertices <= 0) throw data_error("basis has no vertices");
    const Eigen::Index n3 = 3 * static_cast<Eigen::Index>(n_vertices);
    if (mean_geometry.size() != n3 || mean_expression.size() != n3 ||
        mean_reflectance.size() != n3)
        throw data_error("basis mean arrays do not match vertex count");
    if (geometry_components.rows() != n3 || geometry_components.cols() != dims::geometry ||
        expression_components.rows() != n3 || expression_components.cols() != dims::expression ||
        reflectance_components.rows() != n3 || reflectance_components.cols() != dims::reflectance)
        throw data_error("basis component matrices have wrong shape");
    if (geometry_stds.size() != dims::geometry || expression_stds.size() != dims::expression ||
        reflectance_stds.size() != dims::reflectance)
        throw data_error("basis std arrays have wrong length");
    if ((geometry_stds.array() <= 0.0).any() || (expression_stds.array() <= 0.0).any() ||
        (reflectance_stds.array() <= 0.0).any())
        throw data_error("basis stds must be strictly positive");
    for (const auto& tri : triangles)
        for (auto idx : tri)
            if (idx >= static_cast<std::uint32_t>(n_vertices))
                throw data_error("triangle index out of range");
    for (auto idx : landmark_vertex_indices)
        if (idx >= static_cast<std::uint32_t>(n_vertices))
            throw data_error("landmark vertex index out of range");
}

std::pair<Vec3, Vec3> MorphableBasis::mean_bounding_box() const {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int i = 0; i < n_vertices; ++i) {
        for (int a = 0; a < 3; ++a) {
            const double v = mean_geometry[3 * i + a] + mean_expression[3 * i + a];
            lo[a] = std::min(lo[a], v);
            hi[a] = std::max(hi[a], v);
        }
    }
    return {lo, hi};
}

MorphableBasis generate_synthetic_basis(std::uint64_t seed, int n_vertices,
                                        const SyntheticBasisConfig& config) {
    if (n_vertices < dims::landmarks)
        throw data_error("synthetic basis needs at least 48 vertices to carry 48 landmarks, got " +
                         std::to_string(n_vertices));

    Rng rng(seed);
    MorphableBasis basis;
    basis.n_vertices = n_vertices;

    // Front-facing ellipsoid patch, built row by row. Row counts are
    // balanced so the total vertex count is hit exactly.
    int rows = std::max(2, static_cast<int>(std::lround(std::sqrt(n_vertices / 1.6))));
    rows = std::min(rows, n_vertices / 2);
    const int base_cols = n_vertices / rows;
    const int extra = n_vertices % rows;

    std::vector<int> row_start(static_cast<std::size_t>(rows) + 1, 0);
    std::vector<int> row_count(static_cast<std::size_t>(rows), 0);
    for (int r = 0; r < rows; ++r) {
        row_count[static_cast<std::size_t>(r)] = base_cols + (r < extra ? 1 : 0);
        row_start[static_cast<std::size_t>(r) + 1] =
            row_start[static_cast<std::size_t>(r)] + row_count[static_cast<std::size_t>(r)];
    }

    const double theta_lo = 0.30 * kPi, theta_hi = 0.72 * kPi;
    const double phi_lo = -0.28 * kPi, phi_hi = 0.28 * kPi;
    // Radial bumps (nose ridge, brows, chin) give the patch depth
    // structure a featureless ellipsoid lacks; without it pose is nearly
    // unobservable from a single view. Slopes stay gentle so moderate head
    // tilt does not self-occlude, which the normal-direction visibility
    // test cannot represent. The layout is mildly asymmetric; an exactly
    // mirror-symmetric mean face leaves yaw with twin optima.
    struct Bump {
        double u, v, su, sv, amplitude;
    };
    const std::array<Bump, 5> bumps = {{{0.52, 0.55, 0.10, 0.18, 0.14},
                                        {0.34, 0.29, 0.10, 0.08, 0.075},
                                        {0.66, 0.31, 0.11, 0.08, 0.05},
                                        {0.50, 0.85, 0.10, 0.08, 0.07},
                                        {0.28, 0.62, 0.09, 0.10, 0.06}}};
    basis.mean_geometry.resize(3 * n_vertices);
    for (int r = 0; r < rows; ++r) {
        const double v = rows > 1 ? static_cast<double>(r) / (rows - 1) : 0.5;
        const double theta = theta_lo + v * (theta_hi - theta_lo);
        const int cols = row_count[static_cast<std::size_t>(r)];
        for (int c = 0; c < cols; ++c) {
            const double u = cols > 1 ? static_cast<double>(c) / (cols - 1) : 0.5;
            const double phi = phi_lo + u * (phi_hi - phi_lo);
            double radial = 1.0;
            for (const Bump& bump : bumps) {
                const double du = (u - bump.u) / bump.su;
                const double dv = (v - bump.v) / bump.sv;
                radial += bump.amplitude * std::exp(-0.5 * (du * du + dv * dv));
            }
            const int i = row_start[static_cast<std::size_t>(r)] + c;
            basis.mean_geometry[3 * i + 0] =
                radial * config.head_width * std::sin(theta) * std::sin(phi);
            basis.mean_geometry[3 * i + 1] = radial * config.head_height * std::cos(theta);
            basis.mean_geometry[3 * i + 2] =
                radial * config.head_depth * std::sin(theta) * std::cos(phi);
        }
    }

    // Zip triangulation between consecutive rows; winding is CCW seen
    // from +z so normals point out of the face.
    for (int r = 0; r + 1 < rows; ++r) {
        const int m = row_count[static_cast<std::size_t>(r)];
        const int n = row_count[static_cast<std::size_t>(r) + 1];
        const int top = row_start[static_cast<std::size_t>(r)];
        const int bot = row_start[static_cast<std::size_t>(r) + 1];
        int a = 0, b = 0;
        while (a + 1 < m || b + 1 < n) {
            bool advance_top;
            if (a + 1 >= m) advance_top = false;
            else if (b + 1 >= n) advance_top = true;
            else advance_top = (a + 1) * static_cast<double>(n - 1) <= (b + 1) * static_cast<double>(m - 1);
            if (advance_top) {
                basis.triangles.push_back({static_cast<std::uint32_t>(top + a),
                                           static_cast<std::uint32_t>(bot + b),
                                           static_cast<std::uint32_t>(top + a + 1)});
                ++a;
            } else {
                basis.triangles.push_back({static_cast<std::uint32_t>(top + a),
                                           static_cast<std::uint32_t>(bot + b),
                                           static_cast<std::uint32_t>(bot + b + 1)});
                ++b;
            }
        }
    }

    // Landmarks spread evenly over the vertex lattice.
    for (int k = 0; k < dims::landmarks; ++k)
        basis.landmark_vertex_indices[static_cast<std::size_t>(k)] =
            static_cast<std::uint32_t>((2 * k + 1) * static_cast<std::int64_t>(n_vertices) / (2 * dims::landmarks));

    // Small explicit expression mean; kept nonzero so the A_exp term is
    // exercised everywhere downstream.
    basis.mean_expression = 0.01 * smooth_field(rng, basis.mean_geometry, n_vertices, 2.0);

    // Orthonormalize geometry and expression components as one joint set,
    // then split: the two blocks are mutually orthogonal in R^{3N}. Depth
    // displacements are down-weighted; a single view observes them weakly.
    const Vec3 axis_weights(1.0, 1.0, config.depth_axis_weight);
    const MatX rigid = rigid_motion_fields(basis.mean_geometry, n_vertices);
    const MatX joint =
        orthonormal_smooth_components(rng, basis.mean_geometry, n_vertices,
                                      dims::geometry + dims::expression, axis_weights, rigid);
    basis.geometry_components = joint.leftCols(dims::geometry);
    basis.expression_components = joint.rightCols(dims::expression);
    basis.reflectance_components = orthonormal_smooth_components(
        rng, basis.mean_geometry, n_vertices, dims::reflectance, Vec3::Ones(), MatX(3 * n_vertices, 0));

    const double scale = std::sqrt(static_cast<double>(n_vertices));
    basis.geometry_stds.resize(dims::geometry);
    basis.expression_stds.resize(dims::expression);
    basis.reflectance_stds.resize(dims::reflectance);
    for (int p = 0; p < dims::geometry; ++p)
        basis.geometry_stds[p] = config.geometry_std0 * scale * std::pow(config.std_decay, p);
    for (int p = 0; p < dims::expression; ++p)
        basis.expression_stds[p] = config.expression_std0 * scale * std::pow(config.std_decay, p);
    for (int p = 0; p < dims::reflectance; ++p)
        basis.reflectance_stds[p] = config.reflectance_std0 * scale * std::pow(config.std_decay, p);

    // Skin-toned mean reflectance: broad tone variation plus a medium-
    // frequency pattern. The pattern is what lets the photometric term
    // anchor lateral alignment and yaw; a near-flat albedo leaves pose
    // poorly constrained.
    const Vec3 base_tone(0.62, 0.47, 0.40);
    VecX tone_field = smooth_field(rng, basis.mean_geometry, n_vertices, 2.0);
    const double tone_max = tone_field.cwiseAbs().maxCoeff();
    if (tone_max > 0.0) tone_field *= 0.12 / tone_max;
    VecX detail_field = smooth_field(rng, basis.mean_geometry, n_vertices, 14.0);
    const double detail_max = detail_field.cwiseAbs().maxCoeff();
    if (detail_max > 0.0) detail_field *= 0.06 / detail_max;
    basis.mean_reflectance.resize(3 * n_vertices);
    for (int i = 0; i < n_vertices; ++i)
        for (int a = 0; a < 3; ++a)
            basis.mean_reflectance[3 * i + a] = std::clamp(
                base_tone[a] + tone_field[3 * i + a] + detail_field[3 * i + a], 0.2, 0.8);

    basis.validate();
    return basis;
}

void save_basis(const MorphableBasis& basis, const std::string& path) {
    basis.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("cannot open basis file for writing: " + path);
    os.write(kMagic, 8);
    write_u32(os, static_cast<std::uint32_t>(basis.n_vertices));
    write_u32(os, static_cast<std::uint32_t>(basis.triangles.size()));
    write_u32(os, dims::geometry);
    write_u32(os, dims::expression);
    write_u32(os, dims::reflectance);
    write_u32(os, dims::landmarks);
    write_f32_vec(os, basis.mean_geometry);
    write_f32_vec(os, basis.mean_expression);
    write_f32_vec(os, basis.geometry_stds);
    write_f32_mat(os, basis.geometry_components);
    write_f32_vec(os, basis.expression_stds);
    write_f32_mat(os, basis.expression_components);
    write_f32_vec(os, basis.mean_reflectance);
    write_f32_vec(os, basis.reflectance_stds);
    write_f32_mat(os, basis.reflectance_components);
    for (const auto& tri : basis.triangles)
        for (auto idx : tri) write_u32(os, idx);
    for (auto idx : basis.landmark_vertex_indices) write_u32(os, idx);
    if (!os) throw data_error("failed writing basis file: " + path);
}

MorphableBasis load_basis(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error("cannot open basis file: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw data_error("not an FMB1 basis file: " + path);
    MorphableBasis basis;
    basis.n_vertices = static_cast<int>(read_u32(is));
    const std::uint32_t n_tris = read_u32(is);
    const std::uint32_t n_id = read_u32(is);
    const std::uint32_t n_exp = read_u32(is);
    const std::uint32_t n_tex = read_u32(is);
    const std::uint32_t n_lm = read_u32(is);
    if (n_id != dims::geometry || n_exp != dims::expression || n_tex != dims::reflectance ||
        n_lm != dims::landmarks)
        throw data_error("basis file has unsupported component counts: " + path);
    const Eigen::Index n3 = 3 * static_cast<Eigen::Index>(basis.n_vertices);
    basis.mean_geometry = read_f32_vec(is, n3);
    basis.mean_expression = read_f32_vec(is, n3);
    basis.geometry_stds = read_f32_vec(is, dims::geometry);
    basis.geometry_components = read_f32_mat(is, n3, dims::geometry);
    basis.expression_stds = read_f32_vec(is, dims::expression);
    basis.expression_components = read_f32_mat(is, n3, dims::expression);
    basis.mean_reflectance = read_f32_vec(is, n3);
    basis.reflectance_stds = read_f32_vec(is, dims::reflectance);
    basis.reflectance_components = read_f32_mat(is, n3, dims::reflectance);
    basis.triangles.resize(n_tris);
    for (auto& tri : basis.triangles)
        for (auto& idx : tri) idx = read_u32(is);
    for (auto& idx : basis.landmark_vertex_indices) idx = read_u32(is);
    if (!is) throw data_error("truncated basis file: " + path);
    basis.validate();
    return basis;
}

} // namespace facefit
