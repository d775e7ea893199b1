#include "facefit/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace facefit {

const std::array<int, dims::landmarks> kLandmarkSubset68 = {
    // chin
    6, 7, 8, 9, 10,
    // eyebrows
    17, 18, 19, 20, 21, 22, 23, 24, 25, 26,
    // nose bridge and bottom
    27, 28, 29, 30, 31, 32, 33, 34, 35,
    // eye corners
    36, 39, 42, 45,
    // mouth
    48, 49, 50, 51, 52, 53, 54, 55, 56, 57, 58, 59, 60, 61, 62, 63, 64, 65, 66, 67};

CropOutput crop_face(const Image& image, const std::vector<Vec2>& points,
                     const std::vector<bool>& validity, const CropConfig& config) {
    if (points.size() != validity.size())
        throw data_error("crop_face: points/validity size mismatch");
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    int valid = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!validity[i]) continue;
        x0 = std::min(x0, points[i].x());
        x1 = std::max(x1, points[i].x());
        y0 = std::min(y0, points[i].y());
        y1 = std::max(y1, points[i].y());
        ++valid;
    }
    if (valid < 2) throw data_error("crop_face needs at least two valid landmarks");
    const double w = x1 - x0, h = y1 - y0;
    if (w < 1e-9 || h < 1e-9) throw data_error("crop_face: degenerate (zero-area) landmark box");

    // expand 10% per side, clamp, square-pad to the longer side
    x0 -= config.expansion * w;
    x1 += config.expansion * w;
    y0 -= config.expansion * h;
    y1 += config.expansion * h;
    x0 = std::max(x0, 0.0);
    y0 = std::max(y0, 0.0);
    x1 = std::min(x1, static_cast<double>(image.width - 1));
    y1 = std::min(y1, static_cast<double>(image.height - 1));
    const double side = std::max(x1 - x0, y1 - y0);
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    x0 = cx - 0.5 * side;
    x1 = cx + 0.5 * side;
    y0 = cy - 0.5 * side;
    y1 = cy + 0.5 * side;

    CropOutput out;
    out.rect = {x0, y0, x1, y1};
    out.scale = config.output_size / side;
    out.image = Image(config.output_size, config.output_size, 0.0);
    for (int oy = 0; oy < config.output_size; ++oy) {
        for (int ox = 0; ox < config.output_size; ++ox) {
            const Vec2 src(x0 + (ox + 0.5) / out.scale - 0.5, y0 + (oy + 0.5) / out.scale - 0.5);
            const BilinearSample s = bilinear_sample(image, src);
            if (s.valid) out.image.set_pixel(ox, oy, s.color);
        }
    }
    out.remapped.resize(points.size());
    out.validity = validity;
    for (std::size_t i = 0; i < points.size(); ++i)
        out.remapped[i] = Vec2((points[i].x() - x0 + 0.5) * out.scale - 0.5,
                               (points[i].y() - y0 + 0.5) * out.scale - 0.5);
    return out;
}

LandmarkSet select_landmark_subset(const std::vector<Vec2>& points_68,
                                   const std::vector<bool>& validity_68) {
    if (points_68.size() != 68 || validity_68.size() != 68)
        throw data_error("landmark subset selection expects 68 input points, got " +
                         std::to_string(points_68.size()));
    LandmarkSet out;
    for (int j = 0; j < dims::landmarks; ++j) {
        const int src = kLandmarkSubset68[static_cast<std::size_t>(j)];
        out.points[static_cast<std::size_t>(j)] = points_68[static_cast<std::size_t>(src)];
        out.validity[static_cast<std::size_t>(j)] = validity_68[static_cast<std::size_t>(src)];
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

} // namespace

std::vector<LandmarkRow> load_landmark_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw data_error("cannot open landmark file: " + path);
    std::vector<LandmarkRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 136)
            throw data_error("landmark file " + path + " line " + std::to_string(line_no) +
                             ": expected 136 columns (68 x,y pairs), got " +
                             std::to_string(fields.size()));
        LandmarkRow row;
        row.points.resize(68);
        row.validity.resize(68);
        for (int j = 0; j < 68; ++j) {
            try {
                const double x = std::stod(fields[static_cast<std::size_t>(2 * j)]);
                const double y = std::stod(fields[static_cast<std::size_t>(2 * j + 1)]);
                row.points[static_cast<std::size_t>(j)] = Vec2(x, y);
                row.validity[static_cast<std::size_t>(j)] = !(x == -1.0 && y == -1.0);
            } catch (const std::exception&) {
                throw data_error("landmark file " + path + " line " + std::to_string(line_no) +
                                 ": malformed number");
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void save_landmark_csv(const std::vector<LandmarkRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw data_error("cannot open landmark file for writing: " + path);
    char buf[64];
    for (const auto& row : rows) {
        if (row.points.size() != 68) throw data_error("landmark rows must carry 68 points");
        for (int j = 0; j < 68; ++j) {
            if (j) os << ',';
            if (row.validity[static_cast<std::size_t>(j)]) {
                std::snprintf(buf, sizeof buf, "%.9g,%.9g",
                              row.points[static_cast<std::size_t>(j)].x(),
                              row.points[static_cast<std::size_t>(j)].y());
                os << buf;
            } else {
                os << "-1,-1";
            }
        }
        os << '\n';
    }
    if (!os) throw data_error("failed writing landmark file: " + path);
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw data_error("cannot open manifest: " + path);
    std::string line;
    if (!std::getline(is, line)) throw data_error("manifest is empty: " + path);
    const auto header = split_csv_line(line);
    const std::vector<std::string> expected = {"video_id", "subject_id", "label", "frames_glob",
                                               "landmarks_path"};
    if (header.size() != expected.size() ||
        !std::equal(header.begin(), header.end(), expected.begin()))
        throw data_error("manifest header must be video_id,subject_id,label,frames_glob,"
                         "landmarks_path: " +
                         path);
    std::vector<ManifestEntry> entries;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw data_error("manifest " + path + " line " + std::to_string(line_no) +
                             ": expected 5 columns");
        ManifestEntry e;
        e.video_id = fields[0];
        e.subject_id = fields[1];
        if (fields[2].empty()) e.label = -1;
        else if (fields[2] == "0") e.label = 0;
        else if (fields[2] == "1") e.label = 1;
        else
            throw data_error("manifest " + path + " line " + std::to_string(line_no) +
                             ": label must be 0, 1 or empty");
        e.frames_glob = fields[3];
        e.landmarks_path = fields[4];
        entries.push_back(std::move(e));
    }
    return entries;
}

void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw data_error("cannot open manifest for writing: " + path);
    os << "video_id,subject_id,label,frames_glob,landmarks_path\n";
    for (const auto& e : entries) {
        os << e.video_id << ',' << e.subject_id << ',';
        if (e.label >= 0) os << e.label;
        os << ',' << e.frames_glob << ',' << e.landmarks_path << '\n';
    }
    if (!os) throw data_error("failed writing manifest: " + path);
}

namespace {

bool glob_match(const std::string& pattern, const std::string& name) {
    // iterative '*'/'?' matcher
    std::size_t p = 0, n = 0, star = std::string::npos, star_n = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            star_n = n;
        } else if (star != std::string::npos) {
            p = star + 1;
            n = ++star_n;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

} // namespace

std::vector<std::string> expand_glob(const std::string& pattern, const std::string& base_dir) {
    fs::path pat(pattern);
    if (pat.is_relative() && !base_dir.empty()) pat = fs::path(base_dir) / pat;
    const fs::path dir = pat.parent_path().empty() ? fs::path(".") : pat.parent_path();
    const std::string name_pattern = pat.filename().string();
    if (!fs::is_directory(dir)) throw data_error("glob directory does not exist: " + dir.string());
    std::vector<std::string> matches;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (glob_match(name_pattern, name)) matches.push_back(entry.path().string());
    }
    std::sort(matches.begin(), matches.end());
    return matches;
}

VideoIngest load_video(const ManifestEntry& entry, const std::string& base_dir, bool crop,
                       const CropConfig& config) {
    fs::path lm_path(entry.landmarks_path);
    if (lm_path.is_relative() && !base_dir.empty()) lm_path = fs::path(base_dir) / lm_path;
    const auto landmark_rows = load_landmark_csv(lm_path.string());
    const auto frame_paths = expand_glob(entry.frames_glob, base_dir);
    if (frame_paths.empty())
        throw data_error("video " + entry.video_id + ": no frames match " + entry.frames_glob);
    if (frame_paths.size() != landmark_rows.size())
        throw data_error("video " + entry.video_id + ": " + std::to_string(frame_paths.size()) +
                         " frames but " + std::to_string(landmark_rows.size()) +
                         " landmark rows");

    VideoIngest out;
    for (std::size_t f = 0; f < frame_paths.size(); ++f) {
        const Image image = load_image(frame_paths[f]);
        const LandmarkRow& row = landmark_rows[f];
        FrameObservation obs;
        obs.frame_index = static_cast<int>(f);
        try {
            if (crop) {
                CropOutput cropped = crop_face(image, row.points, row.validity, config);
                obs.image = std::move(cropped.image);
                obs.crop_rect = cropped.rect;
                obs.landmarks = select_landmark_subset(cropped.remapped, cropped.validity);
            } else {
                obs.image = image;
                obs.crop_rect = {0.0, 0.0, static_cast<double>(image.width - 1),
                                 static_cast<double>(image.height - 1)};
                obs.landmarks = select_landmark_subset(row.points, row.validity);
            }
            if (obs.landmarks.valid_count() == 0) throw data_error("no valid subset landmarks");
        } catch (const data_error&) {
            out.rejected_frames.push_back(static_cast<int>(f));
            continue;
        }
        out.frames.push_back(std::move(obs));
    }
    return out;
}

} // namespace facefit
