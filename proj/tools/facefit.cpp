// facefit: analysis-by-synthesis face reconstruction and deception
// sequence classification.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "facefit/basis.hpp"
#include "facefit/energy.hpp"
#include "facefit/features_io.hpp"
#include "facefit/fitting.hpp"
#include "facefit/gradcheck.hpp"
#include "facefit/ingest.hpp"
#include "facefit/lopo.hpp"
#include "facefit/render.hpp"
#include "facefit/rnn.hpp"
#include "facefit/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

facefit::Camera make_camera(int width, int height, double focal) {
    facefit::Camera cam = facefit::Camera::with_default_focal(width, height);
    if (focal > 0.0) cam.focal_length = focal;
    return cam;
}

int cmd_gen_basis(const std::string& out, int vertices, std::uint64_t seed) {
    const facefit::MorphableBasis basis = facefit::generate_synthetic_basis(seed, vertices);
    facefit::save_basis(basis, out);
    std::cout << "wrote basis: " << out << " (" << basis.n_vertices << " vertices, "
              << basis.triangles.size() << " triangles)\n";
    return kExitOk;
}

int cmd_gen_synthetic(const std::string& basis_path, const std::string& out_dir, int frames,
                      std::uint64_t seed, int image_size, double focal, double noise,
                      const std::string& video_id, const std::string& subject_id, int label) {
    const facefit::MorphableBasis basis = facefit::load_basis(basis_path);
    const facefit::Camera camera = make_camera(image_size, image_size, focal);
    facefit::SyntheticVideoConfig config;
    config.pixel_noise = noise;
    const facefit::SyntheticVideo video =
        facefit::generate_synthetic_video(basis, camera, seed, frames, config);

    fs::create_directories(fs::path(out_dir) / "frames");
    std::vector<facefit::LandmarkRow> landmark_rows;
    for (std::size_t f = 0; f < video.frames.size(); ++f) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%04zu.ppm", video_id.c_str(), f);
        facefit::save_ppm(video.frames[f].image, (fs::path(out_dir) / "frames" / name).string());

        // 68-point row: subset positions carry the annotations, the rest
        // stay invalid so the selection path sees a normal file
        facefit::LandmarkRow row;
        row.points.assign(68, facefit::Vec2(-1.0, -1.0));
        row.validity.assign(68, false);
        for (int j = 0; j < facefit::dims::landmarks; ++j) {
            const int src = facefit::kLandmarkSubset68[static_cast<std::size_t>(j)];
            row.points[static_cast<std::size_t>(src)] =
                video.frames[f].landmarks.points[static_cast<std::size_t>(j)];
            row.validity[static_cast<std::size_t>(src)] =
                video.frames[f].landmarks.validity[static_cast<std::size_t>(j)];
        }
        landmark_rows.push_back(std::move(row));
    }
    const std::string lm_name = video_id + "_landmarks.csv";
    facefit::save_landmark_csv(landmark_rows, (fs::path(out_dir) / lm_name).string());

    std::vector<facefit::VecX> gt;
    for (const auto& code : video.ground_truth) gt.push_back(code.to_flat());
    facefit::write_features(gt, (fs::path(out_dir) / (video_id + "_gt.csv")).string());

    facefit::ManifestEntry entry;
    entry.video_id = video_id;
    entry.subject_id = subject_id;
    entry.label = label;
    entry.frames_glob = "frames/" + video_id + "_*.ppm";
    entry.landmarks_path = lm_name;
    facefit::save_manifest({entry}, (fs::path(out_dir) / "manifest.csv").string());

    std::cout << "wrote " << video.frames.size() << " synthetic frames to " << out_dir << "\n";
    return kExitOk;
}

int cmd_fit(const std::string& manifest_path, const std::string& basis_path,
            const std::string& out_dir, const std::string& report_path, std::uint64_t seed,
            int iterations, double lr, int m_frames, bool no_crop, double focal, int crop_size,
            double init_sh, double init_z) {
    const facefit::MorphableBasis basis = facefit::load_basis(basis_path);
    const auto entries = facefit::load_manifest(manifest_path);
    if (entries.empty()) throw facefit::data_error("manifest has no videos");
    const std::string base_dir = fs::path(manifest_path).parent_path().string();
    fs::create_directories(out_dir);

    facefit::FitConfig config;
    config.seed = seed;
    config.max_iterations = iterations;
    config.learning_rate = lr;
    config.identity_frame_count = m_frames;
    config.init_sh_offset = init_sh;
    config.init_z_translation = init_z;
    const facefit::EnergyWeights weights;
    facefit::CropConfig crop_config;
    crop_config.output_size = crop_size;

    json report = json::array();
    for (const auto& entry : entries) {
        const facefit::VideoIngest ingest =
            facefit::load_video(entry, base_dir, !no_crop, crop_config);
        if (ingest.frames.empty())
            throw facefit::data_error("video " + entry.video_id +
                                      ": all frames rejected at ingestion");
        const facefit::Camera camera =
            make_camera(ingest.frames.front().image.width, ingest.frames.front().image.height,
                        focal);
        const facefit::FitResult result =
            facefit::fit_video(ingest.frames, basis, camera, config, weights);
        const auto features = facefit::export_features(result.state);
        const std::string out_path =
            (fs::path(out_dir) / (entry.video_id + "_features.csv")).string();
        facefit::write_features(features, out_path);

        json video_report;
        video_report["video_id"] = entry.video_id;
        video_report["frames_fit"] = ingest.frames.size();
        video_report["rejected_frames"] = ingest.rejected_frames;
        video_report["iterations"] = result.iterations_run;
        video_report["converged"] = result.converged;
        video_report["best_energy"] = result.best_energy;
        if (!result.history.empty()) {
            const auto& last = result.history.back();
            double land = 0.0, vert = 0.0;
            for (const auto& b : last) {
                land += b.e_land;
                vert += b.e_vert;
            }
            video_report["final_mean_landmark_sq_px"] = land / last.size();
            video_report["final_mean_photometric"] = vert / last.size();
        }
        report.push_back(video_report);
        std::cout << "fit " << entry.video_id << ": " << ingest.frames.size() << " frames, "
                  << result.iterations_run << " iterations, "
                  << (result.converged ? "converged" : "iteration cap reached")
                  << ", best energy " << result.best_energy << "\n";
        if (!result.converged)
            std::cerr << "warning: " << entry.video_id << " did not converge\n";
    }
    if (!report_path.empty()) {
        std::ofstream os(report_path);
        os << report.dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_render_debug(const std::string& basis_path, const std::string& features_path, int row,
                     int width, int height, double focal, const std::string& out_prefix) {
    const facefit::MorphableBasis basis = facefit::load_basis(basis_path);
    const auto rows = facefit::parse_features(features_path);
    if (row < 0 || row >= static_cast<int>(rows.size()))
        throw facefit::data_error("feature row " + std::to_string(row) + " out of range (file has " +
                                  std::to_string(rows.size()) + " rows)");
    const facefit::CodeVector code =
        facefit::CodeVector::from_flat(rows[static_cast<std::size_t>(row)]);
    const facefit::Camera camera = make_camera(width, height, focal);
    const facefit::Mesh mesh =
        facefit::evaluate_mesh(basis, code.alpha, code.beta, code.delta);
    const facefit::RigidPose pose{code.omega, code.t};

    facefit::SplatResult recon =
        facefit::render_pointsplat(mesh, pose, camera, code.gamma, 1);
    facefit::save_ppm(recon.image, out_prefix + "_reconstruction.ppm");
    facefit::SplatResult shading = facefit::render_colors_pointsplat(
        facefit::shading_only_colors(mesh, code.omega, code.gamma), mesh, pose, camera, 1);
    facefit::save_ppm(shading.image, out_prefix + "_shading.ppm");
    facefit::SplatResult normals = facefit::render_colors_pointsplat(
        facefit::normal_colors(mesh, code.omega), mesh, pose, camera, 1);
    facefit::save_ppm(normals.image, out_prefix + "_normals.ppm");
    std::cout << "wrote " << out_prefix << "_{reconstruction,shading,normals}.ppm\n";
    return kExitOk;
}

int cmd_gradcheck(const std::string& basis_path, int vertices, int configs, double tolerance,
                  double fd_step, int image_size, std::uint64_t seed) {
    const facefit::MorphableBasis basis = basis_path.empty()
                                              ? facefit::generate_synthetic_basis(seed, vertices)
                                              : facefit::load_basis(basis_path);
    facefit::GradCheckConfig config;
    config.n_configs = configs;
    config.tolerance = tolerance;
    config.fd_step = fd_step;
    config.image_size = image_size;
    config.seed = seed;

    const auto t0 = std::chrono::steady_clock::now();
    const facefit::GradCheckReport report = facefit::run_gradcheck(basis, config);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::printf("gradcheck: %d configurations on %d vertices, fd step %.1e, %d redraws\n",
                report.configs_run, basis.n_vertices, config.fd_step, report.redraws);
    for (std::size_t b = 0; b < facefit::kGradBlockNames.size(); ++b)
        std::printf("  %-6s max rel error %.3e\n", facefit::kGradBlockNames[b],
                    report.block_max[b]);
    std::printf("  max rel error %.3e (dim %d, config %d), tolerance %.1e, %.1f s\n",
                report.max_rel_error, report.worst_dim, report.worst_config, config.tolerance,
                elapsed);
    std::printf("%s\n", report.passed ? "PASS" : "FAIL");
    return report.passed ? kExitOk : kExitNumerical;
}

std::vector<facefit::SequenceSample> load_sequences(const std::string& manifest_path,
                                                    const std::string& features_dir,
                                                    bool labeled_only) {
    const auto entries = facefit::load_manifest(manifest_path);
    std::vector<facefit::SequenceSample> samples;
    for (const auto& entry : entries) {
        if (labeled_only && entry.label < 0) continue;
        const std::string path =
            (fs::path(features_dir) / (entry.video_id + "_features.csv")).string();
        const auto rows = facefit::parse_features(path);
        if (rows.empty())
            throw facefit::data_error("feature file has no rows: " + path);
        facefit::SequenceSample sample;
        sample.features.resize(static_cast<Eigen::Index>(rows.size()), facefit::dims::code);
        for (std::size_t r = 0; r < rows.size(); ++r)
            sample.features.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
        sample.label = entry.label;
        sample.video_id = entry.video_id;
        sample.subject_id = entry.subject_id;
        samples.push_back(std::move(sample));
    }
    if (samples.empty()) throw facefit::data_error("no labeled videos in manifest");
    return samples;
}

int cmd_train(const std::string& manifest_path, const std::string& features_dir,
              const std::string& out_path, int epochs, int batch, double lr, std::uint64_t seed,
              bool no_standardize) {
    const auto samples = load_sequences(manifest_path, features_dir, true);
    facefit::TrainConfig config;
    config.epochs = epochs;
    config.batch_size = batch;
    config.learning_rate = lr;
    config.seed = seed;
    config.feature_standardization = !no_standardize;
    const facefit::TrainResult result = facefit::train(samples, config);
    facefit::save_rnn(result.model, out_path);
    std::cout << "trained on " << samples.size() << " sequences, final epoch loss "
              << result.epoch_losses.back() << ", wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::vector<std::string>& feature_files) {
    const facefit::RnnModel model = facefit::load_rnn(model_path);
    for (const auto& path : feature_files) {
        const auto rows = facefit::parse_features(path);
        if (rows.empty()) throw facefit::data_error("feature file has no rows: " + path);
        facefit::MatX features(static_cast<Eigen::Index>(rows.size()), facefit::dims::code);
        for (std::size_t r = 0; r < rows.size(); ++r)
            features.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
        const facefit::Prediction pred = facefit::predict(model, features);
        json line;
        line["file"] = path;
        line["label"] = pred.label;
        line["class"] = pred.label == 1 ? "deceptive" : "honest";
        line["p_truth"] = pred.probabilities[0];
        line["p_deception"] = pred.probabilities[1];
        std::cout << line.dump() << "\n";
    }
    return kExitOk;
}

int cmd_lopo(const std::string& manifest_path, const std::string& features_dir, int epochs,
             int batch, double lr, int iterations, std::uint64_t seed, bool no_standardize,
             const std::string& json_path) {
    const auto samples = load_sequences(manifest_path, features_dir, true);
    facefit::LopoConfig config;
    config.train.epochs = epochs;
    config.train.batch_size = batch;
    config.train.learning_rate = lr;
    config.train.feature_standardization = !no_standardize;
    config.n_iterations = iterations;
    config.seed = seed;
    const facefit::LopoResult result = facefit::lopo_evaluate(samples, config);

    std::printf("%-12s %4s %9s %10s %8s %6s\n", "subject", "iter", "accuracy", "precision",
                "recall", "tests");
    for (const auto& fold : result.folds)
        std::printf("%-12s %4d %9.3f %10.3f %8.3f %6zu\n", fold.subject.c_str(), fold.iteration,
                    fold.metrics.accuracy, fold.metrics.precision, fold.metrics.recall,
                    fold.predictions.size());
    std::printf("aggregate (mean over %zu folds): accuracy %.3f, precision %.3f, recall %.3f\n",
                result.folds.size(), result.aggregate.accuracy, result.aggregate.precision,
                result.aggregate.recall);

    if (!json_path.empty()) {
        json out;
        out["aggregate"] = {{"accuracy", result.aggregate.accuracy},
                            {"precision", result.aggregate.precision},
                            {"recall", result.aggregate.recall}};
        out["folds"] = json::array();
        for (const auto& fold : result.folds) {
            json jf;
            jf["subject"] = fold.subject;
            jf["iteration"] = fold.iteration;
            jf["accuracy"] = fold.metrics.accuracy;
            jf["precision"] = fold.metrics.precision;
            jf["recall"] = fold.metrics.recall;
            jf["confusion"] = {{"tp", fold.metrics.tp},
                               {"fp", fold.metrics.fp},
                               {"tn", fold.metrics.tn},
                               {"fn", fold.metrics.fn}};
            json preds = json::array();
            for (const auto& p : fold.predictions)
                preds.push_back({{"video_id", p.video_id},
                                 {"true_label", p.true_label},
                                 {"predicted", p.predicted}});
            jf["predictions"] = preds;
            out["folds"].push_back(jf);
        }
        std::ofstream os(json_path);
        os << out.dump(2) << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"facefit: analysis-by-synthesis face reconstruction and deception "
                 "sequence classification"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;

    // gen-basis
    auto* gen_basis = app.add_subcommand("gen-basis", "generate a synthetic morphable basis");
    std::string gb_out;
    int gb_vertices = 500;
    gen_basis->add_option("--out", gb_out, "output FMB1 path")->required();
    gen_basis->add_option("--vertices", gb_vertices, "vertex count (>= 48)");
    gen_basis->add_option("--seed", seed, "random seed");

    // gen-synthetic
    auto* gen_syn = app.add_subcommand("gen-synthetic", "render a synthetic video with ground truth");
    std::string gs_basis, gs_out_dir, gs_video_id = "syn0", gs_subject_id = "subj0";
    int gs_frames = 5, gs_image_size = 160, gs_label = -1;
    double gs_focal = 0.0, gs_noise = 0.0;
    gen_syn->add_option("--basis", gs_basis, "FMB1 basis path")->required();
    gen_syn->add_option("--out-dir", gs_out_dir, "output directory")->required();
    gen_syn->add_option("--frames", gs_frames, "frame count");
    gen_syn->add_option("--image-size", gs_image_size, "square frame size in pixels");
    gen_syn->add_option("--focal", gs_focal, "focal length in pixels (default 1.5*max(W,H))");
    gen_syn->add_option("--noise", gs_noise, "gaussian pixel noise sigma");
    gen_syn->add_option("--video-id", gs_video_id, "video id");
    gen_syn->add_option("--subject-id", gs_subject_id, "subject id");
    gen_syn->add_option("--label", gs_label, "label (0 truth, 1 deception, -1 unlabeled)");
    gen_syn->add_option("--seed", seed, "random seed");

    // fit
    auto* fit = app.add_subcommand("fit", "fit every video in a manifest and export features");
    std::string f_manifest, f_basis, f_out_dir, f_report;
    int f_iterations = 500, f_m_frames = 3, f_crop_size = 224;
    double f_lr = 0.01, f_focal = 0.0, f_init_sh = 2.0, f_init_z = 0.0;
    bool f_no_crop = false;
    fit->add_option("--manifest", f_manifest, "manifest CSV")->required();
    fit->add_option("--basis", f_basis, "FMB1 basis path")->required();
    fit->add_option("--out-dir", f_out_dir, "feature output directory")->required();
    fit->add_option("--report", f_report, "fit report JSON path");
    fit->add_option("--iterations", f_iterations, "max joint iterations");
    fit->add_option("--lr", f_lr, "Adam learning rate");
    fit->add_option("--m-frames", f_m_frames, "frames sampled per iteration for identity");
    fit->add_option("--focal", f_focal, "focal length in pixels (default 1.5*max(W,H))");
    fit->add_option("--crop-size", f_crop_size, "crop output size");
    fit->add_option("--init-sh", f_init_sh, "initial 0-th band SH coefficient");
    fit->add_option("--init-z", f_init_z, "initial z translation (default from basis bbox)");
    fit->add_flag("--no-crop", f_no_crop, "frames are already cropped; use landmarks as-is");
    fit->add_option("--seed", seed, "random seed");

    // render-debug
    auto* render = app.add_subcommand("render-debug",
                                      "render reconstruction/shading/normals from a code vector");
    std::string r_basis, r_features, r_prefix;
    int r_row = 0, r_width = 224, r_height = 224;
    double r_focal = 0.0;
    render->add_option("--basis", r_basis, "FMB1 basis path")->required();
    render->add_option("--features", r_features, "features CSV holding code vectors")->required();
    render->add_option("--row", r_row, "row index in the features file");
    render->add_option("--width", r_width, "image width");
    render->add_option("--height", r_height, "image height");
    render->add_option("--focal", r_focal, "focal length in pixels");
    render->add_option("--out-prefix", r_prefix, "output path prefix")->required();
    render->add_option("--seed", seed, "random seed (unused, accepted for uniformity)");

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck",
                                         "analytic gradient vs central finite differences");
    std::string g_basis;
    int g_vertices = 500, g_configs = 20, g_image_size = 96;
    double g_tolerance = 1e-4, g_fd_step = 1e-4;
    gradcheck->add_option("--basis", g_basis, "FMB1 basis (default: internal synthetic basis)");
    gradcheck->add_option("--vertices", g_vertices, "synthetic basis vertex count");
    gradcheck->add_option("--configs", g_configs, "number of random configurations");
    gradcheck->add_option("--tolerance", g_tolerance, "per-dimension relative error bound");
    gradcheck->add_option("--fd-step", g_fd_step, "central difference step");
    gradcheck->add_option("--image-size", g_image_size, "test image size");
    gradcheck->add_option("--seed", seed, "random seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train the deception RNN on fitted features");
    std::string t_manifest, t_features_dir, t_out;
    int t_epochs = 10, t_batch = 16;
    double t_lr = 1e-3;
    bool t_no_std = false;
    train_cmd->add_option("--manifest", t_manifest, "manifest CSV with labels")->required();
    train_cmd->add_option("--features-dir", t_features_dir, "directory of <video>_features.csv")
        ->required();
    train_cmd->add_option("--out", t_out, "output FRNN1 checkpoint")->required();
    train_cmd->add_option("--epochs", t_epochs, "training epochs");
    train_cmd->add_option("--batch", t_batch, "mini-batch size");
    train_cmd->add_option("--lr", t_lr, "Adam learning rate");
    train_cmd->add_flag("--no-standardize", t_no_std, "disable feature standardization");
    train_cmd->add_option("--seed", seed, "random seed");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "classify feature sequences");
    std::string p_model;
    std::vector<std::string> p_files;
    predict_cmd->add_option("--model", p_model, "FRNN1 checkpoint")->required();
    predict_cmd->add_option("--features", p_files, "feature CSV files")->required();
    predict_cmd->add_option("--seed", seed, "random seed (unused, accepted for uniformity)");

    // lopo-eval
    auto* lopo_cmd = app.add_subcommand("lopo-eval", "leave-one-person-out cross-validation");
    std::string l_manifest, l_features_dir, l_json;
    int l_epochs = 10, l_batch = 16, l_iterations = 1;
    double l_lr = 1e-3;
    bool l_no_std = false;
    lopo_cmd->add_option("--manifest", l_manifest, "manifest CSV with labels")->required();
    lopo_cmd->add_option("--features-dir", l_features_dir, "directory of <video>_features.csv")
        ->required();
    lopo_cmd->add_option("--epochs", l_epochs, "training epochs per fold");
    lopo_cmd->add_option("--batch", l_batch, "mini-batch size");
    lopo_cmd->add_option("--lr", l_lr, "Adam learning rate");
    lopo_cmd->add_option("--iterations", l_iterations, "repeated iterations to average");
    lopo_cmd->add_flag("--no-standardize", l_no_std, "disable feature standardization");
    lopo_cmd->add_option("--json", l_json, "write fold results as JSON");
    lopo_cmd->add_option("--seed", seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (gen_basis->parsed()) return cmd_gen_basis(gb_out, gb_vertices, seed);
        if (gen_syn->parsed())
            return cmd_gen_synthetic(gs_basis, gs_out_dir, gs_frames, seed, gs_image_size,
                                     gs_focal, gs_noise, gs_video_id, gs_subject_id, gs_label);
        if (fit->parsed())
            return cmd_fit(f_manifest, f_basis, f_out_dir, f_report, seed, f_iterations, f_lr,
                           f_m_frames, f_no_crop, f_focal, f_crop_size, f_init_sh, f_init_z);
        if (render->parsed())
            return cmd_render_debug(r_basis, r_features, r_row, r_width, r_height, r_focal,
                                    r_prefix);
        if (gradcheck->parsed())
            return cmd_gradcheck(g_basis, g_vertices, g_configs, g_tolerance, g_fd_step,
                                 g_image_size, seed);
        if (train_cmd->parsed())
            return cmd_train(t_manifest, t_features_dir, t_out, t_epochs, t_batch, t_lr, seed,
                             t_no_std);
        if (predict_cmd->parsed()) return cmd_predict(p_model, p_files);
        if (lopo_cmd->parsed())
            return cmd_lopo(l_manifest, l_features_dir, l_epochs, l_batch, l_lr, l_iterations,
                            seed, l_no_std, l_json);
    } catch (const facefit::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const facefit::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
