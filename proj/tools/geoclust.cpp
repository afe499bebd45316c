// geoclust: batch pipeline for unsupervised geological mapping from
// multiband rasters. Every pipeline stage is also runnable standalone on
// persisted artifacts for debuggability.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "geoclust/cluster.hpp"
#include "geoclust/common.hpp"
#include "geoclust/dimred.hpp"
#include "geoclust/metrics.hpp"
#include "geoclust/nn.hpp"
#include "geoclust/pipeline.hpp"
#include "geoclust/postprocess.hpp"
#include "geoclust/preprocess.hpp"
#include "geoclust/raster.hpp"
#include "geoclust/rng.hpp"
#include "geoclust/synth.hpp"

namespace fs = std::filesystem;
using namespace geoclust;

namespace {

void write_json_file(const nlohmann::json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

std::pair<std::size_t, std::size_t> parse_dim_pair(const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos)
        throw ConfigError("expected two comma-separated integers, got: " + s);
    return {std::stoull(s.substr(0, comma)), std::stoull(s.substr(comma + 1))};
}

struct SynthArgs {
    std::string out;
    std::size_t rows = 128, cols = 128, bands = 8, classes = 6;
    double sigma = 0.02;
    std::size_t sites = 0;
    std::uint64_t seed = 0;
    std::size_t truth_samples = 200;
};

int cmd_synth(const SynthArgs& a) {
    SyntheticSceneSpec spec;
    spec.rows = a.rows;
    spec.cols = a.cols;
    spec.n_bands = a.bands;
    spec.n_classes = a.classes;
    spec.noise_sigma = a.sigma;
    spec.voronoi_sites = a.sites;
    spec.seed = a.seed;
    spec.class_spectra = default_class_spectra(a.classes, a.bands, a.seed);

    SyntheticScene scene = generate_synthetic(spec);
    scene.truth.palette = make_palette(a.classes);
    fs::create_directories(a.out);
    write_raster(scene.scene, fs::path(a.out) / "scene");
    write_label_grid(scene.truth, fs::path(a.out) / "truth_labels");
    GroundTruthSet truth = sample_ground_truth(scene.truth, a.truth_samples, a.seed);
    write_ground_truth_csv(truth, fs::path(a.out) / "truth.csv");
    std::cout << "scene: " << (fs::path(a.out) / "scene").string() << "\n"
              << "truth labels: " << (fs::path(a.out) / "truth_labels").string() << "\n"
              << "truth csv: " << (fs::path(a.out) / "truth.csv").string() << "\n";
    return 0;
}

struct IngestArgs {
    std::vector<std::string> inputs;
    std::string out;
    std::string crop_window;  // "row0,col0,rows,cols"
};

int cmd_ingest(const IngestArgs& a) {
    std::vector<RasterGrid> grids;
    for (const auto& p : a.inputs) grids.push_back(read_raster(p));
    RasterGrid stacked = stack_bands(grids);
    if (!a.crop_window.empty()) {
        std::vector<std::size_t> w;
        std::string rest = a.crop_window;
        for (int i = 0; i < 3; ++i) {
            auto comma = rest.find(',');
            if (comma == std::string::npos)
                throw ConfigError("--crop expects row0,col0,rows,cols");
            w.push_back(std::stoull(rest.substr(0, comma)));
            rest = rest.substr(comma + 1);
        }
        w.push_back(std::stoull(rest));
        stacked = crop(stacked, w[0], w[1], w[2], w[3]);
    }
    write_raster(stacked, a.out);
    std::cout << "wrote " << a.out << " (" << stacked.rows << "x" << stacked.cols
              << "x" << stacked.bands << ")\n";
    return 0;
}

struct ReduceArgs {
    std::string input, out;
    std::string method = "pca";
    double variance_target = 0.90;
    std::size_t latent_dim = 0;  // 0 -> PCA width
    std::string hidden_dims;
    std::size_t epochs = 10, batch_size = 256;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

int cmd_reduce(const ReduceArgs& a) {
    if (a.method != "pca" && a.method != "ae" && a.method != "sae")
        throw ConfigError("method must be one of pca|ae|sae");
    RasterGrid grid = read_raster(a.input);
    PixelMatrix pm = build_pixel_matrix(grid);
    auto [scaled, scaling] = minmax_scale(pm);
    fs::create_directories(a.out);
    write_json_file({{"band_min", scaling.mins},
                     {"band_max", scaling.maxs},
                     {"n_pixels", scaled.n_pixels()},
                     {"n_bands", scaled.n_bands()}},
                    fs::path(a.out) / "scaling.json");

    PCAModel pca = pca_fit(scaled, a.variance_target);
    std::uint64_t train_seed = derive_seed(a.seed, "train");
    TrainConfig tc{a.epochs, a.batch_size, a.learning_rate, train_seed};

    LatentMatrix latent;
    if (a.method == "pca") {
        latent = pca_transform(pca, scaled);
        save_pca(pca, fs::path(a.out) / "model_pca");
    } else if (a.method == "ae") {
        std::size_t dim = a.latent_dim > 0 ? a.latent_dim : pca.latent_dim();
        CanonicalResult result = canonical_reduce(scaled, dim, tc);
        latent = std::move(result.latent);
        save_network(result.network, fs::path(a.out) / "model_ae", tc);
        write_json_file({{"epoch_losses", result.losses}},
                        fs::path(a.out) / "model_ae" / "losses.json");
    } else {
        std::size_t m = pca.latent_dim();
        std::size_t h1 = (scaled.n_bands() + m + 1) / 2, h2 = m;
        if (!a.hidden_dims.empty()) {
            auto dims = parse_dim_pair(a.hidden_dims);
            h1 = dims.first;
            h2 = dims.second;
        }
        StackedResult result = stacked_reduce(scaled, h1, h2, tc);
        latent = std::move(result.latent);
        save_network(result.stage1, fs::path(a.out) / "model_sae_stage1", tc);
        save_network(result.stage2, fs::path(a.out) / "model_sae_stage2", tc);
        write_json_file({{"hidden_min", result.hidden_scaling.mins},
                         {"hidden_max", result.hidden_scaling.maxs}},
                        fs::path(a.out) / "stage_scaling.json");
    }

    RasterGrid latent_raster = latent_to_raster(latent, scaled.index_map,
                                                grid.rows, grid.cols);
    latent_raster.geotransform = grid.geotransform;
    write_raster(latent_raster, fs::path(a.out) / "latent");
    std::cout << "latent width " << latent.latent_dim() << " -> "
              << (fs::path(a.out) / "latent").string() << "\n";
    return 0;
}

struct ElbowArgs {
    std::string features, out;
    std::size_t k_min = 2, k_max = 12;
    std::uint64_t seed = 0;
};

int cmd_elbow(const ElbowArgs& a) {
    auto [latent, pm] = latent_from_raster(read_raster(a.features));
    ElbowCurve curve = elbow_sweep(latent, a.k_min, a.k_max, derive_seed(a.seed, "elbow"));
    fs::create_directories(a.out);
    write_elbow_csv(curve, fs::path(a.out) / "elbow.csv");
    std::size_t k = kneedle_detect(curve);
    write_json_file({{"chosen_k", k}}, fs::path(a.out) / "chosen_k.json");
    std::cout << "chosen k: " << k << "\n";
    return 0;
}

struct ClusterArgs {
    std::string features, out;
    std::size_t k = 0;
    std::uint64_t seed = 0;
};

int cmd_cluster(const ClusterArgs& a) {
    RasterGrid raster = read_raster(a.features);
    auto [latent, pm] = latent_from_raster(raster);
    ClusterModel model = kmeans_fit(latent, a.k, derive_seed(a.seed, "kmeans"));
    fs::create_directories(a.out);
    save_cluster_model(model, a.out);
    LabelGrid labels = labels_to_grid(model.labels, pm.index_map,
                                      raster.rows, raster.cols);
    labels.palette = make_palette(a.k);
    labels.geotransform = raster.geotransform;
    write_label_grid(labels, fs::path(a.out) / "labels");
    std::cout << "k=" << a.k << " inertia=" << model.inertia << " -> "
              << (fs::path(a.out) / "labels").string() << "\n";
    return 0;
}

struct FilterArgs {
    std::string labels, out;
    std::size_t kernel = 7;
};

int cmd_filter(const FilterArgs& a) {
    LabelGrid grid = read_label_grid(a.labels);
    LabelGrid filtered = majority_filter(grid, a.kernel);
    write_label_grid(filtered, a.out);
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string features, labels, truth, out = "report.json";
    std::size_t silhouette = 0;  // sample size; 0 disables
    std::uint64_t seed = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
    RasterGrid raster = read_raster(a.features);
    auto [latent, pm] = latent_from_raster(raster);
    LabelGrid grid = read_label_grid(a.labels);
    if (grid.rows != raster.rows || grid.cols != raster.cols)
        throw DataError("label grid and feature raster dimensions differ");

    std::vector<std::uint32_t> labels(pm.index_map.size());
    for (std::size_t i = 0; i < pm.index_map.size(); ++i) {
        auto [r, c] = pm.index_map[i];
        std::uint16_t l = grid.at(r, c);
        if (l == LabelGrid::kNoData)
            throw DataError("label grid has nodata where features are valid");
        labels[i] = l;
    }

    std::optional<GroundTruthSet> truth;
    if (!a.truth.empty()) truth = read_ground_truth_csv(a.truth);

    EvaluationReport report = evaluate_clustering(
        latent.values, labels, latent.producer, &grid, truth ? &*truth : nullptr);
    nlohmann::json j = report_to_json(report);
    if (a.silhouette > 0)
        j["silhouette_subsample"] = silhouette_subsample(
            latent.values, labels, a.silhouette, derive_seed(a.seed, "silhouette"));
    write_json_file(j, a.out);
    std::cout << "report -> " << a.out << "\n";
    return 0;
}

struct RenderArgs {
    std::string labels, out = "map.png";
};

int cmd_render(const RenderArgs& a) {
    LabelGrid grid = read_label_grid(a.labels);
    write_bytes(render_map(grid), a.out);
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geoclust: multiband raster -> dimensionality reduction "
                 "(pca|ae|sae) -> k-means with elbow k selection -> majority "
                 "filter -> cluster maps and validity metrics.\n"
                 "GEOCLUST_THREADS caps worker threads (default: machine "
                 "parallelism); results are identical at any thread count."};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic scene");
    synth->add_option("--out", synth_args.out, "output directory")->required();
    synth->add_option("--rows", synth_args.rows, "grid rows");
    synth->add_option("--cols", synth_args.cols, "grid cols");
    synth->add_option("--bands", synth_args.bands, "spectral bands");
    synth->add_option("--classes", synth_args.classes, "number of classes");
    synth->add_option("--sigma", synth_args.sigma, "gaussian noise sigma");
    synth->add_option("--sites", synth_args.sites, "voronoi sites (0 = 4*classes)");
    synth->add_option("--seed", synth_args.seed, "rng seed");
    synth->add_option("--truth-samples", synth_args.truth_samples,
                      "ground truth points to sample");

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "stack and crop raster datasets");
    ingest->add_option("--input", ingest_args.inputs, "raster directory (repeatable)")
        ->required();
    ingest->add_option("--out", ingest_args.out, "output raster directory")->required();
    ingest->add_option("--crop", ingest_args.crop_window, "window row0,col0,rows,cols");

    ReduceArgs reduce_args;
    auto* reduce = app.add_subcommand("reduce", "scale pixels and reduce dimensionality");
    reduce->add_option("--input", reduce_args.input, "raster directory")->required();
    reduce->add_option("--out", reduce_args.out, "output directory")->required();
    reduce->add_option("--method", reduce_args.method, "pca|ae|sae");
    reduce->add_option("--variance-target", reduce_args.variance_target,
                       "PCA cumulative variance target");
    reduce->add_option("--latent-dim", reduce_args.latent_dim,
                       "ae latent width (0 = PCA width)");
    reduce->add_option("--hidden-dims", reduce_args.hidden_dims, "sae h1,h2");
    reduce->add_option("--epochs", reduce_args.epochs, "training epochs");
    reduce->add_option("--batch-size", reduce_args.batch_size, "mini-batch size");
    reduce->add_option("--learning-rate", reduce_args.learning_rate, "Adam learning rate");
    reduce->add_option("--seed", reduce_args.seed, "rng seed");

    ElbowArgs elbow_args;
    auto* elbow = app.add_subcommand("elbow", "WCSS sweep and knee detection");
    elbow->add_option("--features", elbow_args.features, "latent raster directory")
        ->required();
    elbow->add_option("--out", elbow_args.out, "output directory")->required();
    elbow->add_option("--k-min", elbow_args.k_min, "sweep start");
    elbow->add_option("--k-max", elbow_args.k_max, "sweep end");
    elbow->add_option("--seed", elbow_args.seed, "rng seed");

    ClusterArgs cluster_args;
    auto* cluster = app.add_subcommand("cluster", "k-means at a fixed k");
    cluster->add_option("--features", cluster_args.features, "latent raster directory")
        ->required();
    cluster->add_option("--k", cluster_args.k, "cluster count")->required();
    cluster->add_option("--out", cluster_args.out, "output directory")->required();
    cluster->add_option("--seed", cluster_args.seed, "rng seed");

    FilterArgs filter_args;
    auto* filter = app.add_subcommand("filter", "majority-filter a label grid");
    filter->add_option("--labels", filter_args.labels, "label grid directory")->required();
    filter->add_option("--out", filter_args.out, "output label grid directory")
        ->required();
    filter->add_option("--kernel", filter_args.kernel, "odd kernel size");

    EvaluateArgs evaluate_args;
    auto* evaluate = app.add_subcommand("evaluate", "validity indices and accuracy");
    evaluate->add_option("--features", evaluate_args.features, "latent raster directory")
        ->required();
    evaluate->add_option("--labels", evaluate_args.labels, "label grid directory")
        ->required();
    evaluate->add_option("--truth", evaluate_args.truth, "ground truth csv");
    evaluate->add_option("--out", evaluate_args.out, "report json path");
    evaluate->add_option("--silhouette", evaluate_args.silhouette,
                         "silhouette subsample size (0 = off)");
    evaluate->add_option("--seed", evaluate_args.seed, "rng seed");

    RenderArgs render_args;
    auto* render = app.add_subcommand("render", "render a label grid to png");
    render->add_option("--labels", render_args.labels, "label grid directory")->required();
    render->add_option("--out", render_args.out, "png path");

    auto* pipeline = app.add_subcommand("pipeline", "run the full framework");
    std::string cfg_path, p_input, p_method, p_k, p_filter, p_truth, p_out, p_hidden;
    double p_var = 0, p_lr = 0;
    std::size_t p_epochs = 0, p_batch = 0, p_kmin = 0, p_kmax = 0, p_latent = 0;
    std::uint64_t p_seed = 0;
    auto* o_cfg = pipeline->add_option("--config", cfg_path, "config json file");
    auto* o_input = pipeline->add_option("--input", p_input, "raster directory");
    auto* o_method = pipeline->add_option("--method", p_method, "pca|ae|sae");
    auto* o_k = pipeline->add_option("--k", p_k, "auto or a fixed integer");
    auto* o_filter = pipeline->add_option("--filter", p_filter, "off or odd kernel size");
    auto* o_seed = pipeline->add_option("--seed", p_seed, "top-level rng seed");
    auto* o_out = pipeline->add_option("--out", p_out, "output directory");
    auto* o_var = pipeline->add_option("--variance-target", p_var, "PCA variance target");
    auto* o_latent = pipeline->add_option("--latent-dim", p_latent, "ae latent width");
    auto* o_hidden = pipeline->add_option("--hidden-dims", p_hidden, "sae h1,h2");
    auto* o_epochs = pipeline->add_option("--epochs", p_epochs, "training epochs");
    auto* o_batch = pipeline->add_option("--batch-size", p_batch, "mini-batch size");
    auto* o_lr = pipeline->add_option("--learning-rate", p_lr, "Adam learning rate");
    auto* o_kmin = pipeline->add_option("--k-min", p_kmin, "elbow sweep start");
    auto* o_kmax = pipeline->add_option("--k-max", p_kmax, "elbow sweep end");
    auto* o_truth = pipeline->add_option("--truth", p_truth, "ground truth csv");

    try {
        app.parse(argc, argv);

        if (synth->parsed()) return cmd_synth(synth_args);
        if (ingest->parsed()) return cmd_ingest(ingest_args);
        if (reduce->parsed()) return cmd_reduce(reduce_args);
        if (elbow->parsed()) return cmd_elbow(elbow_args);
        if (cluster->parsed()) return cmd_cluster(cluster_args);
        if (filter->parsed()) return cmd_filter(filter_args);
        if (evaluate->parsed()) return cmd_evaluate(evaluate_args);
        if (render->parsed()) return cmd_render(render_args);

        // pipeline: config file first, then flags override
        PipelineConfig config;
        if (o_cfg->count() > 0) config = load_config(cfg_path);
        if (o_input->count() > 0) config.input = p_input;
        if (o_method->count() > 0) config.method = p_method;
        if (o_k->count() > 0) {
            if (p_k == "auto")
                config.fixed_k.reset();
            else
                config.fixed_k = std::stoull(p_k);
        }
        if (o_filter->count() > 0) {
            if (p_filter == "off")
                config.filter_kernel = 0;
            else
                config.filter_kernel = std::stoull(p_filter);
        }
        if (o_seed->count() > 0) config.seed = p_seed;
        if (o_out->count() > 0) config.out = p_out;
        if (o_var->count() > 0) config.variance_target = p_var;
        if (o_latent->count() > 0) config.latent_dim = p_latent;
        if (o_hidden->count() > 0) config.hidden_dims = parse_dim_pair(p_hidden);
        if (o_epochs->count() > 0) config.epochs = p_epochs;
        if (o_batch->count() > 0) config.batch_size = p_batch;
        if (o_lr->count() > 0) config.learning_rate = p_lr;
        if (o_kmin->count() > 0) config.k_min = p_kmin;
        if (o_kmax->count() > 0) config.k_max = p_kmax;
        if (o_truth->count() > 0) config.truth = fs::path(p_truth);

        PipelineResult result = run_pipeline(config);
        std::cout << "chosen k: " << result.chosen_k << "\n"
                  << "latent width: " << result.latent_dim << "\n"
                  << "artifacts: " << result.out.string() << "\n";
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
