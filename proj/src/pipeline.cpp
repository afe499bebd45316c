#include "geoclust/pipeline.hpp"

#include <cmath>
#include <fstream>

#include "geoclust/cluster.hpp"
#include "geoclust/metrics.hpp"
#include "geoclust/postprocess.hpp"
#include "geoclust/raster.hpp"
#include "geoclust/rng.hpp"

namespace geoclust {

namespace {

template <class F>
auto run_stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("stage ") + name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string("stage ") + name + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(std::string("stage ") + name + ": " + e.what());
    }
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
    out.close();
    if (!out) throw DataError("failed writing " + path.string());
}

constexpr double kLatentNoData = -9999.0;

}  // namespace

void PipelineConfig::validate() const {
    if (input.empty()) throw ConfigError("input path is required");
    if (out.empty()) throw ConfigError("output directory is required");
    if (std::filesystem::absolute(input) == std::filesystem::absolute(out))
        throw ConfigError("input and output paths must be distinct");
    if (method != "pca" && method != "ae" && method != "sae")
        throw ConfigError("method must be one of pca|ae|sae");
    if (!(variance_target > 0.0 && variance_target <= 1.0))
        throw ConfigError("variance_target must be in (0,1]");
    if (epochs < 1 || batch_size < 1)
        throw ConfigError("epochs and batch_size must be >= 1");
    if (!fixed_k && (k_min < 1 || k_max < k_min + 2))
        throw ConfigError("auto-k needs k_min >= 1 and k_max >= k_min + 2");
    if (fixed_k && *fixed_k < 1) throw ConfigError("k must be >= 1");
    if (filter_kernel != 0 && (filter_kernel % 2 == 0 || filter_kernel < 3))
        throw ConfigError("filter kernel must be odd and >= 3, or 0 for off");
    if (hidden_dims && (hidden_dims->first < hidden_dims->second || hidden_dims->second < 1))
        throw ConfigError("hidden_dims must satisfy h1 >= h2 >= 1");
    if (latent_dim && *latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
}

PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    try {
        if (j.contains("input")) c.input = j["input"].get<std::string>();
        if (j.contains("method")) c.method = j["method"].get<std::string>();
        if (j.contains("variance_target")) c.variance_target = j["variance_target"].get<double>();
        if (j.contains("latent_dim") && !j["latent_dim"].is_null())
            c.latent_dim = j["latent_dim"].get<std::size_t>();
        if (j.contains("hidden_dims") && !j["hidden_dims"].is_null()) {
            auto dims = j["hidden_dims"].get<std::vector<std::size_t>>();
            if (dims.size() != 2) throw ConfigError("hidden_dims must be [h1, h2]");
            c.hidden_dims = {dims[0], dims[1]};
        }
        if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
        if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
        if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("k")) {
            const auto& k = j["k"];
            if (k.is_string()) {
                if (k.get<std::string>() != "auto")
                    throw ConfigError("k must be \"auto\" or an integer");
            } else {
                c.fixed_k = k.get<std::size_t>();
            }
        }
        if (j.contains("k_min")) c.k_min = j["k_min"].get<std::size_t>();
        if (j.contains("k_max")) c.k_max = j["k_max"].get<std::size_t>();
        if (j.contains("filter")) {
            const auto& f = j["filter"];
            if (f.is_string()) {
                if (f.get<std::string>() != "off")
                    throw ConfigError("filter must be \"off\" or an odd kernel size");
                c.filter_kernel = 0;
            } else {
                c.filter_kernel = f.get<std::size_t>();
            }
        }
        if (j.contains("truth") && !j["truth"].is_null())
            c.truth = std::filesystem::path(j["truth"].get<std::string>());
        if (j.contains("out")) c.out = j["out"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    return c;
}

nlohmann::json config_to_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["input"] = c.input.string();
    j["method"] = c.method;
    j["variance_target"] = c.variance_target;
    if (c.latent_dim) j["latent_dim"] = *c.latent_dim;
    if (c.hidden_dims)
        j["hidden_dims"] = {c.hidden_dims->first, c.hidden_dims->second};
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["seed"] = c.seed;
    if (c.fixed_k)
        j["k"] = *c.fixed_k;
    else
        j["k"] = "auto";
    j["k_min"] = c.k_min;
    j["k_max"] = c.k_max;
    if (c.filter_kernel == 0)
        j["filter"] = "off";
    else
        j["filter"] = c.filter_kernel;
    if (c.truth) j["truth"] = c.truth->string();
    j["out"] = c.out.string();
    return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config json: " + std::string(e.what()));
    }
    return config_from_json(j);
}

Palette make_palette(std::size_t n) {
    Palette palette = default_palette();
    if (n <= palette.size()) {
        palette.resize(std::max<std::size_t>(n, 1));
        return palette;
    }
    // extras on golden-angle hue steps, alternating value for contrast
    for (std::size_t i = palette.size(); i < n; ++i) {
        double h = std::fmod(static_cast<double>(i) * 137.50776405003785, 360.0);
        double s = 0.85, v = (i % 2 == 0) ? 0.95 : 0.6;
        double c = v * s;
        double x = c * (1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0));
        double m = v - c;
        double rp = 0, gp = 0, bp = 0;
        switch (static_cast<int>(h / 60.0)) {
            case 0: rp = c; gp = x; break;
            case 1: rp = x; gp = c; break;
            case 2: gp = c; bp = x; break;
            case 3: gp = x; bp = c; break;
            case 4: rp = x; bp = c; break;
            default: rp = c; bp = x; break;
        }
        palette.push_back({static_cast<std::uint8_t>(std::lround((rp + m) * 255.0)),
                           static_cast<std::uint8_t>(std::lround((gp + m) * 255.0)),
                           static_cast<std::uint8_t>(std::lround((bp + m) * 255.0))});
    }
    return palette;
}

RasterGrid latent_to_raster(const LatentMatrix& latent,
                            const std::vector<std::pair<std::uint32_t, std::uint32_t>>& index_map,
                            std::size_t rows, std::size_t cols) {
    if (latent.values.rows != index_map.size())
        throw DataError("latent rows do not match index map");
    RasterGrid grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.bands = latent.latent_dim();
    grid.nodata_value = kLatentNoData;
    grid.values.assign(rows * cols * grid.bands, kLatentNoData);

    std::string prefix = producer_name(latent.producer);
    std::vector<std::string> names;
    for (std::size_t b = 0; b < grid.bands; ++b)
        names.push_back(prefix + "_z" + std::to_string(b));
    grid.band_names = std::move(names);

    for (std::size_t i = 0; i < index_map.size(); ++i) {
        auto [r, c] = index_map[i];
        for (std::size_t b = 0; b < grid.bands; ++b)
            grid.value(r, c, b) = latent.values.at(i, b);
    }
    return grid;
}

std::pair<LatentMatrix, PixelMatrix> latent_from_raster(const RasterGrid& grid) {
    PixelMatrix pm = build_pixel_matrix(grid);
    LatentMatrix latent;
    latent.values = pm.values;
    latent.producer = Producer::pca;
    if (grid.band_names && !grid.band_names->empty()) {
        const std::string& name = grid.band_names->front();
        auto underscore = name.find("_z");
        if (underscore != std::string::npos)
            latent.producer = producer_from_name(name.substr(0, underscore));
    }
    return {std::move(latent), std::move(pm)};
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    config.validate();

    std::filesystem::create_directories(config.out);
    const auto partial_marker = config.out / ".partial";
    {
        std::ofstream marker(partial_marker);
        if (!marker) throw DataError("cannot write into " + config.out.string());
    }

    nlohmann::json artifacts;

    RasterGrid grid = run_stage("ingest", [&] { return read_raster(config.input); });

    auto [scaled, scaling] = run_stage("scale", [&] {
        PixelMatrix pm = build_pixel_matrix(grid);
        return minmax_scale(pm);
    });
    {
        nlohmann::json sj;
        sj["band_min"] = scaling.mins;
        sj["band_max"] = scaling.maxs;
        sj["n_pixels"] = scaled.n_pixels();
        sj["n_bands"] = scaled.n_bands();
        write_json_file(sj, config.out / "scaling.json");
        artifacts["scaling"] = "scaling.json";
    }

    const std::uint64_t train_seed = derive_seed(config.seed, "train");
    const std::uint64_t elbow_seed = derive_seed(config.seed, "elbow");
    const std::uint64_t kmeans_seed = derive_seed(config.seed, "kmeans");

    // PCA is fitted for every method: it either is the reducer or pins the
    // latent width so the three methods stay comparable at equal m.
    PCAModel pca = run_stage("reduce", [&] {
        return pca_fit(scaled, config.variance_target);
    });
    const std::size_t m_pca = pca.latent_dim();

    LatentMatrix latent;
    std::optional<std::pair<std::size_t, std::size_t>> used_hidden_dims;
    run_stage("reduce", [&] {
        if (config.method == "pca") {
            latent = pca_transform(pca, scaled);
            save_pca(pca, config.out / "model_pca");
            artifacts["model"] = "model_pca";
        } else if (config.method == "ae") {
            std::size_t dim = config.latent_dim.value_or(m_pca);
            TrainConfig tc{config.epochs, config.batch_size, config.learning_rate,
                           train_seed};
            CanonicalResult result = canonical_reduce(scaled, dim, tc);
            latent = std::move(result.latent);
            save_network(result.network, config.out / "model_ae", tc);
            write_json_file(nlohmann::json{{"epoch_losses", result.losses}},
                            config.out / "model_ae" / "losses.json");
            artifacts["model"] = "model_ae";
        } else {
            std::size_t n_bands = scaled.n_bands();
            std::size_t h1 = (n_bands + m_pca + 1) / 2;  // ceil((n+m)/2)
            std::size_t h2 = m_pca;
            if (config.hidden_dims) {
                h1 = config.hidden_dims->first;
                h2 = config.hidden_dims->second;
            }
            used_hidden_dims = {h1, h2};
            TrainConfig tc{config.epochs, config.batch_size, config.learning_rate,
                           train_seed};
            StackedResult result = stacked_reduce(scaled, h1, h2, tc);
            latent = std::move(result.latent);
            save_network(result.stage1, config.out / "model_sae_stage1", tc);
            save_network(result.stage2, config.out / "model_sae_stage2", tc);
            write_json_file(nlohmann::json{{"epoch_losses", result.stage1_losses}},
                            config.out / "model_sae_stage1" / "losses.json");
            write_json_file(nlohmann::json{{"epoch_losses", result.stage2_losses}},
                            config.out / "model_sae_stage2" / "losses.json");
            nlohmann::json sj;
            sj["hidden_min"] = result.hidden_scaling.mins;
            sj["hidden_max"] = result.hidden_scaling.maxs;
            write_json_file(sj, config.out / "stage_scaling.json");
            artifacts["model"] = "model_sae_stage1";
            artifacts["model_stage2"] = "model_sae_stage2";
            artifacts["stage_scaling"] = "stage_scaling.json";
        }
        RasterGrid latent_raster =
            latent_to_raster(latent, scaled.index_map, grid.rows, grid.cols);
        latent_raster.geotransform = grid.geotransform;
        write_raster(latent_raster, config.out / "latent");
        artifacts["latent"] = "latent";
        return 0;
    });

    std::size_t chosen_k = 0;
    run_stage("elbow", [&] {
        if (config.fixed_k) {
            chosen_k = *config.fixed_k;
            return 0;
        }
        ElbowCurve curve = elbow_sweep(latent, config.k_min, config.k_max, elbow_seed);
        write_elbow_csv(curve, config.out / "elbow.csv");
        artifacts["elbow"] = "elbow.csv";
        chosen_k = kneedle_detect(curve);
        return 0;
    });

    ClusterModel clusters = run_stage("cluster", [&] {
        ClusterModel model = kmeans_fit(latent, chosen_k, kmeans_seed);
        save_cluster_model(model, config.out);
        artifacts["clusters"] = "clusters.json";
        artifacts["centroids"] = "centroids.bin";
        return model;
    });

    LabelGrid raw_labels = run_stage("labels", [&] {
        LabelGrid lg = labels_to_grid(clusters.labels, scaled.index_map,
                                      grid.rows, grid.cols);
        lg.palette = make_palette(chosen_k);
        lg.geotransform = grid.geotransform;
        write_label_grid(lg, config.out / "labels_raw");
        artifacts["labels_raw"] = "labels_raw";
        return lg;
    });

    std::optional<LabelGrid> filtered_labels;
    if (config.filter_kernel > 0) {
        filtered_labels = run_stage("filter", [&] {
            LabelGrid lg = majority_filter(raw_labels, config.filter_kernel);
            write_label_grid(lg, config.out / "labels_filtered");
            artifacts["labels_filtered"] = "labels_filtered";
            return lg;
        });
    }

    run_stage("render", [&] {
        write_bytes(render_map(raw_labels), config.out / "map_raw.png");
        artifacts["map_raw"] = "map_raw.png";
        if (filtered_labels) {
            write_bytes(render_map(*filtered_labels), config.out / "map_filtered.png");
            artifacts["map_filtered"] = "map_filtered.png";
        }
        return 0;
    });

    run_stage("evaluate", [&] {
        std::optional<GroundTruthSet> truth;
        if (config.truth) truth = read_ground_truth_csv(*config.truth);

        Producer producer = latent.producer;
        auto sub_report = [&](const std::vector<std::uint32_t>& vec,
                              const LabelGrid& lg) -> nlohmann::json {
            std::map<std::uint32_t, std::size_t> distinct;
            for (auto l : vec) distinct[l] += 1;
            if (distinct.size() < 2 || vec.size() <= distinct.size())
                return nlohmann::json{{"skipped", "needs at least 2 populated clusters"}};
            return report_to_json(evaluate_clustering(latent.values, vec, producer,
                                                      &lg, truth ? &*truth : nullptr));
        };

        nlohmann::json report;
        report["raw"] = sub_report(clusters.labels, raw_labels);
        if (filtered_labels) {
            // filtered per-pixel labels read back through the index map
            std::vector<std::uint32_t> filtered_vec(scaled.index_map.size());
            for (std::size_t i = 0; i < scaled.index_map.size(); ++i) {
                auto [r, c] = scaled.index_map[i];
                filtered_vec[i] = filtered_labels->at(r, c);
            }
            report["filtered"] = sub_report(filtered_vec, *filtered_labels);
        }
        write_json_file(report, config.out / "report.json");
        artifacts["report"] = "report.json";
        return 0;
    });

    run_stage("manifest", [&] {
        nlohmann::json manifest;
        manifest["tool"] = "geoclust";
        manifest["version"] = kVersion;
        manifest["config"] = config_to_json(config);
        manifest["method"] = config.method;
        manifest["chosen_k"] = chosen_k;
        manifest["latent_dim"] = latent.latent_dim();
        manifest["pca_latent_dim"] = m_pca;
        if (used_hidden_dims)
            manifest["hidden_dims"] = {used_hidden_dims->first, used_hidden_dims->second};
        manifest["seed"] = config.seed;
        manifest["stage_seeds"] = {{"train", train_seed},
                                   {"elbow", elbow_seed},
                                   {"kmeans", kmeans_seed}};
        manifest["artifacts"] = artifacts;
        write_json_file(manifest, config.out / "manifest.json");
        return 0;
    });

    std::filesystem::remove(partial_marker);

    PipelineResult result;
    result.chosen_k = chosen_k;
    result.latent_dim = latent.latent_dim();
    result.out = config.out;
    return result;
}

}  // namespace geoclust
