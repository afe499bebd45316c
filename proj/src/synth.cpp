#include "geoclust/synth.hpp"

#include <algorithm>
#include <cmath>

#include "geoclust/rng.hpp"

namespace geoclust {

Matrix default_class_spectra(std::size_t n_classes, std::size_t n_bands,
                             std::uint64_t seed) {
    SplitMix64 rng(derive_seed(seed, "spectra"));
    Matrix spectra(n_classes, n_bands);
    // rejection-sample for well-spread spectra, relaxing the separation
    // target when the space is too tight for it
    double min_sep = 0.9;
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (int attempt = 0;; ++attempt) {
            for (std::size_t b = 0; b < n_bands; ++b)
                spectra.at(c, b) = rng.uniform(0.05, 0.95);
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t prev = 0; prev < c; ++prev) {
                double d2 = 0.0;
                for (std::size_t b = 0; b < n_bands; ++b) {
                    double d = spectra.at(c, b) - spectra.at(prev, b);
                    d2 += d * d;
                }
                nearest = std::min(nearest, std::sqrt(d2));
            }
            if (nearest >= min_sep || attempt >= 5000) break;
            if (attempt > 0 && attempt % 1000 == 0) min_sep *= 0.8;
        }
    }
    return spectra;
}

SyntheticScene generate_synthetic(const SyntheticSceneSpec& spec) {
    if (spec.rows < 1 || spec.cols < 1 || spec.n_bands < 1)
        throw ConfigError("scene dimensions must be >= 1");
    if (spec.n_classes < 2) throw ConfigError("need at least 2 classes");
    if (spec.noise_sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
    if (spec.class_spectra.rows != spec.n_classes ||
        spec.class_spectra.cols != spec.n_bands)
        throw ConfigError("class_spectra shape must be n_classes x n_bands");
    for (double v : spec.class_spectra.data)
        if (!(v >= 0.0 && v <= 1.0))
            throw ConfigError("class spectra must lie in [0,1]");

    std::size_t n_sites = spec.voronoi_sites > 0 ? spec.voronoi_sites
                                                 : 4 * spec.n_classes;
    if (n_sites < spec.n_classes)
        throw ConfigError("need at least one voronoi site per class");

    SplitMix64 site_rng(derive_seed(spec.seed, "sites"));
    std::vector<double> site_r(n_sites), site_c(n_sites);
    for (std::size_t s = 0; s < n_sites; ++s) {
        site_r[s] = site_rng.uniform() * static_cast<double>(spec.rows);
        site_c[s] = site_rng.uniform() * static_cast<double>(spec.cols);
    }

    SyntheticScene out;
    out.truth.rows = spec.rows;
    out.truth.cols = spec.cols;
    out.truth.labels.resize(spec.rows * spec.cols);
    out.scene.rows = spec.rows;
    out.scene.cols = spec.cols;
    out.scene.bands = spec.n_bands;
    out.scene.values.resize(spec.rows * spec.cols * spec.n_bands);

    // assignment by pixel centre; sites are round-robin over classes
    for (std::size_t r = 0; r < spec.rows; ++r) {
        double pr = static_cast<double>(r) + 0.5;
        for (std::size_t c = 0; c < spec.cols; ++c) {
            double pc = static_cast<double>(c) + 0.5;
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < n_sites; ++s) {
                double dr = pr - site_r[s], dc = pc - site_c[s];
                double d = dr * dr + dc * dc;
                if (d < best_d) {
                    best_d = d;
                    best = s;
                }
            }
            out.truth.at(r, c) = static_cast<std::uint16_t>(best % spec.n_classes);
        }
    }

    SplitMix64 noise_rng(derive_seed(spec.seed, "noise"));
    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
            std::size_t cls = out.truth.at(r, c);
            for (std::size_t b = 0; b < spec.n_bands; ++b) {
                double v = spec.class_spectra.at(cls, b);
                if (spec.noise_sigma > 0.0)
                    v += spec.noise_sigma * noise_rng.gaussian();
                out.scene.value(r, c, b) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return out;
}

GroundTruthSet sample_ground_truth(const LabelGrid& truth, std::size_t n_points,
                                   std::uint64_t seed) {
    truth.validate();
    if (n_points < 1) throw ConfigError("need at least one truth point");
    SplitMix64 rng(derive_seed(seed, "truth_samples"));
    GroundTruthSet set;
    set.points.reserve(n_points);
    std::size_t attempts = 0;
    const std::size_t max_attempts = 100 * n_points + 1000;
    while (set.points.size() < n_points) {
        if (++attempts > max_attempts)
            throw DataError("truth grid too sparse to sample ground truth points");
        GroundTruthSet::Point p;
        p.row = static_cast<std::size_t>(rng.below(truth.rows));
        p.col = static_cast<std::size_t>(rng.below(truth.cols));
        std::uint16_t label = truth.at(p.row, p.col);
        if (label == LabelGrid::kNoData) continue;  // nodata carries no class
        p.class_id = label;
        set.points.push_back(p);
    }
    return set;
}

}  // namespace geoclust
