#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chunkcache/retention.hpp"

namespace chunkcache {

struct CatalogFile {
    double size = 1.0;        // bytes (any consistent unit)
    double popularity = 0.0;  // request probability
    RetentionCurve retention = RetentionCurve::constant1();
};

// Immutable video catalog: files sorted by decreasing popularity, with
// popularities summing to one.
class Catalog {
public:
    explicit Catalog(std::vector<CatalogFile> files) : files_(std::move(files)) {
        if (files_.empty()) throw std::invalid_argument("catalog: empty");
        double sum = 0.0;
        for (const auto& f : files_) {
            if (!(f.size > 0.0)) throw std::invalid_argument("catalog: sizes must be positive");
            if (!(f.popularity >= 0.0))
                throw std::invalid_argument("catalog: popularities must be non-negative");
            sum += f.popularity;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("catalog: popularities must sum to 1 (got " +
                                        std::to_string(sum) + ")");
        std::stable_sort(files_.begin(), files_.end(),
                         [](const CatalogFile& a, const CatalogFile& b) {
                             return a.popularity > b.popularity;
                         });
        total_size_ = 0.0;
        for (const auto& f : files_) total_size_ += f.size;
    }

    std::size_t size() const { return files_.size(); }
    const std::vector<CatalogFile>& files() const { return files_; }
    const CatalogFile& file(std::size_t i) const { return files_[i]; }
    double popularity(std::size_t i) const { return files_[i].popularity; }
    double file_size(std::size_t i) const { return files_[i].size; }
    const RetentionCurve& retention(std::size_t i) const { return files_[i].retention; }
    double total_size() const { return total_size_; }

    bool uniform_size() const {
        for (const auto& f : files_)
            if (f.size != files_.front().size) return false;
        return true;
    }

private:
    std::vector<CatalogFile> files_;
    double total_size_ = 0.0;
};

// One duration class of a popularity band (a cell of the scenario table).
struct ClassSpec {
    double avg_watch_time = 0.5;      // fraction of the video, in (0, 1)
    double population_fraction = 0.0; // share of the catalog in this class
    double avg_duration_sec = 1.0;

    void validate() const {
        if (!(avg_watch_time > 0.0 && avg_watch_time < 1.0))
            throw std::invalid_argument("class spec: watch-time outside (0, 1)");
        if (!(population_fraction >= 0.0))
            throw std::invalid_argument("class spec: negative population fraction");
        if (!(avg_duration_sec > 0.0))
            throw std::invalid_argument("class spec: non-positive duration");
    }
};

// A popularity band splits into a small-duration and a large-duration class.
struct PopularityBand {
    ClassSpec small_class;
    ClassSpec large_class;
};

// The five-band class table measured on the YouTube trace, ordered from the
// most popular band to the least popular one. Fractions are as published and
// sum to 0.992; the scenario builder renormalizes.
inline std::vector<PopularityBand> table1_bands() {
    return {
        {{0.72, 0.145, 124.0}, {0.65, 0.053, 235.0}},
        {{0.67, 0.152, 130.0}, {0.60, 0.047, 222.0}},
        {{0.64, 0.153, 128.0}, {0.57, 0.045, 223.0}},
        {{0.60, 0.162, 112.0}, {0.47, 0.036, 220.0}},
        {{0.52, 0.179, 81.0}, {0.37, 0.020, 220.0}},
    };
}

// Zipf popularities p_i proportional to i^-alpha, normalized, decreasing.
inline std::vector<double> zipf_popularity(std::size_t num_files, double alpha) {
    if (num_files == 0) throw std::domain_error("zipf: empty catalog");
    if (!(alpha >= 0.0)) throw std::domain_error("zipf: alpha must be >= 0");
    std::vector<double> p(num_files);
    double sum = 0.0;
    for (std::size_t i = 0; i < num_files; ++i) {
        p[i] = std::pow(static_cast<double>(i + 1), -alpha);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

// Synthetic catalog mirroring the scenario table: Zipf(alpha) popularities,
// contiguous rank bands sized by population fraction (most popular band
// first), a deterministic small/large interleave inside each band, and
// trunc_exp retention fitted to each class watch-time. Sizes are uniform
// (S = 1) or proportional to the class average duration.
inline Catalog build_table1_scenario(std::size_t num_files, double alpha,
                                     const std::vector<PopularityBand>& bands,
                                     bool uniform_size) {
    if (bands.empty()) throw std::invalid_argument("scenario: no bands");
    double fraction_sum = 0.0;
    for (const auto& b : bands) {
        b.small_class.validate();
        b.large_class.validate();
        fraction_sum += b.small_class.population_fraction + b.large_class.population_fraction;
    }
    if (std::abs(fraction_sum - 1.0) > 0.05)
        throw std::invalid_argument("scenario: class fractions must sum to 1 (got " +
                                    std::to_string(fraction_sum) + ")");

    const std::vector<double> pop = zipf_popularity(num_files, alpha);
    std::vector<CatalogFile> files;
    files.reserve(num_files);

    // Band cut points from renormalized cumulative fractions.
    std::vector<std::size_t> cuts{0};
    double cum = 0.0;
    for (const auto& b : bands) {
        cum += (b.small_class.population_fraction + b.large_class.population_fraction) /
               fraction_sum;
        cuts.push_back(static_cast<std::size_t>(std::lround(cum * num_files)));
    }
    cuts.back() = num_files;

    for (std::size_t b = 0; b < bands.size(); ++b) {
        const auto& band = bands[b];
        const double band_fraction =
            band.small_class.population_fraction + band.large_class.population_fraction;
        const double small_share =
            band_fraction > 0.0 ? band.small_class.population_fraction / band_fraction : 0.0;
        const double lambda_small = fit_lambda_to_watch_time(band.small_class.avg_watch_time);
        const double lambda_large = fit_lambda_to_watch_time(band.large_class.avg_watch_time);
        for (std::size_t i = cuts[b], j = 0; i < cuts[b + 1]; ++i, ++j) {
            // proportional interleave: file j of the band is "small" when the
            // running count of small files must advance to track small_share
            const bool small = std::floor((j + 1) * small_share) - std::floor(j * small_share) >=
                               1.0;
            const ClassSpec& cls = small ? band.small_class : band.large_class;
            CatalogFile f;
            f.popularity = pop[i];
            f.size = uniform_size ? 1.0 : cls.avg_duration_sec;
            f.retention = RetentionCurve::trunc_exp(small ? lambda_small : lambda_large);
            files.push_back(std::move(f));
        }
    }
    return Catalog(std::move(files));
}

// --- JSON serialization -----------------------------------------------------

inline nlohmann::json to_json(const RetentionCurve& c) {
    using Kind = RetentionCurve::Kind;
    switch (c.kind()) {
    case Kind::constant1:
        return {{"type", "constant1"}};
    case Kind::trunc_exp:
        return {{"type", "trunc_exp"}, {"lambda", c.lambda()}};
    case Kind::tabulated: {
        nlohmann::json knots = nlohmann::json::array();
        for (const auto& [tau, r] : c.knots()) knots.push_back({tau, r});
        return {{"type", "tabulated"}, {"knots", knots}};
    }
    }
    return {};
}

inline RetentionCurve retention_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant1") return RetentionCurve::constant1();
    if (type == "trunc_exp") return RetentionCurve::trunc_exp(j.at("lambda").get<double>());
    if (type == "tabulated") {
        std::vector<std::pair<double, double>> knots;
        for (const auto& k : j.at("knots"))
            knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
        return RetentionCurve::tabulated(std::move(knots));
    }
    throw std::invalid_argument("retention json: unknown type '" + type + "'");
}

inline nlohmann::json to_json(const Catalog& catalog) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : catalog.files())
        files.push_back({{"size", f.size},
                         {"popularity", f.popularity},
                         {"retention", to_json(f.retention)}});
    return {{"uniform_size", catalog.uniform_size()}, {"files", files}};
}

inline Catalog catalog_from_json(const nlohmann::json& j) {
    std::vector<CatalogFile> files;
    for (const auto& f : j.at("files")) {
        CatalogFile cf;
        cf.size = f.at("size").get<double>();
        cf.popularity = f.at("popularity").get<double>();
        cf.retention = retention_from_json(f.at("retention"));
        files.push_back(std::move(cf));
    }
    return Catalog(std::move(files));
}

inline nlohmann::json to_json(const std::vector<PopularityBand>& bands) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : bands) {
        const auto cls = [](const ClassSpec& c) {
            return nlohmann::json{{"watch_time", c.avg_watch_time},
                                  {"fraction", c.population_fraction},
                                  {"duration_sec", c.avg_duration_sec}};
        };
        out.push_back({{"small", cls(b.small_class)}, {"large", cls(b.large_class)}});
    }
    return out;
}

inline std::vector<PopularityBand> bands_from_json(const nlohmann::json& j) {
    std::vector<PopularityBand> bands;
    for (const auto& b : j) {
        const auto cls = [](const nlohmann::json& c) {
            return ClassSpec{c.at("watch_time").get<double>(), c.at("fraction").get<double>(),
                             c.at("duration_sec").get<double>()};
        };
        bands.push_back({cls(b.at("small")), cls(b.at("large"))});
    }
    return bands;
}

}  // namespace chunkcache
