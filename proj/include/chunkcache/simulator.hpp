#pragma once

#include <cmath>
#include <cstdint>
#include <list>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chunkcache/catalog.hpp"
#include "chunkcache/che.hpp"
#include "chunkcache/rng.hpp"

namespace chunkcache {

// Recency-ordered store of (file, chunk) entries with fractional sizes.
// Sizes are quantized to 2^-40 file units and accounted in integers, so the
// occupancy-never-exceeds-capacity invariant is exact, not approximate.
class ChunkLruCache {
public:
    using Key = std::uint64_t;

    static Key make_key(std::uint32_t file, std::uint32_t chunk) {
        return (static_cast<Key>(file) << 32) | chunk;
    }
    static std::uint32_t key_file(Key k) { return static_cast<std::uint32_t>(k >> 32); }
    static std::uint32_t key_chunk(Key k) { return static_cast<std::uint32_t>(k & 0xffffffffu); }

    explicit ChunkLruCache(double capacity)
        : capacity_units_(to_units(capacity)) {
        if (!(capacity > 0.0)) throw std::invalid_argument("cache: capacity must be positive");
    }

    // Move an existing key to the most-recent position. Returns false (and
    // does nothing) if the key is absent.
    bool touch(Key key) {
        const auto it = index_.find(key);
        if (it == index_.end()) return false;
        recency_.splice(recency_.begin(), recency_, it->second);
        return true;
    }

    // Insert an absent key at the most-recent position, evicting least
    // recently used entries until it fits. Returns the evicted keys.
    std::vector<Key> insert(Key key, double size) {
        const std::int64_t units = to_units(size);
        if (units > capacity_units_)
            throw std::invalid_argument("cache: entry larger than the whole cache");
        if (index_.count(key)) throw std::logic_error("cache: inserting a present key");
        std::vector<Key> evicted;
        while (occupancy_units_ + units > capacity_units_) {
            const auto& [victim, victim_units] = recency_.back();
            evicted.push_back(victim);
            occupancy_units_ -= victim_units;
            index_.erase(victim);
            recency_.pop_back();
        }
        recency_.emplace_front(key, units);
        index_[key] = recency_.begin();
        occupancy_units_ += units;
        return evicted;
    }

    bool contains(Key key) const { return index_.count(key) != 0; }
    std::size_t entry_count() const { return index_.size(); }
    double occupancy() const { return static_cast<double>(occupancy_units_) * unit; }
    double capacity() const { return static_cast<double>(capacity_units_) * unit; }
    std::int64_t occupancy_units() const { return occupancy_units_; }
    std::int64_t capacity_units() const { return capacity_units_; }

    // Least-to-most recent key walk, for invariant inspection.
    template <typename F>
    void for_each_key(F&& f) const {
        for (auto it = recency_.rbegin(); it != recency_.rend(); ++it) f(it->first);
    }

private:
    static constexpr double unit = 0x1.0p-40;
    static std::int64_t to_units(double size) {
        return static_cast<std::int64_t>(std::llround(size * 0x1.0p40));
    }

    std::list<std::pair<Key, std::int64_t>> recency_;  // front = most recent
    std::unordered_map<Key, std::list<std::pair<Key, std::int64_t>>::iterator> index_;
    std::int64_t capacity_units_;
    std::int64_t occupancy_units_ = 0;
};

struct SimReport {
    std::uint64_t requests = 0;          // counted after warmup
    std::uint64_t warmup_discarded = 0;
    std::vector<std::vector<std::uint64_t>> accesses;  // [chunk k][file i]
    std::vector<std::vector<std::uint64_t>> hits;
    std::vector<std::vector<double>> hit_rate;         // hits/accesses, 0 when unaccessed
    double miss_mass = 0.0;   // fetched chunk mass (file units), post warmup
    double tail_mass = 0.0;   // watched tail mass (file units), post warmup
    double traffic_absolute = 0.0;    // bytes per request
    double traffic_normalized = 0.0;  // vs. no-cache traffic
};

// Executes the chunk-LRU policy one IRM request at a time: the viewer picks a
// file by popularity, abandons at b, and touches cacheable chunks in index
// order while their start lies before b. A hit only refreshes recency; a miss
// fetches the whole chunk into the cache. The tail [nu, 1] bypasses the cache.
class ChunkLruSimulator {
public:
    ChunkLruSimulator(const Catalog& catalog, const ChunkScheme& scheme, double capacity,
                      std::uint64_t seed)
        : catalog_(catalog),
          scheme_(scheme),
          cache_(capacity / che_detail::uniform_file_size(catalog)),
          rng_(seed, 0) {
        const double mass_capacity = capacity / catalog.file_size(0);
        for (int k = 0; k < scheme.num_chunks(); ++k)
            if (scheme.width(k) > mass_capacity)
                throw std::invalid_argument("simulator: a single chunk exceeds the cache");
        cumulative_.reserve(catalog.size());
        double cum = 0.0;
        for (const auto& f : catalog.files()) {
            cum += f.popularity;
            cumulative_.push_back(cum);
        }
        cumulative_.back() = 1.0;
        reset_stats();
    }

    void step() {
        const double u_file = rng_.next_double();
        const std::size_t file =
            std::upper_bound(cumulative_.begin(), cumulative_.end(), u_file) -
            cumulative_.begin();
        const std::size_t i = std::min(file, catalog_.size() - 1);
        const double b = catalog_.retention(i).sample_abandonment(rng_.next_double());

        const int n = scheme_.num_chunks();
        for (int k = 0; k < n; ++k) {
            if (!(scheme_.splits[k] < b)) break;  // chunk k+1 starts at or past b
            const auto key = ChunkLruCache::make_key(static_cast<std::uint32_t>(i),
                                                     static_cast<std::uint32_t>(k));
            ++accesses_[k][i];
            if (cache_.touch(key)) {
                ++hits_[k][i];
            } else {
                miss_mass_ += scheme_.width(k);
                cache_.insert(key, scheme_.width(k));
            }
        }
        if (b > scheme_.nu()) tail_mass_ += b - scheme_.nu();
        ++steps_;
    }

    void reset_stats() {
        accesses_.assign(scheme_.num_chunks(), std::vector<std::uint64_t>(catalog_.size(), 0));
        hits_.assign(scheme_.num_chunks(), std::vector<std::uint64_t>(catalog_.size(), 0));
        miss_mass_ = tail_mass_ = 0.0;
        steps_ = 0;
    }

    const ChunkLruCache& cache() const { return cache_; }
    std::uint64_t steps() const { return steps_; }

    SimReport report() const {
        SimReport r;
        r.requests = steps_;
        r.accesses = accesses_;
        r.hits = hits_;
        r.hit_rate.assign(scheme_.num_chunks(), std::vector<double>(catalog_.size(), 0.0));
        for (int k = 0; k < scheme_.num_chunks(); ++k)
            for (std::size_t i = 0; i < catalog_.size(); ++i)
                if (accesses_[k][i] > 0)
                    r.hit_rate[k][i] =
                        static_cast<double>(hits_[k][i]) / static_cast<double>(accesses_[k][i]);
        r.miss_mass = miss_mass_;
        r.tail_mass = tail_mass_;
        const double s = catalog_.file_size(0);
        if (steps_ > 0) {
            r.traffic_absolute = (miss_mass_ + tail_mass_) * s / static_cast<double>(steps_);
            r.traffic_normalized = r.traffic_absolute / no_cache_traffic(catalog_);
        }
        return r;
    }

private:
    const Catalog& catalog_;
    ChunkScheme scheme_;
    ChunkLruCache cache_;
    Rng rng_;
    std::vector<double> cumulative_;
    std::vector<std::vector<std::uint64_t>> accesses_, hits_;
    double miss_mass_ = 0.0, tail_mass_ = 0.0;
    std::uint64_t steps_ = 0;
};

// One complete run: warm the cache on the first warmup_fraction of requests,
// then collect statistics over the rest.
inline SimReport run_simulation(const Catalog& catalog, const ChunkScheme& scheme,
                                double capacity, std::uint64_t num_requests, std::uint64_t seed,
                                double warmup_fraction = 0.2) {
    if (num_requests < 1) throw std::invalid_argument("simulator: need at least one request");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
        throw std::invalid_argument("simulator: warmup fraction outside [0, 1)");
    ChunkLruSimulator sim(catalog, scheme, capacity, seed);
    const std::uint64_t warmup =
        static_cast<std::uint64_t>(warmup_fraction * static_cast<double>(num_requests));
    for (std::uint64_t r = 0; r < num_requests; ++r) {
        if (r == warmup) sim.reset_stats();
        sim.step();
    }
    SimReport report = sim.report();
    report.warmup_discarded = warmup;
    return report;
}

// Simulation vs. Che prediction: worst per-chunk hit-rate deviation over the
// most popular tenth of the catalog, plus the relative traffic deviation.
struct DeviationReport {
    double max_hit_deviation = 0.0;
    double traffic_relative_deviation = 0.0;
    ChePrediction che;
    SimReport sim;
};

inline DeviationReport compare_sim_to_che(const Catalog& catalog, const ChunkScheme& scheme,
                                          double capacity, std::uint64_t num_requests,
                                          std::uint64_t seed, double warmup_fraction = 0.2) {
    DeviationReport out;
    out.che = traffic_chunk_lru(catalog, scheme, capacity);
    out.sim = run_simulation(catalog, scheme, capacity, num_requests, seed, warmup_fraction);
    const std::size_t top = std::max<std::size_t>(1, catalog.size() / 10);
    for (int k = 0; k < scheme.num_chunks(); ++k)
        for (std::size_t i = 0; i < top; ++i)
            if (out.sim.accesses[k][i] > 0)
                out.max_hit_deviation =
                    std::max(out.max_hit_deviation,
                             std::abs(out.sim.hit_rate[k][i] - out.che.hit_rates[k][i]));
    const double b_che = out.che.traffic.absolute;
    out.traffic_relative_deviation =
        b_che > 0.0 ? std::abs(out.sim.traffic_absolute - b_che) / b_che
                    : std::abs(out.sim.traffic_absolute);
    return out;
}

}  // namespace chunkcache
