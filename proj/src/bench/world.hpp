#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memsteer::bench {

// Canonical attribute set. Positive recall association for everything except
// clutter, echoing what tends to make photographs stick: prominent subjects,
// faces and expressions, tidy compositions.
extern const std::vector<std::string> default_attributes;
int attribute_weight_sign(std::string_view name);  // +1 or -1

struct ImageRecord {
    std::string id;
    std::string scene_id;
    std::vector<double> features;  // in [0,1], aligned with the world attribute order
    std::optional<double> memorability;
};

struct Scene {
    std::string id;
    std::vector<ImageRecord> images;
};

// Ground-truth memorability: logistic(w . x + b), fixed per world seed.
struct Scorer {
    std::vector<double> weights;
    double bias = 0.0;
    double score(std::span<const double> features) const;
};

struct WorldConfig {
    int num_scenes = 250;
    int min_images = 4;
    int max_images = 9;
    std::vector<std::string> attributes;  // empty = default_attributes
    double base_lo = 0.1, base_hi = 0.9;  // per-scene latent feature range
    double jitter = 0.12;                 // per-image perturbation scale
    uint64_t seed = 0;
};

struct World {
    std::vector<std::string> attributes;
    Scorer scorer;
    std::vector<Scene> scenes;

    const ImageRecord* find_image(std::string_view image_id) const;
};

// Scenes share a latent base feature vector; images perturb it. Deterministic
// per seed. Scores are not assigned here; see score_all.
World generate_world(const WorldConfig& config);

void score_all(const Scorer& scorer, std::vector<Scene>& scenes);

struct RankedPair {
    const ImageRecord* source;  // least memorable
    const ImageRecord* dest;    // most memorable
    bool degenerate = false;    // all scores tied
};

// nullopt signals a singleton scene (skip). Ties break lexicographically so
// an all-tied scene pairs (lowest id, highest id).
std::optional<RankedPair> rank_and_pair(const Scene& scene);

// Scene-granularity split; returns (train, test) index lists, each ascending.
std::pair<std::vector<size_t>, std::vector<size_t>> split_scenes(size_t num_scenes, double ratio,
                                                                 uint64_t seed);

}  // namespace memsteer::bench
