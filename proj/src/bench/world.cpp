#include "bench/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "util/error.hpp"
#include "util/rng.hpp"

namespace memsteer::bench {

const std::vector<std::string> default_attributes = {
    "subject_prominence", "gaze_at_camera", "smiling", "symmetry", "clutter", "brightness",
};

int attribute_weight_sign(std::string_view name) { return name == "clutter" ? -1 : 1; }

double Scorer::score(std::span<const double> features) const {
    if (features.size() != weights.size())
        fail(ErrorKind::contract, "feature length does not match the scorer");
    double z = bias;
    for (size_t i = 0; i < weights.size(); ++i) z += weights[i] * features[i];
    return 1.0 / (1.0 + std::exp(-z));
}

namespace {

double clip01(double v) { return std::min(1.0, std::max(0.0, v)); }

std::string scene_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene-%05d", i);
    return buf;
}

std::string image_name(const std::string& scene, int j) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "/img-%02d", j);
    return scene + buf;
}

}  // namespace

World generate_world(const WorldConfig& config) {
    if (config.num_scenes < 1) fail(ErrorKind::contract, "num_scenes must be >= 1");
    if (config.min_images < 1 || config.max_images < config.min_images)
        fail(ErrorKind::contract, "invalid images_per_scene range");
    if (!(config.base_lo < config.base_hi))
        fail(ErrorKind::contract, "invalid latent feature range");
    if (config.jitter < 0.0) fail(ErrorKind::contract, "jitter must be >= 0");

    World w;
    w.attributes = config.attributes.empty() ? default_attributes : config.attributes;
    const size_t K = w.attributes.size();
    if (K == 0) fail(ErrorKind::contract, "attribute list is empty");

    Rng rng(config.seed);
    w.scorer.weights.resize(K);
    double mid_sum = 0.0;
    for (size_t k = 0; k < K; ++k) {
        double mag = rng.uniform(1.2, 2.4);
        w.scorer.weights[k] = mag * attribute_weight_sign(w.attributes[k]);
        mid_sum += w.scorer.weights[k] * 0.5;
    }
    // Center the logistic near the mid-range feature point.
    w.scorer.bias = -mid_sum + rng.uniform(-0.3, 0.3);

    w.scenes.resize(static_cast<size_t>(config.num_scenes));
    for (int si = 0; si < config.num_scenes; ++si) {
        Scene& scene = w.scenes[static_cast<size_t>(si)];
        scene.id = scene_name(si);
        std::vector<double> base(K);
        for (size_t k = 0; k < K; ++k) base[k] = rng.uniform(config.base_lo, config.base_hi);
        int count = static_cast<int>(rng.uniform_int(config.min_images, config.max_images));
        scene.images.resize(static_cast<size_t>(count));
        for (int j = 0; j < count; ++j) {
            ImageRecord& img = scene.images[static_cast<size_t>(j)];
            img.id = image_name(scene.id, j);
            img.scene_id = scene.id;
            img.features.resize(K);
            for (size_t k = 0; k < K; ++k)
                img.features[k] = clip01(base[k] + config.jitter * rng.normal());
        }
    }
    return w;
}

void score_all(const Scorer& scorer, std::vector<Scene>& scenes) {
    for (auto& scene : scenes)
        for (auto& img : scene.images) img.memorability = scorer.score(img.features);
}

const ImageRecord* World::find_image(std::string_view image_id) const {
    for (const auto& scene : scenes)
        for (const auto& img : scene.images)
            if (img.id == image_id) return &img;
    return nullptr;
}

std::optional<RankedPair> rank_and_pair(const Scene& scene) {
    if (scene.images.size() < 2) return std::nullopt;
    for (const auto& img : scene.images)
        if (!img.memorability.has_value())
            fail(ErrorKind::contract, "unscored image " + img.id + " in rank_and_pair");

    const ImageRecord* lo = &scene.images[0];
    const ImageRecord* hi = &scene.images[0];
    for (const auto& img : scene.images) {
        double m = *img.memorability;
        if (m < *lo->memorability || (m == *lo->memorability && img.id < lo->id)) lo = &img;
        if (m > *hi->memorability || (m == *hi->memorability && img.id > hi->id)) hi = &img;
    }
    RankedPair pair{lo, hi, *lo->memorability == *hi->memorability};
    return pair;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_scenes(size_t num_scenes, double ratio,
                                                                 uint64_t seed) {
    if (num_scenes < 2) fail(ErrorKind::contract, "need at least 2 scenes to split");
    if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorKind::contract, "split ratio must be in (0,1)");
    std::vector<size_t> order(num_scenes);
    for (size_t i = 0; i < num_scenes; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    size_t n_train = static_cast<size_t>(std::floor(ratio * static_cast<double>(num_scenes)));
    n_train = std::min(std::max<size_t>(n_train, 1), num_scenes - 1);
    std::vector<size_t> train(order.begin(), order.begin() + static_cast<ptrdiff_t>(n_train));
    std::vector<size_t> test(order.begin() + static_cast<ptrdiff_t>(n_train), order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

}  // namespace memsteer::bench
