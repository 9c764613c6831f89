#pragma once

#include <filesystem>

#include "steer/contrast.hpp"

namespace memsteer::steer {

// Reference operating point for full-scale backbones (13+ blocks). Toy-scale
// runs pick layer = ceil(L/2) and sweep alpha on held-out scenes instead.
inline constexpr int large_backbone_steering_layer = 12;
inline constexpr double large_backbone_steering_alpha = 55.0;

enum class Pooling : uint8_t { assistant_mean = 0, last_token = 1 };
enum class Variant : uint8_t { mean_of_diffs = 0, diff_of_means = 1 };

std::string_view pooling_name(Pooling p);
Pooling pooling_from_name(std::string_view name);

struct SteeringVector {
    int layer = 0;
    std::vector<double> direction;
    uint32_t num_pairs = 0;
    Pooling pooling = Pooling::assistant_mean;
    Variant variant = Variant::mean_of_diffs;
    uint64_t dataset_hash = 0;
    int64_t seed = 0;
};

// Renders (image, prompt, feedback-in-the-assistant-turn) ready for capture.
lm::RenderedChat render_steering_input(const lm::ModelConfig& config,
                                       const bench::ImageRecord& image,
                                       std::span<const int> prompt,
                                       std::span<const int> feedback);

// Forward with a capture hook at `layer`, pooled over the assistant content
// span (arithmetic mean, or the final position for last_token).
std::vector<double> capture_pooled_activation(const lm::Model& m, const lm::RenderedChat& input,
                                              int layer, Pooling pooling);

// Stable content hash of a pair set, recorded as vector provenance.
uint64_t contrast_dataset_hash(std::span<const ContrastPair> pairs);

// Mean over pairs of (aware - neutral) pooled activations at `layer`. Pairs
// are reduced in scene_id order so the result is independent of input order.
SteeringVector extract_steering_vector(std::span<const ContrastPair> pairs, const lm::Model& m,
                                       int layer, Pooling pooling = Pooling::assistant_mean);

// Ablation estimator: pools token-level activations across the whole aware
// set (length-weighted), likewise for neutral, then subtracts. Coincides with
// extract_steering_vector when all assistant spans share one length.
SteeringVector extract_diff_of_means(std::span<const ContrastPair> pairs, const lm::Model& m,
                                     int layer);

inline constexpr char vector_magic[] = "MEMSTEER-VEC";  // written with its NUL terminator
inline constexpr uint32_t vector_format_version = 1;

void save_vector(const SteeringVector& v, const std::filesystem::path& path);
SteeringVector load_vector(const std::filesystem::path& path);

struct SteeringConfig {
    double alpha = 0.0;
    int layer = 0;
    lm::HookPositions positions = lm::HookPositions::all;
};

// Greedy grammar-constrained generation with alpha * direction injected at
// the configured layer and positions.
std::vector<int> steered_generate(const lm::Model& m, const bench::FeedbackGrammar& grammar,
                                  const bench::ImageRecord& image, std::span<const int> prompt,
                                  const SteeringVector& vec, const SteeringConfig& config,
                                  const lm::GenParams& gen);

}  // namespace memsteer::steer
