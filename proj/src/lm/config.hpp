#pragma once

#include <cstdint>

#include "lm/vocab.hpp"
#include "util/error.hpp"

namespace memsteer::lm {

struct ModelConfig {
    int num_layers = 4;
    int model_dim = 48;
    int num_heads = 4;
    int vocab_size = 0;        // set from the vocabulary file
    int max_seq_len = 64;
    int image_prefix_len = 6;  // visual tokens prepended after <bos>
    int feature_dim = 6;       // attribute count consumed by the image projection
    int64_t seed = 0;

    void validate() const {
        if (num_layers <= 0) fail(ErrorKind::contract, "num_layers must be positive");
        if (model_dim <= 0) fail(ErrorKind::contract, "model_dim must be positive");
        if (num_heads <= 0 || model_dim % num_heads != 0)
            fail(ErrorKind::contract, "num_heads must divide model_dim");
        if (vocab_size < num_special_tokens)
            fail(ErrorKind::contract, "vocab_size smaller than the special-token set");
        if (image_prefix_len < 0) fail(ErrorKind::contract, "image_prefix_len must be >= 0");
        if (image_prefix_len > 0 && feature_dim <= 0)
            fail(ErrorKind::contract, "feature_dim must be positive when images are enabled");
        if (max_seq_len < image_prefix_len + 2)
            fail(ErrorKind::contract, "max_seq_len must be >= image_prefix_len + 2");
    }
};

}  // namespace memsteer::lm
