#pragma once

#include <string>

#include "mip/model.hpp"
#include "mip/training.hpp"

namespace mip {

/// One self-contained configuration document covering every module.
/// Unknown keys are rejected; defaults fill anything omitted.
struct RunConfig {
    ModelSpec spec;    // model, encodings, clusterer, weights, loss
    TrainConfig train; // loop hyperparameters

    static RunConfig defaults();
    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
    std::string to_json_text() const;

    /// FNV-1a 64 over the canonical dump, as 16 hex chars.
    std::string hash() const;
};

uint64_t fnv1a64(const std::string& text);

} // namespace mip
