#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseac/nn/tensor.hpp"

namespace poseac::nn {

// Single-file checkpoint: "PCKP" magic, u32 version, u64 JSON header length,
// JSON header {meta, tensors:[{name, shape}]}, then raw little-endian float32
// blobs concatenated in header order.
struct Checkpoint {
    nlohmann::json meta;
    std::vector<std::pair<std::string, Tensor<float>>> tensors;

    const Tensor<float>& get(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// SHA-256 over the in-memory parameter values (name, shape, bytes) in order.
// Used to assert a frozen model never drifts during corrector training.
std::string params_hash(const std::vector<ParamRef<float>>& params);

}  // namespace poseac::nn
