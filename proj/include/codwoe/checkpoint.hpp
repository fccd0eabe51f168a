#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "codwoe/layers.hpp"

namespace codwoe {

// On-disk model format: one line of JSON (kind, config, tokenizer, parameter
// names + shapes, seed), then a newline, then the raw little-endian float64
// parameter blocks concatenated in the declared order.
struct Checkpoint {
    nlohmann::ordered_json header;
    std::vector<double> values;
};

Checkpoint checkpoint_from_params(nlohmann::ordered_json header, const NamedParams& params);
void load_params_from_checkpoint(const Checkpoint& ckpt, const NamedParams& params);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

} // namespace codwoe
