#include "codwoe/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "codwoe/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; add byte swapping for this platform");

namespace codwoe {

Checkpoint checkpoint_from_params(nlohmann::ordered_json header, const NamedParams& params) {
    Checkpoint ckpt;
    auto list = nlohmann::ordered_json::array();
    for (const auto& [name, tensor] : params) {
        list.push_back({{"name", name}, {"shape", {tensor->rows(), tensor->cols()}}});
        ckpt.values.insert(ckpt.values.end(), tensor->value.begin(), tensor->value.end());
    }
    header["params"] = std::move(list);
    ckpt.header = std::move(header);
    return ckpt;
}

void load_params_from_checkpoint(const Checkpoint& ckpt, const NamedParams& params) {
    const auto& list = ckpt.header.at("params");
    if (list.size() != params.size())
        throw Error("checkpoint: expected " + std::to_string(params.size()) + " parameters, file has " +
                    std::to_string(list.size()));
    size_t offset = 0;
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& [name, tensor] = params[i];
        if (list[i].at("name").get<std::string>() != name)
            throw Error("checkpoint: parameter " + std::to_string(i) + " is \"" +
                        list[i].at("name").get<std::string>() + "\", model expects \"" + name + "\"");
        size_t r = list[i].at("shape")[0].get<size_t>();
        size_t c = list[i].at("shape")[1].get<size_t>();
        if (r != tensor->rows() || c != tensor->cols())
            throw Error("checkpoint: shape mismatch for \"" + name + "\"");
        if (offset + r * c > ckpt.values.size()) throw Error("checkpoint: parameter block truncated");
        std::copy(ckpt.values.begin() + static_cast<long>(offset),
                  ckpt.values.begin() + static_cast<long>(offset + r * c), tensor->value.begin());
        offset += r * c;
    }
    if (offset != ckpt.values.size())
        throw Error("checkpoint: trailing parameter data (" + std::to_string(ckpt.values.size() - offset) +
                    " extra values)");
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(path + ": cannot open file for writing");
    out << ckpt.header.dump() << "\n";
    out.write(reinterpret_cast<const char*>(ckpt.values.data()),
              static_cast<std::streamsize>(ckpt.values.size() * sizeof(double)));
    if (!out) throw Error(path + ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(path + ": cannot open file");
    std::string header_line;
    if (!std::getline(in, header_line)) throw Error(path + ": missing checkpoint header");
    Checkpoint ckpt;
    try {
        ckpt.header = nlohmann::ordered_json::parse(header_line);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(path + ": malformed checkpoint header: " + e.what());
    }
    size_t expected = 0;
    for (const auto& p : ckpt.header.at("params"))
        expected += p.at("shape")[0].get<size_t>() * p.at("shape")[1].get<size_t>();
    ckpt.values.resize(expected);
    in.read(reinterpret_cast<char*>(ckpt.values.data()),
            static_cast<std::streamsize>(expected * sizeof(double)));
    if (static_cast<size_t>(in.gcount()) != expected * sizeof(double))
        throw Error(path + ": parameter block truncated");
    return ckpt;
}

} // namespace codwoe
