#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace codwoe {

enum class Pos { Noun, Verb, Adjective, Adverb };

enum class ArchTag { Sgns, Char, Electra };

const char* to_string(Pos pos);
const char* to_string(ArchTag tag);
Pos parse_pos(const std::string& s);        // accepts long names and n/v/a/adj/adv/r
ArchTag parse_arch(const std::string& s);   // sgns | char | electra

inline const std::vector<ArchTag>& all_arch_tags() {
    static const std::vector<ArchTag> tags{ArchTag::Sgns, ArchTag::Char, ArchTag::Electra};
    return tags;
}

// One dictionary entry: identifier, definiendum, gloss, part of speech and
// the per-architecture embedding vectors present in the file.
struct DataPoint {
    std::string id;
    std::string word;
    std::string gloss;
    Pos pos = Pos::Noun;
    std::map<ArchTag, std::vector<double>> embeddings;
    nlohmann::ordered_json extras = nlohmann::ordered_json::object(); // unknown keys, kept on write

    bool has(ArchTag tag) const { return embeddings.count(tag) != 0; }
};

struct Dataset {
    std::vector<DataPoint> items;
    std::string language;                 // inferred from the id prefix, e.g. "it" from "it.42"
    std::map<ArchTag, size_t> declared_dim;

    bool has_arch(ArchTag tag) const { return declared_dim.count(tag) != 0; }
    size_t size() const { return items.size(); }
};

// Parses and validates a dataset: a JSON array of objects with keys
// "id", "word", "gloss", "pos" and any subset of {"sgns","char","electra"}.
// Violations are reported with the item index and key name.
Dataset load_dataset(const std::string& path);
Dataset parse_dataset(const nlohmann::json& array, const std::string& origin);

// Re-checks all invariants of an in-memory dataset.
void validate_dataset(const Dataset& ds, const std::string& origin = "dataset");

// Serialization writes keys in the order id, word, gloss, pos, sgns, char,
// electra, then any extras.
nlohmann::ordered_json dataset_to_json(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::string& path);

struct CollisionPair {
    size_t index_a = 0;
    size_t index_b = 0;
    std::string id_a;
    std::string id_b;
};

// Every pair (i in a, j in b) whose `tag` vectors agree component-wise within
// tol. tol == 0 means exact equality; the task's splits are cut from one
// embedding table, so duplicates are exact when present.
std::vector<CollisionPair> check_split_disjointness(const Dataset& a, const Dataset& b,
                                                    ArchTag tag, double tol = 0.0);

// Deterministic synthetic dataset: glosses of 2..30 tokens drawn from vocab,
// embeddings i.i.d. standard normal, everything from the pinned SplitMix64
// stream of `seed`.
Dataset gen_synthetic(uint64_t seed, size_t n, size_t dim,
                      const std::vector<std::string>& vocab,
                      const std::string& language = "en",
                      const std::vector<ArchTag>& tags = all_arch_tags());

} // namespace codwoe
