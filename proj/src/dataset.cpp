#include "codwoe/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "codwoe/error.hpp"
#include "codwoe/prng.hpp"
#include "codwoe/text.hpp"

namespace codwoe {

const char* to_string(Pos pos) {
    switch (pos) {
    case Pos::Noun: return "noun";
    case Pos::Verb: return "verb";
    case Pos::Adjective: return "adjective";
    case Pos::Adverb: return "adverb";
    }
    return "?";
}

const char* to_string(ArchTag tag) {
    switch (tag) {
    case ArchTag::Sgns: return "sgns";
    case ArchTag::Char: return "char";
    case ArchTag::Electra: return "electra";
    }
    return "?";
}

Pos parse_pos(const std::string& s) {
    if (s == "noun" || s == "n") return Pos::Noun;
    if (s == "verb" || s == "v") return Pos::Verb;
    if (s == "adjective" || s == "adj" || s == "a") return Pos::Adjective;
    if (s == "adverb" || s == "adv" || s == "r") return Pos::Adverb;
    throw Error("invalid pos value \"" + s + "\" (expected noun, verb, adjective or adverb)");
}

ArchTag parse_arch(const std::string& s) {
    if (s == "sgns") return ArchTag::Sgns;
    if (s == "char") return ArchTag::Char;
    if (s == "electra") return ArchTag::Electra;
    throw Error("unknown architecture tag \"" + s + "\" (expected sgns, char or electra)");
}

namespace {

// Blank after trimming Unicode whitespace.
bool is_blank(const std::string& s) { return split_words(s).empty(); }

std::string item_prefix(const std::string& origin, size_t index) {
    return origin + ": item " + std::to_string(index);
}

std::vector<double> parse_vector(const nlohmann::json& v, const std::string& where) {
    if (!v.is_array()) throw Error(where + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (size_t k = 0; k < v.size(); ++k) {
        if (!v[k].is_number())
            throw Error(where + ": non-numeric vector entry at position " + std::to_string(k));
        double x = v[k].get<double>();
        if (!std::isfinite(x))
            throw Error(where + ": non-finite vector entry at position " + std::to_string(k));
        out.push_back(x);
    }
    return out;
}

} // namespace

Dataset parse_dataset(const nlohmann::json& array, const std::string& origin) {
    if (!array.is_array()) throw Error(origin + ": expected a JSON array of objects");
    Dataset ds;
    std::set<std::string> seen_ids;
    for (size_t i = 0; i < array.size(); ++i) {
        const auto& obj = array[i];
        const std::string where = item_prefix(origin, i);
        if (!obj.is_object()) throw Error(where + ": expected a JSON object");

        DataPoint dp;
        for (const char* key : {"id", "word", "gloss", "pos"}) {
            if (!obj.contains(key)) throw Error(where + ": missing required key \"" + key + "\"");
            if (!obj[key].is_string())
                throw Error(where + ": key \"" + key + "\" must be a string");
        }
        dp.id = obj["id"].get<std::string>();
        dp.word = obj["word"].get<std::string>();
        dp.gloss = obj["gloss"].get<std::string>();
        try {
            dp.pos = parse_pos(obj["pos"].get<std::string>());
        } catch (const Error& e) {
            throw Error(where + ": " + e.what());
        }

        if (!seen_ids.insert(dp.id).second)
            throw Error(where + ": duplicate id \"" + dp.id + "\"");
        if (is_blank(dp.gloss)) throw Error(where + ": empty gloss");

        for (auto it = obj.begin(); it != obj.end(); ++it) {
            const std::string& key = it.key();
            if (key == "id" || key == "word" || key == "gloss" || key == "pos") continue;
            if (key == "sgns" || key == "char" || key == "electra") {
                ArchTag tag = parse_arch(key);
                auto vec = parse_vector(it.value(), where + " key \"" + key + "\"");
                auto dim_it = ds.declared_dim.find(tag);
                if (dim_it == ds.declared_dim.end()) {
                    ds.declared_dim[tag] = vec.size();
                } else if (dim_it->second != vec.size()) {
                    throw Error(where + " key \"" + key + "\": dimension mismatch (got " +
                                std::to_string(vec.size()) + ", expected " +
                                std::to_string(dim_it->second) + ")");
                }
                dp.embeddings[tag] = std::move(vec);
            } else {
                dp.extras[key] = it.value();
            }
        }
        ds.items.push_back(std::move(dp));
    }
    if (!ds.items.empty()) {
        const std::string& first = ds.items.front().id;
        auto dot = first.find('.');
        ds.language = dot == std::string::npos ? "" : first.substr(0, dot);
    }
    return ds;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open file");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(path + ": malformed JSON: " + e.what());
    }
    return parse_dataset(doc, path);
}

void validate_dataset(const Dataset& ds, const std::string& origin) {
    std::set<std::string> ids;
    std::map<ArchTag, size_t> dims = ds.declared_dim;
    for (size_t i = 0; i < ds.items.size(); ++i) {
        const auto& dp = ds.items[i];
        const std::string where = item_prefix(origin, i);
        if (!ids.insert(dp.id).second) throw Error(where + ": duplicate id \"" + dp.id + "\"");
        if (is_blank(dp.gloss)) throw Error(where + ": empty gloss");
        for (const auto& [tag, vec] : dp.embeddings) {
            for (size_t k = 0; k < vec.size(); ++k)
                if (!std::isfinite(vec[k]))
                    throw Error(where + " key \"" + std::string(to_string(tag)) +
                                "\": non-finite vector entry at position " + std::to_string(k));
            auto it = dims.find(tag);
            if (it == dims.end())
                throw Error(where + " key \"" + std::string(to_string(tag)) +
                            "\": architecture not in declared_dim");
            if (it->second != vec.size())
                throw Error(where + " key \"" + std::string(to_string(tag)) +
                            "\": dimension mismatch (got " + std::to_string(vec.size()) +
                            ", expected " + std::to_string(it->second) + ")");
        }
    }
}

nlohmann::ordered_json dataset_to_json(const Dataset& ds) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& dp : ds.items) {
        nlohmann::ordered_json obj;
        obj["id"] = dp.id;
        obj["word"] = dp.word;
        obj["gloss"] = dp.gloss;
        obj["pos"] = to_string(dp.pos);
        for (ArchTag tag : all_arch_tags()) {
            auto it = dp.embeddings.find(tag);
            if (it != dp.embeddings.end()) obj[to_string(tag)] = it->second;
        }
        for (auto it = dp.extras.begin(); it != dp.extras.end(); ++it) obj[it.key()] = it.value();
        arr.push_back(std::move(obj));
    }
    return arr;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot open file for writing");
    out << dataset_to_json(ds).dump(2) << "\n";
    if (!out) throw Error(path + ": write failed");
}

std::vector<CollisionPair> check_split_disjointness(const Dataset& a, const Dataset& b,
                                                    ArchTag tag, double tol) {
    if (!a.has_arch(tag))
        throw Error(std::string("architecture \"") + to_string(tag) + "\" absent from first dataset");
    if (!b.has_arch(tag))
        throw Error(std::string("architecture \"") + to_string(tag) + "\" absent from second dataset");

    std::vector<CollisionPair> collisions;
    for (size_t i = 0; i < a.items.size(); ++i) {
        auto ai = a.items[i].embeddings.find(tag);
        if (ai == a.items[i].embeddings.end()) continue;
        for (size_t j = 0; j < b.items.size(); ++j) {
            auto bj = b.items[j].embeddings.find(tag);
            if (bj == b.items[j].embeddings.end()) continue;
            if (ai->second.size() != bj->second.size()) continue;
            bool equal = true;
            for (size_t k = 0; k < ai->second.size() && equal; ++k) {
                if (tol == 0.0) {
                    equal = ai->second[k] == bj->second[k];
                } else {
                    equal = std::fabs(ai->second[k] - bj->second[k]) <= tol;
                }
            }
            if (equal) collisions.push_back({i, j, a.items[i].id, b.items[j].id});
        }
    }
    return collisions;
}

Dataset gen_synthetic(uint64_t seed, size_t n, size_t dim,
                      const std::vector<std::string>& vocab, const std::string& language,
                      const std::vector<ArchTag>& tags) {
    if (dim < 1) throw Error("gen_synthetic: dim must be >= 1");
    if (n > 0 && vocab.empty()) throw Error("gen_synthetic: empty vocab with n > 0");

    SplitMix64 rng(seed);
    Dataset ds;
    ds.language = language;
    for (ArchTag tag : tags) ds.declared_dim[tag] = dim;

    static const Pos kPos[4] = {Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb};
    for (size_t i = 0; i < n; ++i) {
        DataPoint dp;
        dp.id = language + "." + std::to_string(i);
        dp.word = vocab[rng.below(vocab.size())];
        dp.pos = kPos[rng.below(4)];
        size_t len = 2 + rng.below(29); // 2..30 tokens
        std::string gloss;
        for (size_t t = 0; t < len; ++t) {
            if (t) gloss += ' ';
            gloss += vocab[rng.below(vocab.size())];
        }
        dp.gloss = std::move(gloss);
        for (ArchTag tag : tags) {
            std::vector<double> vec(dim);
            for (size_t k = 0; k < dim; ++k) vec[k] = rng.normal();
            dp.embeddings[tag] = std::move(vec);
        }
        ds.items.push_back(std::move(dp));
    }
    return ds;
}

} // namespace codwoe
