#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace codwoe {

// Byte-pair subword vocabulary. Words are whitespace-split; the word-end
// marker "</w>" is fused onto each word's final character before merging, so
// an encoding never has more ids than the input has characters. Ids are
// dense: specials 0..3, then the alphabet in sorted order, then one id per
// merge in rank order.
struct SubwordVocab {
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;
    static constexpr const char* kWordEnd = "</w>";

    std::vector<std::pair<std::string, std::string>> merges;
    std::vector<std::string> alphabet;        // sorted initial symbols
    std::vector<std::string> id_to_token;     // dense table, specials first
    std::unordered_map<std::string, int> token_to_id;
    std::unordered_map<std::string, int> pair_rank; // "a\x1Fb" -> merge rank

    size_t size() const { return id_to_token.size(); }
    void rebuild_tables(); // recompute id maps from merges + alphabet
};

// Greedy highest-frequency pair merging until vocab_size ids exist or no
// pair occurs at least twice. Ties break to the lexicographically smallest
// pair. Deterministic given corpus order.
SubwordVocab train_tokenizer(const std::vector<std::string>& corpus, size_t vocab_size);

// No bos/eos added; characters outside the alphabet map to unk.
std::vector<int> encode(const SubwordVocab& vocab, const std::string& text);

// Inverse of encode on alphabet-covered text; specials render as empty, unk
// as U+FFFD. Words come back single-space separated.
std::string decode(const SubwordVocab& vocab, const std::vector<int>& ids);

nlohmann::ordered_json vocab_to_json(const SubwordVocab& vocab);
SubwordVocab vocab_from_json(const nlohmann::json& doc);
SubwordVocab load_vocab(const std::string& path);
void save_vocab(const SubwordVocab& vocab, const std::string& path);

} // namespace codwoe
