#include "codwoe/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "codwoe/error.hpp"
#include "codwoe/text.hpp"

namespace codwoe {

namespace {

constexpr char kSep = '\x1F';

std::string pair_key(const std::string& a, const std::string& b) { return a + kSep + b; }

// Initial symbol sequence of a word: code points, with the word-end marker
// fused onto the last one.
std::vector<std::string> word_symbols(const std::string& word) {
    std::vector<std::string> sym = utf8_chars(word);
    if (!sym.empty()) sym.back() += SubwordVocab::kWordEnd;
    return sym;
}

} // namespace

void SubwordVocab::rebuild_tables() {
    id_to_token.assign({"<pad>", "<unk>", "<bos>", "<eos>"});
    token_to_id.clear();
    pair_rank.clear();
    for (const std::string& s : alphabet) id_to_token.push_back(s);
    for (size_t r = 0; r < merges.size(); ++r) {
        id_to_token.push_back(merges[r].first + merges[r].second);
        pair_rank[pair_key(merges[r].first, merges[r].second)] = static_cast<int>(r);
    }
    for (size_t i = 0; i < id_to_token.size(); ++i)
        token_to_id.emplace(id_to_token[i], static_cast<int>(i));
}

SubwordVocab train_tokenizer(const std::vector<std::string>& corpus, size_t vocab_size) {
    // Word frequency table over the whole corpus.
    std::map<std::string, long long> word_freq;
    for (const std::string& gloss : corpus)
        for (const std::string& w : split_words(gloss)) ++word_freq[w];
    if (word_freq.empty()) throw Error("train_tokenizer: empty corpus");

    std::vector<std::pair<std::vector<std::string>, long long>> words;
    std::set<std::string> alphabet_set;
    for (const auto& [w, freq] : word_freq) {
        auto sym = word_symbols(w);
        for (const auto& s : sym) alphabet_set.insert(s);
        words.emplace_back(std::move(sym), freq);
    }

    SubwordVocab vocab;
    vocab.alphabet.assign(alphabet_set.begin(), alphabet_set.end());
    if (vocab_size < 4 + vocab.alphabet.size())
        throw Error("train_tokenizer: vocab_size " + std::to_string(vocab_size) +
                    " too small (need at least 4 specials + " +
                    std::to_string(vocab.alphabet.size()) + " alphabet symbols)");

    size_t current = 4 + vocab.alphabet.size();
    while (current < vocab_size) {
        std::map<std::pair<std::string, std::string>, long long> pair_freq;
        for (const auto& [sym, freq] : words)
            for (size_t i = 0; i + 1 < sym.size(); ++i)
                pair_freq[{sym[i], sym[i + 1]}] += freq;

        // std::map iteration order makes the tie-break lexicographic.
        std::pair<std::string, std::string> best;
        long long best_freq = 0;
        for (const auto& [p, f] : pair_freq) {
            if (f > best_freq) {
                best = p;
                best_freq = f;
            }
        }
        if (best_freq < 2) break;

        const std::string merged = best.first + best.second;
        for (auto& [sym, freq] : words) {
            for (size_t i = 0; i + 1 < sym.size();) {
                if (sym[i] == best.first && sym[i + 1] == best.second) {
                    sym[i] = merged;
                    sym.erase(sym.begin() + static_cast<long>(i) + 1);
                } else {
                    ++i;
                }
            }
        }
        vocab.merges.push_back(std::move(best));
        ++current;
    }
    vocab.rebuild_tables();
    return vocab;
}

std::vector<int> encode(const SubwordVocab& vocab, const std::string& text) {
    std::vector<int> ids;
    for (const std::string& word : split_words(text)) {
        std::vector<std::string> sym = word_symbols(word);
        // Apply merges in rank order: repeatedly merge the lowest-ranked
        // adjacent pair present.
        while (sym.size() > 1) {
            int best_rank = -1;
            size_t best_pos = 0;
            for (size_t i = 0; i + 1 < sym.size(); ++i) {
                auto it = vocab.pair_rank.find(pair_key(sym[i], sym[i + 1]));
                if (it != vocab.pair_rank.end() && (best_rank < 0 || it->second < best_rank)) {
                    best_rank = it->second;
                    best_pos = i;
                }
            }
            if (best_rank < 0) break;
            sym[best_pos] += sym[best_pos + 1];
            sym.erase(sym.begin() + static_cast<long>(best_pos) + 1);
        }
        for (const std::string& s : sym) {
            auto it = vocab.token_to_id.find(s);
            ids.push_back(it == vocab.token_to_id.end() ? SubwordVocab::kUnk : it->second);
        }
    }
    return ids;
}

std::string decode(const SubwordVocab& vocab, const std::vector<int>& ids) {
    static const std::string kReplacement = "\xEF\xBF\xBD"; // U+FFFD
    const std::string marker = SubwordVocab::kWordEnd;
    std::string out;
    for (int id : ids) {
        if (id == SubwordVocab::kPad || id == SubwordVocab::kBos || id == SubwordVocab::kEos)
            continue;
        if (id == SubwordVocab::kUnk) {
            out += kReplacement;
            continue;
        }
        if (id < 0 || static_cast<size_t>(id) >= vocab.id_to_token.size())
            throw Error("decode: id " + std::to_string(id) + " out of range");
        const std::string& tok = vocab.id_to_token[static_cast<size_t>(id)];
        // A genuine word-end marker is always a strict suffix of its token.
        if (tok.size() > marker.size() && tok.ends_with(marker)) {
            out.append(tok, 0, tok.size() - marker.size());
            out += ' ';
        } else {
            out += tok;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

nlohmann::ordered_json vocab_to_json(const SubwordVocab& vocab) {
    nlohmann::ordered_json doc;
    doc["merges"] = vocab.merges;
    doc["specials"] = {{"pad", SubwordVocab::kPad},
                       {"unk", SubwordVocab::kUnk},
                       {"bos", SubwordVocab::kBos},
                       {"eos", SubwordVocab::kEos}};
    doc["alphabet"] = vocab.alphabet;
    return doc;
}

SubwordVocab vocab_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("merges") || !doc.contains("alphabet"))
        throw Error("vocabulary JSON must contain \"merges\" and \"alphabet\"");
    SubwordVocab vocab;
    for (const auto& m : doc["merges"]) {
        if (!m.is_array() || m.size() != 2)
            throw Error("vocabulary JSON: each merge must be a pair of strings");
        vocab.merges.emplace_back(m[0].get<std::string>(), m[1].get<std::string>());
    }
    for (const auto& s : doc["alphabet"]) vocab.alphabet.push_back(s.get<std::string>());
    vocab.rebuild_tables();
    return vocab;
}

SubwordVocab load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open file");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(path + ": malformed JSON: " + e.what());
    }
    return vocab_from_json(doc);
}

void save_vocab(const SubwordVocab& vocab, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot open file for writing");
    out << vocab_to_json(vocab).dump(2) << "\n";
    if (!out) throw Error(path + ": write failed");
}

} // namespace codwoe
