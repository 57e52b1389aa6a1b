#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace uid {

using TokenId = int;
using TokenSeq = std::vector<TokenId>;

enum class SubsetKind { Digits, NonAlnum, All };

// Word-level vocabulary with dense ids. Immutable after construction.
// The three subsets are the identifier sampling spaces: the ten digits,
// up to 400 tokens containing non-alphanumeric characters, and every
// non-special token.
struct Vocabulary {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, TokenId> token_to_id;
    TokenId pad = 0;
    TokenId unk = 1;
    TokenId cls = 2;
    std::map<SubsetKind, std::vector<TokenId>> subsets;  // each sorted ascending

    long size() const { return static_cast<long>(tokens.size()); }
    bool is_special(TokenId id) const { return id == pad || id == unk || id == cls; }
    const std::string& token(TokenId id) const;
};

// Frequency-ordered vocabulary from whitespace-tokenized, lowercased text.
// The digit tokens "0".."9" and `extra_symbol_budget` synthetic punctuation
// tokens are always injected so the Digits and NonAlnum sampling spaces
// exist regardless of corpus content. Ties broken lexicographically.
Vocabulary build_vocab(const std::vector<std::string>& corpus, long max_size, long extra_symbol_budget);

// Whitespace tokens mapped to ids, lowercased; out-of-vocabulary words map to UNK.
TokenSeq encode(const Vocabulary& vocab, const std::string& text);

// Space-joined token strings. Throws on out-of-range ids.
std::string decode(const Vocabulary& vocab, const TokenSeq& seq);

const std::vector<TokenId>& subset(const Vocabulary& vocab, SubsetKind kind);

// JSON round-trip: {"tokens": [...], "specials": {...}, "subsets": {...}}.
void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

}  // namespace uid
