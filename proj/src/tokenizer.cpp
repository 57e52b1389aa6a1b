#include "uid/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace uid {

namespace {

const char* kPad = "[PAD]";
const char* kUnk = "[UNK]";
const char* kCls = "[CLS]";

// Alphabet for synthetic non-alphanumeric tokens; excludes '[' and ']' so
// nothing can collide with the special token strings.
const std::string kSymbolAlphabet = "!#$%&()*+,-./:;<=>?@";

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> split_words(const std::string& text) {
    std::istringstream ss(text);
    std::vector<std::string> words;
    std::string w;
    while (ss >> w) words.push_back(lowercase(w));
    return words;
}

bool has_non_alnum(const std::string& s) {
    for (unsigned char c : s)
        if (!std::isalnum(c)) return true;
    return false;
}

// Deterministic stream of punctuation-only tokens: all strings over the
// symbol alphabet in order of increasing length, lexicographic within length.
std::vector<std::string> synthetic_symbols(long count) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<std::string> current;
    for (char c : kSymbolAlphabet) current.push_back(std::string(1, c));
    while (static_cast<long>(out.size()) < count) {
        for (const std::string& s : current) {
            out.push_back(s);
            if (static_cast<long>(out.size()) == count) return out;
        }
        std::vector<std::string> next;
        next.reserve(current.size() * kSymbolAlphabet.size());
        for (const std::string& s : current)
            for (char c : kSymbolAlphabet) next.push_back(s + c);
        current = std::move(next);
    }
    return out;
}

}  // namespace

const std::string& Vocabulary::token(TokenId id) const {
    if (id < 0 || id >= size())
        throw std::out_of_range("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                                std::to_string(size()));
    return tokens[static_cast<std::size_t>(id)];
}

Vocabulary build_vocab(const std::vector<std::string>& corpus, long max_size, long extra_symbol_budget) {
    std::map<std::string, long> freq;
    for (const std::string& doc : corpus)
        for (const std::string& w : split_words(doc)) ++freq[w];
    if (freq.empty()) throw std::invalid_argument("build_vocab: empty corpus");

    Vocabulary v;
    auto add = [&v](const std::string& tok) {
        if (v.token_to_id.count(tok)) return;
        v.token_to_id.emplace(tok, static_cast<TokenId>(v.tokens.size()));
        v.tokens.push_back(tok);
    };

    add(kPad);
    add(kUnk);
    add(kCls);
    for (char d = '0'; d <= '9'; ++d) add(std::string(1, d));
    for (const std::string& s : synthetic_symbols(extra_symbol_budget)) add(s);

    const long mandatory = static_cast<long>(v.tokens.size());
    if (max_size < mandatory)
        throw std::invalid_argument("build_vocab: max_size " + std::to_string(max_size) +
                                    " cannot hold the " + std::to_string(mandatory) + " mandatory tokens");

    // Corpus words by descending frequency, lexicographic tie-break.
    std::vector<std::pair<std::string, long>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (const auto& [word, count] : ranked) {
        if (static_cast<long>(v.tokens.size()) >= max_size) break;
        add(word);
    }

    std::vector<TokenId> digits;
    std::vector<TokenId> non_alnum;
    std::vector<TokenId> all;
    for (TokenId id = 0; id < v.size(); ++id) {
        if (v.is_special(id)) continue;
        const std::string& tok = v.tokens[static_cast<std::size_t>(id)];
        all.push_back(id);
        if (tok.size() == 1 && tok[0] >= '0' && tok[0] <= '9') digits.push_back(id);
        if (has_non_alnum(tok) && static_cast<long>(non_alnum.size()) < 400) non_alnum.push_back(id);
    }
    v.subsets[SubsetKind::Digits] = std::move(digits);
    v.subsets[SubsetKind::NonAlnum] = std::move(non_alnum);
    v.subsets[SubsetKind::All] = std::move(all);
    return v;
}

TokenSeq encode(const Vocabulary& vocab, const std::string& text) {
    TokenSeq seq;
    for (const std::string& w : split_words(text)) {
        auto it = vocab.token_to_id.find(w);
        seq.push_back(it == vocab.token_to_id.end() ? vocab.unk : it->second);
    }
    return seq;
}

std::string decode(const Vocabulary& vocab, const TokenSeq& seq) {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) out += ' ';
        out += vocab.token(seq[i]);
    }
    return out;
}

const std::vector<TokenId>& subset(const Vocabulary& vocab, SubsetKind kind) {
    return vocab.subsets.at(kind);
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
    nlohmann::json j;
    j["tokens"] = vocab.tokens;
    j["specials"] = {{"pad", vocab.pad}, {"unk", vocab.unk}, {"cls", vocab.cls}};
    j["subsets"] = {{"digits", vocab.subsets.at(SubsetKind::Digits)},
                    {"non_alnum", vocab.subsets.at(SubsetKind::NonAlnum)},
                    {"all", vocab.subsets.at(SubsetKind::All)}};
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_vocab: cannot open " + path);
    f << j.dump() << '\n';
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_vocab: cannot open " + path);
    nlohmann::json j;
    f >> j;
    Vocabulary v;
    v.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (TokenId id = 0; id < static_cast<TokenId>(v.tokens.size()); ++id)
        v.token_to_id.emplace(v.tokens[static_cast<std::size_t>(id)], id);
    v.pad = j.at("specials").at("pad").get<TokenId>();
    v.unk = j.at("specials").at("unk").get<TokenId>();
    v.cls = j.at("specials").at("cls").get<TokenId>();
    v.subsets[SubsetKind::Digits] = j.at("subsets").at("digits").get<std::vector<TokenId>>();
    v.subsets[SubsetKind::NonAlnum] = j.at("subsets").at("non_alnum").get<std::vector<TokenId>>();
    v.subsets[SubsetKind::All] = j.at("subsets").at("all").get<std::vector<TokenId>>();
    return v;
}

}  // namespace uid
