#include "uid/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "uid/rng.hpp"

namespace uid {

namespace {

const std::vector<std::string> kFillers = {
    "the", "a",   "it",   "was",  "is",    "so",   "very", "really", "just", "quite",
    "that", "of", "and",  "to",   "in",    "day",  "movie", "time",  "thing", "one"};

// Shared cue of every ambiguous sample; its label depends on the author's persona.
const std::vector<std::string> kAmbiguousPhrase = {"that", "is", "just", "great"};

std::vector<std::string> class_cues(int cls) {
    switch (cls) {
        case 0: return {"awful", "terrible", "dreadful"};
        case 1: return {"wonderful", "excellent", "superb"};
        case 2: return {"mediocre", "passable", "indifferent"};
        default: {
            const std::string base = "cue" + std::to_string(cls);
            return {base + "a", base + "b", base + "c"};
        }
    }
}

TokenId word_id(const Vocabulary& vocab, const std::string& w) {
    auto it = vocab.token_to_id.find(w);
    if (it == vocab.token_to_id.end())
        throw std::runtime_error("gen_synthetic: vocabulary is missing generator word '" + w + "'");
    return it->second;
}

Persona persona_of(long user_index, int n_classes) {
    if (n_classes == 2) return user_index % 2 == 0 ? Persona::Literal : Persona::Sarcastic;
    switch (user_index % 3) {
        case 0: return Persona::Literal;
        case 1: return Persona::Sarcastic;
        default: return Persona::Apathetic;
    }
}

}  // namespace

std::string persona_name(Persona p) {
    switch (p) {
        case Persona::Literal: return "literal";
        case Persona::Sarcastic: return "sarcastic";
        case Persona::Apathetic: return "apathetic";
    }
    throw std::logic_error("unknown persona");
}

int persona_label(Persona p, int n_classes) {
    switch (p) {
        case Persona::Literal: return 1;
        case Persona::Sarcastic: return 0;
        case Persona::Apathetic: return n_classes >= 3 ? 2 : 0;
    }
    throw std::logic_error("unknown persona");
}

std::vector<std::string> synthetic_lexicon(int n_classes) {
    std::vector<std::string> words = kFillers;
    for (const std::string& w : kAmbiguousPhrase)
        if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
    for (int c = 0; c < n_classes; ++c)
        for (const std::string& w : class_cues(c)) words.push_back(w);
    return words;
}

SyntheticData gen_synthetic(const SyntheticConfig& cfg, const Vocabulary& vocab) {
    if (cfg.n_users < 2) throw std::invalid_argument("gen_synthetic: need at least 2 users");
    if (cfg.n_classes < 2) throw std::invalid_argument("gen_synthetic: need at least 2 classes");
    if (cfg.ambiguous_fraction < 0.0 || cfg.ambiguous_fraction > 1.0)
        throw std::invalid_argument("gen_synthetic: ambiguous_fraction must be in [0, 1]");
    if (cfg.samples_per_user < 1) throw std::invalid_argument("gen_synthetic: need at least 1 sample per user");
    if (cfg.text_len_min < 1 || cfg.text_len_max < cfg.text_len_min)
        throw std::invalid_argument("gen_synthetic: bad text length range");

    const int user_width = static_cast<int>(std::to_string(cfg.n_users - 1).size());

    SyntheticData out;
    Rng master(cfg.seed);
    for (long u = 0; u < cfg.n_users; ++u) {
        Rng rng(master.derive(static_cast<std::uint64_t>(u)));
        std::string id = std::to_string(u);
        id = "user" + std::string(static_cast<std::size_t>(user_width) - id.size(), '0') + id;
        const Persona persona = persona_of(u, cfg.n_classes);
        out.profiles.push_back({id, persona, cfg.samples_per_user});

        const long n_amb = std::lround(cfg.ambiguous_fraction * static_cast<double>(cfg.samples_per_user));
        std::vector<char> is_amb(static_cast<std::size_t>(cfg.samples_per_user), 0);
        std::fill(is_amb.begin(), is_amb.begin() + n_amb, 1);
        rng.shuffle(is_amb);

        for (long s = 0; s < cfg.samples_per_user; ++s) {
            const long n_fill = cfg.text_len_min + static_cast<long>(rng.uniform_below(
                                                       static_cast<std::uint64_t>(cfg.text_len_max - cfg.text_len_min + 1)));
            std::vector<std::string> words;
            words.reserve(static_cast<std::size_t>(n_fill + 4));
            for (long i = 0; i < n_fill; ++i)
                words.push_back(kFillers[static_cast<std::size_t>(rng.uniform_below(kFillers.size()))]);

            Sample sample;
            sample.user = id;
            if (is_amb[static_cast<std::size_t>(s)]) {
                sample.ambiguous = true;
                sample.label = persona_label(persona, cfg.n_classes);
                const std::size_t pos = static_cast<std::size_t>(rng.uniform_below(words.size() + 1));
                words.insert(words.begin() + static_cast<long>(pos), kAmbiguousPhrase.begin(), kAmbiguousPhrase.end());
            } else {
                sample.ambiguous = false;
                sample.label = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg.n_classes)));
                const std::vector<std::string> cues = class_cues(sample.label);
                for (int k = 0; k < 2; ++k) {
                    const std::string& cue = cues[static_cast<std::size_t>(rng.uniform_below(cues.size()))];
                    const std::size_t pos = static_cast<std::size_t>(rng.uniform_below(words.size() + 1));
                    words.insert(words.begin() + static_cast<long>(pos), cue);
                }
            }
            sample.text.reserve(words.size());
            for (const std::string& w : words) sample.text.push_back(word_id(vocab, w));
            out.samples.push_back(std::move(sample));
        }
    }
    return out;
}

std::vector<Sample> skew_filter(const std::vector<Sample>& samples, double threshold) {
    if (!(threshold > 0.5) || !(threshold <= 1.0))
        throw std::invalid_argument("skew_filter: threshold must be in (0.5, 1]");
    std::map<UserId, std::array<long, 2>> counts;
    for (const Sample& s : samples) {
        if (s.label != 0 && s.label != 1)
            throw std::invalid_argument("skew_filter: labels must be binary, saw " + std::to_string(s.label));
        ++counts[s.user][static_cast<std::size_t>(s.label)];
    }
    std::set<UserId> keep;
    for (const auto& [user, c] : counts) {
        const double majority = static_cast<double>(std::max(c[0], c[1]));
        if (majority / static_cast<double>(c[0] + c[1]) >= threshold) keep.insert(user);
    }
    std::vector<Sample> out;
    for (const Sample& s : samples)
        if (keep.count(s.user)) out.push_back(s);
    return out;
}

SplitDataset split_per_user(const std::vector<Sample>& samples, std::array<double, 3> ratios,
                            std::uint64_t seed) {
    if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
        throw std::invalid_argument("split_per_user: ratios must sum to 1");
    std::map<UserId, std::vector<std::size_t>> by_user;
    for (std::size_t i = 0; i < samples.size(); ++i) by_user[samples[i].user].push_back(i);

    SplitDataset out;
    Rng master(seed);
    for (auto& [user, idx] : by_user) {
        Rng rng(master.derive(std::hash<std::string>{}(user)));
        rng.shuffle(idx);
        const long n = static_cast<long>(idx.size());
        long n_val = 0, n_test = 0;
        if (n >= 3) {
            n_val = std::max<long>(1, static_cast<long>(std::floor(ratios[1] * static_cast<double>(n))));
            n_test = std::max<long>(1, static_cast<long>(std::floor(ratios[2] * static_cast<double>(n))));
        }
        for (long i = 0; i < n; ++i) {
            const Sample& s = samples[idx[static_cast<std::size_t>(i)]];
            if (i < n_test)
                out.test.push_back(s);
            else if (i < n_test + n_val)
                out.val.push_back(s);
            else
                out.train.push_back(s);
        }
    }
    return out;
}

std::vector<RawRecord> load_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_jsonl: cannot open " + path);
    std::vector<RawRecord> out;
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            RawRecord r;
            r.user = j.at("user").get<std::string>();
            r.text = j.at("text").get<std::string>();
            r.label = j.at("label").get<int>();
            r.ambiguous = j.value("ambiguous", false);
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("load_jsonl: " + path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void save_jsonl(const std::string& path, const std::vector<RawRecord>& records) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_jsonl: cannot open " + path);
    for (const RawRecord& r : records) {
        nlohmann::json j;
        j["user"] = r.user;
        j["text"] = r.text;
        j["label"] = r.label;
        j["ambiguous"] = r.ambiguous;
        f << j.dump() << '\n';
    }
}

std::vector<Sample> encode_records(const std::vector<RawRecord>& records, const Vocabulary& vocab) {
    std::vector<Sample> out;
    out.reserve(records.size());
    for (const RawRecord& r : records)
        out.push_back(Sample{r.user, encode(vocab, r.text), r.label, r.ambiguous});
    return out;
}

std::vector<RawRecord> decode_samples(const std::vector<Sample>& samples, const Vocabulary& vocab) {
    std::vector<RawRecord> out;
    out.reserve(samples.size());
    for (const Sample& s : samples)
        out.push_back(RawRecord{s.user, decode(vocab, s.text), s.label, s.ambiguous});
    return out;
}

std::vector<UserId> distinct_users(const std::vector<Sample>& samples) {
    std::set<UserId> set;
    for (const Sample& s : samples) set.insert(s.user);
    return std::vector<UserId>(set.begin(), set.end());
}

}  // namespace uid
