#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uid/augment.hpp"
#include "uid/tokenizer.hpp"

namespace uid {

enum class Persona { Literal, Sarcastic, Apathetic };

std::string persona_name(Persona p);

struct UserProfile {
    UserId user;
    Persona persona = Persona::Literal;
    long n_samples = 0;
};

struct SyntheticConfig {
    long n_users = 20;
    long samples_per_user = 100;
    double ambiguous_fraction = 0.5;
    int n_classes = 2;
    // Filler-token count per sample; longer texts make truncation bite.
    long text_len_min = 6;
    long text_len_max = 12;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    std::vector<Sample> samples;
    std::vector<UserProfile> profiles;
};

// Every word the generator can emit; build the vocabulary from this.
std::vector<std::string> synthetic_lexicon(int n_classes);

// Heterogeneous per-user data: unambiguous samples carry class cue words with
// persona-independent labels; ambiguous samples share one cue phrase whose
// label is a fixed function of the user's persona, capping any user-agnostic
// classifier on that subset.
SyntheticData gen_synthetic(const SyntheticConfig& cfg, const Vocabulary& vocab);

// The label the generator gives a persona's ambiguous samples.
int persona_label(Persona p, int n_classes);

// Keeps the users whose majority-class fraction is >= threshold. Binary labels only.
std::vector<Sample> skew_filter(const std::vector<Sample>& samples, double threshold);

struct SplitDataset {
    std::vector<Sample> train, val, test;
};

// Per-user shuffled partition. For n >= 3 samples, val and test each get
// max(1, floor(ratio * n)); smaller users go entirely to train.
SplitDataset split_per_user(const std::vector<Sample>& samples, std::array<double, 3> ratios,
                            std::uint64_t seed);

// JSONL corpus records: {"user": ..., "text": ..., "label": ..., "ambiguous": ...}
// ("ambiguous" optional, default false).
struct RawRecord {
    std::string user;
    std::string text;
    int label = 0;
    bool ambiguous = false;
};

std::vector<RawRecord> load_jsonl(const std::string& path);
void save_jsonl(const std::string& path, const std::vector<RawRecord>& records);

std::vector<Sample> encode_records(const std::vector<RawRecord>& records, const Vocabulary& vocab);
std::vector<RawRecord> decode_samples(const std::vector<Sample>& samples, const Vocabulary& vocab);

std::vector<UserId> distinct_users(const std::vector<Sample>& samples);  // sorted

}  // namespace uid
