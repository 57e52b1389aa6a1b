#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uid/tokenizer.hpp"

namespace uid {

using UserId = std::string;

enum class Scheme { Default, Num, RandDig, RandNon, RandAll };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

// Fixed, non-trainable token sequence identifying one user.
struct UserIdentifier {
    UserId user;
    TokenSeq ids;
    Scheme scheme = Scheme::RandAll;
};

struct IdentifierAssignment {
    std::map<UserId, UserIdentifier> by_user;
    Scheme scheme = Scheme::RandAll;
    long length = 0;
    std::uint64_t seed = 0;

    const UserIdentifier& of(const UserId& user) const;
    bool has(const UserId& user) const { return by_user.count(user) != 0; }
};

struct AssignOptions {
    bool enforce_unique = true;
    int max_retries = 100;
    // Required for Scheme::Default: user -> username text.
    std::optional<std::map<UserId, std::string>> usernames;
};

// Num: decimal index 1..N, one token per digit. Default: encoded username.
// Rand*: `length` i.i.d. uniform draws from the scheme's vocabulary subset,
// resampled on full-sequence duplicates when uniqueness is enforced.
IdentifierAssignment assign(const std::vector<UserId>& users, Scheme scheme, long length,
                            const Vocabulary& vocab, std::uint64_t seed,
                            const AssignOptions& opts = {});

// Birthday bound over the S^L sequence space without uniqueness enforcement:
// 1 - prod_{i=0}^{N-1} (1 - i / S^L). Exact integer-ratio arithmetic while the
// products fit in a double's 53-bit mantissa, log1p-space beyond that.
double collision_probability(long space_size, long length, long n_users);

// JSONL: one {"user":..., "scheme":..., "ids":[...]} record per user.
void save_assignment(const IdentifierAssignment& a, const std::string& path);
IdentifierAssignment load_assignment(const std::string& path);

}  // namespace uid
