#pragma once

#include <string>

#include "uid/identifiers.hpp"
#include "uid/tokenizer.hpp"

namespace uid {

enum class Placement { Prefix, Both };

std::string placement_name(Placement p);
Placement placement_from_name(const std::string& name);

struct Sample {
    UserId user;
    TokenSeq text;
    int label = 0;
    bool ambiguous = false;  // label depends on the user's persona
};

// Model input: [CLS, ident, content', ident?] with content truncated to the
// budget. Identifier tokens are never truncated. ident_len == 0 means a plain
// (unconditioned) input [CLS, content'].
struct AugmentedSample {
    UserId user;
    TokenSeq ids;
    int label = 0;
    long content_kept = 0;
    long ident_len = 0;
    Placement placement = Placement::Both;
    bool ambiguous = false;
};

// max(0, max_seq_len - CLS - copies * ident_len); copies is 1 for Prefix, 2 for Both.
long content_budget(long max_seq_len, long ident_len, Placement placement);

// Head-preserving truncation: keeps the earliest content tokens.
// Throws when the identifier alone does not fit in max_seq_len.
AugmentedSample augment(const Sample& sample, const UserIdentifier& ident, Placement placement,
                        long max_seq_len, TokenId cls_id);

// [CLS, content'] with `reserved` positions held back (used by the prefix-vector
// baseline, which inserts trained rows after CLS at forward time).
AugmentedSample plain_input(const Sample& sample, long max_seq_len, long reserved, TokenId cls_id);

}  // namespace uid
