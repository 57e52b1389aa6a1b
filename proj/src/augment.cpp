#include "uid/augment.hpp"

#include <algorithm>
#include <stdexcept>

namespace uid {

std::string placement_name(Placement p) { return p == Placement::Prefix ? "prefix" : "both"; }

Placement placement_from_name(const std::string& name) {
    if (name == "prefix") return Placement::Prefix;
    if (name == "both") return Placement::Both;
    throw std::invalid_argument("unknown placement: " + name);
}

long content_budget(long max_seq_len, long ident_len, Placement placement) {
    const long copies = placement == Placement::Both ? 2 : 1;
    return std::max<long>(0, max_seq_len - 1 - copies * ident_len);
}

AugmentedSample augment(const Sample& sample, const UserIdentifier& ident, Placement placement,
                        long max_seq_len, TokenId cls_id) {
    const long ident_len = static_cast<long>(ident.ids.size());
    const long copies = placement == Placement::Both ? 2 : 1;
    if (1 + copies * ident_len > max_seq_len)
        throw std::invalid_argument("augment: identifier of length " + std::to_string(ident_len) + " (x" +
                                    std::to_string(copies) + ") does not fit in max_seq_len " +
                                    std::to_string(max_seq_len));
    const long budget = content_budget(max_seq_len, ident_len, placement);
    const long kept = std::min<long>(budget, static_cast<long>(sample.text.size()));

    AugmentedSample out;
    out.user = sample.user;
    out.label = sample.label;
    out.ambiguous = sample.ambiguous;
    out.content_kept = kept;
    out.ident_len = ident_len;
    out.placement = placement;
    out.ids.reserve(static_cast<std::size_t>(1 + copies * ident_len + kept));
    out.ids.push_back(cls_id);
    out.ids.insert(out.ids.end(), ident.ids.begin(), ident.ids.end());
    out.ids.insert(out.ids.end(), sample.text.begin(), sample.text.begin() + kept);
    if (placement == Placement::Both) out.ids.insert(out.ids.end(), ident.ids.begin(), ident.ids.end());
    return out;
}

AugmentedSample plain_input(const Sample& sample, long max_seq_len, long reserved, TokenId cls_id) {
    if (1 + reserved > max_seq_len)
        throw std::invalid_argument("plain_input: reserved length " + std::to_string(reserved) +
                                    " does not fit in max_seq_len " + std::to_string(max_seq_len));
    const long budget = max_seq_len - 1 - reserved;
    const long kept = std::min<long>(budget, static_cast<long>(sample.text.size()));

    AugmentedSample out;
    out.user = sample.user;
    out.label = sample.label;
    out.ambiguous = sample.ambiguous;
    out.content_kept = kept;
    out.ident_len = 0;
    out.placement = Placement::Prefix;
    out.ids.reserve(static_cast<std::size_t>(1 + kept));
    out.ids.push_back(cls_id);
    out.ids.insert(out.ids.end(), sample.text.begin(), sample.text.begin() + kept);
    return out;
}

}  // namespace uid
