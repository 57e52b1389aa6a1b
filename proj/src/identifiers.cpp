#include "uid/identifiers.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "uid/rng.hpp"

namespace uid {

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Default: return "default";
        case Scheme::Num: return "num";
        case Scheme::RandDig: return "rand_dig";
        case Scheme::RandNon: return "rand_non";
        case Scheme::RandAll: return "rand_all";
    }
    throw std::logic_error("unknown scheme");
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "default") return Scheme::Default;
    if (name == "num") return Scheme::Num;
    if (name == "rand_dig") return Scheme::RandDig;
    if (name == "rand_non") return Scheme::RandNon;
    if (name == "rand_all") return Scheme::RandAll;
    throw std::invalid_argument("unknown identifier scheme: " + name);
}

const UserIdentifier& IdentifierAssignment::of(const UserId& user) const {
    auto it = by_user.find(user);
    if (it == by_user.end()) throw std::runtime_error("no identifier assigned for user " + user);
    return it->second;
}

namespace {

SubsetKind subset_for(Scheme s) {
    switch (s) {
        case Scheme::RandDig: return SubsetKind::Digits;
        case Scheme::RandNon: return SubsetKind::NonAlnum;
        case Scheme::RandAll: return SubsetKind::All;
        default: throw std::logic_error("subset_for: not a random scheme");
    }
}

bool is_random(Scheme s) {
    return s == Scheme::RandDig || s == Scheme::RandNon || s == Scheme::RandAll;
}

TokenSeq encode_number(const Vocabulary& vocab, long n) {
    TokenSeq seq;
    for (char c : std::to_string(n)) {
        auto it = vocab.token_to_id.find(std::string(1, c));
        if (it == vocab.token_to_id.end())
            throw std::runtime_error("vocabulary is missing digit token for Num scheme");
        seq.push_back(it->second);
    }
    return seq;
}

}  // namespace

IdentifierAssignment assign(const std::vector<UserId>& users, Scheme scheme, long length,
                            const Vocabulary& vocab, std::uint64_t seed, const AssignOptions& opts) {
    IdentifierAssignment out;
    out.scheme = scheme;
    out.length = length;
    out.seed = seed;

    const bool rnd = is_random(scheme);
    if (rnd && length < 1) throw std::invalid_argument("assign: length must be >= 1 for random schemes");

    const std::vector<TokenId>* space = nullptr;
    if (rnd) {
        space = &subset(vocab, subset_for(scheme));
        if (space->empty()) throw std::invalid_argument("assign: empty sampling subset for scheme " + scheme_name(scheme));
        if (opts.enforce_unique) {
            // Pigeonhole check up front; exact while |space|^L is representable,
            // log-space beyond that.
            const double m = std::pow(static_cast<double>(space->size()), static_cast<double>(length));
            const bool infeasible =
                m <= 9007199254740992.0
                    ? m < static_cast<double>(users.size())
                    : static_cast<double>(length) * std::log(static_cast<double>(space->size())) <
                          std::log(static_cast<double>(users.size()));
            if (infeasible)
                throw std::runtime_error("assign: cannot give " + std::to_string(users.size()) +
                                         " users unique identifiers; sample space size is " +
                                         std::to_string(space->size()) + "^" + std::to_string(length));
        }
    }

    Rng rng(seed);
    std::set<TokenSeq> used;
    long index = 0;
    for (const UserId& user : users) {
        ++index;
        UserIdentifier ident;
        ident.user = user;
        ident.scheme = scheme;
        if (scheme == Scheme::Num) {
            ident.ids = encode_number(vocab, index);
        } else if (scheme == Scheme::Default) {
            if (!opts.usernames || !opts.usernames->count(user))
                throw std::runtime_error("assign: Default scheme requires a username for user " + user);
            ident.ids = encode(vocab, opts.usernames->at(user));
            if (ident.ids.empty()) throw std::runtime_error("assign: username for user " + user + " encodes to nothing");
        } else {
            for (int attempt = 0;; ++attempt) {
                ident.ids.clear();
                for (long i = 0; i < length; ++i)
                    ident.ids.push_back((*space)[static_cast<std::size_t>(rng.uniform_below(space->size()))]);
                if (!opts.enforce_unique || !used.count(ident.ids)) break;
                if (attempt >= opts.max_retries)
                    throw std::runtime_error("assign: exhausted retries finding a unique identifier for user " + user +
                                             "; sample space size is " + std::to_string(space->size()) + "^" +
                                             std::to_string(length));
            }
        }
        if (opts.enforce_unique && used.count(ident.ids))
            throw std::runtime_error("assign: duplicate identifier sequence for user " + user);
        used.insert(ident.ids);
        if (out.by_user.count(user)) throw std::invalid_argument("assign: duplicate user id " + user);
        out.by_user.emplace(user, std::move(ident));
    }
    return out;
}

double collision_probability(long space_size, long length, long n_users) {
    if (space_size < 1 || length < 1 || n_users < 1)
        throw std::invalid_argument("collision_probability: all arguments must be >= 1");
    if (n_users == 1) return 0.0;

    // Exact path: p = (M^(N-1) - M!/(M-N+1)!) / M^(N-1) while everything
    // stays an exactly-representable integer in a double.
    constexpr double kExact = 9007199254740992.0;  // 2^53
    const double m = std::pow(static_cast<double>(space_size), static_cast<double>(length));
    if (m <= kExact) {
        double num = 1.0, den = 1.0;
        bool exact = true;
        for (long i = 1; i < n_users; ++i) {
            const double avail = m - static_cast<double>(i);
            if (avail <= 0.0) return 1.0;
            num *= avail;
            den *= m;
            if (num > kExact || den > kExact) {
                exact = false;
                break;
            }
        }
        if (exact) return (den - num) / den;
    }

    const double log_m = static_cast<double>(length) * std::log(static_cast<double>(space_size));
    double log_p_none = 0.0;
    for (long i = 1; i < n_users; ++i) {
        const double log_ratio = std::log(static_cast<double>(i)) - log_m;
        if (log_ratio >= 0.0) return 1.0;
        log_p_none += std::log1p(-std::exp(log_ratio));
    }
    return -std::expm1(log_p_none);
}

void save_assignment(const IdentifierAssignment& a, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_assignment: cannot open " + path);
    for (const auto& [user, ident] : a.by_user) {
        nlohmann::json j;
        j["user"] = user;
        j["scheme"] = scheme_name(ident.scheme);
        j["ids"] = ident.ids;
        f << j.dump() << '\n';
    }
}

IdentifierAssignment load_assignment(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_assignment: cannot open " + path);
    IdentifierAssignment a;
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            UserIdentifier ident;
            ident.user = j.at("user").get<std::string>();
            ident.scheme = scheme_from_name(j.at("scheme").get<std::string>());
            ident.ids = j.at("ids").get<TokenSeq>();
            a.scheme = ident.scheme;
            a.length = static_cast<long>(ident.ids.size());
            a.by_user.emplace(ident.user, std::move(ident));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("load_assignment: " + path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return a;
}

}  // namespace uid
