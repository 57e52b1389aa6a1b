#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uid/augment.hpp"
#include "uid/tape.hpp"
#include "uid/tensor.hpp"

namespace uid {

// Tied: identifier tokens share the token-embedding table (no user-specific
// parameters). Untied: a trainable per-user vector table replaces the
// embeddings at the identifier positions. Prefix: per-user trained vectors
// inserted after CLS while the backbone stays frozen in phase 2.
enum class ParamMode { Tied, Untied, Prefix };

std::string mode_name(ParamMode m);
ParamMode mode_from_name(const std::string& name);

struct ModelConfig {
    long d_model = 32;
    long n_heads = 2;
    long n_layers = 2;
    long vocab_size = 0;
    int n_classes = 2;
    long max_seq_len = 64;
    ParamMode mode = ParamMode::Tied;
    long user_vec_len = 0;  // L_u (Untied) or L_p (Prefix); ignored when Tied
    std::uint64_t seed = 0;
};

struct Parameters {
    std::map<std::string, Tensor> tensors;

    long total_scalars() const;
    bool same_shapes(const Parameters& other) const;
};

class Model {
public:
    // `users` is required (and its order fixed: sorted) for Untied/Prefix modes.
    explicit Model(ModelConfig cfg, std::vector<UserId> users = {});

    const ModelConfig& config() const { return cfg_; }
    const std::vector<UserId>& users() const { return users_; }
    long user_row(const UserId& user) const;

    // Embeddings and linear weights ~ Normal(0, 0.02^2) from the seeded
    // generator; layer-norm gains 1; biases 0. Deterministic given seed.
    Parameters init() const;

    // Builds the forward graph on the tape; returns the logits node [1 x n_classes].
    // condition_user toggles the user tables (Untied substitution / Prefix insertion);
    // Tied mode conditions through the tokens themselves.
    VarId build_forward(Tape& tape, const Parameters& params, const AugmentedSample& input,
                        bool condition_user) const;

    Tensor logits(const Parameters& params, const AugmentedSample& input, bool condition_user) const;

    // Mean cross-entropy over the batch.
    double loss(const Parameters& params, const std::vector<AugmentedSample>& batch,
                bool condition_user) const;

    // Mean loss and its gradients; samples run on independent tapes (parallel),
    // reduced in index order so results do not depend on thread count.
    std::pair<double, Gradients> loss_and_grad(const Parameters& params,
                                               const std::vector<AugmentedSample>& batch,
                                               bool condition_user) const;

    // Trainable parameter names. Phase 1: everything except prefix tables.
    // Phase 2 (Prefix mode only): exactly the acting user's prefix rows.
    std::vector<std::string> freeze_mask(const Parameters& params, int phase,
                                         const UserId* user = nullptr) const;

    static std::string user_table_name(ParamMode mode, long row);

private:
    ModelConfig cfg_;
    std::vector<UserId> users_;
    std::map<UserId, long> user_rows_;

    void validate() const;
};

// Versioned checkpoint: magic, JSON header (config, users, tensor names and
// shapes), then one little-endian f64 blob per tensor in header order.
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const std::vector<UserId>& users, const Parameters& params);

struct Checkpoint {
    ModelConfig config;
    std::vector<UserId> users;
    Parameters params;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace uid
