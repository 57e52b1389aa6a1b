#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uid/trainer.hpp"

namespace uid {

struct FedConfig {
    long n_rounds = 10;
    long clients_per_round = 5;
    long local_epochs = 1;
    long local_batch_size = 16;
    double local_lr = 0.1;
    std::uint64_t seed = 0;
    Placement placement = Placement::Both;
};

struct ClientUpdate {
    UserId client;
    Parameters weights;
    long n_samples = 0;
    double mean_loss = 0.0;
};

struct RoundReport {
    long round = 0;
    std::vector<UserId> clients;
    double global_test_accuracy = 0.0;
    double global_test_ambiguous_accuracy = 0.0;
    double mean_client_loss = 0.0;
};

struct FedResult {
    Parameters params;
    std::vector<RoundReport> reports;
};

// Copies the global weights and runs local_epochs of mini-batch SGD on the
// client's (already prepared) inputs.
ClientUpdate local_update(const Model& model, const Parameters& global,
                          const UserId& client, const std::vector<AugmentedSample>& client_train,
                          const FedConfig& cfg, std::uint64_t seed, bool condition_user);

// FedAvg: sample-count-weighted mean of client weights, clients processed in
// sorted id order.
Parameters aggregate(const std::vector<ClientUpdate>& updates);

// Per round: uniform client sampling without replacement, local updates
// from an immutable global snapshot (clients run in parallel), weighted
// aggregation, then evaluation on the global test split.
FedResult run_federated(const Model& model, const SplitDataset& data,
                        const std::optional<IdentifierAssignment>& assignment, const FedConfig& cfg,
                        const Parameters* initial = nullptr);

}  // namespace uid
