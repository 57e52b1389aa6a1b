#include "uid/federated.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "uid/rng.hpp"

namespace uid {

ClientUpdate local_update(const Model& model, const Parameters& global, const UserId& client,
                          const std::vector<AugmentedSample>& client_train, const FedConfig& cfg,
                          std::uint64_t seed, bool condition_user) {
    if (client_train.empty()) throw std::invalid_argument("local_update: client " + client + " has no samples");

    ClientUpdate update;
    update.client = client;
    update.n_samples = static_cast<long>(client_train.size());
    update.weights = global;

    OptimizerConfig sgd;
    sgd.kind = OptimizerConfig::Kind::Sgd;
    sgd.momentum = 0.0;
    Optimizer opt(sgd, cfg.local_lr);
    const std::vector<std::string> mask = model.freeze_mask(update.weights, 1);
    const std::set<std::string> trainable(mask.begin(), mask.end());

    Rng rng(seed);
    double loss_sum = 0.0;
    long loss_terms = 0;
    for (long epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        std::vector<std::size_t> order(client_train.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.local_batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.local_batch_size));
            std::vector<AugmentedSample> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(client_train[order[i]]);
            auto [loss, grads] = model.loss_and_grad(update.weights, batch, condition_user);
            opt.step(update.weights, grads, trainable);
            loss_sum += loss;
            ++loss_terms;
        }
    }
    update.mean_loss = loss_terms ? loss_sum / static_cast<double>(loss_terms) : 0.0;
    return update;
}

Parameters aggregate(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw std::invalid_argument("aggregate: no client updates");

    std::vector<const ClientUpdate*> sorted;
    sorted.reserve(updates.size());
    for (const ClientUpdate& u : updates) sorted.push_back(&u);
    std::sort(sorted.begin(), sorted.end(),
              [](const ClientUpdate* a, const ClientUpdate* b) { return a->client < b->client; });

    double total = 0.0;
    for (const ClientUpdate* u : sorted) {
        if (u->n_samples < 1) throw std::invalid_argument("aggregate: client " + u->client + " has no samples");
        if (!u->weights.same_shapes(sorted.front()->weights))
            throw std::invalid_argument("aggregate: shape mismatch in update from client " + u->client);
        total += static_cast<double>(u->n_samples);
    }

    Parameters out;
    for (const auto& [name, t] : sorted.front()->weights.tensors) out.tensors.emplace(name, Tensor::zeros(t.shape));
    for (const ClientUpdate* u : sorted) {
        const double w = static_cast<double>(u->n_samples) / total;
        for (const auto& [name, t] : u->weights.tensors) {
            Tensor& acc = out.tensors.at(name);
            for (std::size_t i = 0; i < t.data.size(); ++i) acc.data[i] += w * t.data[i];
        }
    }
    return out;
}

FedResult run_federated(const Model& model, const SplitDataset& data,
                        const std::optional<IdentifierAssignment>& assignment, const FedConfig& cfg,
                        const Parameters* initial) {
    if (cfg.n_rounds < 1) throw std::invalid_argument("run_federated: need at least 1 round");

    // Client pool: users with at least one training sample, prepared once.
    std::map<UserId, std::vector<AugmentedSample>> client_data;
    for (const AugmentedSample& s : prepare_inputs(data.train, assignment, model, cfg.placement))
        client_data[s.user].push_back(s);
    std::vector<UserId> clients;
    for (const auto& [user, samples] : client_data) {
        if (samples.empty()) {
            std::cerr << "warning: skipping client " << user << " with no training samples\n";
            continue;
        }
        clients.push_back(user);
    }
    if (clients.empty()) throw std::invalid_argument("run_federated: no clients with training data");
    if (cfg.clients_per_round < 1 || cfg.clients_per_round > static_cast<long>(clients.size()))
        throw std::invalid_argument("run_federated: clients_per_round must be in [1, " +
                                    std::to_string(clients.size()) + "]");

    const bool condition = model.config().mode != ParamMode::Prefix;
    FedResult out;
    out.params = initial ? *initial : model.init();

    Rng rng(cfg.seed);
    for (long round = 0; round < cfg.n_rounds; ++round) {
        // Uniform sampling without replacement: partial Fisher-Yates.
        std::vector<UserId> pool = clients;
        for (long i = 0; i < cfg.clients_per_round; ++i) {
            const std::size_t j =
                static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.uniform_below(pool.size() - static_cast<std::size_t>(i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        }
        std::vector<UserId> selected(pool.begin(), pool.begin() + cfg.clients_per_round);
        std::sort(selected.begin(), selected.end());

        std::vector<std::uint64_t> seeds(selected.size());
        for (std::size_t i = 0; i < selected.size(); ++i) seeds[i] = rng.derive(i);

        std::vector<ClientUpdate> updates(selected.size());
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < static_cast<long>(selected.size()); ++i) {
            const UserId& user = selected[static_cast<std::size_t>(i)];
            updates[static_cast<std::size_t>(i)] = local_update(model, out.params, user, client_data.at(user),
                                                                cfg, seeds[static_cast<std::size_t>(i)], condition);
        }
        out.params = aggregate(updates);

        RoundReport report;
        report.round = round;
        report.clients = selected;
        double loss = 0.0;
        for (const ClientUpdate& u : updates) loss += u.mean_loss;
        report.mean_client_loss = loss / static_cast<double>(updates.size());
        const EvalReport test = evaluate(model, out.params, data.test, assignment, cfg.placement, condition);
        report.global_test_accuracy = test.accuracy();
        report.global_test_ambiguous_accuracy = test.ambiguous_accuracy();
        out.reports.push_back(std::move(report));
    }
    return out;
}

}  // namespace uid
