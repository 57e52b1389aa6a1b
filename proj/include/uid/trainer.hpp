#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "uid/data.hpp"
#include "uid/model.hpp"

namespace uid {

struct OptimizerConfig {
    enum class Kind { Sgd, Adam };
    Kind kind = Kind::Adam;
    double momentum = 0.0;  // SGD
    double beta1 = 0.9;     // Adam
    double beta2 = 0.999;
    double eps = 1e-8;
};

// SGD(momentum) / Adam over named tensors. State is allocated lazily per
// parameter; names outside the trainable set are never touched.
class Optimizer {
public:
    Optimizer(OptimizerConfig cfg, double learning_rate);

    void step(Parameters& params, const Gradients& grads, const std::set<std::string>& trainable);

private:
    OptimizerConfig cfg_;
    double lr_;
    long t_ = 0;
    std::map<std::string, Tensor> velocity_;  // SGD momentum
    std::map<std::string, Tensor> m_, v_;     // Adam moments
};

struct TrainConfig {
    long epochs = 20;
    long batch_size = 16;
    double learning_rate = 1e-3;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    long eval_every = 1;
    Placement placement = Placement::Both;
};

struct EvalReport {
    long n_correct = 0;
    long n_total = 0;
    long amb_correct = 0;
    long amb_total = 0;
    std::map<UserId, std::pair<long, long>> per_user;  // correct, total

    double accuracy() const { return n_total ? static_cast<double>(n_correct) / static_cast<double>(n_total) : 0.0; }
    double ambiguous_accuracy() const {
        return amb_total ? static_cast<double>(amb_correct) / static_cast<double>(amb_total) : 0.0;
    }
};

struct EpochRecord {
    long epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    double test_ambiguous_accuracy = 0.0;
};

struct Metrics {
    std::vector<EpochRecord> history;
    EvalReport final_val;
    EvalReport final_test;
};

struct TrainResult {
    Parameters params;
    Metrics metrics;
};

// Model inputs for a body of samples: augmented when an assignment is given,
// plain (with prefix room reserved in Prefix mode) otherwise.
std::vector<AugmentedSample> prepare_inputs(const std::vector<Sample>& samples,
                                            const std::optional<IdentifierAssignment>& assignment,
                                            const Model& model, Placement placement);

// Argmax prediction, ties toward the lowest class index.
int predict(const Tensor& logits);

EvalReport evaluate(const Model& model, const Parameters& params, const std::vector<Sample>& samples,
                    const std::optional<IdentifierAssignment>& assignment, Placement placement,
                    bool condition_user);

// Shuffled mini-batch training of every non-prefix parameter. Deterministic
// given cfg.seed. The assignment must cover every user in the dataset.
TrainResult train(const Model& model, Parameters params, const SplitDataset& data,
                  const std::optional<IdentifierAssignment>& assignment, const TrainConfig& cfg);

// Two-phase prefix-vector baseline: a user-agnostic phase over the full
// training split, then one per-user round tuning only that user's prefix rows.
TrainResult train_useradapter(const Model& model, Parameters params, const SplitDataset& data,
                              const TrainConfig& phase1, const TrainConfig& phase2);

}  // namespace uid
