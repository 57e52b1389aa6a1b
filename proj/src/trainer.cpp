#include "uid/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "uid/rng.hpp"

namespace uid {

Optimizer::Optimizer(OptimizerConfig cfg, double learning_rate) : cfg_(cfg), lr_(learning_rate) {
    if (lr_ < 0.0) throw std::invalid_argument("optimizer: negative learning rate");
    if (cfg_.kind == OptimizerConfig::Kind::Adam) {
        if (cfg_.beta1 <= 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 <= 0.0 || cfg_.beta2 >= 1.0)
            throw std::invalid_argument("optimizer: Adam betas must lie in (0, 1)");
        if (cfg_.eps <= 0.0) throw std::invalid_argument("optimizer: Adam eps must be positive");
    }
}

void Optimizer::step(Parameters& params, const Gradients& grads, const std::set<std::string>& trainable) {
    ++t_;
    for (const auto& [name, g] : grads) {
        if (!trainable.count(name)) continue;
        auto pit = params.tensors.find(name);
        if (pit == params.tensors.end()) throw std::runtime_error("optimizer: gradient for unknown parameter " + name);
        Tensor& p = pit->second;
        check_same_shape(p, g, "optimizer step");

        if (cfg_.kind == OptimizerConfig::Kind::Sgd) {
            auto vit = velocity_.find(name);
            if (vit == velocity_.end()) vit = velocity_.emplace(name, Tensor::zeros(p.shape)).first;
            Tensor& vel = vit->second;
            for (std::size_t i = 0; i < p.data.size(); ++i) {
                vel.data[i] = cfg_.momentum * vel.data[i] + g.data[i];
                p.data[i] -= lr_ * vel.data[i];
            }
        } else {
            auto mit = m_.find(name);
            if (mit == m_.end()) {
                mit = m_.emplace(name, Tensor::zeros(p.shape)).first;
                v_.emplace(name, Tensor::zeros(p.shape));
            }
            Tensor& m = mit->second;
            Tensor& v = v_.at(name);
            const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
            const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
            for (std::size_t i = 0; i < p.data.size(); ++i) {
                m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g.data[i];
                v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
                const double mhat = m.data[i] / bc1;
                const double vhat = v.data[i] / bc2;
                p.data[i] -= lr_ * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }
}

std::vector<AugmentedSample> prepare_inputs(const std::vector<Sample>& samples,
                                            const std::optional<IdentifierAssignment>& assignment,
                                            const Model& model, Placement placement) {
    const ModelConfig& cfg = model.config();
    const TokenId cls = 2;  // by vocabulary construction
    std::vector<AugmentedSample> out;
    out.reserve(samples.size());
    const long reserved = cfg.mode == ParamMode::Prefix ? cfg.user_vec_len : 0;
    for (const Sample& s : samples) {
        if (assignment) {
            if (!assignment->has(s.user))
                throw std::runtime_error("prepare_inputs: assignment is missing user " + s.user);
            out.push_back(augment(s, assignment->of(s.user), placement, cfg.max_seq_len, cls));
        } else {
            out.push_back(plain_input(s, cfg.max_seq_len, reserved, cls));
        }
    }
    return out;
}

int predict(const Tensor& logits) {
    int best = 0;
    for (long j = 1; j < logits.numel(); ++j)
        if (logits.data[static_cast<std::size_t>(j)] > logits.data[static_cast<std::size_t>(best)])
            best = static_cast<int>(j);
    return best;
}

EvalReport evaluate(const Model& model, const Parameters& params, const std::vector<Sample>& samples,
                    const std::optional<IdentifierAssignment>& assignment, Placement placement,
                    bool condition_user) {
    const std::vector<AugmentedSample> inputs = prepare_inputs(samples, assignment, model, placement);
    std::vector<int> preds(inputs.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(inputs.size()); ++i)
        preds[static_cast<std::size_t>(i)] =
            predict(model.logits(params, inputs[static_cast<std::size_t>(i)], condition_user));

    EvalReport report;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const bool correct = preds[i] == inputs[i].label;
        ++report.n_total;
        report.n_correct += correct;
        auto& [uc, ut] = report.per_user[inputs[i].user];
        ++ut;
        uc += correct;
        if (inputs[i].ambiguous) {
            ++report.amb_total;
            report.amb_correct += correct;
        }
    }
    return report;
}

namespace {

// One pass of shuffled mini-batch updates; returns the sample-weighted mean loss.
double run_epoch(const Model& model, Parameters& params, Optimizer& opt,
                 const std::vector<AugmentedSample>& inputs, const std::set<std::string>& trainable,
                 long batch_size, bool condition_user, Rng& rng) {
    std::vector<std::size_t> order(inputs.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        std::vector<AugmentedSample> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) batch.push_back(inputs[order[i]]);
        auto [loss, grads] = model.loss_and_grad(params, batch, condition_user);
        opt.step(params, grads, trainable);
        loss_sum += loss * static_cast<double>(batch.size());
    }
    return loss_sum / static_cast<double>(inputs.size());
}

}  // namespace

TrainResult train(const Model& model, Parameters params, const SplitDataset& data,
                  const std::optional<IdentifierAssignment>& assignment, const TrainConfig& cfg) {
    if (data.train.empty()) throw std::invalid_argument("train: empty training split");
    if (cfg.epochs < 0 || cfg.batch_size < 1) throw std::invalid_argument("train: bad epochs/batch_size");

    const bool condition = model.config().mode != ParamMode::Prefix;
    const std::vector<AugmentedSample> inputs = prepare_inputs(data.train, assignment, model, cfg.placement);
    const std::vector<std::string> mask = model.freeze_mask(params, 1);
    const std::set<std::string> trainable(mask.begin(), mask.end());

    Optimizer opt(cfg.optimizer, cfg.learning_rate);
    Rng rng(cfg.seed);

    TrainResult out;
    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng(rng.derive(static_cast<std::uint64_t>(epoch)));
        const double loss = run_epoch(model, params, opt, inputs, trainable, cfg.batch_size, condition, epoch_rng);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss;
        if ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs) {
            const EvalReport val = evaluate(model, params, data.val, assignment, cfg.placement, condition);
            const EvalReport test = evaluate(model, params, data.test, assignment, cfg.placement, condition);
            rec.val_accuracy = val.accuracy();
            rec.test_accuracy = test.accuracy();
            rec.test_ambiguous_accuracy = test.ambiguous_accuracy();
        }
        out.metrics.history.push_back(rec);
    }
    out.metrics.final_val = evaluate(model, params, data.val, assignment, cfg.placement, condition);
    out.metrics.final_test = evaluate(model, params, data.test, assignment, cfg.placement, condition);
    out.params = std::move(params);
    return out;
}

TrainResult train_useradapter(const Model& model, Parameters params, const SplitDataset& data,
                              const TrainConfig& phase1, const TrainConfig& phase2) {
    if (model.config().mode != ParamMode::Prefix)
        throw std::invalid_argument("train_useradapter: model must be in prefix mode");
    if (data.train.empty()) throw std::invalid_argument("train_useradapter: empty training split");

    // Phase 1: user-agnostic fine-tuning of the shared backbone.
    const std::vector<AugmentedSample> inputs = prepare_inputs(data.train, std::nullopt, model, phase1.placement);
    const std::vector<std::string> mask1 = model.freeze_mask(params, 1);
    const std::set<std::string> trainable1(mask1.begin(), mask1.end());
    Optimizer opt1(phase1.optimizer, phase1.learning_rate);
    Rng rng1(phase1.seed);

    TrainResult out;
    for (long epoch = 0; epoch < phase1.epochs; ++epoch) {
        Rng epoch_rng(rng1.derive(static_cast<std::uint64_t>(epoch)));
        const double loss =
            run_epoch(model, params, opt1, inputs, trainable1, phase1.batch_size, false, epoch_rng);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss;
        out.metrics.history.push_back(rec);
    }

    // Phase 2: one round per user, touching only that user's prefix rows.
    std::map<UserId, std::vector<AugmentedSample>> per_user;
    for (const AugmentedSample& s : prepare_inputs(data.train, std::nullopt, model, phase2.placement))
        per_user[s.user].push_back(s);

    Rng rng2(phase2.seed);
    for (const UserId& user : model.users()) {
        auto it = per_user.find(user);
        if (it == per_user.end()) continue;
        const std::vector<std::string> mask2 = model.freeze_mask(params, 2, &user);
        const std::set<std::string> trainable2(mask2.begin(), mask2.end());
        Optimizer opt2(phase2.optimizer, phase2.learning_rate);
        for (long epoch = 0; epoch < phase2.epochs; ++epoch) {
            Rng epoch_rng(rng2.derive(static_cast<std::uint64_t>(epoch)));
            run_epoch(model, params, opt2, it->second, trainable2, phase2.batch_size, true, epoch_rng);
        }
    }

    out.metrics.final_val = evaluate(model, params, data.val, std::nullopt, phase2.placement, true);
    out.metrics.final_test = evaluate(model, params, data.test, std::nullopt, phase2.placement, true);
    out.params = std::move(params);
    return out;
}

}  // namespace uid
