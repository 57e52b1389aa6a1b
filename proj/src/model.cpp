#include "uid/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "uid/rng.hpp"

namespace uid {

namespace {
constexpr char kMagic[] = "UIDCKPT1";
constexpr double kInitStd = 0.02;
}

std::string mode_name(ParamMode m) {
    switch (m) {
        case ParamMode::Tied: return "tied";
        case ParamMode::Untied: return "untied";
        case ParamMode::Prefix: return "prefix";
    }
    throw std::logic_error("unknown mode");
}

ParamMode mode_from_name(const std::string& name) {
    if (name == "tied") return ParamMode::Tied;
    if (name == "untied") return ParamMode::Untied;
    if (name == "prefix") return ParamMode::Prefix;
    throw std::invalid_argument("unknown parameter mode: " + name);
}

long Parameters::total_scalars() const {
    long n = 0;
    for (const auto& [name, t] : tensors) n += t.numel();
    return n;
}

bool Parameters::same_shapes(const Parameters& other) const {
    if (tensors.size() != other.tensors.size()) return false;
    for (const auto& [name, t] : tensors) {
        auto it = other.tensors.find(name);
        if (it == other.tensors.end() || !t.same_shape(it->second)) return false;
    }
    return true;
}

Model::Model(ModelConfig cfg, std::vector<UserId> users) : cfg_(cfg), users_(std::move(users)) {
    std::sort(users_.begin(), users_.end());
    users_.erase(std::unique(users_.begin(), users_.end()), users_.end());
    for (std::size_t i = 0; i < users_.size(); ++i) user_rows_[users_[i]] = static_cast<long>(i);
    validate();
}

void Model::validate() const {
    if (cfg_.d_model <= 0 || cfg_.n_heads <= 0 || cfg_.n_layers <= 0)
        throw std::invalid_argument("model: dimensions must be positive");
    if (cfg_.d_model % cfg_.n_heads != 0)
        throw std::invalid_argument("model: d_model " + std::to_string(cfg_.d_model) +
                                    " not divisible by n_heads " + std::to_string(cfg_.n_heads));
    if (cfg_.max_seq_len < 2) throw std::invalid_argument("model: max_seq_len must be >= 2");
    if (cfg_.vocab_size <= 0) throw std::invalid_argument("model: vocab_size must be positive");
    if (cfg_.n_classes < 2) throw std::invalid_argument("model: need at least 2 classes");
    if (cfg_.mode != ParamMode::Tied) {
        if (cfg_.user_vec_len < 1)
            throw std::invalid_argument("model: user_vec_len must be >= 1 in " + mode_name(cfg_.mode) + " mode");
        if (users_.empty())
            throw std::invalid_argument("model: " + mode_name(cfg_.mode) + " mode needs the user list");
    }
}

long Model::user_row(const UserId& user) const {
    auto it = user_rows_.find(user);
    if (it == user_rows_.end()) throw std::runtime_error("model: unknown user " + user);
    return it->second;
}

std::string Model::user_table_name(ParamMode mode, long row) {
    return (mode == ParamMode::Untied ? "user_emb.u" : "prefix.u") + std::to_string(row);
}

Parameters Model::init() const {
    Rng rng(cfg_.seed);
    std::vector<std::pair<std::string, Tensor>> ordered;

    auto normal = [&rng](std::vector<long> shape) {
        Tensor t = Tensor::zeros(std::move(shape));
        for (double& v : t.data) v = rng.normal(0.0, kInitStd);
        return t;
    };

    const long d = cfg_.d_model;
    const long dh = d / cfg_.n_heads;
    const long dff = 4 * d;

    ordered.emplace_back("tok_emb", normal({cfg_.vocab_size, d}));
    ordered.emplace_back("pos_emb", normal({cfg_.max_seq_len, d}));
    for (long l = 0; l < cfg_.n_layers; ++l) {
        const std::string p = "l" + std::to_string(l) + ".";
        ordered.emplace_back(p + "ln1.g", Tensor::full({d}, 1.0));
        ordered.emplace_back(p + "ln1.b", Tensor::zeros({d}));
        for (long h = 0; h < cfg_.n_heads; ++h) {
            const std::string hp = p + "attn.";
            const std::string hs = ".h" + std::to_string(h);
            ordered.emplace_back(hp + "q" + hs, normal({d, dh}));
            ordered.emplace_back(hp + "k" + hs, normal({d, dh}));
            ordered.emplace_back(hp + "v" + hs, normal({d, dh}));
        }
        ordered.emplace_back(p + "attn.wo", normal({d, d}));
        ordered.emplace_back(p + "attn.bo", Tensor::zeros({d}));
        ordered.emplace_back(p + "ln2.g", Tensor::full({d}, 1.0));
        ordered.emplace_back(p + "ln2.b", Tensor::zeros({d}));
        ordered.emplace_back(p + "mlp.w1", normal({d, dff}));
        ordered.emplace_back(p + "mlp.b1", Tensor::zeros({dff}));
        ordered.emplace_back(p + "mlp.w2", normal({dff, d}));
        ordered.emplace_back(p + "mlp.b2", Tensor::zeros({d}));
    }
    ordered.emplace_back("lnf.g", Tensor::full({d}, 1.0));
    ordered.emplace_back("lnf.b", Tensor::zeros({d}));
    ordered.emplace_back("head.w", normal({d, static_cast<long>(cfg_.n_classes)}));
    ordered.emplace_back("head.b", Tensor::zeros({static_cast<long>(cfg_.n_classes)}));

    if (cfg_.mode != ParamMode::Tied)
        for (long r = 0; r < static_cast<long>(users_.size()); ++r)
            ordered.emplace_back(user_table_name(cfg_.mode, r), normal({cfg_.user_vec_len, d}));

    Parameters out;
    for (auto& [name, t] : ordered) out.tensors.emplace(std::move(name), std::move(t));
    return out;
}

VarId Model::build_forward(Tape& tape, const Parameters& params, const AugmentedSample& input,
                           bool condition_user) const {
    const long d = cfg_.d_model;
    const long dh = d / cfg_.n_heads;
    const long len = static_cast<long>(input.ids.size());
    if (len == 0) throw std::invalid_argument("forward: empty input");

    auto param = [&](const std::string& name) {
        auto it = params.tensors.find(name);
        if (it == params.tensors.end()) throw std::runtime_error("forward: missing parameter " + name);
        return tape.param(name, it->second);
    };

    const VarId tok_emb = param("tok_emb");

    VarId x;  // [rows x d]
    long rows = len;
    if (cfg_.mode == ParamMode::Untied && condition_user && input.ident_len > 0) {
        if (input.ident_len != cfg_.user_vec_len)
            throw std::invalid_argument("forward: identifier length " + std::to_string(input.ident_len) +
                                        " does not match user_vec_len " + std::to_string(cfg_.user_vec_len));
        const VarId uvec = param(user_table_name(cfg_.mode, user_row(input.user)));
        // [CLS][ident][content][ident?] with user vectors substituted at the
        // identifier positions; both copies share the same rows.
        const long content_begin = 1 + input.ident_len;
        const long content_end = content_begin + input.content_kept;
        std::vector<VarId> parts;
        parts.push_back(tape.embedding_lookup(tok_emb, {input.ids[0]}));
        parts.push_back(uvec);
        parts.push_back(tape.embedding_lookup(
            tok_emb, TokenSeq(input.ids.begin() + content_begin, input.ids.begin() + content_end)));
        if (input.placement == Placement::Both) parts.push_back(uvec);
        x = tape.concat_rows(parts);
    } else if (cfg_.mode == ParamMode::Prefix && condition_user) {
        if (input.ident_len != 0)
            throw std::invalid_argument("forward: prefix mode takes plain inputs, got identifier tokens");
        const VarId pvec = param(user_table_name(cfg_.mode, user_row(input.user)));
        std::vector<VarId> parts;
        parts.push_back(tape.embedding_lookup(tok_emb, {input.ids[0]}));
        parts.push_back(pvec);
        parts.push_back(tape.embedding_lookup(tok_emb, TokenSeq(input.ids.begin() + 1, input.ids.end())));
        x = tape.concat_rows(parts);
        rows = len + cfg_.user_vec_len;
    } else {
        x = tape.embedding_lookup(tok_emb, input.ids);
    }
    if (rows > cfg_.max_seq_len)
        throw std::invalid_argument("forward: sequence of length " + std::to_string(rows) +
                                    " exceeds max_seq_len " + std::to_string(cfg_.max_seq_len));

    std::vector<int> positions(static_cast<std::size_t>(rows));
    std::iota(positions.begin(), positions.end(), 0);
    VarId h = tape.add(x, tape.embedding_lookup(param("pos_emb"), positions));

    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    for (long l = 0; l < cfg_.n_layers; ++l) {
        const std::string p = "l" + std::to_string(l) + ".";
        const VarId n1 = tape.layer_norm_rows(h, param(p + "ln1.g"), param(p + "ln1.b"));
        std::vector<VarId> heads;
        for (long hd = 0; hd < cfg_.n_heads; ++hd) {
            const std::string hs = ".h" + std::to_string(hd);
            const VarId q = tape.matmul(n1, param(p + "attn.q" + hs));
            const VarId k = tape.matmul(n1, param(p + "attn.k" + hs));
            const VarId v = tape.matmul(n1, param(p + "attn.v" + hs));
            const VarId scores = tape.scale(tape.matmul_nt(q, k), inv_sqrt_dh);
            heads.push_back(tape.matmul(tape.softmax_rows(scores), v));
        }
        const VarId ctx = tape.concat_cols(heads);
        const VarId attn = tape.add_bias(tape.matmul(ctx, param(p + "attn.wo")), param(p + "attn.bo"));
        h = tape.add(h, attn);

        const VarId n2 = tape.layer_norm_rows(h, param(p + "ln2.g"), param(p + "ln2.b"));
        VarId m = tape.add_bias(tape.matmul(n2, param(p + "mlp.w1")), param(p + "mlp.b1"));
        m = tape.gelu(m);
        m = tape.add_bias(tape.matmul(m, param(p + "mlp.w2")), param(p + "mlp.b2"));
        h = tape.add(h, m);
    }

    const VarId hf = tape.layer_norm_rows(h, param("lnf.g"), param("lnf.b"));
    const VarId h0 = tape.take_row(hf, 0);
    return tape.add_bias(tape.matmul(h0, param("head.w")), param("head.b"));
}

Tensor Model::logits(const Parameters& params, const AugmentedSample& input, bool condition_user) const {
    Tape tape;
    return tape.val(build_forward(tape, params, input, condition_user));
}

double Model::loss(const Parameters& params, const std::vector<AugmentedSample>& batch,
                   bool condition_user) const {
    if (batch.empty()) throw std::invalid_argument("loss: empty batch");
    std::vector<double> losses(batch.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(batch.size()); ++i) {
        Tape tape;
        const VarId lg = build_forward(tape, params, batch[static_cast<std::size_t>(i)], condition_user);
        const VarId l = tape.cross_entropy(lg, {batch[static_cast<std::size_t>(i)].label});
        losses[static_cast<std::size_t>(i)] = tape.val(l).data[0];
    }
    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(batch.size());
}

std::pair<double, Gradients> Model::loss_and_grad(const Parameters& params,
                                                  const std::vector<AugmentedSample>& batch,
                                                  bool condition_user) const {
    if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
    const long n = static_cast<long>(batch.size());
    std::vector<Gradients> grads(batch.size());
    std::vector<double> losses(batch.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        Tape tape;
        const VarId lg = build_forward(tape, params, batch[static_cast<std::size_t>(i)], condition_user);
        const VarId l = tape.cross_entropy(lg, {batch[static_cast<std::size_t>(i)].label});
        tape.backward(l);
        grads[static_cast<std::size_t>(i)] = tape.grads();
        losses[static_cast<std::size_t>(i)] = tape.val(l).data[0];
    }

    // Mean over the batch, accumulated in sample order.
    const double inv = 1.0 / static_cast<double>(n);
    Gradients total;
    for (long i = 0; i < n; ++i) {
        for (auto& [name, g] : grads[static_cast<std::size_t>(i)]) {
            auto it = total.find(name);
            if (it == total.end()) it = total.emplace(name, Tensor::zeros(g.shape)).first;
            for (std::size_t j = 0; j < g.data.size(); ++j) it->second.data[j] += inv * g.data[j];
        }
    }
    double loss = 0.0;
    for (double l : losses) loss += l;
    return {loss * inv, std::move(total)};
}

std::vector<std::string> Model::freeze_mask(const Parameters& params, int phase, const UserId* user) const {
    std::vector<std::string> names;
    if (phase == 1) {
        for (const auto& [name, t] : params.tensors)
            if (name.rfind("prefix.", 0) != 0) names.push_back(name);
        return names;
    }
    if (phase == 2) {
        if (cfg_.mode != ParamMode::Prefix)
            throw std::invalid_argument("freeze_mask: phase 2 requires prefix mode, model is " + mode_name(cfg_.mode));
        if (!user) throw std::invalid_argument("freeze_mask: phase 2 needs an acting user");
        names.push_back(user_table_name(cfg_.mode, user_row(*user)));
        return names;
    }
    throw std::invalid_argument("freeze_mask: phase must be 1 or 2");
}

void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const std::vector<UserId>& users, const Parameters& params) {
    nlohmann::json header;
    header["config"] = {{"d_model", cfg.d_model},       {"n_heads", cfg.n_heads},
                        {"n_layers", cfg.n_layers},     {"vocab_size", cfg.vocab_size},
                        {"n_classes", cfg.n_classes},   {"max_seq_len", cfg.max_seq_len},
                        {"mode", mode_name(cfg.mode)},  {"user_vec_len", cfg.user_vec_len},
                        {"seed", cfg.seed}};
    header["users"] = users;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& [name, t] : params.tensors) tensors.push_back({{"name", name}, {"shape", t.shape}});
    header["tensors"] = tensors;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    const std::string h = header.dump();
    const std::uint64_t hlen = h.size();
    f.write(kMagic, 8);
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const auto& [name, t] : params.tensors)
        f.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("load_checkpoint: " + path + " is not a checkpoint (bad magic)");
    std::uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 8);
    std::string h(hlen, '\0');
    f.read(h.data(), static_cast<std::streamsize>(hlen));
    if (!f) throw std::runtime_error("load_checkpoint: truncated header in " + path);
    const nlohmann::json header = nlohmann::json::parse(h);

    Checkpoint out;
    const auto& c = header.at("config");
    out.config.d_model = c.at("d_model").get<long>();
    out.config.n_heads = c.at("n_heads").get<long>();
    out.config.n_layers = c.at("n_layers").get<long>();
    out.config.vocab_size = c.at("vocab_size").get<long>();
    out.config.n_classes = c.at("n_classes").get<int>();
    out.config.max_seq_len = c.at("max_seq_len").get<long>();
    out.config.mode = mode_from_name(c.at("mode").get<std::string>());
    out.config.user_vec_len = c.at("user_vec_len").get<long>();
    out.config.seed = c.at("seed").get<std::uint64_t>();
    out.users = header.at("users").get<std::vector<UserId>>();

    for (const auto& tj : header.at("tensors")) {
        const std::string name = tj.at("name").get<std::string>();
        Tensor t = Tensor::zeros(tj.at("shape").get<std::vector<long>>());
        f.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!f) throw std::runtime_error("load_checkpoint: truncated tensor " + name + " in " + path);
        out.params.tensors.emplace(name, std::move(t));
    }
    return out;
}

}  // namespace uid
