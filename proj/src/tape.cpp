#include "uid/tape.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "uid/kernels.hpp"

namespace uid {

namespace {
constexpr double kLogEps = 1e-12;
}

VarId Tape::push(Tensor value, std::function<void(Tape&, VarId)> back) {
    nodes_.push_back(Node{std::move(value), nullptr, Tensor{}, std::move(back)});
    return static_cast<VarId>(nodes_.size() - 1);
}

Tensor& Tape::grad_buf(VarId id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.data.empty()) n.grad = Tensor::zeros(node_val(id).shape);
    return n.grad;
}

Tensor Tape::grad_of(VarId id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.data.empty()) return Tensor::zeros(node_val(id).shape);
    return n.grad;
}

VarId Tape::input(Tensor value) { return push(std::move(value), nullptr); }

VarId Tape::param(const std::string& name, const Tensor& value) {
    nodes_.push_back(Node{Tensor{}, &value, Tensor{}, nullptr});
    const VarId id = static_cast<VarId>(nodes_.size() - 1);
    params_.emplace_back(name, id);
    return id;
}

VarId Tape::matmul(VarId a, VarId b) {
    const Tensor& va = node_val(a);
    const Tensor& vb = node_val(b);
    if (va.cols() != vb.rows())
        throw std::invalid_argument("matmul: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
    const long m = va.rows(), k = va.cols(), n = vb.cols();
    Tensor out = Tensor::zeros({m, n});
    kernels::matmul(va.data.data(), vb.data.data(), out.data.data(), m, k, n);
    return push(std::move(out), [a, b, m, k, n](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        Tensor da = Tensor::zeros({m, k});
        Tensor db = Tensor::zeros({k, n});
        kernels::matmul_nt(g.data.data(), t.node_val(b).data.data(), da.data.data(), m, n, k);
        kernels::matmul_tn(t.node_val(a).data.data(), g.data.data(), db.data.data(), m, k, n);
        Tensor& ga = t.grad_buf(a);
        Tensor& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += da.data[i];
        for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += db.data[i];
    });
}

VarId Tape::matmul_nt(VarId a, VarId b) {
    const Tensor& va = node_val(a);
    const Tensor& vb = node_val(b);
    if (va.cols() != vb.cols())
        throw std::invalid_argument("matmul_nt: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
    const long m = va.rows(), k = va.cols(), n = vb.rows();
    Tensor out = Tensor::zeros({m, n});
    kernels::matmul_nt(va.data.data(), vb.data.data(), out.data.data(), m, k, n);
    return push(std::move(out), [a, b, m, k, n](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);  // [m x n]
        Tensor da = Tensor::zeros({m, k});
        Tensor db = Tensor::zeros({n, k});
        kernels::matmul(g.data.data(), t.node_val(b).data.data(), da.data.data(), m, n, k);
        kernels::matmul_tn(g.data.data(), t.node_val(a).data.data(), db.data.data(), m, n, k);
        Tensor& ga = t.grad_buf(a);
        Tensor& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += da.data[i];
        for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += db.data[i];
    });
}

VarId Tape::add(VarId a, VarId b) {
    const Tensor& va = node_val(a);
    const Tensor& vb = node_val(b);
    check_same_shape(va, vb, "add");
    Tensor out = va;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += vb.data[i];
    return push(std::move(out), [a, b](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_buf(a);
        Tensor& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] += g.data[i];
        }
    });
}

VarId Tape::add_bias(VarId a, VarId b) {
    const Tensor& va = node_val(a);
    const Tensor& vb = node_val(b);
    if (vb.numel() != va.cols())
        throw std::invalid_argument("add_bias: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
    const long rows = va.rows(), cols = va.cols();
    Tensor out = va;
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) out.data[static_cast<std::size_t>(i * cols + j)] += vb.data[static_cast<std::size_t>(j)];
    return push(std::move(out), [a, b, rows, cols](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_buf(a);
        Tensor& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j) gb.data[static_cast<std::size_t>(j)] += g.data[static_cast<std::size_t>(i * cols + j)];
    });
}

VarId Tape::scale(VarId a, double c) {
    Tensor out = node_val(a);
    for (double& v : out.data) v *= c;
    return push(std::move(out), [a, c](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += c * g.data[i];
    });
}

VarId Tape::relu(VarId a) {
    const Tensor& va = node_val(a);
    Tensor out = Tensor::zeros(va.shape);
    kernels::relu(va.data.data(), out.data.data(), va.numel());
    return push(std::move(out), [a](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        const Tensor& x = t.node_val(a);
        Tensor dx = Tensor::zeros(x.shape);
        kernels::relu_backward(x.data.data(), g.data.data(), dx.data.data(), x.numel());
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += dx.data[i];
    });
}

VarId Tape::gelu(VarId a) {
    const Tensor& va = node_val(a);
    Tensor out = Tensor::zeros(va.shape);
    kernels::gelu(va.data.data(), out.data.data(), va.numel());
    return push(std::move(out), [a](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        const Tensor& x = t.node_val(a);
        Tensor dx = Tensor::zeros(x.shape);
        kernels::gelu_backward(x.data.data(), g.data.data(), dx.data.data(), x.numel());
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += dx.data[i];
    });
}

VarId Tape::softmax_rows(VarId a) {
    const Tensor& va = node_val(a);
    const long rows = va.rows(), cols = va.cols();
    Tensor out = Tensor::zeros(va.shape);
    kernels::softmax_rows(va.data.data(), out.data.data(), rows, cols);
    return push(std::move(out), [a, rows, cols](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        const Tensor& y = t.node_val(self);
        Tensor dx = Tensor::zeros(y.shape);
        kernels::softmax_rows_backward(y.data.data(), g.data.data(), dx.data.data(), rows, cols);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += dx.data[i];
    });
}

VarId Tape::layer_norm_rows(VarId a, VarId gain, VarId bias, double eps) {
    const Tensor& va = node_val(a);
    const Tensor& vg = node_val(gain);
    const Tensor& vb = node_val(bias);
    const long rows = va.rows(), cols = va.cols();
    if (vg.numel() != cols || vb.numel() != cols)
        throw std::invalid_argument("layer_norm: shape mismatch " + va.shape_str() + " vs " + vg.shape_str());
    Tensor out = Tensor::zeros(va.shape);
    auto xhat = std::make_shared<Tensor>(Tensor::zeros(va.shape));
    auto rstd = std::make_shared<Tensor>(Tensor::zeros({rows}));
    kernels::layer_norm_rows(va.data.data(), vg.data.data(), vb.data.data(), out.data.data(),
                             xhat->data.data(), rstd->data.data(), rows, cols, eps);
    return push(std::move(out), [a, gain, bias, rows, cols, xhat, rstd](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        Tensor dx = Tensor::zeros({rows, cols});
        Tensor dgain = Tensor::zeros({cols});
        Tensor dbias = Tensor::zeros({cols});
        kernels::layer_norm_rows_backward(xhat->data.data(), rstd->data.data(),
                                          t.node_val(gain).data.data(), g.data.data(),
                                          dx.data.data(), dgain.data.data(), dbias.data.data(),
                                          rows, cols);
        Tensor& ga = t.grad_buf(a);
        Tensor& gg = t.grad_buf(gain);
        Tensor& gb = t.grad_buf(bias);
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += dx.data[i];
        for (std::size_t i = 0; i < gg.data.size(); ++i) gg.data[i] += dgain.data[i];
        for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += dbias.data[i];
    });
}

VarId Tape::embedding_lookup(VarId table, const std::vector<int>& ids) {
    const Tensor& tb = node_val(table);
    const long vocab = tb.rows(), d = tb.cols();
    for (int id : ids)
        if (id < 0 || id >= vocab)
            throw std::invalid_argument("embedding_lookup: id " + std::to_string(id) +
                                        " out of range for table " + tb.shape_str());
    const long n = static_cast<long>(ids.size());
    Tensor out = Tensor::zeros({n, d});
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < d; ++j) out.at(i, j) = tb.at(ids[static_cast<std::size_t>(i)], j);
    return push(std::move(out), [table, ids, d](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        Tensor& gt = t.grad_buf(table);
        // scatter-add kept serial: rows may repeat
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (long j = 0; j < d; ++j) gt.at(ids[i], j) += g.at(static_cast<long>(i), j);
    });
}

VarId Tape::concat_rows(const std::vector<VarId>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty part list");
    const long cols = node_val(parts[0]).cols();
    long rows = 0;
    for (VarId p : parts) {
        if (node_val(p).cols() != cols)
            throw std::invalid_argument("concat_rows: shape mismatch " + node_val(parts[0]).shape_str() +
                                        " vs " + node_val(p).shape_str());
        rows += node_val(p).rows();
    }
    Tensor out = Tensor::zeros({rows, cols});
    long r = 0;
    for (VarId p : parts) {
        const Tensor& v = node_val(p);
        std::copy(v.data.begin(), v.data.end(), out.data.begin() + r * cols);
        r += v.rows();
    }
    return push(std::move(out), [parts, cols](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        long r = 0;
        for (VarId p : parts) {
            Tensor& gp = t.grad_buf(p);
            const long pr = t.node_val(p).rows();
            for (long i = 0; i < pr * cols; ++i) gp.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(r * cols + i)];
            r += pr;
        }
    });
}

VarId Tape::concat_cols(const std::vector<VarId>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty part list");
    const long rows = node_val(parts[0]).rows();
    long cols = 0;
    for (VarId p : parts) {
        if (node_val(p).rows() != rows)
            throw std::invalid_argument("concat_cols: shape mismatch " + node_val(parts[0]).shape_str() +
                                        " vs " + node_val(p).shape_str());
        cols += node_val(p).cols();
    }
    Tensor out = Tensor::zeros({rows, cols});
    long c = 0;
    for (VarId p : parts) {
        const Tensor& v = node_val(p);
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < v.cols(); ++j) out.at(i, c + j) = v.at(i, j);
        c += v.cols();
    }
    return push(std::move(out), [parts, rows](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        long c = 0;
        for (VarId p : parts) {
            Tensor& gp = t.grad_buf(p);
            const long pc = t.node_val(p).cols();
            for (long i = 0; i < rows; ++i)
                for (long j = 0; j < pc; ++j) gp.at(i, j) += g.at(i, c + j);
            c += pc;
        }
    });
}

VarId Tape::take_row(VarId a, long row) {
    const Tensor& va = node_val(a);
    if (row < 0 || row >= va.rows())
        throw std::invalid_argument("take_row: row " + std::to_string(row) + " out of range for " + va.shape_str());
    const long cols = va.cols();
    Tensor out = Tensor::zeros({1, cols});
    for (long j = 0; j < cols; ++j) out.at(0, j) = va.at(row, j);
    return push(std::move(out), [a, row, cols](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_buf(a);
        for (long j = 0; j < cols; ++j) ga.at(row, j) += g.at(0, j);
    });
}

VarId Tape::mean_rows(VarId a) {
    const Tensor& va = node_val(a);
    const long rows = va.rows(), cols = va.cols();
    Tensor out = Tensor::zeros({1, cols});
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) out.at(0, j) += va.at(i, j);
    for (long j = 0; j < cols; ++j) out.at(0, j) /= static_cast<double>(rows);
    return push(std::move(out), [a, rows, cols](Tape& t, VarId self) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_buf(a);
        const double inv = 1.0 / static_cast<double>(rows);
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j) ga.at(i, j) += g.at(0, j) * inv;
    });
}

VarId Tape::cross_entropy(VarId logits, const std::vector<int>& targets) {
    const Tensor& vl = node_val(logits);
    const long rows = vl.rows(), cols = vl.cols();
    if (static_cast<long>(targets.size()) != rows)
        throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) +
                                    " targets for logits " + vl.shape_str());
    for (int t : targets)
        if (t < 0 || t >= cols)
            throw std::invalid_argument("cross_entropy: target " + std::to_string(t) +
                                        " out of range for " + vl.shape_str());
    auto probs = std::make_shared<Tensor>(Tensor::zeros(vl.shape));
    kernels::softmax_rows(vl.data.data(), probs->data.data(), rows, cols);
    double loss = 0.0;
    for (long i = 0; i < rows; ++i)
        loss -= std::log(std::max(probs->at(i, targets[static_cast<std::size_t>(i)]), kLogEps));
    loss /= static_cast<double>(rows);
    return push(Tensor::scalar(loss), [logits, targets, probs, rows, cols](Tape& t, VarId self) {
        const double g = t.grad_ref(self).data[0] / static_cast<double>(rows);
        Tensor& gl = t.grad_buf(logits);
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j) {
                const double onehot = (j == targets[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
                gl.at(i, j) += g * (probs->at(i, j) - onehot);
            }
    });
}

void Tape::backward(VarId loss) {
    if (node_val(loss).numel() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got " + node_val(loss).shape_str());
    for (Node& n : nodes_) n.grad = Tensor{};
    grad_buf(loss).data[0] = 1.0;
    for (VarId id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.grad.data.empty() || !n.back) continue;
        n.back(*this, id);
    }
}

Gradients Tape::grads() const {
    Gradients out;
    for (const auto& [name, id] : params_) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.grad.data.empty())
            out[name] = Tensor::zeros(node_val(id).shape);
        else
            out[name] = n.grad;
    }
    return out;
}

}  // namespace uid
