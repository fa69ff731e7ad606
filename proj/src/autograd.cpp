#include "motiondiff/autograd.hpp"

#include "motiondiff/errors.hpp"

#include <cmath>

namespace motiondiff::ag {

namespace {

void require_same_tape(Var a, Var b) {
    if (a.tape() != b.tape()) throw InputError("variables belong to different tapes");
}

void require_shape(bool ok, const char* op, const Matrix& a, const Matrix& b) {
    if (!ok)
        throw DimensionError(std::string(op) + ": incompatible shapes " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
}

double sigmoid(double z) {
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

Matrix one_by_one(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

}  // namespace

Var Tape::constant(Matrix value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::variable(Matrix value) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = record_;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
    Node n;
    n.value = std::move(value);
    if (record_) {
        for (Var in : inputs) {
            if (in.tape() != this) throw InputError("variable from a different tape");
            n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(in.id())].requires_grad;
        }
        if (n.requires_grad) n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::accumulate(Var v, const Matrix& g) {
    Node& n = nodes_[static_cast<std::size_t>(v.id())];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
        n.grad = g;
        n.has_grad = true;
    } else {
        n.grad += g;
    }
}

Matrix Tape::grad(Var v) const {
    const Node& n = nodes_[static_cast<std::size_t>(v.id())];
    if (n.has_grad) return n.grad;
    return Matrix::Zero(n.value.rows(), n.value.cols());
}

void Tape::backward(Var target) {
    if (!record_) throw InputError("backward() on a tape that does not record");
    if (target.tape() != this) throw InputError("backward target from a different tape");
    const Matrix& tv = value(target);
    if (tv.rows() != 1 || tv.cols() != 1) throw DimensionError("backward target must be 1x1");
    for (auto& n : nodes_) {
        n.has_grad = false;
        n.grad.resize(0, 0);
    }
    accumulate(target, Matrix::Ones(1, 1));
    for (int i = target.id(); i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.has_grad && n.backward) n.backward(*this, n.grad);
    }
}

Var add(Var a, Var b) {
    require_same_tape(a, b);
    require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add", a.value(), b.value());
    return a.tape()->push(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var sub(Var a, Var b) {
    require_same_tape(a, b);
    require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub", a.value(), b.value());
    return a.tape()->push(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, -g);
    });
}

Var mul(Var a, Var b) {
    require_same_tape(a, b);
    require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "mul", a.value(), b.value());
    return a.tape()->push(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g.cwiseProduct(b.value()));
        t.accumulate(b, g.cwiseProduct(a.value()));
    });
}

Var scale(Var a, double s) {
    return a.tape()->push(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var matmul(Var a, Var b) {
    require_same_tape(a, b);
    require_shape(a.cols() == b.rows(), "matmul", a.value(), b.value());
    return a.tape()->push(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
        if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
        if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
    });
}

Var add_row(Var a, Var row) {
    require_same_tape(a, row);
    require_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row", a.value(), row.value());
    Matrix out = a.value().rowwise() + row.value().row(0);
    return a.tape()->push(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(row, g.colwise().sum());
    });
}

Var linear(Var x, Var weight, Var bias) {
    require_same_tape(x, weight);
    require_same_tape(x, bias);
    require_shape(x.cols() == weight.rows(), "linear", x.value(), weight.value());
    require_shape(bias.rows() == 1 && bias.cols() == weight.cols(), "linear bias", weight.value(),
                  bias.value());
    Matrix out = x.value() * weight.value();
    out.rowwise() += bias.value().row(0);
    return x.tape()->push(std::move(out), {x, weight, bias}, [x, weight, bias](Tape& t, const Matrix& g) {
        if (t.requires_grad(x)) t.accumulate(x, g * weight.value().transpose());
        if (t.requires_grad(weight)) t.accumulate(weight, x.value().transpose() * g);
        t.accumulate(bias, g.colwise().sum());
    });
}

Var silu(Var x) {
    const Matrix& v = x.value();
    Matrix out(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = v(i) * sigmoid(v(i));
    return x.tape()->push(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
        const Matrix& v = x.value();
        Matrix gx(v.rows(), v.cols());
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double s = sigmoid(v(i));
            gx(i) = g(i) * s * (1.0 + v(i) * (1.0 - s));
        }
        t.accumulate(x, gx);
    });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
    require_same_tape(x, gamma);
    require_same_tape(x, beta);
    const Matrix& v = x.value();
    require_shape(gamma.rows() == 1 && gamma.cols() == v.cols(), "layer_norm", v, gamma.value());
    require_shape(beta.rows() == 1 && beta.cols() == v.cols(), "layer_norm", v, beta.value());
    const auto d = static_cast<double>(v.cols());

    Matrix xhat(v.rows(), v.cols());
    Eigen::VectorXd rstd(v.rows());
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        const double mu = v.row(r).mean();
        const double var = (v.row(r).array() - mu).square().sum() / d;
        rstd(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (v.row(r).array() - mu) * rstd(r);
    }
    Matrix out = xhat.array().rowwise() * gamma.value().row(0).array();
    out.rowwise() += beta.value().row(0);

    return x.tape()->push(std::move(out), {x, gamma, beta},
                          [x, gamma, beta, xhat, rstd, d](Tape& t, const Matrix& g) {
                              t.accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
                              t.accumulate(beta, g.colwise().sum());
                              if (!t.requires_grad(x)) return;
                              Matrix gxhat = g.array().rowwise() * gamma.value().row(0).array();
                              Matrix gx(g.rows(), g.cols());
                              for (Eigen::Index r = 0; r < g.rows(); ++r) {
                                  const double m1 = gxhat.row(r).sum() / d;
                                  const double m2 = gxhat.row(r).dot(xhat.row(r)) / d;
                                  gx.row(r) = rstd(r) * (gxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                              }
                              t.accumulate(x, gx);
                          });
}

Var mean_rows(Var x) {
    const auto n = x.rows();
    return x.tape()->push(x.value().colwise().mean(), {x}, [x, n](Tape& t, const Matrix& g) {
        t.accumulate(x, g.replicate(n, 1) / static_cast<double>(n));
    });
}

Var repeat_rows(Var row, Eigen::Index n) {
    if (row.rows() != 1) throw DimensionError("repeat_rows expects a single row");
    return row.tape()->push(row.value().replicate(n, 1), {row},
                            [row](Tape& t, const Matrix& g) { t.accumulate(row, g.colwise().sum()); });
}

Var sum_all(Var x) {
    return x.tape()->push(one_by_one(x.value().sum()), {x}, [x](Tape& t, const Matrix& g) {
        t.accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
    });
}

Var attention(Var q, Var k, Var v, int heads) {
    require_same_tape(q, k);
    require_same_tape(q, v);
    const Matrix& Q = q.value();
    const Matrix& K = k.value();
    const Matrix& V = v.value();
    require_shape(Q.cols() == K.cols(), "attention q/k", Q, K);
    require_shape(K.rows() == V.rows() && K.cols() == V.cols(), "attention k/v", K, V);
    if (heads < 1 || Q.cols() % heads != 0) throw DimensionError("attention width not divisible by heads");
    if (K.rows() < 1) throw DimensionError("attention over an empty key set");

    const Eigen::Index dh = Q.cols() / heads;
    const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Matrix> probs(static_cast<std::size_t>(heads));
    Matrix out(Q.rows(), V.cols());
    for (int h = 0; h < heads; ++h) {
        const auto c0 = h * dh;
        Matrix s = (Q.middleCols(c0, dh) * K.middleCols(c0, dh).transpose()) * inv;
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            const double mx = s.row(r).maxCoeff();
            s.row(r) = (s.row(r).array() - mx).exp();
            s.row(r) /= s.row(r).sum();
        }
        out.middleCols(c0, dh) = s * V.middleCols(c0, dh);
        probs[static_cast<std::size_t>(h)] = std::move(s);
    }

    return q.tape()->push(std::move(out), {q, k, v},
                          [q, k, v, heads, dh, inv, probs = std::move(probs)](Tape& t, const Matrix& g) {
                              const Matrix& Q = q.value();
                              const Matrix& K = k.value();
                              const Matrix& V = v.value();
                              Matrix gq = Matrix::Zero(Q.rows(), Q.cols());
                              Matrix gk = Matrix::Zero(K.rows(), K.cols());
                              Matrix gv = Matrix::Zero(V.rows(), V.cols());
                              for (int h = 0; h < heads; ++h) {
                                  const auto c0 = h * dh;
                                  const Matrix& P = probs[static_cast<std::size_t>(h)];
                                  const Matrix go = g.middleCols(c0, dh);
                                  gv.middleCols(c0, dh) += P.transpose() * go;
                                  Matrix gp = go * V.middleCols(c0, dh).transpose();
                                  Eigen::VectorXd rowdot = gp.cwiseProduct(P).rowwise().sum();
                                  Matrix gs = P.cwiseProduct(gp.colwise() - rowdot) * inv;
                                  gq.middleCols(c0, dh) += gs * K.middleCols(c0, dh);
                                  gk.middleCols(c0, dh) += gs.transpose() * Q.middleCols(c0, dh);
                              }
                              t.accumulate(q, gq);
                              t.accumulate(k, gk);
                              t.accumulate(v, gv);
                          });
}

Var depthwise_conv_rows(Var x, Var weight, Var bias) {
    require_same_tape(x, weight);
    require_same_tape(x, bias);
    const Matrix& X = x.value();
    const Matrix& W = weight.value();
    require_shape(W.cols() == X.cols() && W.rows() % 2 == 1, "depthwise_conv_rows", X, W);
    require_shape(bias.rows() == 1 && bias.cols() == X.cols(), "depthwise_conv_rows bias", X, bias.value());
    const Eigen::Index n = X.rows();
    const Eigen::Index K = W.rows();
    const Eigen::Index pad = K / 2;

    Matrix out = bias.value().replicate(n, 1);
    for (Eigen::Index tt = 0; tt < n; ++tt)
        for (Eigen::Index kk = 0; kk < K; ++kk) {
            const Eigen::Index src = tt + kk - pad;
            if (src < 0 || src >= n) continue;
            out.row(tt) += W.row(kk).cwiseProduct(X.row(src));
        }

    return x.tape()->push(std::move(out), {x, weight, bias}, [x, weight, bias, n, K, pad](Tape& t, const Matrix& g) {
        const Matrix& X = x.value();
        const Matrix& W = weight.value();
        Matrix gx = Matrix::Zero(X.rows(), X.cols());
        Matrix gw = Matrix::Zero(W.rows(), W.cols());
        for (Eigen::Index tt = 0; tt < n; ++tt)
            for (Eigen::Index kk = 0; kk < K; ++kk) {
                const Eigen::Index src = tt + kk - pad;
                if (src < 0 || src >= n) continue;
                gx.row(src) += W.row(kk).cwiseProduct(g.row(tt));
                gw.row(kk) += X.row(src).cwiseProduct(g.row(tt));
            }
        t.accumulate(x, gx);
        t.accumulate(weight, gw);
        t.accumulate(bias, g.colwise().sum());
    });
}

Var conv_along_features(Var x, Var weight, Var bias) {
    require_same_tape(x, weight);
    require_same_tape(x, bias);
    const Matrix& X = x.value();
    const Matrix& W = weight.value();
    require_shape(W.rows() == 1 && W.cols() % 2 == 1, "conv_along_features", X, W);
    require_shape(bias.rows() == 1 && bias.cols() == 1, "conv_along_features bias", X, bias.value());
    const Eigen::Index d = X.cols();
    const Eigen::Index K = W.cols();
    const Eigen::Index pad = K / 2;

    Matrix out = Matrix::Constant(X.rows(), d, bias.value()(0, 0));
    for (Eigen::Index kk = 0; kk < K; ++kk) {
        const double w = W(0, kk);
        const Eigen::Index shift = kk - pad;
        // out[:, j] += w * X[:, j + shift] for in-range columns
        const Eigen::Index j0 = std::max<Eigen::Index>(0, -shift);
        const Eigen::Index j1 = std::min<Eigen::Index>(d, d - shift);
        if (j1 > j0) out.middleCols(j0, j1 - j0) += w * X.middleCols(j0 + shift, j1 - j0);
    }

    return x.tape()->push(std::move(out), {x, weight, bias}, [x, weight, bias, d, K, pad](Tape& t, const Matrix& g) {
        const Matrix& X = x.value();
        const Matrix& W = weight.value();
        Matrix gx = Matrix::Zero(X.rows(), X.cols());
        Matrix gw = Matrix::Zero(1, K);
        for (Eigen::Index kk = 0; kk < K; ++kk) {
            const Eigen::Index shift = kk - pad;
            const Eigen::Index j0 = std::max<Eigen::Index>(0, -shift);
            const Eigen::Index j1 = std::min<Eigen::Index>(d, d - shift);
            if (j1 <= j0) continue;
            gx.middleCols(j0 + shift, j1 - j0) += W(0, kk) * g.middleCols(j0, j1 - j0);
            gw(0, kk) = g.middleCols(j0, j1 - j0).cwiseProduct(X.middleCols(j0 + shift, j1 - j0)).sum();
        }
        t.accumulate(x, gx);
        t.accumulate(weight, gw);
        t.accumulate(bias, one_by_one(g.sum()));
    });
}

Var mse(Var pred, const Matrix& target) {
    const Matrix& P = pred.value();
    require_shape(P.rows() == target.rows() && P.cols() == target.cols(), "mse", P, target);
    Matrix diff = P - target;
    const double n = static_cast<double>(P.size());
    const double value = diff.squaredNorm() / n;
    return pred.tape()->push(one_by_one(value), {pred}, [pred, diff, n](Tape& t, const Matrix& g) {
        t.accumulate(pred, diff * (2.0 * g(0, 0) / n));
    });
}

Var bce_with_logits(Var logits, const Matrix& targets) {
    const Matrix& Z = logits.value();
    require_shape(Z.rows() == targets.rows() && Z.cols() == targets.cols(), "bce_with_logits", Z, targets);
    const double n = static_cast<double>(Z.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < Z.size(); ++i) {
        const double z = Z(i);
        total += std::max(z, 0.0) - z * targets(i) + std::log1p(std::exp(-std::abs(z)));
    }
    return logits.tape()->push(one_by_one(total / n), {logits}, [logits, targets, n](Tape& t, const Matrix& g) {
        const Matrix& Z = logits.value();
        Matrix gz(Z.rows(), Z.cols());
        for (Eigen::Index i = 0; i < Z.size(); ++i) gz(i) = (sigmoid(Z(i)) - targets(i)) * g(0, 0) / n;
        t.accumulate(logits, gz);
    });
}

Var cross_entropy(Var logits, int target_class) {
    const Matrix& Z = logits.value();
    if (Z.rows() != 1) throw DimensionError("cross_entropy expects a single row of logits");
    if (target_class < 0 || target_class >= Z.cols()) throw InputError("cross_entropy class out of range");
    const double mx = Z.maxCoeff();
    const double lse = mx + std::log((Z.array() - mx).exp().sum());
    Matrix probs = (Z.array() - lse).exp();
    return logits.tape()->push(one_by_one(lse - Z(0, target_class)), {logits},
                               [logits, probs, target_class](Tape& t, const Matrix& g) {
                                   Matrix gz = probs;
                                   gz(0, target_class) -= 1.0;
                                   t.accumulate(logits, gz * g(0, 0));
                               });
}

Var Binder::operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    Var v = tape_.variable(params_.at(name));
    bound_.emplace(name, v);
    return v;
}

std::map<std::string, Matrix> Binder::gradients() const {
    std::map<std::string, Matrix> out;
    for (const auto& [name, v] : bound_) out.emplace(name, tape_.grad(v));
    return out;
}

}  // namespace motiondiff::ag
