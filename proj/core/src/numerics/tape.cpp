#include "kraken/numerics/tape.hpp"

#include <cmath>
#include <string>

#include "kraken/numerics/errors.hpp"

namespace kraken {

void accumulate_grad(std::vector<Tensor>& grads, std::size_t index, const Tensor& delta) {
  Tensor& g = grads[index];
  if (g.empty() && g.shape().empty()) {
    g = delta;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

void Tape::check_open() const {
  if (consumed_) throw std::logic_error("tape already consumed by backward(); record a new one");
}

void Tape::check_var(Var v) const {
  if (v.index >= nodes_.size()) throw std::out_of_range("tape: unknown variable");
}

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
  check_open();
  Node node;
  node.value = std::move(value);
  node.requires_grad = recording() && requires_grad;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(std::string id, Tensor value) {
  check_open();
  Node node;
  node.value = std::move(value);
  node.parameter_id = std::move(id);
  node.requires_grad = recording();
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

const Tensor& Tape::value(Var v) const {
  check_var(v);
  return nodes_[v.index].value;
}

Var Tape::matmul(Var a, Var b) {
  Tensor out = ops::matmul(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b),
              [a, b](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                if (n[a.index].requires_grad)
                  accumulate_grad(grads, a.index, ops::matmul_bt(g, n[b.index].value));
                if (n[b.index].requires_grad)
                  accumulate_grad(grads, b.index, ops::matmul_at(n[a.index].value, g));
              });
}

Var Tape::matmul_bt(Var a, Var b) {
  Tensor out = ops::matmul_bt(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b),
              [a, b](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                if (n[a.index].requires_grad)
                  accumulate_grad(grads, a.index, ops::matmul(g, n[b.index].value));
                if (n[b.index].requires_grad)
                  accumulate_grad(grads, b.index, ops::matmul_at(g, n[a.index].value));
              });
}

Var Tape::add(Var a, Var b) {
  Tensor out = ops::add(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b),
              [a, b](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                if (n[a.index].requires_grad) accumulate_grad(grads, a.index, g);
                if (n[b.index].requires_grad) accumulate_grad(grads, b.index, g);
              });
}

Var Tape::add_bias(Var a, Var bias) {
  Tensor out = ops::add_bias(value(a), value(bias));
  return push(std::move(out), needs(a) || needs(bias),
              [a, bias](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                if (n[a.index].requires_grad) accumulate_grad(grads, a.index, g);
                if (n[bias.index].requires_grad) {
                  Tensor db(n[bias.index].value.shape());
                  for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) db[j] += g.at(i, j);
                  accumulate_grad(grads, bias.index, db);
                }
              });
}

Var Tape::add_n(std::span<const Var> parts) {
  std::vector<Tensor> values;
  values.reserve(parts.size());
  bool any = false;
  for (Var p : parts) {
    values.push_back(value(p));
    any = any || needs(p);
  }
  Tensor out = ops::sum_ordered(values);
  std::vector<Var> captured(parts.begin(), parts.end());
  return push(std::move(out), any,
              [captured](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                for (Var p : captured)
                  if (n[p.index].requires_grad) accumulate_grad(grads, p.index, g);
              });
}

Var Tape::mul(Var a, Var b) {
  Tensor out = ops::mul(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b),
              [a, b](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                if (n[a.index].requires_grad)
                  accumulate_grad(grads, a.index, ops::mul(g, n[b.index].value));
                if (n[b.index].requires_grad)
                  accumulate_grad(grads, b.index, ops::mul(g, n[a.index].value));
              });
}

Var Tape::scale(Var a, double s) {
  Tensor out = ops::scale(value(a), s);
  return push(std::move(out), needs(a),
              [a, s](const std::vector<Node>&, const Tensor& g, std::vector<Tensor>& grads) {
                accumulate_grad(grads, a.index, ops::scale(g, s));
              });
}

Var Tape::gelu(Var a) {
  Tensor out = ops::gelu(value(a));
  return push(std::move(out), needs(a),
              [a](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                const Tensor& x = n[a.index].value;
                Tensor dx(x.shape());
                for (std::size_t i = 0; i < x.size(); ++i) dx[i] = g[i] * ops::gelu_grad(x[i]);
                accumulate_grad(grads, a.index, dx);
              });
}

namespace {

// dS = P * (G - rowsum(G * P))
Tensor softmax_backward(const Tensor& p, const Tensor& g) {
  Tensor ds(p.shape());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) dot += g.at(i, j) * p.at(i, j);
    for (std::size_t j = 0; j < p.cols(); ++j) ds.at(i, j) = p.at(i, j) * (g.at(i, j) - dot);
  }
  return ds;
}

}  // namespace

Var Tape::softmax_rows(Var a) {
  Tensor out = ops::softmax_rows(value(a));
  const std::size_t self = nodes_.size();
  return push(std::move(out), needs(a),
              [a, self](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                accumulate_grad(grads, a.index, softmax_backward(n[self].value, g));
              });
}

Var Tape::causal_softmax_rows(Var a, std::size_t offset) {
  Tensor out = ops::causal_softmax_rows(value(a), offset);
  const std::size_t self = nodes_.size();
  // Masked probabilities are exactly 0, so the unmasked formula applies as-is.
  return push(std::move(out), needs(a),
              [a, self](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                accumulate_grad(grads, a.index, softmax_backward(n[self].value, g));
              });
}

Var Tape::layer_norm(Var x, Var gamma, Var beta, double eps) {
  Tensor out = ops::layer_norm(value(x), value(gamma), value(beta), eps);
  return push(
      std::move(out), needs(x) || needs(gamma) || needs(beta),
      [x, gamma, beta, eps](const std::vector<Node>& n, const Tensor& g,
                            std::vector<Tensor>& grads) {
        const Tensor& xv = n[x.index].value;
        const Tensor& gv = n[gamma.index].value;
        const std::size_t rows = xv.rows(), d = xv.cols();
        Tensor dx(xv.shape()), dgamma(gv.shape()), dbeta(gv.shape());
        std::vector<double> xhat(d), dxhat(d);
        for (std::size_t i = 0; i < rows; ++i) {
          const auto row = xv.row(i);
          double mean = 0.0;
          for (double v : row) mean += v;
          mean /= static_cast<double>(d);
          double var = 0.0;
          for (double v : row) var += (v - mean) * (v - mean);
          var /= static_cast<double>(d);
          const double inv = 1.0 / std::sqrt(var + eps);
          double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            xhat[j] = (row[j] - mean) * inv;
            dxhat[j] = g.at(i, j) * gv[j];
            dgamma[j] += g.at(i, j) * xhat[j];
            dbeta[j] += g.at(i, j);
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * xhat[j];
          }
          mean_dxhat /= static_cast<double>(d);
          mean_dxhat_xhat /= static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j)
            dx.at(i, j) = inv * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
        }
        if (n[x.index].requires_grad) accumulate_grad(grads, x.index, dx);
        if (n[gamma.index].requires_grad) accumulate_grad(grads, gamma.index, dgamma);
        if (n[beta.index].requires_grad) accumulate_grad(grads, beta.index, dbeta);
      });
}

Var Tape::slice_cols(Var a, std::size_t start, std::size_t count) {
  Tensor out = ops::slice_cols(value(a), start, count);
  return push(std::move(out), needs(a),
              [a, start, count](const std::vector<Node>& n, const Tensor& g,
                                std::vector<Tensor>& grads) {
                Tensor da(n[a.index].value.shape());
                for (std::size_t i = 0; i < g.rows(); ++i)
                  for (std::size_t j = 0; j < count; ++j) da.at(i, start + j) = g.at(i, j);
                accumulate_grad(grads, a.index, da);
              });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  std::vector<Tensor> values;
  bool any = false;
  for (Var p : parts) {
    values.push_back(value(p));
    any = any || needs(p);
  }
  Tensor out = ops::concat_cols(values);
  std::vector<Var> captured(parts.begin(), parts.end());
  return push(std::move(out), any,
              [captured](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                std::size_t off = 0;
                for (Var p : captured) {
                  const std::size_t w = n[p.index].value.cols();
                  if (n[p.index].requires_grad)
                    accumulate_grad(grads, p.index, ops::slice_cols(g, off, w));
                  off += w;
                }
              });
}

Var Tape::concat_rows(std::span<const Var> parts) {
  std::vector<Tensor> values;
  bool any = false;
  for (Var p : parts) {
    values.push_back(value(p));
    any = any || needs(p);
  }
  Tensor out = ops::concat_rows(values);
  std::vector<Var> captured(parts.begin(), parts.end());
  return push(std::move(out), any,
              [captured](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                std::size_t off = 0;
                for (Var p : captured) {
                  const std::size_t h = n[p.index].value.rows();
                  if (n[p.index].requires_grad)
                    accumulate_grad(grads, p.index, ops::slice_rows(g, off, h));
                  off += h;
                }
              });
}

Var Tape::gather_rows(Var table, std::span<const std::size_t> indices) {
  Tensor out = ops::gather_rows(value(table), indices);
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return push(std::move(out), needs(table),
              [table, idx](const std::vector<Node>& n, const Tensor& g,
                           std::vector<Tensor>& grads) {
                Tensor dt(n[table.index].value.shape());
                for (std::size_t i = 0; i < idx.size(); ++i) {
                  auto dst = dt.row(idx[i]);
                  const auto src = g.row(i);
                  for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
                }
                accumulate_grad(grads, table.index, dt);
              });
}

Var Tape::sum(Var a) {
  Tensor out({1, 1}, std::vector<double>{ops::sum(value(a))});
  return push(std::move(out), needs(a),
              [a](const std::vector<Node>& n, const Tensor& g, std::vector<Tensor>& grads) {
                accumulate_grad(grads, a.index, Tensor(n[a.index].value.shape(), g[0]));
              });
}

Var Tape::cross_entropy(Var logits, std::span<const int> targets) {
  const Tensor& z = value(logits);
  if (targets.size() != z.rows()) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         to_string(z.shape()) + " logits");
  }
  Tensor probs = ops::softmax_rows(z);
  double loss = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0) continue;
    if (static_cast<std::size_t>(targets[i]) >= z.cols())
      throw DimensionError("cross_entropy: target out of range");
    loss -= std::log(probs.at(i, static_cast<std::size_t>(targets[i])));
    ++counted;
  }
  if (counted == 0) throw NumericError("cross_entropy: every target is masked");
  loss /= static_cast<double>(counted);
  std::vector<int> tg(targets.begin(), targets.end());
  return push(Tensor({1, 1}, std::vector<double>{loss}), needs(logits),
              [logits, tg, probs = std::move(probs), counted](
                  const std::vector<Node>&, const Tensor& g, std::vector<Tensor>& grads) {
                Tensor dz(probs.shape());
                const double s = g[0] / static_cast<double>(counted);
                for (std::size_t i = 0; i < tg.size(); ++i) {
                  if (tg[i] < 0) continue;
                  for (std::size_t j = 0; j < probs.cols(); ++j) dz.at(i, j) = probs.at(i, j) * s;
                  dz.at(i, static_cast<std::size_t>(tg[i])) -= s;
                }
                accumulate_grad(grads, logits.index, dz);
              });
}

GradientMap Tape::backward(Var output, const Tensor& seed_grad) {
  check_open();
  check_var(output);
  if (!recording()) throw std::logic_error("tape recorded in inference mode has no gradients");
  if (seed_grad.shape() != nodes_[output.index].value.shape()) {
    throw DimensionError("backward: seed gradient " + to_string(seed_grad.shape()) +
                         " does not match output " +
                         to_string(nodes_[output.index].value.shape()));
  }
  consumed_ = true;

  std::vector<Tensor> grads(nodes_.size());
  grads[output.index] = seed_grad;
  for (std::size_t i = output.index + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.requires_grad || grads[i].empty() || !node.backward) continue;
    node.backward(nodes_, grads[i], grads);
  }

  GradientMap result;
  for (std::size_t i = 0; i <= output.index; ++i) {
    const Node& node = nodes_[i];
    if (node.parameter_id.empty() || !node.requires_grad) continue;
    Tensor g = grads[i].empty() ? Tensor(node.value.shape()) : std::move(grads[i]);
    auto [it, inserted] = result.try_emplace(node.parameter_id, g);
    if (!inserted) {
      for (std::size_t k = 0; k < g.size(); ++k) it->second[k] += g[k];
    }
  }
  return result;
}

}  // namespace kraken
