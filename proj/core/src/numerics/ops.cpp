#include "kraken/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kraken/numerics/errors.hpp"

namespace kraken::ops {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

void require_matrix(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + to_string(a.shape()));
  }
}

}  // namespace

void check_finite(const Tensor& t, const char* op) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite value produced");
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c({m, n});
  // i-t-j order: each c[i][j] still accumulates over t in ascending order.
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c.data().data() + i * n;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a.at(i, t);
      const double* brow = b.data().data() + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  check_finite(c, "matmul");
  return c;
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_bt");
  require_matrix(b, "matmul_bt");
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_bt: inner dimensions differ, " + to_string(a.shape()) +
                         " x " + to_string(b.shape()) + "^T");
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const auto arow = a.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto brow = b.row(j);
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += arow[t] * brow[t];
      c.at(i, j) = acc;
    }
  }
  check_finite(c, "matmul_bt");
  return c;
}

Tensor matmul_at(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_at");
  require_matrix(b, "matmul_at");
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_at: inner dimensions differ, " + to_string(a.shape()) +
                         "^T x " + to_string(b.shape()));
  }
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  Tensor c({m, n});
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a.at(t, i);
      double* crow = c.data().data() + i * n;
      const double* brow = b.data().data() + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  check_finite(c, "matmul_at");
  return c;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor t({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  check_finite(c, "add");
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  check_finite(c, "sub");
  return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
  check_finite(c, "mul");
  return c;
}

Tensor scale(const Tensor& a, double s) {
  Tensor c = a;
  for (auto& v : c.data()) v *= s;
  check_finite(c, "scale");
  return c;
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  if (bias.rank() != 1 || bias.size() != a.cols()) {
    throw DimensionError("add_bias: bias " + to_string(bias.shape()) + " does not fit " +
                         to_string(a.shape()));
  }
  Tensor c = a;
  const std::size_t n = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) c.at(i, j) += bias[j];
  check_finite(c, "add_bias");
  return c;
}

Tensor sum_ordered(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("sum_ordered: no operands");
  Tensor acc(parts.front().shape());
  for (const auto& p : parts) {
    require_same_shape(acc, p, "sum_ordered");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += p[i];
  }
  check_finite(acc, "sum_ordered");
  return acc;
}

namespace {

void softmax_prefix(std::span<const double> in, std::span<double> out, std::size_t valid) {
  if (valid == 0) throw NumericError("softmax: row has no unmasked entries");
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < valid; ++j) mx = std::max(mx, in[j]);
  if (!std::isfinite(mx)) throw NumericError("softmax: non-finite row maximum");
  double total = 0.0;
  for (std::size_t j = 0; j < valid; ++j) {
    out[j] = std::exp(in[j] - mx);
    total += out[j];
  }
  const double inv = 1.0 / total;
  for (std::size_t j = 0; j < valid; ++j) out[j] *= inv;
  for (std::size_t j = valid; j < out.size(); ++j) out[j] = 0.0;
}

}  // namespace

Tensor softmax_rows(const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.rows(); ++i) softmax_prefix(a.row(i), out.row(i), a.cols());
  return out;
}

Tensor causal_softmax_rows(const Tensor& scores, std::size_t offset) {
  Tensor out(scores.shape());
  const std::size_t n = scores.cols();
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    softmax_prefix(scores.row(i), out.row(i), std::min(n, offset + i + 1));
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (!(eps > 0.0)) throw NumericError("layer_norm: eps must be positive");
  const std::size_t d = x.cols();
  if (gamma.size() != d || beta.size() != d) {
    throw DimensionError("layer_norm: gain/bias " + to_string(gamma.shape()) + "/" +
                         to_string(beta.shape()) + " do not fit " + to_string(x.shape()));
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    auto o = out.row(i);
    for (std::size_t j = 0; j < d; ++j) o[j] = (row[j] - mean) * inv * gamma[j] + beta[j];
  }
  check_finite(out, "layer_norm");
  return out;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Tensor gelu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.data()) v = gelu(v);
  check_finite(out, "gelu");
  return out;
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
  if (start + count > a.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of " + to_string(a.shape()));
  }
  Tensor out({a.rows(), count});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out.at(i, j) = a.at(i, start + j);
  return out;
}

Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count) {
  if (start + count > a.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of " + to_string(a.shape()));
  }
  const std::size_t c = a.cols();
  std::vector<double> data(a.data().begin() + static_cast<std::ptrdiff_t>(start * c),
                           a.data().begin() + static_cast<std::ptrdiff_t>((start + count) * c));
  return Tensor({count, c}, std::move(data));
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) throw DimensionError("concat_cols: row counts differ");
    n += p.cols();
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      const auto src = p.row(i);
      std::copy(src.begin(), src.end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(off));
      off += p.cols();
    }
  }
  return out;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  std::vector<double> data;
  for (const auto& p : parts) {
    if (p.cols() != n) throw DimensionError("concat_rows: column counts differ");
    m += p.rows();
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  return Tensor({m, n}, std::move(data));
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices) {
  const std::size_t n = table.cols();
  Tensor out({indices.size(), n});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= table.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(indices[i]) +
                           " out of range for " + to_string(table.shape()));
    }
    const auto src = table.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

double sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return acc;
}

}  // namespace kraken::ops
