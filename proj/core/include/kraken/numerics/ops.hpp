#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kraken/numerics/tensor.hpp"

// Plain forward kernels. Every reduction accumulates in ascending index order
// starting from 0.0, so results do not depend on threading or call site.
namespace kraken::ops {

inline constexpr double kDefaultLayerNormEps = 1e-5;

// c[i][j] = sum_t a[i][t] * b[t][j]
Tensor matmul(const Tensor& a, const Tensor& b);
// c = a * b^T
Tensor matmul_bt(const Tensor& a, const Tensor& b);
// c = a^T * b
Tensor matmul_at(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// Broadcast a rank-1 bias of length cols over every row.
Tensor add_bias(const Tensor& a, const Tensor& bias);
// ((t0 + t1) + t2) + ... ; the single reduction order shared by the
// monolithic model and the simulated AllReduce.
Tensor sum_ordered(std::span<const Tensor> parts);

Tensor softmax_rows(const Tensor& a);
// Causal softmax: query row i sits at absolute position offset + i and may
// attend to key columns j <= offset + i. Masked entries contribute exactly 0,
// as if -inf had been added before exponentiation.
Tensor causal_softmax_rows(const Tensor& scores, std::size_t offset);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = kDefaultLayerNormEps);

double gelu(double x);
double gelu_grad(double x);
Tensor gelu(const Tensor& x);

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices);

double sum(const Tensor& a);

// Throws NumericError if any element is NaN or infinite.
void check_finite(const Tensor& t, const char* op);

}  // namespace kraken::ops
