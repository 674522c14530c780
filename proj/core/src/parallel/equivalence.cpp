#include "kraken/parallel/equivalence.hpp"

#include <algorithm>
#include <cmath>

#include "kraken/numerics/errors.hpp"

namespace kraken::parallel {

namespace {

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

EquivalenceReport equivalence_report(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("equivalence_report: " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
  EquivalenceReport r;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.max_abs = std::max(r.max_abs, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  r.max_rel = scale > 0.0 ? r.max_abs / scale : r.max_abs;
  if (a.size() == 0) return r;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) agree += argmax(a.row(i)) == argmax(b.row(i)) ? 1 : 0;
  r.argmax_row_agreement = static_cast<double>(agree) / static_cast<double>(a.rows());
  return r;
}

}  // namespace kraken::parallel
