#pragma once

#include "kraken/numerics/tensor.hpp"

namespace kraken::parallel {

struct EquivalenceReport {
  double max_abs = 0.0;
  // max_abs relative to the largest magnitude in the reference `b`.
  double max_rel = 0.0;
  // Fraction of rows whose argmax (first index on ties) agrees.
  double argmax_row_agreement = 1.0;
};

EquivalenceReport equivalence_report(const Tensor& a, const Tensor& b);

}  // namespace kraken::parallel
