#pragma once

#include <cstddef>
#include <cstdint>

namespace lbseg::testing {

// Counts of checked instances and violations for the filtering-layer
// properties over random (bank, map) pairs.
struct FilterPropertyReport {
  std::size_t pairs = 0;
  std::size_t identity_checked = 0, identity_violations = 0;
  double identity_max_error = 0.0;
  std::size_t suppression_checked = 0, suppression_violations = 0;
  std::size_t monotone_checked = 0, monotone_violations = 0;
  std::size_t order_checked = 0, order_violations = 0;

  bool ok() const {
    return identity_violations + suppression_violations + monotone_violations + order_violations == 0 &&
           identity_checked > 0 && suppression_checked > 0 && monotone_checked > 0 && order_checked > 0;
  }
};

FilterPropertyReport check_filter_properties(std::size_t n_pairs, std::uint64_t seed);

}  // namespace lbseg::testing
