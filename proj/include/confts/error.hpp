#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace confts {

enum class Errc {
  series_too_short,
  invalid_tau,
  non_finite_loss,
  dimension_mismatch,
  invalid_interval,
  empty_score_set,
  all_rows_in_bag,
  length_mismatch,
  empty_input,
  zero_range,
  non_positive_mean,
  parse_error,
  missing_value,
  empty_file,
  invalid_argument,
};

std::string_view to_string(Errc code) noexcept;

// Single exception type for every library failure; `code()` tells callers
// which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace confts
