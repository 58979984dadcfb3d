#include "confts/error.hpp"

namespace confts {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::series_too_short: return "SeriesTooShort";
    case Errc::invalid_tau: return "InvalidTau";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::invalid_interval: return "InvalidInterval";
    case Errc::empty_score_set: return "EmptyScoreSet";
    case Errc::all_rows_in_bag: return "AllRowsInBag";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::empty_input: return "EmptyInput";
    case Errc::zero_range: return "ZeroRange";
    case Errc::non_positive_mean: return "NonPositiveMean";
    case Errc::parse_error: return "ParseError";
    case Errc::missing_value: return "MissingValue";
    case Errc::empty_file: return "EmptyFile";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace confts
