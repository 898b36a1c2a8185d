#pragma once

#include <stdexcept>
#include <string>

namespace traitlab {

// Failure vocabulary shared by all modules. The CLI maps each code onto a
// process exit status: 2 validation/leakage, 3 malformed input,
// 4 numerical degeneracy.
enum class errc {
  // validation
  quota_mismatch,
  invalid_alpha,
  // malformed input
  malformed_clip_name,
  duplicate_clip,
  empty_split,
  empty_input,
  empty_clip,
  empty_video,
  frame_too_small,
  dimension_mismatch,
  length_mismatch,
  out_of_range,
  missing_paired_condition,
  io_failure,
  parse_failure,
  // numerical degeneracy
  degenerate_configuration,
  constant_input,
  too_few_samples,
  rho_at_unity,
  non_finite_gradient,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitMalformedInput = 3;
constexpr int kExitNumericalDegeneracy = 4;

constexpr int exit_code_for(errc code) noexcept {
  switch (code) {
    case errc::quota_mismatch:
    case errc::invalid_alpha:
      return kExitValidation;
    case errc::degenerate_configuration:
    case errc::constant_input:
    case errc::too_few_samples:
    case errc::rho_at_unity:
    case errc::non_finite_gradient:
      return kExitNumericalDegeneracy;
    default:
      return kExitMalformedInput;
  }
}

}  // namespace traitlab
