#pragma once

#include <array>
#include <string>

#include "traitlab/errors.hpp"

namespace traitlab {

// The four experimental conditions. Order is fixed and shared by reports,
// file naming, and the comparison table.
enum class Condition { face = 0, background = 1, face_bg = 2, entire_frame = 3 };

inline constexpr std::array<Condition, 4> kConditions = {
    Condition::face, Condition::background, Condition::face_bg,
    Condition::entire_frame};

// Token used in flags, config files, and output file names.
const char* condition_token(Condition c) noexcept;

// Human label used in report tables ("face", "bg", "face+bg", "entire frame").
const char* condition_label(Condition c) noexcept;

// Parse a token; throws parse_failure on anything outside the four names.
Condition condition_from_token(const std::string& token);

}  // namespace traitlab
