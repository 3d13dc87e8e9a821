#pragma once

#include <cstddef>
#include <string>

namespace repairbench {

/// 100 * num / den rounded half-up to two decimals.
/// Exact for counts; `-` when den is 0.
std::string percent_2dp(std::size_t num, std::size_t den);

/// Same rounding for an already computed percentage.
std::string fixed_2dp(double value);

/// Integer part of 100 * num / den (the overlap tables truncate).
long percent_floor(std::size_t num, std::size_t den);

/// Six significant digits, or `< 0.00001` below 1e-5.
std::string format_p_value(double p);

}  // namespace repairbench
