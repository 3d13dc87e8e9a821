#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace repairbench {

/// Line-based unified diff (Myers) from `before` to `after` with `context`
/// lines around each hunk. Returns an empty string when the texts are equal.
/// Missing final newlines are marked with `\ No newline at end of file`.
std::string unified_diff(std::string_view before, std::string_view after, std::string_view path,
                         int context = 3);

/// Applies a unified diff produced by `unified_diff` (or any strict unified
/// diff) to `original`. Context and removed lines must match exactly; returns
/// nullopt when the diff does not apply.
std::optional<std::string> apply_unified_diff(std::string_view original, std::string_view diff);

}  // namespace repairbench
