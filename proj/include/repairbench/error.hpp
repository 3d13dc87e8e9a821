#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repairbench {

enum class ErrorCode {
    MalformedId,
    ManifestParseError,
    ManifestMissingHook,
    EmptyBugList,
    DuplicateBug,
    UnknownBug,
    HookFailed,
    DestNotEmpty,
    InfoHookFailed,
    MissingFailingTests,
    PathNotFound,
    UnknownAbstractParam,
    UnmappedAbstractParam,
    RenderError,
    CommandTooLong,
    SpawnFailed,
    PatchDoesNotApply,
    UnparseableToolOutput,
    InvalidConfig,
    DuplicateAttempt,
    UndeclaredReference,
    EmptyPlan,
    CampaignIoError,
    InconsistentRecord,
    PatchedInput,
    InvalidCatalog,
    DegenerateTable,
    UnsupportedDf,
    UnknownBenchmark,
    IoError,
    ParseError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable code. Every failure the framework
/// reports to callers goes through this type.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace repairbench
