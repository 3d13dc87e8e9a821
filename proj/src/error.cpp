#include "repairbench/error.hpp"

namespace repairbench {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedId: return "MALFORMED_ID";
        case ErrorCode::ManifestParseError: return "MANIFEST_PARSE_ERROR";
        case ErrorCode::ManifestMissingHook: return "MANIFEST_MISSING_HOOK";
        case ErrorCode::EmptyBugList: return "EMPTY_BUG_LIST";
        case ErrorCode::DuplicateBug: return "DUPLICATE_BUG";
        case ErrorCode::UnknownBug: return "UNKNOWN_BUG";
        case ErrorCode::HookFailed: return "HOOK_FAILED";
        case ErrorCode::DestNotEmpty: return "DEST_NOT_EMPTY";
        case ErrorCode::InfoHookFailed: return "INFO_HOOK_FAILED";
        case ErrorCode::MissingFailingTests: return "MISSING_FAILING_TESTS";
        case ErrorCode::PathNotFound: return "PATH_NOT_FOUND";
        case ErrorCode::UnknownAbstractParam: return "UNKNOWN_ABSTRACT_PARAM";
        case ErrorCode::UnmappedAbstractParam: return "UNMAPPED_ABSTRACT_PARAM";
        case ErrorCode::RenderError: return "RENDER_ERROR";
        case ErrorCode::CommandTooLong: return "COMMAND_TOO_LONG";
        case ErrorCode::SpawnFailed: return "SPAWN_FAILED";
        case ErrorCode::PatchDoesNotApply: return "PATCH_DOES_NOT_APPLY";
        case ErrorCode::UnparseableToolOutput: return "UNPARSEABLE_TOOL_OUTPUT";
        case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
        case ErrorCode::DuplicateAttempt: return "DUPLICATE_ATTEMPT";
        case ErrorCode::UndeclaredReference: return "UNDECLARED_REFERENCE";
        case ErrorCode::EmptyPlan: return "EMPTY_PLAN";
        case ErrorCode::CampaignIoError: return "CAMPAIGN_IO_ERROR";
        case ErrorCode::InconsistentRecord: return "INCONSISTENT_RECORD";
        case ErrorCode::PatchedInput: return "PATCHED_INPUT";
        case ErrorCode::InvalidCatalog: return "INVALID_CATALOG";
        case ErrorCode::DegenerateTable: return "DEGENERATE_TABLE";
        case ErrorCode::UnsupportedDf: return "UNSUPPORTED_DF";
        case ErrorCode::UnknownBenchmark: return "UNKNOWN_BENCHMARK";
        case ErrorCode::IoError: return "IO_ERROR";
        case ErrorCode::ParseError: return "PARSE_ERROR";
    }
    return "UNKNOWN_ERROR";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace repairbench
