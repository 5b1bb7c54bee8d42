#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fsnt {

enum class ErrorCode {
    MissingColumn,
    UnparsableCell,
    EmptyFile,
    UnknownLabel,
    NotLabeled,
    SampleTooLarge,
    EmptyAfterClean,
    EmptyDataset,
    SchemaMismatch,
    EmptyClass,
    KTooLarge,
    DegenerateData,
    InvalidHyperparameter,
    InsufficientData,
    NonFiniteInput,
    VersionMismatch,
    CorruptFile,
    LengthMismatch,
    LabelOutOfRange,
    EmptyMatrix,
    DegenerateClass,
    IoFailure,
    EmptySpec,
    ConnectionFailure,
    InvalidArgument,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Process exit status for a failed command. 0 is success and 1/2 are kept
// for generic and usage errors, so codes start at 10.
int exit_code_for(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace fsnt
