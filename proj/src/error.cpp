#include "fsnt/error.hpp"

namespace fsnt {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::UnparsableCell: return "UnparsableCell";
        case ErrorCode::EmptyFile: return "EmptyFile";
        case ErrorCode::UnknownLabel: return "UnknownLabel";
        case ErrorCode::NotLabeled: return "NotLabeled";
        case ErrorCode::SampleTooLarge: return "SampleTooLarge";
        case ErrorCode::EmptyAfterClean: return "EmptyAfterClean";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::EmptyClass: return "EmptyClass";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::DegenerateData: return "DegenerateData";
        case ErrorCode::InvalidHyperparameter: return "InvalidHyperparameter";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::DegenerateClass: return "DegenerateClass";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::EmptySpec: return "EmptySpec";
        case ErrorCode::ConnectionFailure: return "ConnectionFailure";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

int exit_code_for(ErrorCode code) noexcept {
    return 10 + static_cast<int>(code);
}

}  // namespace fsnt
