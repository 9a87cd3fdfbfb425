#pragma once

#include <stdexcept>
#include <string>

namespace vidtune {

enum class ErrorCode {
    // registry / pipeline description
    DuplicatePrimitive,
    MalformedSpec,
    UnknownKey,
    OutOfDomainValue,
    ValidationFailed,
    StepExecutionFailed,
    ParseError,
    SchemaVersionUnsupported,
    IoError,
    CorruptArtifact,
    ArityMismatch,
    // hyperspace
    EmptySpace,
    OutOfDomain,
    OutOfUnitCube,
    // tuners
    EmptyHistory,
    ZeroBudget,
    AllTrialsFailed,
    NoCompleteTrials,
    // zoo
    BadTargetIndex,
    RaggedRows,
    UnsupportedExtension,
    CorruptVideo,
    ZeroStd,
    ShapeMismatch,
    StaleCache,
    EmptyData,
    LabelOutOfRange,
    UnknownAlgorithm,
    MissingPretrainedPath,
    // data-io
    BadMagic,
    BadHeader,
    TruncatedPayload,
    UnsupportedChannels,
    TooFewRows,
    // generic precondition violation
    InvalidArgument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace vidtune
