#include "vidtune/error.hpp"

namespace vidtune {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicatePrimitive: return "DuplicatePrimitive";
        case ErrorCode::MalformedSpec: return "MalformedSpec";
        case ErrorCode::UnknownKey: return "UnknownKey";
        case ErrorCode::OutOfDomainValue: return "OutOfDomainValue";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
        case ErrorCode::StepExecutionFailed: return "StepExecutionFailed";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::SchemaVersionUnsupported: return "SchemaVersionUnsupported";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::CorruptArtifact: return "CorruptArtifact";
        case ErrorCode::ArityMismatch: return "ArityMismatch";
        case ErrorCode::EmptySpace: return "EmptySpace";
        case ErrorCode::OutOfDomain: return "OutOfDomain";
        case ErrorCode::OutOfUnitCube: return "OutOfUnitCube";
        case ErrorCode::EmptyHistory: return "EmptyHistory";
        case ErrorCode::ZeroBudget: return "ZeroBudget";
        case ErrorCode::AllTrialsFailed: return "AllTrialsFailed";
        case ErrorCode::NoCompleteTrials: return "NoCompleteTrials";
        case ErrorCode::BadTargetIndex: return "BadTargetIndex";
        case ErrorCode::RaggedRows: return "RaggedRows";
        case ErrorCode::UnsupportedExtension: return "UnsupportedExtension";
        case ErrorCode::CorruptVideo: return "CorruptVideo";
        case ErrorCode::ZeroStd: return "ZeroStd";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::StaleCache: return "StaleCache";
        case ErrorCode::EmptyData: return "EmptyData";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::UnknownAlgorithm: return "UnknownAlgorithm";
        case ErrorCode::MissingPretrainedPath: return "MissingPretrainedPath";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::BadHeader: return "BadHeader";
        case ErrorCode::TruncatedPayload: return "TruncatedPayload";
        case ErrorCode::UnsupportedChannels: return "UnsupportedChannels";
        case ErrorCode::TooFewRows: return "TooFewRows";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

}  // namespace vidtune
