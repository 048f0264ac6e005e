#pragma once

#include <stdexcept>
#include <string>

namespace acegan {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// wfdb
struct MalformedHeader : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct TruncatedSignal : Error { using Error::Error; };
struct TruncatedAnnotations : Error { using Error::Error; };
struct UnknownCode : Error { using Error::Error; };
struct NonBeatCode : Error { using Error::Error; };
struct SampleOutOfRange : Error { using Error::Error; };
struct MalformedRecord : Error { using Error::Error; };

// beatgrid
struct TooFewBeats : Error { using Error::Error; };

// normpool
struct SegmentTooShort : Error { using Error::Error; };
struct DegenerateInput : Error { using Error::Error; };

// tensornet
struct ShapeMismatch : Error { using Error::Error; };
struct NoForwardCache : Error { using Error::Error; };

// acegan / datasets
struct MissingClass : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct InsufficientSBearingRecords : Error { using Error::Error; };

// evalkit
struct LengthMismatch : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };

// cli
struct ConfigError : Error { using Error::Error; };
struct MissingArtifact : Error { using Error::Error; };

}  // namespace acegan
