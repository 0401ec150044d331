#pragma once

#include <stdexcept>
#include <string>

namespace pspin {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// mixture
struct NotNormalized : Error { using Error::Error; };
struct BadDegree : Error { using Error::Error; };
struct DuplicateDegree : Error { using Error::Error; };
struct NonPositiveCoefficient : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };

// tensor
struct CapExceeded : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct ChecksumMismatch : Error { using Error::Error; };

// energy / solve
struct IndexOutOfRange : Error { using Error::Error; };
struct EmptyBand : Error { using Error::Error; };

// montecarlo
struct KernelError : Error {
  long long failing_index;
  KernelError(long long idx, const std::string& what)
      : Error("sample " + std::to_string(idx) + ": " + what), failing_index(idx) {}
};

// experiments
struct DegenerateCurve : Error { using Error::Error; };

// cli
struct UnknownExperiment : Error { using Error::Error; };
struct UnknownKey : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

}  // namespace pspin
