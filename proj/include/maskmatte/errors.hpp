#pragma once

#include <stdexcept>
#include <string>

namespace maskmatte {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// annotation ingest
struct MalformedFile : Error { using Error::Error; };
struct UnknownCategory : Error { using Error::Error; };
struct CountMismatch : Error { using Error::Error; };
struct BadCompressedString : Error { using Error::Error; };
struct DegeneratePolygon : Error { using Error::Error; };

// mask geometry
struct EmptyMask : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct ZeroArea : Error { using Error::Error; };

// alpha solver
struct ImageTooSmall : Error { using Error::Error; };
struct IllPosed : Error { using Error::Error; };
struct NotConverged : Error {
  double residual;
  explicit NotConverged(double r)
      : Error("conjugate gradient did not converge, relative residual " +
              std::to_string(r)),
        residual(r) {}
};

// external backend
struct BackendFailed : Error { using Error::Error; };
struct Timeout : Error { using Error::Error; };
struct BadOutput : Error { using Error::Error; };

// losses
struct NotNormalized : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };

// pipeline
struct NoForeground : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct MalformedIndex : Error { using Error::Error; };

}  // namespace maskmatte
