#pragma once

#include <stdexcept>
#include <string>

namespace ttapt {

// Error categories. The C API and the CLI map these onto status / exit
// codes: Config -> 2, Artifact -> 3, Schema -> 4, everything else -> 1.
enum class ErrorCode {
    Internal,
    Config,
    Artifact,
    Schema,
    InputTooShort,
    MaskRange,
    Length,
    Shape,
    Numerical,
    PretrainDivergence,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}

    ErrorCode code() const { return code_; }

    int status() const {
        switch (code_) {
            case ErrorCode::Config: return 2;
            case ErrorCode::Artifact: return 3;
            case ErrorCode::Schema: return 4;
            default: return 1;
        }
    }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

} // namespace ttapt
