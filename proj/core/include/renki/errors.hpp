#pragma once

#include <stdexcept>
#include <string>

namespace renki {

// Error taxonomy shared by the library and the CLI. The CLI maps each
// category to a distinct exit code.
enum class ErrorCategory {
    Config,    // invalid configuration or precondition violation
    Io,        // file system / parse failures
    Data,      // malformed or inconsistent data contents
    Shape,     // dimension mismatches
    Training,  // divergence and other runtime training failures
    Budget,    // enumeration / retry budgets exceeded
};

inline const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Config: return "config";
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Data: return "data";
        case ErrorCategory::Shape: return "shape";
        case ErrorCategory::Training: return "training";
        case ErrorCategory::Budget: return "budget";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

  private:
    ErrorCategory category_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorCategory::Config, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorCategory::Io, m) {}
};
struct DataError : Error {
    explicit DataError(const std::string& m) : Error(ErrorCategory::Data, m) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& m) : Error(ErrorCategory::Shape, m) {}
};
struct BudgetError : Error {
    explicit BudgetError(const std::string& m) : Error(ErrorCategory::Budget, m) {}
};

// Carries the epoch at which the loss became non-finite.
class TrainingDivergedError : public Error {
  public:
    TrainingDivergedError(int epoch, const std::string& m)
        : Error(ErrorCategory::Training, m), epoch_(epoch) {}
    int epoch() const { return epoch_; }

  private:
    int epoch_;
};

}  // namespace renki
