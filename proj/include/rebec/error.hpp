#pragma once

#include <stdexcept>
#include <string>

namespace rebec {

/// Failure categories. The CLI maps them onto process exit codes.
enum class error_kind { config = 1, format = 2, model = 3 };

class error : public std::runtime_error {
public:
  error(error_kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  error_kind kind() const noexcept { return kind_; }

private:
  error_kind kind_;
};

struct config_error : error {
  explicit config_error(const std::string& what) : error(error_kind::config, what) {}
};

// Also used for dimension/shape mismatches between inputs.
struct format_error : error {
  explicit format_error(const std::string& what) : error(error_kind::format, what) {}
};

struct shape_error : format_error {
  explicit shape_error(const std::string& what) : format_error("shape mismatch: " + what) {}
};

struct model_error : error {
  explicit model_error(const std::string& what) : error(error_kind::model, what) {}
};

struct timeout_error : model_error {
  explicit timeout_error(const std::string& what) : model_error(what) {}
};

}  // namespace rebec
