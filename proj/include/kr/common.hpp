#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Named real parameters attached to registry entries (rhs ids, policies).
using Params = std::map<std::string, double>;

double param_or(const Params& params, const std::string& key, double fallback);

/// Base class for every error the library raises. `code` is a stable
/// machine-readable identifier used by the CLI error report and the
/// session protocol.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Invalid input or configuration. Carries the offending field name.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message,
                  std::string code = "validation_error")
      : Error(std::move(code), message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(std::size_t index, double t);
  std::size_t index() const noexcept { return index_; }
  double time() const noexcept { return t_; }

 private:
  std::size_t index_;
  double t_;
};

class NonInvertibleCoupling : public Error {
 public:
  NonInvertibleCoupling(std::size_t sample, int player, int component);
  std::size_t sample() const noexcept { return sample_; }

 private:
  std::size_t sample_;
};

bool all_finite(const Vector& v);

}  // namespace kr
