#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace wfcm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultWeightFloor = 1e-6;
// Squared distances below this are treated as "x sits on the center".
inline constexpr double kDistanceFloor = 1e-300;

enum class ErrorKind { validation, numerical };

// All library failures carry a stable short code ("fit-diverged", ...) that
// the CLI and reports surface verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what, ErrorKind kind = ErrorKind::numerical)
      : std::runtime_error(code + ": " + what), code_(std::move(code)), kind_(kind) {}

  const std::string& code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  std::string code_;
  ErrorKind kind_;
};

inline Error validation_error(const std::string& what) {
  return Error("invalid-argument", what, ErrorKind::validation);
}

/// Full WFCM parameter vector: scale, centers (k x d), simplex weights, fuzziness.
class ModelParams {
 public:
  ModelParams(double sigma, RowMatrix centers, Vector weights, double fuzziness,
              double weight_floor = kDefaultWeightFloor);

  double sigma() const noexcept { return sigma_; }
  const RowMatrix& centers() const noexcept { return centers_; }
  const Vector& weights() const noexcept { return weights_; }
  double fuzziness() const noexcept { return fuzziness_; }
  double weight_floor() const noexcept { return weight_floor_; }

  int k() const noexcept { return static_cast<int>(centers_.rows()); }
  int dim() const noexcept { return static_cast<int>(centers_.cols()); }

  std::span<const double> center(int j) const {
    return {centers_.data() + static_cast<std::ptrdiff_t>(j) * centers_.cols(),
            static_cast<std::size_t>(centers_.cols())};
  }

  // Label j of the result is label perm[j] of *this; centers and weights move together.
  ModelParams permuted(std::span<const int> perm) const;

  ModelParams with_sigma(double sigma) const;
  ModelParams with_fuzziness(double m) const;
  ModelParams with_centers(RowMatrix centers) const;

 private:
  double sigma_;
  RowMatrix centers_;
  Vector weights_;
  double fuzziness_;
  double weight_floor_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Compact parameter set used to clamp the optimizers.
struct ParamBounds {
  double sigma_min = 1e-4;
  double sigma_max = 1e4;
  double eps_w = kDefaultWeightFloor;
  double m_min = 1.0 + 1e-3;
  double m_max = 50.0;
  std::vector<Interval> center_box;  // empty means "derive from the data"

  void validate(int k) const;
};

/// n x d observation matrix.
class Dataset {
 public:
  explicit Dataset(RowMatrix values, std::vector<std::string> column_names = {});

  const RowMatrix& values() const noexcept { return values_; }
  const std::vector<std::string>& column_names() const noexcept { return column_names_; }
  int n() const noexcept { return static_cast<int>(values_.rows()); }
  int dim() const noexcept { return static_cast<int>(values_.cols()); }

  std::span<const double> row(int i) const {
    return {values_.data() + static_cast<std::ptrdiff_t>(i) * values_.cols(),
            static_cast<std::size_t>(values_.cols())};
  }

  Dataset subset(std::span<const int> rows) const;

 private:
  RowMatrix values_;
  std::vector<std::string> column_names_;
};

/// n x k row-stochastic fuzzy assignment.
class MembershipMatrix {
 public:
  explicit MembershipMatrix(RowMatrix values);

  const RowMatrix& values() const noexcept { return values_; }
  int n() const noexcept { return static_cast<int>(values_.rows()); }
  int k() const noexcept { return static_cast<int>(values_.cols()); }
  double operator()(int i, int j) const { return values_(i, j); }

  std::vector<int> hard_labels() const;

 private:
  RowMatrix values_;
};

// Data bounding box with each side pushed out by `inflate` times the range.
std::vector<Interval> inflated_bounding_box(const Dataset& data, double inflate = 0.25);

}  // namespace wfcm
