#include "wfcm/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wfcm {

ModelParams::ModelParams(double sigma, RowMatrix centers, Vector weights, double fuzziness,
                         double weight_floor)
    : sigma_(sigma),
      centers_(std::move(centers)),
      weights_(std::move(weights)),
      fuzziness_(fuzziness),
      weight_floor_(weight_floor) {
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) {
    throw validation_error("sigma must be positive and finite");
  }
  if (!(fuzziness_ > 1.0) || !std::isfinite(fuzziness_)) {
    throw validation_error("fuzziness m must be > 1");
  }
  if (centers_.rows() < 1 || centers_.cols() < 1) {
    throw validation_error("centers must be a non-empty k x d matrix");
  }
  if (!centers_.allFinite()) {
    throw validation_error("centers contain non-finite entries");
  }
  if (weights_.size() != centers_.rows()) {
    throw validation_error("weights length must equal the number of centers");
  }
  if (!(weight_floor_ >= 0.0)) {
    throw validation_error("weight floor must be non-negative");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "weights must sum to 1 (got " << weights_.sum() << ")";
    throw validation_error(os.str());
  }
  for (Eigen::Index j = 0; j < weights_.size(); ++j) {
    if (!(weights_[j] >= weight_floor_) || !std::isfinite(weights_[j])) {
      std::ostringstream os;
      os << "weight " << j << " = " << weights_[j] << " is below the floor " << weight_floor_;
      throw validation_error(os.str());
    }
  }
}

ModelParams ModelParams::permuted(std::span<const int> perm) const {
  if (static_cast<int>(perm.size()) != k()) {
    throw validation_error("permutation length must equal k");
  }
  std::vector<char> seen(static_cast<std::size_t>(k()), 0);
  for (int j : perm) {
    if (j < 0 || j >= k() || seen[j]) throw validation_error("not a permutation of the cluster labels");
    seen[j] = 1;
  }
  RowMatrix c(centers_.rows(), centers_.cols());
  Vector w(weights_.size());
  for (int j = 0; j < k(); ++j) {
    c.row(j) = centers_.row(perm[j]);
    w[j] = weights_[perm[j]];
  }
  return ModelParams(sigma_, std::move(c), std::move(w), fuzziness_, weight_floor_);
}

ModelParams ModelParams::with_sigma(double sigma) const {
  return ModelParams(sigma, centers_, weights_, fuzziness_, weight_floor_);
}

ModelParams ModelParams::with_fuzziness(double m) const {
  return ModelParams(sigma_, centers_, weights_, m, weight_floor_);
}

ModelParams ModelParams::with_centers(RowMatrix centers) const {
  return ModelParams(sigma_, std::move(centers), weights_, fuzziness_, weight_floor_);
}

void ParamBounds::validate(int k) const {
  if (!(sigma_min > 0.0 && sigma_min < sigma_max)) {
    throw validation_error("bounds: need 0 < sigma_min < sigma_max");
  }
  if (!(eps_w > 0.0 && eps_w < 1.0 / k)) {
    throw validation_error("bounds: need 0 < eps_w < 1/k");
  }
  if (!(m_min > 1.0 && m_min < m_max)) {
    throw validation_error("bounds: need 1 < m_min < m_max");
  }
  for (const auto& iv : center_box) {
    if (!(iv.lo <= iv.hi)) throw validation_error("bounds: center box interval is empty");
  }
}

Dataset::Dataset(RowMatrix values, std::vector<std::string> column_names)
    : values_(std::move(values)), column_names_(std::move(column_names)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw validation_error("dataset must have at least one row and one column");
  }
  if (!values_.allFinite()) {
    throw validation_error("dataset contains non-finite values");
  }
  if (!column_names_.empty() && static_cast<Eigen::Index>(column_names_.size()) != values_.cols()) {
    throw validation_error("column name count does not match the data width");
  }
}

Dataset Dataset::subset(std::span<const int> rows) const {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = values_.row(rows[i]);
  return Dataset(std::move(out), column_names_);
}

MembershipMatrix::MembershipMatrix(RowMatrix values) : values_(std::move(values)) {
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      const double u = values_(i, j);
      if (!(u >= 0.0 && u <= 1.0)) throw validation_error("membership entry outside [0, 1]");
      s += u;
    }
    if (std::abs(s - 1.0) > 1e-10) throw validation_error("membership row does not sum to 1");
  }
}

std::vector<int> MembershipMatrix::hard_labels() const {
  std::vector<int> labels(static_cast<std::size_t>(values_.rows()));
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    Eigen::Index best = 0;
    values_.row(i).maxCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

std::vector<Interval> inflated_bounding_box(const Dataset& data, double inflate) {
  std::vector<Interval> box(static_cast<std::size_t>(data.dim()));
  for (int c = 0; c < data.dim(); ++c) {
    const double lo = data.values().col(c).minCoeff();
    const double hi = data.values().col(c).maxCoeff();
    const double pad = hi > lo ? inflate * (hi - lo) : 1.0;
    box[static_cast<std::size_t>(c)] = {lo - pad, hi + pad};
  }
  return box;
}

}  // namespace wfcm
