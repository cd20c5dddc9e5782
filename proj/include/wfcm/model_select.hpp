#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wfcm/estimator.hpp"
#include "wfcm/types.hpp"

namespace wfcm {

/// Σ_ij w_j u_ij^m ‖x_i − v_j‖² / min_{j≠l} ‖v_j − v_l‖² with the weighted
/// memberships. Coincident centers raise "xbi-degenerate".
double weighted_xbi(const Dataset& data, const ModelParams& params);

/// Same ratio with unweighted memberships and no weights.
double classic_xbi(const Dataset& data, const RowMatrix& centers, double m);

struct ValidityCell {
  int k = 0;
  double m = 0.0;
  double xbi = 0.0;  // NaN when the fit failed
  bool ok = false;
  std::string error;
  std::vector<std::string> flags;
};

struct ValidityGrid {
  std::vector<int> k_values;
  std::vector<double> m_values;
  std::vector<ValidityCell> cells;  // row-major over (k, m)
  int best_k = 0;
  double best_m = 0.0;
  // Elbow advisory on the best-over-m XBI per k: the k just before the first
  // step whose relative drop is under 10%. Not used for `best_k`.
  std::optional<int> elbow_k;

  const ValidityCell& cell(std::size_t ki, std::size_t mi) const { return cells[ki * m_values.size() + mi]; }
};

/// Fits every (k, m) cell at fixed m and scores it with the weighted XBI.
ValidityGrid select_k(const Dataset& data, const std::vector<int>& k_values, const std::vector<double>& m_values,
                      const FitConfig& config, int threads = 1);

}  // namespace wfcm
