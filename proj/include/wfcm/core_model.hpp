#pragma once

#include <span>
#include <string_view>

#include "wfcm/types.hpp"

namespace wfcm {

/// Σ_w(x) = Σ_j (w_j ‖x − v_j‖²)^(−1/(m−1)), kept in log space.
/// When x coincides with a center the value is +∞ and `coincident_center`
/// names the first such center.
struct SigmaW {
  double log_value = 0.0;
  int coincident_center = -1;

  bool at_center() const noexcept { return coincident_center >= 0; }
  double value() const;
};

SigmaW sigma_w(std::span<const double> x, const ModelParams& params);

/// Per-point energy σ⁻² Σ_w(x)^(−(m−1)); exactly 0 on a center.
double energy(std::span<const double> x, const ModelParams& params);

/// Σ_i [Σ_j (w_j d_ij²)^(−1/(m−1))]^(−(m−1)).
double wfcm_loss(const Dataset& data, const ModelParams& params);

/// Classic unweighted FCM objective, i.e. the WFCM loss with every w_j = 1.
double fcm_loss(const Dataset& data, const RowMatrix& centers, double m);

/// Closed-form weighted memberships. Rows sitting on one center become that
/// center's indicator; ties between coincident centers are split equally.
MembershipMatrix memberships(const Dataset& data, const ModelParams& params);

/// Unweighted (classic FCM) memberships.
MembershipMatrix fcm_memberships(const Dataset& data, const RowMatrix& centers, double m);

/// −n·log_c + σ⁻²·wfcm_loss.
double nll(const Dataset& data, const ModelParams& params, double log_c);

/// Σ_ij w_j u_ij^m ‖x_i − v_j‖², the quantity the membership and centroid
/// steps each minimize.
double surrogate_objective(const Dataset& data, const RowMatrix& centers, const Vector& weights,
                           const MembershipMatrix& u, double m);

enum class LimitCase { m_to_1, m_eq_2, m_to_inf };

LimitCase parse_limit_case(std::string_view tag);

/// Limiting forms of the energy: min_j w_j d_j²/σ² as m → 1⁺, the harmonic
/// form at m = 2, and 0 as m → ∞. Test oracles only.
double energy_limit_oracle(std::span<const double> x, const ModelParams& params, LimitCase which);

}  // namespace wfcm
