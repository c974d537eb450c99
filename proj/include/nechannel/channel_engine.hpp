#pragma once

// Non-entangling channel decomposition: the initial heavy packet is split
// into a classical ensemble of narrow packets obeying m_x sx^2 = m_y sy^2,
// the ensemble is carried along the classical motion, and the two-particle
// Gaussian is re-assembled in closed form between collisions.

#include <utility>

#include "nechannel/classical_dynamics.hpp"
#include "nechannel/gaussian_core.hpp"

namespace nechannel {

struct ScenarioParams {
  double x_M0 = 0.0;
  double y_M0 = 0.0;
  double sigma0x = 0.0;
  double sigma0y = 0.0;
  double p_x0 = 0.0;
  MassPair masses;
  /// Upper bound on sigma / (distance to the nearest boundary or packet).
  double narrow_ratio_limit = 0.05;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  double v_x0() const { return p_x0 / masses.m_x; }
  double epsilon() const { return masses.epsilon(); }
  /// eps m_x sigma0x v_x0 / pi; packets stay narrow until the last collision when >> 1.
  double validity_figure() const;
  ReferenceSetup reference() const { return {x_M0, y_M0, v_x0(), masses}; }
};

struct WidthSplit {
  double dsigma_y0;  ///< spread of the classical channel distribution
  double sigma_yT;   ///< heavy width of a single channel, m_x sigma0x^2 = m_y sigma_yT^2
};

/// sigma0y^2 = dsigma_y0^2 + sigma_yT^2. Requires m_x sigma0x^2 < m_y sigma0y^2.
WidthSplit split_width(const ScenarioParams& params);

struct ChannelEnsemble {
  double n = 0.0;  ///< collision index (real-valued for formula-level evaluation)
  double t = 0.0;
  double x_center = 0.0;
  double y_center = 0.0;
  double dsigma_y0 = 0.0;
  double dsigma_y_n = 0.0;
  double slope = 0.0;  ///< tan(2 eps n) / eps
  double p_xn = 0.0;
  double p_yn = 0.0;
  int sign_x = 1;          ///< +1 while the light particle moves toward the heavy one
  int x_offset_sign = 1;   ///< -1 after the wall bounce that follows pair collision n
  int walls = 0;

  double cos_term(double eps) const;
  double sin_term(double eps) const;
  /// dsigma_y0 |sin(2 eps n)| / eps.
  double dsigma_x_n(double eps) const;
};

ChannelEnsemble initial_ensemble(const ScenarioParams& params);

/// Ensemble at time t, centers from the exact reference trajectory. Throws
/// MixedPhaseError when channels straddle a collision at t.
ChannelEnsemble propagate_ensemble(const ChannelEnsemble& e, const ScenarioParams& params, double t);

/// Same as propagate_ensemble but with the collision index replaced by the
/// real-valued critical index pi/(4 eps) (cos(2 eps n) = 0).
ChannelEnsemble critical_ensemble(const ScenarioParams& params, double t);

/// True iff channels started at y_M0 +- 3 dsigma_y0 share the reference
/// pair and wall counts at t.
bool mixed_phase_gate(const ChannelEnsemble& e, const ScenarioParams& params, double t);

/// Closed-form integral of the channel superposition, normalized.
QuadraticFormState channel_superposition(const ChannelEnsemble& e, const ScenarioParams& params);

/// Gate check, propagation of e to t and channel_superposition.
QuadraticFormState assemble_quadratic_form(const ChannelEnsemble& e, const ScenarioParams& params,
                                           double t);

/// Printed closed form of the cross coefficient, including its 1/(2 sqrt(eps)) prefactor.
cplx axy_formula(double n, double eps, cplx beta_x_sq, cplx beta_y_sq);

/// Displayed diagonal coefficients (A^xx, A^yy) at collision index n.
std::pair<cplx, cplx> diagonal_formulas(double n, double eps, cplx beta_x_sq, cplx beta_y_sq);

/// a_xx(n_cr) = -eps^2/(2 beta_y^2) and a_yy(n_cr) = -1/(2 eps^2 beta_x^2)
/// for the assembled critical state, within tol relative.
bool energy_exchange_check(double t, const ScenarioParams& params, double tol = 1e-8);

/// Standard deviations of |psi|^2 along x and y predicted by rotating the
/// free product of widths sigma0x, sigma0y by the channel map.
std::pair<double, double> composed_marginal_std(const ChannelEnsemble& e, const ScenarioParams& params);

struct EntanglementReport {
  cplx a_xy;
  double purity;
  double schmidt_entropy;
};

/// Tr(rho_x^2) of a normalizable pure Gaussian quadratic form.
double reduced_purity(const QuadraticFormState& state);

/// Entropy of the thermal-like Schmidt spectrum lambda_k = (1 - q) q^k that
/// has the given purity.
double schmidt_entropy_from_purity(double purity);

EntanglementReport entanglement_report(const QuadraticFormState& state);

}  // namespace nechannel
