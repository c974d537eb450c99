#pragma once

// One- and two-particle Gaussian states and the exact hard-core transforms
// acting on them. Units: hbar = 1.

#include <array>
#include <complex>
#include <utility>

namespace nechannel {

using cplx = std::complex<double>;

/// 2x2 real matrix, row-major.
using Mat2 = std::array<std::array<double, 2>, 2>;

struct MassPair {
  double m_x = 1.0;  ///< light particle
  double m_y = 1.0;  ///< heavy particle

  MassPair() = default;
  MassPair(double mx, double my);

  /// From the light mass and the mass ratio parameter eps = sqrt(m_x/m_y).
  static MassPair from_epsilon(double m_x, double eps);

  double epsilon() const;
  double total() const { return m_x + m_y; }
  double reduced() const { return m_x * m_y / (m_x + m_y); }
};

/// phi(x) = exp(log_norm - (x - center)^2 / (2 width_sq) + i momentum x)
struct GaussianPacket {
  double center = 0.0;
  cplx width_sq{1.0, 0.0};
  double momentum = 0.0;
  double mass = 1.0;
  cplx log_norm{0.0, 0.0};

  cplx value(double x) const;
  /// Integral of |phi|^2 over the real line.
  double norm() const;
  /// Standard deviation of |phi|^2.
  double density_std() const;
};

/// psi(x,y) = exp(a_xx x^2 + a_yy y^2 + a_xy x y + b_x x + b_y y + log_norm)
struct QuadraticFormState {
  cplx a_xx, a_yy, a_xy;
  cplx b_x, b_y;
  cplx log_norm;

  /// Real quadratic form -Re(a) is positive definite.
  bool normalizable() const;
  bool is_product(double tol = 1e-14) const;
};

/// Moments of |psi|^2 for a normalizable quadratic form.
struct DensityMoments {
  double mean_x, mean_y;
  double var_x, var_y, cov_xy;
};

// ---------------------------------------------------------------------------
// single packets

/// beta^2(t) = sigma0^2 (1 + i t / (mass sigma0^2)).
cplx width_param(double sigma0, double mass, double t);

/// Normalized packet at t = 0 with real width sigma0.
GaussianPacket make_packet(double center, double sigma0, double momentum, double mass);

/// Exact free Schroedinger evolution over dt >= 0; log_norm carries the
/// amplitude factor sqrt(b^2/b'^2) and the plane-wave phase -i p^2 dt/(2m).
GaussianPacket free_evolve(const GaussianPacket& p, double dt);

/// Far-field image after a hard-wall reflection at x = 0: the packet that
/// has freely passed through the wall (momentum < 0) is replaced by its
/// mirror, times the antisymmetrization sign.
GaussianPacket wall_reflect(const GaussianPacket& p);

/// Exact hard-wall field [phi(x) - phi(-x)] Theta(x) for near-wall snapshots.
cplx antisymmetrized_value(const GaussianPacket& p, double x);

/// Probability of |phi|^2 on x < 0.
double wall_probability(const GaussianPacket& p);

GaussianPacket normalized(const GaussianPacket& p);

// ---------------------------------------------------------------------------
// pair collisions

/// Elastic hard-core outcome for closing velocities (v_x > v_y).
std::pair<double, double> post_collision_momenta(double p_x, double p_y, const MassPair& masses);

/// Coordinate map (x, y) -> (x~, y~) obtained from r -> -r at fixed R.
/// It is an involution and an isometry of m_x dx^2 + m_y dy^2.
Mat2 collision_matrix(const MassPair& masses);

/// Probability that the free product |px|^2 |py|^2 has x < y.
double ordered_probability(const GaussianPacket& px, const GaussianPacket& py);

/// Post-collision state from the freely evolved packets once the free
/// relative coordinate has passed through r = 0 (P(x < y) <= 1e-8):
/// psi_1(x, y) = phi_x(x~) phi_y(y~).
QuadraticFormState collide_gaussians(const GaussianPacket& px, const GaussianPacket& py,
                                     const MassPair& masses);

// ---------------------------------------------------------------------------
// quadratic forms

QuadraticFormState product_state(const GaussianPacket& px, const GaussianPacket& py);

/// psi'(z) = psi(S z).
QuadraticFormState substitute(const QuadraticFormState& s, const Mat2& S);

/// Two-particle wall reflection in x: psi'(x, y) = -psi(-x, y).
QuadraticFormState reflect_x(const QuadraticFormState& s);

cplx evaluate(const QuadraticFormState& s, double x, double y);

/// log of the plane integral of |psi|^2.
double log_norm_integral(const QuadraticFormState& s);

QuadraticFormState normalized(const QuadraticFormState& s);

DensityMoments density_moments(const QuadraticFormState& s);

}  // namespace nechannel
