#include "nechannel/gaussian_core.hpp"

#include <cmath>
#include <numbers>
#include <algorithm>
#include <stdexcept>
#include <string>

namespace nechannel {

namespace {

constexpr cplx kI{0.0, 1.0};

// Upper bound on the probability mass on the unphysical side for snapshots
// accepted by the far-field transforms.
constexpr double kSeparationThreshold = 1e-8;

struct Sym2 {
  cplx xx, xy, yy;  // exponent z^T A z with A = [[xx, xy], [xy, yy]]
};

Sym2 quadratic_matrix(const QuadraticFormState& s) { return {s.a_xx, 0.5 * s.a_xy, s.a_yy}; }

}  // namespace

MassPair::MassPair(double mx, double my) : m_x(mx), m_y(my) {
  if (!(mx > 0.0) || !(my > 0.0)) {
    throw std::domain_error("MassPair: masses must be positive");
  }
}

MassPair MassPair::from_epsilon(double m_x, double eps) {
  if (!(eps > 0.0)) throw std::domain_error("MassPair: epsilon must be positive");
  return MassPair(m_x, m_x / (eps * eps));
}

double MassPair::epsilon() const { return std::sqrt(m_x / m_y); }

cplx GaussianPacket::value(double x) const {
  const double d = x - center;
  return std::exp(log_norm - d * d / (2.0 * width_sq) + kI * momentum * x);
}

double GaussianPacket::norm() const {
  const double a = std::real(1.0 / width_sq);
  return std::exp(2.0 * log_norm.real()) * std::sqrt(std::numbers::pi / a);
}

double GaussianPacket::density_std() const { return 1.0 / std::sqrt(2.0 * std::real(1.0 / width_sq)); }

bool QuadraticFormState::normalizable() const {
  const double qxx = -a_xx.real();
  const double qyy = -a_yy.real();
  const double qxy = -0.5 * a_xy.real();
  return qxx > 0.0 && qyy > 0.0 && qxx * qyy - qxy * qxy > 0.0;
}

bool QuadraticFormState::is_product(double tol) const {
  const double scale = std::max(std::abs(a_xx), std::abs(a_yy));
  return std::abs(a_xy) <= tol * scale;
}

cplx width_param(double sigma0, double mass, double t) {
  if (!(sigma0 > 0.0)) throw std::domain_error("width_param: sigma0 must be positive");
  if (!(mass > 0.0)) throw std::domain_error("width_param: mass must be positive");
  const double s2 = sigma0 * sigma0;
  return s2 * (1.0 + kI * t / (mass * s2));
}

GaussianPacket make_packet(double center, double sigma0, double momentum, double mass) {
  GaussianPacket p;
  p.center = center;
  p.width_sq = width_param(sigma0, mass, 0.0);
  p.momentum = momentum;
  p.mass = mass;
  p.log_norm = -0.25 * std::log(std::numbers::pi * sigma0 * sigma0);
  return p;
}

GaussianPacket free_evolve(const GaussianPacket& p, double dt) {
  if (!(dt >= 0.0)) throw std::domain_error("free_evolve: dt must be non-negative");
  GaussianPacket q = p;
  q.center = p.center + p.momentum / p.mass * dt;
  q.width_sq = p.width_sq + kI * dt / p.mass;
  q.log_norm = p.log_norm + 0.5 * std::log(p.width_sq / q.width_sq) -
               kI * (p.momentum * p.momentum * dt / (2.0 * p.mass));
  return q;
}

GaussianPacket wall_reflect(const GaussianPacket& p) {
  if (!(p.momentum < 0.0)) {
    throw std::domain_error("wall_reflect: packet must move into the wall (momentum < 0)");
  }
  GaussianPacket q = p;
  q.center = -p.center;
  q.momentum = -p.momentum;
  q.log_norm = p.log_norm + kI * std::numbers::pi;
  return q;
}

cplx antisymmetrized_value(const GaussianPacket& p, double x) {
  if (x <= 0.0) return {0.0, 0.0};
  return p.value(x) - p.value(-x);
}

double wall_probability(const GaussianPacket& p) {
  return 0.5 * std::erfc(p.center / (std::sqrt(2.0) * p.density_std()));
}

GaussianPacket normalized(const GaussianPacket& p) {
  GaussianPacket q = p;
  q.log_norm -= 0.5 * std::log(p.norm());
  return q;
}

std::pair<double, double> post_collision_momenta(double p_x, double p_y, const MassPair& m) {
  const double v_x = p_x / m.m_x;
  const double v_y = p_y / m.m_y;
  if (!(v_x > v_y)) {
    throw std::domain_error("post_collision_momenta: velocities are not closing (need v_x > v_y)");
  }
  const double M = m.total();
  const double vx1 = ((m.m_x - m.m_y) * v_x + 2.0 * m.m_y * v_y) / M;
  const double vy1 = (2.0 * m.m_x * v_x + (m.m_y - m.m_x) * v_y) / M;
  return {m.m_x * vx1, m.m_y * vy1};
}

Mat2 collision_matrix(const MassPair& m) {
  const double M = m.total();
  return {{{(m.m_x - m.m_y) / M, 2.0 * m.m_y / M}, {2.0 * m.m_x / M, (m.m_y - m.m_x) / M}}};
}

double ordered_probability(const GaussianPacket& px, const GaussianPacket& py) {
  const double sx = px.density_std();
  const double sy = py.density_std();
  const double s = std::sqrt(sx * sx + sy * sy);
  return 0.5 * std::erfc((px.center - py.center) / (std::sqrt(2.0) * s));
}

QuadraticFormState collide_gaussians(const GaussianPacket& px, const GaussianPacket& py,
                                     const MassPair& masses) {
  const double leftover = ordered_probability(px, py);
  if (leftover > kSeparationThreshold) {
    throw std::domain_error("collide_gaussians: free packets have not separated after crossing "
                            "(P(x<y) = " + std::to_string(leftover) + ")");
  }
  return substitute(product_state(px, py), collision_matrix(masses));
}

QuadraticFormState product_state(const GaussianPacket& px, const GaussianPacket& py) {
  QuadraticFormState s;
  s.a_xx = -1.0 / (2.0 * px.width_sq);
  s.a_yy = -1.0 / (2.0 * py.width_sq);
  s.a_xy = 0.0;
  s.b_x = px.center / px.width_sq + kI * px.momentum;
  s.b_y = py.center / py.width_sq + kI * py.momentum;
  s.log_norm = px.log_norm + py.log_norm - px.center * px.center / (2.0 * px.width_sq) -
               py.center * py.center / (2.0 * py.width_sq);
  return s;
}

QuadraticFormState substitute(const QuadraticFormState& s, const Mat2& S) {
  const Sym2 A = quadratic_matrix(s);
  // A' = S^T A S, b' = S^T b
  const cplx AS00 = A.xx * S[0][0] + A.xy * S[1][0];
  const cplx AS01 = A.xx * S[0][1] + A.xy * S[1][1];
  const cplx AS10 = A.xy * S[0][0] + A.yy * S[1][0];
  const cplx AS11 = A.xy * S[0][1] + A.yy * S[1][1];
  QuadraticFormState r = s;
  r.a_xx = S[0][0] * AS00 + S[1][0] * AS10;
  r.a_yy = S[0][1] * AS01 + S[1][1] * AS11;
  r.a_xy = 2.0 * (S[0][0] * AS01 + S[1][0] * AS11);
  r.b_x = S[0][0] * s.b_x + S[1][0] * s.b_y;
  r.b_y = S[0][1] * s.b_x + S[1][1] * s.b_y;
  return r;
}

QuadraticFormState reflect_x(const QuadraticFormState& s) {
  QuadraticFormState r = substitute(s, Mat2{{{-1.0, 0.0}, {0.0, 1.0}}});
  r.log_norm += kI * std::numbers::pi;
  return r;
}

cplx evaluate(const QuadraticFormState& s, double x, double y) {
  return std::exp(s.a_xx * x * x + s.a_yy * y * y + s.a_xy * x * y + s.b_x * x + s.b_y * y +
                  s.log_norm);
}

double log_norm_integral(const QuadraticFormState& s) {
  if (!s.normalizable()) throw std::domain_error("log_norm_integral: state is not normalizable");
  // |psi|^2 = exp(-z^T K z + j^T z + 2 Re c), K = -2 Re A, j = 2 Re b
  const double kxx = -2.0 * s.a_xx.real();
  const double kyy = -2.0 * s.a_yy.real();
  const double kxy = -s.a_xy.real();
  const double det = kxx * kyy - kxy * kxy;
  const double jx = 2.0 * s.b_x.real();
  const double jy = 2.0 * s.b_y.real();
  // j^T K^{-1} j
  const double quad = (kyy * jx * jx - 2.0 * kxy * jx * jy + kxx * jy * jy) / det;
  return std::log(std::numbers::pi) - 0.5 * std::log(det) + 0.25 * quad + 2.0 * s.log_norm.real();
}

QuadraticFormState normalized(const QuadraticFormState& s) {
  QuadraticFormState r = s;
  r.log_norm -= 0.5 * log_norm_integral(s);
  return r;
}

DensityMoments density_moments(const QuadraticFormState& s) {
  if (!s.normalizable()) throw std::domain_error("density_moments: state is not normalizable");
  const double kxx = -2.0 * s.a_xx.real();
  const double kyy = -2.0 * s.a_yy.real();
  const double kxy = -s.a_xy.real();
  const double det = kxx * kyy - kxy * kxy;
  const double ixx = kyy / det, iyy = kxx / det, ixy = -kxy / det;  // K^{-1}
  const double jx = 2.0 * s.b_x.real();
  const double jy = 2.0 * s.b_y.real();
  DensityMoments m;
  m.mean_x = 0.5 * (ixx * jx + ixy * jy);
  m.mean_y = 0.5 * (ixy * jx + iyy * jy);
  m.var_x = 0.5 * ixx;
  m.var_y = 0.5 * iyy;
  m.cov_xy = 0.5 * ixy;
  return m;
}

}  // namespace nechannel
