#include "nechannel/channel_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nechannel/errors.hpp"

namespace nechannel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGateSpan = 3.0;

struct Span {
  double lower;
  double upper;
};

Span channel_span(const ScenarioParams& params, double dsigma_y0) {
  return {params.y_M0 - kGateSpan * dsigma_y0, params.y_M0 + kGateSpan * dsigma_y0};
}

// Windows [first, last) in which the span endpoints and the reference
// disagree on the k-th event.
std::vector<std::pair<double, double>> mixed_windows(const ScenarioParams& params, double dsigma_y0) {
  const Span sp = channel_span(params, dsigma_y0);
  const ReferenceSetup ref = params.reference();
  const auto lo = event_driven_trajectory(ref.x_M0, sp.lower, ref.v_x0, ref.masses, kInf);
  const auto mid = event_driven_trajectory(ref.x_M0, ref.y_M0, ref.v_x0, ref.masses, kInf);
  const auto hi = event_driven_trajectory(ref.x_M0, sp.upper, ref.v_x0, ref.masses, kInf);
  const std::size_t count = std::max({lo.events.size(), mid.events.size(), hi.events.size()});
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < count; ++k) {
    double a = kInf, b = -kInf;
    bool missing = false;
    for (const auto* tr : {&lo, &mid, &hi}) {
      if (k < tr->events.size()) {
        a = std::min(a, tr->events[k].t);
        b = std::max(b, tr->events[k].t);
      } else {
        missing = true;
      }
    }
    out.emplace_back(a, missing ? kInf : b);
  }
  return out;
}

[[noreturn]] void throw_mixed(const ScenarioParams& params, double dsigma_y0, double t) {
  // Safe instants bracket the union of overlapping windows containing t.
  const auto windows = mixed_windows(params, dsigma_y0);
  double lo = t, hi = t;
  bool grown = true;
  while (grown) {
    grown = false;
    for (const auto& [a, b] : windows) {
      if (a <= hi && b >= lo && (a < lo || b > hi)) {
        lo = std::min(lo, a);
        hi = std::max(hi, b);
        grown = true;
      }
    }
  }
  const double before = lo, after = hi;
  std::ostringstream msg;
  msg.precision(10);
  msg << "mixed-phase instant t=" << t << ": channels differ in collision history; nearest safe instants "
      << "are t<=" << before << " and t>=" << after;
  throw MixedPhaseError(msg.str(), before, after);
}

ChannelEnsemble ensemble_from_reference(const ScenarioParams& params, const ClassicalState& r, double n,
                                        double dsigma_y0) {
  const double eps = params.epsilon();
  const double v0 = params.v_x0();
  ChannelEnsemble e;
  e.n = n;
  e.t = r.t;
  e.walls = r.walls;
  e.x_center = r.x;
  e.y_center = r.y;
  e.dsigma_y0 = dsigma_y0;
  const double theta = 2.0 * eps * n;
  e.dsigma_y_n = dsigma_y0 * std::abs(std::cos(theta));
  e.slope = std::tan(theta) / eps;
  const bool before_wall = r.n > 0 && r.walls < r.n;
  e.sign_x = before_wall ? -1 : 1;
  e.x_offset_sign = (r.n == 0 || before_wall) ? 1 : -1;
  const double a = n * collision_angle(eps);
  e.p_xn = params.masses.m_x * v0 * std::cos(a) * e.sign_x;
  e.p_yn = params.masses.m_y * v0 * eps * std::sin(a);
  return e;
}

}  // namespace

void ScenarioParams::validate() const {
  const auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError(field + ": " + why);
  };
  if (!(sigma0x > 0.0)) fail("sigma0x", "must be positive");
  if (!(sigma0y > 0.0)) fail("sigma0y", "must be positive");
  if (!(x_M0 > 0.0)) fail("x_M0", "must be positive");
  if (!(y_M0 > x_M0)) fail("y_M0", "must exceed x_M0");
  if (!(p_x0 > 0.0)) fail("p_x0", "must be positive (light particle moving toward the heavy one)");
  if (!(masses.m_x > 0.0)) fail("m_x", "must be positive");
  if (!(masses.m_y > masses.m_x)) fail("m_y", "must exceed m_x");
  if (!(narrow_ratio_limit > 0.0)) fail("narrow_ratio_limit", "must be positive");
  const double gap = std::min({x_M0, y_M0 - x_M0, y_M0});
  const double widest = std::max(sigma0x, sigma0y);
  if (widest / gap > narrow_ratio_limit) {
    std::ostringstream msg;
    msg << "packet width / separation = " << widest / gap << " exceeds narrow_ratio_limit "
        << narrow_ratio_limit;
    fail(sigma0x >= sigma0y ? "sigma0x" : "sigma0y", msg.str());
  }
  if (!(masses.m_x * sigma0x * sigma0x < masses.m_y * sigma0y * sigma0y)) {
    fail("sigma0y", "need m_x sigma0x^2 < m_y sigma0y^2; the mirrored decomposition is not supported");
  }
}

double ScenarioParams::validity_figure() const {
  return epsilon() * masses.m_x * sigma0x * v_x0() / std::numbers::pi;
}

WidthSplit split_width(const ScenarioParams& params) {
  const double lhs = params.masses.m_x * params.sigma0x * params.sigma0x;
  const double rhs = params.masses.m_y * params.sigma0y * params.sigma0y;
  if (!(lhs < rhs)) {
    throw std::domain_error(
        "split_width: need m_x sigma0x^2 < m_y sigma0y^2; use the mirrored decomposition (not supported)");
  }
  const double eps = params.epsilon();
  const double sT = eps * params.sigma0x;
  return {std::sqrt(params.sigma0y * params.sigma0y - sT * sT), sT};
}

double ChannelEnsemble::cos_term(double eps) const { return std::cos(2.0 * eps * n); }
double ChannelEnsemble::sin_term(double eps) const { return std::sin(2.0 * eps * n); }
double ChannelEnsemble::dsigma_x_n(double eps) const { return dsigma_y0 * std::abs(sin_term(eps)) / eps; }

ChannelEnsemble initial_ensemble(const ScenarioParams& params) {
  const WidthSplit w = split_width(params);
  ChannelEnsemble e;
  e.dsigma_y0 = w.dsigma_y0;
  e.dsigma_y_n = w.dsigma_y0;
  e.x_center = params.x_M0;
  e.y_center = params.y_M0;
  e.p_xn = params.p_x0;
  e.p_yn = 0.0;
  return e;
}

bool mixed_phase_gate(const ChannelEnsemble& e, const ScenarioParams& params, double t) {
  const Span sp = channel_span(params, e.dsigma_y0);
  const ReferenceSetup ref = params.reference();
  const auto tr = event_driven_trajectory(ref.x_M0, ref.y_M0, ref.v_x0, ref.masses, t);
  const ClassicalState r = tr.state_at(t);
  for (double y0 : {sp.lower, sp.upper}) {
    const ClassicalState s = event_driven_trajectory(ref.x_M0, y0, ref.v_x0, ref.masses, t).state_at(t);
    if (s.n != r.n || s.walls != r.walls) return false;
  }
  // An instant exactly on a reference event is never safe.
  return tr.events.empty() || tr.events.back().t != t;
}

ChannelEnsemble propagate_ensemble(const ChannelEnsemble& e, const ScenarioParams& params, double t) {
  if (!(t >= 0.0)) throw std::domain_error("propagate_ensemble: t must be non-negative");
  if (!mixed_phase_gate(e, params, t)) throw_mixed(params, e.dsigma_y0, t);
  const ReferenceSetup ref = params.reference();
  const ClassicalState r = event_driven_trajectory(ref.x_M0, ref.y_M0, ref.v_x0, ref.masses, t).state_at(t);
  return ensemble_from_reference(params, r, r.n, e.dsigma_y0);
}

ChannelEnsemble critical_ensemble(const ScenarioParams& params, double t) {
  const WidthSplit w = split_width(params);
  const ReferenceSetup ref = params.reference();
  const ClassicalState r = event_driven_trajectory(ref.x_M0, ref.y_M0, ref.v_x0, ref.masses, t).state_at(t);
  return ensemble_from_reference(params, r, critical_collision_index(params.epsilon()), w.dsigma_y0);
}

QuadraticFormState channel_superposition(const ChannelEnsemble& e, const ScenarioParams& params) {
  const WidthSplit w = split_width(params);
  const double eps = params.epsilon();
  const cplx bx2 = width_param(params.sigma0x, params.masses.m_x, e.t);
  const cplx bT2 = width_param(w.sigma_yT, params.masses.m_y, e.t);
  const double D2 = w.dsigma_y0 * w.dsigma_y0;
  const double c = e.cos_term(eps);
  const double so = e.x_offset_sign * e.sin_term(eps) / eps;  // signed x-offset per unit w

  // Channel with initial offset w sits at (x_M + so w, y_M + c w); integrate
  // exp(-w^2/(2 D^2)) psi_w over w.
  const cplx alpha = 1.0 / (2.0 * D2) + so * so / (2.0 * bx2) + c * c / (2.0 * bT2);
  const cplx inv4a = 1.0 / (4.0 * alpha);
  QuadraticFormState s;
  s.a_xx = -1.0 / (2.0 * bx2) + so * so * inv4a / (bx2 * bx2);
  s.a_yy = -1.0 / (2.0 * bT2) + c * c * inv4a / (bT2 * bT2);
  s.a_xy = 2.0 * so * c * inv4a / (bx2 * bT2);
  const double xc = e.x_center, yc = e.y_center;
  const cplx kI{0.0, 1.0};
  s.b_x = -2.0 * s.a_xx * xc - s.a_xy * yc + kI * e.p_xn;
  s.b_y = -2.0 * s.a_yy * yc - s.a_xy * xc + kI * e.p_yn;
  s.log_norm = s.a_xx * xc * xc + s.a_yy * yc * yc + s.a_xy * xc * yc + 0.5 * std::log(std::numbers::pi / alpha);
  return normalized(s);
}

QuadraticFormState assemble_quadratic_form(const ChannelEnsemble& e, const ScenarioParams& params, double t) {
  return channel_superposition(propagate_ensemble(e, params, t), params);
}

cplx axy_formula(double n, double eps, cplx beta_x_sq, cplx beta_y_sq) {
  return std::sin(4.0 * eps * n) * (beta_y_sq - eps * eps * beta_x_sq) /
         (2.0 * std::sqrt(eps) * beta_x_sq * beta_y_sq);
}

std::pair<cplx, cplx> diagonal_formulas(double n, double eps, cplx beta_x_sq, cplx beta_y_sq) {
  const double c2 = std::pow(std::cos(2.0 * eps * n), 2);
  const double s2 = std::pow(std::sin(2.0 * eps * n), 2);
  return {-c2 / (2.0 * beta_x_sq) - s2 * eps * eps / (2.0 * beta_y_sq),
          -c2 / (2.0 * beta_y_sq) - s2 / (2.0 * beta_x_sq * eps * eps)};
}

bool energy_exchange_check(double t, const ScenarioParams& params, double tol) {
  const double eps = params.epsilon();
  const QuadraticFormState s = channel_superposition(critical_ensemble(params, t), params);
  const cplx bx2 = width_param(params.sigma0x, params.masses.m_x, t);
  const cplx by2 = width_param(params.sigma0y, params.masses.m_y, t);
  const cplx want_xx = -eps * eps / (2.0 * by2);
  const cplx want_yy = -1.0 / (2.0 * eps * eps * bx2);
  return std::abs(s.a_xx - want_xx) <= tol * std::abs(want_xx) &&
         std::abs(s.a_yy - want_yy) <= tol * std::abs(want_yy);
}

std::pair<double, double> composed_marginal_std(const ChannelEnsemble& e, const ScenarioParams& params) {
  const double eps = params.epsilon();
  const auto free_var = [](double sigma0, double mass, double t) {
    const double b = std::norm(width_param(sigma0, mass, t));  // |beta^2|^2
    return b / (2.0 * sigma0 * sigma0);
  };
  const double vx = free_var(params.sigma0x, params.masses.m_x, e.t);
  const double vy = free_var(params.sigma0y, params.masses.m_y, e.t);
  const double c = e.cos_term(eps), s = e.sin_term(eps);
  return {std::sqrt(c * c * vx + s * s / (eps * eps) * vy), std::sqrt(c * c * vy + eps * eps * s * s * vx)};
}

double reduced_purity(const QuadraticFormState& state) {
  if (!state.normalizable()) throw std::domain_error("reduced_purity: state is not normalizable");
  // rho(x, x') = exp(-alpha x^2 - conj(alpha) x'^2 + beta x x') after the y integral.
  const double g = -2.0 * state.a_yy.real();
  const double A = -2.0 * state.a_xx.real() - std::real(state.a_xy * state.a_xy) / (2.0 * g);
  const double B = -std::norm(state.a_xy) / (2.0 * g);
  return std::sqrt((A + B) / (A - B));
}

double schmidt_entropy_from_purity(double purity) {
  if (!(purity > 0.0) || purity > 1.0 + 1e-12) {
    throw std::domain_error("schmidt_entropy_from_purity: purity outside (0, 1]");
  }
  const double q = (1.0 - purity) / (1.0 + purity);
  if (q <= 0.0) return 0.0;
  return -std::log1p(-q) - q * std::log(q) / (1.0 - q);
}

EntanglementReport entanglement_report(const QuadraticFormState& state) {
  if (!state.normalizable()) throw std::domain_error("entanglement_report: state is not normalizable");
  EntanglementReport r;
  r.a_xy = state.a_xy;
  r.purity = std::min(1.0, reduced_purity(state));
  r.schmidt_entropy = schmidt_entropy_from_purity(r.purity);
  return r;
}

}  // namespace nechannel
