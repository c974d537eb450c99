#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

#include "nechannel/channel_engine.hpp"
#include "nechannel/errors.hpp"

using namespace nechannel;
using doctest::Approx;

namespace {

ScenarioParams params05() {
  ScenarioParams p;
  p.x_M0 = 25.0;
  p.y_M0 = 50.0;
  p.sigma0x = 1.0;
  p.sigma0y = 0.5;
  p.p_x0 = 200.0;
  p.masses = MassPair::from_epsilon(1.0, 0.05);
  return p;
}

// Instant after pair collision n, before (or after) the following wall bounce.
double after_pair(const ScenarioParams& p, int n, bool past_wall = false) {
  const auto tr = event_driven_trajectory(p.x_M0, p.y_M0, p.v_x0(), p.masses, 1e9);
  for (std::size_t k = 0; k < tr.events.size(); ++k) {
    if (tr.events[k].kind == EventKind::pair && tr.events[k].after.n == n) {
      const std::size_t j = k + (past_wall ? 1 : 0);
      const double next = j + 1 < tr.events.size() ? tr.events[j + 1].t : tr.events[j].t + 1.0;
      return 0.5 * (tr.events[j].t + next);
    }
  }
  throw std::logic_error("no such collision");
}

bool rel_close(cplx a, cplx b, double tol) { return std::abs(a - b) <= tol * std::abs(b); }

}  // namespace

TEST_CASE("ScenarioParams validation names the field") {
  auto p = params05();
  CHECK_NOTHROW(p.validate());
  const auto message = [](ScenarioParams q) {
    try {
      q.validate();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  auto q = p;
  q.sigma0x = -1;
  CHECK(message(q).rfind("sigma0x", 0) == 0);
  q = p;
  q.y_M0 = 20;
  CHECK(message(q).rfind("y_M0", 0) == 0);
  q = p;
  q.sigma0x = 3.0;
  CHECK(message(q).rfind("sigma0x", 0) == 0);
  q = p;
  q.sigma0y = 0.04;
  CHECK(message(q).rfind("sigma0y", 0) == 0);
  q = p;
  q.p_x0 = 0;
  CHECK(message(q).rfind("p_x0", 0) == 0);
  CHECK(p.validity_figure() == Approx(0.05 * 200.0 / std::numbers::pi));
}

TEST_CASE("split_width") {
  ScenarioParams p = params05();
  p.masses = MassPair::from_epsilon(1.0, 0.1);
  const auto w = split_width(p);
  CHECK(w.sigma_yT == Approx(0.1).epsilon(1e-14));
  CHECK(w.dsigma_y0 == Approx(0.489898).epsilon(1e-6));

  auto edge = p;
  edge.sigma0y = 0.1;  // m_x sx^2 = m_y sy^2: a single channel already
  CHECK_THROWS_AS(split_width(edge), std::domain_error);

  // Convolution of the channel distribution and a single channel packet.
  const auto gauss = [](double u, double s) {
    return std::exp(-u * u / (2 * s * s)) / (s * std::sqrt(2 * std::numbers::pi));
  };
  for (double y : {0.0, 0.3, 1.1}) {
    const double conv = oracle::integrate_real(
        [&](double u) { return gauss(u, w.dsigma_y0) * gauss(y - u, w.sigma_yT); }, -8.0, 8.0);
    CHECK(std::abs(conv - gauss(y, p.sigma0y)) < 1e-12);
  }
}

TEST_CASE("initial and propagated ensembles") {
  const auto p = params05();
  const auto e0 = initial_ensemble(p);
  const auto w = split_width(p);
  CHECK(e0.slope == 0.0);
  CHECK(e0.dsigma_y0 == w.dsigma_y0);
  CHECK(e0.dsigma_y_n == w.dsigma_y0);
  CHECK(e0.dsigma_x_n(0.05) == 0.0);
  CHECK(e0.x_center == p.x_M0);
  CHECK(e0.y_center == p.y_M0);

  const auto ef = propagate_ensemble(e0, p, 0.05);
  CHECK(ef.n == 0.0);
  CHECK(ef.x_center == Approx(p.x_M0 + 0.05 * p.v_x0()));
  CHECK(ef.y_center == p.y_M0);
  CHECK(ef.dsigma_y_n == e0.dsigma_y_n);
  CHECK(ef.p_xn == Approx(p.p_x0));

  const double eps = 0.05;
  for (int n : {1, 4, 9}) {
    for (bool past : {false, true}) {
      const auto e = propagate_ensemble(e0, p, after_pair(p, n, past));
      CHECK(e.n == n);
      CHECK(e.dsigma_y_n == Approx(w.dsigma_y0 * std::abs(std::cos(2 * eps * n))));
      CHECK(e.slope * std::cos(2 * eps * n) == Approx(std::sin(2 * eps * n) / eps));
      const auto [vx, vy] = closed_form_velocities(n, eps, p.v_x0());
      CHECK(e.p_xn == Approx(p.masses.m_x * vx * e.sign_x));
      CHECK(e.p_yn == Approx(p.masses.m_y * vy));
      CHECK(e.sign_x == (past ? 1 : -1));
      CHECK(e.x_offset_sign == (past ? -1 : 1));
      CHECK(e.dsigma_x_n(eps) == Approx(w.dsigma_y0 * std::abs(std::sin(2 * eps * n)) / eps));
    }
  }

  const auto ec = critical_ensemble(p, after_pair(p, 15));
  CHECK(ec.dsigma_y_n <= 1e-12 * w.dsigma_y0);
  CHECK(ec.dsigma_x_n(eps) == Approx(w.dsigma_y0 / eps));
}

TEST_CASE("mixed_phase_gate") {
  const auto p = params05();
  const auto e0 = initial_ensemble(p);
  CHECK(mixed_phase_gate(e0, p, 0.0));
  const auto tr = event_driven_trajectory(p.x_M0, p.y_M0, p.v_x0(), p.masses, 1e9);
  const double t1 = tr.pair_times()[0], t2 = tr.pair_times()[1];
  CHECK_FALSE(mixed_phase_gate(e0, p, t1));

  auto narrow = p;
  narrow.sigma0y = 0.06;
  const auto en = initial_ensemble(narrow);
  CHECK(mixed_phase_gate(en, narrow, 0.5 * (t1 + t2)));

  CHECK_THROWS_AS(propagate_ensemble(e0, p, t1), MixedPhaseError);
  try {
    propagate_ensemble(e0, p, t1);
  } catch (const MixedPhaseError& err) {
    CHECK(err.safe_before() < t1);
    CHECK(err.safe_after() > t1);
    CHECK(mixed_phase_gate(e0, p, err.safe_before() - 1e-9));
    CHECK(mixed_phase_gate(e0, p, err.safe_after() + 1e-9));
  }
}

TEST_CASE("channel_superposition") {
  const auto p = params05();
  const double eps = p.epsilon();
  const auto e0 = initial_ensemble(p);

  SUBCASE("no collision: initial product state") {
    const auto s = channel_superposition(e0, p);
    const auto want = product_state(make_packet(p.x_M0, p.sigma0x, p.p_x0, p.masses.m_x),
                                    make_packet(p.y_M0, p.sigma0y, 0.0, p.masses.m_y));
    CHECK(s.a_xy == cplx(0.0, 0.0));
    CHECK(rel_close(s.a_xx, want.a_xx, 1e-14));
    CHECK(rel_close(s.a_yy, want.a_yy, 1e-12));  // loses ~2 digits to sigma_yT^2 / sigma0y^2
    CHECK(rel_close(s.b_x, want.b_x, 1e-13));
    CHECK(rel_close(s.b_y, want.b_y, 1e-13));
    CHECK(std::abs(std::exp(s.log_norm - want.log_norm) - 1.0) < 1e-8);
  }

  SUBCASE("critical index cancels the cross term") {
    const auto ec = critical_ensemble(p, after_pair(p, 15));
    const auto s = channel_superposition(ec, p);
    CHECK(std::abs(s.a_xy) < 1e-10);
    CHECK(energy_exchange_check(ec.t, p));
  }

  SUBCASE("coefficients vs quadrature of the channel integral") {
    for (bool past : {false, true}) {
      const auto e = propagate_ensemble(e0, p, after_pair(p, 3, past));
      const auto s = channel_superposition(e, p);
      const auto q = oracle::ChannelIntegral(e, p).coefficients(0.01);
      CHECK(rel_close(s.a_xx, q.a_xx, 1e-8));
      CHECK(rel_close(s.a_yy, q.a_yy, 1e-8));
      CHECK(rel_close(s.a_xy, q.a_xy, 1e-8));
      CHECK(rel_close(s.b_x, q.b_x, 1e-8));
      CHECK(rel_close(s.b_y, q.b_y, 1e-8));
    }
  }

  SUBCASE("printed cross-term formula") {
    CHECK(axy_formula(0.0, eps, {1, 1}, {2, 1}) == cplx(0.0, 0.0));
    CHECK(std::abs(axy_formula(std::numbers::pi / (4 * eps), eps, {1, 1}, {2, 1})) < 1e-14);
    const double t = after_pair(p, 3);
    const auto s = assemble_quadratic_form(e0, p, t);
    const cplx bx2 = width_param(p.sigma0x, p.masses.m_x, t);
    const cplx by2 = width_param(p.sigma0y, p.masses.m_y, t);
    const cplx printed = axy_formula(3.0, eps, bx2, by2);
    CHECK(rel_close(printed / s.a_xy, std::sqrt(eps), 1e-10));
  }

  SUBCASE("displayed diagonal coefficients") {
    const double t = after_pair(p, 3);
    const auto s = assemble_quadratic_form(e0, p, t);
    const cplx bx2 = width_param(p.sigma0x, p.masses.m_x, t);
    const cplx by2 = width_param(p.sigma0y, p.masses.m_y, t);
    const auto [axx, ayy] = diagonal_formulas(3.0, eps, bx2, by2);
    CHECK(rel_close(s.a_xx, axx, 1e-10));
    CHECK(rel_close(s.a_yy, ayy, 1e-10));

    const auto [z0x, z0y] = diagonal_formulas(0.0, eps, bx2, by2);
    CHECK(rel_close(z0x, -1.0 / (2.0 * bx2), 1e-15));
    CHECK(rel_close(z0y, -1.0 / (2.0 * by2), 1e-15));
    const double nq = std::numbers::pi / (4 * eps);
    const auto [qx, qy] = diagonal_formulas(nq, eps, bx2, by2);
    CHECK(rel_close(qx, -eps * eps / (2.0 * by2), 1e-12));
    CHECK(rel_close(qy, -1.0 / (2.0 * bx2 * eps * eps), 1e-12));
  }

  SUBCASE("composed marginal widths vs the assembled density") {
    const double t = after_pair(p, 3);
    const auto e = propagate_ensemble(e0, p, t);
    const auto dm = density_moments(channel_superposition(e, p));
    const auto [sx, sy] = composed_marginal_std(e, p);
    CHECK(sx == Approx(std::sqrt(dm.var_x)).epsilon(0.05));
    CHECK(sy == Approx(std::sqrt(dm.var_y)).epsilon(0.05));
  }
}

TEST_CASE("entanglement measures") {
  QuadraticFormState prod{};
  prod.a_xx = {-0.5, 0.1};
  prod.a_yy = {-0.7, -0.2};
  const auto r0 = entanglement_report(prod);
  CHECK(r0.purity == 1.0);
  CHECK(r0.schmidt_entropy == 0.0);

  QuadraticFormState g{};
  g.a_xx = {-0.6, 0.2};
  g.a_yy = {-0.9, -0.1};
  g.a_xy = {0.5, 0.3};
  g.b_x = {0.4, 1.0};
  g.b_y = {-0.2, 0.5};
  g = normalized(g);
  const double mu = reduced_purity(g);
  CHECK(mu < 0.99);
  const auto dm = density_moments(g);
  const double brute = oracle::grid_purity([&](double x, double y) { return evaluate(g, x, y); }, dm.mean_x,
                                           dm.mean_y, std::sqrt(dm.var_x), std::sqrt(dm.var_y));
  CHECK(std::abs(mu - brute) < 1e-4);

  auto shifted = g;
  shifted.b_x += cplx(3.0, -2.0);
  shifted.b_y += cplx(-1.0, 5.0);
  shifted.log_norm += cplx(0.0, 1.3);
  CHECK(reduced_purity(shifted) == Approx(mu).epsilon(1e-14));

  // entropy of a two-mode squeezed spectrum with lambda_k = (1 - q) q^k
  const double q = 0.3, mu_q = (1 - q) / (1 + q);
  double ent = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double l = (1 - q) * std::pow(q, k);
    ent -= l * std::log(l);
  }
  CHECK(schmidt_entropy_from_purity(mu_q) == Approx(ent).epsilon(1e-12));
  CHECK_THROWS_AS(schmidt_entropy_from_purity(1.5), std::domain_error);
}

TEST_CASE("purity along an eps = 0.05 run matches brute force") {
  const auto p = params05();
  const auto e0 = initial_ensemble(p);
  for (int n : {2, 8}) {
    const auto s = assemble_quadratic_form(e0, p, after_pair(p, n));
    const auto dm = density_moments(s);
    const double brute = oracle::grid_purity([&](double x, double y) { return evaluate(s, x, y); }, dm.mean_x,
                                             dm.mean_y, std::sqrt(dm.var_x), std::sqrt(dm.var_y));
    CHECK(std::abs(entanglement_report(s).purity - brute) < 1e-4);
  }
}
