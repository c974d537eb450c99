#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "nechannel/errors.hpp"
#include "nechannel/grid_oracle.hpp"

using namespace nechannel;
using doctest::Approx;

namespace {

ScenarioParams compliant() {
  ScenarioParams p;
  p.x_M0 = 50.0;
  p.y_M0 = 100.0;
  p.sigma0x = 2.0;
  p.sigma0y = 2.0;
  p.p_x0 = 1.0;
  p.masses = MassPair::from_epsilon(1.0, 0.2);
  return p;
}

GridSpec spec(int n, double L, double dt) {
  GridSpec g;
  g.n = n;
  g.L = L;
  g.dt = dt;
  return g;
}

struct Moments {
  double mean, std;
};

Moments moments(const std::vector<double>& p, double h) {
  double w = 0, s1 = 0, s2 = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double x = static_cast<double>(k) * h;
    w += p[k];
    s1 += p[k] * x;
    s2 += p[k] * x * x;
  }
  return {s1 / w, std::sqrt(s2 / w - (s1 / w) * (s1 / w))};
}

}  // namespace

TEST_CASE("check_resolution") {
  const auto p = compliant();
  CHECK_NOTHROW(check_resolution(p, spec(512, 128, 0.1)));
  try {
    check_resolution(p, spec(128, 128, 0.1));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("sigma0x") == 0);
    CHECK(msg.find("grid.n >= 512") != std::string::npos);
  }
  auto fast = p;
  fast.p_x0 = 4.0;
  CHECK_THROWS_AS(check_resolution(fast, spec(512, 128, 0.1)), ConfigError);
  CHECK_THROWS_AS(check_resolution(p, spec(512, 108, 0.1)), ConfigError);
}

TEST_CASE("init_field") {
  const auto p = compliant();
  const auto g = spec(512, 128, 0.1);
  const auto f = init_field(p, g);
  CHECK(std::abs(f.norm() - 1.0) < 1e-12);
  double outside = 0.0;
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j)
      if (!f.inside(i, j)) outside += std::abs(f.at(i, j));
  CHECK(outside == 0.0);
  for (int i = 0; i < f.n; ++i) CHECK(f.at(i, i) == cplx(0.0, 0.0));

  const auto uncut = product_state(make_packet(p.x_M0, p.sigma0x, p.p_x0, p.masses.m_x),
                                   make_packet(p.y_M0, p.sigma0y, 0.0, p.masses.m_y));
  CHECK(std::abs(overlap(f, uncut)) >= 0.999);
  CHECK(std::abs(overlap(init_field(p, g, Cutoff::step), uncut)) >= 1.0 - 1e-12);
}

TEST_CASE("schmidt_purity and overlap basics") {
  GridField f;
  f.n = 32;
  f.L = 32;
  f.amp.assign(32 * 32, cplx{});
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) f.at(i, j) = std::sin(0.3 * i + 0.1) * cplx(std::cos(0.2 * j), 0.5);
  CHECK(std::abs(schmidt_purity(f) - 1.0) < 1e-12);

  std::fill(f.amp.begin(), f.amp.end(), cplx{});
  f.at(3, 10) = 1.0;
  f.at(5, 20) = cplx(0.0, 1.0);
  CHECK(std::abs(schmidt_purity(f) - 0.5) < 1e-12);

  // mirror-symmetric and mirror-antisymmetric pair of packets in x
  const auto g = spec(256, 64, 0.1);
  const auto py = make_packet(50.0, 2.0, 0.0, 25.0);
  const auto a = product_state(make_packet(16.0, 1.5, 0.0, 1.0), py);
  const auto b = product_state(make_packet(24.0, 1.5, 0.0, 1.0), py);
  auto fa = field_from_state(a, MassPair(1, 25), g), fb = field_from_state(b, MassPair(1, 25), g);
  GridField odd = fa;
  for (std::size_t k = 0; k < odd.amp.size(); ++k) odd.amp[k] = fa.amp[k] - fb.amp[k];
  odd.normalize();
  const auto mid = product_state(make_packet(20.0, 3.0, 0.0, 1.0), py);
  CHECK(std::abs(overlap(odd, mid)) <= 1e-3);
  CHECK(std::abs(overlap(fa, a)) >= 0.999);
  CHECK(std::abs(overlap(fa, fa) - 1.0) < 1e-14);
}

TEST_CASE("marginals") {
  const auto g = spec(256, 64, 0.1);
  const auto px = make_packet(20.0, 2.0, 0.3, 1.0), py = make_packet(45.0, 1.5, 0.0, 25.0);
  const auto f = field_from_state(product_state(px, py), MassPair(1, 25), g);
  const auto m = marginals(f);
  double sx = 0, sy = 0;
  for (int k = 0; k < f.n; ++k) {
    sx += m.x[k] * m.h;
    sy += m.y[k] * m.h;
  }
  CHECK(std::abs(sx - 1.0) < 1e-10);
  CHECK(std::abs(sy - 1.0) < 1e-10);
  CHECK(m.x[0] == 0.0);
  for (int k : {60, 80, 100}) {
    CHECK(m.x[k] == Approx(std::norm(px.value(k * m.h))).epsilon(1e-9));
    CHECK(m.y[k + 80] == Approx(std::norm(py.value((k + 80) * m.h))).epsilon(1e-9));
  }
}

TEST_CASE("free packet far from the boundaries") {
  const MassPair masses(1.0, 25.0);
  const auto g = spec(512, 96, 0.02);
  const auto px = make_packet(30.0, 4.0, 0.15, masses.m_x);
  const auto py = make_packet(80.0, 2.0, 0.0, masses.m_y);
  auto f = field_from_state(product_state(px, py), masses, g);
  const auto rep = evolve(f, g, 1000);
  CHECK(rep.steps == 1000);
  CHECK(rep.max_step_norm_drift <= 1e-8);
  CHECK(rep.energy_drift() <= 1e-6);
  CHECK(f.t == Approx(20.0));

  const auto want = free_evolve(px, 20.0);
  const auto mx = moments(marginals(f).x, f.dx());
  CHECK(std::abs((mx.mean - px.center) / (want.center - px.center) - 1.0) <= 1e-3);
  CHECK(mx.std == Approx(want.density_std()).epsilon(1e-3));
  CHECK(std::abs(width_param(4.0, 1.0, 20.0) - want.width_sq) < 1e-14);
}

TEST_CASE("wall reflection matches the mirror packet") {
  const MassPair masses(1.0, 25.0);
  const auto g = spec(512, 64, 0.1);
  const auto px = make_packet(12.0, 3.0, -1.0, masses.m_x);
  const auto py = make_packet(54.0, 1.5, 0.0, masses.m_y);
  auto f = field_from_state(product_state(px, py), masses, g);
  evolve(f, g, 240);
  // image field [phi(x) - phi(-x)] phi_y(y) of the freely evolved packets
  const auto qx = free_evolve(px, f.t), qy = free_evolve(py, f.t);
  GridField image = f;
  const double h = f.dx();
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j)
      image.at(i, j) = f.inside(i, j) ? antisymmetrized_value(qx, i * h) * qy.value(j * h) : cplx{};
  CHECK(std::abs(overlap(f, image)) >= 0.999);
  CHECK(schmidt_purity(f) >= 0.999);
}

TEST_CASE("heavy marginal after a pair collision on a coarse grid") {
  // eps = 0.2 through the first pair collision. Packets this wide are outside
  // the narrow-channel regime for the full state, but the heavy marginal
  // width still follows the rotated free product.
  ScenarioParams p;
  p.x_M0 = 85;
  p.y_M0 = 170;
  p.sigma0x = 20;
  p.sigma0y = 16;
  p.p_x0 = 0.12;
  p.masses = MassPair::from_epsilon(1.0, 0.2);
  p.narrow_ratio_limit = 0.25;
  const auto g = spec(128, 256, 2.0);
  // box edge closer than the init_field gate allows; the heavy packet stays put
  auto f = field_from_state(product_state(make_packet(p.x_M0, p.sigma0x, p.p_x0, p.masses.m_x),
                                          make_packet(p.y_M0, p.sigma0y, 0.0, p.masses.m_y)),
                            p.masses, g);
  const auto rep = evolve(f, g, 600);
  CHECK(rep.max_step_norm_drift <= 1e-8);
  CHECK(rep.energy_drift() <= 1e-6);
  const auto e = propagate_ensemble(initial_ensemble(p), p, f.t);
  REQUIRE(e.n == 1);
  const auto ms = marginal_stats(f);
  CHECK(ms.std_y == Approx(composed_marginal_std(e, p).second).epsilon(0.05));
}

TEST_CASE("instability is reported") {
  const MassPair masses(1.0, 25.0);
  auto g = spec(64, 64, 0.5);
  g.norm_tolerance = 1e-18;
  g.solver_tolerance = 1e-6;
  auto f = field_from_state(product_state(make_packet(20, 3, 0.5, 1), make_packet(45, 3, 0, 25)), masses, g);
  CHECK_THROWS_AS(evolve(f, g, 5), InstabilityError);
}

TEST_CASE("snapshot round trip") {
  const MassPair masses(1.0, 25.0);
  const auto g = spec(64, 32, 0.1);
  auto f = field_from_state(product_state(make_packet(10, 1.5, 0.5, 1), make_packet(22, 1.5, 0, 25)), masses,
                            g, 1.25);
  const auto path = (std::filesystem::temp_directory_path() / "nechannel_snapshot_test.bin").string();
  write_snapshot(path, f);
  CHECK(std::filesystem::file_size(path) == 16 + 24 + 64 * 64 * 16);
  std::ifstream in(path, std::ios::binary);
  std::int64_t nx = 0;
  double dx = 0;
  in.read(reinterpret_cast<char*>(&nx), 8);
  in.seekg(16);
  in.read(reinterpret_cast<char*>(&dx), 8);
  CHECK(nx == 64);
  CHECK(dx == 0.5);
  const auto r = read_snapshot(path, masses);
  CHECK(r.t == 1.25);
  CHECK(r.L == 32.0);
  CHECK(std::memcmp(r.amp.data(), f.amp.data(), f.amp.size() * sizeof(cplx)) == 0);
  std::filesystem::remove(path);
}
