#include "nechannel/classical_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

#include "nechannel/errors.hpp"

namespace nechannel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTolerance = 1e-14;

void require_eps(double eps, const char* who) {
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw std::domain_error(std::string(who) + ": eps must lie in (0, 1)");
  }
}

// Index of the first event after t (events are sorted by time).
std::size_t events_until(const ClassicalTrajectory& tr, double t) {
  const auto it = std::upper_bound(tr.events.begin(), tr.events.end(), t,
                                   [](double v, const CollisionEvent& e) { return v < e.t; });
  return static_cast<std::size_t>(it - tr.events.begin());
}

ClassicalState advance(const ClassicalState& s, double t) {
  ClassicalState r = s;
  const double dt = t - s.t;
  r.x = s.x + s.v_x * dt;
  r.y = s.y + s.v_y * dt;
  r.t = t;
  return r;
}

}  // namespace

ClassicalState ClassicalTrajectory::state_at(double t) const {
  const std::size_t k = events_until(*this, t);
  const ClassicalState& base = k == 0 ? initial : events[k - 1].after;
  return advance(base, t);
}

int ClassicalTrajectory::pair_count() const {
  return static_cast<int>(std::count_if(events.begin(), events.end(),
                                        [](const CollisionEvent& e) { return e.kind == EventKind::pair; }));
}

std::vector<double> ClassicalTrajectory::pair_times() const {
  std::vector<double> out;
  for (const auto& e : events)
    if (e.kind == EventKind::pair) out.push_back(e.t);
  return out;
}

std::vector<double> ClassicalTrajectory::pair_positions() const {
  std::vector<double> out;
  for (const auto& e : events)
    if (e.kind == EventKind::pair) out.push_back(e.after.y);
  return out;
}

std::pair<double, double> collision_velocity_map(double v_x, double v_y, const MassPair& m) {
  if (!(v_x > v_y)) {
    throw std::domain_error("collision_velocity_map: velocities are not closing (need v_x > v_y)");
  }
  const double M = m.total();
  return {((m.m_y - m.m_x) * v_x - 2.0 * m.m_y * v_y) / M,
          (2.0 * m.m_x * v_x + (m.m_y - m.m_x) * v_y) / M};
}

double collision_angle(double eps) {
  require_eps(eps, "collision_angle");
  return std::atan(2.0 * eps / (1.0 - eps * eps));
}

int max_collisions(double eps) {
  require_eps(eps, "max_collisions");
  return static_cast<int>(std::floor(std::atan(1.0 / eps) / collision_angle(eps)));
}

double critical_collision_index(double eps) {
  require_eps(eps, "critical_collision_index");
  return std::numbers::pi / (4.0 * eps);
}

std::pair<double, double> closed_form_velocities(int n, double eps, double v_x0) {
  require_eps(eps, "closed_form_velocities");
  if (n < 0 || n > max_collisions(eps) + 1) {
    throw std::domain_error("closed_form_velocities: n outside [0, max_collisions + 1]");
  }
  const double a = n * collision_angle(eps);
  return {v_x0 * std::cos(a), v_x0 * eps * std::sin(a)};
}

ClassicalTrajectory event_driven_trajectory(double x0, double y0, double v_x0, const MassPair& masses,
                                            double t_end) {
  if (!(x0 > 0.0) || !(y0 > x0)) throw std::domain_error("event_driven_trajectory: need 0 < x0 < y0");
  if (!(v_x0 > 0.0)) throw std::domain_error("event_driven_trajectory: need v_x0 > 0");

  ClassicalTrajectory tr;
  tr.initial = ClassicalState{x0, y0, v_x0, 0.0, 0.0, 0, 0};
  ClassicalState s = tr.initial;

  // Each pair collision is preceded by at most one wall reflection.
  const double eps = masses.epsilon();
  const std::size_t guard =
      eps < 1.0 ? static_cast<std::size_t>(2 * (max_collisions(eps) + 3)) : std::size_t{8};

  while (tr.events.size() <= guard) {
    const double tw = s.v_x < 0.0 ? s.x / (-s.v_x) : kInf;
    const double tp = s.v_x > s.v_y ? (s.y - s.x) / (s.v_x - s.v_y) : kInf;
    if (tw == kInf && tp == kInf) {
      tr.finished = true;
      return tr;
    }
    bool wall = tw <= tp;
    if (std::isfinite(tw) && std::isfinite(tp) &&
        std::abs(tw - tp) <= kTieTolerance * std::max(tw, tp)) {
      if (s.y - s.x <= 0.0 && s.x <= 0.0) {
        throw std::runtime_error("event_driven_trajectory: simultaneous wall and pair contact");
      }
      wall = true;
    }
    const double dt = wall ? tw : tp;
    if (s.t + dt > t_end) return tr;

    s = advance(s, s.t + dt);
    if (wall) {
      s.x = 0.0;
      s.v_x = -s.v_x;
      ++s.walls;
      tr.events.push_back({s.t, EventKind::wall, s});
    } else {
      s.x = s.y;
      const auto [px, py] = post_collision_momenta(masses.m_x * s.v_x, masses.m_y * s.v_y, masses);
      s.v_x = px / masses.m_x;
      s.v_y = py / masses.m_y;
      ++s.n;
      tr.events.push_back({s.t, EventKind::pair, s});
    }
  }
  throw std::runtime_error("event_driven_trajectory: event budget exhausted");
}

ClassicalTrajectory recursion_trajectory(double x0, double y0, double v_x0, const MassPair& masses) {
  if (!(x0 > 0.0) || !(y0 > x0)) throw std::domain_error("recursion_trajectory: need 0 < x0 < y0");
  if (!(v_x0 > 0.0)) throw std::domain_error("recursion_trajectory: need v_x0 > 0");
  const double eps = masses.epsilon();
  const double offset = asymptotic_clock_offset(x0, y0, v_x0);

  ClassicalTrajectory tr;
  tr.initial = ClassicalState{x0, y0, v_x0, 0.0, 0.0, 0, 0};

  // Clock starts with "collision 0" at y0, the light particle heading to the wall.
  double y = y0;
  double clock = 0.0;
  int walls = 0;
  for (int n = 0;; ++n) {
    const auto [vx, vy] = closed_form_velocities(n, eps, v_x0);
    if (n > 0) {
      tr.events.push_back({clock - offset, EventKind::pair,
                           ClassicalState{y, y, -vx, vy, clock - offset, n, walls}});
      if (vx > 0.0) {
        const double dtw = y / vx;
        ++walls;
        tr.events.push_back({clock + dtw - offset, EventKind::wall,
                             ClassicalState{0.0, y + vy * dtw, vx, vy, clock + dtw - offset, n, walls}});
      }
    }
    if (!(vx > vy)) break;
    clock += 2.0 * y / (vx - vy);
    y *= (vx + vy) / (vx - vy);
  }
  tr.finished = true;
  return tr;
}

double asymptotic_clock_offset(double x0, double y0, double v_x0) { return (x0 + y0) / v_x0; }

double collision_position_approx(int n, double y_m0, double eps) {
  require_eps(eps, "collision_position_approx");
  if (n < 0 || n > max_collisions(eps)) {
    throw std::domain_error("collision_position_approx: n outside [0, max_collisions]");
  }
  return y_m0 * std::exp(2.0 * n * n * eps * eps);
}

double collision_time_approx(int n, double y_m0, double v_x0, double eps) {
  require_eps(eps, "collision_time_approx");
  if (n < 0 || n > max_collisions(eps)) {
    throw std::domain_error("collision_time_approx: n outside [0, max_collisions]");
  }
  const double nn = n;
  return 2.0 * y_m0 / v_x0 * nn * (1.0 + eps * eps * (4.0 / 3.0 * nn * nn - nn - 1.0 / 3.0));
}

int collisions_by_time(double t, double y_m0, double v_x0, double eps) {
  require_eps(eps, "collisions_by_time");
  if (!(t >= 0.0)) throw std::domain_error("collisions_by_time: t must be non-negative");
  const double tv = t * v_x0;
  const double y = y_m0;
  const double n = tv / (2.0 * y) - tv * (2.0 * tv + y) * (tv - 2.0 * y) * eps * eps / (12.0 * y * y * y);
  const double nfloor = std::floor(n);
  return std::clamp(static_cast<int>(nfloor), 0, max_collisions(eps) + 1);
}

std::pair<double, double> channel_coords(double y_m0, double t, const ReferenceSetup& setup) {
  const double eps = setup.masses.epsilon();
  const auto ref = event_driven_trajectory(setup.x_M0, setup.y_M0, setup.v_x0, setup.masses, t);
  const auto chan = event_driven_trajectory(setup.x_M0, y_m0, setup.v_x0, setup.masses, t);
  const ClassicalState r = ref.state_at(t);
  const ClassicalState c = chan.state_at(t);
  if (r.n != c.n || r.walls != c.walls) {
    // First event not shared by both histories bounds the unsafe window.
    const auto full_ref = event_driven_trajectory(setup.x_M0, setup.y_M0, setup.v_x0, setup.masses, kInf);
    const auto full_chan = event_driven_trajectory(setup.x_M0, y_m0, setup.v_x0, setup.masses, kInf);
    const std::size_t k = std::min(ref.events.size(), chan.events.size());
    const double ta = k < full_ref.events.size() ? full_ref.events[k].t : t;
    const double tb = k < full_chan.events.size() ? full_chan.events[k].t : t;
    throw MixedPhaseError("channel_coords: channel and reference differ in collision history",
                          std::min(ta, tb), std::max(ta, tb));
  }
  const double dy0 = y_m0 - setup.y_M0;
  const double theta = 2.0 * eps * r.n;
  const double sign = r.walls < r.n ? 1.0 : -1.0;
  return {r.x + sign * std::sin(theta) / eps * dy0, r.y + std::cos(theta) * dy0};
}

EnsembleWidths ensemble_widths(double n, double eps, double dsigma_y0) {
  require_eps(eps, "ensemble_widths");
  if (n < 0.0 || n > max_collisions(eps) + 1) {
    throw std::domain_error("ensemble_widths: n outside [0, max_collisions + 1]");
  }
  const double theta = 2.0 * eps * n;
  return {n, dsigma_y0 * std::abs(std::cos(theta)), dsigma_y0 * std::abs(std::sin(theta)) / eps};
}

std::vector<EnsembleSpread> monte_carlo_spread(const ReferenceSetup& setup, double dsigma_y0, int samples,
                                               std::uint64_t seed, const std::vector<double>& instants) {
  if (samples < 2) throw std::domain_error("monte_carlo_spread: need at least two samples");
  const double t_max = instants.empty() ? 0.0 : *std::max_element(instants.begin(), instants.end());
  const auto ref = event_driven_trajectory(setup.x_M0, setup.y_M0, setup.v_x0, setup.masses, t_max);

  std::vector<EnsembleSpread> out(instants.size());
  std::vector<std::vector<double>> xs(instants.size()), ys(instants.size());
  for (std::size_t k = 0; k < instants.size(); ++k) {
    const ClassicalState r = ref.state_at(instants[k]);
    out[k].t = instants[k];
    out[k].n = r.n;
    out[k].mixed = false;
    xs[k].reserve(samples);
    ys[k].reserve(samples);
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < samples; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 gen(seq);
    normal.reset();
    const double y_m0 = setup.y_M0 + dsigma_y0 * normal(gen);
    if (!(y_m0 > setup.x_M0)) {
      throw std::domain_error("monte_carlo_spread: sampled heavy position below the light particle");
    }
    const auto tr = event_driven_trajectory(setup.x_M0, y_m0, setup.v_x0, setup.masses, t_max);
    for (std::size_t k = 0; k < instants.size(); ++k) {
      const ClassicalState s = tr.state_at(instants[k]);
      const ClassicalState r = ref.state_at(instants[k]);
      if (s.n != r.n || s.walls != r.walls) out[k].mixed = true;
      xs[k].push_back(s.x);
      ys[k].push_back(s.y);
    }
  }

  const auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double a : v) mean += a;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    return std::pair{mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
  };
  for (std::size_t k = 0; k < instants.size(); ++k) {
    std::tie(out[k].mean_x, out[k].std_x) = mean_std(xs[k]);
    std::tie(out[k].mean_y, out[k].std_y) = mean_std(ys[k]);
    const double y_ref = ref.state_at(instants[k]).y;
    out[k].offsets_y.resize(ys[k].size());
    std::transform(ys[k].begin(), ys[k].end(), out[k].offsets_y.begin(),
                   [y_ref](double y) { return y - y_ref; });
  }
  return out;
}

}  // namespace nechannel
