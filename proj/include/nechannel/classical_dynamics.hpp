#pragma once

// Classical wall / light / heavy hard-core system: velocity rotation, exact
// event-driven motion, asymptotic collision laws and ensemble width laws.
//
// Collision asymptotics (collision_time_approx, collisions_by_time) are
// written in the "asymptotic clock": the light particle starts at the heavy
// particle moving toward the wall. A real start at x_M0 moving right is the
// same motion shifted by asymptotic_clock_offset().

#include <cstdint>
#include <utility>
#include <vector>

#include "nechannel/gaussian_core.hpp"

namespace nechannel {

enum class EventKind { wall, pair };

struct ClassicalState {
  double x = 0.0;
  double y = 0.0;
  double v_x = 0.0;
  double v_y = 0.0;
  double t = 0.0;
  int n = 0;      ///< pair collisions so far
  int walls = 0;  ///< wall reflections so far
};

struct CollisionEvent {
  double t;
  EventKind kind;
  ClassicalState after;
};

struct ClassicalTrajectory {
  ClassicalState initial;
  std::vector<CollisionEvent> events;
  /// True when no further event can happen (v_x <= v_y after the light
  /// particle has left the wall).
  bool finished = false;

  ClassicalState state_at(double t) const;
  int pair_count() const;
  std::vector<double> pair_times() const;
  std::vector<double> pair_positions() const;
};

/// Initial data of the reference problem.
struct ReferenceSetup {
  double x_M0;
  double y_M0;
  double v_x0;
  MassPair masses;
};

struct EnsembleWidths {
  double n;
  double dsigma_y;
  double dsigma_x;
};

/// Pair collision followed by the light particle's wall reflection, as one
/// step of the velocity iteration: (v_x, v_y) -> (v_x', v_y').
std::pair<double, double> collision_velocity_map(double v_x, double v_y, const MassPair& masses);

/// phi = arctan(2 eps / (1 - eps^2)).
double collision_angle(double eps);

/// floor(arctan(1/eps) / phi).
int max_collisions(double eps);

/// pi / (4 eps): collision index at which the heavy-particle channel spread vanishes.
double critical_collision_index(double eps);

/// (v_x0 cos(n phi), v_x0 eps sin(n phi)); n <= max_collisions(eps) + 1.
std::pair<double, double> closed_form_velocities(int n, double eps, double v_x0);

/// Exact piecewise-linear motion with closed-form event times.
ClassicalTrajectory event_driven_trajectory(double x0, double y0, double v_x0,
                                            const MassPair& masses, double t_end);

/// Same motion rebuilt from the position/time recursions and the closed-form
/// velocities (second algebraic route to the event list).
ClassicalTrajectory recursion_trajectory(double x0, double y0, double v_x0,
                                         const MassPair& masses);

/// (x0 + y0) / v_x0.
double asymptotic_clock_offset(double x0, double y0, double v_x0);

/// y(n) ~ y_m0 exp(2 n^2 eps^2).
double collision_position_approx(int n, double y_m0, double eps);

/// t(n) ~ (2 y_m0 / v_x0) n [1 + eps^2 (4 n^2 / 3 - n - 1/3)], asymptotic clock.
double collision_time_approx(int n, double y_m0, double v_x0, double eps);

/// Floor of the second-order inverse of collision_time_approx.
int collisions_by_time(double t, double y_m0, double v_x0, double eps);

/// Positions (x_m, y_m) at time t of the channel that started at y_m0,
/// from the reference trajectory and the linear channel map. Throws
/// MixedPhaseError when the channel and the reference differ in history.
std::pair<double, double> channel_coords(double y_m0, double t, const ReferenceSetup& setup);

/// (dsigma_y0 |cos(2 eps n)|, dsigma_y0 |sin(2 eps n)| / eps).
EnsembleWidths ensemble_widths(double n, double eps, double dsigma_y0);

struct EnsembleSpread {
  double t;
  int n;           ///< pair count of the reference channel
  bool mixed;      ///< samples disagree on (pairs, walls)
  double mean_x, mean_y;
  double std_x, std_y;
  std::vector<double> offsets_y;  ///< y_m - y_M(t) per sample
};

/// Monte Carlo over y_m0 ~ N(y_M0, dsigma_y0); sample i draws from its own
/// generator seeded by (seed, i), so results do not depend on scheduling.
std::vector<EnsembleSpread> monte_carlo_spread(const ReferenceSetup& setup, double dsigma_y0,
                                               int samples, std::uint64_t seed,
                                               const std::vector<double>& instants);

}  // namespace nechannel
