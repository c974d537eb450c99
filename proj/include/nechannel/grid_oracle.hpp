#pragma once

// Brute-force two-particle propagation on the triangle 0 < x < y < L with
// Dirichlet walls (hard wall at x = 0, hard core at x = y, box edge at y = L).
//
// Scheme: Crank-Nicolson in both coordinates, (1 + i dt H/2) psi' =
// (1 - i dt H/2) psi with the 3-point Laplacian. The linear system is solved
// by iterative refinement preconditioned with the split factorization
// (1 + i dt Tx/2)(1 + i dt Ty/2), so each iteration is two sweeps of
// tridiagonal solves. Second order in h and dt, exactly unitary up to the
// solver tolerance.

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "nechannel/channel_engine.hpp"
#include "nechannel/gaussian_core.hpp"

namespace nechannel {

struct GridSpec {
  int n = 512;       ///< points per axis, x_i = i L / n
  double L = 512.0;  ///< box size
  double dt = 1.0;
  double norm_tolerance = 1e-8;  ///< per-step relative norm drift before aborting
  double solver_tolerance = 1e-13;

  double h() const { return L / n; }
};

/// Row-major amplitudes amp[i * n + j] with x = i h, y = j h. Points outside
/// 1 <= i < j <= n - 1 are held at exactly zero.
struct GridField {
  int n = 0;
  double L = 0.0;
  double t = 0.0;
  MassPair masses;
  std::vector<cplx> amp;

  double dx() const { return L / n; }
  double dy() const { return L / n; }
  bool inside(int i, int j) const { return i >= 1 && i < j && j <= n - 1; }
  std::vector<bool> mask() const;
  cplx& at(int i, int j) { return amp[static_cast<std::size_t>(i) * n + j]; }
  cplx at(int i, int j) const { return amp[static_cast<std::size_t>(i) * n + j]; }
  double norm() const;
  void normalize();
};

struct EvolveReport {
  int steps = 0;
  double max_step_norm_drift = 0.0;
  double energy_start = 0.0;
  double energy_end = 0.0;
  int max_solver_iterations = 0;

  double energy_drift() const;
};

/// Throws ConfigError unless h <= sigma/8 for both widths, h <= (2 pi / p_x0)/8
/// and the heavy packet sits well inside the box.
void check_resolution(const ScenarioParams& params, const GridSpec& spec);

enum class Cutoff {
  sine,  ///< smooth sin(pi x / y) factor
  step,  ///< plain restriction of the Gaussian to the domain
};

/// Start state: product Gaussian times the chosen cutoff, normalized on the
/// grid. The sine factor narrows the light packet by O((sigma0x / y_M0)^2).
GridField init_field(const ScenarioParams& params, const GridSpec& spec, Cutoff cutoff = Cutoff::sine);

/// Samples an analytic state on the physical domain, normalized.
GridField field_from_state(const QuadraticFormState& state, const MassPair& masses, const GridSpec& spec,
                           double t = 0.0);

/// Advances in place; throws InstabilityError when one step changes the norm
/// by more than spec.norm_tolerance or the solver stalls.
EvolveReport evolve(GridField& field, const GridSpec& spec, int steps);

/// <psi|H|psi> / <psi|psi>.
double energy(const GridField& field);

/// sum s^4 / (sum s^2)^2 over the singular values of the amplitude matrix.
double schmidt_purity(const GridField& field);

/// Normalized discrete inner product <state|field>.
cplx overlap(const GridField& field, const QuadraticFormState& state);
cplx overlap(const GridField& a, const GridField& b);

struct Marginals {
  std::vector<double> x, y;  ///< densities on the grid points
  double h = 0.0;
};

Marginals marginals(const GridField& field);

struct MarginalStats {
  double mean_x, mean_y, std_x, std_y;
};

MarginalStats marginal_stats(const GridField& field);

/// Header: int64 nx, int64 ny, f64 dx, f64 dy, f64 t (little endian);
/// payload: nx * ny interleaved (re, im) f64, row-major in x.
void write_snapshot(const std::string& path, const GridField& field);
GridField read_snapshot(const std::string& path, const MassPair& masses);

/// Columns: coordinate, density_x, density_y.
void write_marginals_csv(const std::string& path, const GridField& field);

}  // namespace nechannel
