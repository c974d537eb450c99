#include "nechannel/grid_oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nechannel/errors.hpp"

namespace nechannel {

static_assert(std::endian::native == std::endian::little, "snapshot format assumes a little-endian host");

namespace {

constexpr int kPointsPerScale = 8;
constexpr int kMaxSolverIterations = 60;
constexpr cplx kI{0.0, 1.0};

// Tridiagonal system (1 + 2s) u_k - s (u_{k-1} + u_{k+1}) = d_k on lines
// that all start next to a zero boundary: the forward-elimination factors
// depend only on the position along the line.
struct LineSolver {
  cplx s;
  std::vector<cplx> cp;       // c'_k
  std::vector<cplx> inv_den;  // 1 / (b - a c'_{k-1})

  LineSolver(cplx s_, int len) : s(s_), cp(len + 1), inv_den(len + 1) {
    const cplx b = 1.0 + 2.0 * s;
    const cplx a = -s;
    cplx prev = 0.0;
    for (int k = 0; k <= len; ++k) {
      inv_den[k] = 1.0 / (b - a * prev);
      cp[k] = a * inv_den[k];
      prev = cp[k];
    }
  }
};

struct Stepper {
  int n;
  cplx sx, sy;  // i dt / (4 m h^2)
  LineSolver lx, ly;

  Stepper(const GridField& f, double dt)
      : n(f.n),
        sx(kI * dt / (4.0 * f.masses.m_x * f.dx() * f.dx())),
        sy(kI * dt / (4.0 * f.masses.m_y * f.dy() * f.dy())),
        lx(sx, f.n),
        ly(sy, f.n) {}

  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n + j; }

  // out = u + cx Lx u + cy Ly u, L u = 2 u_k - u_{k-1} - u_{k+1}
  void apply(const std::vector<cplx>& u, std::vector<cplx>& out, cplx cx, cplx cy) const {
    for (int i = 1; i < n - 1; ++i) {
      const cplx* up = &u[idx(i - 1, 0)];
      const cplx* uc = &u[idx(i, 0)];
      const cplx* un = &u[idx(i + 1, 0)];
      cplx* o = &out[idx(i, 0)];
      for (int j = i + 1; j < n; ++j) {
        const cplx right = j + 1 < n ? uc[j + 1] : cplx{};
        o[j] = uc[j] + cx * (2.0 * uc[j] - up[j] - un[j]) + cy * (2.0 * uc[j] - uc[j - 1] - right);
      }
    }
  }

  // Solve (1 + sx Lx) u = d along x for every y, in place.
  void solve_x(std::vector<cplx>& d) const {
    const cplx a = -lx.s;
    for (int i = 1; i < n - 1; ++i) {
      const cplx inv = lx.inv_den[i - 1];
      const cplx* prev = &d[idx(i - 1, 0)];
      cplx* cur = &d[idx(i, 0)];
      for (int j = i + 1; j < n; ++j) cur[j] = (cur[j] - a * prev[j]) * inv;
    }
    for (int i = n - 2; i >= 1; --i) {
      const cplx c = lx.cp[i - 1];
      const cplx* next = &d[idx(i + 1, 0)];
      cplx* cur = &d[idx(i, 0)];
      for (int j = i + 1; j < n; ++j) cur[j] -= c * next[j];
    }
  }

  // Solve (1 + sy Ly) u = d along y for every x, in place.
  void solve_y(std::vector<cplx>& d) const {
    const cplx a = -ly.s;
    for (int i = 1; i < n - 1; ++i) {
      cplx* line = &d[idx(i, 0)];
      cplx prev = 0.0;
      for (int j = i + 1, k = 0; j < n; ++j, ++k) {
        line[j] = (line[j] - a * prev) * ly.inv_den[k];
        prev = line[j];
      }
      cplx next = 0.0;
      for (int j = n - 1; j > i; --j) {
        line[j] -= ly.cp[j - i - 1] * next;
        next = line[j];
      }
    }
  }
};

double sum_sq(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const cplx& z : v) s += std::norm(z);
  return s;
}

std::string fmt(double v) {
  std::ostringstream o;
  o << std::setprecision(6) << v;
  return o.str();
}

}  // namespace

std::vector<bool> GridField::mask() const {
  std::vector<bool> m(static_cast<std::size_t>(n) * n, false);
  for (int i = 1; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m[static_cast<std::size_t>(i) * n + j] = true;
  return m;
}

double GridField::norm() const { return sum_sq(amp) * dx() * dy(); }

void GridField::normalize() {
  const double nn = norm();
  if (!(nn > 0.0)) throw std::domain_error("GridField::normalize: zero field");
  const double f = 1.0 / std::sqrt(nn);
  for (cplx& z : amp) z *= f;
}

double EvolveReport::energy_drift() const {
  return std::abs(energy_end - energy_start) / std::abs(energy_start);
}

void check_resolution(const ScenarioParams& params, const GridSpec& spec) {
  if (spec.n < 16) throw ConfigError("grid.n: need at least 16 points");
  if (!(spec.L > 0.0)) throw ConfigError("grid.L: must be positive");
  if (!(spec.dt > 0.0)) throw ConfigError("grid.dt: must be positive");
  const double h = spec.h();
  const auto need = [&](const char* field, double scale, const char* what) {
    if (h * kPointsPerScale > scale) {
      throw ConfigError(std::string(field) + ": grid spacing " + fmt(h) + " resolves " + what + " = " +
                        fmt(scale) + " with " + fmt(scale / h) + " points; need >= 8 (h <= " +
                        fmt(scale / kPointsPerScale) + ", grid.n >= " +
                        std::to_string(static_cast<int>(std::ceil(spec.L * kPointsPerScale / scale))) + ")");
    }
  };
  need("sigma0x", params.sigma0x, "sigma0x");
  need("sigma0y", params.sigma0y, "sigma0y");
  need("p_x0", 2.0 * std::numbers::pi / params.p_x0, "the de Broglie wavelength");
  if (params.y_M0 + 8.0 * params.sigma0y > spec.L) {
    throw ConfigError("grid.L: box edge within 8 sigma0y of the heavy packet");
  }
}

GridField init_field(const ScenarioParams& params, const GridSpec& spec, Cutoff cutoff) {
  check_resolution(params, spec);
  GridField f;
  f.n = spec.n;
  f.L = spec.L;
  f.masses = params.masses;
  f.amp.assign(static_cast<std::size_t>(f.n) * f.n, cplx{});
  const double h = spec.h();
  const double sx2 = params.sigma0x * params.sigma0x;
  const double sy2 = params.sigma0y * params.sigma0y;
  for (int i = 1; i < f.n; ++i) {
    const double x = i * h;
    const double gx = -(x - params.x_M0) * (x - params.x_M0) / (2.0 * sx2);
    const cplx phase = std::exp(kI * params.p_x0 * x);
    for (int j = i + 1; j < f.n; ++j) {
      const double y = j * h;
      const double gy = -(y - params.y_M0) * (y - params.y_M0) / (2.0 * sy2);
      const double cut = cutoff == Cutoff::sine ? std::sin(std::numbers::pi * x / y) : 1.0;
      f.at(i, j) = std::exp(gx + gy) * phase * cut;
    }
  }
  f.normalize();
  return f;
}

GridField field_from_state(const QuadraticFormState& state, const MassPair& masses, const GridSpec& spec,
                           double t) {
  GridField f;
  f.n = spec.n;
  f.L = spec.L;
  f.t = t;
  f.masses = masses;
  f.amp.assign(static_cast<std::size_t>(f.n) * f.n, cplx{});
  const double h = spec.h();
  for (int i = 1; i < f.n; ++i)
    for (int j = i + 1; j < f.n; ++j) f.at(i, j) = evaluate(state, i * h, j * h);
  f.normalize();
  return f;
}

double energy(const GridField& field) {
  const int n = field.n;
  const double kx = 1.0 / (2.0 * field.masses.m_x * field.dx() * field.dx());
  const double ky = 1.0 / (2.0 * field.masses.m_y * field.dy() * field.dy());
  double e = 0.0;
  for (int i = 1; i < n - 1; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const cplx u = field.at(i, j);
      const cplx right = j + 1 < n ? field.at(i, j + 1) : cplx{};
      const cplx hu = kx * (2.0 * u - field.at(i - 1, j) - field.at(i + 1, j)) +
                      ky * (2.0 * u - field.at(i, j - 1) - right);
      e += std::real(std::conj(u) * hu);
    }
  }
  return e / sum_sq(field.amp);
}

EvolveReport evolve(GridField& field, const GridSpec& spec, int steps) {
  if (steps < 0) throw std::domain_error("evolve: steps must be non-negative");
  if (field.n != spec.n || field.L != spec.L) throw ConfigError("grid: field does not match the grid spec");
  if (!(spec.dt > 0.0)) throw ConfigError("grid.dt: must be positive");
  const Stepper st(field, spec.dt);
  EvolveReport rep;
  rep.energy_start = energy(field);

  std::vector<cplx> rhs(field.amp.size()), u(field.amp.size()), res(field.amp.size());
  for (int s = 0; s < steps; ++s) {
    const double n0 = sum_sq(field.amp);
    st.apply(field.amp, rhs, -st.sx, -st.sy);
    const double rhs_norm = std::sqrt(sum_sq(rhs));

    u = rhs;
    st.solve_x(u);
    st.solve_y(u);
    int it = 0;
    for (;; ++it) {
      st.apply(u, res, st.sx, st.sy);
      for (std::size_t k = 0; k < res.size(); ++k) res[k] = rhs[k] - res[k];
      if (std::sqrt(sum_sq(res)) <= spec.solver_tolerance * rhs_norm) break;
      if (it == kMaxSolverIterations) {
        throw InstabilityError("evolve: linear solver stalled at step " + std::to_string(s) +
                               " (t = " + fmt(field.t) + ")");
      }
      st.solve_x(res);
      st.solve_y(res);
      for (std::size_t k = 0; k < u.size(); ++k) u[k] += res[k];
    }
    rep.max_solver_iterations = std::max(rep.max_solver_iterations, it);

    field.amp.swap(u);
    field.t += spec.dt;
    const double drift = std::abs(sum_sq(field.amp) - n0) / n0;
    rep.max_step_norm_drift = std::max(rep.max_step_norm_drift, drift);
    if (drift > spec.norm_tolerance) {
      throw InstabilityError("evolve: norm drift " + fmt(drift) + " at step " + std::to_string(s) +
                             " (t = " + fmt(field.t) + ") exceeds " + fmt(spec.norm_tolerance));
    }
    ++rep.steps;
  }
  rep.energy_end = energy(field);
  return rep;
}

double schmidt_purity(const GridField& field) {
  const Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      field.amp.data(), field.n, field.n);
  const Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  const Eigen::ArrayXd s2 = svd.singularValues().array().square();
  return s2.square().sum() / (s2.sum() * s2.sum());
}

cplx overlap(const GridField& field, const QuadraticFormState& state) {
  const double h = field.dx();
  cplx acc = 0.0;
  double ns = 0.0;
  for (int i = 1; i < field.n; ++i) {
    for (int j = i + 1; j < field.n; ++j) {
      const cplx v = evaluate(state, i * h, j * h);
      acc += std::conj(v) * field.at(i, j);
      ns += std::norm(v);
    }
  }
  return acc / std::sqrt(ns * sum_sq(field.amp));
}

cplx overlap(const GridField& a, const GridField& b) {
  if (a.n != b.n || a.L != b.L) throw std::domain_error("overlap: fields live on different grids");
  cplx acc = 0.0;
  for (std::size_t k = 0; k < a.amp.size(); ++k) acc += std::conj(a.amp[k]) * b.amp[k];
  return acc / std::sqrt(sum_sq(a.amp) * sum_sq(b.amp));
}

Marginals marginals(const GridField& field) {
  Marginals m;
  m.h = field.dx();
  m.x.assign(field.n, 0.0);
  m.y.assign(field.n, 0.0);
  for (int i = 0; i < field.n; ++i) {
    for (int j = 0; j < field.n; ++j) {
      const double p = std::norm(field.at(i, j)) * m.h;
      m.x[i] += p;
      m.y[j] += p;
    }
  }
  return m;
}

MarginalStats marginal_stats(const GridField& field) {
  const Marginals m = marginals(field);
  const auto stats = [&](const std::vector<double>& p) {
    double w = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double x = static_cast<double>(k) * m.h;
      w += p[k];
      s1 += p[k] * x;
      s2 += p[k] * x * x;
    }
    const double mean = s1 / w;
    return std::pair{mean, std::sqrt(std::max(0.0, s2 / w - mean * mean))};
  };
  const auto [mx, sx] = stats(m.x);
  const auto [my, sy] = stats(m.y);
  return {mx, my, sx, sy};
}

void write_snapshot(const std::string& path, const GridField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
  const std::int64_t dims[2] = {field.n, field.n};
  const double header[3] = {field.dx(), field.dy(), field.t};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(field.amp.data()),
            static_cast<std::streamsize>(field.amp.size() * sizeof(cplx)));
  if (!out) throw std::runtime_error("write_snapshot: write failed for " + path);
}

GridField read_snapshot(const std::string& path, const MassPair& masses) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
  std::int64_t dims[2];
  double header[3];
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || dims[0] != dims[1] || dims[0] <= 0 || header[0] != header[1]) {
    throw std::runtime_error("read_snapshot: malformed header in " + path);
  }
  GridField f;
  f.n = static_cast<int>(dims[0]);
  f.L = header[0] * f.n;
  f.t = header[2];
  f.masses = masses;
  f.amp.resize(static_cast<std::size_t>(f.n) * f.n);
  in.read(reinterpret_cast<char*>(f.amp.data()), static_cast<std::streamsize>(f.amp.size() * sizeof(cplx)));
  if (!in) throw std::runtime_error("read_snapshot: truncated payload in " + path);
  return f;
}

void write_marginals_csv(const std::string& path, const GridField& field) {
  const Marginals m = marginals(field);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_marginals_csv: cannot open " + path);
  out << "coordinate,density_x,density_y\n";
  out << std::setprecision(17);
  for (int k = 0; k < field.n; ++k) out << k * m.h << ',' << m.x[k] << ',' << m.y[k] << '\n';
}

}  // namespace nechannel
