#include "varflow/mollifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "varflow/error.hpp"
#include "varflow/parallel.hpp"

namespace varflow {

// ---------------------------------------------------------------- Mollifier

namespace {

// |S^{n-1}| int_0^k r^{n-1} exp(-r^2 / 2) (1 - r^2 / k^2)^3 dr
double unit_scale_integral(int n, double k) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, double> cache;
  const std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_pair(n, k);
  if (const auto it = cache.find(key); it != cache.end()) return it->second;
  auto radial = [n, k](double r) {
    const double p = 1.0 - r * r / (k * k);
    if (p <= 0.0) return 0.0;
    return std::pow(r, n - 1) * std::exp(-0.5 * r * r) * p * p * p;
  };
  const double sphere_area =
      2.0 * std::pow(std::numbers::pi, 0.5 * n) / boost::math::tgamma(0.5 * n);
  double integral = 0.0;
  // Split at unit radii so the adaptive rule sees the Gaussian scale.
  const int pieces = static_cast<int>(std::ceil(k));
  for (int i = 0; i < pieces; ++i) {
    const double lo = k * i / pieces;
    const double hi = k * (i + 1) / pieces;
    integral += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(radial, lo, hi, 15,
                                                                              1e-15);
  }
  return cache[key] = sphere_area * integral;
}

}  // namespace

Mollifier::Mollifier(int n, double eps, double cutoff_multiple)
    : n_(n), eps_(eps), k_(cutoff_multiple) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "ambient dimension must be positive");
  if (!(eps > 0.0 && eps < 1.0)) fail(ErrorCode::InvalidArgument, "eps must lie in (0, 1)");
  if (!(cutoff_multiple >= 3.0)) fail(ErrorCode::InvalidArgument, "cutoff multiple must be >= 3");
  radius_ = k_ * eps_;
  radius_sq_ = radius_ * radius_;
  inv_radius_sq_ = 1.0 / radius_sq_;
  a_ = -1.0 / (2.0 * eps_ * eps_);

  // Unit mass: |S^{n-1}| * int_0^R r^{n-1} g(r^2) dr = 1. The integral scales
  // as eps^n, so it is computed once per (n, k) at eps = 1 and cached.
  norm_ = 1.0 / (std::pow(eps_, n_) * unit_scale_integral(n_, k_));
}

void Mollifier::profile_second(double u, double& g, double& dg, double& d2g) const {
  if (u >= radius_sq_) {
    g = dg = d2g = 0.0;
    return;
  }
  const double b = -inv_radius_sq_;
  const double p = 1.0 + u * b;
  const double e = norm_ * std::exp(u * a_);
  g = e * p * p * p;
  dg = e * (a_ * p * p * p + 3.0 * b * p * p);
  d2g = e * (a_ * a_ * p * p * p + 6.0 * a_ * b * p * p + 6.0 * b * b * p);
}

double Mollifier::value(const Vector& z) const {
  double g = 0.0, dg = 0.0;
  return profile(z.squaredNorm(), g, dg) ? g : 0.0;
}

Vector Mollifier::gradient(const Vector& z) const {
  double g = 0.0, dg = 0.0;
  if (!profile(z.squaredNorm(), g, dg)) return Vector::Zero(z.size());
  return 2.0 * dg * z;
}

Matrix Mollifier::hessian(const Vector& z) const {
  double g, dg, d2g;
  profile_second(z.squaredNorm(), g, dg, d2g);
  return 4.0 * d2g * z * z.transpose() + 2.0 * dg * Matrix::Identity(z.size(), z.size());
}

// ----------------------------------------------------------- QuadratureGrid

QuadratureGrid QuadratureGrid::covering_ball(int n, double radius, double eps, int refinement) {
  if (refinement < 2) fail(ErrorCode::GridTooCoarse, "quadrature refinement must be >= 2");
  QuadratureGrid grid;
  grid.q_ = refinement;
  grid.h_ = eps / refinement;
  const auto m = static_cast<std::int64_t>(std::ceil(radius / grid.h_ - 1e-9));
  grid.lo_ = Vector::Constant(n, -static_cast<double>(m) * grid.h_);
  grid.counts_.assign(static_cast<std::size_t>(n), 2 * m + 1);
  return grid;
}

QuadratureGrid QuadratureGrid::covering_box(const Vector& lo, const Vector& hi, double eps,
                                            int refinement) {
  if (refinement < 2) fail(ErrorCode::GridTooCoarse, "quadrature refinement must be >= 2");
  QuadratureGrid grid;
  grid.q_ = refinement;
  grid.h_ = eps / refinement;
  grid.lo_ = lo;
  grid.counts_.resize(static_cast<std::size_t>(lo.size()));
  for (Eigen::Index a = 0; a < lo.size(); ++a) {
    const double extent = std::max(0.0, hi[a] - lo[a]);
    grid.counts_[static_cast<std::size_t>(a)] =
        std::max<std::int64_t>(2, static_cast<std::int64_t>(std::ceil(extent / grid.h_ - 1e-9)) + 1);
  }
  return grid;
}

Vector QuadratureGrid::upper() const {
  Vector hi = lo_;
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    hi[static_cast<Eigen::Index>(a)] += static_cast<double>(counts_[a] - 1) * h_;
  }
  return hi;
}

std::size_t QuadratureGrid::node_count() const {
  std::size_t total = 1;
  for (auto c : counts_) total *= static_cast<std::size_t>(c);
  return total;
}

double QuadratureGrid::covered_volume() const {
  double v = 1.0;
  for (auto c : counts_) v *= static_cast<double>(c - 1) * h_;
  return v;
}

double QuadratureGrid::total_weight() const {
  double sum = 0.0;
  const std::size_t count = node_count();
  for (std::size_t i = 0; i < count; ++i) sum += weight(i);
  return sum;
}

Vector QuadratureGrid::node(std::size_t index) const {
  Vector p(lo_.size());
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    const auto c = static_cast<std::size_t>(counts_[a]);
    p[static_cast<Eigen::Index>(a)] =
        lo_[static_cast<Eigen::Index>(a)] + static_cast<double>(index % c) * h_;
    index /= c;
  }
  return p;
}

double QuadratureGrid::weight(std::size_t index) const {
  double w = 1.0;
  for (auto count : counts_) {
    const auto c = static_cast<std::size_t>(count);
    const std::size_t i = index % c;
    index /= c;
    w *= (i == 0 || i + 1 == c) ? 0.5 * h_ : h_;
  }
  return w;
}

// -------------------------------------------------------------- SpatialHash

namespace {
constexpr int kMaxHashedDim = 3;
constexpr std::int64_t kCellBias = std::int64_t{1} << 20;
}  // namespace

SpatialHash::SpatialHash(const std::vector<double>& positions, int n, double cell_size)
    : n_(n), cell_(cell_size), count_(positions.size() / static_cast<std::size_t>(n)) {
  std::array<std::int64_t, kMaxHashedDim> cell{};
  for (std::size_t i = 0; i < count_; ++i) {
    std::uint64_t k = 0;
    if (n_ <= kMaxHashedDim) {
      for (int a = 0; a < n_; ++a) {
        cell[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(
            std::floor(positions[i * static_cast<std::size_t>(n_) + static_cast<std::size_t>(a)] /
                       cell_));
      }
      k = key(cell.data());
    }
    cells_[k].push_back(static_cast<int>(i));
  }
}

std::uint64_t SpatialHash::key(const std::int64_t* cell) const {
  std::uint64_t k = 0;
  for (int a = 0; a < n_; ++a) {
    const auto biased = static_cast<std::uint64_t>(
        std::clamp<std::int64_t>(cell[a] + kCellBias, 0, 2 * kCellBias - 1));
    k = (k << 21) | biased;
  }
  return k;
}

void SpatialHash::candidates(const double* p, double r, std::vector<int>& out) const {
  out.clear();
  if (n_ > kMaxHashedDim) {
    // Higher dimensions fall back to a single bucket.
    auto it = cells_.find(0);
    if (it != cells_.end()) out = it->second;
    return;
  }
  std::array<std::int64_t, kMaxHashedDim> lo{}, hi{}, cur{};
  for (int a = 0; a < n_; ++a) {
    lo[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(std::floor((p[a] - r) / cell_));
    hi[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(std::floor((p[a] + r) / cell_));
    cur[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)];
  }
  while (true) {
    auto it = cells_.find(key(cur.data()));
    if (it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    int a = 0;
    for (; a < n_; ++a) {
      const auto s = static_cast<std::size_t>(a);
      if (++cur[s] <= hi[s]) break;
      cur[s] = lo[s];
    }
    if (a == n_) break;
  }
}

// -------------------------------------------------------------- KernelField

KernelField::KernelField(const DiscreteVarifold& varifold, const Mollifier& kernel)
    : kernel_(kernel), n_(varifold.ambient_dim()) {
  if (!varifold.empty() && kernel.ambient_dim() != n_) {
    fail(ErrorCode::InvalidArgument, "kernel and varifold dimensions differ");
  }
  n_ = kernel.ambient_dim();
  const auto n = static_cast<std::size_t>(n_);
  pos_.reserve(varifold.size() * n);
  mass_.reserve(varifold.size());
  proj_.reserve(varifold.size() * n * n);
  for (const auto& atom : varifold.atoms()) {
    for (std::size_t a = 0; a < n; ++a) pos_.push_back(atom.position[static_cast<Eigen::Index>(a)]);
    mass_.push_back(atom.mass);
    const Matrix& p = atom.plane.projection();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        proj_.push_back(p(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
  }
  hash_ = SpatialHash(pos_, n_, kernel_.support_radius());
}

void KernelField::smoothed_at(const double* y, const std::vector<int>& cands, double& rho,
                              double* fv) const {
  const auto n = static_cast<std::size_t>(n_);
  rho = 0.0;
  std::fill(fv, fv + n, 0.0);
  std::array<double, 8> r{};
  std::vector<double> rr;
  double* rv = r.data();
  if (n > r.size()) {
    rr.resize(n);
    rv = rr.data();
  }
  for (int j : cands) {
    const double* xj = &pos_[static_cast<std::size_t>(j) * n];
    double u = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      rv[a] = y[a] - xj[a];
      u += rv[a] * rv[a];
    }
    double g, dg;
    if (!kernel_.profile(u, g, dg)) continue;
    const double m = mass_[static_cast<std::size_t>(j)];
    rho += m * g;
    const double s = 2.0 * dg * m;
    const double* pj = &proj_[static_cast<std::size_t>(j) * n * n];
    for (std::size_t a = 0; a < n; ++a) {
      double t = 0.0;
      for (std::size_t b = 0; b < n; ++b) t += pj[a * n + b] * rv[b];
      fv[a] -= s * t;
    }
  }
}

double KernelField::smoothed_mass(const Vector& y) const {
  std::vector<int> cands;
  hash_.candidates(y.data(), kernel_.support_radius(), cands);
  double rho;
  Vector fv(n_);
  smoothed_at(y.data(), cands, rho, fv.data());
  return rho;
}

Vector KernelField::smoothed_first_variation(const Vector& y) const {
  std::vector<int> cands;
  hash_.candidates(y.data(), kernel_.support_radius(), cands);
  double rho;
  Vector fv(n_);
  smoothed_at(y.data(), cands, rho, fv.data());
  return fv;
}

Vector KernelField::h_tilde(const Vector& y) const {
  std::vector<int> cands;
  hash_.candidates(y.data(), kernel_.support_radius(), cands);
  double rho;
  Vector fv(n_);
  smoothed_at(y.data(), cands, rho, fv.data());
  return -fv / (rho + kernel_.eps());
}

KernelField::Stencil KernelField::make_stencil(const QuadratureGrid& local) const {
  if (local.refinement() < 2) fail(ErrorCode::GridTooCoarse, "quadrature refinement must be >= 2");
  if (local.ambient_dim() != n_) fail(ErrorCode::InvalidArgument, "grid dimension mismatch");
  if (local.half_width() + 1e-12 < kernel_.support_radius()) {
    fail(ErrorCode::InvalidArgument, "local grid does not cover the kernel support");
  }
  Stencil st;
  st.n = n_;
  const std::size_t count = local.node_count();
  for (std::size_t i = 0; i < count; ++i) {
    const Vector o = local.node(i);
    double g, dg;
    if (!kernel_.profile(o.squaredNorm(), g, dg)) continue;
    const double w = local.weight(i);
    for (Eigen::Index a = 0; a < n_; ++a) {
      st.offsets.push_back(o[a]);
      // grad Phi(x - y) with y = x + o is grad Phi(-o) = -2 g'(|o|^2) o
      st.wgrad.push_back(-2.0 * dg * o[a] * w);
    }
    st.wphi.push_back(w * g);
  }
  return st;
}

template <int N>
KernelField::Curvature KernelField::curvature_impl(const Vector& x, const Stencil& st) const {
  const std::size_t n = N > 0 ? static_cast<std::size_t>(N) : static_cast<std::size_t>(n_);
  const double radius = kernel_.support_radius();
  const double eps = kernel_.eps();

  std::vector<int> raw;
  hash_.candidates(x.data(), 2.0 * radius, raw);
  // Candidate atoms relative to x, restricted to the 2R ball the stencil can reach.
  std::vector<double> rel;
  std::vector<double> mass;
  std::vector<const double*> proj;
  rel.reserve(raw.size() * n);
  for (int j : raw) {
    const double* xj = &pos_[static_cast<std::size_t>(j) * n];
    double u = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const double z = xj[a] - x[static_cast<Eigen::Index>(a)];
      u += z * z;
    }
    if (u >= 4.0 * radius * radius) continue;
    for (std::size_t a = 0; a < n; ++a) rel.push_back(xj[a] - x[static_cast<Eigen::Index>(a)]);
    mass.push_back(mass_[static_cast<std::size_t>(j)]);
    proj.push_back(&proj_[static_cast<std::size_t>(j) * n * n]);
  }

  Curvature out{Vector::Zero(static_cast<Eigen::Index>(n)),
                Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
  if (mass.empty()) return out;

  std::vector<double> h(n, 0.0), grad(n * n, 0.0), fv(n), r(n);
  const std::size_t nodes = st.wphi.size();
  const std::size_t cand_count = mass.size();
  for (std::size_t k = 0; k < nodes; ++k) {
    const double* o = &st.offsets[k * n];
    double rho = 0.0;
    std::fill(fv.begin(), fv.end(), 0.0);
    bool touched = false;
    for (std::size_t j = 0; j < cand_count; ++j) {
      const double* z = &rel[j * n];
      double u = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        r[a] = o[a] - z[a];
        u += r[a] * r[a];
      }
      double g, dg;
      if (!kernel_.profile(u, g, dg)) continue;
      touched = true;
      rho += mass[j] * g;
      const double s = 2.0 * dg * mass[j];
      const double* p = proj[j];
      for (std::size_t a = 0; a < n; ++a) {
        double t = 0.0;
        for (std::size_t b = 0; b < n; ++b) t += p[a * n + b] * r[b];
        fv[a] -= s * t;
      }
    }
    if (!touched) continue;
    const double scale = -1.0 / (rho + eps);
    const double* wg = &st.wgrad[k * n];
    for (std::size_t a = 0; a < n; ++a) {
      const double ht = fv[a] * scale;
      h[a] += st.wphi[k] * ht;
      for (std::size_t b = 0; b < n; ++b) grad[a * n + b] += ht * wg[b];
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    out.h[static_cast<Eigen::Index>(a)] = h[a];
    for (std::size_t b = 0; b < n; ++b)
      out.grad(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = grad[a * n + b];
  }
  return out;
}

KernelField::Curvature KernelField::curvature(const Vector& x, const Stencil& stencil) const {
  if (stencil.n != n_ || x.size() != n_) fail(ErrorCode::InvalidArgument, "dimension mismatch");
  switch (n_) {
    case 2: return curvature_impl<2>(x, stencil);
    case 3: return curvature_impl<3>(x, stencil);
    default: return curvature_impl<0>(x, stencil);
  }
}

KernelField::Curvature KernelField::curvature(const Vector& x, const QuadratureGrid& local) const {
  return curvature(x, make_stencil(local));
}

template <int N>
double KernelField::dissipation_impl(const QuadratureGrid& domain) const {
  const std::size_t n = N > 0 ? static_cast<std::size_t>(N) : static_cast<std::size_t>(n_);
  const double radius = kernel_.support_radius();
  const double eps = kernel_.eps();
  const double h = domain.spacing();
  const Vector lo = domain.lower();
  std::vector<std::int64_t> counts(n);
  {
    const Vector hi = domain.upper();
    for (std::size_t a = 0; a < n; ++a) {
      counts[a] = static_cast<std::int64_t>(
                      std::llround((hi[static_cast<Eigen::Index>(a)] - lo[static_cast<Eigen::Index>(a)]) / h)) +
                  1;
    }
  }
  // Tiles of the lattice share one candidate query; tile sums are combined
  // in tile order so the result does not depend on the thread count.
  const auto tile = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(radius / h)));
  std::vector<std::int64_t> tiles(n);
  std::size_t tile_count = 1;
  for (std::size_t a = 0; a < n; ++a) {
    tiles[a] = (counts[a] + tile - 1) / tile;
    tile_count *= static_cast<std::size_t>(tiles[a]);
  }
  std::vector<double> partial(tile_count, 0.0);
  parallel_for(tile_count, [&](std::size_t t) {
    std::vector<std::int64_t> start(n), len(n), idx(n);
    std::vector<double> center(n), y(n), fv(n);
    std::size_t rest = t;
    double half = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const auto ta = static_cast<std::int64_t>(rest % static_cast<std::size_t>(tiles[a]));
      rest /= static_cast<std::size_t>(tiles[a]);
      start[a] = ta * tile;
      len[a] = std::min(tile, counts[a] - start[a]);
      center[a] = lo[static_cast<Eigen::Index>(a)] +
                  (static_cast<double>(start[a]) + 0.5 * static_cast<double>(len[a] - 1)) * h;
      half = std::max(half, 0.5 * static_cast<double>(len[a] - 1) * h);
    }
    std::vector<int> cands;
    hash_.candidates(center.data(), half + radius, cands);
    if (cands.empty()) return;
    double sum = 0.0;
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      double w = 1.0;
      for (std::size_t a = 0; a < n; ++a) {
        const std::int64_t i = start[a] + idx[a];
        y[a] = lo[static_cast<Eigen::Index>(a)] + static_cast<double>(i) * h;
        w *= (i == 0 || i + 1 == counts[a]) ? 0.5 * h : h;
      }
      double rho;
      smoothed_at(y.data(), cands, rho, fv.data());
      double f2 = 0.0;
      for (std::size_t a = 0; a < n; ++a) f2 += fv[a] * fv[a];
      sum += w * f2 / (rho + eps);
      std::size_t a = 0;
      for (; a < n; ++a) {
        if (++idx[a] < len[a]) break;
        idx[a] = 0;
      }
      if (a == n) break;
    }
    partial[t] = sum;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double KernelField::dissipation(const QuadratureGrid& domain) const {
  if (domain.refinement() < 2) fail(ErrorCode::GridTooCoarse, "quadrature refinement must be >= 2");
  if (domain.ambient_dim() != n_) fail(ErrorCode::InvalidArgument, "grid dimension mismatch");
  if (mass_.empty()) return 0.0;
  switch (n_) {
    case 2: return dissipation_impl<2>(domain);
    case 3: return dissipation_impl<3>(domain);
    default: return dissipation_impl<0>(domain);
  }
}

KernelField::Lattice KernelField::lattice(const QuadratureGrid& domain) const {
  if (domain.refinement() < 2) fail(ErrorCode::GridTooCoarse, "quadrature refinement must be >= 2");
  if (domain.ambient_dim() != n_) fail(ErrorCode::InvalidArgument, "grid dimension mismatch");
  const auto n = static_cast<std::size_t>(n_);
  const double radius = kernel_.support_radius();
  const double eps = kernel_.eps();
  Lattice lat;
  lat.lo = domain.lower();
  lat.h = domain.spacing();
  const double h = lat.h;
  lat.counts.resize(n);
  const Vector hi = domain.upper();
  std::size_t total = 1;
  for (std::size_t a = 0; a < n; ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    lat.counts[a] = static_cast<std::int64_t>(std::llround((hi[ia] - lat.lo[ia]) / h)) + 1;
    total *= static_cast<std::size_t>(lat.counts[a]);
  }
  lat.tilde.assign(total * n, 0.0);
  if (mass_.empty()) return lat;
  std::vector<double> density(total, 0.0);

  std::vector<std::size_t> stride(n, 1);
  for (std::size_t a = 1; a < n; ++a) stride[a] = stride[a - 1] * static_cast<std::size_t>(lat.counts[a - 1]);
  const auto tile = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(radius / h)));
  std::vector<std::int64_t> tiles(n);
  std::size_t tile_count = 1;
  for (std::size_t a = 0; a < n; ++a) {
    tiles[a] = (lat.counts[a] + tile - 1) / tile;
    tile_count *= static_cast<std::size_t>(tiles[a]);
  }
  // Tiles own disjoint node sets, so the fill is independent of the split.
  parallel_for(tile_count, [&](std::size_t t) {
    std::vector<std::int64_t> start(n), len(n), idx(n, 0);
    std::vector<double> center(n), y(n), fv(n);
    std::size_t rest = t;
    double half = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const auto ta = static_cast<std::int64_t>(rest % static_cast<std::size_t>(tiles[a]));
      rest /= static_cast<std::size_t>(tiles[a]);
      start[a] = ta * tile;
      len[a] = std::min(tile, lat.counts[a] - start[a]);
      center[a] = lat.lo[static_cast<Eigen::Index>(a)] +
                  (static_cast<double>(start[a]) + 0.5 * static_cast<double>(len[a] - 1)) * h;
      half = std::max(half, 0.5 * static_cast<double>(len[a] - 1) * h);
    }
    std::vector<int> cands;
    hash_.candidates(center.data(), half + radius, cands);
    if (cands.empty()) return;
    while (true) {
      std::size_t node = 0;
      for (std::size_t a = 0; a < n; ++a) {
        const std::int64_t i = start[a] + idx[a];
        y[a] = lat.lo[static_cast<Eigen::Index>(a)] + static_cast<double>(i) * h;
        node += static_cast<std::size_t>(i) * stride[a];
      }
      double rho;
      smoothed_at(y.data(), cands, rho, fv.data());
      const double inv = 1.0 / (rho + eps);
      double f2 = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        lat.tilde[node * n + a] = -fv[a] * inv;
        f2 += fv[a] * fv[a];
      }
      density[node] = f2 * inv;
      std::size_t a = 0;
      for (; a < n; ++a) {
        if (++idx[a] < len[a]) break;
        idx[a] = 0;
      }
      if (a == n) break;
    }
  });
  std::vector<std::int64_t> idx(n, 0);
  for (std::size_t node = 0; node < total; ++node) {
    double w = 1.0;
    for (std::size_t a = 0; a < n; ++a) {
      w *= (idx[a] == 0 || idx[a] + 1 == lat.counts[a]) ? 0.5 * h : h;
    }
    lat.dissipation += w * density[node];
    for (std::size_t a = 0; a < n; ++a) {
      if (++idx[a] < lat.counts[a]) break;
      idx[a] = 0;
    }
  }
  return lat;
}

KernelField::Curvature KernelField::curvature(const Vector& x, const Lattice& lat) const {
  const auto n = static_cast<std::size_t>(n_);
  if (x.size() != n_ || lat.counts.size() != n) fail(ErrorCode::InvalidArgument, "lattice dimension mismatch");
  Curvature out{Vector::Zero(n_), Matrix::Zero(n_, n_)};
  const double radius = kernel_.support_radius();
  const double h = lat.h;
  std::vector<std::int64_t> first(n), last(n), idx(n);
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t a = 1; a < n; ++a) stride[a] = stride[a - 1] * static_cast<std::size_t>(lat.counts[a - 1]);
  for (std::size_t a = 0; a < n; ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    first[a] = std::max<std::int64_t>(
        0, static_cast<std::int64_t>(std::ceil((x[ia] - radius - lat.lo[ia]) / h)));
    last[a] = std::min<std::int64_t>(
        lat.counts[a] - 1, static_cast<std::int64_t>(std::floor((x[ia] + radius - lat.lo[ia]) / h)));
    if (first[a] > last[a]) return out;
    idx[a] = first[a];
  }
  const double w = std::pow(h, n_);
  std::vector<double> z(n);
  while (true) {
    std::size_t node = 0;
    double u = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const auto ia = static_cast<Eigen::Index>(a);
      z[a] = x[ia] - (lat.lo[ia] + static_cast<double>(idx[a]) * h);
      u += z[a] * z[a];
      node += static_cast<std::size_t>(idx[a]) * stride[a];
    }
    double g, dg;
    if (kernel_.profile(u, g, dg)) {
      const double* ht = &lat.tilde[node * n];
      const double s = 2.0 * dg * w;
      for (std::size_t a = 0; a < n; ++a) {
        const auto ia = static_cast<Eigen::Index>(a);
        out.h[ia] += w * g * ht[a];
        for (std::size_t b = 0; b < n; ++b) out.grad(ia, static_cast<Eigen::Index>(b)) += s * ht[a] * z[b];
      }
    }
    std::size_t a = 0;
    for (; a < n; ++a) {
      if (++idx[a] <= last[a]) break;
      idx[a] = first[a];
    }
    if (a == n) break;
  }
  return out;
}

QuadratureGrid KernelField::domain_grid(int refinement) const {
  Vector lo = Vector::Zero(n_);
  Vector hi = Vector::Zero(n_);
  if (!mass_.empty()) {
    lo = Vector::Constant(n_, std::numeric_limits<double>::infinity());
    hi = -lo;
    const auto n = static_cast<std::size_t>(n_);
    for (std::size_t i = 0; i < mass_.size(); ++i) {
      for (std::size_t a = 0; a < n; ++a) {
        const auto ia = static_cast<Eigen::Index>(a);
        lo[ia] = std::min(lo[ia], pos_[i * n + a]);
        hi[ia] = std::max(hi[ia], pos_[i * n + a]);
      }
    }
  }
  const double r = kernel_.support_radius();
  return QuadratureGrid::covering_box(lo.array() - r, hi.array() + r, kernel_.eps(), refinement);
}

// ------------------------------------------------------------ free functions

double smoothed_mass(const DiscreteVarifold& varifold, const Mollifier& kernel, const Vector& y) {
  return KernelField(varifold, kernel).smoothed_mass(y);
}

Vector smoothed_first_variation(const DiscreteVarifold& varifold, const Mollifier& kernel,
                                const Vector& y) {
  return KernelField(varifold, kernel).smoothed_first_variation(y);
}

Vector h_tilde(const DiscreteVarifold& varifold, const Mollifier& kernel, const Vector& y) {
  return KernelField(varifold, kernel).h_tilde(y);
}

Vector h_eps(const DiscreteVarifold& varifold, const Mollifier& kernel,
             const QuadratureGrid& grid, const Vector& x) {
  return KernelField(varifold, kernel).curvature(x, grid).h;
}

Matrix grad_h_eps(const DiscreteVarifold& varifold, const Mollifier& kernel,
                  const QuadratureGrid& grid, const Vector& x) {
  return KernelField(varifold, kernel).curvature(x, grid).grad;
}

double dissipation(const DiscreteVarifold& varifold, const Mollifier& kernel,
                   const QuadratureGrid& domain) {
  return KernelField(varifold, kernel).dissipation(domain);
}

QuadratureGrid local_grid(const Mollifier& kernel, int refinement) {
  return QuadratureGrid::covering_ball(kernel.ambient_dim(), kernel.support_radius(), kernel.eps(),
                                       refinement);
}

}  // namespace varflow
