#include "varflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "varflow/error.hpp"

namespace varflow {

double DiscreteMeasure::total() const {
  double sum = 0.0;
  for (double w : weights) sum += w;
  return sum;
}

void DiscreteMeasure::add(Vector point, double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    fail(ErrorCode::NonpositiveWeight, "measure weights must be finite and >= 0");
  }
  if (!points.empty() && point.size() != points.front().size()) {
    fail(ErrorCode::InvalidArgument, "measure points of mixed dimension");
  }
  points.push_back(std::move(point));
  weights.push_back(weight);
}

DiscreteMeasure mass_measure(const DiscreteVarifold& varifold) {
  DiscreteMeasure m;
  m.points.reserve(varifold.size());
  m.weights.reserve(varifold.size());
  for (const auto& a : varifold.atoms()) m.add(a.position, a.mass);
  return m;
}

namespace {

struct LexLess {
  bool operator()(const std::vector<double>& a, const std::vector<double>& b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
};

void check_weights(const DiscreteMeasure& m) {
  if (m.points.size() != m.weights.size()) {
    fail(ErrorCode::InvalidArgument, "measure has mismatched points and weights");
  }
  for (double w : m.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      fail(ErrorCode::NonpositiveWeight, "measure weights must be finite and >= 0");
    }
  }
}

// Successive shortest paths with node potentials on the complete graph over
// the support plus a ground node (index n). Arc u -> v costs cost[u * V + v]
// and has unlimited capacity; reverse residual arcs carry the current flow.
class Transshipment {
 public:
  Transshipment(std::vector<double> cost, std::vector<double> supply)
      : v_(supply.size()), cost_(std::move(cost)), supply_(std::move(supply)),
        flow_(v_ * v_, 0.0), potential_(v_, 0.0) {
    double scale = 0.0;
    for (double s : supply_) scale += std::abs(s);
    tol_ = 1e-15 * std::max(scale, 1e-300);
  }

  void solve() {
    std::vector<double> dist(v_);
    std::vector<int> parent(v_);
    std::vector<char> via_reverse(v_), done(v_);
    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t max_rounds = 4 * v_ * v_ + 16;
    while (has_supply()) {
      if (++augmentations_ > max_rounds) fail(ErrorCode::SolverFailure, "augmentation limit reached");
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(parent.begin(), parent.end(), -1);
      std::fill(done.begin(), done.end(), 0);
      for (std::size_t u = 0; u < v_; ++u) {
        if (supply_[u] > tol_) dist[u] = 0.0;
      }
      std::size_t sink = v_;
      for (;;) {
        std::size_t u = v_;
        double best = inf;
        for (std::size_t k = 0; k < v_; ++k) {
          if (!done[k] && dist[k] < best) {
            best = dist[k];
            u = k;
          }
        }
        if (u == v_) break;
        done[u] = 1;
        if (supply_[u] < -tol_) {
          sink = u;
          break;
        }
        const double pu = potential_[u];
        const double* crow = &cost_[u * v_];
        for (std::size_t w = 0; w < v_; ++w) {
          if (done[w]) continue;
          double rc = crow[w] + pu - potential_[w];
          bool reverse = false;
          if (flow_[w * v_ + u] > tol_) {
            const double rr = -cost_[w * v_ + u] + pu - potential_[w];
            if (rr < rc) {
              rc = rr;
              reverse = true;
            }
          }
          const double cand = best + std::max(rc, 0.0);
          if (cand < dist[w]) {
            dist[w] = cand;
            parent[w] = static_cast<int>(u);
            via_reverse[w] = reverse;
          }
        }
      }
      if (sink == v_) fail(ErrorCode::SolverFailure, "no augmenting path");
      const double dt = dist[sink];
      for (std::size_t k = 0; k < v_; ++k) potential_[k] += std::min(dist[k], dt);

      double amount = -supply_[sink];
      std::size_t w = sink;
      while (parent[w] >= 0) {
        const auto u = static_cast<std::size_t>(parent[w]);
        if (via_reverse[w]) amount = std::min(amount, flow_[w * v_ + u]);
        w = u;
      }
      amount = std::min(amount, supply_[w]);
      supply_[w] -= amount;
      supply_[sink] += amount;
      w = sink;
      while (parent[w] >= 0) {
        const auto u = static_cast<std::size_t>(parent[w]);
        if (via_reverse[w]) {
          flow_[w * v_ + u] -= amount;
        } else {
          flow_[u * v_ + w] += amount;
        }
        w = u;
      }
    }
  }

  double primal_cost() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < flow_.size(); ++i) sum += flow_[i] * cost_[i];
    return sum;
  }

  const std::vector<double>& potential() const { return potential_; }
  std::size_t augmentations() const { return augmentations_; }

 private:
  bool has_supply() const {
    for (double s : supply_) {
      if (s > tol_) return true;
    }
    return false;
  }

  std::size_t v_;
  std::vector<double> cost_;
  std::vector<double> supply_;
  std::vector<double> flow_;
  std::vector<double> potential_;
  double tol_ = 0.0;
  std::size_t augmentations_ = 0;
};

}  // namespace

BLResult bounded_lipschitz(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const BLOptions& options) {
  check_weights(mu);
  check_weights(nu);
  if (mu.ambient_dim() && nu.ambient_dim() && mu.ambient_dim() != nu.ambient_dim()) {
    fail(ErrorCode::InvalidArgument, "measures live in different dimensions");
  }

  // b = nu - mu on the merged support, points ordered lexicographically.
  std::map<std::vector<double>, double, LexLess> merged;
  for (std::size_t i = 0; i < mu.points.size(); ++i) {
    const auto& p = mu.points[i];
    merged[std::vector<double>(p.data(), p.data() + p.size())] -= mu.weights[i];
  }
  for (std::size_t i = 0; i < nu.points.size(); ++i) {
    const auto& p = nu.points[i];
    merged[std::vector<double>(p.data(), p.data() + p.size())] += nu.weights[i];
  }
  if (merged.size() > options.support_cap) {
    std::ostringstream msg;
    msg << "merged support " << merged.size() << " exceeds cap " << options.support_cap;
    fail(ErrorCode::SupportTooLarge, msg.str());
  }

  BLResult result;
  const std::size_t n = merged.size();
  std::vector<double> b;
  b.reserve(n);
  result.support.reserve(n);
  for (const auto& [key, value] : merged) {
    result.support.push_back(Eigen::Map<const Vector>(key.data(), static_cast<Eigen::Index>(key.size())));
    b.push_back(value);
  }
  result.test_values.assign(n, 0.0);
  if (n == 0) return result;

  const std::size_t v = n + 1;
  std::vector<double> cost(v * v, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = k + 1; l < n; ++l) {
      const double c = (result.support[k] - result.support[l]).norm();
      cost[k * v + l] = c;
      cost[l * v + k] = c;
    }
    cost[k * v + n] = 1.0;
    cost[n * v + k] = 1.0;
  }
  std::vector<double> supply(v, 0.0);
  double ground = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    supply[k] = -b[k];
    ground += b[k];
  }
  supply[n] = ground;

  Transshipment solver(std::move(cost), std::move(supply));
  solver.solve();
  const auto& pot = solver.potential();
  double dual = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    result.test_values[k] = pot[k] - pot[n];
    dual += b[k] * result.test_values[k];
  }
  const double primal = solver.primal_cost();
  result.distance = std::max(primal, 0.0);
  result.dual_gap = std::abs(primal - dual);
  result.augmentations = solver.augmentations();

  // Independent feasibility check of the recovered test function.
  const double slack = kTolerances.lipschitz_slack;
  for (std::size_t k = 0; k < n; ++k) {
    const double phi = result.test_values[k];
    if (std::abs(phi) > 1.0 + slack) {
      fail(ErrorCode::SolverFailure, "test value outside [-1, 1]");
    }
    for (std::size_t l = k + 1; l < n; ++l) {
      const double lip = (result.support[k] - result.support[l]).norm();
      if (std::abs(phi - result.test_values[l]) > lip + slack) {
        fail(ErrorCode::SolverFailure, "test values violate the Lipschitz constraint");
      }
    }
  }
  const double scale = std::max(1.0, mu.total() + nu.total());
  if (result.dual_gap > 1e-9 * scale) {
    result.status = "gap";
    fail(ErrorCode::SolverFailure, "primal and dual objectives disagree");
  }
  return result;
}

StabilityReport stability_certificate(const FlowTrace& a, const FlowTrace& b, double t,
                                      std::optional<double> c6, const BLOptions& options) {
  StabilityReport r;
  r.time = t;
  r.eps = a.config.eps;
  r.delta = std::max(a.max_gap(), b.max_gap());
  r.ambient_dim = a.ambient_dim();
  r.initial_distance = bounded_lipschitz(mass_measure(a.snapshots.front().varifold),
                                         mass_measure(b.snapshots.front().varifold), options)
                           .distance;
  r.measured = bounded_lipschitz(mass_measure(sample(a, t, FlowMode::Piecewise)),
                                 mass_measure(sample(b, t, FlowMode::Piecewise)), options)
                   .distance;
  if (c6) {
    r.c6 = c6;
    const double n = r.ambient_dim;
    const double growth = std::exp(t * *c6 * std::pow(r.eps, -n - 7.0));
    const double bound =
        r.initial_distance * growth + *c6 * t * r.delta * std::pow(r.eps, -n - 11.0) * growth;
    r.bound = bound;
    r.pass = r.measured <= bound + kTolerances.lipschitz_slack;
  }
  return r;
}

}  // namespace varflow
