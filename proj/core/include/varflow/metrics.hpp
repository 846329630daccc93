#pragma once

// Bounded-Lipschitz distance between finitely supported measures:
//
//   Delta(mu, nu) = sup { int phi d(nu - mu) : |phi| <= 1, Lip(phi) <= 1 }.
//
// On a finite support any feasible vector of values extends to a feasible
// function (McShane extension clipped to [-1, 1]), so the sup is a finite LP.
// Its dual is an uncapacitated min-cost transshipment on the support plus a
// ground node reached at cost 1, solved here by successive shortest paths.

#include <optional>
#include <string>
#include <vector>

#include "varflow/flow.hpp"
#include "varflow/varifold.hpp"

namespace varflow {

struct DiscreteMeasure {
  std::vector<Vector> points;
  std::vector<double> weights;

  int ambient_dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  double total() const;
  void add(Vector point, double weight);
};

/// Mass measure ||V|| as a discrete measure.
DiscreteMeasure mass_measure(const DiscreteVarifold& varifold);

struct BLResult {
  double distance = 0.0;
  std::vector<Vector> support;      // merged union support
  std::vector<double> test_values;  // optimal phi on `support`
  double dual_gap = 0.0;            // |primal cost - dual objective|
  std::size_t augmentations = 0;
  std::string status = "optimal";
};

struct BLOptions {
  std::size_t support_cap = 2000;
};

/// Throws SupportTooLarge when the merged support exceeds the cap, and
/// SolverFailure when the recovered test values violate the constraints.
BLResult bounded_lipschitz(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const BLOptions& options = {});

struct StabilityReport {
  double time = 0.0;
  double eps = 0.0;
  double delta = 0.0;  // max step of the two traces
  int ambient_dim = 0;
  double initial_distance = 0.0;
  double measured = 0.0;
  std::optional<double> c6;
  std::optional<double> bound;
  std::optional<bool> pass;
};

/// Compares Delta(||V_A(t)||, ||V_B(t)||) with
///   Delta_0 exp(t c6 eps^{-n-7}) + c6 t delta eps^{-n-11} exp(t c6 eps^{-n-7}).
/// The verdict is only filled in when c6 is supplied.
StabilityReport stability_certificate(const FlowTrace& a, const FlowTrace& b, double t,
                                      std::optional<double> c6 = std::nullopt,
                                      const BLOptions& options = {});

}  // namespace varflow
