#pragma once

#include <string>
#include <utility>
#include <vector>

namespace varflow {

/// Outcome of one numerical certificate: a measured quantity against a bound.
struct Verdict {
  std::string name;
  std::string anchor;  // short description of the inequality being checked
  double bound = 0.0;
  double measured = 0.0;
  bool pass = false;
  std::vector<std::pair<std::string, double>> details;
  std::string note;
};

}  // namespace varflow
