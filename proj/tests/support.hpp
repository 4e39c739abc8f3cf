#pragma once

// Circuit parameters shared by the test suites.

#include "fluxsim/circuit.hpp"
#include "fluxsim/spectrum.hpp"

#include <vector>

namespace fluxsim::testing {

inline FluxoniumSpec table_fluxonium(int k) {
  static const double p[5][3] = {
      {1.41, 0.80, 6.27}, {1.30, 0.59, 5.71}, {1.33, 0.60, 5.40}, {1.35, 0.63, 5.6}, {1.35, 0.70, 5.6}};
  return {p[k][0], p[k][1], p[k][2], std::numbers::pi, 4};
}

inline TransmonCouplerSpec table_coupler(double bias_over_2pi = 0.0) { return {0.32, 55.0, two_pi * bias_over_2pi, 3}; }

/// Q0 with the first `biases.size()` neighbours at the given coupler biases.
inline StarSystem table_star(const std::vector<double>& biases, double j_c = 0.5, double j_0j = 0.125) {
  StarSystem s;
  s.central = table_fluxonium(0);
  for (std::size_t j = 0; j < biases.size(); ++j) {
    s.neighbors.push_back(table_fluxonium(static_cast<int>(j) + 1));
    s.couplers.push_back(table_coupler(biases[j]));
    s.j_c0.push_back(j_c);
    s.j_cj.push_back(j_c);
    s.j_0j.push_back(j_0j);
  }
  return s;
}

inline const std::vector<double>& gate_biases(int n) {
  static const std::vector<std::vector<double>> b = {
      {0.413}, {0.413, 0.420}, {0.403, 0.420, 0.410}, {0.395, 0.419, 0.413, 0.411}};
  return b.at(static_cast<std::size_t>(n - 1));
}

}  // namespace fluxsim::testing
