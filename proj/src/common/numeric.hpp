#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace phaseseg {

inline double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf stays -inf
  return m + std::log((v.array() - m).exp().sum());
}

// Argmax with ties resolved to the lowest index.
inline int argmax_low(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace phaseseg
