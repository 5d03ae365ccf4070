#pragma once

#include <Eigen/Dense>

#include "permaseq/params.hpp"

namespace testutil {

// lambda = (0.5, 0.4), f = (0.9, 0.92), g = (0.88, 0.9) at j = 2, 3.
inline permaseq::ParamSeq running() {
  return permaseq::ParamSeq::from_sequences({0.5, 0.4}, {0.9, 0.92}, {0.88, 0.9});
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testutil
