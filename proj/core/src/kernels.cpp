#include "kernels.hpp"

#include <Eigen/Core>

namespace modgrok::detail {

void tanh_inplace(std::span<double> values) {
  Eigen::Map<Eigen::ArrayXd> x(values.data(), static_cast<Eigen::Index>(values.size()));
  const Eigen::ArrayXd e = (-2.0 * x.abs()).exp();
  x = ((1.0 - e) / (1.0 + e)) * x.sign();
}

}  // namespace modgrok::detail
