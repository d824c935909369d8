#include "ack/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ack/nn/ops.hpp"
#include "ack/random.hpp"

namespace ack::nn {

GradCheckReport check_gradients(const std::function<Tensor()>& op,
                                const std::vector<std::pair<std::string, Tensor>>& leaves, double eps,
                                double abs_floor, std::uint64_t seed) {
  Matrix projection;
  auto scalar = [&]() {
    Tensor out = op();
    if (projection.size() == 0) {
      Rng rng(seed);
      projection.resize(out.rows(), out.cols());
      for (Index i = 0; i < projection.size(); ++i) projection.data()[i] = rng.uniform(-1.0, 1.0);
      if (out.rows() == 1 && out.cols() == 1) projection(0, 0) = 1.0;
    }
    return weighted_sum(out, projection);
  };

  for (const auto& [_, leaf] : leaves) leaf.zero_grad();
  scalar().backward();
  std::vector<Matrix> analytic;
  analytic.reserve(leaves.size());
  for (const auto& [_, leaf] : leaves) analytic.push_back(leaf.grad());

  GradCheckReport report;
  NoGradGuard no_grad;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor leaf = leaves[li].second;
    Matrix& value = leaf.mutable_value();
    for (Index c = 0; c < value.cols(); ++c) {
      for (Index r = 0; r < value.rows(); ++r) {
        const double saved = value(r, c);
        value(r, c) = saved + eps;
        const double plus = scalar().item();
        value(r, c) = saved - eps;
        const double minus = scalar().item();
        value(r, c) = saved;
        const double numeric = (plus - minus) / (2.0 * eps);
        const double a = analytic[li](r, c);
        const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), abs_floor});
        ++report.entries;
        if (err > report.max_rel_error) {
          report.max_rel_error = err;
          report.worst = leaves[li].first + "[" + std::to_string(r) + "," + std::to_string(c) + "]";
        }
      }
    }
  }
  for (const auto& [_, leaf] : leaves) leaf.zero_grad();
  return report;
}

}  // namespace ack::nn
