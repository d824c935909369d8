#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ack/nn/tensor.hpp"

namespace ack::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst;  // "<leaf>[row,col]"
  std::size_t entries = 0;
};

// Compares reverse-mode gradients against central finite differences on every
// entry of every listed leaf. Non-scalar outputs are contracted with a fixed
// pseudo-random weight matrix first. Relative error per entry is
// |analytic - numeric| / max(|analytic|, |numeric|, abs_floor).
GradCheckReport check_gradients(const std::function<Tensor()>& op,
                                const std::vector<std::pair<std::string, Tensor>>& leaves, double eps = 1e-5,
                                double abs_floor = 1e-6, std::uint64_t seed = 17);

}  // namespace ack::nn
