#pragma once

#include <json.hpp>
#include <map>
#include <string>

#include "ack/nn/layers.hpp"

namespace ack::nn {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // decoupled; skipped for 1 x n vectors (biases, norms, per-head scalars)
  double grad_clip = 5.0;      // global L2 norm; <= 0 disables
};

class AdamW {
 public:
  AdamW(const ParameterSet& params, AdamWOptions options);

  // Applies one update from the accumulated gradients and returns the
  // pre-clip global gradient norm. Frozen parameters are left untouched.
  double step();

  long long steps() const { return t_; }
  void set_lr(double lr) { options_.lr = lr; }

  nlohmann::ordered_json state_json() const;
  void load_state(const nlohmann::json& j);

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };
  const ParameterSet& params_;
  AdamWOptions options_;
  std::map<std::string, Moments> moments_;
  long long t_ = 0;
};

}  // namespace ack::nn
