#include "ack/nn/optimizer.hpp"

#include <cmath>

#include "ack/error.hpp"

namespace ack::nn {

namespace {

nlohmann::ordered_json matrix_json(const Matrix& m) {
  return {{"shape", {m.rows(), m.cols()}}, {"values", std::vector<double>(m.data(), m.data() + m.size())}};
}

void load_matrix(Matrix& m, const nlohmann::json& j) {
  const auto values = j.at("values").get<std::vector<double>>();
  if (static_cast<Index>(values.size()) != m.size()) {
    throw Error(ErrorCode::CheckpointError, "optimizer state shape mismatch");
  }
  std::copy(values.begin(), values.end(), m.data());
}

}  // namespace

AdamW::AdamW(const ParameterSet& params, AdamWOptions options) : params_(params), options_(options) {
  for (const auto& [name, t] : params_.all()) {
    moments_[name] = {Matrix::Zero(t.rows(), t.cols()), Matrix::Zero(t.rows(), t.cols())};
  }
}

double AdamW::step() {
  double norm2 = 0.0;
  for (const auto& [name, t] : params_.all()) {
    if (!params_.frozen(name) && t.has_grad()) norm2 += t.node()->grad.squaredNorm();
  }
  const double norm = std::sqrt(norm2);
  const double clip = (options_.grad_clip > 0.0 && norm > options_.grad_clip) ? options_.grad_clip / norm : 1.0;
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (const auto& [name, t] : params_.all()) {
    // Parameters that took no part in the forward pass are skipped entirely.
    if (params_.frozen(name) || !t.has_grad()) continue;
    Tensor param = t;
    Matrix& w = param.mutable_value();
    auto& mo = moments_.at(name);
    const Matrix g = param.node()->grad * clip;
    mo.m = options_.beta1 * mo.m + (1.0 - options_.beta1) * g;
    mo.v = options_.beta2 * mo.v + (1.0 - options_.beta2) * g.cwiseProduct(g);
    if (options_.weight_decay > 0.0 && w.rows() > 1 && w.cols() > 1) w *= 1.0 - options_.lr * options_.weight_decay;
    w.array() -= options_.lr * (mo.m.array() / bc1) / ((mo.v.array() / bc2).sqrt() + options_.eps);
  }
  return norm;
}

nlohmann::ordered_json AdamW::state_json() const {
  nlohmann::ordered_json j;
  j["step"] = t_;
  auto& m = j["moments"] = nlohmann::ordered_json::object();
  for (const auto& [name, mo] : moments_) m[name] = {{"m", matrix_json(mo.m)}, {"v", matrix_json(mo.v)}};
  return j;
}

void AdamW::load_state(const nlohmann::json& j) {
  t_ = j.at("step").get<long long>();
  for (auto& [name, mo] : moments_) {
    const auto& entry = j.at("moments").at(name);
    load_matrix(mo.m, entry.at("m"));
    load_matrix(mo.v, entry.at("v"));
  }
}

}  // namespace ack::nn
