#include "declip/optimizer.hpp"

#include <cmath>

#include "declip/errors.hpp"

namespace declip {

AdamW::AdamW(std::vector<std::pair<std::string, ad::Tensor>>& params,
             AdamWConfig cfg)
    : params_(&params), cfg_(cfg) {
  if (!(cfg_.lr >= 0.0) || !(cfg_.eps > 0.0) || cfg_.beta1 < 0.0 ||
      cfg_.beta1 >= 1.0 || cfg_.beta2 < 0.0 || cfg_.beta2 >= 1.0 ||
      cfg_.weight_decay < 0.0)
    throw InvalidArgument("optimizer: bad AdamW configuration");
  m_.resize(params.size());
  v_.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::size_t n = params[i].second.raw_values().size();
    m_[i].assign(n, 0.0);
    v_[i].assign(n, 0.0);
  }
}

void AdamW::step() {
  // Validate before mutating anything so an abort leaves parameters intact.
  for (auto& [name, p] : *params_) {
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    for (std::size_t j = 0; j < g.size(); ++j)
      if (!std::isfinite(g[j]))
        throw NumericalError("optimizer: non-finite gradient in parameter " +
                             name + " at index " + std::to_string(j));
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (std::size_t i = 0; i < params_->size(); ++i) {
    auto& [name, p] = (*params_)[i];
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.raw_values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      w[j] -= cfg_.lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps) +
                         cfg_.weight_decay * w[j]);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& [name, p] : *params_) p.zero_grad();
}

}  // namespace declip
