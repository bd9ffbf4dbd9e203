#pragma once

#include <string>
#include <utility>
#include <vector>

#include "declip/tensor.hpp"

namespace declip {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // decoupled, applied to every parameter
};

// Adaptive-moment optimizer with decoupled weight decay and bias correction.
// Parameters that have never received a gradient are left untouched.
class AdamW {
 public:
  AdamW(std::vector<std::pair<std::string, ad::Tensor>>& params,
        AdamWConfig cfg);

  // Applies one update from the parameters' accumulated gradients.
  // A non-finite gradient aborts with a NumericalError naming the parameter.
  void step();
  void zero_grad();
  int steps_taken() const { return t_; }

 private:
  std::vector<std::pair<std::string, ad::Tensor>>* params_;
  AdamWConfig cfg_;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace declip
