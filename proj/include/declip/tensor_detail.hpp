#pragma once

// Internal helpers shared by the op implementation files; not part of the
// public surface.

#include <functional>
#include <vector>

#include "declip/tensor.hpp"

namespace declip::ad::detail {

std::vector<std::int64_t> strides_of(const Shape& s);

Tensor make_op(const char* op, Shape shape, std::vector<double> values,
               const std::vector<Tensor>& parents,
               std::function<void(Node&)> backward);

void check_defined(const Tensor& t, const char* op);
void check_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace declip::ad::detail
