// Copyright 2026 The pfnas Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pfnas/nn/tensor.h"

#include <sstream>

#include "pfnas/common/error.h"

namespace pfnas::nn {

size_t shape_product(std::span<const int> shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in tensor shape");
    n *= static_cast<size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), values_(shape_product(shape_), 0.0f) {}

Tensor::Tensor(std::vector<int> shape, std::vector<float> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_product(shape_) != values_.size()) {
    throw ShapeError("tensor shape " + shape_string() + " does not match " +
                     std::to_string(values_.size()) + " values");
  }
}

size_t Tensor::row_size() const {
  if (shape_.empty() || shape_[0] == 0) return 0;
  return values_.size() / static_cast<size_t>(shape_[0]);
}

std::span<const float> Tensor::row(size_t i) const {
  const size_t n = row_size();
  return std::span<const float>(values_).subspan(i * n, n);
}

std::span<float> Tensor::row(size_t i) {
  const size_t n = row_size();
  return std::span<float>(values_).subspan(i * n, n);
}

std::span<float> Tensor::grad() {
  if (!grad_) throw Error("tensor has no gradient buffer");
  return *grad_;
}

std::span<const float> Tensor::grad() const {
  if (!grad_) throw Error("tensor has no gradient buffer");
  return *grad_;
}

std::span<float> Tensor::ensure_grad() {
  if (!grad_) grad_.emplace(values_.size(), 0.0f);
  return *grad_;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ", ";
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

}  // namespace pfnas::nn
