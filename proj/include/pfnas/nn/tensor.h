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

#ifndef PFNAS_NN_TENSOR_H_
#define PFNAS_NN_TENSOR_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pfnas::nn {

// Dense row-major float tensor with an optional gradient buffer of the same
// shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<float> values);

  const std::vector<int>& shape() const { return shape_; }
  int dim(size_t i) const { return shape_.at(i); }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return values_.size(); }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }
  float& operator[](size_t i) { return values_[i]; }
  float operator[](size_t i) const { return values_[i]; }

  // Elements of the i-th slice along the leading dimension.
  std::span<const float> row(size_t i) const;
  std::span<float> row(size_t i);
  size_t row_size() const;

  bool has_grad() const { return grad_.has_value(); }
  std::span<float> grad();
  std::span<const float> grad() const;
  // Allocates a zeroed gradient buffer if none exists.
  std::span<float> ensure_grad();
  void clear_grad() { grad_.reset(); }

  std::string shape_string() const;

 private:
  std::vector<int> shape_;
  std::vector<float> values_;
  std::optional<std::vector<float>> grad_;
};

size_t shape_product(std::span<const int> shape);

}  // namespace pfnas::nn

#endif  // PFNAS_NN_TENSOR_H_
