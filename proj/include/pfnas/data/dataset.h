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

#ifndef PFNAS_DATA_DATASET_H_
#define PFNAS_DATA_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfnas/common/rng.h"
#include "pfnas/nn/tensor.h"

namespace pfnas::data {

struct Dataset {
  nn::Tensor images;  // [N, C, H, W], values in [0, 1]
  std::vector<int> labels;
  int num_classes = 0;
  // CIFAR-100 coarse labels, kept so a loaded file can be re-serialized.
  std::vector<int> coarse_labels;

  size_t size() const { return labels.size(); }
  void validate() const;
  Dataset subset(std::span<const size_t> indices) const;
  std::vector<int> labels_at(std::span<const size_t> indices) const;
};

// ---- CIFAR binary format -------------------------------------------------

enum class CifarFormat { kAuto, kCifar10, kCifar100 };

inline constexpr size_t kCifarPixels = 3 * 32 * 32;

Dataset load_cifar_binary(const std::filesystem::path& path,
                          CifarFormat format = CifarFormat::kAuto);
Dataset parse_cifar_binary(std::span<const uint8_t> bytes,
                           CifarFormat format = CifarFormat::kAuto);
std::vector<uint8_t> serialize_cifar_binary(const Dataset& d, CifarFormat format);
void write_cifar_binary(const Dataset& d, const std::filesystem::path& path,
                        CifarFormat format);

// ---- Synthetic data --------------------------------------------------------

struct SynthSpec {
  int classes = 10;
  int per_class = 100;
  int channels = 3;
  int height = 8;
  int width = 8;
  // Amplitude of the class-specific blob relative to the gray background.
  double separation = 1.0;
  // Std of the i.i.d. pixel noise.
  double noise = 0.2;
  // Per-sample structure: std of the blob centre shift in pixels, and std of
  // a multiplicative amplitude factor around 1. Zero draws nothing extra.
  double jitter = 0.0;
  double amp_jitter = 0.0;
};

// Class-conditional Gaussian-blob images: each class owns a blob centre and a
// per-channel signed amplitude; samples add pixel noise and are clamped to
// [0, 1]. Exactly per_class samples per class, shuffled.
Dataset synth_dataset(const SynthSpec& spec, Rng& rng);

// ---- Partitioning ----------------------------------------------------------

struct PartitionPlan {
  std::vector<std::vector<size_t>> clients;
  std::string scheme;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

// True when the lists are pairwise disjoint and their union is [0, n).
bool is_disjoint_cover(const PartitionPlan& plan, size_t n);

// Whole draws are repeated (up to 100 times) until every client holds at
// least min_size samples; the last draw is kept with a warning otherwise.
PartitionPlan partition_dirichlet(std::span<const int> labels, int num_classes,
                                  int clients, double alpha, Rng& rng, size_t min_size = 1);

PartitionPlan partition_class_subset(std::span<const int> labels, int num_classes,
                                     int clients, int classes_per_client,
                                     double skew, Rng& rng);

struct NasSplit {
  std::vector<size_t> nas_train;
  std::vector<size_t> nas_val;
  std::vector<size_t> nas_test;
  std::vector<size_t> remainder;
  std::vector<std::string> warnings;
};

struct NasSizes {
  size_t train = 500;
  size_t val = 100;
  size_t test = 100;
  // Upper bound on the share of the shard the search may take. At 1.0 a
  // shard below train + val + test is consumed entirely.
  double max_fraction = 1.0;
};

// Stratified subsets for the search phase. When the shard cannot hold the
// requested sizes within max_fraction, they are scaled down in the
// requested ratio (5:1:1 by default) with a warning. Whatever is left feeds
// federated training.
NasSplit split_nas_subsets(std::span<const size_t> shard, std::span<const int> labels,
                           Rng& rng, const NasSizes& sizes = {});

// Stratified split of `indices` into a first part of `first` samples and the
// rest.
std::pair<std::vector<size_t>, std::vector<size_t>> stratified_split(
    std::span<const size_t> indices, std::span<const int> labels, size_t first,
    Rng& rng);

}  // namespace pfnas::data

#endif  // PFNAS_DATA_DATASET_H_
