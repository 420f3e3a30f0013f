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

#include "pfnas/data/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "pfnas/common/error.h"
#include "pfnas/nn/network.h"

namespace pfnas::data {

void Dataset::validate() const {
  if (labels.empty()) throw InvalidArgument("dataset is empty");
  if (images.rank() != 4 || static_cast<size_t>(images.dim(0)) != labels.size())
    throw ShapeError("dataset images " + images.shape_string() + " do not match " +
                     std::to_string(labels.size()) + " labels");
  for (int y : labels)
    if (y < 0 || y >= num_classes)
      throw InvalidArgument("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(num_classes) + ")");
}

Dataset Dataset::subset(std::span<const size_t> indices) const {
  Dataset out;
  out.images = nn::gather_rows(images, indices);
  out.labels = labels_at(indices);
  out.num_classes = num_classes;
  if (!coarse_labels.empty())
    for (size_t i : indices) out.coarse_labels.push_back(coarse_labels[i]);
  return out;
}

std::vector<int> Dataset::labels_at(std::span<const size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (size_t i : indices) out.push_back(labels.at(i));
  return out;
}

Dataset parse_cifar_binary(std::span<const uint8_t> bytes, CifarFormat format) {
  if (format == CifarFormat::kAuto) {
    if (!bytes.empty() && bytes.size() % (kCifarPixels + 1) == 0) {
      format = CifarFormat::kCifar10;
    } else if (!bytes.empty() && bytes.size() % (kCifarPixels + 2) == 0) {
      format = CifarFormat::kCifar100;
    } else {
      const size_t whole = bytes.size() / (kCifarPixels + 1) * (kCifarPixels + 1);
      throw ParseError("CIFAR file of " + std::to_string(bytes.size()) +
                       " bytes is not a whole number of records; truncated record "
                       "at byte offset " + std::to_string(whole));
    }
  }
  const size_t label_bytes = format == CifarFormat::kCifar10 ? 1 : 2;
  const size_t record = kCifarPixels + label_bytes;
  if (bytes.empty() || bytes.size() % record != 0) {
    throw ParseError("truncated record at byte offset " +
                     std::to_string(bytes.size() / record * record));
  }
  const size_t n = bytes.size() / record;
  Dataset d;
  d.num_classes = format == CifarFormat::kCifar10 ? 10 : 100;
  d.images = nn::Tensor({static_cast<int>(n), 3, 32, 32});
  d.labels.resize(n);
  if (format == CifarFormat::kCifar100) d.coarse_labels.resize(n);
  auto values = d.images.values();
  for (size_t i = 0; i < n; ++i) {
    const size_t off = i * record;
    if (format == CifarFormat::kCifar100) {
      if (bytes[off] >= 20)
        throw ParseError("coarse label " + std::to_string(bytes[off]) +
                         " out of range at byte offset " + std::to_string(off));
      d.coarse_labels[i] = bytes[off];
    }
    const size_t label_off = off + label_bytes - 1;
    const int label = bytes[label_off];
    if (label >= d.num_classes)
      throw ParseError("label " + std::to_string(label) + " out of range at byte offset " +
                       std::to_string(label_off));
    d.labels[i] = label;
    for (size_t p = 0; p < kCifarPixels; ++p)
      values[i * kCifarPixels + p] = bytes[off + label_bytes + p] / 255.0f;
  }
  return d;
}

Dataset load_cifar_binary(const std::filesystem::path& path, CifarFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  const std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return parse_cifar_binary(bytes, format);
}

std::vector<uint8_t> serialize_cifar_binary(const Dataset& d, CifarFormat format) {
  if (format == CifarFormat::kAuto)
    format = d.coarse_labels.empty() ? CifarFormat::kCifar10 : CifarFormat::kCifar100;
  if (d.images.rank() != 4 || d.images.row_size() != kCifarPixels)
    throw ShapeError("CIFAR records must be 3x32x32 images");
  const size_t label_bytes = format == CifarFormat::kCifar10 ? 1 : 2;
  std::vector<uint8_t> out;
  out.reserve(d.size() * (kCifarPixels + label_bytes));
  for (size_t i = 0; i < d.size(); ++i) {
    if (format == CifarFormat::kCifar100)
      out.push_back(static_cast<uint8_t>(d.coarse_labels.empty() ? 0 : d.coarse_labels[i]));
    out.push_back(static_cast<uint8_t>(d.labels[i]));
    for (float v : d.images.row(i)) {
      const float px = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f);
      out.push_back(static_cast<uint8_t>(px));
    }
  }
  return out;
}

void write_cifar_binary(const Dataset& d, const std::filesystem::path& path,
                        CifarFormat format) {
  const std::vector<uint8_t> bytes = serialize_cifar_binary(d, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Dataset synth_dataset(const SynthSpec& spec, Rng& rng) {
  if (spec.classes < 2 || spec.per_class < 1 || spec.channels < 1 || spec.height < 1 ||
      spec.width < 1 || !(spec.jitter >= 0) || !(spec.amp_jitter >= 0))
    throw InvalidArgument("synth_dataset: invalid spec");
  struct Blob {
    double cy, cx;
    std::vector<double> amp;
  };
  std::uniform_real_distribution<double> uy(0, spec.height - 1), ux(0, spec.width - 1),
      mag(0.5, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<Blob> blobs(spec.classes);
  for (Blob& b : blobs) {
    b.cy = uy(rng);
    b.cx = ux(rng);
    for (int c = 0; c < spec.channels; ++c) b.amp.push_back((sign(rng) ? 1 : -1) * mag(rng));
  }
  const double width = 0.3 * std::min(spec.height, spec.width);
  const int n = spec.classes * spec.per_class;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i % spec.classes;
  std::shuffle(order.begin(), order.end(), rng);

  Dataset d;
  d.num_classes = spec.classes;
  d.labels = order;
  d.images = nn::Tensor({n, spec.channels, spec.height, spec.width});
  std::normal_distribution<double> noise(0.0, 1.0);
  auto v = d.images.values();
  size_t k = 0;
  for (int i = 0; i < n; ++i) {
    const Blob& b = blobs[order[i]];
    double cy = b.cy, cx = b.cx, scale = 1.0;
    if (spec.jitter > 0) {
      cy += spec.jitter * noise(rng);
      cx += spec.jitter * noise(rng);
    }
    if (spec.amp_jitter > 0) scale += spec.amp_jitter * noise(rng);
    for (int c = 0; c < spec.channels; ++c)
      for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
          const double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          const double bump = std::exp(-r2 / (2 * width * width));
          const double px =
              0.5 + 0.5 * spec.separation * scale * b.amp[c] * bump + spec.noise * noise(rng);
          v[k++] = static_cast<float>(std::clamp(px, 0.0, 1.0));
        }
  }
  return d;
}

}  // namespace pfnas::data
