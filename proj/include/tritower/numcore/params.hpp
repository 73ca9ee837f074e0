// Copyright 2026 The Tritower Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRITOWER_NUMCORE_PARAMS_HPP_
#define TRITOWER_NUMCORE_PARAMS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>

#include "tritower/numcore/tensor.hpp"

namespace tritower {

// Named, ordered collection of trainable leaves. Names are dotted paths
// namespaced by tower (query.*, title.*, image.*, fusion.*, heads.*).
class ParameterStore {
 public:
  using Map = std::map<std::string, Tensor>;

  // Scaled-normal initialization, std 0.02.
  static constexpr Real kInitStd = 0.02;

  Tensor& add_normal(const std::string& name, Shape shape, std::mt19937_64& rng,
                     Real stddev = kInitStd);
  Tensor& add_constant(const std::string& name, Shape shape, Real value);
  Tensor& add(const std::string& name, Tensor tensor);

  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);

  const Map& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }
  std::size_t parameter_count() const;
  void zero_grad();

  // Copies every value from other; names and shapes must match exactly.
  void assign(const ParameterStore& other);

 private:
  Map tensors_;
};

// Manifest (JSON: name -> shape, byte offset, dtype) at <prefix>.json plus a
// contiguous little-endian f64 blob at <prefix>.bin. Writing the same
// tensors twice produces byte-identical files.
void save_tensor_bundle(const std::filesystem::path& prefix,
                        const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> load_tensor_bundle(
    const std::filesystem::path& prefix);

void save_parameters(const std::filesystem::path& prefix,
                     const ParameterStore& store);
// Loads values into an existing store; names and shapes must match.
void load_parameters(const std::filesystem::path& prefix, ParameterStore& store);

}  // namespace tritower

#endif  // TRITOWER_NUMCORE_PARAMS_HPP_
