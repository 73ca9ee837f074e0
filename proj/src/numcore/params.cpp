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

#include "tritower/numcore/params.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tritower/numcore/binary_io.hpp"
#include "tritower/numcore/errors.hpp"

namespace tritower {

Tensor& ParameterStore::add_normal(const std::string& name, Shape shape,
                                   std::mt19937_64& rng, Real stddev) {
  std::normal_distribution<Real> dist(Real{0}, stddev);
  std::vector<Real> values(shape_numel(shape));
  for (Real& v : values) v = dist(rng);
  return add(name, Tensor(std::move(shape), std::move(values), true));
}

Tensor& ParameterStore::add_constant(const std::string& name, Shape shape,
                                     Real value) {
  return add(name, Tensor::full(std::move(shape), value, true));
}

Tensor& ParameterStore::add(const std::string& name, Tensor tensor) {
  auto [it, inserted] = tensors_.emplace(name, std::move(tensor));
  if (!inserted) throw ContractError("duplicate parameter name: " + name);
  return it->second;
}

bool ParameterStore::contains(const std::string& name) const {
  return tensors_.count(name) > 0;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter: " + name);
  return it->second;
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter: " + name);
  return it->second;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [_, t] : tensors_) t.zero_grad();
}

void ParameterStore::assign(const ParameterStore& other) {
  if (other.size() != size()) {
    throw ContractError("parameter stores differ in size");
  }
  for (auto& [name, t] : tensors_) {
    const Tensor& src = other.get(name);
    if (src.shape() != t.shape()) {
      throw DimensionError("parameter " + name + ": " + shape_string(t.shape()) +
                           " vs " + shape_string(src.shape()));
    }
    auto dst = t.mutable_values();
    auto from = src.values();
    std::copy(from.begin(), from.end(), dst.begin());
  }
}

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& prefix,
                                  const char* suffix) {
  return std::filesystem::path(prefix.string() + suffix);
}

}  // namespace

void save_tensor_bundle(const std::filesystem::path& prefix,
                        const std::map<std::string, Tensor>& tensors) {
  nlohmann::json manifest;
  manifest["format"] = "tritower-tensors";
  manifest["version"] = 1;
  manifest["byte_order"] = "little";
  nlohmann::json entries = nlohmann::json::array();

  std::ofstream blob(with_suffix(prefix, ".bin"), std::ios::binary | std::ios::trunc);
  if (!blob) throw FormatError("cannot write " + with_suffix(prefix, ".bin").string());
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    entries.push_back({{"name", name},
                       {"shape", t.shape()},
                       {"offset", offset},
                       {"dtype", "f64"}});
    for (Real v : t.values()) binio::put_f64(blob, v);
    offset += t.numel() * sizeof(double);
  }
  manifest["tensors"] = std::move(entries);
  manifest["total_bytes"] = offset;

  std::ofstream out(with_suffix(prefix, ".json"), std::ios::trunc);
  if (!out) throw FormatError("cannot write " + with_suffix(prefix, ".json").string());
  out << manifest.dump(2) << '\n';
}

std::map<std::string, Tensor> load_tensor_bundle(
    const std::filesystem::path& prefix) {
  std::ifstream in(with_suffix(prefix, ".json"));
  if (!in) throw FormatError("cannot read " + with_suffix(prefix, ".json").string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed tensor manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "tritower-tensors") {
    throw FormatError("not a tensor manifest: " + with_suffix(prefix, ".json").string());
  }
  std::ifstream blob(with_suffix(prefix, ".bin"), std::ios::binary);
  if (!blob) throw FormatError("cannot read " + with_suffix(prefix, ".bin").string());

  std::map<std::string, Tensor> out;
  for (const auto& entry : manifest.at("tensors")) {
    if (entry.at("dtype") != "f64") {
      throw FormatError("unsupported dtype " + entry.at("dtype").dump());
    }
    Shape shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    blob.seekg(static_cast<std::streamoff>(offset));
    std::vector<Real> values(shape_numel(shape));
    for (Real& v : values) v = binio::get_f64(blob);
    out.emplace(entry.at("name").get<std::string>(),
                Tensor(std::move(shape), std::move(values)));
  }
  return out;
}

void save_parameters(const std::filesystem::path& prefix,
                     const ParameterStore& store) {
  save_tensor_bundle(prefix, store.tensors());
}

void load_parameters(const std::filesystem::path& prefix, ParameterStore& store) {
  auto loaded = load_tensor_bundle(prefix);
  if (loaded.size() != store.size()) {
    throw FormatError("checkpoint holds " + std::to_string(loaded.size()) +
                      " tensors, model expects " + std::to_string(store.size()));
  }
  for (auto& [name, t] : loaded) {
    Tensor& dst = store.get(name);
    if (dst.shape() != t.shape()) {
      throw DimensionError("checkpoint tensor " + name + " has shape " +
                           shape_string(t.shape()) + ", model expects " +
                           shape_string(dst.shape()));
    }
    auto from = t.values();
    std::copy(from.begin(), from.end(), dst.mutable_values().begin());
  }
}

}  // namespace tritower
