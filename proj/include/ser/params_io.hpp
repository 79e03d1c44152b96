#pragma once

#include <string>

#include "ser/model.hpp"

namespace ser {

// Versioned binary model container: magic string, format version, the config
// snapshot as key=value text, then every tensor in declared order with its
// name and extents. Scalars are 32-bit floats, little-endian.

inline constexpr char kParamsMagic[8] = {'S', 'E', 'R', 'M', 'D', 'L', '1', '\0'};
inline constexpr uint32_t kParamsVersion = 1;

void save_model(const Model<float>& model, const std::string& path);
Model<float> load_model(const std::string& path);

/// Precision conversion, shape-preserving.
template <class To, class From>
Model<To> convert_model(const Model<From>& in) {
  Model<To> out;
  out.config = in.config;
  out.params = ParamSet<To>();
  // Mirror shapes, then copy scalar by scalar in declared order.
  Rng dummy(0);
  ModelConfig cfg = in.config;
  Model<To> shaped = build_model<To>(cfg, dummy);
  out.params = std::move(shaped.params);
  std::vector<const Tensor<From>*> src;
  in.params.for_each(
      [&src](const std::string&, const Tensor<From>& t) { src.push_back(&t); });
  size_t idx = 0;
  out.params.for_each([&](const std::string&, Tensor<To>& t) {
    const Tensor<From>& s = *src[idx++];
    for (size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<To>(s[i]);
  });
  return out;
}

}  // namespace ser
