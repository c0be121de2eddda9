#pragma once

#include "rml/features.hpp"
#include "rml/signal.hpp"
#include "rml/tensor.hpp"

namespace rml {

// Network input layout for IQ frames: (N, 1, 2, 128).
inline const nn::Shape kFrameShape{1, 2, 128};

inline nn::Tensor<float> frames_to_tensor(
    const std::vector<signal::IQFrame>& frames) {
  nn::Tensor<float> t({int(frames.size()), 1, 2, 128});
  for (size_t i = 0; i < frames.size(); ++i)
    std::copy(frames[i].v.begin(), frames[i].v.end(), t.data() + i * 256);
  return t;
}

inline nn::Tensor<float> dataset_inputs(const signal::Dataset& ds) {
  nn::Tensor<float> t({int(ds.size()), 1, 2, 128});
  for (size_t i = 0; i < ds.size(); ++i)
    std::copy(ds.examples[i].frame.v.begin(), ds.examples[i].frame.v.end(),
              t.data() + i * 256);
  return t;
}

inline std::vector<features::RowMeta> dataset_meta(const signal::Dataset& ds) {
  std::vector<features::RowMeta> meta(ds.size());
  for (size_t i = 0; i < ds.size(); ++i)
    meta[i] = {uint32_t(i), ds.examples[i].class_id, ds.examples[i].snr_db};
  return meta;
}

}  // namespace rml
