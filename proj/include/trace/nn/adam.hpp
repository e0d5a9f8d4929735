#pragma once

#include <span>

#include "trace/nn/parameter.hpp"

namespace trace::nn {

struct AdamSettings {
  float lr = 0.001f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Bias-corrected Adam update on every parameter, then zeroes the gradients and
// increments each step_count. Throws if lr <= 0.
void adam_step(std::span<Parameter* const> params, const AdamSettings& settings);

}  // namespace trace::nn
