#include "trace/nn/adam.hpp"

#include <cmath>
#include <string>

#include "trace/error.hpp"

namespace trace::nn {
namespace {

void update(float* __restrict w, float* __restrict g, float* __restrict m, float* __restrict v,
            std::size_t n, float lr, float b1, float b2, float eps, float inv_c1, float inv_c2) {
  for (std::size_t i = 0; i < n; ++i) {
    const float gi = g[i];
    const float mi = b1 * m[i] + (1.0f - b1) * gi;
    const float vi = b2 * v[i] + (1.0f - b2) * gi * gi;
    m[i] = mi;
    v[i] = vi;
    w[i] -= lr * (mi * inv_c1) / (std::sqrt(vi * inv_c2) + eps);
    g[i] = 0.0f;
  }
}

}  // namespace

void adam_step(std::span<Parameter* const> params, const AdamSettings& s) {
  if (!(s.lr > 0.0f)) {
    throw Error(ErrorCode::kInvalidArgument,
                "adam learning rate must be positive, got " + std::to_string(s.lr));
  }
  for (Parameter* p : params) {
    p->step_count += 1;
    const double t = static_cast<double>(p->step_count);
    const auto inv_c1 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(s.beta1), t)));
    const auto inv_c2 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(s.beta2), t)));
    update(p->value.data(), p->grad.data(), p->m.data(), p->v.data(), p->size(), s.lr, s.beta1,
           s.beta2, s.eps, inv_c1, inv_c2);
  }
}

}  // namespace trace::nn
