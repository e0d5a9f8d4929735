#pragma once

namespace trace::bench {

// Latency increase per unit of compression-ratio gain relative to a
// reference: (t_i - t_0) / (cr_i - cr_0). Throws kInvalidArgument when the
// two ratios are equal.
double lcr(double t_i, double cr_i, double t_0, double cr_0);

}  // namespace trace::bench
