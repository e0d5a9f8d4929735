#include "trace/bench/lcr.hpp"

#include <cstdio>
#include <string>

#include "trace/error.hpp"

namespace trace::bench {

double lcr(double t_i, double cr_i, double t_0, double cr_0) {
  if (cr_i == cr_0) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "lcr undefined: cr_i == cr_0 (%.17g vs %.17g)", cr_i, cr_0);
    throw Error(ErrorCode::kInvalidArgument, buf);
  }
  return (t_i - t_0) / (cr_i - cr_0);
}

}  // namespace trace::bench
