#include "trace/model/config.hpp"

#include "trace/error.hpp"

namespace trace::model {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be positive");
  };
  positive(hidden, "hidden");
  positive(ffn, "ffn");
  positive(group, "group");
  positive(context, "context");
  positive(shared_ffn_repeats, "shared_ffn_repeats");
  positive(heads, "heads");
  if (hidden % group != 0) {
    throw Error(ErrorCode::kInvalidArgument, "group " + std::to_string(group) +
                                                 " does not divide hidden " +
                                                 std::to_string(hidden));
  }
  if (hidden % heads != 0) {
    throw Error(ErrorCode::kInvalidArgument, "heads " + std::to_string(heads) +
                                                 " does not divide hidden " +
                                                 std::to_string(hidden));
  }
}

std::string ModelConfig::describe() const {
  return "h=" + std::to_string(hidden) + ";ffn=" + std::to_string(ffn) +
         ";g=" + std::to_string(group) + ";c=" + std::to_string(context) +
         ";N=" + std::to_string(shared_ffn_repeats) + ";heads=" + std::to_string(heads);
}

std::size_t parameter_count(const ModelConfig& c) {
  c.validate();
  const std::size_t h = c.hidden;
  return ModelConfig::kVocab * c.byte_width()  // byte embedding
         + c.context * h                       // positional embedding
         + 4 * h * h                           // W^Q, W^K, W^V, W
         + 2 * h * c.ffn                       // shared W_1, W_2
         + h * ModelConfig::kVocab;            // output head
}

}  // namespace trace::model
