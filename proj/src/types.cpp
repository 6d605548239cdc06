#include "harfuse/types.hpp"

namespace harfuse {

int modality_index(const std::string& name) {
  for (int k = 0; k < kModalityCount; ++k) {
    if (name == kModalityNames[static_cast<std::size_t>(k)]) return k;
  }
  return -1;
}

}  // namespace harfuse
