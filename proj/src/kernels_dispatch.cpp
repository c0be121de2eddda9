#include <cstdlib>
#include <cstring>

#include "rml/kernels.hpp"

namespace rml::kernels {

namespace {
const Ops* select_backend() {
  const char* env = std::getenv("RML_KERNELS");
  if (env != nullptr) {
    if (const Ops* chosen = ops_by_name(env)) return chosen;
    // unknown name falls through to auto selection
  }
  if (const Ops* v = avx2_ops()) return v;
  return &kScalarOps;
}
}  // namespace

const Ops& ops() {
  static const Ops* active = select_backend();
  return *active;
}

const Ops* ops_by_name(const std::string& name) {
  if (name == "scalar") return &kScalarOps;
  if (name == "avx2") return avx2_ops();
  return nullptr;
}

std::vector<const Ops*> available_backends() {
  std::vector<const Ops*> v{&kScalarOps};
  if (const Ops* a = avx2_ops()) v.push_back(a);
  return v;
}

}  // namespace rml::kernels
