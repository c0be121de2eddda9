#include "rml/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "rml/kernels.hpp"

namespace rml::nn {

using kernels::ops;

template <typename T>
Optimizer<T>::Optimizer(OptConfig cfg, const std::vector<Tensor<T>*>& params)
    : cfg_(cfg) {
  for (const Tensor<T>* p : params) {
    slot1_.emplace_back(p->size(), T(0));
    if (cfg_.kind == OptKind::adam) slot2_.emplace_back(p->size(), T(0));
  }
}

template <typename T>
void Optimizer<T>::step(const std::vector<Tensor<T>*>& params) {
  if (params.size() != slot1_.size())
    throw std::invalid_argument("optimizer: parameter list changed");
  ++t_;
  const double bc1 = 1.0 / (1.0 - std::pow(cfg_.beta1, double(t_)));
  const double bc2 = 1.0 / (1.0 - std::pow(cfg_.beta2, double(t_)));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor<T>* p = params[i];
    if (p->g.size() != p->v.size())
      throw std::invalid_argument("optimizer: missing gradient");
    if (cfg_.kind == OptKind::adam) {
      if constexpr (std::is_same_v<T, float>)
        ops().sadam(p->data(), p->g.data(), slot1_[i].data(), slot2_[i].data(),
                    p->size(), float(cfg_.lr), float(cfg_.beta1),
                    float(cfg_.beta2), float(cfg_.eps), float(bc1), float(bc2));
      else
        ops().dadam(p->data(), p->g.data(), slot1_[i].data(), slot2_[i].data(),
                    p->size(), cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps, bc1,
                    bc2);
    } else {
      if constexpr (std::is_same_v<T, float>)
        ops().srmsprop(p->data(), p->g.data(), slot1_[i].data(), p->size(),
                       float(cfg_.lr), float(cfg_.rho), float(cfg_.eps));
      else
        ops().drmsprop(p->data(), p->g.data(), slot1_[i].data(), p->size(),
                       cfg_.lr, cfg_.rho, cfg_.eps);
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace rml::nn
