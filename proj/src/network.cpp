#include "rml/network.hpp"

#include <stdexcept>

namespace rml::nn {

namespace {
constexpr uint64_t kInitStreamTag = 0x1a7e5eed;
}

template <typename T>
Network<T>::Network(std::vector<LayerSpec> specs, Shape input_shape,
                    uint64_t init_seed)
    : specs_(std::move(specs)),
      input_shape_(std::move(input_shape)),
      init_seed_(init_seed) {
  if (specs_.empty()) throw std::invalid_argument("network: no layers");
  Rng base(mix64(init_seed, kInitStreamTag));
  Shape cur = input_shape_;
  shapes_.push_back(cur);
  for (size_t i = 0; i < specs_.size(); ++i) {
    Rng layer_rng = base.fork(uint64_t(i));
    layers_.push_back(make_layer<T>(specs_[i], cur, layer_rng));
    cur = layers_.back()->out_shape();
    shapes_.push_back(cur);
  }
  output_shape_ = cur;
}

template <typename T>
Network<T>::Network(const Network& other)
    : Network(other.specs_, other.input_shape_, other.init_seed_) {
  load_params(other.save_params());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) *this = Network(other);
  return *this;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch, Mode mode) {
  Tensor<T> cur = batch;
  for (auto& layer : layers_)
    cur = layer->forward(cur, mode, mode == Mode::train ? rng_ : nullptr);
  forward_done_ = (mode == Mode::train);
  return cur;
}

template <typename T>
Tensor<T> Network<T>::forward_prefix(const Tensor<T>& batch,
                                     size_t n_layers) const {
  if (n_layers > layers_.size())
    throw std::invalid_argument("forward_prefix: prefix too long");
  Tensor<T> cur = batch;
  for (size_t i = 0; i < n_layers; ++i)
    cur = layers_[i]->forward(cur, Mode::eval, nullptr);
  return cur;
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_out) {
  if (!forward_done_)
    throw std::logic_error("backward called without a train-mode forward");
  Tensor<T> cur = grad_out;
  for (size_t i = layers_.size(); i-- > 0;) cur = layers_[i]->backward(cur);
  forward_done_ = false;
  return cur;
}

template <typename T>
std::vector<Tensor<T>*> Network<T>::params() {
  std::vector<Tensor<T>*> out;
  for (auto& layer : layers_)
    for (Tensor<T>* p : layer->params()) out.push_back(p);
  return out;
}

template <typename T>
size_t Network<T>::param_count() const {
  size_t n = 0;
  for (const auto& layer : layers_)
    for (Tensor<T>* p : const_cast<Layer<T>*>(layer.get())->params())
      n += p->size();
  return n;
}

template <typename T>
void Network<T>::zero_grads() {
  for (Tensor<T>* p : params()) {
    p->ensure_grad();
    p->zero_grad();
  }
}

template <typename T>
std::vector<T> Network<T>::save_params() const {
  std::vector<T> flat;
  for (const auto& layer : layers_)
    for (Tensor<T>* p : const_cast<Layer<T>*>(layer.get())->params())
      flat.insert(flat.end(), p->v.begin(), p->v.end());
  return flat;
}

template <typename T>
void Network<T>::load_params(const std::vector<T>& flat) {
  size_t off = 0;
  for (auto& layer : layers_) {
    for (Tensor<T>* p : layer->params()) {
      if (off + p->size() > flat.size())
        throw std::invalid_argument("load_params: buffer too small");
      std::copy(flat.begin() + long(off), flat.begin() + long(off + p->size()),
                p->v.begin());
      off += p->size();
    }
  }
  if (off != flat.size())
    throw std::invalid_argument("load_params: buffer size mismatch");
}

template <typename T>
void Network<T>::set_frozen_masks(bool frozen) {
  for (auto& layer : layers_) layer->set_frozen_mask(frozen);
}

Network<double> to_double(const Network<float>& net) {
  Network<double> out(net.specs(), net.input_shape(), net.init_seed());
  // copy parameters across precisions
  auto src = net.save_params();
  std::vector<double> flat(src.size());
  for (size_t i = 0; i < src.size(); ++i) flat[i] = double(src[i]);
  out.load_params(flat);
  return out;
}

template class Network<float>;
template class Network<double>;

}  // namespace rml::nn
