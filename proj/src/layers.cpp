#include "rml/layers.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "rml/kernels.hpp"
#include "rml/util.hpp"

namespace rml::nn {

using kernels::ops;

LayerSpec LayerSpec::Conv2D(int filters, int kh, int kw, Pad pad) {
  LayerSpec s;
  s.kind = Kind::conv2d;
  s.filters = filters;
  s.kh = kh;
  s.kw = kw;
  s.pad = pad;
  s.validate();
  return s;
}

LayerSpec LayerSpec::Dense(int units, Act act) {
  LayerSpec s;
  s.kind = Kind::dense;
  s.units = units;
  s.act = act;
  s.validate();
  return s;
}

LayerSpec LayerSpec::ReLU() {
  LayerSpec s;
  s.kind = Kind::relu;
  return s;
}

LayerSpec LayerSpec::Dropout(double rate) {
  LayerSpec s;
  s.kind = Kind::dropout;
  s.rate = rate;
  s.validate();
  return s;
}

LayerSpec LayerSpec::Reshape(Shape target) {
  LayerSpec s;
  s.kind = Kind::reshape;
  s.target_shape = std::move(target);
  s.validate();
  return s;
}

void LayerSpec::validate() const {
  switch (kind) {
    case Kind::conv2d:
      if (filters < 1 || kh < 1 || kw < 1)
        throw std::invalid_argument("conv2d: filters and kernel dims must be >= 1");
      break;
    case Kind::dense:
      if (units < 1) throw std::invalid_argument("dense: units must be >= 1");
      break;
    case Kind::dropout:
      if (!(rate >= 0.0 && rate < 1.0))
        throw std::invalid_argument("dropout: rate must be in [0, 1)");
      break;
    case Kind::reshape:
      if (target_shape.empty())
        throw std::invalid_argument("reshape: empty target shape");
      for (int d : target_shape)
        if (d < 1) throw std::invalid_argument("reshape: dims must be >= 1");
      break;
    case Kind::relu:
      break;
  }
}

std::string LayerSpec::describe() const {
  switch (kind) {
    case Kind::conv2d:
      return "conv2d(" + std::to_string(filters) + "," + std::to_string(kh) +
             "x" + std::to_string(kw) + (pad == Pad::same ? ",same)" : ",valid)");
    case Kind::dense:
      return "dense(" + std::to_string(units) +
             (act == Act::relu ? ",relu)" : ")");
    case Kind::relu:
      return "relu";
    case Kind::dropout:
      return "dropout(" + std::to_string(rate) + ")";
    case Kind::reshape:
      return "reshape" + shape_str(target_shape);
  }
  return "?";
}

Shape infer_out_shape(const LayerSpec& spec, const Shape& in) {
  switch (spec.kind) {
    case LayerSpec::Kind::conv2d: {
      if (in.size() != 3)
        throw std::invalid_argument("conv2d expects CxHxW input, got " +
                                    shape_str(in));
      const int h = in[1], w = in[2];
      if (spec.pad == Pad::same) return {spec.filters, h, w};
      const int oh = h - spec.kh + 1;
      const int ow = w - spec.kw + 1;
      if (oh < 1 || ow < 1)
        throw std::invalid_argument("conv2d kernel larger than input " +
                                    shape_str(in));
      return {spec.filters, oh, ow};
    }
    case LayerSpec::Kind::dense:
      return {spec.units};
    case LayerSpec::Kind::relu:
    case LayerSpec::Kind::dropout:
      return in;
    case LayerSpec::Kind::reshape: {
      if (shape_numel(spec.target_shape) != shape_numel(in))
        throw std::invalid_argument("reshape " + shape_str(in) + " -> " +
                                    shape_str(spec.target_shape) +
                                    " changes element count");
      return spec.target_shape;
    }
  }
  throw std::logic_error("unknown layer kind");
}

namespace {

template <typename T>
void check_batch_shape(const Tensor<T>& x, const Shape& item,
                       const LayerSpec& spec) {
  if (!same_trailing_shape(x.shape, item))
    throw std::invalid_argument("layer " + spec.describe() +
                                ": input shape " + shape_str(x.shape) +
                                " does not match expected item shape " +
                                shape_str(item));
}

template <typename T>
void glorot_fill(Tensor<T>& w, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  for (auto& v : w.v) v = T(rng.uniform(-limit, limit));
}

// --------------------------------------------------------------- conv2d ---

template <typename T>
class Conv2DLayer final : public Layer<T> {
 public:
  Conv2DLayer(const LayerSpec& spec, const Shape& in, Rng& rng)
      : Layer<T>(spec, in, infer_out_shape(spec, in)),
        c_(in[0]),
        h_(in[1]),
        w_(in[2]),
        f_(spec.filters),
        kh_(spec.kh),
        kw_(spec.kw),
        oh_(this->out_shape_[1]),
        ow_(this->out_shape_[2]),
        weights_({spec.filters, in[0] * spec.kh * spec.kw}),
        bias_({spec.filters}) {
    if (spec.pad == Pad::same) {
      pad_top_ = (kh_ - 1) / 2;
      pad_left_ = (kw_ - 1) / 2;
    }
    glorot_fill(weights_, c_ * kh_ * kw_, f_ * kh_ * kw_, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng*) override {
    check_batch_shape(x, this->in_shape_, this->spec_);
    const int n = x.batch();
    const size_t kdim = size_t(c_) * kh_ * kw_;
    const size_t pdim = size_t(oh_) * ow_;
    Tensor<T> y({n, f_, oh_, ow_});

    const bool cache = (mode == Mode::train);
    if (cache) {
      col_cache_.assign(size_t(n) * kdim * pdim, T(0));
      cached_batch_ = n;
      has_cache_ = true;
    }

    std::vector<T> scratch;  // used when not caching
    auto run = [&](size_t n0, size_t n1) {
      std::vector<T> local;
      for (size_t ex = n0; ex < n1; ++ex) {
        T* col;
        if (cache) {
          col = col_cache_.data() + ex * kdim * pdim;
        } else {
          if (local.size() != kdim * pdim) local.assign(kdim * pdim, T(0));
          col = local.data();
        }
        im2col(x.data() + ex * x.row_size(), col);
        T* yrow = y.data() + ex * y.row_size();
        if constexpr (std::is_same_v<T, float>)
          ops().sgemm_nn(weights_.data(), col, yrow, f_, int(pdim), int(kdim), 0.0f);
        else
          ops().dgemm_nn(weights_.data(), col, yrow, f_, int(pdim), int(kdim), 0.0);
        for (int fi = 0; fi < f_; ++fi) {
          const T b = bias_.v[size_t(fi)];
          T* dst = yrow + size_t(fi) * pdim;
          for (size_t p = 0; p < pdim; ++p) dst[p] += b;
        }
      }
    };
    parallel_for(size_t(n), 2, run);
    (void)scratch;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    if (!has_cache_) throw std::logic_error("conv2d backward without forward");
    const int n = cached_batch_;
    check_batch_shape(gy, this->out_shape_, this->spec_);
    if (gy.batch() != n) throw std::invalid_argument("conv2d: batch mismatch");
    const size_t kdim = size_t(c_) * kh_ * kw_;
    const size_t pdim = size_t(oh_) * ow_;

    weights_.ensure_grad();
    bias_.ensure_grad();
    Tensor<T> gx({n, c_, h_, w_});

    ThreadPool& pool = ThreadPool::instance();
    const int chunks = int(std::min<size_t>(size_t(pool.size()), size_t(n)));
    // per-chunk weight/bias grad buffers, merged in chunk order below
    std::vector<std::vector<T>> gw_part(size_t(std::max(chunks, 1)),
                                        std::vector<T>(weights_.size(), T(0)));
    std::vector<std::vector<T>> gb_part(size_t(std::max(chunks, 1)),
                                        std::vector<T>(bias_.size(), T(0)));

    auto work = [&](int chunk) {
      const size_t n0 = size_t(n) * size_t(chunk) / size_t(chunks);
      const size_t n1 = size_t(n) * size_t(chunk + 1) / size_t(chunks);
      std::vector<T> gcol(kdim * pdim);
      T* gw = gw_part[size_t(chunk)].data();
      T* gb = gb_part[size_t(chunk)].data();
      for (size_t ex = n0; ex < n1; ++ex) {
        const T* gyrow = gy.data() + ex * gy.row_size();
        const T* col = col_cache_.data() + ex * kdim * pdim;
        if constexpr (std::is_same_v<T, float>) {
          ops().sgemm_nt(gyrow, col, gw, f_, int(kdim), int(pdim), 1.0f);
          ops().sgemm_tn(weights_.data(), gyrow, gcol.data(), int(kdim),
                         int(pdim), f_, 0.0f);
        } else {
          ops().dgemm_nt(gyrow, col, gw, f_, int(kdim), int(pdim), 1.0);
          ops().dgemm_tn(weights_.data(), gyrow, gcol.data(), int(kdim),
                         int(pdim), f_, 0.0);
        }
        for (int fi = 0; fi < f_; ++fi) {
          const T* src = gyrow + size_t(fi) * pdim;
          T acc = 0;
          for (size_t p = 0; p < pdim; ++p) acc += src[p];
          gb[fi] += acc;
        }
        col2im(gcol.data(), gx.data() + ex * gx.row_size());
      }
    };
    if (chunks <= 1) {
      work(0);
    } else {
      pool.run_chunks(chunks, work);
    }
    for (int c = 0; c < std::max(chunks, 1); ++c) {
      for (size_t i = 0; i < weights_.size(); ++i)
        weights_.g[i] += gw_part[size_t(c)][i];
      for (size_t i = 0; i < bias_.size(); ++i)
        bias_.g[i] += gb_part[size_t(c)][i];
    }
    has_cache_ = false;
    return gx;
  }

  std::vector<Tensor<T>*> params() override { return {&weights_, &bias_}; }

 private:
  // colT layout: row k = (c*kh + ki)*kw + kj, column p = oh*ow_ + ow
  void im2col(const T* x, T* col) const {
    const size_t pdim = size_t(oh_) * ow_;
    size_t k = 0;
    for (int c = 0; c < c_; ++c) {
      const T* plane = x + size_t(c) * h_ * w_;
      for (int ki = 0; ki < kh_; ++ki) {
        for (int kj = 0; kj < kw_; ++kj, ++k) {
          T* dst = col + k * pdim;
          for (int oh = 0; oh < oh_; ++oh) {
            const int ih = oh - pad_top_ + ki;
            T* drow = dst + size_t(oh) * ow_;
            if (ih < 0 || ih >= h_) {
              std::memset(drow, 0, sizeof(T) * size_t(ow_));
              continue;
            }
            const T* srow = plane + size_t(ih) * w_;
            for (int ow = 0; ow < ow_; ++ow) {
              const int iw = ow - pad_left_ + kj;
              drow[ow] = (iw >= 0 && iw < w_) ? srow[iw] : T(0);
            }
          }
        }
      }
    }
  }

  void col2im(const T* col, T* x) const {
    const size_t pdim = size_t(oh_) * ow_;
    std::memset(x, 0, sizeof(T) * size_t(c_) * h_ * w_);
    size_t k = 0;
    for (int c = 0; c < c_; ++c) {
      T* plane = x + size_t(c) * h_ * w_;
      for (int ki = 0; ki < kh_; ++ki) {
        for (int kj = 0; kj < kw_; ++kj, ++k) {
          const T* src = col + k * pdim;
          for (int oh = 0; oh < oh_; ++oh) {
            const int ih = oh - pad_top_ + ki;
            if (ih < 0 || ih >= h_) continue;
            T* drow = plane + size_t(ih) * w_;
            const T* srow = src + size_t(oh) * ow_;
            for (int ow = 0; ow < ow_; ++ow) {
              const int iw = ow - pad_left_ + kj;
              if (iw >= 0 && iw < w_) drow[iw] += srow[ow];
            }
          }
        }
      }
    }
  }

  int c_, h_, w_, f_, kh_, kw_, oh_, ow_;
  int pad_top_ = 0, pad_left_ = 0;
  Tensor<T> weights_;  // (F, C*KH*KW)
  Tensor<T> bias_;     // (F)
  std::vector<T> col_cache_;
  int cached_batch_ = 0;
  bool has_cache_ = false;
};

// ---------------------------------------------------------------- dense ---

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(const LayerSpec& spec, const Shape& in, Rng& rng)
      : Layer<T>(spec, in, infer_out_shape(spec, in)),
        din_(int(shape_numel(in))),
        units_(spec.units),
        weights_({spec.units, din_}),
        bias_({spec.units}) {
    glorot_fill(weights_, din_, units_, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng*) override {
    check_batch_shape(x, this->in_shape_, this->spec_);
    const int n = x.batch();
    Tensor<T> y({n, units_});
    if (n > 0) {
      if constexpr (std::is_same_v<T, float>)
        ops().sgemm_nt(x.data(), weights_.data(), y.data(), n, units_, din_, 0.0f);
      else
        ops().dgemm_nt(x.data(), weights_.data(), y.data(), n, units_, din_, 0.0);
      for (int i = 0; i < n; ++i) {
        T* row = y.data() + size_t(i) * units_;
        for (int j = 0; j < units_; ++j) row[j] += bias_.v[size_t(j)];
      }
      if (this->spec_.act == Act::relu) {
        if constexpr (std::is_same_v<T, float>)
          ops().srelu_fwd(y.data(), y.data(), y.size());
        else
          ops().drelu_fwd(y.data(), y.data(), y.size());
      }
    }
    if (mode == Mode::train) {
      x_cache_ = x;
      y_cache_ = y;
      has_cache_ = true;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    if (!has_cache_) throw std::logic_error("dense backward without forward");
    const int n = x_cache_.batch();
    check_batch_shape(gy, this->out_shape_, this->spec_);

    Tensor<T> gz = gy;
    if (this->spec_.act == Act::relu) {
      if constexpr (std::is_same_v<T, float>)
        ops().srelu_bwd(y_cache_.data(), gy.data(), gz.data(), gz.size());
      else
        ops().drelu_bwd(y_cache_.data(), gy.data(), gz.data(), gz.size());
    }

    weights_.ensure_grad();
    bias_.ensure_grad();
    if (n > 0) {
      if constexpr (std::is_same_v<T, float>)
        ops().sgemm_tn(gz.data(), x_cache_.data(), weights_.grad(), units_,
                       din_, n, 1.0f);
      else
        ops().dgemm_tn(gz.data(), x_cache_.data(), weights_.grad(), units_,
                       din_, n, 1.0);
      for (int i = 0; i < n; ++i) {
        const T* row = gz.data() + size_t(i) * units_;
        for (int j = 0; j < units_; ++j) bias_.g[size_t(j)] += row[j];
      }
    }

    Tensor<T> gx(prepend_batch(this->in_shape_, n));
    if (n > 0) {
      if constexpr (std::is_same_v<T, float>)
        ops().sgemm_nn(gz.data(), weights_.data(), gx.data(), n, din_, units_, 0.0f);
      else
        ops().dgemm_nn(gz.data(), weights_.data(), gx.data(), n, din_, units_, 0.0);
    }
    has_cache_ = false;
    return gx;
  }

  std::vector<Tensor<T>*> params() override { return {&weights_, &bias_}; }

 private:
  static Shape prepend_batch(const Shape& item, int n) {
    Shape s{n};
    s.insert(s.end(), item.begin(), item.end());
    return s;
  }

  int din_, units_;
  Tensor<T> weights_;  // (units, din)
  Tensor<T> bias_;
  Tensor<T> x_cache_;
  Tensor<T> y_cache_;
  bool has_cache_ = false;
};

// ----------------------------------------------------------------- relu ---

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  ReluLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in, in) {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng*) override {
    check_batch_shape(x, this->in_shape_, this->spec_);
    Tensor<T> y;
    y.shape = x.shape;
    y.v.resize(x.size());
    if constexpr (std::is_same_v<T, float>)
      ops().srelu_fwd(x.data(), y.data(), x.size());
    else
      ops().drelu_fwd(x.data(), y.data(), x.size());
    if (mode == Mode::train) {
      y_cache_ = y;
      has_cache_ = true;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    if (!has_cache_) throw std::logic_error("relu backward without forward");
    Tensor<T> gx;
    gx.shape = gy.shape;
    gx.v.resize(gy.size());
    if constexpr (std::is_same_v<T, float>)
      ops().srelu_bwd(y_cache_.data(), gy.data(), gx.data(), gy.size());
    else
      ops().drelu_bwd(y_cache_.data(), gy.data(), gx.data(), gy.size());
    has_cache_ = false;
    return gx;
  }

 private:
  Tensor<T> y_cache_;
  bool has_cache_ = false;
};

// -------------------------------------------------------------- dropout ---

// Inverted dropout: survivors scaled by 1/(1-rate) at train time so that
// eval is the identity.
template <typename T>
class DropoutLayer final : public Layer<T> {
 public:
  DropoutLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in, in) {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng* rng) override {
    check_batch_shape(x, this->in_shape_, this->spec_);
    const double rate = this->spec_.rate;
    if (mode == Mode::eval || rate == 0.0) {
      if (mode == Mode::train) {
        mask_.assign(x.size(), T(1));
        has_cache_ = true;
      }
      return x;
    }
    if (frozen_ && mask_.size() == x.size()) {
      // reuse the previously drawn mask (finite-difference checks)
    } else {
      if (rng == nullptr)
        throw std::logic_error("dropout: train-mode forward without rng");
      const T scale = T(1.0 / (1.0 - rate));
      mask_.resize(x.size());
      for (auto& m : mask_) m = rng->uniform() >= rate ? scale : T(0);
    }
    Tensor<T> y;
    y.shape = x.shape;
    y.v.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) y.v[i] = x.v[i] * mask_[i];
    has_cache_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    if (!has_cache_) throw std::logic_error("dropout backward without forward");
    Tensor<T> gx;
    gx.shape = gy.shape;
    gx.v.resize(gy.size());
    for (size_t i = 0; i < gy.size(); ++i) gx.v[i] = gy.v[i] * mask_[i];
    has_cache_ = false;
    return gx;
  }

  void set_frozen_mask(bool frozen) override {
    frozen_ = frozen;
    if (!frozen) mask_.clear();
  }

 private:
  std::vector<T> mask_;
  bool has_cache_ = false;
  bool frozen_ = false;
};

// -------------------------------------------------------------- reshape ---

template <typename T>
class ReshapeLayer final : public Layer<T> {
 public:
  ReshapeLayer(const LayerSpec& spec, const Shape& in)
      : Layer<T>(spec, in, infer_out_shape(spec, in)) {}

  Tensor<T> forward(const Tensor<T>& x, Mode, Rng*) override {
    check_batch_shape(x, this->in_shape_, this->spec_);
    Tensor<T> y;
    y.shape = Shape{x.batch()};
    y.shape.insert(y.shape.end(), this->out_shape_.begin(), this->out_shape_.end());
    y.v = x.v;
    last_batch_ = x.batch();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx;
    gx.shape = Shape{last_batch_};
    gx.shape.insert(gx.shape.end(), this->in_shape_.begin(), this->in_shape_.end());
    gx.v = gy.v;
    return gx;
  }

 private:
  int last_batch_ = 0;
};

}  // namespace

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& in,
                                     Rng& init_rng) {
  spec.validate();
  switch (spec.kind) {
    case LayerSpec::Kind::conv2d:
      return std::make_unique<Conv2DLayer<T>>(spec, in, init_rng);
    case LayerSpec::Kind::dense:
      return std::make_unique<DenseLayer<T>>(spec, in, init_rng);
    case LayerSpec::Kind::relu:
      return std::make_unique<ReluLayer<T>>(spec, in);
    case LayerSpec::Kind::dropout:
      return std::make_unique<DropoutLayer<T>>(spec, in);
    case LayerSpec::Kind::reshape:
      return std::make_unique<ReshapeLayer<T>>(spec, in);
  }
  throw std::logic_error("unknown layer kind");
}

template std::unique_ptr<Layer<float>> make_layer<float>(const LayerSpec&,
                                                         const Shape&, Rng&);
template std::unique_ptr<Layer<double>> make_layer<double>(const LayerSpec&,
                                                           const Shape&, Rng&);

}  // namespace rml::nn
