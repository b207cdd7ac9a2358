#ifndef NOISECOND_AUTODIFF_HPP
#define NOISECOND_AUTODIFF_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "noisecond/error.hpp"
#include "noisecond/rng.hpp"

namespace nc::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

// Dense row-major tensor. Gradient storage is allocated iff requires_grad.
template <class T>
struct Tensor {
  Shape shape;
  std::vector<T> v;
  std::vector<T> g;
  bool requires_grad = false;

  std::size_t size() const { return v.size(); }

  void set_requires_grad() {
    requires_grad = true;
    g.assign(v.size(), T(0));
  }

  void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }
};

template <class T>
using TensorPtr = std::shared_ptr<Tensor<T>>;

template <class T>
TensorPtr<T> make_tensor(Shape shape, bool requires_grad = false) {
  auto t = std::make_shared<Tensor<T>>();
  t->shape = std::move(shape);
  t->v.assign(numel(t->shape), T(0));
  if (requires_grad) t->set_requires_grad();
  return t;
}

template <class T>
TensorPtr<T> make_tensor(Shape shape, std::vector<T> values,
                         bool requires_grad = false) {
  auto t = std::make_shared<Tensor<T>>();
  t->shape = std::move(shape);
  if (values.size() != numel(t->shape))
    throw ShapeError("tensor value count does not match shape " +
                     shape_str(t->shape));
  t->v = std::move(values);
  if (requires_grad) t->set_requires_grad();
  return t;
}

// Batch-norm parameters and running statistics for one channel axis.
template <class T>
struct BatchNorm {
  TensorPtr<T> gamma;
  TensorPtr<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T momentum = T(0.9);
  T eps = T(1e-5);
  bool training = true;

  explicit BatchNorm(std::size_t channels = 0) { resize(channels); }

  void resize(std::size_t channels) {
    gamma = make_tensor<T>({channels}, std::vector<T>(channels, T(1)), true);
    beta = make_tensor<T>({channels}, true);
    running_mean.assign(channels, T(0));
    running_var.assign(channels, T(1));
  }

  std::size_t channels() const { return gamma->size(); }
};

// Records forward ops and replays their adjoints in reverse order.
template <class T>
class Graph {
 public:
  TensorPtr<T> input(Shape shape, std::vector<T> values) {
    return make_tensor<T>(std::move(shape), std::move(values));
  }

  // Cross-correlation with same-ceil zero padding: output extent is
  // ceil(in/stride); when total padding is odd the extra unit goes to the
  // bottom/right edge.
  TensorPtr<T> conv2d(const TensorPtr<T>& x, const TensorPtr<T>& w,
                      const TensorPtr<T>& bias, std::size_t sh,
                      std::size_t sw) {
    if (x->shape.size() != 4 || w->shape.size() != 4)
      throw ShapeError("conv2d expects 4-d input and weight");
    const std::size_t B = x->shape[0], Cin = x->shape[1], H = x->shape[2],
                      W = x->shape[3];
    const std::size_t Cout = w->shape[0], kH = w->shape[2], kW = w->shape[3];
    if (w->shape[1] != Cin)
      throw ShapeError("conv2d channel mismatch: input " + shape_str(x->shape) +
                       " weight " + shape_str(w->shape));
    if (bias && bias->size() != Cout)
      throw ShapeError("conv2d bias size != out channels");
    const std::size_t Ho = (H + sh - 1) / sh;
    const std::size_t Wo = (W + sw - 1) / sw;
    const std::size_t padh_total =
        std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>((Ho - 1) * sh + kH) -
                                        static_cast<std::ptrdiff_t>(H));
    const std::size_t padw_total =
        std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>((Wo - 1) * sw + kW) -
                                        static_cast<std::ptrdiff_t>(W));
    const std::ptrdiff_t pt = padh_total / 2, pl = padw_total / 2;

    auto out = result({B, Cout, Ho, Wo}, {x, w, bias});
    const T* xv = x->v.data();
    const T* wv = w->v.data();
    T* ov = out->v.data();
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t co = 0; co < Cout; ++co) {
        const T bval = bias ? bias->v[co] : T(0);
        for (std::size_t oh = 0; oh < Ho; ++oh)
          for (std::size_t ow = 0; ow < Wo; ++ow) {
            T acc = bval;
            for (std::size_t ci = 0; ci < Cin; ++ci) {
              const T* xp = xv + ((b * Cin + ci) * H) * W;
              const T* wp = wv + ((co * Cin + ci) * kH) * kW;
              for (std::size_t kh = 0; kh < kH; ++kh) {
                const std::ptrdiff_t ih =
                    static_cast<std::ptrdiff_t>(oh * sh + kh) - pt;
                if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
                for (std::size_t kw = 0; kw < kW; ++kw) {
                  const std::ptrdiff_t iw =
                      static_cast<std::ptrdiff_t>(ow * sw + kw) - pl;
                  if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
                  acc += xp[ih * static_cast<std::ptrdiff_t>(W) + iw] *
                         wp[kh * kW + kw];
                }
              }
            }
            ov[((b * Cout + co) * Ho + oh) * Wo + ow] = acc;
          }
      }

    if (out->requires_grad) {
      tape_.push_back([=]() {
        const T* go = out->g.data();
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t co = 0; co < Cout; ++co)
            for (std::size_t oh = 0; oh < Ho; ++oh)
              for (std::size_t ow = 0; ow < Wo; ++ow) {
                const T gv = go[((b * Cout + co) * Ho + oh) * Wo + ow];
                if (bias && bias->requires_grad) bias->g[co] += gv;
                for (std::size_t ci = 0; ci < Cin; ++ci)
                  for (std::size_t kh = 0; kh < kH; ++kh) {
                    const std::ptrdiff_t ih =
                        static_cast<std::ptrdiff_t>(oh * sh + kh) - pt;
                    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
                    for (std::size_t kw = 0; kw < kW; ++kw) {
                      const std::ptrdiff_t iw =
                          static_cast<std::ptrdiff_t>(ow * sw + kw) - pl;
                      if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W))
                        continue;
                      const std::size_t xi =
                          ((b * Cin + ci) * H + ih) * W + iw;
                      const std::size_t wi =
                          ((co * Cin + ci) * kH + kh) * kW + kw;
                      if (x->requires_grad) x->g[xi] += gv * w->v[wi];
                      if (w->requires_grad) w->g[wi] += gv * x->v[xi];
                    }
                  }
              }
      });
    }
    return out;
  }

  // Normalizes per channel over all other axes. Accepts B×C or B×C×H×W.
  // Train mode uses batch statistics (biased variance) and folds them into
  // the running estimates; eval mode reads the running estimates.
  TensorPtr<T> batch_norm(const TensorPtr<T>& x, BatchNorm<T>& bn) {
    if (x->shape.size() != 2 && x->shape.size() != 4)
      throw ShapeError("batch_norm expects 2-d or 4-d input");
    const std::size_t B = x->shape[0], C = x->shape[1];
    const std::size_t HW =
        x->shape.size() == 4 ? x->shape[2] * x->shape[3] : 1;
    if (C != bn.channels())
      throw ShapeError("batch_norm channel mismatch");
    const std::size_t N = B * HW;

    auto out = result(x->shape, {x, bn.gamma, bn.beta});
    auto mean = std::make_shared<std::vector<T>>(C, T(0));
    auto var = std::make_shared<std::vector<T>>(C, T(0));

    if (bn.training) {
      if (N < 2)
        throw DegenerateBatch("batch_norm train mode needs >= 2 values per channel");
      for (std::size_t c = 0; c < C; ++c) {
        T m = 0;
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t i = 0; i < HW; ++i) m += x->v[(b * C + c) * HW + i];
        m /= static_cast<T>(N);
        T s = 0;
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t i = 0; i < HW; ++i) {
            const T d = x->v[(b * C + c) * HW + i] - m;
            s += d * d;
          }
        s /= static_cast<T>(N);
        (*mean)[c] = m;
        (*var)[c] = s;
        bn.running_mean[c] = bn.momentum * bn.running_mean[c] + (T(1) - bn.momentum) * m;
        bn.running_var[c] = bn.momentum * bn.running_var[c] + (T(1) - bn.momentum) * s;
      }
    } else {
      *mean = bn.running_mean;
      *var = bn.running_var;
    }

    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) {
        const T inv = T(1) / std::sqrt((*var)[c] + bn.eps);
        for (std::size_t i = 0; i < HW; ++i) {
          const std::size_t idx = (b * C + c) * HW + i;
          out->v[idx] =
              bn.gamma->v[c] * (x->v[idx] - (*mean)[c]) * inv + bn.beta->v[c];
        }
      }

    if (out->requires_grad) {
      auto gamma = bn.gamma;
      auto beta = bn.beta;
      const bool training = bn.training;
      const T eps = bn.eps;
      tape_.push_back([=]() {
        for (std::size_t c = 0; c < C; ++c) {
          const T m = (*mean)[c];
          const T inv = T(1) / std::sqrt((*var)[c] + eps);
          // Reductions over the channel slice.
          T sum_gy = 0, sum_gy_xhat = 0;
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < HW; ++i) {
              const std::size_t idx = (b * C + c) * HW + i;
              const T xhat = (x->v[idx] - m) * inv;
              sum_gy += out->g[idx];
              sum_gy_xhat += out->g[idx] * xhat;
            }
          if (gamma->requires_grad) gamma->g[c] += sum_gy_xhat;
          if (beta->requires_grad) beta->g[c] += sum_gy;
          if (!x->requires_grad) continue;
          const T gw = gamma->v[c];
          if (training) {
            // Differentiate through the batch statistics.
            const T n = static_cast<T>(N);
            for (std::size_t b = 0; b < B; ++b)
              for (std::size_t i = 0; i < HW; ++i) {
                const std::size_t idx = (b * C + c) * HW + i;
                const T xhat = (x->v[idx] - m) * inv;
                x->g[idx] += gw * inv *
                             (out->g[idx] - sum_gy / n - xhat * sum_gy_xhat / n);
              }
          } else {
            for (std::size_t b = 0; b < B; ++b)
              for (std::size_t i = 0; i < HW; ++i) {
                const std::size_t idx = (b * C + c) * HW + i;
                x->g[idx] += gw * inv * out->g[idx];
              }
          }
        }
      });
    }
    return out;
  }

  // out = x · w^T + bias, w: Dout×Din. bias may be null.
  TensorPtr<T> dense(const TensorPtr<T>& x, const TensorPtr<T>& w,
                     const TensorPtr<T>& bias) {
    if (x->shape.size() != 2 || w->shape.size() != 2)
      throw ShapeError("dense expects 2-d input and weight");
    const std::size_t B = x->shape[0], Din = x->shape[1], Dout = w->shape[0];
    if (w->shape[1] != Din)
      throw ShapeError("dense shape mismatch: input " + shape_str(x->shape) +
                       " weight " + shape_str(w->shape));
    if (bias && bias->size() != Dout)
      throw ShapeError("dense bias size != out features");

    auto out = result({B, Dout}, {x, w, bias});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < Dout; ++o) {
        T acc = bias ? bias->v[o] : T(0);
        const T* xp = x->v.data() + b * Din;
        const T* wp = w->v.data() + o * Din;
        for (std::size_t i = 0; i < Din; ++i) acc += xp[i] * wp[i];
        out->v[b * Dout + o] = acc;
      }

    if (out->requires_grad) {
      tape_.push_back([=]() {
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t o = 0; o < Dout; ++o) {
            const T gv = out->g[b * Dout + o];
            if (gv == T(0)) continue;
            if (bias && bias->requires_grad) bias->g[o] += gv;
            for (std::size_t i = 0; i < Din; ++i) {
              if (x->requires_grad) x->g[b * Din + i] += gv * w->v[o * Din + i];
              if (w->requires_grad) w->g[o * Din + i] += gv * x->v[b * Din + i];
            }
          }
      });
    }
    return out;
  }

  TensorPtr<T> relu(const TensorPtr<T>& x) {
    auto out = result(x->shape, {x});
    for (std::size_t i = 0; i < x->size(); ++i)
      out->v[i] = x->v[i] > T(0) ? x->v[i] : T(0);
    if (out->requires_grad) {
      tape_.push_back([=]() {
        // relu'(0) = 0
        for (std::size_t i = 0; i < x->size(); ++i)
          if (x->v[i] > T(0)) x->g[i] += out->g[i];
      });
    }
    return out;
  }

  // Elementwise sum with numpy-style broadcasting (right-aligned, extents
  // equal or 1).
  TensorPtr<T> add(const TensorPtr<T>& a, const TensorPtr<T>& b) {
    const std::size_t nd = std::max(a->shape.size(), b->shape.size());
    Shape sa = pad_shape(a->shape, nd), sb = pad_shape(b->shape, nd), so(nd);
    for (std::size_t d = 0; d < nd; ++d) {
      if (sa[d] != sb[d] && sa[d] != 1 && sb[d] != 1)
        throw ShapeError("add: shapes " + shape_str(a->shape) + " and " +
                         shape_str(b->shape) + " not broadcastable");
      so[d] = std::max(sa[d], sb[d]);
    }
    auto out = result(so, {a, b});
    const auto stra = broadcast_strides(sa, so), strb = broadcast_strides(sb, so);
    const std::size_t n = out->size();
    std::vector<std::size_t> coord(nd, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t ia = 0, ib = 0;
      for (std::size_t d = 0; d < nd; ++d) {
        ia += coord[d] * stra[d];
        ib += coord[d] * strb[d];
      }
      out->v[i] = a->v[ia] + b->v[ib];
      inc_coord(coord, so);
    }
    if (out->requires_grad) {
      tape_.push_back([=]() {
        std::vector<std::size_t> c(nd, 0);
        for (std::size_t i = 0; i < n; ++i) {
          std::size_t ia = 0, ib = 0;
          for (std::size_t d = 0; d < nd; ++d) {
            ia += c[d] * stra[d];
            ib += c[d] * strb[d];
          }
          if (a->requires_grad) a->g[ia] += out->g[i];
          if (b->requires_grad) b->g[ib] += out->g[i];
          inc_coord(c, so);
        }
      });
    }
    return out;
  }

  TensorPtr<T> global_avg_pool(const TensorPtr<T>& x) {
    if (x->shape.size() != 4) throw ShapeError("global_avg_pool expects 4-d");
    const std::size_t B = x->shape[0], C = x->shape[1],
                      HW = x->shape[2] * x->shape[3];
    auto out = result({B, C}, {x});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) {
        T acc = 0;
        for (std::size_t i = 0; i < HW; ++i) acc += x->v[(b * C + c) * HW + i];
        out->v[b * C + c] = acc / static_cast<T>(HW);
      }
    if (out->requires_grad) {
      tape_.push_back([=]() {
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t c = 0; c < C; ++c) {
            const T gv = out->g[b * C + c] / static_cast<T>(HW);
            for (std::size_t i = 0; i < HW; ++i) x->g[(b * C + c) * HW + i] += gv;
          }
      });
    }
    return out;
  }

  TensorPtr<T> reshape(const TensorPtr<T>& x, Shape shape) {
    if (numel(shape) != x->size())
      throw ShapeError("reshape " + shape_str(x->shape) + " -> " +
                       shape_str(shape) + " changes element count");
    auto out = result(std::move(shape), {x});
    out->v = x->v;
    if (out->requires_grad) {
      tape_.push_back([=]() {
        for (std::size_t i = 0; i < x->size(); ++i) x->g[i] += out->g[i];
      });
    }
    return out;
  }

  TensorPtr<T> flatten(const TensorPtr<T>& x) {
    std::size_t rest = x->size() / x->shape[0];
    return reshape(x, {x->shape[0], rest});
  }

  TensorPtr<T> transpose2d(const TensorPtr<T>& x) {
    if (x->shape.size() != 2) throw ShapeError("transpose2d expects 2-d");
    const std::size_t M = x->shape[0], N = x->shape[1];
    auto out = result({N, M}, {x});
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < N; ++j) out->v[j * M + i] = x->v[i * N + j];
    if (out->requires_grad) {
      tape_.push_back([=]() {
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t j = 0; j < N; ++j) x->g[i * N + j] += out->g[j * M + i];
      });
    }
    return out;
  }

  TensorPtr<T> mse_loss(const TensorPtr<T>& pred, const TensorPtr<T>& target) {
    if (pred->shape != target->shape)
      throw ShapeError("mse_loss shape mismatch " + shape_str(pred->shape) +
                       " vs " + shape_str(target->shape));
    const std::size_t n = pred->size();
    auto out = result({}, {pred, target});
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const T d = pred->v[i] - target->v[i];
      acc += d * d;
    }
    out->v[0] = acc / static_cast<T>(n);
    if (out->requires_grad) {
      tape_.push_back([=]() {
        const T gv = out->g[0] * T(2) / static_cast<T>(n);
        for (std::size_t i = 0; i < n; ++i) {
          const T d = pred->v[i] - target->v[i];
          if (pred->requires_grad) pred->g[i] += gv * d;
          if (target->requires_grad) target->g[i] -= gv * d;
        }
      });
    }
    return out;
  }

  TensorPtr<T> sum(const TensorPtr<T>& x) {
    auto out = result({}, {x});
    out->v[0] = std::accumulate(x->v.begin(), x->v.end(), T(0));
    if (out->requires_grad) {
      tape_.push_back([=]() {
        for (std::size_t i = 0; i < x->size(); ++i) x->g[i] += out->g[0];
      });
    }
    return out;
  }

  // Seeds the scalar loss with 1 and replays adjoints in reverse execution
  // order. Leaf gradients accumulate until explicitly zeroed; graph-owned
  // intermediates are reset per pass so repeated backwards add exactly one
  // contribution each.
  void backward(const TensorPtr<T>& loss) {
    if (numel(loss->shape) != 1)
      throw ContractViolation("backward requires a scalar loss");
    if (!loss->requires_grad)
      throw ContractViolation("backward on a tensor with no gradient path");
    for (const auto& t : owned_)
      if (t->requires_grad) std::fill(t->g.begin(), t->g.end(), T(0));
    loss->g[0] = T(1);
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
  }

  void clear() {
    tape_.clear();
    owned_.clear();
  }

  std::size_t tape_size() const { return tape_.size(); }

 private:
  TensorPtr<T> result(Shape shape, std::initializer_list<TensorPtr<T>> inputs) {
    bool rg = false;
    for (const auto& in : inputs)
      if (in && in->requires_grad) rg = true;
    auto out = make_tensor<T>(std::move(shape), rg);
    if (rg) owned_.push_back(out);
    return out;
  }

  static Shape pad_shape(const Shape& s, std::size_t nd) {
    Shape out(nd, 1);
    std::copy(s.begin(), s.end(), out.begin() + (nd - s.size()));
    return out;
  }

  static std::vector<std::size_t> broadcast_strides(const Shape& s,
                                                    const Shape& out) {
    std::vector<std::size_t> str(s.size());
    std::size_t acc = 1;
    for (std::size_t d = s.size(); d-- > 0;) {
      str[d] = (s[d] == 1 && out[d] != 1) ? 0 : acc;
      acc *= s[d];
    }
    return str;
  }

  static void inc_coord(std::vector<std::size_t>& c, const Shape& s) {
    for (std::size_t d = s.size(); d-- > 0;) {
      if (++c[d] < s[d]) return;
      c[d] = 0;
    }
  }

  std::vector<std::function<void()>> tape_;
  std::vector<TensorPtr<T>> owned_;
};

// Plain SGD: p <- p - lr * grad(p).
template <class T>
void sgd_step(std::span<const TensorPtr<T>> params, T lr) {
  for (const auto& p : params) {
    if (!p->requires_grad || p->g.size() != p->v.size())
      throw ContractViolation("sgd_step on a parameter without gradients");
    for (std::size_t i = 0; i < p->size(); ++i) p->v[i] -= lr * p->g[i];
  }
}

template <class T>
void sgd_step(const std::vector<TensorPtr<T>>& params, T lr) {
  sgd_step(std::span<const TensorPtr<T>>(params), lr);
}

template <class T>
void zero_grads(const std::vector<TensorPtr<T>>& params) {
  for (const auto& p : params) p->zero_grad();
}

// He initialization for relu networks: N(0, sqrt(2/fan_in)).
template <class T>
void he_init(const TensorPtr<T>& w, std::size_t fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& x : w->v) x = static_cast<T>(rng.normal(0.0, stddev));
}

}  // namespace nc::ad

#endif
