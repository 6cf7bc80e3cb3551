#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "depthgan/conv.hpp"
#include "depthgan/tensor.hpp"

namespace depthgan {

struct Var {
  int i = -1;
};

// Reverse-mode autodiff tape. A step builds one graph, calls backward() once
// on a scalar root, then throws the graph away. Parameter leaves are bound to
// external value/grad tensors so optimizers see accumulated gradients in
// place; callers zero those sinks before backward. Gradients are only
// computed along paths that end in a trainable leaf, so e.g. discriminator
// weight gradients cost nothing during a generator update.
template <typename T>
class Graph {
 public:
  bool debug_checks = false;

  const Tensor<T>& v(Var x) const { return vref(x.i); }
  T scalar(Var x) const {
    const Tensor<T>& t = vref(x.i);
    if (t.numel() != 1) throw ShapeError("scalar() on tensor of shape " + t.shape_str());
    return t.v[0];
  }

  Var constant(Tensor<T> val) {
    Node n;
    n.val = std::move(val);
    return push(std::move(n), "constant");
  }

  Var param(const Tensor<T>& value, Tensor<T>* grad_sink, bool trainable) {
    if (trainable && !grad_sink) throw ShapeError("trainable param leaf needs a grad sink");
    Node n;
    n.ext_val = &value;
    n.ext_grad = trainable ? grad_sink : nullptr;
    n.needs_grad = trainable;
    return push(std::move(n), "param");
  }

  // ---- elementwise / structural ops ----

  Var relu(Var x) {
    Tensor<T> out = vref(x.i);
    for (T& v : out.v) v = v > T(0) ? v : T(0);
    return unary(x, std::move(out), "relu", [](Graph& g, int xi, const Tensor<T>& y, const Tensor<T>& dy) {
      Tensor<T>* dx = g.gslot(xi);
      if (!dx) return;
      for (std::int64_t i = 0; i < dy.numel(); ++i)
        if (y[i] > T(0)) (*dx)[i] += dy[i];
    });
  }

  Var leaky_relu(Var x, T slope) {
    Tensor<T> out = vref(x.i);
    for (T& v : out.v) v = v > T(0) ? v : slope * v;
    return unary(x, std::move(out), "leaky_relu",
                 [slope](Graph& g, int xi, const Tensor<T>& y, const Tensor<T>& dy) {
                   Tensor<T>* dx = g.gslot(xi);
                   if (!dx) return;
                   for (std::int64_t i = 0; i < dy.numel(); ++i)
                     (*dx)[i] += y[i] > T(0) ? dy[i] : slope * dy[i];
                 });
  }

  Var tanh_act(Var x) {
    Tensor<T> out = vref(x.i);
    for (T& v : out.v) v = std::tanh(v);
    return unary(x, std::move(out), "tanh", [](Graph& g, int xi, const Tensor<T>& y, const Tensor<T>& dy) {
      Tensor<T>* dx = g.gslot(xi);
      if (!dx) return;
      for (std::int64_t i = 0; i < dy.numel(); ++i) (*dx)[i] += dy[i] * (T(1) - y[i] * y[i]);
    });
  }

  // Sigmoid clamped to [eps, 1-eps] so downstream logs are always finite and
  // scores sit strictly inside (0, 1) even when float saturates.
  Var sigmoid_clamped(Var x, T eps) {
    const Tensor<T>& xin = vref(x.i);
    Tensor<T> out(xin.shape);
    for (std::int64_t i = 0; i < xin.numel(); ++i) {
      T s = T(1) / (T(1) + std::exp(-xin[i]));
      out[i] = std::min(T(1) - eps, std::max(eps, s));
    }
    return unary(x, std::move(out), "sigmoid", [](Graph& g, int xi, const Tensor<T>& y, const Tensor<T>& dy) {
      Tensor<T>* dx = g.gslot(xi);
      if (!dx) return;
      for (std::int64_t i = 0; i < dy.numel(); ++i) (*dx)[i] += dy[i] * y[i] * (T(1) - y[i]);
    });
  }

  Var add(Var a, Var b) {
    const Tensor<T>& ta = vref(a.i);
    const Tensor<T>& tb = vref(b.i);
    require_same_shape(ta, tb, "add");
    Tensor<T> out(ta.shape);
    for (std::int64_t i = 0; i < ta.numel(); ++i) out[i] = ta[i] + tb[i];
    Node n;
    n.val = std::move(out);
    n.parents = {a.i, b.i};
    n.needs_grad = needs(a.i) || needs(b.i);
    n.back = [ai = a.i, bi = b.i](Graph& g, int self) {
      const Tensor<T>& dy = g.nodes_[self].grad;
      for (int pi : {ai, bi})
        if (Tensor<T>* dp = g.gslot(pi))
          for (std::int64_t i = 0; i < dy.numel(); ++i) (*dp)[i] += dy[i];
    };
    return push(std::move(n), "add");
  }

  Var grad_scale(Var x, T s) {
    Tensor<T> out = vref(x.i);
    return unary(x, std::move(out), "grad_scale",
                 [s](Graph& g, int xi, const Tensor<T>&, const Tensor<T>& dy) {
                   Tensor<T>* dx = g.gslot(xi);
                   if (!dx) return;
                   for (std::int64_t i = 0; i < dy.numel(); ++i) (*dx)[i] += s * dy[i];
                 });
  }

  Var detach(Var x) { return constant(vref(x.i)); }

  Var reshape(Var x, std::vector<int> shape) {
    const Tensor<T>& xin = vref(x.i);
    Tensor<T> out(shape);
    if (out.numel() != xin.numel())
      throw ShapeError("reshape numel mismatch " + xin.shape_str() + " -> " + out.shape_str());
    out.v = xin.v;
    return unary(x, std::move(out), "reshape",
                 [](Graph& g, int xi, const Tensor<T>&, const Tensor<T>& dy) {
                   Tensor<T>* dx = g.gslot(xi);
                   if (!dx) return;
                   for (std::int64_t i = 0; i < dy.numel(); ++i) (*dx)[i] += dy[i];
                 });
  }

  Var concat_channels(Var a, Var b) {
    const Tensor<T>& ta = vref(a.i);
    const Tensor<T>& tb = vref(b.i);
    if (ta.rank() != 4 || tb.rank() != 4 || ta.dim(0) != tb.dim(0) || ta.dim(2) != tb.dim(2) ||
        ta.dim(3) != tb.dim(3))
      throw ShapeError("concat_channels: incompatible " + ta.shape_str() + " vs " + tb.shape_str());
    int B = ta.dim(0), Ca = ta.dim(1), Cb = tb.dim(1), H = ta.dim(2), W = ta.dim(3);
    Tensor<T> out({B, Ca + Cb, H, W});
    std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int n = 0; n < B; ++n) {
      std::copy_n(ta.data() + static_cast<std::size_t>(n) * Ca * plane, Ca * plane,
                  out.data() + static_cast<std::size_t>(n) * (Ca + Cb) * plane);
      std::copy_n(tb.data() + static_cast<std::size_t>(n) * Cb * plane, Cb * plane,
                  out.data() + (static_cast<std::size_t>(n) * (Ca + Cb) + Ca) * plane);
    }
    Node n;
    n.val = std::move(out);
    n.parents = {a.i, b.i};
    n.needs_grad = needs(a.i) || needs(b.i);
    n.back = [ai = a.i, bi = b.i, B, Ca, Cb, plane](Graph& g, int self) {
      const Tensor<T>& dy = g.nodes_[self].grad;
      if (Tensor<T>* da = g.gslot(ai))
        for (int n2 = 0; n2 < B; ++n2)
          for (std::size_t i = 0; i < Ca * plane; ++i)
            da->v[static_cast<std::size_t>(n2) * Ca * plane + i] +=
                dy.v[static_cast<std::size_t>(n2) * (Ca + Cb) * plane + i];
      if (Tensor<T>* db = g.gslot(bi))
        for (int n2 = 0; n2 < B; ++n2)
          for (std::size_t i = 0; i < Cb * plane; ++i)
            db->v[static_cast<std::size_t>(n2) * Cb * plane + i] +=
                dy.v[(static_cast<std::size_t>(n2) * (Ca + Cb) + Ca) * plane + i];
    };
    return push(std::move(n), "concat_channels");
  }

  Var replicate_channel(Var x, int copies) {
    const Tensor<T>& xin = vref(x.i);
    if (xin.rank() != 4 || xin.dim(1) != 1)
      throw ShapeError("replicate_channel expects [B,1,H,W], got " + xin.shape_str());
    int B = xin.dim(0), H = xin.dim(2), W = xin.dim(3);
    Tensor<T> out({B, copies, H, W});
    std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int n = 0; n < B; ++n)
      for (int c = 0; c < copies; ++c)
        std::copy_n(xin.data() + static_cast<std::size_t>(n) * plane, plane,
                    out.data() + (static_cast<std::size_t>(n) * copies + c) * plane);
    return unary(x, std::move(out), "replicate_channel",
                 [copies, B, plane](Graph& g, int xi, const Tensor<T>&, const Tensor<T>& dy) {
                   Tensor<T>* dx = g.gslot(xi);
                   if (!dx) return;
                   for (int n2 = 0; n2 < B; ++n2)
                     for (int c = 0; c < copies; ++c)
                       for (std::size_t i = 0; i < plane; ++i)
                         dx->v[static_cast<std::size_t>(n2) * plane + i] +=
                             dy.v[(static_cast<std::size_t>(n2) * copies + c) * plane + i];
                 });
  }

  // ---- convolution / normalization ----

  Var conv2d(Var x, Var w, Var b, int stride, int pad) {
    const Tensor<T>& xin = vref(x.i);
    const Tensor<T>& wt = vref(w.i);
    const Tensor<T>& bt = vref(b.i);
    if (xin.rank() != 4 || wt.rank() != 4) throw ShapeError("conv2d expects rank-4 x and w");
    if (xin.dim(1) != wt.dim(1))
      throw ShapeError("conv2d channel mismatch: x " + xin.shape_str() + " w " + wt.shape_str());
    require_shape(bt, {wt.dim(0)}, "conv2d bias");
    int Ho = conv_out_dim(xin.dim(2), wt.dim(2), stride, pad);
    int Wo = conv_out_dim(xin.dim(3), wt.dim(3), stride, pad);
    Tensor<T> out({xin.dim(0), wt.dim(0), Ho, Wo});
    conv2d_fwd(xin, wt, bt.data(), stride, pad, out, colbuf_);
    Node n;
    n.val = std::move(out);
    n.parents = {x.i, w.i, b.i};
    n.needs_grad = needs(x.i) || needs(w.i) || needs(b.i);
    n.back = [xi = x.i, wi = w.i, bi = b.i, stride, pad](Graph& g, int self) {
      const Tensor<T>& dy = g.nodes_[self].grad;
      Tensor<T>* dx = g.gslot(xi);
      Tensor<T>* dw = g.gslot(wi);
      Tensor<T>* db = g.gslot(bi);
      if (!dx && !dw && !db) return;
      conv2d_bwd(g.vref(xi), g.vref(wi), dy, stride, pad, dx, dw, db ? db->data() : nullptr,
                 g.colbuf_);
    };
    return push(std::move(n), "conv2d");
  }

  Var conv_transpose2d(Var x, Var w, Var b, int stride, int pad) {
    const Tensor<T>& xin = vref(x.i);
    const Tensor<T>& wt = vref(w.i);
    const Tensor<T>& bt = vref(b.i);
    if (xin.rank() != 4 || wt.rank() != 4) throw ShapeError("conv_transpose2d expects rank-4 x and w");
    if (xin.dim(1) != wt.dim(0))
      throw ShapeError("conv_transpose2d channel mismatch: x " + xin.shape_str() + " w " +
                       wt.shape_str());
    require_shape(bt, {wt.dim(1)}, "conv_transpose2d bias");
    int Ho = convT_out_dim(xin.dim(2), wt.dim(2), stride, pad);
    int Wo = convT_out_dim(xin.dim(3), wt.dim(3), stride, pad);
    Tensor<T> out({xin.dim(0), wt.dim(1), Ho, Wo});
    convT2d_fwd(xin, wt, bt.data(), stride, pad, out, colbuf_);
    Node n;
    n.val = std::move(out);
    n.parents = {x.i, w.i, b.i};
    n.needs_grad = needs(x.i) || needs(w.i) || needs(b.i);
    n.back = [xi = x.i, wi = w.i, bi = b.i, stride, pad](Graph& g, int self) {
      const Tensor<T>& dy = g.nodes_[self].grad;
      Tensor<T>* dx = g.gslot(xi);
      Tensor<T>* dw = g.gslot(wi);
      Tensor<T>* db = g.gslot(bi);
      if (!dx && !dw && !db) return;
      convT2d_bwd(g.vref(xi), g.vref(wi), dy, stride, pad, dx, dw, db ? db->data() : nullptr,
                  g.colbuf_);
    };
    return push(std::move(n), "conv_transpose2d");
  }

  Var instance_norm(Var x, Var gamma, Var beta, T eps = T(1e-5)) {
    const Tensor<T>& xin = vref(x.i);
    if (xin.rank() != 4) throw ShapeError("instance_norm expects rank-4 input");
    int B = xin.dim(0), C = xin.dim(1), H = xin.dim(2), W = xin.dim(3);
    require_shape(vref(gamma.i), {C}, "instance_norm gamma");
    require_shape(vref(beta.i), {C}, "instance_norm beta");
    const Tensor<T>& gm = vref(gamma.i);
    const Tensor<T>& bt = vref(beta.i);
    std::int64_t hw = static_cast<std::int64_t>(H) * W;
    std::vector<T> mu(static_cast<std::size_t>(B) * C), istd(static_cast<std::size_t>(B) * C);
    Tensor<T> out(xin.shape);
    for (int n = 0; n < B; ++n)
      for (int c = 0; c < C; ++c) {
        const T* p = xin.data() + (static_cast<std::size_t>(n) * C + c) * hw;
        double m = 0.0;
        for (std::int64_t i = 0; i < hw; ++i) m += p[i];
        m /= static_cast<double>(hw);
        double var = 0.0;
        for (std::int64_t i = 0; i < hw; ++i) {
          double d = p[i] - m;
          var += d * d;
        }
        var /= static_cast<double>(hw);
        T is = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
        mu[static_cast<std::size_t>(n) * C + c] = static_cast<T>(m);
        istd[static_cast<std::size_t>(n) * C + c] = is;
        T* o = out.data() + (static_cast<std::size_t>(n) * C + c) * hw;
        for (std::int64_t i = 0; i < hw; ++i)
          o[i] = gm[c] * (p[i] - static_cast<T>(m)) * is + bt[c];
      }
    Node n;
    n.val = std::move(out);
    n.parents = {x.i, gamma.i, beta.i};
    n.needs_grad = needs(x.i) || needs(gamma.i) || needs(beta.i);
    n.back = [xi = x.i, gi = gamma.i, bi = beta.i, B, C, hw, mu = std::move(mu),
              istd = std::move(istd)](Graph& g, int self) {
      const Tensor<T>& dy = g.nodes_[self].grad;
      const Tensor<T>& xv = g.vref(xi);
      const Tensor<T>& gv = g.vref(gi);
      Tensor<T>* dx = g.gslot(xi);
      Tensor<T>* dg = g.gslot(gi);
      Tensor<T>* db = g.gslot(bi);
      for (int n2 = 0; n2 < B; ++n2)
        for (int c = 0; c < C; ++c) {
          std::size_t base = (static_cast<std::size_t>(n2) * C + c) * hw;
          T m = mu[static_cast<std::size_t>(n2) * C + c];
          T is = istd[static_cast<std::size_t>(n2) * C + c];
          const T* xp = xv.data() + base;
          const T* dyp = dy.data() + base;
          if (db) {
            double s = 0.0;
            for (std::int64_t i = 0; i < hw; ++i) s += dyp[i];
            (*db)[c] += static_cast<T>(s);
          }
          if (dg) {
            double s = 0.0;
            for (std::int64_t i = 0; i < hw; ++i) s += dyp[i] * (xp[i] - m) * is;
            (*dg)[c] += static_cast<T>(s);
          }
          if (dx) {
            double m1 = 0.0, m2 = 0.0;
            for (std::int64_t i = 0; i < hw; ++i) {
              T xh = (xp[i] - m) * is;
              T dxh = dyp[i] * gv[c];
              m1 += dxh;
              m2 += static_cast<double>(dxh) * xh;
            }
            m1 /= static_cast<double>(hw);
            m2 /= static_cast<double>(hw);
            T* dxp = dx->data() + base;
            for (std::int64_t i = 0; i < hw; ++i) {
              T xh = (xp[i] - m) * is;
              T dxh = dyp[i] * gv[c];
              dxp[i] += is * (dxh - static_cast<T>(m1) - xh * static_cast<T>(m2));
            }
          }
        }
    };
    return push(std::move(n), "instance_norm");
  }

  // ---- reductions / losses ----

  Var mean_all(Var x) {
    const Tensor<T>& xin = vref(x.i);
    double s = 0.0;
    for (T v : xin.v) s += v;
    std::int64_t N = xin.numel();
    Tensor<T> out({1});
    out[0] = static_cast<T>(s / static_cast<double>(N));
    return unary(x, std::move(out), "mean_all",
                 [N](Graph& g, int xi, const Tensor<T>&, const Tensor<T>& dy) {
                   Tensor<T>* dx = g.gslot(xi);
                   if (!dx) return;
                   T gpn = dy[0] / static_cast<T>(N);
                   for (T& v : dx->v) v += gpn;
                 });
  }

  // Spatial mean: [B,C,H,W] -> [B,C].
  Var mean_hw(Var x) {
    const Tensor<T>& xin = vref(x.i);
    if (xin.rank() != 4) throw ShapeError("mean_hw expects rank-4 input");
    int B = xin.dim(0), C = xin.dim(1);
    std::int64_t hw = static_cast<std::int64_t>(xin.dim(2)) * xin.dim(3);
    Tensor<T> out({B, C});
    for (int n = 0; n < B; ++n)
      for (int c = 0; c < C; ++c) {
        const T* p = xin.data() + (static_cast<std::size_t>(n) * C + c) * hw;
        double s = 0.0;
        for (std::int64_t i = 0; i < hw; ++i) s += p[i];
        out[static_cast<std::size_t>(n) * C + c] = static_cast<T>(s / static_cast<double>(hw));
      }
    return unary(x, std::move(out), "mean_hw",
                 [B, C, hw](Graph& g, int xi, const Tensor<T>&, const Tensor<T>& dy) {
                   Tensor<T>* dx = g.gslot(xi);
                   if (!dx) return;
                   for (int n2 = 0; n2 < B; ++n2)
                     for (int c = 0; c < C; ++c) {
                       T gpn = dy[static_cast<std::size_t>(n2) * C + c] / static_cast<T>(hw);
                       T* p = dx->data() + (static_cast<std::size_t>(n2) * C + c) * hw;
                       for (std::int64_t i = 0; i < hw; ++i) p[i] += gpn;
                     }
                 });
  }

  Var l1_mean(Var a, Var b) {
    const Tensor<T>& ta = vref(a.i);
    const Tensor<T>& tb = vref(b.i);
    require_same_shape(ta, tb, "l1_mean");
    std::int64_t N = ta.numel();
    double s = 0.0;
    for (std::int64_t i = 0; i < N; ++i) s += std::abs(static_cast<double>(ta[i]) - tb[i]);
    Tensor<T> out({1});
    out[0] = static_cast<T>(s / static_cast<double>(N));
    Node n;
    n.val = std::move(out);
    n.parents = {a.i, b.i};
    n.needs_grad = needs(a.i) || needs(b.i);
    n.back = [ai = a.i, bi = b.i, N](Graph& g, int self) {
      T gy = g.nodes_[self].grad[0] / static_cast<T>(N);
      const Tensor<T>& ta2 = g.vref(ai);
      const Tensor<T>& tb2 = g.vref(bi);
      Tensor<T>* da = g.gslot(ai);
      Tensor<T>* db = g.gslot(bi);
      for (std::int64_t i = 0; i < N; ++i) {
        T d = ta2[i] - tb2[i];
        T sg = d > T(0) ? gy : (d < T(0) ? -gy : T(0));
        if (da) (*da)[i] += sg;
        if (db) (*db)[i] -= sg;
      }
    };
    return push(std::move(n), "l1_mean");
  }

  // -mean(log s). Callers feed clamped sigmoid scores, so s > 0 always.
  Var neg_mean_log(Var s) {
    const Tensor<T>& ts = vref(s.i);
    std::int64_t N = ts.numel();
    double acc = 0.0;
    for (T v : ts.v) acc += std::log(static_cast<double>(v));
    Tensor<T> out({1});
    out[0] = static_cast<T>(-acc / static_cast<double>(N));
    return unary(s, std::move(out), "neg_mean_log",
                 [N](Graph& g, int si, const Tensor<T>&, const Tensor<T>& dy) {
                   Tensor<T>* ds = g.gslot(si);
                   if (!ds) return;
                   const Tensor<T>& sv = g.vref(si);
                   T gy = dy[0] / static_cast<T>(N);
                   for (std::int64_t i = 0; i < sv.numel(); ++i) (*ds)[i] -= gy / sv[i];
                 });
  }

  // -mean(log(1-s)).
  Var neg_mean_log1m(Var s) {
    const Tensor<T>& ts = vref(s.i);
    std::int64_t N = ts.numel();
    double acc = 0.0;
    for (T v : ts.v) acc += std::log(1.0 - static_cast<double>(v));
    Tensor<T> out({1});
    out[0] = static_cast<T>(-acc / static_cast<double>(N));
    return unary(s, std::move(out), "neg_mean_log1m",
                 [N](Graph& g, int si, const Tensor<T>&, const Tensor<T>& dy) {
                   Tensor<T>* ds = g.gslot(si);
                   if (!ds) return;
                   const Tensor<T>& sv = g.vref(si);
                   T gy = dy[0] / static_cast<T>(N);
                   for (std::int64_t i = 0; i < sv.numel(); ++i) (*ds)[i] += gy / (T(1) - sv[i]);
                 });
  }

  // Mean softmax cross-entropy over a [B,K] logit matrix.
  Var cross_entropy_mean(Var logits, std::vector<int> targets) {
    const Tensor<T>& z = vref(logits.i);
    if (z.rank() != 2) throw ShapeError("cross_entropy_mean expects [B,K] logits");
    int B = z.dim(0), K = z.dim(1);
    if (static_cast<int>(targets.size()) != B)
      throw ShapeError("cross_entropy_mean: targets size != batch");
    for (int t : targets)
      if (t < 0 || t >= K) throw ValidationError("class index out of range [0," + std::to_string(K) + ")");
    double acc = 0.0;
    for (int n = 0; n < B; ++n) {
      const T* row = z.data() + static_cast<std::size_t>(n) * K;
      acc += row_lse(row, K) - row[targets[static_cast<std::size_t>(n)]];
    }
    Tensor<T> out({1});
    out[0] = static_cast<T>(acc / B);
    return unary(logits, std::move(out), "cross_entropy_mean",
                 [B, K, targets = std::move(targets)](Graph& g, int zi, const Tensor<T>&,
                                                      const Tensor<T>& dy) {
                   Tensor<T>* dz = g.gslot(zi);
                   if (!dz) return;
                   const Tensor<T>& zv = g.vref(zi);
                   T gy = dy[0] / static_cast<T>(B);
                   std::vector<double> p(static_cast<std::size_t>(K));
                   for (int n = 0; n < B; ++n) {
                     const T* row = zv.data() + static_cast<std::size_t>(n) * K;
                     row_softmax(row, K, p.data());
                     T* drow = dz->data() + static_cast<std::size_t>(n) * K;
                     for (int k2 = 0; k2 < K; ++k2) {
                       double oh = (k2 == targets[static_cast<std::size_t>(n)]) ? 1.0 : 0.0;
                       drow[k2] += gy * static_cast<T>(p[static_cast<std::size_t>(k2)] - oh);
                     }
                   }
                 });
  }

  // Mean softmax entropy over a [B,K] logit matrix.
  Var entropy_mean(Var logits) {
    const Tensor<T>& z = vref(logits.i);
    if (z.rank() != 2) throw ShapeError("entropy_mean expects [B,K] logits");
    int B = z.dim(0), K = z.dim(1);
    double acc = 0.0;
    std::vector<double> p(static_cast<std::size_t>(K));
    for (int n = 0; n < B; ++n) {
      const T* row = z.data() + static_cast<std::size_t>(n) * K;
      double lse = row_lse(row, K);
      double h = 0.0;
      row_softmax(row, K, p.data());
      for (int k2 = 0; k2 < K; ++k2) h -= p[static_cast<std::size_t>(k2)] * (row[k2] - lse);
      acc += h;
    }
    Tensor<T> out({1});
    out[0] = static_cast<T>(acc / B);
    return unary(logits, std::move(out), "entropy_mean",
                 [B, K](Graph& g, int zi, const Tensor<T>&, const Tensor<T>& dy) {
                   Tensor<T>* dz = g.gslot(zi);
                   if (!dz) return;
                   const Tensor<T>& zv = g.vref(zi);
                   T gy = dy[0] / static_cast<T>(B);
                   std::vector<double> p(static_cast<std::size_t>(K));
                   for (int n = 0; n < B; ++n) {
                     const T* row = zv.data() + static_cast<std::size_t>(n) * K;
                     double lse = row_lse(row, K);
                     row_softmax(row, K, p.data());
                     double hrow = 0.0;
                     for (int k2 = 0; k2 < K; ++k2)
                       hrow -= p[static_cast<std::size_t>(k2)] * (row[k2] - lse);
                     T* drow = dz->data() + static_cast<std::size_t>(n) * K;
                     for (int k2 = 0; k2 < K; ++k2) {
                       double lp = row[k2] - lse;
                       drow[k2] += gy * static_cast<T>(-p[static_cast<std::size_t>(k2)] * (lp + hrow));
                     }
                   }
                 });
  }

  // Weighted sum of scalar nodes.
  Var wsum(std::vector<std::pair<T, Var>> terms) {
    if (terms.empty()) throw ShapeError("wsum needs at least one term");
    double acc = 0.0;
    std::vector<std::pair<T, int>> ts;
    ts.reserve(terms.size());
    bool ng = false;
    for (auto& [w, v] : terms) {
      acc += static_cast<double>(w) * scalar(v);
      ts.emplace_back(w, v.i);
      ng = ng || needs(v.i);
    }
    Tensor<T> out({1});
    out[0] = static_cast<T>(acc);
    Node n;
    n.val = std::move(out);
    for (auto& [w, i] : ts) n.parents.push_back(i);
    n.needs_grad = ng;
    n.back = [ts = std::move(ts)](Graph& g, int self) {
      T gy = g.nodes_[self].grad[0];
      for (auto& [w, i] : ts)
        if (Tensor<T>* dp = g.gslot(i)) (*dp)[0] += w * gy;
    };
    return push(std::move(n), "wsum");
  }

  // ---- backward ----

  void backward(Var root) {
    if (backward_done_) throw Error("graph backward called twice");
    backward_done_ = true;
    Node& r = nodes_[static_cast<std::size_t>(root.i)];
    const Tensor<T>& rv = vref(root.i);
    if (rv.numel() != 1) throw ShapeError("backward root must be scalar, got " + rv.shape_str());
    if (!r.needs_grad) return;
    if (Tensor<T>* gr = gslot(root.i)) (*gr)[0] += T(1);
    for (int i = root.i; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.has_grad && n.back) n.back(*this, i);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> val;
    const Tensor<T>* ext_val = nullptr;
    Tensor<T>* ext_grad = nullptr;
    Tensor<T> grad;
    bool needs_grad = false;
    bool has_grad = false;
    std::vector<int> parents;
    std::function<void(Graph&, int)> back;
  };

  std::vector<Node> nodes_;
  std::vector<T> colbuf_;
  bool backward_done_ = false;

  const Tensor<T>& vref(int i) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    return n.ext_val ? *n.ext_val : n.val;
  }

  bool needs(int i) const { return nodes_[static_cast<std::size_t>(i)].needs_grad; }

  // Gradient accumulation slot for node i, or nullptr if no gradient is
  // wanted there. Allocates internal buffers on first touch; parameter
  // leaves resolve to their external sink (caller pre-zeroes those).
  Tensor<T>* gslot(int i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad) return nullptr;
    n.has_grad = true;
    if (n.ext_grad) return n.ext_grad;
    if (n.grad.v.empty()) n.grad = Tensor<T>(vref(i).shape);
    return &n.grad;
  }

  Var push(Node n, const char* opname) {
    if (debug_checks) {
      const Tensor<T>& t = n.ext_val ? *n.ext_val : n.val;
      if (!t.all_finite()) throw NumericError(std::string("non-finite value out of op ") + opname);
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  template <typename F>
  Var unary(Var x, Tensor<T> out, const char* opname, F&& bwd) {
    Node n;
    n.val = std::move(out);
    n.parents = {x.i};
    n.needs_grad = needs(x.i);
    n.back = [xi = x.i, bwd = std::forward<F>(bwd)](Graph& g, int self) {
      bwd(g, xi, g.vref(self), g.nodes_[static_cast<std::size_t>(self)].grad);
    };
    return push(std::move(n), opname);
  }

  static double row_lse(const T* row, int K) {
    T m = row[0];
    for (int k = 1; k < K; ++k) m = std::max(m, row[k]);
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += std::exp(static_cast<double>(row[k]) - m);
    return static_cast<double>(m) + std::log(s);
  }

  static void row_softmax(const T* row, int K, double* p) {
    T m = row[0];
    for (int k = 1; k < K; ++k) m = std::max(m, row[k]);
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      p[k] = std::exp(static_cast<double>(row[k]) - m);
      s += p[k];
    }
    for (int k = 0; k < K; ++k) p[k] /= s;
  }

  friend struct GraphTestAccess;
};

}  // namespace depthgan
