#pragma once

#include <cblas.h>

#include <vector>

#include "depthgan/tensor.hpp"

namespace depthgan {

template <typename T>
void gemm(bool ta, bool tb, int m, int n, int k, T alpha, const T* a, const T* b, T beta, T* c) {
  int lda = ta ? m : k;
  int ldb = tb ? k : n;
  if constexpr (std::is_same_v<T, float>)
    cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n,
                k, alpha, a, lda, b, ldb, beta, c, n);
  else
    cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n,
                k, alpha, a, lda, b, ldb, beta, c, n);
}

// Unfold one image [C,H,W] into columns [C*k*k, Ho*Wo] for a k x k kernel.
template <typename T>
void im2col(const T* src, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo, T* col) {
  for (int c = 0; c < C; ++c) {
    const T* plane = src + static_cast<std::size_t>(c) * H * W;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        T* row = col + (static_cast<std::size_t>(c) * k * k + ki * k + kj) * Ho * Wo;
        for (int oh = 0; oh < Ho; ++oh) {
          int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= H) {
            for (int ow = 0; ow < Wo; ++ow) row[oh * Wo + ow] = T(0);
            continue;
          }
          const T* srow = plane + static_cast<std::size_t>(ih) * W;
          int iw = -pad + kj;
          for (int ow = 0; ow < Wo; ++ow, iw += stride)
            row[oh * Wo + ow] = (iw >= 0 && iw < W) ? srow[iw] : T(0);
        }
      }
    }
  }
}

// Scatter-add the inverse of im2col: col [C*k*k, Ho*Wo] back onto [C,H,W].
template <typename T>
void col2im_add(const T* col, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo,
                T* dst) {
  for (int c = 0; c < C; ++c) {
    T* plane = dst + static_cast<std::size_t>(c) * H * W;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const T* row = col + (static_cast<std::size_t>(c) * k * k + ki * k + kj) * Ho * Wo;
        for (int oh = 0; oh < Ho; ++oh) {
          int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= H) continue;
          T* drow = plane + static_cast<std::size_t>(ih) * W;
          int iw = -pad + kj;
          for (int ow = 0; ow < Wo; ++ow, iw += stride)
            if (iw >= 0 && iw < W) drow[iw] += row[oh * Wo + ow];
        }
      }
    }
  }
}

inline int conv_out_dim(int in, int k, int stride, int pad) {
  int out = (in + 2 * pad - k) / stride + 1;
  if (out <= 0) throw ShapeError("convolution output dimension would be non-positive");
  return out;
}

inline int convT_out_dim(int in, int k, int stride, int pad) {
  int out = (in - 1) * stride - 2 * pad + k;
  if (out <= 0) throw ShapeError("transposed convolution output dimension would be non-positive");
  return out;
}

// y = conv2d(x, w) + bias.  x [B,Cin,H,W], w [Cout,Cin,k,k], y [B,Cout,Ho,Wo].
template <typename T>
void conv2d_fwd(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int stride, int pad,
                Tensor<T>& y, std::vector<T>& colbuf) {
  int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  int M = w.dim(0), k = w.dim(2);
  int Ho = y.dim(2), Wo = y.dim(3);
  int K = C * k * k, N = Ho * Wo;
  colbuf.resize(static_cast<std::size_t>(K) * N);
  for (int b = 0; b < B; ++b) {
    const T* xb = x.data() + static_cast<std::size_t>(b) * C * H * W;
    T* yb = y.data() + static_cast<std::size_t>(b) * M * N;
    im2col(xb, C, H, W, k, stride, pad, Ho, Wo, colbuf.data());
    gemm<T>(false, false, M, N, K, T(1), w.data(), colbuf.data(), T(0), yb);
    if (bias)
      for (int m = 0; m < M; ++m)
        for (int i = 0; i < N; ++i) yb[static_cast<std::size_t>(m) * N + i] += bias[m];
  }
}

// Accumulates gradients: dx += conv backward data, dw += backward weights,
// db += per-channel sums. Any of dx/dw/db may be null.
template <typename T>
void conv2d_bwd(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, int stride, int pad,
                Tensor<T>* dx, Tensor<T>* dw, T* db, std::vector<T>& colbuf) {
  int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  int M = w.dim(0), k = w.dim(2);
  int Ho = dy.dim(2), Wo = dy.dim(3);
  int K = C * k * k, N = Ho * Wo;
  colbuf.resize(static_cast<std::size_t>(K) * N);
  std::vector<T> dcol;
  if (dx) dcol.resize(static_cast<std::size_t>(K) * N);
  for (int b = 0; b < B; ++b) {
    const T* xb = x.data() + static_cast<std::size_t>(b) * C * H * W;
    const T* dyb = dy.data() + static_cast<std::size_t>(b) * M * N;
    if (dw) {
      im2col(xb, C, H, W, k, stride, pad, Ho, Wo, colbuf.data());
      gemm<T>(false, true, M, K, N, T(1), dyb, colbuf.data(), T(1), dw->data());
    }
    if (dx) {
      gemm<T>(true, false, K, N, M, T(1), w.data(), dyb, T(0), dcol.data());
      col2im_add(dcol.data(), C, H, W, k, stride, pad, Ho, Wo,
                 dx->data() + static_cast<std::size_t>(b) * C * H * W);
    }
    if (db)
      for (int m = 0; m < M; ++m) {
        T s = T(0);
        for (int i = 0; i < N; ++i) s += dyb[static_cast<std::size_t>(m) * N + i];
        db[m] += s;
      }
  }
}

// Transposed convolution. x [B,Cin,H,W], w [Cin,Cout,k,k], y [B,Cout,Ho,Wo]
// with Ho = (H-1)*stride - 2*pad + k.
template <typename T>
void convT2d_fwd(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int stride, int pad,
                 Tensor<T>& y, std::vector<T>& colbuf) {
  int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  int M = w.dim(1), k = w.dim(2);
  int Ho = y.dim(2), Wo = y.dim(3);
  int KK = M * k * k, N = H * W;
  colbuf.resize(static_cast<std::size_t>(KK) * N);
  y.fill(T(0));
  for (int b = 0; b < B; ++b) {
    const T* xb = x.data() + static_cast<std::size_t>(b) * C * N;
    T* yb = y.data() + static_cast<std::size_t>(b) * M * Ho * Wo;
    gemm<T>(true, false, KK, N, C, T(1), w.data(), xb, T(0), colbuf.data());
    col2im_add(colbuf.data(), M, Ho, Wo, k, stride, pad, H, W, yb);
    if (bias)
      for (int m = 0; m < M; ++m)
        for (int i = 0; i < Ho * Wo; ++i) yb[static_cast<std::size_t>(m) * Ho * Wo + i] += bias[m];
  }
}

template <typename T>
void convT2d_bwd(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, int stride, int pad,
                 Tensor<T>* dx, Tensor<T>* dw, T* db, std::vector<T>& colbuf) {
  int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  int M = w.dim(1), k = w.dim(2);
  int Ho = dy.dim(2), Wo = dy.dim(3);
  int KK = M * k * k, N = H * W;
  colbuf.resize(static_cast<std::size_t>(KK) * N);
  for (int b = 0; b < B; ++b) {
    const T* xb = x.data() + static_cast<std::size_t>(b) * C * N;
    const T* dyb = dy.data() + static_cast<std::size_t>(b) * M * Ho * Wo;
    im2col(dyb, M, Ho, Wo, k, stride, pad, H, W, colbuf.data());
    if (dx)
      gemm<T>(false, false, C, N, KK, T(1), w.data(), colbuf.data(), T(1),
              dx->data() + static_cast<std::size_t>(b) * C * N);
    if (dw) gemm<T>(false, true, C, KK, N, T(1), xb, colbuf.data(), T(1), dw->data());
    if (db)
      for (int m = 0; m < M; ++m) {
        T s = T(0);
        for (int i = 0; i < Ho * Wo; ++i) s += dyb[static_cast<std::size_t>(m) * Ho * Wo + i];
        db[m] += s;
      }
  }
}

}  // namespace depthgan
