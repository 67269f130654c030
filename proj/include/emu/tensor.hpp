#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace emu::nn {

// Dense row-major tensor, double precision. The engine computes in double
// everywhere; files store f32 (see checkpoint.hpp / feature_store.hpp).
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(element_count(shape), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != element_count(shape)) throw std::invalid_argument("tensor: size/shape mismatch");
  }

  static size_t element_count(const std::vector<int>& s) {
    size_t n = 1;
    for (int e : s) {
      if (e <= 0) throw std::invalid_argument("tensor: non-positive extent");
      n *= static_cast<size_t>(e);
    }
    return n;
  }

  size_t size() const { return data.size(); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  void zero() { std::fill(data.begin(), data.end(), 0.0); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool operator==(const Tensor&) const = default;
};

inline void check_finite(const Tensor& t, const char* where) {
  for (double v : t.data)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(where) + ": non-finite input");
}

inline void check_2d(const Tensor& t, const char* where) {
  if (t.shape.size() != 2) throw std::invalid_argument(std::string(where) + ": expected rank-2 tensor");
}

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

// C = A(m,k) * B(k,n). ikj loop order so the inner loop vectorizes.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner extents differ");
  int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c({m, n});
  for (int i = 0; i < m; ++i) {
    const double* arow = a.data.data() + static_cast<size_t>(i) * k;
    double* crow = c.data.data() + static_cast<size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = b.data.data() + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

// dA += dC * B^T, dB += A^T * dC
inline void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& d_c, Tensor& d_a,
                            Tensor& d_b) {
  int m = a.rows(), k = a.cols(), n = b.cols();
  if (d_c.rows() != m || d_c.cols() != n) throw std::invalid_argument("matmul_backward: bad d_c shape");
  if (!d_a.same_shape(a) || !d_b.same_shape(b))
    throw std::invalid_argument("matmul_backward: accumulator shape mismatch");
  for (int i = 0; i < m; ++i) {
    const double* dcrow = d_c.data.data() + static_cast<size_t>(i) * n;
    const double* arow = a.data.data() + static_cast<size_t>(i) * k;
    double* darow = d_a.data.data() + static_cast<size_t>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
      const double* brow = b.data.data() + static_cast<size_t>(kk) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
      darow[kk] += acc;
      double av = arow[kk];
      if (av == 0.0) continue;
      double* dbrow = d_b.data.data() + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
    }
  }
}

// ---------------------------------------------------------------------------
// elementwise add
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
  Tensor c = a;
  for (size_t i = 0; i < c.size(); ++i) c.data[i] += b.data[i];
  return c;
}

inline void add_backward(const Tensor& d_c, Tensor& d_a, Tensor& d_b) {
  for (size_t i = 0; i < d_c.size(); ++i) {
    d_a.data[i] += d_c.data[i];
    d_b.data[i] += d_c.data[i];
  }
}

// y = x + row broadcast over rows of x; bias shape (1, n)
inline Tensor add_row(const Tensor& x, const Tensor& bias) {
  check_2d(x, "add_row");
  if (bias.shape.size() != 2 || bias.rows() != 1 || bias.cols() != x.cols())
    throw std::invalid_argument("add_row: bias must be (1, cols)");
  Tensor y = x;
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) y.at(i, j) += bias.at(0, j);
  return y;
}

inline void add_row_backward(const Tensor& d_y, Tensor& d_x, Tensor& d_bias) {
  for (int i = 0; i < d_y.rows(); ++i)
    for (int j = 0; j < d_y.cols(); ++j) {
      d_x.at(i, j) += d_y.at(i, j);
      d_bias.at(0, j) += d_y.at(i, j);
    }
}

// ---------------------------------------------------------------------------
// GELU (exact erf form)
// ---------------------------------------------------------------------------

inline double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

inline double gelu_grad_scalar(double x) {
  double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  return cdf + x * phi;
}

inline Tensor gelu(const Tensor& x) {
  check_finite(x, "gelu");
  Tensor y = x;
  for (double& v : y.data) v = gelu_scalar(v);
  return y;
}

inline void gelu_backward(const Tensor& x, const Tensor& d_y, Tensor& d_x) {
  for (size_t i = 0; i < x.size(); ++i) d_x.data[i] += d_y.data[i] * gelu_grad_scalar(x.data[i]);
}

// ---------------------------------------------------------------------------
// softmax over rows
// ---------------------------------------------------------------------------

inline Tensor softmax_rows(const Tensor& x) {
  check_2d(x, "softmax");
  Tensor y = x;
  for (int i = 0; i < x.rows(); ++i) {
    double mx = -HUGE_VAL;
    for (int j = 0; j < x.cols(); ++j) mx = std::max(mx, x.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < x.cols(); ++j) {
      double e = std::exp(x.at(i, j) - mx);
      y.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < x.cols(); ++j) y.at(i, j) /= sum;
  }
  return y;
}

// d_x += y * (d_y - sum_j d_y_j y_j), rowwise; y is the softmax output
inline void softmax_rows_backward(const Tensor& y, const Tensor& d_y, Tensor& d_x) {
  for (int i = 0; i < y.rows(); ++i) {
    double dot = 0.0;
    for (int j = 0; j < y.cols(); ++j) dot += d_y.at(i, j) * y.at(i, j);
    for (int j = 0; j < y.cols(); ++j) d_x.at(i, j) += y.at(i, j) * (d_y.at(i, j) - dot);
  }
}

// ---------------------------------------------------------------------------
// layer norm over rows (affine)
// ---------------------------------------------------------------------------

inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
  Tensor x_hat;               // normalized input
  std::vector<double> inv_std;  // per row
};

inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         LayerNormCache* cache = nullptr) {
  check_2d(x, "layer_norm");
  if (gamma.cols() != x.cols() || beta.cols() != x.cols())
    throw std::invalid_argument("layer_norm: affine shape mismatch");
  check_finite(x, "layer_norm");
  int n = x.cols();
  Tensor y({x.rows(), n});
  Tensor x_hat({x.rows(), n});
  std::vector<double> inv_std(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x.at(i, j);
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = x.at(i, j) - mean;
      var += d * d;
    }
    var /= n;
    double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[i] = is;
    for (int j = 0; j < n; ++j) {
      double xh = (x.at(i, j) - mean) * is;
      x_hat.at(i, j) = xh;
      y.at(i, j) = xh * gamma.at(0, j) + beta.at(0, j);
    }
  }
  if (cache) {
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

inline void layer_norm_backward(const LayerNormCache& cache, const Tensor& gamma, const Tensor& d_y,
                                Tensor& d_x, Tensor& d_gamma, Tensor& d_beta) {
  int n = d_y.cols();
  for (int i = 0; i < d_y.rows(); ++i) {
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (int j = 0; j < n; ++j) {
      double dxh = d_y.at(i, j) * gamma.at(0, j);
      mean_dxhat += dxh;
      mean_dxhat_xhat += dxh * cache.x_hat.at(i, j);
      d_gamma.at(0, j) += d_y.at(i, j) * cache.x_hat.at(i, j);
      d_beta.at(0, j) += d_y.at(i, j);
    }
    mean_dxhat /= n;
    mean_dxhat_xhat /= n;
    for (int j = 0; j < n; ++j) {
      double dxh = d_y.at(i, j) * gamma.at(0, j);
      d_x.at(i, j) += cache.inv_std[i] * (dxh - mean_dxhat - cache.x_hat.at(i, j) * mean_dxhat_xhat);
    }
  }
}

// ---------------------------------------------------------------------------
// cross entropy over selected positions
// ---------------------------------------------------------------------------

struct CrossEntropyResult {
  double loss = 0.0;
  Tensor d_logits;  // gradient of the mean NLL w.r.t. logits
};

// Mean negative log-likelihood of targets[i] at rows with mask[i] != 0.
inline CrossEntropyResult cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                                        const std::vector<uint8_t>& mask) {
  check_2d(logits, "cross_entropy");
  if (targets.size() != static_cast<size_t>(logits.rows()) || mask.size() != targets.size())
    throw std::invalid_argument("cross_entropy: targets/mask length mismatch");
  size_t supervised = 0;
  for (uint8_t m : mask)
    if (m) ++supervised;
  if (supervised == 0) throw std::invalid_argument("cross_entropy: no supervised positions");

  int v = logits.cols();
  CrossEntropyResult res;
  res.d_logits = Tensor({logits.rows(), v});
  double total = 0.0;
  for (int i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    int t = targets[i];
    if (t < 0 || t >= v) throw std::invalid_argument("cross_entropy: target id outside vocab");
    double mx = -HUGE_VAL;
    for (int j = 0; j < v; ++j) mx = std::max(mx, logits.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < v; ++j) sum += std::exp(logits.at(i, j) - mx);
    double lse = mx + std::log(sum);
    total += lse - logits.at(i, t);
    double inv = 1.0 / static_cast<double>(supervised);
    for (int j = 0; j < v; ++j)
      res.d_logits.at(i, j) = std::exp(logits.at(i, j) - lse) * inv;
    res.d_logits.at(i, t) -= inv;
  }
  res.loss = total / static_cast<double>(supervised);
  return res;
}

}  // namespace emu::nn
