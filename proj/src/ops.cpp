#include "sgcn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgcn/errors.hpp"
#include "sgcn/log.hpp"

namespace sgcn::ad {

using detail::TensorImpl;

namespace {

using ImplPtr = std::shared_ptr<TensorImpl>;

// How the smaller operand of a binary op maps onto the larger one.
struct Broadcast {
  Shape out_shape;
  std::size_t a_period;  // a[i % a_period]
  std::size_t b_period;
};

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

Broadcast broadcast(const char* op, const Shape& a, const Shape& b) {
  if (a == b) return {a, numel(a), numel(b)};
  if (numel(b) == 1 || is_suffix(b, a)) return {a, numel(a), numel(b)};
  if (numel(a) == 1 || is_suffix(a, b)) return {b, numel(a), numel(b)};
  throw DimensionError(std::string(op) + ": cannot broadcast " + to_string(a) + " with " + to_string(b));
}

template <typename Forward, typename Derivative>
Tensor unary(const char* name, const Tensor& x, Forward f, Derivative df) {
  const auto& in = x.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  ImplPtr ix = x.impl();
  return record(name, x.shape(), std::move(out), {x}, [ix, df](const TensorImpl& o) {
    if (!ix->requires_grad) return;
    auto& g = ix->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * df(ix->data[i], o.data[i]);
  });
}

Shape batch_shape(const Shape& s) { return Shape(s.begin(), s.end() - 2); }

}  // namespace

Mask Mask::all(Shape shape, bool value) {
  Mask m;
  m.on.assign(numel(shape), value ? 1 : 0);
  m.shape = std::move(shape);
  return m;
}

Mask Mask::upper_triangular(std::size_t size) {
  Mask m = all({size, size}, false);
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = i; j < size; ++j) m.on[i * size + j] = 1;
  return m;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) throw DimensionError("matmul: operands need rank >= 2");
  const std::size_t m = sa[sa.size() - 2], k = sa.back();
  const std::size_t kb = sb[sb.size() - 2], n = sb.back();
  if (k != kb) {
    throw DimensionError("matmul: inner extents differ, " + to_string(sa) + " x " + to_string(sb));
  }
  Shape ba = batch_shape(sa), bb = batch_shape(sb);
  Shape out_batch;
  if (ba == bb || bb.empty()) {
    out_batch = ba;
  } else if (ba.empty()) {
    out_batch = bb;
  } else {
    throw DimensionError("matmul: batch extents differ, " + to_string(sa) + " x " + to_string(sb));
  }
  const std::size_t batches = numel(out_batch);
  const std::size_t a_stride = ba.empty() ? 0 : m * k;
  const std::size_t b_stride = bb.empty() ? 0 : k * n;

  Shape out_shape = out_batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<double> out(batches * m * n, 0.0);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t bi = 0; bi < batches; ++bi) {
    const double* A = pa + bi * a_stride;
    const double* B = pb + bi * b_stride;
    double* C = out.data() + bi * m * n;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = A[i * k + p];
        if (aip == 0.0) continue;
        const double* brow = B + p * n;
        double* crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }

  ImplPtr ia = a.impl(), ib = b.impl();
  return record("matmul", std::move(out_shape), std::move(out), {a, b},
                [ia, ib, batches, a_stride, b_stride, m, k, n](const TensorImpl& o) {
                  const double* G = o.grad.data();
                  if (ia->requires_grad) {
                    auto& ga = ia->ensure_grad();
                    for (std::size_t bi = 0; bi < batches; ++bi) {
                      const double* Gb = G + bi * m * n;
                      const double* B = ib->data.data() + bi * b_stride;
                      double* dA = ga.data() + bi * a_stride;
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                          double acc = 0.0;
                          for (std::size_t j = 0; j < n; ++j) acc += Gb[i * n + j] * B[p * n + j];
                          dA[i * k + p] += acc;
                        }
                    }
                  }
                  if (ib->requires_grad) {
                    auto& gb = ib->ensure_grad();
                    for (std::size_t bi = 0; bi < batches; ++bi) {
                      const double* Gb = G + bi * m * n;
                      const double* A = ia->data.data() + bi * a_stride;
                      double* dB = gb.data() + bi * b_stride;
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                          const double aip = A[i * k + p];
                          if (aip == 0.0) continue;
                          for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += aip * Gb[i * n + j];
                        }
                    }
                  }
                });
}

Tensor transpose(const Tensor& x) {
  const auto r = x.rank();
  if (r < 2) throw DimensionError("transpose: rank < 2");
  std::vector<std::size_t> axes(r);
  for (std::size_t i = 0; i < r; ++i) axes[i] = i;
  std::swap(axes[r - 1], axes[r - 2]);
  return permute(x, axes);
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const auto& s = x.shape();
  const auto r = s.size();
  if (axes.size() != r) throw DimensionError("permute: axis count mismatch");
  std::vector<bool> used(r, false);
  for (auto a : axes) {
    if (a >= r || used[a]) throw DimensionError("permute: invalid axis list");
    used[a] = true;
  }
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * s[i];
  Shape out_shape(r);
  std::vector<std::size_t> src_strides(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = s[axes[i]];
    src_strides[i] = in_strides[axes[i]];
  }
  const std::size_t total = x.numel();
  // gather[i] = source flat index for output flat index i
  std::vector<std::size_t> gather(total);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < r; ++d) src += idx[d] * src_strides[d];
    gather[i] = src;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  std::vector<double> out(total);
  const auto& in = x.data();
  for (std::size_t i = 0; i < total; ++i) out[i] = in[gather[i]];
  ImplPtr ix = x.impl();
  return record("permute", std::move(out_shape), std::move(out), {x},
                [ix, gather = std::move(gather)](const TensorImpl& o) {
                  if (!ix->requires_grad) return;
                  auto& g = ix->ensure_grad();
                  for (std::size_t i = 0; i < gather.size(); ++i) g[gather[i]] += o.grad[i];
                });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  ImplPtr ix = x.impl();
  return record("reshape", std::move(shape), std::move(out), {x}, [ix](const TensorImpl& o) {
    if (!ix->requires_grad) return;
    auto& g = ix->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor slice_lastdim(const Tensor& x, std::size_t begin, std::size_t end) {
  const auto& s = x.shape();
  const std::size_t width = s.back();
  if (begin >= end || end > width) throw DimensionError("slice_lastdim: bad range");
  const std::size_t rows = x.numel() / width, cols = end - begin;
  Shape out_shape = s;
  out_shape.back() = cols;
  std::vector<double> out(rows * cols);
  const auto& in = x.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = in[r * width + begin + c];
  ImplPtr ix = x.impl();
  return record("slice", std::move(out_shape), std::move(out), {x},
                [ix, rows, cols, width, begin](const TensorImpl& o) {
                  if (!ix->requires_grad) return;
                  auto& g = ix->ensure_grad();
                  for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c) g[r * width + begin + c] += o.grad[r * cols + c];
                });
}

Tensor add(const Tensor& a, const Tensor& b) {
  auto bc = broadcast("add", a.shape(), b.shape());
  const std::size_t total = numel(bc.out_shape);
  std::vector<double> out(total);
  const auto &da = a.data(), &db = b.data();
  for (std::size_t i = 0; i < total; ++i) out[i] = da[i % bc.a_period] + db[i % bc.b_period];
  ImplPtr ia = a.impl(), ib = b.impl();
  return record("add", bc.out_shape, std::move(out), {a, b}, [ia, ib, bc](const TensorImpl& o) {
    if (ia->requires_grad) {
      auto& g = ia->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i % bc.a_period] += o.grad[i];
    }
    if (ib->requires_grad) {
      auto& g = ib->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i % bc.b_period] += o.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  auto bc = broadcast("sub", a.shape(), b.shape());
  const std::size_t total = numel(bc.out_shape);
  std::vector<double> out(total);
  const auto &da = a.data(), &db = b.data();
  for (std::size_t i = 0; i < total; ++i) out[i] = da[i % bc.a_period] - db[i % bc.b_period];
  ImplPtr ia = a.impl(), ib = b.impl();
  return record("sub", bc.out_shape, std::move(out), {a, b}, [ia, ib, bc](const TensorImpl& o) {
    if (ia->requires_grad) {
      auto& g = ia->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i % bc.a_period] += o.grad[i];
    }
    if (ib->requires_grad) {
      auto& g = ib->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i % bc.b_period] -= o.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  auto bc = broadcast("mul", a.shape(), b.shape());
  const std::size_t total = numel(bc.out_shape);
  std::vector<double> out(total);
  const auto &da = a.data(), &db = b.data();
  for (std::size_t i = 0; i < total; ++i) out[i] = da[i % bc.a_period] * db[i % bc.b_period];
  ImplPtr ia = a.impl(), ib = b.impl();
  return record("mul", bc.out_shape, std::move(out), {a, b}, [ia, ib, bc](const TensorImpl& o) {
    if (ia->requires_grad) {
      auto& g = ia->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i % bc.a_period] += o.grad[i] * ib->data[i % bc.b_period];
    }
    if (ib->requires_grad) {
      auto& g = ib->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i % bc.b_period] += o.grad[i] * ia->data[i % bc.a_period];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      "scale", x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input " + std::to_string(v));
  }
  return unary(
      "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor square(const Tensor& x) {
  return unary(
      "square", x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
  if (slope.numel() != 1) throw DimensionError("prelu: slope must hold one value");
  const double a = slope.item();
  const auto& in = x.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] >= 0.0 ? in[i] : a * in[i];
  ImplPtr ix = x.impl(), is = slope.impl();
  return record("prelu", x.shape(), std::move(out), {x, slope}, [ix, is](const TensorImpl& o) {
    const double a = is->data[0];
    if (ix->requires_grad) {
      auto& g = ix->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += ix->data[i] >= 0.0 ? o.grad[i] : a * o.grad[i];
    }
    if (is->requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < o.grad.size(); ++i) {
        if (ix->data[i] < 0.0) acc += o.grad[i] * ix->data[i];
      }
      is->ensure_grad()[0] += acc;
    }
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  ImplPtr ix = x.impl();
  return record("sum", {1}, {total}, {x}, [ix](const TensorImpl& o) {
    if (!ix->requires_grad) return;
    auto& g = ix->ensure_grad();
    for (auto& v : g) v += o.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor softmax_lastdim(const Tensor& x, const Mask* mask) {
  const auto& s = x.shape();
  const std::size_t width = s.back();
  const std::size_t rows = x.numel() / width;
  std::size_t mask_period = 0;
  if (mask) {
    if (!is_suffix(mask->shape, s) || mask->shape.empty()) {
      throw DimensionError("softmax: mask shape " + to_string(mask->shape) + " vs input " + to_string(s));
    }
    mask_period = mask->on.size();
  }
  const auto& in = x.data();
  std::vector<double> out(in.size(), 0.0);
  std::size_t empty_rows = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * width;
    auto allowed = [&](std::size_t j) { return !mask || mask->on[(base + j) % mask_period] != 0; };
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < width; ++j)
      if (allowed(j)) hi = std::max(hi, in[base + j]);
    if (hi == -std::numeric_limits<double>::infinity()) {
      ++empty_rows;
      continue;
    }
    double z = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      if (!allowed(j)) continue;
      out[base + j] = std::exp(in[base + j] - hi);
      z += out[base + j];
    }
    for (std::size_t j = 0; j < width; ++j) out[base + j] /= z;
  }
  if (empty_rows) log::debug("softmax: " + std::to_string(empty_rows) + " fully masked row(s) left at zero");

  ImplPtr ix = x.impl();
  return record("softmax", s, std::move(out), {x}, [ix, rows, width](const TensorImpl& o) {
    if (!ix->requires_grad) return;
    auto& g = ix->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * width;
      double dot = 0.0;
      for (std::size_t j = 0; j < width; ++j) dot += o.grad[base + j] * o.data[base + j];
      for (std::size_t j = 0; j < width; ++j) g[base + j] += o.data[base + j] * (o.grad[base + j] - dot);
    }
  });
}

Tensor zero_softmax_lastdim(const Tensor& x, double eps) {
  // (e^x - 1)^2 overflows a double past x ~ 354.
  constexpr double kMaxInput = 350.0;
  const auto& s = x.shape();
  const std::size_t width = s.back();
  const std::size_t rows = x.numel() / width;
  const auto& in = x.data();
  std::vector<double> out(in.size());
  std::vector<double> denom(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = eps;
    for (std::size_t j = 0; j < width; ++j) {
      const double v = in[r * width + j];
      if (v > kMaxInput) throw NumericError("zero_softmax: input too large (" + std::to_string(v) + ")");
      const double e = std::expm1(v);
      out[r * width + j] = e * e;
      total += e * e;
    }
    denom[r] = total;
    for (std::size_t j = 0; j < width; ++j) out[r * width + j] /= total;
  }
  ImplPtr ix = x.impl();
  return record("zero_softmax", s, std::move(out), {x},
                [ix, rows, width, denom = std::move(denom)](const TensorImpl& o) {
                  if (!ix->requires_grad) return;
                  auto& g = ix->ensure_grad();
                  for (std::size_t r = 0; r < rows; ++r) {
                    const std::size_t base = r * width;
                    double dot = 0.0;
                    for (std::size_t j = 0; j < width; ++j) dot += o.grad[base + j] * o.data[base + j];
                    for (std::size_t j = 0; j < width; ++j) {
                      const double v = ix->data[base + j];
                      const double du = 2.0 * std::expm1(v) * std::exp(v);
                      g[base + j] += du / denom[r] * (o.grad[base + j] - dot);
                    }
                  }
                });
}

Tensor conv2d_zero_pad(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  const auto& si = input.shape();
  const auto& sk = kernels.shape();
  if (si.size() != 3 && si.size() != 4) throw DimensionError("conv2d: input must be [C,H,W] or [B,C,H,W]");
  if (sk.size() != 4) throw DimensionError("conv2d: kernels must be [C_out,C_in,kh,kw]");
  const bool batched = si.size() == 4;
  const std::size_t B = batched ? si[0] : 1;
  const std::size_t C = si[si.size() - 3], H = si[si.size() - 2], W = si.back();
  const std::size_t Co = sk[0], Ci = sk[1], kh = sk[2], kw = sk[3];
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ConfigurationError("conv2d: kernel extents must be odd, got " + to_string(sk));
  }
  if (Ci != C) throw DimensionError("conv2d: input has " + std::to_string(C) + " channels, kernels expect " +
                                    std::to_string(Ci));
  if (bias.defined() && (bias.numel() != Co)) throw DimensionError("conv2d: bias must have C_out entries");
  const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);

  Shape out_shape = batched ? Shape{B, Co, H, W} : Shape{Co, H, W};
  std::vector<double> out(B * Co * H * W, 0.0);
  const double* X = input.data().data();
  const double* K = kernels.data().data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < Co; ++o) {
      double* Y = out.data() + (b * Co + o) * H * W;
      if (bias.defined()) std::fill(Y, Y + H * W, bias.data()[o]);
      for (std::size_t c = 0; c < C; ++c) {
        const double* Xc = X + (b * C + c) * H * W;
        const double* Koc = K + (o * Ci + c) * kh * kw;
        for (std::size_t dy = 0; dy < kh; ++dy)
          for (std::size_t dx = 0; dx < kw; ++dx) {
            const double kv = Koc[dy * kw + dx];
            if (kv == 0.0) continue;
            const long oy = static_cast<long>(dy) - ph, ox = static_cast<long>(dx) - pw;
            for (std::size_t y = 0; y < H; ++y) {
              const long sy = static_cast<long>(y) + oy;
              if (sy < 0 || sy >= static_cast<long>(H)) continue;
              for (std::size_t x = 0; x < W; ++x) {
                const long sx = static_cast<long>(x) + ox;
                if (sx < 0 || sx >= static_cast<long>(W)) continue;
                Y[y * W + x] += kv * Xc[sy * static_cast<long>(W) + sx];
              }
            }
          }
      }
    }

  ImplPtr ix = input.impl(), ik = kernels.impl();
  ImplPtr ibias = bias.defined() ? bias.impl() : nullptr;
  std::vector<Tensor> inputs{input, kernels};
  if (bias.defined()) inputs.push_back(bias);
  return record("conv2d", std::move(out_shape), std::move(out), std::move(inputs),
                [=](const TensorImpl& out_t) {
                  const double* G = out_t.grad.data();
                  double* gX = ix->requires_grad ? ix->ensure_grad().data() : nullptr;
                  double* gK = ik->requires_grad ? ik->ensure_grad().data() : nullptr;
                  const double* Xd = ix->data.data();
                  const double* Kd = ik->data.data();
                  if (ibias && ibias->requires_grad) {
                    auto& gb = ibias->ensure_grad();
                    for (std::size_t b = 0; b < B; ++b)
                      for (std::size_t o = 0; o < Co; ++o) {
                        const double* Gy = G + (b * Co + o) * H * W;
                        double acc = 0.0;
                        for (std::size_t p = 0; p < H * W; ++p) acc += Gy[p];
                        gb[o] += acc;
                      }
                  }
                  if (!gX && !gK) return;
                  for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t o = 0; o < Co; ++o) {
                      const double* Gy = G + (b * Co + o) * H * W;
                      for (std::size_t c = 0; c < C; ++c) {
                        const double* Xc = Xd + (b * C + c) * H * W;
                        double* gXc = gX ? gX + (b * C + c) * H * W : nullptr;
                        const std::size_t kbase = (o * Ci + c) * kh * kw;
                        for (std::size_t dy = 0; dy < kh; ++dy)
                          for (std::size_t dx = 0; dx < kw; ++dx) {
                            const double kv = Kd[kbase + dy * kw + dx];
                            const long oy = static_cast<long>(dy) - ph, ox = static_cast<long>(dx) - pw;
                            double kacc = 0.0;
                            for (std::size_t y = 0; y < H; ++y) {
                              const long sy = static_cast<long>(y) + oy;
                              if (sy < 0 || sy >= static_cast<long>(H)) continue;
                              for (std::size_t x = 0; x < W; ++x) {
                                const long sx = static_cast<long>(x) + ox;
                                if (sx < 0 || sx >= static_cast<long>(W)) continue;
                                const std::size_t src = static_cast<std::size_t>(sy) * W + static_cast<std::size_t>(sx);
                                const double gy = Gy[y * W + x];
                                kacc += gy * Xc[src];
                                if (gXc) gXc[src] += gy * kv;
                              }
                            }
                            if (gK) gK[kbase + dy * kw + dx] += kacc;
                          }
                      }
                    }
                });
}

}  // namespace sgcn::ad
