#include "support/oracles.hpp"

#include <cmath>
#include <numbers>

namespace oracle {

double prelu(double x, double slope) { return x >= 0 ? x : slope * x; }

Vec conv2d(const Vec& in, std::size_t c, std::size_t h, std::size_t w, const Vec& k, std::size_t co, std::size_t kh,
           std::size_t kw, const Vec& bias) {
  Vec out(co * h * w, 0.0);
  const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (std::size_t i = 0; i < c; ++i)
          for (std::size_t dy = 0; dy < kh; ++dy)
            for (std::size_t dx = 0; dx < kw; ++dx) {
              const long sy = static_cast<long>(y + dy) - ph, sx = static_cast<long>(x + dx) - pw;
              if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
              acc += in[(i * h + sy) * w + sx] * k[((o * c + i) * kh + dy) * kw + dx];
            }
        out[(o * h + y) * w + x] = acc;
      }
  return out;
}

Vec asym_stack(Vec in, std::size_t c, std::size_t h, std::size_t w, std::size_t s, const std::vector<AsymLayer>& layers) {
  for (const auto& l : layers) {
    Vec r = conv2d(in, c, h, w, l.row, c, 1, s, l.row_bias);
    Vec q = conv2d(in, c, h, w, l.col, c, s, 1, l.col_bias);
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = prelu(r[i] + q[i], l.slope);
  }
  return in;
}

Vec gcn(const Vec& a, const Vec& h, const Vec& w, std::size_t m, std::size_t f, std::size_t g, double slope) {
  Vec out(m * g, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t c = 0; c < g; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double hw = 0.0;
        for (std::size_t e = 0; e < f; ++e) hw += h[i * f + e] * w[e * g + c];
        acc += a[i * m + j] * hw;
      }
      out[j * g + c] = prelu(acc, slope);
    }
  return out;
}

namespace {

// Slice helpers for the branch oracles.
Vec spatial_slice(const Vec& x, std::size_t t, std::size_t n, std::size_t f) {
  return Vec(x.begin() + static_cast<long>(t * n * f), x.begin() + static_cast<long>((t + 1) * n * f));
}

}  // namespace

Vec interaction_tendency(const Vec& a_spa, const Vec& a_tmp, const Vec& h0_spa, std::size_t t, std::size_t n,
                         std::size_t f, const Branches& w) {
  // Spatial stage per time step.
  Vec h1(t * n * f);
  for (std::size_t s = 0; s < t; ++s) {
    Vec a(a_spa.begin() + static_cast<long>(s * n * n), a_spa.begin() + static_cast<long>((s + 1) * n * n));
    auto out = gcn(a, spatial_slice(h0_spa, s, n, f), w.spa1, n, f, f, w.s_spa1);
    std::copy(out.begin(), out.end(), h1.begin() + static_cast<long>(s * n * f));
  }
  // Temporal stage per pedestrian.
  Vec h2(t * n * f);
  for (std::size_t p = 0; p < n; ++p) {
    Vec a(a_tmp.begin() + static_cast<long>(p * t * t), a_tmp.begin() + static_cast<long>((p + 1) * t * t));
    Vec h(t * f);
    for (std::size_t s = 0; s < t; ++s)
      for (std::size_t e = 0; e < f; ++e) h[s * f + e] = h1[(s * n + p) * f + e];
    auto out = gcn(a, h, w.tmp1, t, f, f, w.s_tmp1);
    for (std::size_t s = 0; s < t; ++s)
      for (std::size_t e = 0; e < f; ++e) h2[(s * n + p) * f + e] = out[s * f + e];
  }
  return h2;
}

Vec tendency_interaction(const Vec& a_spa, const Vec& a_tmp, const Vec& h0_tmp, std::size_t t, std::size_t n,
                         std::size_t f, const Branches& w) {
  Vec g1(t * n * f);  // [T, N, F]
  for (std::size_t p = 0; p < n; ++p) {
    Vec a(a_tmp.begin() + static_cast<long>(p * t * t), a_tmp.begin() + static_cast<long>((p + 1) * t * t));
    Vec h(h0_tmp.begin() + static_cast<long>(p * t * f), h0_tmp.begin() + static_cast<long>((p + 1) * t * f));
    auto out = gcn(a, h, w.tmp2, t, f, f, w.s_tmp2);
    for (std::size_t s = 0; s < t; ++s)
      for (std::size_t e = 0; e < f; ++e) g1[(s * n + p) * f + e] = out[s * f + e];
  }
  Vec g2(t * n * f);
  for (std::size_t s = 0; s < t; ++s) {
    Vec a(a_spa.begin() + static_cast<long>(s * n * n), a_spa.begin() + static_cast<long>((s + 1) * n * n));
    auto out = gcn(a, spatial_slice(g1, s, n, f), w.spa2, n, f, f, w.s_spa2);
    std::copy(out.begin(), out.end(), g2.begin() + static_cast<long>(s * n * f));
  }
  return g2;
}

Vec zero_softmax(const Vec& x, double eps) {
  Vec num(x.size());
  double den = eps;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num[i] = (std::exp(x[i]) - 1.0) * (std::exp(x[i]) - 1.0);
    den += num[i];
  }
  for (auto& v : num) v /= den;
  return num;
}

Vec softmax(const Vec& x) {
  Vec out(x.size());
  double den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) den += out[i] = std::exp(x[i]);
  for (auto& v : out) v /= den;
  return out;
}

double bivariate_nll(double x, double y, double mx, double my, double sx, double sy, double rho) {
  const double dx = (x - mx) / sx, dy = (y - my) / sy;
  const double q = 1.0 - rho * rho;
  const double z = dx * dx + dy * dy - 2.0 * rho * dx * dy;
  const double pdf = std::exp(-z / (2.0 * q)) / (2.0 * std::numbers::pi * sx * sy * std::sqrt(q));
  return -std::log(pdf);
}

double ade(const Vec& pred, const Vec& gt, std::size_t t, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < t * n; ++k) acc += std::hypot(pred[2 * k] - gt[2 * k], pred[2 * k + 1] - gt[2 * k + 1]);
  return acc / static_cast<double>(t * n);
}

double fde(const Vec& pred, const Vec& gt, std::size_t t, std::size_t n) {
  double acc = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t k = (t - 1) * n + p;
    acc += std::hypot(pred[2 * k] - gt[2 * k], pred[2 * k + 1] - gt[2 * k + 1]);
  }
  return acc / static_cast<double>(n);
}

}  // namespace oracle
