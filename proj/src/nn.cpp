#include "mmia/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmia::nn {

std::size_t ParamStore::add(const std::string& name, std::vector<int> dims) {
  TensorSpec spec;
  spec.name = name;
  spec.dims = std::move(dims);
  spec.offset = values.size();
  spec.count = 1;
  for (int d : spec.dims) spec.count *= static_cast<std::size_t>(d);
  values.resize(values.size() + spec.count, 0.0);
  tensors.push_back(spec);
  return tensors.back().offset;
}

const TensorSpec& ParamStore::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("no tensor named " + name);
}

void ParamStore::init(Rng& rng) {
  for (const auto& t : tensors) {
    if (t.dims.size() < 2) continue;  // biases stay zero
    std::size_t fan_in = 1;
    for (std::size_t k = 1; k < t.dims.size(); ++k) {
      fan_in *= static_cast<std::size_t>(t.dims[k]);
    }
    const double s = std::sqrt(3.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.count; ++i) {
      values[t.offset + i] = rng.uniform(-s, s);
    }
  }
}

void linear_fwd(const double* W, const double* b, const double* x, double* y,
                int out, int in) {
  for (int o = 0; o < out; ++o) {
    const double* w = W + static_cast<std::size_t>(o) * in;
    double acc = b[o];
    for (int i = 0; i < in; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
}

void linear_bwd(const double* W, const double* x, const double* dy, double* dx,
                double* dW, double* db, int out, int in) {
  for (int o = 0; o < out; ++o) {
    const double g = dy[o];
    db[o] += g;
    const double* w = W + static_cast<std::size_t>(o) * in;
    double* gw = dW + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) gw[i] += g * x[i];
    if (dx) {
      for (int i = 0; i < in; ++i) dx[i] += g * w[i];
    }
  }
}

void conv3_fwd(const double* W, const double* b, const double* x, double* y,
               int cin, int cout, int h, int w) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int oc = 0; oc < cout; ++oc) {
    double* yo = y + oc * plane;
    std::fill(yo, yo + plane, b[oc]);
    for (int ic = 0; ic < cin; ++ic) {
      const double* xi = x + ic * plane;
      const double* wk = W + (static_cast<std::size_t>(oc) * cin + ic) * 9;
      for (int ky = -1; ky <= 1; ++ky) {
        for (int kx = -1; kx <= 1; ++kx) {
          const double wv = wk[(ky + 1) * 3 + (kx + 1)];
          const int y0 = std::max(0, -ky), y1 = std::min(h, h - ky);
          const int x0 = std::max(0, -kx), x1 = std::min(w, w - kx);
          for (int yy = y0; yy < y1; ++yy) {
            const double* xr = xi + (yy + ky) * w + kx;
            double* yr = yo + yy * w;
            for (int xx = x0; xx < x1; ++xx) yr[xx] += wv * xr[xx];
          }
        }
      }
    }
  }
}

void conv3_bwd(const double* W, const double* x, const double* dy, double* dx,
               double* dW, double* db, int cin, int cout, int h, int w) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int oc = 0; oc < cout; ++oc) {
    const double* go = dy + oc * plane;
    double acc_b = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc_b += go[i];
    db[oc] += acc_b;
    for (int ic = 0; ic < cin; ++ic) {
      const double* xi = x + ic * plane;
      const double* wk = W + (static_cast<std::size_t>(oc) * cin + ic) * 9;
      double* gk = dW + (static_cast<std::size_t>(oc) * cin + ic) * 9;
      double* gxi = dx ? dx + ic * plane : nullptr;
      for (int ky = -1; ky <= 1; ++ky) {
        for (int kx = -1; kx <= 1; ++kx) {
          const int y0 = std::max(0, -ky), y1 = std::min(h, h - ky);
          const int x0 = std::max(0, -kx), x1 = std::min(w, w - kx);
          double acc_w = 0.0;
          const double wv = wk[(ky + 1) * 3 + (kx + 1)];
          for (int yy = y0; yy < y1; ++yy) {
            const double* xr = xi + (yy + ky) * w + kx;
            const double* gr = go + yy * w;
            for (int xx = x0; xx < x1; ++xx) acc_w += xr[xx] * gr[xx];
          }
          gk[(ky + 1) * 3 + (kx + 1)] += acc_w;
          if (gxi) {
            for (int yy = y0; yy < y1; ++yy) {
              double* gxr = gxi + (yy + ky) * w + kx;
              const double* gr = go + yy * w;
              for (int xx = x0; xx < x1; ++xx) gxr[xx] += wv * gr[xx];
            }
          }
        }
      }
    }
  }
}

void avgpool2_fwd(const double* x, double* y, int c, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  for (int ch = 0; ch < c; ++ch) {
    const double* xi = x + static_cast<std::size_t>(ch) * h * w;
    double* yo = y + static_cast<std::size_t>(ch) * oh * ow;
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        const double* p = xi + 2 * i * w + 2 * j;
        yo[i * ow + j] = 0.25 * (p[0] + p[1] + p[w] + p[w + 1]);
      }
    }
  }
}

void avgpool2_bwd(const double* dy, double* dx, int c, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  for (int ch = 0; ch < c; ++ch) {
    const double* go = dy + static_cast<std::size_t>(ch) * oh * ow;
    double* gx = dx + static_cast<std::size_t>(ch) * h * w;
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        const double g = 0.25 * go[i * ow + j];
        double* p = gx + 2 * i * w + 2 * j;
        p[0] += g;
        p[1] += g;
        p[w] += g;
        p[w + 1] += g;
      }
    }
  }
}

void relu_fwd(const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd(const double* y, const double* dy, double* dx, int n) {
  for (int i = 0; i < n; ++i) {
    if (y[i] > 0.0) dx[i] += dy[i];
  }
}

void tanh_fwd(const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_bwd(const double* y, const double* dy, double* dx, int n) {
  for (int i = 0; i < n; ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
}

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

double softmax_ce(const double* logits, int n, int target, double* dlogits) {
  double mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(logits[i] - mx);
  const double log_z = mx + std::log(sum);
  if (dlogits) {
    for (int i = 0; i < n; ++i) {
      dlogits[i] = std::exp(logits[i] - log_z);
    }
    dlogits[target] -= 1.0;
  }
  return log_z - logits[target];
}

GruParams add_gru(ParamStore& store, const std::string& prefix, int in,
                  int hid) {
  GruParams g;
  g.in = in;
  g.hid = hid;
  g.Wz = store.add(prefix + ".Wz", {hid, in});
  g.Uz = store.add(prefix + ".Uz", {hid, hid});
  g.bz = store.add(prefix + ".bz", {hid});
  g.Wr = store.add(prefix + ".Wr", {hid, in});
  g.Ur = store.add(prefix + ".Ur", {hid, hid});
  g.br = store.add(prefix + ".br", {hid});
  g.Wh = store.add(prefix + ".Wh", {hid, in});
  g.Uh = store.add(prefix + ".Uh", {hid, hid});
  g.bh = store.add(prefix + ".bh", {hid});
  return g;
}

namespace {

// a += W x with W [out, in]
void matvec_acc(const double* W, const double* x, double* a, int out, int in) {
  for (int o = 0; o < out; ++o) {
    const double* w = W + static_cast<std::size_t>(o) * in;
    double acc = 0.0;
    for (int i = 0; i < in; ++i) acc += w[i] * x[i];
    a[o] += acc;
  }
}

// dx += W^T dy; dW += dy x^T
void matvec_bwd(const double* W, const double* x, const double* dy, double* dx,
                double* dW, int out, int in) {
  for (int o = 0; o < out; ++o) {
    const double g = dy[o];
    const double* w = W + static_cast<std::size_t>(o) * in;
    double* gw = dW + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) gw[i] += g * x[i];
    if (dx) {
      for (int i = 0; i < in; ++i) dx[i] += g * w[i];
    }
  }
}

}  // namespace

void gru_fwd(const Vec& params, const GruParams& g, const double* x,
             const double* h_prev, double* h_out, GruCache* cache) {
  const int H = g.hid, I = g.in;
  Vec z(H), r(H), hhat(H), rh(H);
  const double* P = params.data();

  for (int i = 0; i < H; ++i) z[i] = P[g.bz + i];
  matvec_acc(P + g.Wz, x, z.data(), H, I);
  matvec_acc(P + g.Uz, h_prev, z.data(), H, H);
  for (int i = 0; i < H; ++i) z[i] = sigmoid(z[i]);

  for (int i = 0; i < H; ++i) r[i] = P[g.br + i];
  matvec_acc(P + g.Wr, x, r.data(), H, I);
  matvec_acc(P + g.Ur, h_prev, r.data(), H, H);
  for (int i = 0; i < H; ++i) r[i] = sigmoid(r[i]);

  for (int i = 0; i < H; ++i) rh[i] = r[i] * h_prev[i];
  for (int i = 0; i < H; ++i) hhat[i] = P[g.bh + i];
  matvec_acc(P + g.Wh, x, hhat.data(), H, I);
  matvec_acc(P + g.Uh, rh.data(), hhat.data(), H, H);
  for (int i = 0; i < H; ++i) hhat[i] = std::tanh(hhat[i]);

  for (int i = 0; i < H; ++i) {
    h_out[i] = (1.0 - z[i]) * h_prev[i] + z[i] * hhat[i];
  }
  if (cache) {
    cache->x.assign(x, x + I);
    cache->h_prev.assign(h_prev, h_prev + H);
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->hhat = std::move(hhat);
    cache->rh = std::move(rh);
  }
}

void gru_bwd(const Vec& params, const GruParams& g, const GruCache& c,
             const double* dh_out, double* dx, double* dh_prev, Vec& grad) {
  const int H = g.hid, I = g.in;
  const double* P = params.data();
  double* G = grad.data();

  Vec dz(H), dhhat(H), da_h(H), da_z(H), da_r(H), drh(H), dr(H);
  for (int i = 0; i < H; ++i) {
    dz[i] = dh_out[i] * (c.hhat[i] - c.h_prev[i]);
    dhhat[i] = dh_out[i] * c.z[i];
    dh_prev[i] += dh_out[i] * (1.0 - c.z[i]);
  }
  // candidate pre-activation
  for (int i = 0; i < H; ++i) da_h[i] = dhhat[i] * (1.0 - c.hhat[i] * c.hhat[i]);
  for (int i = 0; i < H; ++i) G[g.bh + i] += da_h[i];
  matvec_bwd(P + g.Wh, c.x.data(), da_h.data(), dx, G + g.Wh, H, I);
  matvec_bwd(P + g.Uh, c.rh.data(), da_h.data(), drh.data(), G + g.Uh, H, H);
  for (int i = 0; i < H; ++i) {
    dr[i] = drh[i] * c.h_prev[i];
    dh_prev[i] += drh[i] * c.r[i];
  }
  // update gate
  for (int i = 0; i < H; ++i) da_z[i] = dz[i] * c.z[i] * (1.0 - c.z[i]);
  for (int i = 0; i < H; ++i) G[g.bz + i] += da_z[i];
  matvec_bwd(P + g.Wz, c.x.data(), da_z.data(), dx, G + g.Wz, H, I);
  matvec_bwd(P + g.Uz, c.h_prev.data(), da_z.data(), dh_prev, G + g.Uz, H, H);
  // reset gate
  for (int i = 0; i < H; ++i) da_r[i] = dr[i] * c.r[i] * (1.0 - c.r[i]);
  for (int i = 0; i < H; ++i) G[g.br + i] += da_r[i];
  matvec_bwd(P + g.Wr, c.x.data(), da_r.data(), dx, G + g.Wr, H, I);
  matvec_bwd(P + g.Ur, c.h_prev.data(), da_r.data(), dh_prev, G + g.Ur, H, H);
}

double l2_norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

GradCheckResult check_gradients(Vec& params, const Vec& analytic,
                                const std::function<double()>& loss_fn,
                                int n_probes, double step, double tol,
                                Rng& rng) {
  GradCheckResult res;
  for (int k = 0; k < n_probes; ++k) {
    const std::size_t idx =
        static_cast<std::size_t>(rng.uniform_int(static_cast<int>(params.size())));
    const double saved = params[idx];
    params[idx] = saved + step;
    const double lp = loss_fn();
    params[idx] = saved - step;
    const double lm = loss_fn();
    params[idx] = saved;
    const double fd = (lp - lm) / (2.0 * step);
    const double a = analytic[idx];
    const double rel =
        std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-3});
    ++res.checked;
    if (rel <= tol) ++res.passed;
    res.worst_rel = std::max(res.worst_rel, rel);
  }
  return res;
}

}  // namespace mmia::nn
