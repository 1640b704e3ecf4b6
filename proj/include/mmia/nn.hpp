#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mmia/rng.hpp"

namespace mmia::nn {

using Vec = std::vector<double>;

struct TensorSpec {
  std::string name;
  std::vector<int> dims;
  std::size_t offset = 0;
  std::size_t count = 0;
};

// One flat parameter vector with named tensor views. Keeps SGD updates,
// weight decay, per-sample gradient clipping, checkpointing, and
// finite-difference probing trivial.
class ParamStore {
 public:
  std::size_t add(const std::string& name, std::vector<int> dims);
  const TensorSpec& find(const std::string& name) const;
  std::size_t size() const { return values.size(); }

  // Uniform fan-in init for >= 2-d tensors, zeros for 1-d (biases).
  void init(Rng& rng);

  Vec values;
  std::vector<TensorSpec> tensors;
};

// y = W x + b, W is [out, in] row-major.
void linear_fwd(const double* W, const double* b, const double* x, double* y,
                int out, int in);
// Accumulates into dW/db and (when dx != nullptr) into dx.
void linear_bwd(const double* W, const double* x, const double* dy, double* dx,
                double* dW, double* db, int out, int in);

// 3x3 convolution, zero padding, stride 1, CHW layout. W is [cout, cin, 3, 3].
void conv3_fwd(const double* W, const double* b, const double* x, double* y,
               int cin, int cout, int h, int w);
void conv3_bwd(const double* W, const double* x, const double* dy, double* dx,
               double* dW, double* db, int cin, int cout, int h, int w);

// 2x2 average pooling, stride 2. h and w must be even.
void avgpool2_fwd(const double* x, double* y, int c, int h, int w);
void avgpool2_bwd(const double* dy, double* dx, int c, int h, int w);

void relu_fwd(const double* x, double* y, int n);
// dx accumulates dy where the forward output was positive.
void relu_bwd(const double* y, const double* dy, double* dx, int n);

void tanh_fwd(const double* x, double* y, int n);
void tanh_bwd(const double* y, const double* dy, double* dx, int n);

double sigmoid(double a);

// Cross-entropy of softmax(logits) against target; writes the logit
// gradient (softmax - onehot) into dlogits when non-null.
double softmax_ce(const double* logits, int n, int target, double* dlogits);

// Single GRU cell. Parameter block layout (offsets into a ParamStore):
// Wz Uz bz | Wr Ur br | Wh Uh bh with W* [hid, in], U* [hid, hid], b* [hid].
struct GruParams {
  std::size_t Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
  int in = 0;
  int hid = 0;
};
GruParams add_gru(ParamStore& store, const std::string& prefix, int in,
                  int hid);

struct GruCache {
  Vec x, h_prev, z, r, hhat, rh;
};

void gru_fwd(const Vec& params, const GruParams& g, const double* x,
             const double* h_prev, double* h_out, GruCache* cache);
// Accumulates into dx, dh_prev, and grad (same layout as params).
void gru_bwd(const Vec& params, const GruParams& g, const GruCache& cache,
             const double* dh_out, double* dx, double* dh_prev, Vec& grad);

double l2_norm(const Vec& v);

// Central finite-difference check of an analytic gradient. loss_fn is
// re-evaluated with single parameters displaced by +/-step; relative error
// uses a 1e-3 floor so near-zero gradients are judged on absolute error.
struct GradCheckResult {
  int checked = 0;
  int passed = 0;
  double worst_rel = 0.0;
};
GradCheckResult check_gradients(Vec& params, const Vec& analytic,
                                const std::function<double()>& loss_fn,
                                int n_probes, double step, double tol,
                                Rng& rng);

}  // namespace mmia::nn
