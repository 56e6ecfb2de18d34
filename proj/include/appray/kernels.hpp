#pragma once

#include <cstdint>

namespace appray::kernels {

// Execution backend for the data-parallel kernels. Both produce bit-identical
// results: parallel loops only ever write disjoint output slots, and every
// floating-point reduction runs in a fixed serial order.
enum class Backend { kSerial, kOpenMP };

Backend backend();
void set_backend(Backend b);
int thread_count();

namespace detail {
void omp_for(int64_t n, void* ctx, void (*fn)(void*, int64_t));
}

// Runs fn(i) for i in [0, n). Honors the active backend.
template <class F>
void parallel_for(int64_t n, F&& fn) {
  if (backend() == Backend::kSerial || n < 2) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  auto thunk = [](void* ctx, int64_t i) { (*static_cast<F*>(ctx))(i); };
  detail::omp_for(n, &fn, thunk);
}

// --- per-sample numeric kernels (serial; batch parallelism sits above) ---
// Layouts: images are C x H x W row-major; affine weights are [out][in].

// 3x3 convolution, stride 1, zero padding 1.
void conv3x3_forward(const double* in, const double* w, const double* b,
                     double* out, int c_in, int c_out, int h, int wd);
// din may be null (input layer). dw/db are accumulated into.
void conv3x3_backward(const double* in, const double* w, const double* dout,
                      double* din, double* dw, double* db, int c_in, int c_out,
                      int h, int wd);

// 2x2 average pooling, stride 2. h and wd must be even.
void avgpool2_forward(const double* in, double* out, int c, int h, int wd);
void avgpool2_backward(const double* dout, double* din, int c, int h, int wd);

// Global average pool over H x W per channel.
void gap_forward(const double* in, double* out, int c, int h, int wd);
void gap_backward(const double* dout, double* din, int c, int h, int wd);

// y = W x + b.
void affine_forward(const double* x, const double* w, const double* b,
                    double* y, int in_dim, int out_dim);
// dx may be null. dw/db accumulated into.
void affine_backward(const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db, int in_dim,
                     int out_dim);

void relu_forward(const double* x, double* y, int n);
// dx = dy where x > 0 else 0 (in-place allowed).
void relu_backward(const double* x, const double* dy, double* dx, int n);

// First index in [0, n) for which pred(i) is true, or -1. The OpenMP variant
// scans chunks in parallel and reduces to the minimum matching index, so it
// agrees exactly with the serial left-to-right scan.
int64_t first_match_serial(int64_t n, void* ctx, bool (*pred)(void*, int64_t));
int64_t first_match(int64_t n, void* ctx, bool (*pred)(void*, int64_t));

template <class F>
int64_t first_match(int64_t n, F&& pred) {
  auto thunk = [](void* ctx, int64_t i) { return (*static_cast<F*>(ctx))(i); };
  return first_match(n, &pred, thunk);
}

}  // namespace appray::kernels
