#include "appray/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cstring>

namespace appray::kernels {

namespace {
Backend g_backend = Backend::kOpenMP;
}

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

int thread_count() {
  return g_backend == Backend::kSerial ? 1 : omp_get_max_threads();
}

namespace detail {
void omp_for(int64_t n, void* ctx, void (*fn)(void*, int64_t)) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) fn(ctx, i);
}
}  // namespace detail

void conv3x3_forward(const double* in, const double* w, const double* b,
                     double* out, int c_in, int c_out, int h, int wd) {
  for (int co = 0; co < c_out; ++co) {
    double* o = out + static_cast<int64_t>(co) * h * wd;
    for (int i = 0; i < h * wd; ++i) o[i] = b[co];
    for (int ci = 0; ci < c_in; ++ci) {
      const double* x = in + static_cast<int64_t>(ci) * h * wd;
      const double* k = w + ((static_cast<int64_t>(co) * c_in + ci) * 9);
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double kv = k[ky * 3 + kx];
          if (kv == 0.0) continue;
          const int dy = ky - 1, dx = kx - 1;
          const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
          const int x0 = std::max(0, -dx), x1 = std::min(wd, wd - dx);
          for (int y = y0; y < y1; ++y) {
            double* orow = o + y * wd;
            const double* xrow = x + (y + dy) * wd + dx;
            for (int xx = x0; xx < x1; ++xx) orow[xx] += kv * xrow[xx];
          }
        }
      }
    }
  }
}

void conv3x3_backward(const double* in, const double* w, const double* dout,
                      double* din, double* dw, double* db, int c_in, int c_out,
                      int h, int wd) {
  for (int co = 0; co < c_out; ++co) {
    const double* go = dout + static_cast<int64_t>(co) * h * wd;
    double acc = 0.0;
    for (int i = 0; i < h * wd; ++i) acc += go[i];
    db[co] += acc;
    for (int ci = 0; ci < c_in; ++ci) {
      const double* x = in + static_cast<int64_t>(ci) * h * wd;
      const double* k = w + ((static_cast<int64_t>(co) * c_in + ci) * 9);
      double* gk = dw + ((static_cast<int64_t>(co) * c_in + ci) * 9);
      double* gx = din ? din + static_cast<int64_t>(ci) * h * wd : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int dy = ky - 1, dx = kx - 1;
          const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
          const int x0 = std::max(0, -dx), x1 = std::min(wd, wd - dx);
          double gw = 0.0;
          const double kv = k[ky * 3 + kx];
          for (int y = y0; y < y1; ++y) {
            const double* grow = go + y * wd;
            const double* xrow = x + (y + dy) * wd + dx;
            double* gxrow = gx ? gx + (y + dy) * wd + dx : nullptr;
            for (int xx = x0; xx < x1; ++xx) {
              gw += grow[xx] * xrow[xx];
              if (gxrow) gxrow[xx] += kv * grow[xx];
            }
          }
          gk[ky * 3 + kx] += gw;
        }
      }
    }
  }
}

void avgpool2_forward(const double* in, double* out, int c, int h, int wd) {
  const int oh = h / 2, ow = wd / 2;
  for (int ci = 0; ci < c; ++ci) {
    const double* x = in + static_cast<int64_t>(ci) * h * wd;
    double* o = out + static_cast<int64_t>(ci) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        const double* p = x + (2 * y) * wd + 2 * xx;
        o[y * ow + xx] = 0.25 * (p[0] + p[1] + p[wd] + p[wd + 1]);
      }
    }
  }
}

void avgpool2_backward(const double* dout, double* din, int c, int h, int wd) {
  const int oh = h / 2, ow = wd / 2;
  for (int ci = 0; ci < c; ++ci) {
    const double* go = dout + static_cast<int64_t>(ci) * oh * ow;
    double* gx = din + static_cast<int64_t>(ci) * h * wd;
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        const double g = 0.25 * go[y * ow + xx];
        double* p = gx + (2 * y) * wd + 2 * xx;
        p[0] += g;
        p[1] += g;
        p[wd] += g;
        p[wd + 1] += g;
      }
    }
  }
}

void gap_forward(const double* in, double* out, int c, int h, int wd) {
  const double inv = 1.0 / (static_cast<double>(h) * wd);
  for (int ci = 0; ci < c; ++ci) {
    const double* x = in + static_cast<int64_t>(ci) * h * wd;
    double acc = 0.0;
    for (int i = 0; i < h * wd; ++i) acc += x[i];
    out[ci] = acc * inv;
  }
}

void gap_backward(const double* dout, double* din, int c, int h, int wd) {
  const double inv = 1.0 / (static_cast<double>(h) * wd);
  for (int ci = 0; ci < c; ++ci) {
    const double g = dout[ci] * inv;
    double* gx = din + static_cast<int64_t>(ci) * h * wd;
    for (int i = 0; i < h * wd; ++i) gx[i] += g;
  }
}

void affine_forward(const double* x, const double* w, const double* b,
                    double* y, int in_dim, int out_dim) {
  for (int o = 0; o < out_dim; ++o) {
    const double* row = w + static_cast<int64_t>(o) * in_dim;
    double acc = b[o];
    for (int i = 0; i < in_dim; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

void affine_backward(const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db, int in_dim,
                     int out_dim) {
  if (dx) std::memset(dx, 0, sizeof(double) * in_dim);
  for (int o = 0; o < out_dim; ++o) {
    const double g = dy[o];
    db[o] += g;
    const double* row = w + static_cast<int64_t>(o) * in_dim;
    double* grow = dw + static_cast<int64_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) {
      grow[i] += g * x[i];
      if (dx) dx[i] += g * row[i];
    }
  }
}

void relu_forward(const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* dy, double* dx, int n) {
  for (int i = 0; i < n; ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

int64_t first_match_serial(int64_t n, void* ctx,
                           bool (*pred)(void*, int64_t)) {
  for (int64_t i = 0; i < n; ++i)
    if (pred(ctx, i)) return i;
  return -1;
}

int64_t first_match(int64_t n, void* ctx, bool (*pred)(void*, int64_t)) {
  if (backend() == Backend::kSerial || n < 8)
    return first_match_serial(n, ctx, pred);
  std::atomic<int64_t> best{n};
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    if (i >= best.load(std::memory_order_relaxed)) continue;
    if (pred(ctx, i)) {
      int64_t cur = best.load(std::memory_order_relaxed);
      while (i < cur &&
             !best.compare_exchange_weak(cur, i, std::memory_order_relaxed)) {
      }
    }
  }
  const int64_t r = best.load();
  return r == n ? -1 : r;
}

}  // namespace appray::kernels
