#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "appray/kernels.hpp"
#include "appray/model.hpp"
#include "test_util.hpp"

using namespace appray;
namespace k = appray::kernels;

namespace {

struct BackendGuard {
  k::Backend saved = k::backend();
  ~BackendGuard() { k::set_backend(saved); }
};

}  // namespace

TEST_CASE("parallel_for covers every index exactly once on both backends") {
  BackendGuard guard;
  for (k::Backend b : {k::Backend::kSerial, k::Backend::kOpenMP}) {
    k::set_backend(b);
    std::vector<int> hits(1000, 0);
    k::parallel_for(1000, [&](int64_t i) { hits[static_cast<size_t>(i)]++; });
    for (int h : hits) CHECK(h == 1);
  }
}

TEST_CASE("first_match agrees with the serial reference scan") {
  BackendGuard guard;
  Rng rng(5);
  for (int iter = 0; iter < 50; ++iter) {
    const int n = 1 + static_cast<int>(rng.uniform_int(300));
    struct Ctx {
      std::vector<int> data;
      int needle;
    } ctx;
    ctx.data.resize(static_cast<size_t>(n));
    for (int& v : ctx.data) v = static_cast<int>(rng.uniform_int(7));
    ctx.needle = static_cast<int>(rng.uniform_int(9));
    auto pred = [](void* p, int64_t i) {
      auto* c = static_cast<Ctx*>(p);
      return c->data[static_cast<size_t>(i)] == c->needle;
    };
    const int64_t want = k::first_match_serial(n, &ctx, pred);
    k::set_backend(k::Backend::kOpenMP);
    const int64_t got_omp = k::first_match(n, &ctx, pred);
    k::set_backend(k::Backend::kSerial);
    const int64_t got_serial = k::first_match(n, &ctx, pred);
    CHECK(got_omp == want);
    CHECK(got_serial == want);
  }
}

TEST_CASE("batch loss and gradients are bit-identical across backends") {
  BackendGuard guard;
  using namespace appray::model;
  ModelConfig cfg;
  cfg.n_labels = 4;
  cfg.embed_dim = 8;
  cfg.token_dim = 4;
  cfg.text_hidden = 6;
  cfg.conv1_channels = 2;
  cfg.conv2_channels = 3;
  cfg.head_hidden = 8;
  cfg.image_size = 32;
  Vocab vocab = Vocab::build({"one two three four five six"});
  Model m = Model::init(cfg, vocab, 3);

  Rng rng(9);
  std::vector<EncodedSample> storage;
  for (int i = 0; i < 9; ++i) {
    EncodedSample es;
    const size_t n = static_cast<size_t>(3) * cfg.image_size * cfg.image_size;
    es.crop_img.resize(n);
    es.full_img.resize(n);
    for (double& v : es.crop_img) v = rng.next_double();
    for (double& v : es.full_img) v = rng.next_double();
    es.token_ids = {static_cast<int>(rng.uniform_int(vocab.size()))};
    es.labels.assign(4, 0.0);
    es.labels[rng.uniform_int(4)] = 1.0;
    storage.push_back(std::move(es));
  }
  Batch batch;
  for (const auto& s : storage) batch.samples.push_back(&s);
  for (int i = 0; i + 1 < 9; i += 2) {
    PairSpec p;
    p.anchor = i;
    p.other = i + 1;
    p.negatives = {(i + 2) % 9, (i + 4) % 9};
    batch.pairs.push_back(p);
  }
  Hyperparams h;

  k::set_backend(k::Backend::kSerial);
  for (Tensor* t : m.all_params()) t->zero_grad();
  const double loss_serial = total_loss_with_grad(m, batch, h);
  std::vector<std::vector<double>> grads_serial;
  for (Tensor* t : m.all_params()) grads_serial.push_back(t->g);

  k::set_backend(k::Backend::kOpenMP);
  for (Tensor* t : m.all_params()) t->zero_grad();
  const double loss_omp = total_loss_with_grad(m, batch, h);
  std::vector<std::vector<double>> grads_omp;
  for (Tensor* t : m.all_params()) grads_omp.push_back(t->g);

  CHECK(loss_serial == loss_omp);  // bit-exact, not approximate
  REQUIRE(grads_serial.size() == grads_omp.size());
  for (size_t i = 0; i < grads_serial.size(); ++i)
    CHECK(grads_serial[i] == grads_omp[i]);
}

TEST_CASE("affine and conv kernels: finite-difference spot checks") {
  // tiny closed-form check on affine_forward: y = Wx + b
  const std::vector<double> x{1.0, 2.0};
  const std::vector<double> w{1.0, -1.0, 0.5, 2.0};  // 2x2 row-major
  const std::vector<double> b{0.25, -0.5};
  std::vector<double> y(2);
  k::affine_forward(x.data(), w.data(), b.data(), y.data(), 2, 2);
  CHECK(y[0] == doctest::Approx(1.0 - 2.0 + 0.25));
  CHECK(y[1] == doctest::Approx(0.5 + 4.0 - 0.5));

  // avgpool forward/backward are exact adjoints: <pool(x), g> == <x, pool^T(g)>
  Rng rng(3);
  const int c = 2, hdim = 8, wdim = 8;
  std::vector<double> in(static_cast<size_t>(c) * hdim * wdim);
  for (double& v : in) v = rng.normal();
  std::vector<double> out(static_cast<size_t>(c) * hdim * wdim / 4);
  k::avgpool2_forward(in.data(), out.data(), c, hdim, wdim);
  std::vector<double> g(out.size());
  for (double& v : g) v = rng.normal();
  std::vector<double> gin(in.size(), 0.0);
  k::avgpool2_backward(g.data(), gin.data(), c, hdim, wdim);
  double lhs = 0, rhs = 0;
  for (size_t i = 0; i < out.size(); ++i) lhs += out[i] * g[i];
  for (size_t i = 0; i < in.size(); ++i) rhs += in[i] * gin[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
