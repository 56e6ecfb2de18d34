// Serial vs OpenMP timings for the data-parallel kernels: batch image
// encoding (forward+backward), the first-match dedup scan, and screen
// rendering. Also cross-checks that both backends produce identical bytes.

#include <omp.h>

#include <cstdio>
#include <cstring>
#include <vector>

#include "appray/corpus.hpp"
#include "appray/kernels.hpp"
#include "appray/model.hpp"
#include "appray/model_internal.hpp"
#include "appray/trace.hpp"

using namespace appray;
namespace k = appray::kernels;

namespace {

double now() { return omp_get_wtime(); }

model::Batch make_batch(const model::Model& m, int n, Rng& rng,
                        std::vector<model::EncodedSample>& storage) {
  storage.clear();
  storage.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    model::EncodedSample es;
    const size_t npx =
        static_cast<size_t>(3) * m.cfg.image_size * m.cfg.image_size;
    es.crop_img.resize(npx);
    es.full_img.resize(npx);
    for (double& v : es.crop_img) v = rng.next_double();
    for (double& v : es.full_img) v = rng.next_double();
    es.token_ids = {static_cast<int>(rng.uniform_int(m.vocab.size())),
                    static_cast<int>(rng.uniform_int(m.vocab.size())),
                    static_cast<int>(rng.uniform_int(m.vocab.size()))};
    es.labels.assign(static_cast<size_t>(m.cfg.n_labels), 0.0);
    es.labels[rng.uniform_int(static_cast<uint64_t>(m.cfg.n_labels))] = 1.0;
    storage.push_back(std::move(es));
  }
  model::Batch b;
  for (const auto& s : storage) b.samples.push_back(&s);
  for (int i = 0; i + 1 < n; i += 2) {
    model::PairSpec p;
    p.anchor = i;
    p.other = i + 1;
    p.negatives = {(i + 2) % n};
    b.pairs.push_back(p);
  }
  return b;
}

struct Timing {
  double serial_s = 0.0;
  double omp_s = 0.0;
};

void report(const char* name, const Timing& t, bool identical) {
  std::printf("%-28s serial %8.3f s   openmp %8.3f s   speedup %4.2fx   %s\n",
              name, t.serial_s, t.omp_s,
              t.omp_s > 0 ? t.serial_s / t.omp_s : 0.0,
              identical ? "results identical" : "RESULTS DIFFER");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", omp_get_max_threads());
  Rng rng(42);

  // --- batch loss forward+backward ---
  {
    model::ModelConfig cfg;  // production dims
    model::Vocab vocab = model::Vocab::build(
        {"subscribe premium trial offer deal cancel account settings"});
    model::Model m = model::Model::init(cfg, vocab, 7);
    std::vector<model::EncodedSample> storage;
    model::Batch batch = make_batch(m, 32, rng, storage);
    model::Hyperparams h;

    Timing t;
    std::vector<double> grads_serial, grads_omp;
    double loss_serial = 0, loss_omp = 0;
    for (int pass = 0; pass < 2; ++pass) {
      k::set_backend(pass == 0 ? k::Backend::kSerial : k::Backend::kOpenMP);
      for (model::Tensor* p : m.all_params()) p->zero_grad();
      const double t0 = now();
      double loss = 0.0;
      for (int it = 0; it < 3; ++it)
        loss = model::total_loss_with_grad(m, batch, h);
      const double dt = now() - t0;
      std::vector<double> flat;
      for (model::Tensor* p : m.all_params())
        flat.insert(flat.end(), p->g.begin(), p->g.end());
      if (pass == 0) {
        t.serial_s = dt;
        grads_serial = flat;
        loss_serial = loss;
      } else {
        t.omp_s = dt;
        grads_omp = flat;
        loss_omp = loss;
      }
    }
    const bool same = loss_serial == loss_omp && grads_serial == grads_omp;
    report("batch loss fwd+bwd (x3)", t, same);
  }

  // --- dedup first-match scan: screenshot-sized probes, match at the end ---
  {
    const int n = 2000;
    const size_t probe_bytes = 16 * 1024;
    // near-duplicate screenshots: long shared prefix forces deep compares
    std::vector<std::vector<uint8_t>> shots(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      auto& s = shots[static_cast<size_t>(i)];
      s.assign(probe_bytes, 0x5a);
      s[probe_bytes - 2] = static_cast<uint8_t>(i & 0xff);
      s[probe_bytes - 1] = static_cast<uint8_t>(i >> 8);
    }
    const std::vector<uint8_t> needle = shots[static_cast<size_t>(n - 1)];
    Timing t;
    int64_t r_serial = 0, r_omp = 0;
    for (int pass = 0; pass < 2; ++pass) {
      k::set_backend(pass == 0 ? k::Backend::kSerial : k::Backend::kOpenMP);
      const double t0 = now();
      int64_t r = -1;
      for (int it = 0; it < 30; ++it)
        r = k::first_match(n, [&](int64_t i) {
          return shots[static_cast<size_t>(i)] == needle;
        });
      const double dt = now() - t0;
      if (pass == 0) {
        t.serial_s = dt;
        r_serial = r;
      } else {
        t.omp_s = dt;
        r_omp = r;
      }
    }
    report("dedup scan, late match (x30)", t, r_serial == r_omp);
  }

  // --- corpus screen rendering ---
  {
    corpus::AppSpec spec = corpus::AppSpec::defaults();
    spec.n_apps = 10;
    const corpus::GeneratedCorpus gc = corpus::generate_corpus(spec);
    Timing t;
    uint64_t h_serial = 0, h_omp = 0;
    for (int pass = 0; pass < 2; ++pass) {
      k::set_backend(pass == 0 ? k::Backend::kSerial : k::Backend::kOpenMP);
      const double t0 = now();
      std::vector<uint64_t> hashes;
      for (const auto& app : gc.apps) {
        std::vector<uint64_t> per_screen(app.screens.size());
        k::parallel_for(static_cast<int64_t>(app.screens.size()), [&](int64_t i) {
          const ui::Raster img = corpus::render(
              app.screens[static_cast<size_t>(i)].tree,
              corpus::Palette::standard());
          per_screen[static_cast<size_t>(i)] =
              fnv1a(img.pixels.data(), img.pixels.size());
        });
        for (uint64_t v : per_screen) hashes.push_back(v);
      }
      uint64_t h = 0;
      for (uint64_t v : hashes) h = fnv1a(&v, sizeof(v), h);
      const double dt = now() - t0;
      if (pass == 0) {
        t.serial_s = dt;
        h_serial = h;
      } else {
        t.omp_s = dt;
        h_omp = h;
      }
    }
    report("render corpus screens", t, h_serial == h_omp);
  }

  return 0;
}
