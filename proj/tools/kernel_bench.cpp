// Timing comparison between the serial reference kernels and their OpenMP
// counterparts. Also re-checks that both paths agree bitwise, which is the
// contract that makes the parallel kernels safe to use everywhere.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "flowadmm/bench.hpp"
#include "flowadmm/renoise.hpp"
#include "flowadmm/tasks.hpp"

using namespace flowadmm;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <typename F>
double time_best_of(F&& fn, int reps) {
  double best = 1e100;
  for (int r = 0; r < reps; ++r) {
    const double start = now_seconds();
    fn();
    best = std::min(best, now_seconds() - start);
  }
  return best;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled; both columns run serially\n");
#endif

  CorpusSpec corpus;
  corpus.height = 32;
  corpus.width = 32;
  const GmmPrior gmm = corpus_gmm_prior(corpus);
  const FlowPrior prior = gmm;
  SeededRng rng(42);
  const Tensor x = rng.standard_normal({32, 32});

  std::printf("\nmean_denoise_mc (GMM prior, 32x32 image)\n");
  std::printf("%8s %12s %12s %9s %9s\n", "N", "serial(ms)", "parallel(ms)", "speedup", "bitwise");
  for (std::size_t n : {64, 256, 1024, 4096}) {
    Tensor out_serial, out_parallel;
    const double ts = time_best_of(
        [&] {
          SeededRng r(7);
          out_serial = mean_denoise_mc_serial(prior, 0.7, x, n, r);
        },
        3);
    const double tp = time_best_of(
        [&] {
          SeededRng r(7);
          out_parallel = mean_denoise_mc(prior, 0.7, x, n, r, Exec::parallel);
        },
        3);
    const bool same = out_serial.values() == out_parallel.values();
    std::printf("%8zu %12.3f %12.3f %8.2fx %9s\n", n, ts * 1e3, tp * 1e3, ts / tp, same ? "yes" : "NO");
    if (!same) return 1;
  }

  std::printf("\nrun_benchmark (denoising, 8 images, 2 methods)\n");
  TaskSpec task;
  task.op.kind = OpKind::identity;
  task.noise_sigma = 0.2;
  task.degradation_seed = 11;

  SolverConfig solver;
  solver.tau = 5.0;
  solver.times = TimeSchedule(0.5, 0.95, 1.0, 50);
  solver.samples = SampleSchedule::three_phase(1, 1, 41, 0.5, 0.9);

  std::vector<MethodSpec> methods;
  methods.push_back(MethodSpec{"flowadmm", SolverKind::flowadmm, solver});
  SolverConfig pnp = solver;
  pnp.tau = 1.0;
  methods.push_back(MethodSpec{"pnpflow", SolverKind::pnpflow, pnp});

  const std::vector<Tensor> images = make_corpus(corpus, 8);
  BenchOptions opts;
  opts.master_seed = 3;

  BenchReport serial_report, parallel_report;
  opts.exec = Exec::serial;
  for (auto& m : methods) m.solver.estimator.exec = Exec::serial;
  const double ts = time_best_of([&] { serial_report = run_benchmark(images, task, methods, prior, opts); }, 2);
  opts.exec = Exec::parallel;
  for (auto& m : methods) m.solver.estimator.exec = Exec::parallel;
  const double tp = time_best_of([&] { parallel_report = run_benchmark(images, task, methods, prior, opts); }, 2);

  bool same = true;
  for (std::size_t i = 0; i < serial_report.per_image.size(); ++i) {
    if (serial_report.per_image[i].psnr != parallel_report.per_image[i].psnr) same = false;
  }
  std::printf("%8s %12.3f %12.3f %8.2fx %9s\n", "", ts * 1e3, tp * 1e3, ts / tp, same ? "yes" : "NO");
  return same ? 0 : 1;
}
