// Benchmark of the OpenMP kernels against their serial reference
// implementations, with a bit-identity check on every comparison.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "ser/kernels.hpp"
#include "ser/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<float> random_vec(size_t n, ser::Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform_symmetric(1.0));
  return v;
}

bool bit_identical(const std::vector<float>& a, const std::vector<float>& b) {
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

template <class F>
double time_best_of(int reps, F fn) {
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    const auto start = Clock::now();
    fn();
    best = std::min(best, seconds_since(start));
  }
  return best;
}

void report(const char* name, double gflop, double serial_s, double parallel_s, bool identical) {
  std::printf("%-18s serial %8.2f ms (%6.2f GFLOP/s)  parallel %8.2f ms (%6.2f GFLOP/s)  "
              "speedup %.2fx  bit-identical: %s\n",
              name, serial_s * 1e3, gflop / serial_s, parallel_s * 1e3, gflop / parallel_s,
              serial_s / parallel_s, identical ? "yes" : "NO");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled; both paths run serially\n");
#endif

  ser::Rng rng(7);

  {
    const size_t m = 384, k = 384, n = 384;
    const auto a = random_vec(m * k, rng);
    const auto b = random_vec(k * n, rng);
    std::vector<float> y_serial(m * n), y_parallel(m * n);
    const double serial_s = time_best_of(5, [&] {
      ser::kernels::serial::matmul(a.data(), b.data(), y_serial.data(), m, k, n);
    });
    const double parallel_s = time_best_of(5, [&] {
      ser::kernels::matmul(a.data(), b.data(), y_parallel.data(), m, k, n);
    });
    report("matmul 384^3", 2.0 * m * k * n * 1e-9, serial_s, parallel_s,
           bit_identical(y_serial, y_parallel));
  }

  {
    const size_t len = 16000, in_ch = 1, out_ch = 128, kw = 3;
    const size_t out_len = len - kw + 1;
    const auto x = random_vec(len * in_ch, rng);
    const auto w = random_vec(kw * in_ch * out_ch, rng);
    const auto bias = random_vec(out_ch, rng);
    std::vector<float> y_serial(out_len * out_ch), y_parallel(out_len * out_ch);
    const double serial_s = time_best_of(5, [&] {
      ser::kernels::serial::conv1d_forward(x.data(), w.data(), bias.data(), y_serial.data(), len,
                                           in_ch, out_ch, kw);
    });
    const double parallel_s = time_best_of(5, [&] {
      ser::kernels::conv1d_forward(x.data(), w.data(), bias.data(), y_parallel.data(), len, in_ch,
                                   out_ch, kw);
    });
    report("conv1d fwd 16k", 2.0 * out_len * out_ch * kw * in_ch * 1e-9, serial_s, parallel_s,
           bit_identical(y_serial, y_parallel));

    const auto dy = random_vec(out_len * out_ch, rng);
    std::vector<float> dw_serial(kw * in_ch * out_ch), db_serial(out_ch);
    std::vector<float> dw_parallel(kw * in_ch * out_ch), db_parallel(out_ch);
    const double gw_serial_s = time_best_of(5, [&] {
      std::fill(dw_serial.begin(), dw_serial.end(), 0.0f);
      std::fill(db_serial.begin(), db_serial.end(), 0.0f);
      ser::kernels::serial::conv1d_grad_w(x.data(), dy.data(), dw_serial.data(), db_serial.data(),
                                          out_len, in_ch, out_ch, kw);
    });
    const double gw_parallel_s = time_best_of(5, [&] {
      std::fill(dw_parallel.begin(), dw_parallel.end(), 0.0f);
      std::fill(db_parallel.begin(), db_parallel.end(), 0.0f);
      ser::kernels::conv1d_grad_w(x.data(), dy.data(), dw_parallel.data(), db_parallel.data(),
                                  out_len, in_ch, out_ch, kw);
    });
    report("conv1d grad_w", 2.0 * out_len * out_ch * kw * in_ch * 1e-9, gw_serial_s, gw_parallel_s,
           bit_identical(dw_serial, dw_parallel) && bit_identical(db_serial, db_parallel));

    std::vector<float> dx_serial(len * in_ch), dx_parallel(len * in_ch);
    const double gx_serial_s = time_best_of(5, [&] {
      ser::kernels::serial::conv1d_grad_x(w.data(), dy.data(), dx_serial.data(), len, in_ch,
                                          out_ch, kw);
    });
    const double gx_parallel_s = time_best_of(5, [&] {
      ser::kernels::conv1d_grad_x(w.data(), dy.data(), dx_parallel.data(), len, in_ch, out_ch, kw);
    });
    report("conv1d grad_x", 2.0 * out_len * out_ch * kw * in_ch * 1e-9, gx_serial_s, gx_parallel_s,
           bit_identical(dx_serial, dx_parallel));
  }

  return 0;
}
