// Serial reference kernels against the OpenMP ones.
//   hsgn_bench [X]    (default 10^6)

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>

#include "hsgn/coeffs.hpp"
#include "hsgn/multeval.hpp"
#include "hsgn/sieveweights.hpp"
#include "hsgn/stats.hpp"

using namespace hsgn;

namespace {

double seconds(const std::function<void()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void row(const char* name, double serial, double parallel, int threads) {
  std::printf("%-28s serial %8.3f s   omp(%d) %8.3f s   speedup %5.2fx\n", name, serial, threads, parallel,
              parallel > 0 ? serial / parallel : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
  const std::uint64_t X = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1'000'000;
  const int threads = omp_get_max_threads();
  std::printf("X = %llu, threads = %d\n", static_cast<unsigned long long>(X), threads);

  PrimeEigenvalueTable table;
  const double t_table = seconds([&] { table = delta_prime_table(2 * X); });
  std::printf("%-28s %8.3f s\n", "delta table (2X)", t_table);
  auto shared = std::make_shared<const PrimeEigenvalueTable>(std::move(table));
  const auto spec = hecke_extend(shared);

  CoefficientWindow a, b;
  double s = seconds([&] { a = reference::evaluate_window(spec, X, 2 * X); });
  double p = seconds([&] { b = evaluate_window(spec, X, 2 * X); });
  row("lambda window [X, 2X)", s, p, threads);

  omp_set_num_threads(1);
  s = seconds([&] { b = evaluate_window(spec, 1, X + 1); });
  omp_set_num_threads(threads);
  p = seconds([&] { b = evaluate_window(spec, 1, X + 1); });
  row("lambda window [1, X] (spf)", s, p, threads);

  const auto params = SieveParams::from_y(1000, parse_log_gamma("0.5"));
  std::vector<std::int32_t> r1, r2;
  s = seconds([&] { r1 = reference::rho_plus_window(params, X, X + 100'000); });
  p = seconds([&] { r2 = rho_plus_window(params, X, X + 100'000); });
  row("rho+ (y = 1000, width 1e5)", s, p, threads);

  std::uint64_t c1 = 0, c2 = 0;
  s = seconds([&] { c1 = reference::sign_changes(b.signs); });
  p = seconds([&] { c2 = sign_changes(b.signs); });
  row("sign changes [1, X]", s, p, threads);

  const auto wp = SieveParams::from_X(X, 0.1);
  omp_set_num_threads(1);
  s = seconds([&] { weights_window(wp, spec, X, 2 * X); });
  omp_set_num_threads(threads);
  p = seconds([&] { weights_window(wp, spec, X, 2 * X); });
  row("weights [X, 2X)", s, p, threads);

  if (r1 != r2 || c1 != c2) {
    std::printf("serial and parallel results differ\n");
    return 1;
  }
  return 0;
}
