// Serial vs OpenMP timings for the hot kernels.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <omp.h>

#include "cityex/address.hpp"
#include "cityex/excellence.hpp"
#include "cityex/record.hpp"

using namespace cityex;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

std::vector<Record> synthetic_corpus(int records) {
  std::mt19937_64 rng(7);
  std::vector<Record> corpus(records);
  for (int i = 0; i < records; ++i) {
    corpus[i].ut = "B" + std::to_string(i);
    corpus[i].times_cited = static_cast<long>(rng() % 200);
    const int na = 1 + static_cast<int>(rng() % 4);
    for (int a = 0; a < na; ++a)
      corpus[i].addresses.push_back(fmt::format("Univ {}, Dept {}, City{} {}, Country{}", rng() % 50, rng() % 9,
                                                rng() % 2000, 10000 + rng() % 90000, rng() % 40));
  }
  return corpus;
}

void report(const char* name, double serial, double parallel) {
  fmt::print("{:<14} serial {:>9.4f}s  parallel {:>9.4f}s  speedup {:.2f}x\n", name, serial, parallel,
             serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int records = argc > 1 ? std::stoi(argv[1]) : 100000;
  fmt::print("threads: {}  records: {}\n", omp_get_max_threads(), records);

  const auto corpus = synthetic_corpus(records);
  const auto top = classify_top(corpus, citation_threshold(corpus, Fraction(1, 10)));
  report("tally", best_of(3, [&] { tally_serial(corpus, top, CountMode::Paper); }),
         best_of(3, [&] { tally(corpus, top, CountMode::Paper); }));

  const auto tallies = tally(corpus, top).tallies;
  report("city_table", best_of(5, [&] { city_table_serial(tallies, {}, {}); }),
         best_of(5, [&] { city_table(tallies, {}, {}); }));

  const Fraction pe(1, 10);
  report("monte_carlo", best_of(1, [&] { simulate_rejection_rate_serial(100, pe, 0.05, 2000000, 1); }),
         best_of(1, [&] { simulate_rejection_rate(100, pe, 0.05, 2000000, 1); }));
}
