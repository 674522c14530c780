// Fits the simulator's free constants to the reference latency tables by
// coordinate descent in log space, then prints a config fragment.
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "kraken/perfsim/comparison.hpp"

namespace {

using kraken::Arch;
using kraken::perfsim::Calibration;

double loss(const Calibration& cal, const std::vector<kraken::perfsim::GridPoint>& grid) {
  double total = 0.0;
  for (const auto& row : kraken::perfsim::ttft_comparison(grid, cal)) {
    for (const auto& r : row.archs) {
      const double e = std::log(r.ttft_s * 1e3) - std::log(*r.reference_ms);
      total += e * e;
    }
  }
  return total;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fit perfsim calibration constants"};
  int rounds = 6;
  app.add_option("--rounds", rounds)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const auto grid = kraken::perfsim::reference_grid();
  Calibration cal = kraken::perfsim::default_calibration();
  struct Knob {
    const char* name;
    double* value;
    double lo, hi;
  };
  std::vector<Knob> knobs = {{"efficiency", &cal.device.efficiency, 0.05, 1.0},
                             {"mem_bw", &cal.device.mem_bw, 0.2e12, 2.0e12},
                             {"link_bw", &cal.link_bw, 10e9, 600e9},
                             {"base_latency", &cal.base_latency, 1e-7, 200e-6}};

  double best = loss(cal, grid);
  for (int round = 0; round < rounds; ++round) {
    double step = std::pow(0.5, round);
    for (auto& k : knobs) {
      for (double dir : {+1.0, -1.0}) {
        while (true) {
          const double saved = *k.value;
          const double trial = std::clamp(saved * std::exp(dir * step), k.lo, k.hi);
          if (trial == saved) break;
          *k.value = trial;
          const double l = loss(cal, grid);
          if (l < best) {
            best = l;
          } else {
            *k.value = saved;
            break;
          }
        }
      }
    }
    std::cerr << "round " << round << " rms log error " << std::sqrt(best / (3.0 * grid.size())) << '\n';
  }

  std::cout << std::setprecision(6) << "{\n  \"device\": {\"flops_per_sec\": " << cal.device.flops_per_sec
            << ", \"mem_bw\": " << cal.device.mem_bw << ", \"efficiency\": " << cal.device.efficiency
            << ", \"memcopy_copies\": " << cal.memcopy_copies << "},\n  \"topology\": {\"link_bw\": "
            << cal.link_bw << ", \"base_latency\": " << cal.base_latency << "}\n}\n";
  return 0;
}
