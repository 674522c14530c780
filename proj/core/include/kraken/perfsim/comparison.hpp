#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kraken/model/presets.hpp"
#include "kraken/perfsim/breakdown.hpp"

namespace kraken::perfsim {

struct Calibration {
  DeviceSpec device;
  double link_bw = 0.0;
  double base_latency = 0.0;
  double memcopy_copies = 2.0;
};

// Constants fitted against the reference latency tables.
Calibration default_calibration();

struct GridPoint {
  std::string size;
  std::size_t context = 0;
  std::size_t parallelism = 0;
};

// The 20 (size, context, n) points with reference latencies.
std::vector<GridPoint> reference_grid();

struct ArchResult {
  Arch arch = Arch::Standard;
  double ttft_s = 0.0;
  double ttft_no_overlap_s = 0.0;  // equals ttft_s for non-Kraken archs
  Breakdown breakdown;
  std::optional<double> reference_ms;  // scaled to the full layer count
};

struct ComparisonRow {
  GridPoint point;
  std::array<ArchResult, 3> archs;  // standard, parallel-block, kraken

  const ArchResult& get(Arch arch) const { return archs[static_cast<std::size_t>(arch)]; }
  // 1 - kraken/standard.
  double speedup_reduction() const;
  // standard/kraken.
  double speedup_ratio() const;
  bool ordering_holds() const;
};

ComparisonRow compare_point(const GridPoint& point, const Calibration& calibration);
std::vector<ComparisonRow> ttft_comparison(const std::vector<GridPoint>& grid,
                                           const Calibration& calibration);

double geomean_speedup_ratio(const std::vector<ComparisonRow>& rows);

// Columns: size,context,parallelism,arch,ttft_ms,ttft_no_overlap_ms,reference_ms,
// speedup_reduction,speedup_ratio. Sorted by size, context, arch.
std::string ttft_csv(const std::vector<ComparisonRow>& rows);
// Columns: size,context,parallelism,arch,category,seconds,percent.
std::string breakdown_csv(const std::vector<ComparisonRow>& rows);

}  // namespace kraken::perfsim
