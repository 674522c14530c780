#pragma once

#include <array>
#include <string_view>

#include "kraken/perfsim/simulator.hpp"

namespace kraken::perfsim {

enum class Category { AllReduce, OverlappedGemm, Attention, FfnGemms, Other };

inline constexpr std::array<Category, 5> kCategories = {
    Category::AllReduce, Category::OverlappedGemm, Category::Attention, Category::FfnGemms,
    Category::Other};

std::string_view to_string(Category category);

struct Breakdown {
  std::array<double, 5> seconds{};
  double total = 0.0;

  double get(Category c) const { return seconds[static_cast<std::size_t>(c)]; }
  double percent(Category c) const;
};

// Timeline of the critical device's compute stream over [0, ttft]. Idle
// time covered by a collective counts as AllReduce, other idle as Other.
Breakdown breakdown(const SimTrace& trace);

}  // namespace kraken::perfsim
