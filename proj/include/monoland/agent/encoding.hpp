#pragma once

// Discretization of a position estimate into a tabular state index.

#include <monoland/optics.hpp>
#include <monoland/perception.hpp>

#include <algorithm>
#include <cstddef>
#include <vector>

namespace monoland::agent {

/// Inner bin edges per axis; values beyond the outer edges clamp into the
/// edge bins. Bin i of an axis covers [edges[i-1], edges[i]).
struct BinScheme {
  std::vector<double> altitude_edges{0.15, 0.35, 0.6, 1.0, 1.6, 2.4, 3.5};
  std::vector<double> depth_edges{-0.4, -0.06, 0.06, 0.4, 1.2, 2.5, 4.5, 7.0, 10.0};
  std::vector<double> lateral_edges{-1.5, -0.4, -0.06, 0.06, 0.4, 1.5};
  double confidence_threshold = 0.5;

  /// Evenly spaced bins over the nominal ranges: altitude [0, 10] m in 8,
  /// depth [0, 20] m in 10, lateral [-5, 5] m in 7.
  static BinScheme uniform() {
    BinScheme b;
    b.altitude_edges.clear();
    b.depth_edges.clear();
    b.lateral_edges.clear();
    for (int i = 1; i < 8; ++i) b.altitude_edges.push_back(10.0 * i / 8.0);
    for (int i = 1; i < 10; ++i) b.depth_edges.push_back(20.0 * i / 10.0);
    for (int i = 1; i < 7; ++i) b.lateral_edges.push_back(-5.0 + 10.0 * i / 7.0);
    return b;
  }

  std::size_t altitude_bins() const { return altitude_edges.size() + 1; }
  std::size_t depth_bins() const { return depth_edges.size() + 1; }
  std::size_t lateral_bins() const { return lateral_edges.size() + 1; }
  static constexpr std::size_t confidence_bins() { return 2; }
  static constexpr std::size_t color_bins() { return 3; }

  std::size_t live_state_count() const {
    return altitude_bins() * depth_bins() * lateral_bins() * confidence_bins() * color_bins();
  }
  /// Live states plus the single terminal state.
  std::size_t state_count() const { return live_state_count() + 1; }
  std::size_t terminal_state() const { return live_state_count(); }

  void validate() const {
    auto sorted = [](const std::vector<double>& e) { return std::is_sorted(e.begin(), e.end()); };
    require(sorted(altitude_edges) && sorted(depth_edges) && sorted(lateral_edges), "bin edges must be sorted");
  }

  bool operator==(const BinScheme&) const = default;
};

struct EncodedState {
  std::size_t index = 0;
  bool terminal = false;
  bool operator==(const EncodedState&) const = default;
};

inline std::size_t bin_of(const std::vector<double>& edges, double value) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

inline EncodedState encode(const PositionEstimate& est, ColorBand color, const BinScheme& bins) {
  const std::size_t a = bin_of(bins.altitude_edges, est.altitude);
  const std::size_t d = bin_of(bins.depth_edges, est.depth);
  const std::size_t l = bin_of(bins.lateral_edges, est.lateral_offset);
  const std::size_t c = est.confidence >= bins.confidence_threshold ? 1 : 0;
  const std::size_t k = static_cast<std::size_t>(color);
  std::size_t index = a;
  index = index * bins.depth_bins() + d;
  index = index * bins.lateral_bins() + l;
  index = index * BinScheme::confidence_bins() + c;
  index = index * BinScheme::color_bins() + k;
  return {index, false};
}

inline EncodedState terminal_state(const BinScheme& bins) { return {bins.terminal_state(), true}; }

}  // namespace monoland::agent
