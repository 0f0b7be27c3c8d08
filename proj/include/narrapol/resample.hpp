// Copyright 2026 The Narrapol Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Resampling-based uncertainty for two-group statistics: percentile
// bootstrap intervals and two-sided permutation tests, plus multiple
// comparison corrections.
//
// Both procedures work on "units": a unit is either one item or all items of
// one video (cluster resampling). Every replicate draws from its own RNG
// substream derived from (seed, replicate index), so results do not depend on
// execution order or on the number of worker threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "narrapol/corpus.hpp"
#include "narrapol/error.hpp"
#include "narrapol/hash.hpp"

namespace narrapol {

enum class ResampleUnit { Document, Video };

struct ResamplingConfig {
  int n_replicates = 3000;
  double ci_level = 0.95;
  std::uint64_t seed = 0;
  ResampleUnit unit = ResampleUnit::Document;
  unsigned threads = 1;

  void validate() const {
    if (n_replicates < 1) throw ConfigError("resampling: n_replicates must be >= 1");
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw ConfigError("resampling: ci_level must be in (0, 1)");
    if (threads < 1) throw ConfigError("resampling: threads must be >= 1");
  }
};

class ResamplingError : public DataContractError {
 public:
  using DataContractError::DataContractError;
};

// Indices of the items belonging to each resampling unit.
using Units = std::vector<std::vector<std::size_t>>;

inline Units singleton_units(std::size_t n) {
  Units units(n);
  for (std::size_t i = 0; i < n; ++i) units[i] = {i};
  return units;
}

// Groups items by key; units are ordered by first appearance.
template <typename T, typename KeyFn>
Units units_by(std::span<const T> items, KeyFn&& key) {
  Units units;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto [it, inserted] = index.emplace(std::string(key(items[i])), units.size());
    if (inserted) units.emplace_back();
    units[it->second].push_back(i);
  }
  return units;
}

inline const std::string& video_of(const Document& doc) { return doc.video_id; }
inline const std::string& video_of(const Document* doc) { return doc->video_id; }

template <typename T>
Units make_units(std::span<const T> items, ResampleUnit unit) {
  if (unit == ResampleUnit::Document) return singleton_units(items.size());
  if constexpr (requires(const T& x) { video_of(x); }) {
    return units_by(items, [](const T& x) -> const std::string& { return video_of(x); });
  } else {
    throw ConfigError("video-level resampling needs items that carry a video id");
  }
}

template <typename T>
using TwoSampleStatistic = std::function<std::optional<double>(std::span<const T>, std::span<const T>)>;

namespace detail {

inline constexpr std::uint64_t kBootstrapStream = 0xB0075u;
inline constexpr std::uint64_t kPermutationStream = 0x9E57u;

template <typename T>
void gather(std::span<const T> items, const Units& units, std::span<const std::size_t> picks,
            std::vector<T>& out) {
  out.clear();
  for (std::size_t u : picks) {
    for (std::size_t i : units[u]) out.push_back(items[i]);
  }
}

// Runs body(replicate, scratch) for every replicate on `threads` workers.
template <typename Scratch, typename Body>
void for_each_replicate(int n, unsigned threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    Scratch scratch;
    for (int r = 0; r < n; ++r) body(r, scratch);
    return;
  }
  std::vector<std::thread> workers;
  const unsigned count = std::min<unsigned>(threads, static_cast<unsigned>(n));
  for (unsigned w = 0; w < count; ++w) {
    workers.emplace_back([&, w] {
      Scratch scratch;
      for (int r = static_cast<int>(w); r < n; r += static_cast<int>(count)) body(r, scratch);
    });
  }
  for (auto& t : workers) t.join();
}

// Linear interpolation between order statistics (Hyndman-Fan type 7).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ResamplingError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

struct BootstrapInterval {
  double low = 0.0;
  double high = 0.0;
  int valid = 0;
  int discarded = 0;
};

// Percentile bootstrap interval. Each replicate resamples units with
// replacement independently within each group. Replicates on which the
// statistic is undefined are discarded; more than 1% discarded is an error.
template <typename T>
BootstrapInterval bootstrap_ci(const TwoSampleStatistic<T>& statistic, std::span<const T> il,
                               std::span<const T> pl, const ResamplingConfig& cfg,
                               const Units& il_units, const Units& pl_units) {
  cfg.validate();
  if (il_units.empty() || pl_units.empty()) throw EmptySliceError("bootstrap: empty group");
  struct Scratch {
    std::vector<std::size_t> picks;
    std::vector<T> a, b;
  };
  std::vector<std::optional<double>> values(static_cast<std::size_t>(cfg.n_replicates));
  detail::for_each_replicate<Scratch>(cfg.n_replicates, cfg.threads, [&](int r, Scratch& s) {
    std::mt19937_64 rng(substream_seed(cfg.seed, detail::kBootstrapStream, static_cast<std::uint64_t>(r)));
    auto draw = [&](const Units& units, std::span<const T> items, std::vector<T>& out) {
      std::uniform_int_distribution<std::size_t> pick(0, units.size() - 1);
      s.picks.resize(units.size());
      for (auto& p : s.picks) p = pick(rng);
      detail::gather(items, units, std::span<const std::size_t>(s.picks), out);
    };
    draw(il_units, il, s.a);
    draw(pl_units, pl, s.b);
    values[static_cast<std::size_t>(r)] = statistic(std::span<const T>(s.a), std::span<const T>(s.b));
  });

  std::vector<double> valid;
  valid.reserve(values.size());
  for (const auto& v : values) {
    if (v) valid.push_back(*v);
  }
  BootstrapInterval out;
  out.valid = static_cast<int>(valid.size());
  out.discarded = cfg.n_replicates - out.valid;
  if (static_cast<double>(out.discarded) > 0.01 * static_cast<double>(cfg.n_replicates)) {
    throw ResamplingError("bootstrap: statistic undefined on " + std::to_string(out.discarded) + " of " +
                          std::to_string(cfg.n_replicates) + " replicates");
  }
  std::sort(valid.begin(), valid.end());
  const double tail = (1.0 - cfg.ci_level) / 2.0;
  out.low = detail::quantile_sorted(valid, tail);
  out.high = detail::quantile_sorted(valid, 1.0 - tail);
  return out;
}

template <typename T>
BootstrapInterval bootstrap_ci(const TwoSampleStatistic<T>& statistic, std::span<const T> il,
                               std::span<const T> pl, const ResamplingConfig& cfg) {
  return bootstrap_ci(statistic, il, pl, cfg, make_units(il, cfg.unit), make_units(pl, cfg.unit));
}

struct PermutationResult {
  double observed = 0.0;
  double p_value = 1.0;
  int extreme = 0;    // permutations with |T| >= |T_obs|, undefined ones included
  int undefined = 0;  // permutations on which the statistic was undefined
  int n = 0;
};

namespace detail {

inline bool at_least_as_extreme(double permuted, double observed) {
  return std::abs(permuted) >= std::abs(observed) - 1e-12;
}

}  // namespace detail

// Two-sided permutation test. Group labels are shuffled over the pooled
// units, preserving the number of units per group;
// p = (#{|T_perm| >= |T_obs|} + 1) / (n + 1). A permutation on which the
// statistic is undefined counts as extreme.
template <typename T>
PermutationResult permutation_test(const TwoSampleStatistic<T>& statistic, std::span<const T> il,
                                   std::span<const T> pl, const ResamplingConfig& cfg,
                                   const Units& il_units, const Units& pl_units) {
  cfg.validate();
  auto observed = statistic(il, pl);
  if (!observed) throw EmptySliceError("permutation test: statistic undefined on the observed data");

  // Pool: items of both groups, units re-indexed into the pooled item list.
  std::vector<T> pooled(il.begin(), il.end());
  pooled.insert(pooled.end(), pl.begin(), pl.end());
  Units units = il_units;
  for (const auto& u : pl_units) {
    auto& shifted = units.emplace_back();
    for (std::size_t i : u) shifted.push_back(i + il.size());
  }
  if (units.empty()) throw EmptySliceError("permutation test: pooled slice is empty");
  const std::size_t n_first = il_units.size();

  struct Scratch {
    std::vector<std::size_t> order;
    std::vector<T> a, b;
  };
  std::vector<signed char> outcome(static_cast<std::size_t>(cfg.n_replicates));  // 1 extreme, 2 undefined
  const std::span<const T> pooled_view(pooled);
  detail::for_each_replicate<Scratch>(cfg.n_replicates, cfg.threads, [&](int r, Scratch& s) {
    std::mt19937_64 rng(substream_seed(cfg.seed, detail::kPermutationStream, static_cast<std::uint64_t>(r)));
    s.order.resize(units.size());
    std::iota(s.order.begin(), s.order.end(), std::size_t{0});
    std::shuffle(s.order.begin(), s.order.end(), rng);
    std::span<const std::size_t> order(s.order);
    detail::gather(pooled_view, units, order.first(n_first), s.a);
    detail::gather(pooled_view, units, order.subspan(n_first), s.b);
    auto value = statistic(std::span<const T>(s.a), std::span<const T>(s.b));
    outcome[static_cast<std::size_t>(r)] =
        !value ? 2 : detail::at_least_as_extreme(*value, *observed) ? 1 : 0;
  });

  PermutationResult out;
  out.observed = *observed;
  out.n = cfg.n_replicates;
  for (auto o : outcome) {
    out.extreme += o != 0;
    out.undefined += o == 2;
  }
  out.p_value = (static_cast<double>(out.extreme) + 1.0) / (static_cast<double>(out.n) + 1.0);
  return out;
}

template <typename T>
PermutationResult permutation_test(const TwoSampleStatistic<T>& statistic, std::span<const T> il,
                                   std::span<const T> pl, const ResamplingConfig& cfg) {
  return permutation_test(statistic, il, pl, cfg, make_units(il, cfg.unit), make_units(pl, cfg.unit));
}

// Exact permutation p-value: enumerates every split of the pooled units that
// preserves group sizes, identity included; p = #{|T| >= |T_obs|} / #splits.
// Limited to small pools.
template <typename T>
double exact_permutation_p(const TwoSampleStatistic<T>& statistic, std::span<const T> il,
                           std::span<const T> pl, const Units& il_units, const Units& pl_units,
                           std::uint64_t max_splits = 2'000'000) {
  auto observed = statistic(il, pl);
  if (!observed) throw EmptySliceError("exact permutation: statistic undefined on the observed data");
  std::vector<T> pooled(il.begin(), il.end());
  pooled.insert(pooled.end(), pl.begin(), pl.end());
  Units units = il_units;
  for (const auto& u : pl_units) {
    auto& shifted = units.emplace_back();
    for (std::size_t i : u) shifted.push_back(i + il.size());
  }
  const std::size_t n = units.size(), k = il_units.size();
  double splits = 1.0;
  for (std::size_t i = 0; i < k; ++i) splits = splits * static_cast<double>(n - i) / static_cast<double>(i + 1);
  if (splits > static_cast<double>(max_splits)) {
    throw ConfigError("exact permutation: " + std::to_string(static_cast<std::uint64_t>(splits)) +
                      " splits exceed the enumeration limit");
  }
  std::vector<bool> chosen(n, false);
  std::fill(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(k), true);
  std::uint64_t total = 0, extreme = 0;
  std::vector<std::size_t> first, second;
  std::vector<T> a, b;
  const std::span<const T> pooled_view(pooled);
  // prev_permutation over a sorted-descending mask visits every k-subset once.
  do {
    first.clear();
    second.clear();
    for (std::size_t i = 0; i < n; ++i) (chosen[i] ? first : second).push_back(i);
    detail::gather(pooled_view, units, std::span<const std::size_t>(first), a);
    detail::gather(pooled_view, units, std::span<const std::size_t>(second), b);
    auto value = statistic(std::span<const T>(a), std::span<const T>(b));
    ++total;
    extreme += !value || detail::at_least_as_extreme(*value, *observed);
  } while (std::prev_permutation(chosen.begin(), chosen.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

template <typename T>
using MultiStatistic =
    std::function<std::vector<std::optional<double>>(std::span<const T>, std::span<const T>)>;

// Joint permutation test: one shuffle of whole units per permutation, every
// key of the statistic recomputed on it. Keys undefined on the observed data
// get p = 1.
template <typename T>
std::vector<PermutationResult> permutation_test_joint(const MultiStatistic<T>& statistic,
                                                      std::span<const T> il, std::span<const T> pl,
                                                      const ResamplingConfig& cfg, const Units& il_units,
                                                      const Units& pl_units) {
  cfg.validate();
  const auto observed = statistic(il, pl);
  std::vector<T> pooled(il.begin(), il.end());
  pooled.insert(pooled.end(), pl.begin(), pl.end());
  Units units = il_units;
  for (const auto& u : pl_units) {
    auto& shifted = units.emplace_back();
    for (std::size_t i : u) shifted.push_back(i + il.size());
  }
  if (units.empty()) throw EmptySliceError("permutation test: pooled slice is empty");
  const std::size_t keys = observed.size();
  std::vector<std::vector<signed char>> outcome(static_cast<std::size_t>(cfg.n_replicates));
  struct Scratch {
    std::vector<std::size_t> order;
    std::vector<T> a, b;
  };
  const std::span<const T> pooled_view(pooled);
  detail::for_each_replicate<Scratch>(cfg.n_replicates, cfg.threads, [&](int r, Scratch& s) {
    std::mt19937_64 rng(substream_seed(cfg.seed, detail::kPermutationStream, static_cast<std::uint64_t>(r)));
    s.order.resize(units.size());
    std::iota(s.order.begin(), s.order.end(), std::size_t{0});
    std::shuffle(s.order.begin(), s.order.end(), rng);
    std::span<const std::size_t> order(s.order);
    detail::gather(pooled_view, units, order.first(il_units.size()), s.a);
    detail::gather(pooled_view, units, order.subspan(il_units.size()), s.b);
    auto values = statistic(std::span<const T>(s.a), std::span<const T>(s.b));
    auto& row = outcome[static_cast<std::size_t>(r)];
    row.assign(keys, 0);
    for (std::size_t k = 0; k < keys; ++k) {
      if (!observed[k]) continue;
      const auto& v = k < values.size() ? values[k] : std::nullopt;
      row[k] = !v ? 2 : detail::at_least_as_extreme(*v, *observed[k]) ? 1 : 0;
    }
  });
  std::vector<PermutationResult> out(keys);
  for (std::size_t k = 0; k < keys; ++k) {
    out[k].n = cfg.n_replicates;
    if (!observed[k]) continue;
    out[k].observed = *observed[k];
    for (const auto& row : outcome) {
      out[k].extreme += row[k] != 0;
      out[k].undefined += row[k] == 2;
    }
    out[k].p_value = (static_cast<double>(out[k].extreme) + 1.0) / (static_cast<double>(out[k].n) + 1.0);
  }
  return out;
}

template <typename T>
std::vector<PermutationResult> permutation_test_joint(const MultiStatistic<T>& statistic,
                                                      std::span<const T> il, std::span<const T> pl,
                                                      const ResamplingConfig& cfg) {
  return permutation_test_joint(statistic, il, pl, cfg, make_units(il, cfg.unit), make_units(pl, cfg.unit));
}

// ---------------------------------------------------------------------------
// Multiple comparisons
// ---------------------------------------------------------------------------

inline void require_probabilities(const std::vector<double>& p) {
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataContractError("p-values must lie in [0, 1]");
  }
}

inline std::vector<double> adjust_bonferroni(const std::vector<double>& p) {
  require_probabilities(p);
  const double m = static_cast<double>(p.size());
  std::vector<double> out;
  out.reserve(p.size());
  for (double v : p) out.push_back(std::min(1.0, v * m));
  return out;
}

// Benjamini-Hochberg step-up adjusted p-values, in input order.
inline std::vector<double> adjust_bh_fdr(const std::vector<double>& p) {
  require_probabilities(p);
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> out(m);
  double running = 1.0;
  for (std::size_t rank = m; rank-- > 0;) {
    const std::size_t i = order[rank];
    running = std::min(running, p[i] * (static_cast<double>(m) / static_cast<double>(rank + 1)));
    out[i] = std::min(1.0, running);
  }
  return out;
}

}  // namespace narrapol
