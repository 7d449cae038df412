// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "sct/common.hpp"
#include "sct/rng.hpp"

namespace sct {

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

struct SplitSet {
  int n_splits = 0;
  std::vector<Split> splits;
  std::array<double, 3> ratios{};  // train, val, test
  std::uint64_t seed = 0;
};

/// Deterministic shuffled partitions. Val and test sizes are
/// round(|ids| * ratio); the remainder goes to train.
inline SplitSet make_splits(const std::vector<std::string>& ids,
                            std::array<double, 3> ratios, std::uint64_t seed, int n_splits) {
  if (ids.empty()) throw parameter_error("make_splits: empty id list");
  if (ids.size() < 3) throw parameter_error("make_splits: need at least 3 ids");
  if (n_splits < 1) throw parameter_error("make_splits: n_splits must be >= 1");
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw parameter_error("make_splits: ratios must sum to 1");
  for (double r : ratios) {
    if (r < 0.0) throw parameter_error("make_splits: ratios must be non-negative");
  }
  if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size())
    throw parameter_error("make_splits: duplicate ids");

  const auto n = static_cast<long>(ids.size());
  const long n_val = std::lround(static_cast<double>(n) * ratios[1]);
  const long n_test = std::lround(static_cast<double>(n) * ratios[2]);
  const long n_train = n - n_val - n_test;
  if (n_train < 1) throw parameter_error("make_splits: ratios leave no training ids");

  SplitSet out;
  out.n_splits = n_splits;
  out.ratios = ratios;
  out.seed = seed;
  for (int k = 0; k < n_splits; ++k) {
    std::vector<std::string> shuffled = ids;
    Rng rng(mix64(seed, 0x5350u /*"SP"*/, static_cast<std::uint64_t>(k)));
    rng.shuffle(shuffled);
    Split s;
    s.train.assign(shuffled.begin(), shuffled.begin() + n_train);
    s.val.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
    s.test.assign(shuffled.begin() + n_train + n_val, shuffled.end());
    out.splits.push_back(std::move(s));
  }
  return out;
}

}  // namespace sct
