#include "p2m/core/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <spdlog/spdlog.h>
#include <string>

#include "p2m/core/rng.hpp"

namespace p2m {

SplitCounts split_counts(std::size_t n, const SplitRatios& ratios) {
  if (n < 3) return {n, 0, 0};
  // The epsilon absorbs representation error such as 240 * 0.8 = 192.00000000000003.
  constexpr double kEps = 1e-9;
  const auto dn = static_cast<double>(n);
  auto train = static_cast<std::size_t>(std::floor(dn * ratios.train + kEps));
  train = std::min(train, n);
  const std::size_t rest = n - train;
  auto eval = static_cast<std::size_t>(std::ceil(dn * ratios.eval - kEps));
  eval = std::min(eval, rest);
  return {train, eval, rest - eval};
}

std::vector<PairedSample> split_dataset(std::vector<PairedSample> samples, const SplitRatios& ratios,
                                        std::int64_t seed) {
  ratios.validate();
  std::map<Emotion, std::vector<std::string>> by_class;
  for (const auto& s : samples) by_class[s.emotion].push_back(s.id);

  std::map<std::string, Split> assignment;
  for (auto& [emotion, ids] : by_class) {
    if (ids.size() < 3) {
      spdlog::warn("emotion \"{}\" has only {} sample(s); assigning the whole class to train",
                   to_string(emotion), ids.size());
    }
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(index_of(emotion))));
    rng.shuffle(ids);
    const SplitCounts c = split_counts(ids.size(), ratios);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Split s = i < c.train ? Split::Train : (i < c.train + c.eval ? Split::Eval : Split::Test);
      assignment[ids[i]] = s;
    }
  }
  for (auto& s : samples) s.split = assignment.at(s.id);
  return samples;
}

}  // namespace p2m
