#include "p2m/dataset/pairing.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "p2m/core/error.hpp"
#include "p2m/core/rng.hpp"

namespace p2m::dataset {

std::string painting_id(const std::filesystem::path& path) { return path.stem().string(); }

PairingResult pair_by_emotion(const std::vector<PaintingSource>& paintings, const std::vector<ClipRef>& clips,
                              std::int64_t seed) {
  std::map<Emotion, std::vector<std::pair<std::string, std::string>>> by_emotion;  // id -> image path
  std::set<std::string> seen;
  for (const auto& p : paintings) {
    auto id = painting_id(p.path);
    if (!seen.insert(id).second) {
      throw ValidationError("two paintings share the id \"" + id + "\" (file stems must be unique)");
    }
    by_emotion[p.emotion].emplace_back(std::move(id), p.path.generic_string());
  }
  std::map<Emotion, std::vector<std::string>> clip_pool;
  for (const auto& c : clips) clip_pool[c.emotion].push_back(c.audio_path);

  PairingResult result;
  for (auto& [emotion, items] : by_emotion) {
    auto pool_it = clip_pool.find(emotion);
    if (pool_it == clip_pool.end() || pool_it->second.empty()) {
      throw ValidationError("emotion \"" + std::string(to_string(emotion)) + "\" has " +
                            std::to_string(items.size()) + " painting(s) but no music clips");
    }
    auto pool = pool_it->second;
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    Rng rng(derive_seed(static_cast<std::uint64_t>(seed), "pair:" + std::string(to_string(emotion))));
    rng.shuffle(pool);
    std::sort(items.begin(), items.end());
    if (items.size() > pool.size()) result.clip_reuse = true;
    for (std::size_t i = 0; i < items.size(); ++i) {
      PairedSample s;
      s.id = items[i].first;
      s.image_path = items[i].second;
      s.audio_path = pool[i % pool.size()];
      s.emotion = emotion;
      result.samples.push_back(std::move(s));
    }
  }
  std::sort(result.samples.begin(), result.samples.end(),
            [](const PairedSample& a, const PairedSample& b) { return a.id < b.id; });
  return result;
}

}  // namespace p2m::dataset
