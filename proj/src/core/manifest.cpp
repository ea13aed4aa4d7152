#include "p2m/core/manifest.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "p2m/core/error.hpp"
#include "p2m/core/split.hpp"

namespace p2m {

using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Eval: return "eval";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "eval") return Split::Eval;
  if (text == "test") return Split::Test;
  throw ValidationError("unknown split \"" + std::string(text) + "\"; expected train, eval or test");
}

void SplitRatios::validate() const {
  for (double r : {train, eval, test}) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ValidationError("split ratio " + std::to_string(r) + " outside [0, 1]");
    }
  }
  if (std::abs(train + eval + test - 1.0) > 1e-9) {
    throw ValidationError("split ratios must sum to 1, got " + std::to_string(train + eval + test));
  }
}

SplitRatios SplitRatios::parse(std::string_view text) {
  std::vector<double> parts;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("cannot parse split ratio \"" + item + "\"");
    }
  }
  if (parts.size() != 3) {
    throw ValidationError("expected three comma-separated ratios train,eval,test");
  }
  SplitRatios r{parts[0], parts[1], parts[2]};
  r.validate();
  return r;
}

const PairedSample* Manifest::find(std::string_view id) const {
  for (const auto& s : samples) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::vector<const PairedSample*> Manifest::in_split(Split split) const {
  std::vector<const PairedSample*> out;
  for (const auto& s : samples) {
    if (s.split == split) out.push_back(&s);
  }
  return out;
}

void validate_manifest(const Manifest& m) {
  if (m.version.empty()) throw ValidationError("manifest field \"version\" is empty");
  if (m.sample_rate <= 0) throw ValidationError("manifest field \"sample_rate\" must be positive");
  if (!(m.chunk_seconds > 0.0)) throw ValidationError("manifest field \"chunk_seconds\" must be positive");

  std::set<std::string> ids;
  std::map<std::string, std::string> audio_owner;
  for (const auto& s : m.samples) {
    if (s.id.empty()) throw ValidationError("manifest sample with empty id");
    if (!ids.insert(s.id).second) throw ValidationError("duplicate sample id \"" + s.id + "\"");
    if (s.image_path.empty()) throw ValidationError("sample \"" + s.id + "\": empty image_path");
    if (s.audio_path.empty()) throw ValidationError("sample \"" + s.id + "\": empty audio_path");
    auto [it, inserted] = audio_owner.emplace(s.audio_path, s.id);
    if (!inserted && !m.clip_reuse) {
      throw ValidationError("sample \"" + s.id + "\": audio_path \"" + s.audio_path +
                            "\" already used by sample \"" + it->second + "\"");
    }
    if (s.caption && s.caption->empty()) {
      throw ValidationError("sample \"" + s.id + "\": caption present but empty");
    }
    if (s.enhanced_description && s.enhanced_description->empty()) {
      throw ValidationError("sample \"" + s.id + "\": enhanced_description present but empty");
    }
  }

  if (m.ratios) {
    m.ratios->validate();
    std::map<Emotion, std::array<std::size_t, 3>> counts;
    for (const auto& s : m.samples) counts[s.emotion][static_cast<int>(s.split)]++;
    for (const auto& [emotion, c] : counts) {
      const std::size_t n = c[0] + c[1] + c[2];
      const SplitCounts want = split_counts(n, *m.ratios);
      const std::array<double, 3> target = {n * m.ratios->train, n * m.ratios->eval, n * m.ratios->test};
      const std::array<std::size_t, 3> expected = {want.train, want.eval, want.test};
      for (int k = 0; k < 3; ++k) {
        const bool within = n < 3 ? c[k] == expected[k] : std::abs(static_cast<double>(c[k]) - target[k]) < 1.0;
        if (!within) {
          throw ValidationError("field \"ratios\": emotion \"" + std::string(to_string(emotion)) + "\" has " +
                                std::to_string(c[k]) + " " + std::string(to_string(static_cast<Split>(k))) +
                                " samples, expected " + std::to_string(expected[k]));
        }
      }
    }
  }
}

namespace {

template <typename T>
T require(const json& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError(std::string(where) + ": missing field \"" + key + "\"");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string(where) + ": field \"" + key + "\" has the wrong type");
  }
}

std::optional<std::string> optional_string(const json& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ValidationError(std::string(where) + ": field \"" + key + "\" must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

Manifest parse_manifest(std::string_view json_text, std::string_view origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string(origin) + ": malformed manifest JSON: " + e.what());
  }
  if (!doc.is_object()) throw IoError(std::string(origin) + ": manifest must be a JSON object");

  const std::string where(origin);
  Manifest m;
  m.version = require<std::string>(doc, "version", where);
  m.sample_rate = require<int>(doc, "sample_rate", where);
  m.chunk_seconds = require<double>(doc, "chunk_seconds", where);
  m.seed = require<std::int64_t>(doc, "seed", where);
  if (auto it = doc.find("ratios"); it != doc.end()) {
    SplitRatios r;
    r.train = require<double>(*it, "train", where + " ratios");
    r.eval = require<double>(*it, "eval", where + " ratios");
    r.test = require<double>(*it, "test", where + " ratios");
    m.ratios = r;
  }
  if (auto it = doc.find("clip_reuse"); it != doc.end()) m.clip_reuse = it->get<bool>();

  auto samples = doc.find("samples");
  if (samples == doc.end() || !samples->is_array()) {
    throw ValidationError(where + ": missing array field \"samples\"");
  }
  std::size_t index = 0;
  for (const auto& item : *samples) {
    std::string at = where + " samples[" + std::to_string(index++) + "]";
    if (!item.is_object()) throw ValidationError(at + ": sample must be an object");
    PairedSample s;
    s.id = require<std::string>(item, "id", at);
    at = where + " sample \"" + s.id + "\"";
    s.image_path = require<std::string>(item, "image_path", at);
    s.audio_path = require<std::string>(item, "audio_path", at);
    const auto emotion = require<std::string>(item, "emotion", at);
    auto e = try_parse_emotion(emotion);
    if (!e) {
      throw ValidationError(at + ": unknown emotion \"" + emotion + "\"; expected one of: " + legal_emotion_list());
    }
    s.emotion = *e;
    try {
      s.split = parse_split(require<std::string>(item, "split", at));
    } catch (const ValidationError& err) {
      throw ValidationError(at + ": " + err.what());
    }
    s.caption = optional_string(item, "caption", at);
    s.enhanced_description = optional_string(item, "enhanced_description", at);
    m.samples.push_back(std::move(s));
  }
  validate_manifest(m);
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("manifest not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.string());
}

std::string to_canonical_json(const Manifest& m) {
  json doc = json::object();
  doc["version"] = m.version;
  doc["sample_rate"] = m.sample_rate;
  if (m.chunk_seconds == std::floor(m.chunk_seconds) && std::abs(m.chunk_seconds) < 1e15) {
    doc["chunk_seconds"] = static_cast<std::int64_t>(m.chunk_seconds);
  } else {
    doc["chunk_seconds"] = m.chunk_seconds;
  }
  doc["seed"] = m.seed;
  if (m.ratios) {
    doc["ratios"] = {{"train", m.ratios->train}, {"eval", m.ratios->eval}, {"test", m.ratios->test}};
  }
  if (m.clip_reuse) doc["clip_reuse"] = true;
  json samples = json::array();
  for (const auto& s : m.samples) {
    json item = {{"id", s.id},
                 {"image_path", s.image_path},
                 {"audio_path", s.audio_path},
                 {"emotion", std::string(to_string(s.emotion))},
                 {"split", std::string(to_string(s.split))}};
    if (s.caption) item["caption"] = *s.caption;
    if (s.enhanced_description) item["enhanced_description"] = *s.enhanced_description;
    samples.push_back(std::move(item));
  }
  doc["samples"] = std::move(samples);
  return doc.dump(2, ' ', false, json::error_handler_t::strict) + "\n";
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  validate_manifest(m);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto text = to_canonical_json(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << text;
  if (!out) throw IoError("failed writing manifest " + path.string());
}

}  // namespace p2m
