#include "p2m/dataset/curate.hpp"

#include <algorithm>
#include <fstream>
#include <spdlog/spdlog.h>

#include "p2m/audio/resample.hpp"
#include "p2m/audio/wav.hpp"
#include "p2m/core/error.hpp"
#include "p2m/core/parallel.hpp"
#include "p2m/core/split.hpp"
#include "p2m/dataset/chunk.hpp"
#include "p2m/dataset/pairing.hpp"
#include "p2m/image/image.hpp"

namespace fs = std::filesystem;

namespace p2m::dataset {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

/// Rethrows the current exception with `file` prefixed, keeping its type family.
[[noreturn]] void rethrow_tagged(const fs::path& file) {
  try {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(file.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(file.string() + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(file.string() + ": " + e.what());
  }
}

struct RenderedMidi {
  std::vector<ClipRef> clips;
  std::vector<fs::path> written;
};

}  // namespace

std::vector<std::pair<fs::path, std::string>> read_label_csv(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open annotation file " + csv.string());
  std::vector<std::pair<fs::path, std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ValidationError(csv.string() + ":" + std::to_string(lineno) + ": expected \"path,label\"");
    }
    auto path = trim(line.substr(0, comma));
    auto label = trim(line.substr(comma + 1));
    if (lineno == 1 && path == "path") continue;
    if (path.empty() || label.empty()) {
      throw ValidationError(csv.string() + ":" + std::to_string(lineno) + ": empty path or label");
    }
    rows.emplace_back(csv.parent_path() / path, label);
  }
  return rows;
}

CurationResult curate(const CurationConfig& config, const MidiSynthBackend& synth) {
  config.ratios.validate();
  if (config.out_dir.empty()) throw ValidationError("curation output directory not set");
  const fs::path painting_csv =
      config.painting_labels.empty() ? config.paintings_dir / "annotations.csv" : config.painting_labels;
  const fs::path midi_csv = config.midi_labels.empty() ? config.midi_dir / "annotations.csv" : config.midi_labels;

  std::vector<PaintingSource> paintings;
  for (auto& [path, label] : read_label_csv(painting_csv)) {
    try {
      const Emotion e = parse_emotion(label);
      (void)load_image(path);
      paintings.push_back({path, e});
    } catch (...) {
      rethrow_tagged(path);
    }
  }
  if (paintings.empty()) throw ValidationError(painting_csv.string() + ": no paintings listed");

  std::vector<MidiSource> midis;
  for (auto& [path, label] : read_label_csv(midi_csv)) midis.push_back({path, label});
  if (midis.empty()) throw ValidationError(midi_csv.string() + ": no MIDI files listed");
  {
    std::vector<std::string> stems;
    for (const auto& m : midis) stems.push_back(m.path.stem().string());
    std::sort(stems.begin(), stems.end());
    if (auto dup = std::adjacent_find(stems.begin(), stems.end()); dup != stems.end()) {
      throw ValidationError(midi_csv.string() + ": two MIDI files share the stem \"" + *dup + "\"");
    }
  }

  const fs::path audio_dir = config.out_dir / "audio";
  fs::create_directories(audio_dir);

  std::vector<RenderedMidi> rendered(midis.size());
  parallel_for(midis.size(), config.threads, [&](std::size_t i) {
    const MidiSource& src = midis[i];
    try {
      const Emotion emotion = map_cluster(src.cluster_label, config.emotion_map);
      const Waveform raw = render_midi(src, synth, config.synth_rate);
      const Waveform audio = audio::resample(raw, config.sample_rate);
      const auto chunks = chunk_audio(audio, config.chunk_seconds);
      if (chunks.empty()) {
        spdlog::warn("{}: rendered {:.2f} s, shorter than one {} s chunk; no clips produced", src.path.string(),
                     audio.duration(), config.chunk_seconds);
      }
      for (std::size_t k = 0; k < chunks.size(); ++k) {
        const std::string name = src.path.stem().string() + "_chunk" + std::to_string(k) + ".wav";
        audio::write_wav16(chunks[k], audio_dir / name);
        rendered[i].clips.push_back({"audio/" + name, emotion});
        rendered[i].written.push_back(audio_dir / name);
      }
    } catch (...) {
      rethrow_tagged(src.path);
    }
  });

  CurationResult result;
  std::vector<ClipRef> clips;
  for (auto& r : rendered) {
    clips.insert(clips.end(), r.clips.begin(), r.clips.end());
    result.written_audio.insert(result.written_audio.end(), r.written.begin(), r.written.end());
  }

  PairingResult pairing = pair_by_emotion(paintings, clips, config.seed);
  const fs::path out_abs = fs::absolute(config.out_dir).lexically_normal();
  for (auto& s : pairing.samples) {
    s.image_path = fs::absolute(s.image_path).lexically_normal().lexically_relative(out_abs).generic_string();
  }
  if (pairing.clip_reuse) {
    spdlog::warn("fewer clips than paintings for at least one emotion; clips are reused across pairs");
  }

  Manifest m;
  m.sample_rate = config.sample_rate;
  m.chunk_seconds = config.chunk_seconds;
  m.seed = config.seed;
  m.ratios = config.ratios;
  m.clip_reuse = pairing.clip_reuse;
  m.samples = split_dataset(std::move(pairing.samples), config.ratios, config.seed);

  result.manifest_path = config.out_dir / "manifest.json";
  save_manifest(m, result.manifest_path);
  result.manifest = std::move(m);
  return result;
}

}  // namespace p2m::dataset
