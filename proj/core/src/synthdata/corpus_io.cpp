#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "syncmatch/errors.hpp"
#include "syncmatch/synthdata.hpp"

namespace syncmatch::synth {

namespace fs = std::filesystem;

namespace {

constexpr int kManifestVersion = 1;

void put_i32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t get_i32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

}  // namespace

void to_json(nlohmann::json& j, const ManifestEntry& e) {
  j = nlohmann::json{{"id", e.id},         {"kind", e.kind},         {"split", e.split},
                     {"seed", e.seed},     {"duration", e.duration}, {"latent", e.latent}};
  if (e.kind == "word") j["label"] = e.label;
}

void from_json(const nlohmann::json& j, ManifestEntry& e) {
  j.at("id").get_to(e.id);
  j.at("kind").get_to(e.kind);
  j.at("split").get_to(e.split);
  j.at("seed").get_to(e.seed);
  j.at("duration").get_to(e.duration);
  j.at("latent").get_to(e.latent);
  if (e.kind == "word") {
    if (!j.contains("label")) throw DataError("manifest entry '" + e.id + "' is a word clip without a label");
    j.at("label").get_to(e.label);
  }
}

void write_frames(const fs::path& path, const VideoClip& clip) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  put_i32(os, kFrameFileMagic);
  put_i32(os, static_cast<std::uint32_t>(clip.frames));
  put_i32(os, static_cast<std::uint32_t>(clip.channels));
  put_i32(os, static_cast<std::uint32_t>(clip.height));
  put_i32(os, static_cast<std::uint32_t>(clip.width));
  os.write(reinterpret_cast<const char*>(clip.pixels.data()), static_cast<std::streamsize>(clip.pixels.size()));
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

VideoClip read_frames(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::array<unsigned char, 20> header{};
  is.read(reinterpret_cast<char*>(header.data()), header.size());
  if (is.gcount() != static_cast<std::streamsize>(header.size())) {
    throw IoError("'" + path.string() + "': truncated frame header");
  }
  if (get_i32(header.data()) != kFrameFileMagic) throw IoError("'" + path.string() + "': bad frame file magic");
  VideoClip clip;
  clip.frames = get_i32(header.data() + 4);
  clip.channels = get_i32(header.data() + 8);
  clip.height = get_i32(header.data() + 12);
  clip.width = get_i32(header.data() + 16);
  clip.pixels.resize(clip.frames * clip.frame_size());
  is.read(reinterpret_cast<char*>(clip.pixels.data()), static_cast<std::streamsize>(clip.pixels.size()));
  if (is.gcount() != static_cast<std::streamsize>(clip.pixels.size())) {
    throw IoError("'" + path.string() + "': expected " + std::to_string(clip.pixels.size()) +
                  " pixel bytes, found " + std::to_string(is.gcount()));
  }
  return clip;
}

void write_corpus(const fs::path& dir, const Corpus& corpus) {
  ensure_dir(dir / "tracks");
  if (!corpus.words.empty()) ensure_dir(dir / "words");
  const fs::path manifest_path = dir / "manifest.jsonl";
  std::ofstream os(manifest_path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + manifest_path.string() + "' for writing");
  os << nlohmann::json{{"kind", "header"},
                       {"version", kManifestVersion},
                       {"seed", corpus.seed},
                       {"gen_config", corpus.config}}
            .dump()
     << '\n';
  for (const auto& e : corpus.manifest) os << nlohmann::json(e).dump() << '\n';
  if (!os) throw IoError("write failed for '" + manifest_path.string() + "'");

  for (const auto& t : corpus.tracks) {
    dsp::write_wav(dir / "tracks" / (t.id + ".wav"), t.waveform);
    write_frames(dir / "tracks" / (t.id + ".frames"), t.video);
  }
  for (const auto& w : corpus.words) write_frames(dir / "words" / (w.id + ".frames"), w.video);
}

Corpus read_corpus(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.jsonl";
  std::ifstream is(manifest_path);
  if (!is) throw IoError("cannot open corpus manifest '" + manifest_path.string() + "'");
  Corpus c;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(manifest_path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
    if (!have_header) {
      if (j.value("kind", "") != "header") throw DataError(manifest_path.string() + ": missing header line");
      if (j.at("version").get<int>() != kManifestVersion) {
        throw DataError(manifest_path.string() + ": unsupported manifest version");
      }
      j.at("seed").get_to(c.seed);
      j.at("gen_config").get_to(c.config);
      have_header = true;
      continue;
    }
    ManifestEntry e;
    try {
      e = j.get<ManifestEntry>();
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(manifest_path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
    if (e.kind == "track") {
      Track t;
      t.id = e.id;
      t.seed = e.seed;
      t.latent = e.latent;
      t.waveform = dsp::read_wav(dir / "tracks" / (e.id + ".wav"));
      t.video = read_frames(dir / "tracks" / (e.id + ".frames"));
      if (t.waveform.samples.size() != t.video.frames * static_cast<std::size_t>(t.waveform.sample_rate / kVideoFps)) {
        throw DataError("track '" + e.id + "': audio and video durations differ");
      }
      c.tracks.push_back(std::move(t));
    } else if (e.kind == "word") {
      c.words.push_back(WordClip{e.id, read_frames(dir / "words" / (e.id + ".frames")), e.label});
    } else {
      throw DataError(manifest_path.string() + ":" + std::to_string(lineno) + ": unknown entry kind '" + e.kind + "'");
    }
    c.manifest.push_back(std::move(e));
  }
  if (!have_header) throw DataError(manifest_path.string() + ": empty manifest");
  return c;
}

}  // namespace syncmatch::synth
