#include "syncmatch/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "syncmatch/errors.hpp"

namespace syncmatch {

namespace {

constexpr const char* kMagicLine = "syncmatch-checkpoint";

std::string shape_token(const ndgrad::Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out;
}

ndgrad::Shape parse_shape(const std::string& tok, const std::filesystem::path& path) {
  ndgrad::Shape s;
  std::stringstream ss(tok);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || part.empty() || v == 0) {
      throw CheckpointError(path.string() + ": malformed shape '" + tok + "'");
    }
    s.push_back(static_cast<std::size_t>(v));
  }
  if (s.empty()) throw CheckpointError(path.string() + ": empty shape");
  return s;
}

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

const CheckpointArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

Checkpoint make_checkpoint(nlohmann::json config, std::span<const ndgrad::Parameter* const> params) {
  Checkpoint c;
  c.config = std::move(config);
  for (const auto* p : params) {
    auto v = p->values();
    c.arrays.push_back({p->name(), p->shape(), {v.begin(), v.end()}});
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::string header = std::string(kMagicLine) + "\nversion " + std::to_string(ckpt.version) + "\nconfig " +
                       ckpt.config.dump() + "\n";
  std::string payload;
  for (const auto& a : ckpt.arrays) {
    if (a.name.empty() || a.name.find_first_of(" \t\n") != std::string::npos) {
      throw CheckpointError("array name '" + a.name + "' must be non-empty without whitespace");
    }
    if (ndgrad::element_count(a.shape) != a.values.size()) {
      throw CheckpointError("array '" + a.name + "' holds " + std::to_string(a.values.size()) +
                            " values but has shape " + ndgrad::to_string(a.shape));
    }
    header += "array " + a.name + " " + shape_token(a.shape) + " " + std::to_string(payload.size()) + " " +
              std::to_string(a.values.size()) + "\n";
    for (double v : a.values) put_le(payload, v);
  }
  header += "payload " + std::to_string(payload.size()) + "\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  auto fail = [&](const std::string& what) { return CheckpointError(path.string() + ": " + what); };

  std::string line;
  if (!std::getline(in, line) || line != kMagicLine) throw fail("not a checkpoint file");

  Checkpoint c;
  if (!std::getline(in, line) || line.rfind("version ", 0) != 0) throw fail("missing version line");
  try {
    c.version = std::stoi(line.substr(8));
  } catch (const std::exception&) {
    throw fail("malformed version line '" + line + "'");
  }
  if (c.version != kCheckpointVersion) {
    throw fail("unsupported checkpoint version " + std::to_string(c.version) + " (expected " +
               std::to_string(kCheckpointVersion) + ")");
  }
  if (!std::getline(in, line) || line.rfind("config ", 0) != 0) throw fail("missing config line");
  try {
    c.config = nlohmann::json::parse(line.substr(7));
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("malformed config: ") + e.what());
  }

  struct Entry {
    std::size_t offset, count;
  };
  std::vector<Entry> entries;
  std::size_t payload_bytes = 0;
  bool have_payload = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "array") {
      std::string name, shape;
      std::size_t offset = 0, count = 0;
      if (!(ls >> name >> shape >> offset >> count)) throw fail("malformed array line '" + line + "'");
      CheckpointArray a{name, parse_shape(shape, path), {}};
      if (ndgrad::element_count(a.shape) != count) {
        throw fail("array '" + name + "' shape " + ndgrad::to_string(a.shape) + " does not match element count " +
                   std::to_string(count));
      }
      c.arrays.push_back(std::move(a));
      entries.push_back({offset, count});
    } else if (kind == "payload") {
      if (!(ls >> payload_bytes)) throw fail("malformed payload line '" + line + "'");
      have_payload = true;
      break;
    } else {
      throw fail("unexpected manifest line '" + line + "'");
    }
  }
  if (!have_payload) throw fail("missing payload line");

  std::string payload(payload_bytes, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload_bytes));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != payload_bytes) {
    throw fail("truncated payload: expected " + std::to_string(payload_bytes) + " bytes, found " +
               std::to_string(got));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw fail("trailing bytes after payload");

  std::size_t expected_offset = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.offset != expected_offset || e.offset + 8 * e.count > payload_bytes) {
      throw fail("array '" + c.arrays[i].name + "' has inconsistent offset " + std::to_string(e.offset));
    }
    auto& values = c.arrays[i].values;
    values.resize(e.count);
    for (std::size_t k = 0; k < e.count; ++k) values[k] = get_le(payload.data() + e.offset + 8 * k);
    expected_offset += 8 * e.count;
  }
  if (expected_offset != payload_bytes) {
    throw fail("payload holds " + std::to_string(payload_bytes) + " bytes but arrays account for " +
               std::to_string(expected_offset));
  }
  return c;
}

void restore_parameters(const Checkpoint& ckpt, std::span<ndgrad::Parameter* const> params) {
  for (auto* p : params) {
    const auto* a = ckpt.find(p->name());
    if (!a) throw CheckpointError("checkpoint has no array '" + p->name() + "'");
    if (a->shape != p->shape()) {
      throw CheckpointError("array '" + p->name() + "' has shape " + ndgrad::to_string(a->shape) + ", expected " +
                            ndgrad::to_string(p->shape()));
    }
    std::memcpy(p->values().data(), a->values.data(), a->values.size() * sizeof(double));
  }
}

void require_config(const Checkpoint& ckpt, const std::string& key, const nlohmann::json& expected) {
  const auto it = ckpt.config.find(key);
  const nlohmann::json stored = it == ckpt.config.end() ? nlohmann::json() : *it;
  if (stored != expected) {
    throw CheckpointError(key + " mismatch: checkpoint " + stored.dump() + " vs requested " + expected.dump());
  }
}

}  // namespace syncmatch
