// Copyright 2026 The groundrl Authors.
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

#include "groundrl/checkpoint.h"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "groundrl/errors.h"

namespace groundrl {
namespace {

constexpr std::string_view kMagic = "groundrl-checkpoint";
constexpr int kValuesPerLine = 8;

void write_array(std::string& out, std::string_view name,
                 std::span<const double> values) {
  out += "array ";
  out += name;
  out += ' ';
  out += std::to_string(values.size());
  out += '\n';
  char buf[64];
  for (size_t i = 0; i < values.size(); ++i) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), values[i]);
    (void)ec;
    out.append(buf, end);
    out += ((i + 1) % kValuesPerLine == 0 || i + 1 == values.size()) ? '\n' : ' ';
  }
}

uint64_t parse_hex(std::string_view s) {
  if (s.substr(0, 2) == "0x") s.remove_prefix(2);
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw CheckpointError("bad hex value: " + std::string(s));
  }
  return v;
}

int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw CheckpointError("bad integer: " + std::string(s));
  }
  return v;
}

// key=value pairs on a header line.
std::map<std::string, std::string> parse_pairs(std::istringstream& line) {
  std::map<std::string, std::string> kv;
  std::string item;
  while (line >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw CheckpointError("bad field: " + item);
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

const std::string& get(const std::map<std::string, std::string>& kv,
                       const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw CheckpointError("missing header field: " + key);
  return it->second;
}

}  // namespace

std::string hex64(uint64_t v) {
  char buf[19] = "0x";
  auto [end, ec] = std::to_chars(buf + 2, buf + sizeof(buf), v, 16);
  (void)ec;
  std::string s(buf + 2, end);
  return "0x" + std::string(16 - s.size(), '0') + s;
}

std::string serialize_checkpoint(const PolicyParams* base,
                                 const AdapterParams* adapter,
                                 uint64_t vocab_hash) {
  if (base == nullptr && adapter == nullptr) {
    throw CheckpointError("nothing to serialize");
  }
  std::string out;
  out += std::string(kMagic) + " " + std::to_string(kCheckpointFormatVersion) +
         "\n";
  out += "vocab_hash " + hex64(vocab_hash) + "\n";
  if (base != nullptr) {
    const PolicyConfig& c = base->config();
    out += "base phase=" + std::string(phase_name(base->phase())) +
           " version=" + hex64(base->content_hash()) +
           " vocab=" + std::to_string(c.vocab_size) +
           " embed=" + std::to_string(c.embed_dim) +
           " context=" + std::to_string(c.context) +
           " hidden=" + std::to_string(c.hidden) +
           " obs=" + std::to_string(c.obs_dim) + "\n";
    for (int b = 0; b < kNumBlocks; ++b) {
      write_array(out, block_name(static_cast<Block>(b)),
                  base->block(static_cast<Block>(b)));
    }
  }
  if (adapter != nullptr) {
    out += "adapter phase=theta_hat rank=" + std::to_string(adapter->rank()) +
           " hidden=" + std::to_string(adapter->hidden()) +
           " vocab=" + std::to_string(adapter->vocab_size()) +
           " base_version=" + hex64(adapter->base_version()) +
           " version=" + hex64(adapter->content_hash()) + "\n";
    write_array(out, "adapter_u", adapter->u());
    write_array(out, "adapter_w", adapter->w());
  }
  out += "end\n";
  return out;
}

Checkpoint parse_checkpoint(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next_line = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw CheckpointError("truncated checkpoint");
    return std::istringstream(line);
  };
  auto read_array = [&](std::string_view name, std::span<double> dst) {
    auto ls = next_line();
    std::string kw, got_name;
    size_t n = 0;
    ls >> kw >> got_name >> n;
    if (kw != "array" || got_name != name || n != dst.size()) {
      throw CheckpointError("expected array '" + std::string(name) + "' of " +
                            std::to_string(dst.size()) + " values, got: " +
                            line);
    }
    size_t i = 0;
    while (i < n) {
      auto vs = next_line();
      std::string tokn;
      while (vs >> tokn) {
        if (i >= n) throw CheckpointError("too many values in " + got_name);
        double v = 0.0;
        auto [ptr, ec] =
            std::from_chars(tokn.data(), tokn.data() + tokn.size(), v);
        if (ec != std::errc() || ptr != tokn.data() + tokn.size()) {
          throw CheckpointError("bad number '" + tokn + "' in " + got_name);
        }
        dst[i++] = v;
      }
    }
  };

  Checkpoint ck;
  {
    auto ls = next_line();
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != kMagic) throw CheckpointError("not a groundrl checkpoint");
    if (version != kCheckpointFormatVersion) {
      throw CheckpointError("unsupported checkpoint format version " +
                            std::to_string(version));
    }
  }
  {
    auto ls = next_line();
    std::string kw, hash;
    ls >> kw >> hash;
    if (kw != "vocab_hash") throw CheckpointError("missing vocab_hash");
    ck.vocab_hash = parse_hex(hash);
  }
  while (true) {
    auto ls = next_line();
    std::string kw;
    ls >> kw;
    if (kw == "end") break;
    const auto kv = parse_pairs(ls);
    if (kw == "base") {
      if (ck.base) throw CheckpointError("duplicate base section");
      PolicyConfig c;
      c.vocab_size = parse_int(get(kv, "vocab"));
      c.embed_dim = parse_int(get(kv, "embed"));
      c.context = parse_int(get(kv, "context"));
      c.hidden = parse_int(get(kv, "hidden"));
      c.obs_dim = parse_int(get(kv, "obs"));
      PolicyParams p;
      try {
        p = PolicyParams(c);
      } catch (const ConfigError& e) {
        throw CheckpointError(std::string("bad base shape: ") + e.what());
      }
      p.set_phase(phase_from_name(get(kv, "phase")));
      for (int b = 0; b < kNumBlocks; ++b) {
        read_array(block_name(static_cast<Block>(b)),
                   p.block(static_cast<Block>(b)));
      }
      if (p.content_hash() != parse_hex(get(kv, "version"))) {
        throw CheckpointError("base parameters do not match their version id");
      }
      ck.base = std::move(p);
    } else if (kw == "adapter") {
      if (ck.adapter) throw CheckpointError("duplicate adapter section");
      PolicyConfig c;
      c.hidden = parse_int(get(kv, "hidden"));
      c.vocab_size = parse_int(get(kv, "vocab"));
      AdapterParams a;
      try {
        a = AdapterParams(c, parse_int(get(kv, "rank")));
      } catch (const ConfigError& e) {
        throw CheckpointError(std::string("bad adapter shape: ") + e.what());
      }
      a.set_base_version(parse_hex(get(kv, "base_version")));
      read_array("adapter_u", a.u());
      read_array("adapter_w", a.w());
      if (a.content_hash() != parse_hex(get(kv, "version"))) {
        throw CheckpointError("adapter values do not match their version id");
      }
      ck.adapter = std::move(a);
    } else {
      throw CheckpointError("unknown section: " + kw);
    }
  }
  if (!ck.base && !ck.adapter) throw CheckpointError("empty checkpoint");
  if (ck.base && ck.adapter) check_adapter_matches(*ck.base, *ck.adapter);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path,
                     const PolicyParams* base, const AdapterParams* adapter,
                     uint64_t vocab_hash) {
  const std::string text = serialize_checkpoint(base, adapter, vocab_hash);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const PolicyConfig& expected, uint64_t vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Checkpoint ck = parse_checkpoint(buf.str());
  if (ck.vocab_hash != vocab_hash) {
    throw VocabularyError(path.string() + ": vocabulary hash " +
                          hex64(ck.vocab_hash) + " does not match " +
                          hex64(vocab_hash));
  }
  if (ck.base && !(ck.base->config() == expected)) {
    throw CheckpointError(path.string() + ": shape does not match config");
  }
  if (ck.adapter && (ck.adapter->hidden() != expected.hidden ||
                     ck.adapter->vocab_size() != expected.vocab_size)) {
    throw CheckpointError(path.string() + ": adapter shape does not match");
  }
  return ck;
}

void check_adapter_matches(const PolicyParams& base,
                           const AdapterParams& adapter) {
  if (adapter.base_version() != base.content_hash()) {
    throw CheckpointError("adapter was trained against base " +
                          hex64(adapter.base_version()) + ", not " +
                          hex64(base.content_hash()));
  }
}

void require_phase(const PolicyParams& params,
                   std::initializer_list<Phase> allowed,
                   std::string_view consumer) {
  require_phase(params, std::span<const Phase>(allowed.begin(), allowed.size()),
                consumer);
}

void require_phase(const PolicyParams& params, std::span<const Phase> allowed,
                   std::string_view consumer) {
  for (Phase p : allowed) {
    if (params.phase() == p) return;
  }
  std::string want;
  for (Phase p : allowed) {
    if (!want.empty()) want += " or ";
    want += phase_name(p);
  }
  throw PhaseGateError(std::string(consumer) + " expects a " + want +
                       " checkpoint, got " + phase_name(params.phase()));
}

}  // namespace groundrl
