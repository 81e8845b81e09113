#include "dessim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dessim {

const char* to_string(SynthModel model) {
  switch (model) {
    case SynthModel::iid_gaussian: return "iid_gaussian";
    case SynthModel::dirichlet: return "dirichlet";
    case SynthModel::shared_bias: return "shared_bias";
  }
  return "unknown";
}

SynthModel synth_model_from_string(const std::string& name) {
  if (name == "iid_gaussian") return SynthModel::iid_gaussian;
  if (name == "dirichlet") return SynthModel::dirichlet;
  if (name == "shared_bias") return SynthModel::shared_bias;
  throw std::invalid_argument("unknown synth model: " + name);
}

const RouterBlock& TraceFile::block(int step, int layer) const {
  if (step < 0 || step >= header.steps || layer < 0 || layer >= header.layers) {
    throw std::invalid_argument("block key out of range");
  }
  return blocks[static_cast<std::size_t>(step) * header.layers + layer];
}

namespace {

double quantize(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

TraceFile gen_trace(const PoolConfig& cfg, const SynthParams& params, int layers, int steps,
                    int block_size, std::uint64_t seed) {
  validate_config(cfg);
  if (layers < 1) throw std::invalid_argument("layers < 1");
  if (steps < 1) throw std::invalid_argument("steps < 1");
  if (block_size < 1) throw std::invalid_argument("block_size < 1");
  if (params.rho < 0.0 || params.rho > 1.0) throw std::invalid_argument("rho outside [0, 1]");
  if (!(params.temperature > 0.0)) throw std::invalid_argument("temperature <= 0");

  TraceFile file;
  file.header.experts = cfg.experts_total;
  file.header.top_k = cfg.top_k;
  file.header.layers = layers;
  file.header.block_size = block_size;
  file.header.steps = steps;
  file.header.model = params.model;
  file.header.rho = quantize(params.rho);
  file.header.temperature = quantize(params.temperature);
  file.header.seed = seed;

  const int m = cfg.experts_total;
  const double tau = params.temperature;
  file.blocks.reserve(static_cast<std::size_t>(steps) * layers);

  for (int step = 0; step < steps; ++step) {
    for (int layer = 0; layer < layers; ++layer) {
      std::uint64_t block_index = static_cast<std::uint64_t>(step) * layers + layer;
      Rng rng(Rng::mix(seed, block_index));
      std::vector<double> logits(static_cast<std::size_t>(block_size) * m);

      switch (params.model) {
        case SynthModel::iid_gaussian: {
          for (double& v : logits) v = quantize(tau * rng.next_normal());
          break;
        }
        case SynthModel::dirichlet: {
          std::vector<double> expo(m);
          for (int n = 0; n < block_size; ++n) {
            double total = 0.0;
            for (int i = 0; i < m; ++i) {
              // Exponential draw, bounded away from zero so the log of the
              // normalized weight stays finite.
              expo[i] = std::max(-std::log(1.0 - rng.next_unit()), 1e-300);
              total += expo[i];
            }
            for (int i = 0; i < m; ++i) {
              logits[static_cast<std::size_t>(n) * m + i] =
                  quantize(tau * std::log(expo[i] / total));
            }
          }
          break;
        }
        case SynthModel::shared_bias: {
          std::vector<double> bias(m);
          for (double& b : bias) b = rng.next_normal();
          for (int n = 0; n < block_size; ++n) {
            for (int i = 0; i < m; ++i) {
              double noise = rng.next_normal();
              logits[static_cast<std::size_t>(n) * m + i] =
                  quantize(tau * (params.rho * bias[i] + (1.0 - params.rho) * noise));
            }
          }
          break;
        }
      }
      file.blocks.push_back(make_router_block(block_size, m, std::move(logits)));
    }
  }
  return file;
}

namespace {

using Code = TraceError::Code;

constexpr char kMagic[4] = {'M', 'O', 'E', 'T'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Cursor {
  std::string_view data;
  std::size_t pos = 0;
  int record = -1;  // current record index, for error messages

  bool need(std::size_t n) const { return pos + n <= data.size(); }

  void require(std::size_t n) {
    if (!need(n)) {
      if (record >= 0) {
        throw TraceError(Code::truncated,
                         "truncated file in record " + std::to_string(record));
      }
      throw TraceError(Code::truncated, "truncated header");
    }
  }

  std::uint8_t u8() {
    require(1);
    return static_cast<std::uint8_t>(data[pos++]);
  }
  std::uint16_t u16() {
    require(2);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(data[pos + i])) << (8 * i);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    require(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    require(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

void check_header(const TraceHeader& h) {
  if (h.experts < 1 || h.top_k < 1 || h.top_k > h.experts || h.layers < 1 ||
      h.block_size < 1 || h.steps < 1) {
    throw TraceError(Code::bad_header, "invalid header field");
  }
  if (!std::isfinite(h.rho) || !std::isfinite(h.temperature)) {
    throw TraceError(Code::bad_header, "non-finite header field");
  }
}

std::string encode_binary(const TraceFile& file) {
  const TraceHeader& h = file.header;
  std::string out;
  out.append(kMagic, 4);
  put_u16(out, kVersion);
  out.push_back(static_cast<char>(static_cast<int>(h.model)));
  out.push_back(0);  // reserved
  put_u32(out, static_cast<std::uint32_t>(h.experts));
  put_u32(out, static_cast<std::uint32_t>(h.top_k));
  put_u32(out, static_cast<std::uint32_t>(h.layers));
  put_u32(out, static_cast<std::uint32_t>(h.block_size));
  put_u32(out, static_cast<std::uint32_t>(h.steps));
  put_u64(out, h.seed);
  put_f32(out, static_cast<float>(h.rho));
  put_f32(out, static_cast<float>(h.temperature));

  for (int step = 0; step < h.steps; ++step) {
    for (int layer = 0; layer < h.layers; ++layer) {
      const RouterBlock& block = file.block(step, layer);
      put_u32(out, static_cast<std::uint32_t>(step));
      put_u32(out, static_cast<std::uint32_t>(layer));
      for (double v : block.logits) {
        put_f32(out, static_cast<float>(v));
      }
    }
  }
  return out;
}

TraceFile decode_binary(std::string_view bytes) {
  Cursor cur{bytes};
  cur.require(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw TraceError(Code::bad_magic, "bad magic bytes");
  }
  cur.pos = 4;
  std::uint16_t version = cur.u16();
  if (version != kVersion) {
    throw TraceError(Code::bad_version, "unsupported version " + std::to_string(version));
  }
  std::uint8_t model = cur.u8();
  if (model > 2) {
    throw TraceError(Code::bad_header, "unknown generator model");
  }
  cur.u8();  // reserved

  TraceFile file;
  TraceHeader& h = file.header;
  h.model = static_cast<SynthModel>(model);
  h.experts = static_cast<int>(cur.u32());
  h.top_k = static_cast<int>(cur.u32());
  h.layers = static_cast<int>(cur.u32());
  h.block_size = static_cast<int>(cur.u32());
  h.steps = static_cast<int>(cur.u32());
  h.seed = cur.u64();
  h.rho = cur.f32();
  h.temperature = cur.f32();
  check_header(h);

  const std::size_t values = static_cast<std::size_t>(h.block_size) * h.experts;
  const int records = h.steps * h.layers;
  file.blocks.reserve(records);
  for (int r = 0; r < records; ++r) {
    cur.record = r;
    int expect_step = r / h.layers;
    int expect_layer = r % h.layers;
    int step = static_cast<int>(cur.u32());
    int layer = static_cast<int>(cur.u32());
    if (step != expect_step || layer != expect_layer) {
      throw TraceError(Code::shape_mismatch,
                       "record " + std::to_string(r) + " keyed (" + std::to_string(step) +
                           "," + std::to_string(layer) + "), expected (" +
                           std::to_string(expect_step) + "," + std::to_string(expect_layer) +
                           ")");
    }
    std::vector<double> logits(values);
    for (std::size_t i = 0; i < values; ++i) {
      float v = cur.f32();
      if (!std::isfinite(v)) {
        throw TraceError(Code::bad_value, "non-finite logit in record " + std::to_string(r));
      }
      logits[i] = static_cast<double>(v);
    }
    file.blocks.push_back(RouterBlock{h.block_size, h.experts, std::move(logits)});
  }
  if (cur.pos != bytes.size()) {
    throw TraceError(Code::shape_mismatch, "trailing bytes after last record");
  }
  return file;
}

std::string encode_jsonl(const TraceFile& file) {
  const TraceHeader& h = file.header;
  nlohmann::json header;
  header["version"] = kVersion;
  header["experts"] = h.experts;
  header["top_k"] = h.top_k;
  header["layers"] = h.layers;
  header["block_size"] = h.block_size;
  header["steps"] = h.steps;
  header["model"] = to_string(h.model);
  header["rho"] = h.rho;
  header["temperature"] = h.temperature;
  header["seed"] = h.seed;

  std::string out = header.dump();
  out.push_back('\n');
  for (int step = 0; step < h.steps; ++step) {
    for (int layer = 0; layer < h.layers; ++layer) {
      const RouterBlock& block = file.block(step, layer);
      nlohmann::json rec;
      rec["step"] = step;
      rec["layer"] = layer;
      auto& rows = rec["logits"] = nlohmann::json::array();
      for (int n = 0; n < block.block_size; ++n) {
        auto row = block.row(n);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
      }
      out += rec.dump();
      out.push_back('\n');
    }
  }
  return out;
}

TraceFile decode_jsonl(std::string_view bytes) {
  std::istringstream in{std::string(bytes)};
  std::string line;
  if (!std::getline(in, line)) {
    throw TraceError(Code::truncated, "missing header line");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw TraceError(Code::bad_header, "unparseable header line");
  }

  TraceFile file;
  TraceHeader& h = file.header;
  try {
    int version = header.at("version").get<int>();
    if (version != kVersion) {
      throw TraceError(Code::bad_version, "unsupported version " + std::to_string(version));
    }
    h.experts = header.at("experts").get<int>();
    h.top_k = header.at("top_k").get<int>();
    h.layers = header.at("layers").get<int>();
    h.block_size = header.at("block_size").get<int>();
    h.steps = header.at("steps").get<int>();
    h.model = synth_model_from_string(header.at("model").get<std::string>());
    h.rho = header.at("rho").get<double>();
    h.temperature = header.at("temperature").get<double>();
    h.seed = header.at("seed").get<std::uint64_t>();
  } catch (const TraceError&) {
    throw;
  } catch (const std::exception&) {
    throw TraceError(Code::bad_header, "malformed header line");
  }
  check_header(h);

  const int records = h.steps * h.layers;
  file.blocks.reserve(records);
  for (int r = 0; r < records; ++r) {
    if (!std::getline(in, line)) {
      throw TraceError(Code::truncated, "missing record " + std::to_string(r));
    }
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw TraceError(Code::shape_mismatch, "unparseable record " + std::to_string(r));
    }
    int expect_step = r / h.layers;
    int expect_layer = r % h.layers;
    try {
      if (rec.at("step").get<int>() != expect_step ||
          rec.at("layer").get<int>() != expect_layer) {
        throw TraceError(Code::shape_mismatch,
                         "record " + std::to_string(r) + " out of order");
      }
      const auto& rows = rec.at("logits");
      if (static_cast<int>(rows.size()) != h.block_size) {
        throw TraceError(Code::shape_mismatch,
                         "record " + std::to_string(r) + " has " +
                             std::to_string(rows.size()) + " rows, expected " +
                             std::to_string(h.block_size));
      }
      std::vector<double> logits;
      logits.reserve(static_cast<std::size_t>(h.block_size) * h.experts);
      for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != h.experts) {
          throw TraceError(Code::shape_mismatch,
                           "record " + std::to_string(r) + " has a " +
                               std::to_string(row.size()) + "-wide row, expected " +
                               std::to_string(h.experts));
        }
        for (const auto& v : row) {
          if (!v.is_number()) {
            throw TraceError(Code::bad_value,
                             "non-numeric logit in record " + std::to_string(r));
          }
          double d = v.get<double>();
          if (!std::isfinite(d)) {
            throw TraceError(Code::bad_value,
                             "non-finite logit in record " + std::to_string(r));
          }
          logits.push_back(d);
        }
      }
      file.blocks.push_back(RouterBlock{h.block_size, h.experts, std::move(logits)});
    } catch (const TraceError&) {
      throw;
    } catch (const std::exception&) {
      throw TraceError(Code::shape_mismatch, "malformed record " + std::to_string(r));
    }
  }
  while (std::getline(in, line)) {
    if (!line.empty()) {
      throw TraceError(Code::shape_mismatch, "trailing data after last record");
    }
  }
  return file;
}

}  // namespace

std::string encode_trace(const TraceFile& file, TraceFormat format) {
  check_header(file.header);
  if (file.block_count() != file.header.steps * file.header.layers) {
    throw TraceError(Code::shape_mismatch, "block count does not match header");
  }
  return format == TraceFormat::binary ? encode_binary(file) : encode_jsonl(file);
}

TraceFile decode_trace(std::string_view bytes) {
  if (bytes.empty()) {
    throw TraceError(Code::bad_magic, "empty input");
  }
  if (bytes.front() == '{') {
    return decode_jsonl(bytes);
  }
  return decode_binary(bytes);
}

void write_trace(const TraceFile& file, const std::string& path, TraceFormat format) {
  std::string bytes = encode_trace(file, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw TraceError(TraceError::Code::io, "cannot open for writing: " + path);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw TraceError(TraceError::Code::io, "write failed: " + path);
  }
}

TraceFile read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TraceError(TraceError::Code::io, "cannot open for reading: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_trace(buf.str());
}

}  // namespace dessim
