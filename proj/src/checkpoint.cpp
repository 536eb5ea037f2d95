#include "arunet/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace arunet {

namespace {

constexpr char kMagic[8] = {'A', 'R', 'U', 'C', 'K', 'P', 'T', '1'};

static_assert(sizeof(double) == 8);

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string& path, const AruModel& model, const AdamW* opt,
                     int64_t step, int64_t bytes_seen, const Config& cfg) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["step"] = step;
  header["bytes_seen"] = bytes_seen;
  header["config"] = config_to_text(cfg);
  header["has_optimizer"] = opt != nullptr;
  header["adam_t"] = opt ? opt->steps_taken() : 0;

  nlohmann::json tensors = nlohmann::json::array();
  std::vector<const std::vector<double>*> payloads;
  int64_t offset = 0;
  auto add_entry = [&](const std::string& name, const std::vector<int64_t>& shape,
                       const std::vector<double>& values) {
    nlohmann::json e;
    e["name"] = name;
    e["shape"] = shape;
    e["offset"] = offset;
    e["count"] = static_cast<int64_t>(values.size());
    tensors.push_back(e);
    payloads.push_back(&values);
    offset += static_cast<int64_t>(values.size());
  };

  for (const auto& [name, t] : model.params()) {
    add_entry(name, t.shape, *t.data);
    if (opt) {
      add_entry(name + ".adam_m", t.shape, opt->first_moment(name));
      add_entry(name + ".adam_v", t.shape, opt->second_moment(name));
    }
  }
  header["tensors"] = tensors;

  std::string header_str = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
  out.write(kMagic, 8);
  uint64_t hlen = header_str.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto* p : payloads) write_doubles(out, *p);
  if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::string(magic, 8) != std::string(kMagic, 8)) {
    throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
  }
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string header_str(hlen, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("checkpoint: truncated header in '" + path + "'");
  nlohmann::json header = nlohmann::json::parse(header_str);

  Checkpoint ckpt;
  ckpt.config = parse_config_text(header.at("config").get<std::string>());
  ckpt.step = header.at("step").get<int64_t>();
  ckpt.bytes_seen = header.at("bytes_seen").get<int64_t>();
  ckpt.adam_t = header.at("adam_t").get<int64_t>();
  ckpt.has_optimizer = header.at("has_optimizer").get<bool>();

  std::streampos payload_start = in.tellg();
  for (const auto& e : header.at("tensors")) {
    Checkpoint::Entry entry;
    entry.shape = e.at("shape").get<std::vector<int64_t>>();
    int64_t count = e.at("count").get<int64_t>();
    int64_t offset = e.at("offset").get<int64_t>();
    entry.values.resize(static_cast<size_t>(count));
    in.seekg(payload_start + static_cast<std::streamoff>(offset * 8));
    in.read(reinterpret_cast<char*>(entry.values.data()),
            static_cast<std::streamsize>(count * 8));
    if (!in) throw std::runtime_error("checkpoint: truncated payload in '" + path + "'");
    ckpt.tensors.emplace(e.at("name").get<std::string>(), std::move(entry));
  }
  return ckpt;
}

void restore_model(AruModel& model, const Checkpoint& ckpt) {
  for (auto& [name, t] : model.params()) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) {
      throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
    }
    if (it->second.shape != t.shape) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': " +
                               shape_str(it->second.shape) + " vs " + shape_str(t.shape));
    }
    *t.data = it->second.values;
  }
}

void restore_optimizer(AdamW& opt, const Checkpoint& ckpt) {
  if (!ckpt.has_optimizer) {
    throw std::runtime_error("checkpoint: no optimizer state saved");
  }
  opt.set_steps_taken(ckpt.adam_t);
  for (const auto& [name, t] : opt.params()) {
    auto m = ckpt.tensors.find(name + ".adam_m");
    auto v = ckpt.tensors.find(name + ".adam_v");
    if (m == ckpt.tensors.end() || v == ckpt.tensors.end()) {
      throw std::runtime_error("checkpoint: missing optimizer state for '" + name + "'");
    }
    opt.first_moment(name) = m->second.values;
    opt.second_moment(name) = v->second.values;
  }
}

}  // namespace arunet
