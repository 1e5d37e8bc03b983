#include "pima/train/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "pima/error.hpp"

namespace pima::train {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'P', 'I', 'M', 'A'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string string(std::size_t n) {
    need(n, "record name");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw ParseError("checkpoint truncated while reading " + std::string(what) + " at byte " + std::to_string(pos_));
    }
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

Record scalar_list(std::string name, std::vector<double> values) {
  Record r;
  r.name = std::move(name);
  r.dims = {values.size()};
  r.values = std::move(values);
  return r;
}

Record matrix(std::string name, std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Record{std::move(name), {rows, cols}, std::move(values)};
}

double exact(std::uint64_t v) {
  if (v > (std::uint64_t{1} << 53)) throw Error("checkpoint: integer too large to store exactly");
  return static_cast<double>(v);
}

std::uint64_t to_count(double v, const std::string& field) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 9007199254740992.0) {
    throw ParseError("checkpoint: field " + field + " is not a non-negative integer");
  }
  return static_cast<std::uint64_t>(v);
}

std::vector<std::uint64_t> rng_words(const Rng& rng) {
  std::ostringstream s;
  s << rng;
  std::istringstream in(s.str());
  std::vector<std::uint64_t> words;
  std::uint64_t w = 0;
  while (in >> w) words.push_back(w);
  return words;
}

}  // namespace

std::vector<std::uint8_t> encode_records(const std::vector<Record>& records, std::uint32_t version) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put<std::uint32_t>(out, version);
  for (const auto& r : records) {
    std::uint64_t count = 1;
    for (auto d : r.dims) count *= d;
    if (count != r.values.size()) throw ShapeError("checkpoint record " + r.name + ": dims do not match value count");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
    out.insert(out.end(), r.name.begin(), r.name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.dims.size()));
    for (auto d : r.dims) put<std::uint64_t>(out, d);
    for (double v : r.values) put<double>(out, v);
  }
  return out;
}

std::vector<Record> decode_records(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError("not a checkpoint (bad magic)");
  Reader in(bytes);
  in.get<std::uint32_t>("magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  std::vector<Record> records;
  while (!in.done()) {
    Record r;
    const auto len = in.get<std::uint32_t>("name length");
    r.name = in.string(len);
    const auto rank = in.get<std::uint32_t>("rank");
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      r.dims.push_back(in.get<std::uint64_t>("dims"));
      count *= r.dims.back();
    }
    if (count > in.remaining() / sizeof(double)) throw ParseError("checkpoint truncated in record " + r.name);
    r.values.resize(count);
    for (auto& v : r.values) v = in.get<double>("values");
    records.push_back(std::move(r));
  }
  return records;
}

Checkpoint make_checkpoint(const model::Model& model, const OptimizerState& optimizer, const Rng& rng,
                           std::uint64_t epoch, const alignment::LossConfig& loss, model::Objective objective) {
  Checkpoint c;
  c.model = model.config;
  c.loss = loss;
  c.objective = objective;
  for (const auto& p : model.named_parameters()) {
    c.parameters.push_back(matrix(p.name, p.tensor.rows(), p.tensor.cols(),
                                  std::vector<double>(p.tensor.data().begin(), p.tensor.data().end())));
  }
  c.optimizer = optimizer;
  c.rng_state = rng_words(rng);
  c.epoch = epoch;
  return c;
}

model::Model restore_model(const Checkpoint& c) {
  model::Model m = model::init_model(c.model, 0);
  const auto params = m.named_parameters();
  if (params.size() != c.parameters.size()) {
    throw ConfigError("checkpoint has " + std::to_string(c.parameters.size()) + " parameter tensors, model needs " +
                      std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Record& r = c.parameters[k];
    Tensor t = params[k].tensor;
    if (r.name != params[k].name || r.dims.size() != 2 || r.dims[0] != t.rows() || r.dims[1] != t.cols()) {
      throw ConfigError("checkpoint parameter " + r.name + " does not fit model slot " + params[k].name + " " +
                        t.shape().str());
    }
    std::copy(r.values.begin(), r.values.end(), t.mutable_data().begin());
  }
  return m;
}

Rng restore_rng(const Checkpoint& c) {
  std::ostringstream s;
  for (std::size_t i = 0; i < c.rng_state.size(); ++i) s << (i ? " " : "") << c.rng_state[i];
  Rng rng;
  std::istringstream in(s.str());
  in >> rng;
  if (in.fail()) throw ParseError("checkpoint: malformed rng state");
  return rng;
}

std::vector<std::uint8_t> serialize(const Checkpoint& c) {
  const auto& mc = c.model;
  std::vector<Record> records;
  records.push_back(scalar_list("config/model",
                                {exact(mc.vocab_size), exact(mc.token_width), exact(mc.ff_hidden),
                                 exact(mc.feature_width), exact(mc.sage_hidden), exact(mc.sage_layers),
                                 exact(mc.projection_hidden), exact(mc.projection_width), mc.use_graph ? 1.0 : 0.0}));
  records.push_back(scalar_list("config/loss", {c.loss.margin, c.loss.balance, c.loss.cosine_eps, c.loss.threshold}));
  records.push_back(scalar_list("config/objective", {c.objective == model::Objective::Pima ? 0.0 : 1.0}));
  for (const auto& r : c.parameters) records.push_back(r);
  const auto& oc = c.optimizer.config;
  records.push_back(scalar_list("optim/config", {oc.lr, oc.beta1, oc.beta2, oc.eps, oc.weight_decay}));
  records.push_back(scalar_list("optim/step", {exact(c.optimizer.step)}));
  if (c.optimizer.first_moment.size() != c.parameters.size() ||
      c.optimizer.second_moment.size() != c.parameters.size()) {
    throw ShapeError("checkpoint: optimizer state does not cover the parameters");
  }
  for (std::size_t k = 0; k < c.parameters.size(); ++k) {
    const auto& p = c.parameters[k];
    records.push_back(Record{"optim/m/" + p.name, p.dims, c.optimizer.first_moment[k]});
    records.push_back(Record{"optim/v/" + p.name, p.dims, c.optimizer.second_moment[k]});
  }
  std::vector<double> rng;
  for (auto w : c.rng_state) {
    rng.push_back(static_cast<double>(w >> 32));
    rng.push_back(static_cast<double>(w & 0xffffffffu));
  }
  records.push_back(scalar_list("rng/state", std::move(rng)));
  records.push_back(scalar_list("train/epoch", {exact(c.epoch)}));
  return encode_records(records);
}

Checkpoint deserialize(const std::vector<std::uint8_t>& bytes) {
  const auto records = decode_records(bytes);
  std::map<std::string, const Record*> reserved;
  Checkpoint c;
  for (const auto& r : records) {
    const bool is_reserved = r.name.starts_with("config/") || r.name.starts_with("optim/") ||
                             r.name.starts_with("rng/") || r.name.starts_with("train/");
    if (!is_reserved) {
      c.parameters.push_back(r);
      continue;
    }
    if (!reserved.emplace(r.name, &r).second) throw ParseError("checkpoint: duplicate record " + r.name);
  }
  auto values = [&](const std::string& name, std::size_t expected) -> const std::vector<double>& {
    const auto it = reserved.find(name);
    if (it == reserved.end()) throw ParseError("checkpoint: missing record " + name);
    if (expected && it->second->values.size() != expected) {
      throw ParseError("checkpoint: record " + name + " has " + std::to_string(it->second->values.size()) +
                       " values, expected " + std::to_string(expected));
    }
    return it->second->values;
  };
  const auto& m = values("config/model", 9);
  c.model.vocab_size = to_count(m[0], "vocab_size");
  c.model.token_width = to_count(m[1], "token_width");
  c.model.ff_hidden = to_count(m[2], "ff_hidden");
  c.model.feature_width = to_count(m[3], "feature_width");
  c.model.sage_hidden = to_count(m[4], "sage_hidden");
  c.model.sage_layers = to_count(m[5], "sage_layers");
  c.model.projection_hidden = to_count(m[6], "projection_hidden");
  c.model.projection_width = to_count(m[7], "projection_width");
  c.model.use_graph = m[8] != 0.0;
  const auto& l = values("config/loss", 4);
  c.loss = {l[0], l[1], l[2], l[3]};
  c.objective = values("config/objective", 1)[0] == 0.0 ? model::Objective::Pima : model::Objective::Clip;
  const auto& oc = values("optim/config", 5);
  c.optimizer.config = {oc[0], oc[1], oc[2], oc[3], oc[4]};
  c.optimizer.step = to_count(values("optim/step", 1)[0], "optim/step");
  for (const auto& p : c.parameters) {
    c.optimizer.first_moment.push_back(values("optim/m/" + p.name, p.values.size()));
    c.optimizer.second_moment.push_back(values("optim/v/" + p.name, p.values.size()));
  }
  const auto& rng = values("rng/state", 0);
  if (rng.size() % 2 != 0) throw ParseError("checkpoint: odd rng state length");
  for (std::size_t i = 0; i < rng.size(); i += 2) {
    c.rng_state.push_back((to_count(rng[i], "rng/state") << 32) | to_count(rng[i + 1], "rng/state"));
  }
  c.epoch = to_count(values("train/epoch", 1)[0], "train/epoch");
  const std::size_t expected = 7 + 2 * c.parameters.size();
  if (reserved.size() != expected) throw ParseError("checkpoint: unexpected reserved records");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = serialize(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace pima::train
