#include "citefield/params.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace citefield {

Index ParamSet::add(std::string name, Index rows, Index cols) {
  if (find(name) >= 0) throw Error("duplicate parameter block '" + name + "'");
  Block b{std::move(name), values.size(), rows, cols};
  VectorXd grown = VectorXd::Zero(values.size() + b.size());
  grown.head(values.size()) = values;
  values = std::move(grown);
  blocks_.push_back(std::move(b));
  return static_cast<Index>(blocks_.size()) - 1;
}

Index ParamSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return static_cast<Index>(i);
  }
  return -1;
}

Index ParamSet::require(std::string_view name) const {
  Index b = find(name);
  if (b < 0) throw Error("missing parameter block '" + std::string(name) + "'");
  return b;
}

void ParamSet::copy_blocks_from(const ParamSet& other, std::string_view prefix) {
  for (const auto& b : other.blocks()) {
    if (b.name.compare(0, prefix.size(), prefix) != 0) continue;
    Index mine = require(b.name);
    if (block(mine).rows != b.rows || block(mine).cols != b.cols) {
      throw Error("parameter block '" + b.name + "' has a different shape");
    }
    values.segment(block(mine).offset, b.size()) = other.values.segment(b.offset, b.size());
  }
}

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
void write_string(std::ostream& out, std::string_view s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("truncated model file");
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("truncated model file");
  return v;
}

std::string read_string(std::istream& in) {
  std::uint64_t n = read_u64(in);
  if (n > (1ULL << 32)) throw Error("corrupt string length in model file");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) throw Error("truncated model file");
  return s;
}

void ParamSet::write(std::ostream& out) const {
  write_u32(out, static_cast<std::uint32_t>(blocks_.size()));
  for (const auto& b : blocks_) {
    write_string(out, b.name);
    write_u64(out, static_cast<std::uint64_t>(b.rows));
    write_u64(out, static_cast<std::uint64_t>(b.cols));
    out.write(reinterpret_cast<const char*>(values.data() + b.offset),
              static_cast<std::streamsize>(b.size() * static_cast<Index>(sizeof(double))));
  }
}

ParamSet ParamSet::read(std::istream& in) {
  ParamSet p;
  std::uint32_t n = read_u32(in);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = read_string(in);
    auto rows = static_cast<Index>(read_u64(in));
    auto cols = static_cast<Index>(read_u64(in));
    Index b = p.add(name, rows, cols);
    const Block& k = p.block(b);
    if (!in.read(reinterpret_cast<char*>(p.values.data() + k.offset),
                 static_cast<std::streamsize>(k.size() * static_cast<Index>(sizeof(double))))) {
      throw Error("truncated model file in block '" + name + "'");
    }
  }
  return p;
}

Adam::Adam(Index size, AdamConfig config)
    : config_(config), m_(VectorXd::Zero(size)), v_(VectorXd::Zero(size)) {}

void Adam::step(VectorXd& params, const VectorXd& grad) {
  ++t_;
  double scale = 1.0;
  if (config_.clip_norm > 0) {
    double norm = grad.norm();
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  m_ = b1 * m_ + (1 - b1) * scale * grad;
  v_ = b2 * v_ + (1 - b2) * (scale * grad).cwiseAbs2();
  const double c1 = 1 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1 - std::pow(b2, static_cast<double>(t_));
  params.array() -= config_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.epsilon);
}

namespace {
constexpr char kModelMagic[8] = {'C', 'I', 'T', 'E', 'F', 'L', 'D', 'M'};
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

std::string model_file_bytes(const ModelFile& file) {
  std::ostringstream out(std::ios::binary);
  out.write(kModelMagic, sizeof kModelMagic);
  write_u32(out, kModelVersion);
  write_string(out, file.kind);
  write_string(out, file.metadata);
  file.params.write(out);
  return out.str();
}

void write_model_file(const std::string& path, const ModelFile& file) { write_file(path, model_file_bytes(file)); }

ModelFile read_model_file(const std::string& path) {
  std::istringstream in(read_file(path), std::ios::binary);
  char magic[sizeof kModelMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kModelMagic)) {
    throw Error("'" + path + "' is not a model file");
  }
  if (std::uint32_t v = read_u32(in); v != kModelVersion) {
    throw Error("unsupported model file version " + std::to_string(v));
  }
  ModelFile f;
  f.kind = read_string(in);
  f.metadata = read_string(in);
  f.params = ParamSet::read(in);
  return f;
}

}  // namespace citefield
