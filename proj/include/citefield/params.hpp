#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "citefield/core.hpp"

namespace citefield {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using MatrixView = Eigen::Map<MatrixXd>;
using ConstMatrixView = Eigen::Map<const MatrixXd>;

/// Named parameter blocks laid out in one flat vector, so optimizers,
/// gradient checks and serialization all work on a single buffer.
class ParamSet {
 public:
  struct Block {
    std::string name;
    Index offset = 0;
    Index rows = 0;
    Index cols = 0;

    Index size() const { return rows * cols; }
  };

  Index add(std::string name, Index rows, Index cols);
  Index find(std::string_view name) const;  // -1 when absent
  Index require(std::string_view name) const;

  const Block& block(Index b) const { return blocks_[static_cast<std::size_t>(b)]; }
  const std::vector<Block>& blocks() const { return blocks_; }
  Index size() const { return values.size(); }

  MatrixView view(Index b) { return view(values, b); }
  ConstMatrixView view(Index b) const { return view(values, b); }
  MatrixView view(VectorXd& buffer, Index b) const {
    const Block& k = block(b);
    return MatrixView(buffer.data() + k.offset, k.rows, k.cols);
  }
  ConstMatrixView view(const VectorXd& buffer, Index b) const {
    const Block& k = block(b);
    return ConstMatrixView(buffer.data() + k.offset, k.rows, k.cols);
  }

  VectorXd zeros_like() const { return VectorXd::Zero(values.size()); }
  bool all_finite() const { return values.allFinite(); }

  /// Copies every block whose name starts with `prefix` from `other`;
  /// shapes must agree.
  void copy_blocks_from(const ParamSet& other, std::string_view prefix);

  void write(std::ostream& out) const;
  static ParamSet read(std::istream& in);

  VectorXd values;

 private:
  std::vector<Block> blocks_;
};

struct AdamConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-6;
  double clip_norm = 1.0;  // <= 0 disables global-norm clipping
};

/// Adaptive moment estimation with bias correction.
class Adam {
 public:
  Adam(Index size, AdamConfig config);
  void step(VectorXd& params, const VectorXd& grad);
  std::int64_t steps() const { return t_; }

 private:
  AdamConfig config_;
  VectorXd m_;
  VectorXd v_;
  std::int64_t t_ = 0;
};

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_string(std::ostream& out, std::string_view s);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
std::string read_string(std::istream& in);

/// Versioned binary model container: magic, version, JSON metadata, then
/// the parameter blocks.
struct ModelFile {
  std::string kind;
  std::string metadata;  // JSON object text
  ParamSet params;
};

void write_model_file(const std::string& path, const ModelFile& file);
std::string model_file_bytes(const ModelFile& file);
ModelFile read_model_file(const std::string& path);

}  // namespace citefield
