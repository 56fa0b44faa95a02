#pragma once

#include <cstdint>
#include <span>

#include "citefield/params.hpp"
#include "citefield/rng.hpp"

namespace citefield {

struct EncoderDims {
  Index vocab_size = 0;
  Index embed_dim = 64;   // d
  Index hidden_dim = 64;  // h, per direction
};

/// Block indices of the shared encoder inside a ParamSet. All encoder
/// blocks are named "enc.*" so they can be moved between models.
struct EncoderLayout {
  EncoderDims dims;
  Index embedding = -1;  // d x V, one column per vocabulary id
  Index fw_input = -1;   // 4h x d
  Index fw_recur = -1;   // 4h x h
  Index fw_bias = -1;    // 4h x 1
  Index bw_input = -1;
  Index bw_recur = -1;
  Index bw_bias = -1;

  Index output_dim() const { return 2 * dims.hidden_dim; }
};

EncoderLayout add_encoder(ParamSet& params, const EncoderDims& dims);
EncoderLayout find_encoder(const ParamSet& params);

/// Uniform(-scale, scale) with scale = 1/sqrt(fan_in); forget-gate bias 1.
void init_encoder(ParamSet& params, const EncoderLayout& layout, Rng& rng);

struct LstmTrace {
  MatrixXd gates;  // 4h x L, post-activation [i; f; g; o]
  MatrixXd cells;  // h x L
  MatrixXd hidden; // h x L
};

struct EncoderTrace {
  std::vector<std::int32_t> ids;
  MatrixXd inputs;  // d x L
  LstmTrace forward;
  LstmTrace backward;
  MatrixXd output;  // 2h x L, [forward; backward]
};

/// Embedding lookup followed by both LSTM directions.
void encoder_forward(const ParamSet& params, const EncoderLayout& layout, std::span<const std::int32_t> ids,
                     EncoderTrace& trace);

/// Accumulates parameter gradients for d(loss)/d(output) into `grad`.
/// When `input_grad` is non-null it receives d(loss)/d(inputs) (d x L).
void encoder_backward(const ParamSet& params, const EncoderLayout& layout, const EncoderTrace& trace,
                      const MatrixXd& output_grad, VectorXd& grad, MatrixXd* input_grad = nullptr);

void uniform_fill(MatrixView m, double scale, Rng& rng);

}  // namespace citefield
