#include "citefield/encoder.hpp"

#include <cmath>

namespace citefield {

namespace {

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) { return 1.0 / (1.0 + (-x).exp()); }

void lstm_forward(ConstMatrixView input_w, ConstMatrixView recur_w, ConstMatrixView bias, const MatrixXd& inputs,
                  bool reverse, LstmTrace& trace) {
  const Index h = recur_w.cols();
  const Index len = inputs.cols();
  MatrixXd pre = input_w * inputs;
  pre.colwise() += bias.col(0);
  trace.gates.resize(4 * h, len);
  trace.cells.resize(h, len);
  trace.hidden.resize(h, len);

  VectorXd h_prev = VectorXd::Zero(h);
  VectorXd c_prev = VectorXd::Zero(h);
  VectorXd a(4 * h);
  for (Index s = 0; s < len; ++s) {
    const Index t = reverse ? len - 1 - s : s;
    a.noalias() = pre.col(t) + recur_w * h_prev;
    auto gates = trace.gates.col(t);
    gates.segment(0, h) = sigmoid(a.segment(0, h).array()).matrix();
    gates.segment(h, h) = sigmoid(a.segment(h, h).array()).matrix();
    gates.segment(2 * h, h) = a.segment(2 * h, h).array().tanh().matrix();
    gates.segment(3 * h, h) = sigmoid(a.segment(3 * h, h).array()).matrix();
    auto i = gates.segment(0, h).array();
    auto f = gates.segment(h, h).array();
    auto g = gates.segment(2 * h, h).array();
    auto o = gates.segment(3 * h, h).array();
    trace.cells.col(t) = (f * c_prev.array() + i * g).matrix();
    trace.hidden.col(t) = (o * trace.cells.col(t).array().tanh()).matrix();
    h_prev = trace.hidden.col(t);
    c_prev = trace.cells.col(t);
  }
}

void lstm_backward(ConstMatrixView input_w, ConstMatrixView recur_w, const MatrixXd& inputs, bool reverse,
                   const LstmTrace& trace, const Eigen::Ref<const MatrixXd>& hidden_grad, MatrixView input_w_grad,
                   MatrixView recur_w_grad, MatrixView bias_grad, MatrixXd& inputs_grad) {
  const Index h = recur_w.cols();
  const Index len = inputs.cols();
  MatrixXd pre_grad(4 * h, len);
  MatrixXd h_prev_all = MatrixXd::Zero(h, len);
  VectorXd dh_next = VectorXd::Zero(h);
  VectorXd dc_next = VectorXd::Zero(h);
  Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(h);

  for (Index s = len - 1; s >= 0; --s) {
    const Index t = reverse ? len - 1 - s : s;
    const Index tp = reverse ? t + 1 : t - 1;
    const bool has_prev = s > 0;
    Eigen::ArrayXd c_prev = has_prev ? trace.cells.col(tp).array() : zero;
    if (has_prev) h_prev_all.col(t) = trace.hidden.col(tp);

    auto gates = trace.gates.col(t);
    Eigen::ArrayXd i = gates.segment(0, h).array();
    Eigen::ArrayXd f = gates.segment(h, h).array();
    Eigen::ArrayXd g = gates.segment(2 * h, h).array();
    Eigen::ArrayXd o = gates.segment(3 * h, h).array();
    Eigen::ArrayXd tc = trace.cells.col(t).array().tanh();

    Eigen::ArrayXd dh = hidden_grad.col(t).array() + dh_next.array();
    Eigen::ArrayXd dc = dh * o * (1.0 - tc.square()) + dc_next.array();
    auto da = pre_grad.col(t);
    da.segment(0, h) = (dc * g * i * (1.0 - i)).matrix();
    da.segment(h, h) = (dc * c_prev * f * (1.0 - f)).matrix();
    da.segment(2 * h, h) = (dc * i * (1.0 - g.square())).matrix();
    da.segment(3 * h, h) = (dh * tc * o * (1.0 - o)).matrix();

    dh_next.noalias() = recur_w.transpose() * pre_grad.col(t);
    dc_next = (dc * f).matrix();
  }
  input_w_grad.noalias() += pre_grad * inputs.transpose();
  recur_w_grad.noalias() += pre_grad * h_prev_all.transpose();
  bias_grad.col(0) += pre_grad.rowwise().sum();
  inputs_grad.noalias() += input_w.transpose() * pre_grad;
}

}  // namespace

void uniform_fill(MatrixView m, double scale, Rng& rng) {
  // Column-major fill order is part of the determinism contract.
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-scale, scale);
  }
}

EncoderLayout add_encoder(ParamSet& params, const EncoderDims& dims) {
  if (dims.vocab_size <= 0 || dims.embed_dim <= 0 || dims.hidden_dim <= 0) throw Error("encoder dimensions must be positive");
  EncoderLayout l;
  l.dims = dims;
  const Index d = dims.embed_dim;
  const Index h = dims.hidden_dim;
  l.embedding = params.add("enc.embedding", d, dims.vocab_size);
  l.fw_input = params.add("enc.fw.input", 4 * h, d);
  l.fw_recur = params.add("enc.fw.recur", 4 * h, h);
  l.fw_bias = params.add("enc.fw.bias", 4 * h, 1);
  l.bw_input = params.add("enc.bw.input", 4 * h, d);
  l.bw_recur = params.add("enc.bw.recur", 4 * h, h);
  l.bw_bias = params.add("enc.bw.bias", 4 * h, 1);
  return l;
}

EncoderLayout find_encoder(const ParamSet& params) {
  EncoderLayout l;
  l.embedding = params.require("enc.embedding");
  l.fw_input = params.require("enc.fw.input");
  l.fw_recur = params.require("enc.fw.recur");
  l.fw_bias = params.require("enc.fw.bias");
  l.bw_input = params.require("enc.bw.input");
  l.bw_recur = params.require("enc.bw.recur");
  l.bw_bias = params.require("enc.bw.bias");
  l.dims.embed_dim = params.block(l.embedding).rows;
  l.dims.vocab_size = params.block(l.embedding).cols;
  l.dims.hidden_dim = params.block(l.fw_recur).cols;
  return l;
}

void init_encoder(ParamSet& params, const EncoderLayout& layout, Rng& rng) {
  const double d = static_cast<double>(layout.dims.embed_dim);
  const double h = static_cast<double>(layout.dims.hidden_dim);
  uniform_fill(params.view(layout.embedding), 0.5, rng);
  for (Index b : {layout.fw_input, layout.bw_input}) uniform_fill(params.view(b), 1.0 / std::sqrt(d), rng);
  for (Index b : {layout.fw_recur, layout.bw_recur}) uniform_fill(params.view(b), 1.0 / std::sqrt(h), rng);
  for (Index b : {layout.fw_bias, layout.bw_bias}) {
    auto v = params.view(b);
    v.setZero();
    v.block(layout.dims.hidden_dim, 0, layout.dims.hidden_dim, 1).setOnes();
  }
}

void encoder_forward(const ParamSet& params, const EncoderLayout& layout, std::span<const std::int32_t> ids,
                     EncoderTrace& trace) {
  if (ids.empty()) throw Error("encoder: empty sequence");
  const Index len = static_cast<Index>(ids.size());
  const Index vocab = layout.dims.vocab_size;
  auto emb = params.view(layout.embedding);
  trace.ids.assign(ids.begin(), ids.end());
  trace.inputs.resize(layout.dims.embed_dim, len);
  for (Index t = 0; t < len; ++t) {
    const auto id = ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= vocab) throw Error("encoder: id " + std::to_string(id) + " out of range");
    trace.inputs.col(t) = emb.col(id);
  }
  lstm_forward(params.view(layout.fw_input), params.view(layout.fw_recur), params.view(layout.fw_bias), trace.inputs,
               false, trace.forward);
  lstm_forward(params.view(layout.bw_input), params.view(layout.bw_recur), params.view(layout.bw_bias), trace.inputs,
               true, trace.backward);
  const Index h = layout.dims.hidden_dim;
  trace.output.resize(2 * h, len);
  trace.output.topRows(h) = trace.forward.hidden;
  trace.output.bottomRows(h) = trace.backward.hidden;
}

void encoder_backward(const ParamSet& params, const EncoderLayout& layout, const EncoderTrace& trace,
                      const MatrixXd& output_grad, VectorXd& grad, MatrixXd* input_grad) {
  const Index h = layout.dims.hidden_dim;
  MatrixXd inputs_grad = MatrixXd::Zero(trace.inputs.rows(), trace.inputs.cols());
  lstm_backward(params.view(layout.fw_input), params.view(layout.fw_recur), trace.inputs, false, trace.forward,
                output_grad.topRows(h), params.view(grad, layout.fw_input), params.view(grad, layout.fw_recur),
                params.view(grad, layout.fw_bias), inputs_grad);
  lstm_backward(params.view(layout.bw_input), params.view(layout.bw_recur), trace.inputs, true, trace.backward,
                output_grad.bottomRows(h), params.view(grad, layout.bw_input), params.view(grad, layout.bw_recur),
                params.view(grad, layout.bw_bias), inputs_grad);
  auto emb_grad = params.view(grad, layout.embedding);
  for (Index t = 0; t < inputs_grad.cols(); ++t) emb_grad.col(trace.ids[static_cast<std::size_t>(t)]) += inputs_grad.col(t);
  if (input_grad != nullptr) *input_grad = std::move(inputs_grad);
}

}  // namespace citefield
