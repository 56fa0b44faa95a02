#include "citefield/crf.hpp"

#include <cmath>
#include <limits>

namespace citefield {

CrfParams CrfParams::zeros(Index labels) {
  return {MatrixXd::Zero(labels, labels), VectorXd::Zero(labels), VectorXd::Zero(labels)};
}

double log_sum_exp(const Eigen::Ref<const VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

double path_score(const MatrixXd& emissions, const CrfParams& crf, const LabelPath& path) {
  if (path.size() != static_cast<std::size_t>(emissions.rows())) throw Error("path length differs from emissions");
  if (path.empty()) throw Error("empty path");
  double s = crf.start(static_cast<Index>(path.front())) + crf.stop(static_cast<Index>(path.back()));
  for (std::size_t t = 0; t < path.size(); ++t) {
    s += emissions(static_cast<Index>(t), static_cast<Index>(path[t]));
    if (t > 0) s += crf.transitions(static_cast<Index>(path[t - 1]), static_cast<Index>(path[t]));
  }
  return s;
}

LabelPath viterbi(const MatrixXd& emissions, const CrfParams& crf) {
  const Index n = emissions.rows();
  const Index labels = crf.labels();
  if (n == 0) throw Error("viterbi: empty sequence");
  MatrixXd best(n, labels);
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> back(n, labels);
  best.row(0) = crf.start.transpose() + emissions.row(0);
  for (Index t = 1; t < n; ++t) {
    for (Index j = 0; j < labels; ++j) {
      Index arg = 0;
      double value = best(t - 1, 0) + crf.transitions(0, j);
      for (Index i = 1; i < labels; ++i) {
        double v = best(t - 1, i) + crf.transitions(i, j);
        if (v > value) {
          value = v;
          arg = i;
        }
      }
      best(t, j) = value + emissions(t, j);
      back(t, j) = arg;
    }
  }
  Index last = 0;
  double value = best(n - 1, 0) + crf.stop(0);
  for (Index j = 1; j < labels; ++j) {
    double v = best(n - 1, j) + crf.stop(j);
    if (v > value) {
      value = v;
      last = j;
    }
  }
  LabelPath path(static_cast<std::size_t>(n));
  path[static_cast<std::size_t>(n - 1)] = static_cast<std::size_t>(last);
  for (Index t = n - 1; t > 0; --t) {
    last = back(t, last);
    path[static_cast<std::size_t>(t - 1)] = static_cast<std::size_t>(last);
  }
  return path;
}

ForwardBackward forward_backward(const MatrixXd& emissions, const CrfParams& crf) {
  const Index n = emissions.rows();
  const Index labels = crf.labels();
  if (n == 0) throw Error("forward_backward: empty sequence");
  ForwardBackward fb;
  fb.log_alpha.resize(n, labels);
  fb.log_beta.resize(n, labels);
  fb.log_alpha.row(0) = crf.start.transpose() + emissions.row(0);
  VectorXd tmp(labels);
  for (Index t = 1; t < n; ++t) {
    for (Index j = 0; j < labels; ++j) {
      tmp = fb.log_alpha.row(t - 1).transpose() + crf.transitions.col(j);
      fb.log_alpha(t, j) = log_sum_exp(tmp) + emissions(t, j);
    }
  }
  fb.log_beta.row(n - 1) = crf.stop.transpose();
  for (Index t = n - 2; t >= 0; --t) {
    for (Index i = 0; i < labels; ++i) {
      tmp = crf.transitions.row(i).transpose() + emissions.row(t + 1).transpose() + fb.log_beta.row(t + 1).transpose();
      fb.log_beta(t, i) = log_sum_exp(tmp);
    }
  }
  tmp = fb.log_alpha.row(n - 1).transpose() + crf.stop;
  fb.log_partition = log_sum_exp(tmp);
  fb.marginals = ((fb.log_alpha + fb.log_beta).array() - fb.log_partition).exp().matrix();
  return fb;
}

CrfLoss crf_nll(const MatrixXd& emissions, const CrfParams& crf, const LabelPath& gold) {
  const Index n = emissions.rows();
  const Index labels = crf.labels();
  ForwardBackward fb = forward_backward(emissions, crf);
  CrfLoss out;
  out.nll = fb.log_partition - path_score(emissions, crf, gold);
  out.emissions_grad = fb.marginals;
  out.grad = CrfParams::zeros(labels);
  out.grad.start = fb.marginals.row(0).transpose();
  out.grad.stop = fb.marginals.row(n - 1).transpose();
  for (Index t = 0; t + 1 < n; ++t) {
    for (Index i = 0; i < labels; ++i) {
      for (Index j = 0; j < labels; ++j) {
        out.grad.transitions(i, j) += std::exp(fb.log_alpha(t, i) + crf.transitions(i, j) + emissions(t + 1, j) +
                                               fb.log_beta(t + 1, j) - fb.log_partition);
      }
    }
  }
  for (std::size_t t = 0; t < gold.size(); ++t) {
    const auto g = static_cast<Index>(gold[t]);
    out.emissions_grad(static_cast<Index>(t), g) -= 1.0;
    if (t > 0) out.grad.transitions(static_cast<Index>(gold[t - 1]), g) -= 1.0;
  }
  out.grad.start(static_cast<Index>(gold.front())) -= 1.0;
  out.grad.stop(static_cast<Index>(gold.back())) -= 1.0;
  return out;
}

}  // namespace citefield
