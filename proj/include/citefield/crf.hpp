#pragma once

#include <vector>

#include "citefield/params.hpp"

namespace citefield {

/// Linear-chain CRF scores over L labels. Emission tables are n x L with
/// one row per position; transitions(i, j) scores label i followed by j.
struct CrfParams {
  MatrixXd transitions;
  VectorXd start;
  VectorXd stop;

  static CrfParams zeros(Index labels);
  Index labels() const { return start.size(); }
};

using LabelPath = std::vector<std::size_t>;

double path_score(const MatrixXd& emissions, const CrfParams& crf, const LabelPath& path);

/// Exact argmax path. Ties go to the lower label index at every step.
LabelPath viterbi(const MatrixXd& emissions, const CrfParams& crf);

struct ForwardBackward {
  MatrixXd log_alpha;  // n x L
  MatrixXd log_beta;   // n x L
  MatrixXd marginals;  // n x L, rows sum to one
  double log_partition = 0.0;
};

/// Log-space forward-backward.
ForwardBackward forward_backward(const MatrixXd& emissions, const CrfParams& crf);

struct CrfLoss {
  double nll = 0.0;  // log Z - score(gold)
  MatrixXd emissions_grad;
  CrfParams grad;
};

CrfLoss crf_nll(const MatrixXd& emissions, const CrfParams& crf, const LabelPath& gold);

double log_sum_exp(const Eigen::Ref<const VectorXd>& v);

}  // namespace citefield
