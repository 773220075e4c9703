#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "fewshot/ingest.hpp"

namespace fewshot {

// Depth-1 tree: x[feature] <= threshold votes left_class, otherwise right_class.
struct DecisionStump {
  Eigen::Index feature = 0;
  double threshold = 0.0;
  int left_class = 1;
  int right_class = 1;

  int predict(const Eigen::VectorXd& x) const { return x[feature] <= threshold ? left_class : right_class; }
};

// Multi-class AdaBoost (SAMME).
struct AdaBoostModel {
  std::vector<DecisionStump> stumps;
  std::vector<double> alphas;
  std::vector<double> weighted_errors;  // training error of each accepted stump
  int n_classes = 0;                    // K in the SAMME margin
  int prior_class = 1;                  // majority label; used when no stump was accepted
};

// Rows of X are samples; labels are 1..4.
AdaBoostModel adaboost_train(const Eigen::MatrixXd& X, const std::vector<int>& labels, int n_estimators = 100);

// Alpha-weighted vote per class (index 0 = class 1).
std::array<double, kNumClasses> adaboost_votes(const AdaBoostModel& model, const Eigen::VectorXd& x);

// Argmax vote, ties to the lower class.
int adaboost_predict(const AdaBoostModel& model, const Eigen::VectorXd& x);

}  // namespace fewshot
