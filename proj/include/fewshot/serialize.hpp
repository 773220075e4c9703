#pragma once

// JSON persistence. Tensors are stored shape-tagged: {"shape": [rows, cols],
// "data": [row-major values]}. Doubles round-trip exactly.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "fewshot/adaboost.hpp"
#include "fewshot/gmm.hpp"
#include "fewshot/ingest.hpp"
#include "fewshot/lstm.hpp"
#include "fewshot/mlp.hpp"
#include "fewshot/pipeline.hpp"
#include "fewshot/self_training.hpp"
#include "fewshot/softmax_regression.hpp"

namespace fewshot {

using Json = nlohmann::json;

Json tensor_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd tensor_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

Json to_json(const GmmParams& p);
Json to_json(const LstmParams& p);
Json to_json(const MlpParams& p);
Json to_json(const SoftmaxRegressionParams& p);
Json to_json(const StandardizationStats& s);
Json to_json(const AdaBoostModel& m);
Json to_json(const NnSsState& s);
Json to_json(const HierarchicalModel& m);

GmmParams gmm_from_json(const Json& j);
LstmParams lstm_from_json(const Json& j);
MlpParams mlp_from_json(const Json& j);
SoftmaxRegressionParams softmax_from_json(const Json& j);
StandardizationStats stats_from_json(const Json& j);
AdaBoostModel adaboost_from_json(const Json& j);
NnSsState ss_state_from_json(const Json& j);
HierarchicalModel hierarchical_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace fewshot
