#include "fewshot/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace fewshot {

Json tensor_to_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

Eigen::MatrixXd tensor_from_json(const Json& j) {
  const auto rows = j.at("shape").at(0).get<Eigen::Index>();
  const auto cols = j.at("shape").at(1).get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw std::runtime_error("tensor: shape/data mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  return {{"shape", {v.size()}}, {"data", std::vector<double>(v.data(), v.data() + v.size())}};
}

Eigen::VectorXd vector_from_json(const Json& j) {
  const auto data = j.at("data").get<std::vector<double>>();
  if (j.at("shape").at(0).get<std::size_t>() != data.size()) throw std::runtime_error("vector: shape/data mismatch");
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

Json to_json(const GmmParams& p) {
  return {{"k", p.k()},
          {"weights", vector_to_json(p.weights)},
          {"means", tensor_to_json(p.means)},
          {"variances", tensor_to_json(p.variances)}};
}

GmmParams gmm_from_json(const Json& j) {
  GmmParams p{vector_from_json(j.at("weights")), tensor_from_json(j.at("means")),
              tensor_from_json(j.at("variances"))};
  if (p.k() != j.at("k").get<int>()) throw std::runtime_error("gmm: k does not match weights");
  return p;
}

Json to_json(const LstmParams& p) {
  return {{"family", "lstm"},
          {"input_dim", p.input_dim},
          {"hidden_dim", p.hidden_dim},
          {"w_input", tensor_to_json(p.w_input)},
          {"w_recurrent", tensor_to_json(p.w_recurrent)},
          {"b_gates", vector_to_json(p.b_gates)},
          {"w_out", tensor_to_json(p.w_out)},
          {"b_out", vector_to_json(p.b_out)}};
}

LstmParams lstm_from_json(const Json& j) {
  LstmParams p;
  p.input_dim = j.at("input_dim").get<int>();
  p.hidden_dim = j.at("hidden_dim").get<int>();
  p.w_input = tensor_from_json(j.at("w_input"));
  p.w_recurrent = tensor_from_json(j.at("w_recurrent"));
  p.b_gates = vector_from_json(j.at("b_gates"));
  p.w_out = tensor_from_json(j.at("w_out"));
  p.b_out = vector_from_json(j.at("b_out"));
  return p;
}

Json to_json(const MlpParams& p) {
  return {{"family", "mlp"},          {"w1", tensor_to_json(p.w1)}, {"b1", vector_to_json(p.b1)},
          {"w2", tensor_to_json(p.w2)}, {"b2", vector_to_json(p.b2)}, {"w3", tensor_to_json(p.w3)},
          {"b3", vector_to_json(p.b3)}};
}

MlpParams mlp_from_json(const Json& j) {
  return {tensor_from_json(j.at("w1")), vector_from_json(j.at("b1")), tensor_from_json(j.at("w2")),
          vector_from_json(j.at("b2")), tensor_from_json(j.at("w3")), vector_from_json(j.at("b3"))};
}

Json to_json(const SoftmaxRegressionParams& p) {
  return {{"family", "softmax_regression"}, {"weights", tensor_to_json(p.weights)}, {"bias", vector_to_json(p.bias)}};
}

SoftmaxRegressionParams softmax_from_json(const Json& j) {
  return {tensor_from_json(j.at("weights")), vector_from_json(j.at("bias"))};
}

Json to_json(const StandardizationStats& s) {
  return {{"mean", vector_to_json(s.mean)}, {"std", vector_to_json(s.std)}};
}

StandardizationStats stats_from_json(const Json& j) {
  return {vector_from_json(j.at("mean")), vector_from_json(j.at("std"))};
}

Json to_json(const AdaBoostModel& m) {
  Json stumps = Json::array();
  for (std::size_t i = 0; i < m.stumps.size(); ++i) {
    const auto& s = m.stumps[i];
    stumps.push_back({{"feature", s.feature},
                      {"threshold", s.threshold},
                      {"left_class", s.left_class},
                      {"right_class", s.right_class},
                      {"alpha", m.alphas[i]},
                      {"weighted_error", m.weighted_errors[i]}});
  }
  return {{"family", "adaboost"}, {"n_classes", m.n_classes}, {"prior_class", m.prior_class}, {"stumps", stumps}};
}

AdaBoostModel adaboost_from_json(const Json& j) {
  AdaBoostModel m;
  m.n_classes = j.at("n_classes").get<int>();
  m.prior_class = j.at("prior_class").get<int>();
  for (const auto& s : j.at("stumps")) {
    m.stumps.push_back({s.at("feature").get<Eigen::Index>(), s.at("threshold").get<double>(),
                        s.at("left_class").get<int>(), s.at("right_class").get<int>()});
    m.alphas.push_back(s.at("alpha").get<double>());
    m.weighted_errors.push_back(s.at("weighted_error").get<double>());
  }
  return m;
}

namespace {
// JSON has no infinity; singleton pools store null.
Json distance_to_json(double d) { return std::isfinite(d) ? Json(d) : Json(nullptr); }
double distance_from_json(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}
}  // namespace

Json to_json(const NnSsState& s) {
  Json pools = Json::array();
  for (std::size_t c = 0; c < s.pools.size(); ++c) {
    Json members = Json::array();
    for (const auto& v : s.pools[c]) members.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    pools.push_back({{"class", c + 1}, {"min_intra_distance", distance_to_json(s.min_intra_distance[c])},
                     {"members", std::move(members)}});
  }
  return {{"family", "nn_self_training"}, {"pools", pools}};
}

NnSsState ss_state_from_json(const Json& j) {
  NnSsState s;
  const auto& pools = j.at("pools");
  if (pools.size() != s.pools.size()) throw std::runtime_error("nn_self_training: expected four pools");
  for (std::size_t c = 0; c < s.pools.size(); ++c) {
    s.min_intra_distance[c] = distance_from_json(pools[c].at("min_intra_distance"));
    for (const auto& m : pools[c].at("members")) {
      const auto v = m.get<std::vector<double>>();
      s.pools[c].emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
  }
  return s;
}

Json to_json(const HierarchicalModel& m) {
  Json experts = Json::array();
  for (const auto& e : m.experts) {
    experts.push_back({{"cluster_id", e.cluster_id},
                       {"source_label_histogram", e.source_label_histogram},
                       {"source_count", e.source_count},
                       {"adapted_count", e.adapted_count},
                       {"expert_before", to_json(e.expert_before)},
                       {"expert_after", to_json(e.expert_after)}});
  }
  Json gate = {{"n_clusters", m.gate.n_clusters}};
  if (m.gate.constant_cluster) {
    gate["constant_cluster"] = *m.gate.constant_cluster;
  } else {
    gate["params"] = to_json(m.gate.params);
  }
  Json j = {{"family", "hierarchical"},
            {"seed", m.seed},
            {"gmm", to_json(m.gmm)},
            {"experts", experts},
            {"gate", gate},
            {"shot_assignments", m.shot_assignments},
            {"expert_seeds", Json::array()}};
  for (const auto& e : m.experts) {
    j["expert_seeds"].push_back({{"source", expert_seed(m.seed, e.cluster_id, ExpertStage::kSource)},
                                 {"adapted", expert_seed(m.seed, e.cluster_id, ExpertStage::kAdapted)}});
  }
  if (m.stats) j["stats"] = to_json(*m.stats);
  return j;
}

HierarchicalModel hierarchical_from_json(const Json& j) {
  HierarchicalModel m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.gmm = gmm_from_json(j.at("gmm"));
  for (const auto& e : j.at("experts")) {
    ClusterExpert x;
    x.cluster_id = e.at("cluster_id").get<int>();
    x.source_label_histogram = e.at("source_label_histogram").get<LabelHistogram>();
    x.source_count = e.at("source_count").get<std::size_t>();
    x.adapted_count = e.at("adapted_count").get<std::size_t>();
    x.expert_before = lstm_from_json(e.at("expert_before"));
    x.expert_after = lstm_from_json(e.at("expert_after"));
    m.experts.push_back(std::move(x));
  }
  const auto& gate = j.at("gate");
  m.gate.n_clusters = gate.at("n_clusters").get<int>();
  if (gate.contains("constant_cluster")) {
    m.gate.constant_cluster = gate.at("constant_cluster").get<int>();
  } else {
    m.gate.params = softmax_from_json(gate.at("params"));
  }
  m.shot_assignments = j.at("shot_assignments").get<std::vector<int>>();
  if (j.contains("stats")) m.stats = stats_from_json(j.at("stats"));
  if (static_cast<int>(m.experts.size()) != m.gmm.k()) throw std::runtime_error("hierarchical: expert count != k");
  return m;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace fewshot
