#include "fewshot/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fewshot/rng.hpp"

namespace fewshot {
namespace {

void validate_shape(const SyntheticDomainShape& s, const char* which) {
  double sum = 0.0;
  for (double p : s.priors) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument(std::string(which) + ": priors must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument(std::string(which) + ": priors must sum to 1 (got " + std::to_string(sum) + ")");
  }
  if (s.length < 2) throw std::invalid_argument(std::string(which) + ": length must be >= 2");
  if (s.subgroups < 1) throw std::invalid_argument(std::string(which) + ": need at least one sub-group");
}

struct Templates {
  std::vector<Eigen::VectorXd> centres;                // per sub-group
  std::vector<std::array<Eigen::VectorXd, kNumClasses>> class_means;  // per sub-group, per class
};

Templates make_templates(const SyntheticDomainSpec& spec) {
  Rng rng(derive_seed(spec.seed, 0));
  const auto d = static_cast<Eigen::Index>(spec.feature_dim);
  Templates t;
  const double mid = 0.5 * static_cast<double>(spec.latent_subgroups - 1);
  const auto lead = static_cast<Eigen::Index>(spec.subgroup_dims);
  const bool split = lead > 0;
  for (std::size_t g = 0; g < spec.latent_subgroups; ++g) {
    Eigen::VectorXd centre = Eigen::VectorXd::Constant(d, spec.subgroup_separation * (static_cast<double>(g) - mid));
    if (split) centre.tail(d - lead).setZero();
    t.centres.push_back(std::move(centre));
    std::array<Eigen::VectorXd, kNumClasses> means;
    if (spec.class_layout == ClassLayout::kMirrored && g > 0) {
      const double sign = g % 2 == 1 ? -1.0 : 1.0;
      for (int c = 0; c < kNumClasses; ++c) means[static_cast<std::size_t>(c)] = sign * t.class_means[0][static_cast<std::size_t>(c)];
    } else {
      for (auto& m : means) {
        m.resize(d);
        for (Eigen::Index j = 0; j < d; ++j) m[j] = spec.class_separation * standard_normal(rng);
        if (split) m.head(lead).setZero();
      }
    }
    t.class_means.push_back(std::move(means));
  }
  return t;
}

SequenceDataset make_domain(const SyntheticDomainSpec& spec, const SyntheticDomainShape& shape, const Templates& t,
                            const Eigen::VectorXd& shift, std::uint64_t stream, const std::string& name,
                            std::vector<int>& subgroup_of_frame) {
  Rng rng(derive_seed(spec.seed, stream));
  SequenceDataset ds;
  ds.name = name;
  for (std::size_t j = 0; j < spec.feature_dim; ++j) ds.feature_names.push_back("s" + std::to_string(j + 1));

  const std::size_t runs = shape.subgroups;
  std::size_t t_index = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    const std::size_t run_length = shape.length / runs + (r + 1 == runs ? shape.length % runs : 0);
    const auto blocks = class_block_sizes(shape.priors, run_length);
    const std::size_t g = r % spec.latent_subgroups;
    for (int c = 0; c < kNumClasses; ++c) {
      const Eigen::VectorXd mean = t.centres[g] + t.class_means[g][static_cast<std::size_t>(c)] + shift;
      for (std::size_t i = 0; i < blocks[static_cast<std::size_t>(c)]; ++i) {
        SensorFrame f;
        f.t = t_index++;
        f.label = c + 1;
        f.features = mean;
        for (Eigen::Index j = 0; j < f.features.size(); ++j) {
          f.features[j] += spec.class_scales[static_cast<std::size_t>(c)] * standard_normal(rng);
        }
        ds.frames.push_back(std::move(f));
        subgroup_of_frame.push_back(static_cast<int>(g));
      }
    }
  }
  return ds;
}

}  // namespace

void SyntheticDomainSpec::validate() const {
  validate_shape(source, "source");
  validate_shape(target, "target");
  if (feature_dim < 1) throw std::invalid_argument("synthetic: feature_dim must be >= 1");
  if (latent_subgroups < 1) throw std::invalid_argument("synthetic: latent_subgroups must be >= 1");
  if (subgroup_dims >= feature_dim && subgroup_dims > 0) {
    throw std::invalid_argument("synthetic: subgroup_dims must leave at least one class feature");
  }
  if (!shift.empty() && shift.size() != feature_dim) {
    throw std::invalid_argument("synthetic: shift must be empty or have feature_dim entries");
  }
  for (double s : class_scales)
    if (!(s > 0.0)) throw std::invalid_argument("synthetic: class scales must be > 0");
}

std::array<std::size_t, kNumClasses> class_block_sizes(const std::array<double, kNumClasses>& priors,
                                                       std::size_t length) {
  std::array<std::size_t, kNumClasses> sizes{};
  std::array<double, kNumClasses> remainder{};
  std::size_t assigned = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const double exact = priors[static_cast<std::size_t>(c)] * static_cast<double>(length);
    sizes[static_cast<std::size_t>(c)] = static_cast<std::size_t>(std::floor(exact));
    remainder[static_cast<std::size_t>(c)] = exact - std::floor(exact);
    assigned += sizes[static_cast<std::size_t>(c)];
  }
  std::array<int, kNumClasses> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[static_cast<std::size_t>(a)] > remainder[static_cast<std::size_t>(b)]; });
  for (std::size_t i = 0; assigned < length; ++i, ++assigned) ++sizes[static_cast<std::size_t>(order[i % kNumClasses])];
  return sizes;
}

SyntheticDomains synthesize_domains(const SyntheticDomainSpec& spec) {
  spec.validate();
  const Templates t = make_templates(spec);
  const auto d = static_cast<Eigen::Index>(spec.feature_dim);
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(d);
  if (!spec.shift.empty()) shift = Eigen::Map<const Eigen::VectorXd>(spec.shift.data(), d);

  SyntheticDomains out;
  out.source = make_domain(spec, spec.source, t, Eigen::VectorXd::Zero(d), 1, "synthetic_source", out.source_subgroup);
  out.target = make_domain(spec, spec.target, t, shift, 2, "synthetic_target", out.target_subgroup);
  return out;
}

Json to_json(const SyntheticDomainSpec& spec) {
  auto shape = [](const SyntheticDomainShape& s) {
    return Json{{"priors", s.priors}, {"length", s.length}, {"subgroups", s.subgroups}};
  };
  return {{"feature_dim", spec.feature_dim},
          {"source", shape(spec.source)},
          {"target", shape(spec.target)},
          {"latent_subgroups", spec.latent_subgroups},
          {"subgroup_separation", spec.subgroup_separation},
          {"subgroup_dims", spec.subgroup_dims},
          {"class_separation", spec.class_separation},
          {"class_layout", spec.class_layout == ClassLayout::kMirrored ? "mirrored" : "independent"},
          {"class_scales", spec.class_scales},
          {"shift", spec.shift},
          {"seed", spec.seed}};
}

SyntheticDomainSpec synthetic_spec_from_json(const Json& j) {
  SyntheticDomainSpec spec;
  auto shape = [](const Json& s, SyntheticDomainShape& out) {
    if (s.contains("priors")) out.priors = s.at("priors").get<std::array<double, kNumClasses>>();
    out.length = s.value("length", out.length);
    out.subgroups = s.value("subgroups", out.subgroups);
  };
  spec.feature_dim = j.value("feature_dim", spec.feature_dim);
  if (j.contains("source")) shape(j.at("source"), spec.source);
  if (j.contains("target")) shape(j.at("target"), spec.target);
  spec.latent_subgroups = j.value("latent_subgroups", spec.latent_subgroups);
  spec.subgroup_separation = j.value("subgroup_separation", spec.subgroup_separation);
  spec.class_separation = j.value("class_separation", spec.class_separation);
  spec.subgroup_dims = j.value("subgroup_dims", spec.subgroup_dims);
  if (j.contains("class_layout")) {
    const auto layout = j.at("class_layout").get<std::string>();
    if (layout == "mirrored") {
      spec.class_layout = ClassLayout::kMirrored;
    } else if (layout == "independent") {
      spec.class_layout = ClassLayout::kIndependent;
    } else {
      throw std::invalid_argument("synthetic: unknown class_layout '" + layout + "'");
    }
  }
  if (j.contains("class_scales")) spec.class_scales = j.at("class_scales").get<std::array<double, kNumClasses>>();
  if (j.contains("shift")) {
    if (j.at("shift").is_number()) {
      spec.shift.assign(spec.feature_dim, j.at("shift").get<double>());
    } else {
      spec.shift = j.at("shift").get<std::vector<double>>();
    }
  }
  spec.seed = j.value("seed", spec.seed);
  spec.validate();
  return spec;
}

void write_csv(const SequenceDataset& ds, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  for (const auto& name : ds.feature_names) out << name << ',';
  out << "label\n";
  for (const auto& f : ds.frames) {
    for (Eigen::Index j = 0; j < f.features.size(); ++j) out << f.features[j] << ',';
    out << f.label << '\n';
  }
}

}  // namespace fewshot
