#pragma once

// Seeded two-domain generator shaped like the beef e-nose recordings: each
// domain is a set of spoilage runs whose labels advance 1 -> 4 in contiguous
// blocks sized by the class priors. Every run belongs to a latent sub-group
// with its own centre and its own class-to-feature map; target features are
// offset by a covariate shift.

#include <array>
#include <cstdint>
#include <vector>

#include "fewshot/ingest.hpp"
#include "fewshot/serialize.hpp"

namespace fewshot {

struct SyntheticDomainShape {
  std::array<double, kNumClasses> priors{0.25, 0.25, 0.25, 0.25};
  std::size_t length = 2000;
  std::size_t subgroups = 2;  // runs drawn from sub-groups 0..subgroups-1
};

// How class means relate across latent sub-groups.
enum class ClassLayout {
  kIndependent,  // fresh random class means per sub-group
  kMirrored,     // sub-group g uses (-1)^g times the sub-group-0 class means
};

struct SyntheticDomainSpec {
  std::size_t feature_dim = 9;
  SyntheticDomainShape source;
  SyntheticDomainShape target;
  std::size_t latent_subgroups = 2;  // sub-group templates shared by both domains
  double subgroup_separation = 5.0;  // per-feature distance between adjacent sub-group centres, in noise units
  // Leading features that carry the sub-group offset; class means live on the rest. 0 puts both on every feature.
  std::size_t subgroup_dims = 0;
  double class_separation = 1.0;     // std of the random per-sub-group class means
  ClassLayout class_layout = ClassLayout::kIndependent;
  std::array<double, kNumClasses> class_scales{1.0, 1.0, 1.0, 1.0};  // noise std per class
  std::vector<double> shift;          // per-feature target offset; empty means no shift
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDomains {
  SequenceDataset source;
  SequenceDataset target;
  std::vector<int> source_subgroup;  // latent sub-group of every source frame
  std::vector<int> target_subgroup;
};

SyntheticDomains synthesize_domains(const SyntheticDomainSpec& spec);

// Block sizes (largest-remainder rounding) that sum to `length`.
std::array<std::size_t, kNumClasses> class_block_sizes(const std::array<double, kNumClasses>& priors,
                                                       std::size_t length);

Json to_json(const SyntheticDomainSpec& spec);
SyntheticDomainSpec synthetic_spec_from_json(const Json& j);

// Writes a dataset as CSV with its feature columns followed by `label`.
void write_csv(const SequenceDataset& ds, const std::filesystem::path& path);

}  // namespace fewshot
