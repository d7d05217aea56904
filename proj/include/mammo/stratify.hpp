#ifndef MAMMO_STRATIFY_HPP_
#define MAMMO_STRATIFY_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mammo/labels.hpp"

namespace mammo {

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;

  std::array<double, 3> as_array() const { return {train, val, test}; }
  // Throws Error(kConfig).
  void validate() const;
};

// Indicator layout for a scheme with K diagnosis classes:
//   [0, K)        left-breast diagnosis
//   [K, 2K)       right-breast diagnosis
//   [2K, 2K+4)    left-breast density
//   [2K+4, 2K+8)  right-breast density
int indicator_count(const LabelScheme& scheme);
std::string indicator_name(int indicator, const LabelScheme& scheme);

// Sorted indicator ids for a study; a missing side contributes none.
std::vector<int> study_labelset(const StudyRecord& study, const LabelScheme& scheme);

// Iterative stratification over per-study label sets. Returns one split per
// input, in input order. Deterministic for fixed input order and seed.
std::vector<Split> stratified_split(const std::vector<std::vector<int>>& labelsets,
                                    int label_count, const SplitRatios& ratios,
                                    uint64_t seed);

}  // namespace mammo

#endif  // MAMMO_STRATIFY_HPP_
