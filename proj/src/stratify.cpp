#include "mammo/stratify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mammo/error.hpp"

namespace mammo {

void SplitRatios::validate() const {
  for (double r : as_array()) {
    if (!(r > 0.0 && r < 1.0)) fail(ErrorCode::kConfig, "split ratios must each lie in (0, 1)");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    fail(ErrorCode::kConfig, "split ratios must sum to 1");
  }
}

int indicator_count(const LabelScheme& scheme) {
  return 2 * scheme.diagnosis_classes() + 2 * kDensityClasses;
}

std::string indicator_name(int indicator, const LabelScheme& scheme) {
  const int k = scheme.diagnosis_classes();
  if (indicator < k) return "diagL=" + render_label(OrdinalLabel(scheme.diagnosis_kind(), indicator));
  if (indicator < 2 * k) {
    return "diagR=" + render_label(OrdinalLabel(scheme.diagnosis_kind(), indicator - k));
  }
  const int d = indicator - 2 * k;
  return std::string(d < kDensityClasses ? "densL=" : "densR=") +
         render_label(OrdinalLabel(LabelKind::kDensity, d % kDensityClasses));
}

std::vector<int> study_labelset(const StudyRecord& study, const LabelScheme& scheme) {
  const int k = scheme.diagnosis_classes();
  std::vector<int> out;
  if (auto d = study.side_diagnosis(Laterality::kLeft)) out.push_back(d->index());
  if (auto d = study.side_diagnosis(Laterality::kRight)) out.push_back(k + d->index());
  if (auto d = study.side_density(Laterality::kLeft)) out.push_back(2 * k + d->index());
  if (auto d = study.side_density(Laterality::kRight)) out.push_back(2 * k + kDensityClasses + d->index());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Split> stratified_split(const std::vector<std::vector<int>>& labelsets,
                                    int label_count, const SplitRatios& ratios,
                                    uint64_t seed) {
  ratios.validate();
  const size_t n = labelsets.size();
  if (n < 3) fail(ErrorCode::kConfig, "stratified split needs at least 3 studies");
  const auto r = ratios.as_array();

  // Seeded visiting order.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  for (size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<size_t>(rng() % i)]);
  }

  std::vector<int> label_total(static_cast<size_t>(label_count), 0);
  for (const auto& set : labelsets) {
    for (int l : set) {
      if (l < 0 || l >= label_count) fail(ErrorCode::kIntegrity, "indicator id out of range");
      ++label_total[static_cast<size_t>(l)];
    }
  }

  std::array<double, 3> capacity;
  std::vector<std::array<double, 3>> demand(static_cast<size_t>(label_count));
  for (size_t j = 0; j < 3; ++j) {
    capacity[j] = r[j] * static_cast<double>(n);
    for (int l = 0; l < label_count; ++l) demand[static_cast<size_t>(l)][j] = r[j] * label_total[static_cast<size_t>(l)];
  }

  std::vector<int> remaining = label_total;
  std::vector<int> assigned(n, -1);
  size_t unassigned = n;

  auto assign = [&](size_t i, int j) {
    assigned[i] = j;
    --unassigned;
    capacity[static_cast<size_t>(j)] -= 1.0;
    for (int l : labelsets[i]) {
      demand[static_cast<size_t>(l)][static_cast<size_t>(j)] -= 1.0;
      --remaining[static_cast<size_t>(l)];
    }
  };
  auto pick_by_capacity = [&](const std::array<double, 3>* label_demand) {
    // Full splits take no more studies while another still has room.
    const bool any_open = std::any_of(capacity.begin(), capacity.end(), [](double c) { return c >= 0.5; });
    int best = -1;
    for (int j = 0; j < 3; ++j) {
      const auto jj = static_cast<size_t>(j);
      if (any_open && capacity[jj] < 0.5) continue;
      if (best < 0) { best = j; continue; }
      const auto bj = static_cast<size_t>(best);
      if (label_demand) {
        if ((*label_demand)[jj] > (*label_demand)[bj]) { best = j; continue; }
        if ((*label_demand)[jj] < (*label_demand)[bj]) continue;
      }
      if (capacity[jj] > capacity[bj]) best = j;
    }
    return best;
  };

  while (unassigned > 0) {
    int label = -1;
    for (int l = 0; l < label_count; ++l) {
      const int rem = remaining[static_cast<size_t>(l)];
      if (rem > 0 && (label < 0 || rem < remaining[static_cast<size_t>(label)])) label = l;
    }
    if (label < 0) {
      // Only studies without indicators remain.
      for (size_t i : order) {
        if (assigned[i] < 0) assign(i, pick_by_capacity(nullptr));
      }
      break;
    }
    for (size_t i : order) {
      if (assigned[i] >= 0) continue;
      const auto& set = labelsets[i];
      if (std::find(set.begin(), set.end(), label) == set.end()) continue;
      assign(i, pick_by_capacity(&demand[static_cast<size_t>(label)]));
    }
  }

  std::vector<Split> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = static_cast<Split>(assigned[i]);
  return out;
}

}  // namespace mammo
