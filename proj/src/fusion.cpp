#include "maskmatte/fusion.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "maskmatte/errors.hpp"

namespace maskmatte {
namespace {

struct Verdict {
  std::optional<SkipReason> skip;  // empty = passes
  double ratio = 0;
};

// One candidate against one human. Uses the human's precomputed rect.
Verdict judge(const Mask& human_mask, const Rect& human_rect,
              const FusionCandidate& cand, const FusionConfig& cfg) {
  if (human_mask.rows() != cand.mask.rows() || human_mask.cols() != cand.mask.cols())
    throw DimensionMismatch("fusion masks must share dimensions");
  if (!cfg.accessory_ids.count(cand.category_id)) return {SkipReason::NotAccessory};
  if (cfg.skip_crowd && cand.iscrowd) return {SkipReason::Crowd};
  if (!(cand.mask != 0).any()) return {SkipReason::BelowTau, 0.0};  // no rect, no overlap
  const double r =
      rect_overlap(human_rect, min_bounding_rect(cand.mask), cfg.overlap_mode);
  if (!(r > cfg.tau)) return {SkipReason::BelowTau, r};
  if (!masks_intersect(human_mask, dilate(cand.mask, cfg.filter_dilate_k)))
    return {SkipReason::DisjointAfterDilation, r};
  return {std::nullopt, r};
}

void sort_candidates(std::vector<FusionCandidate>& others) {
  std::sort(others.begin(), others.end(),
            [](const FusionCandidate& a, const FusionCandidate& b) {
              return a.id < b.id;
            });
}

}  // namespace

const char* to_string(SkipReason reason) {
  switch (reason) {
    case SkipReason::NotAccessory: return "not_accessory";
    case SkipReason::BelowTau: return "below_tau";
    case SkipReason::DisjointAfterDilation: return "disjoint_after_dilation";
    case SkipReason::Crowd: return "crowd";
    case SkipReason::AssignedToOther: return "assigned_to_other";
  }
  return "?";
}

FusionResult fuse_accessories(long long human_id, const Mask& human_mask,
                              std::vector<FusionCandidate> others,
                              const FusionConfig& config) {
  if (!(human_mask != 0).any()) throw EmptyMask("fusion with an empty human mask");
  sort_candidates(others);
  const Rect human_rect = min_bounding_rect(human_mask);

  FusionResult result;
  result.human_id = human_id;
  result.fused_mask = human_mask;
  for (const FusionCandidate& cand : others) {
    const Verdict v = judge(human_mask, human_rect, cand, config);
    if (v.skip) {
      result.skipped_ids.emplace_back(cand.id, *v.skip);
    } else {
      result.merged_ids.push_back(cand.id);
      result.fused_mask = result.fused_mask.max(cand.mask);
    }
  }
  return result;
}

std::vector<FusionResult> assign_and_fuse_image(
    std::vector<std::pair<long long, Mask>> humans,
    std::vector<FusionCandidate> others, const FusionConfig& config) {
  if (humans.empty()) throw EmptyMask("assign_and_fuse_image without humans");
  std::sort(humans.begin(), humans.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  sort_candidates(others);

  std::vector<Rect> rects;
  rects.reserve(humans.size());
  for (const auto& [id, mask] : humans) {
    if (!(mask != 0).any()) throw EmptyMask("empty human mask in image fusion");
    rects.push_back(min_bounding_rect(mask));
  }

  std::vector<FusionResult> results(humans.size());
  for (std::size_t h = 0; h < humans.size(); ++h) {
    results[h].human_id = humans[h].first;
    results[h].fused_mask = humans[h].second;
  }

  for (const FusionCandidate& cand : others) {
    std::vector<Verdict> verdicts(humans.size());
    std::optional<std::size_t> owner;
    for (std::size_t h = 0; h < humans.size(); ++h) {
      verdicts[h] = judge(humans[h].second, rects[h], cand, config);
      if (!verdicts[h].skip && (!owner || verdicts[h].ratio > verdicts[*owner].ratio))
        owner = h;  // ties stay with the earlier (lower-id) human
    }
    for (std::size_t h = 0; h < humans.size(); ++h) {
      if (owner && h == *owner) {
        results[h].merged_ids.push_back(cand.id);
        results[h].fused_mask = results[h].fused_mask.max(cand.mask);
      } else if (verdicts[h].skip) {
        results[h].skipped_ids.emplace_back(cand.id, *verdicts[h].skip);
      } else {
        results[h].skipped_ids.emplace_back(cand.id, SkipReason::AssignedToOther);
      }
    }
  }
  return results;
}

}  // namespace maskmatte
