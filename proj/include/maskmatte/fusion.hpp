#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "maskmatte/mask_ops.hpp"
#include "maskmatte/types.hpp"

namespace maskmatte {

struct FusionConfig {
  double tau = 0.8;
  int filter_dilate_k = 4;
  OverlapMode overlap_mode = OverlapMode::Ioa;
  std::set<int> accessory_ids;
  bool skip_crowd = true;
};

enum class SkipReason {
  NotAccessory,
  BelowTau,
  DisjointAfterDilation,
  Crowd,
  AssignedToOther,  // merged into a better-overlapping human in the same image
};

const char* to_string(SkipReason reason);

struct FusionCandidate {
  long long id = 0;
  int category_id = 0;
  bool iscrowd = false;
  Mask mask;
};

struct FusionResult {
  long long human_id = 0;
  Mask fused_mask;
  std::vector<long long> merged_ids;
  std::vector<std::pair<long long, SkipReason>> skipped_ids;
};

/// Merges accessory candidates into one human mask. A candidate passes iff
/// its category is an accessory, rect_overlap(human_rect, candidate_rect)
/// exceeds tau strictly, and its filter_dilate_k-dilated mask intersects the
/// human mask. Candidates are processed in ascending id order.
FusionResult fuse_accessories(long long human_id, const Mask& human_mask,
                              std::vector<FusionCandidate> others,
                              const FusionConfig& config);

/// Multi-human variant: each accessory merges into at most one human, the
/// passing human with the highest overlap ratio (ties to the lowest human
/// id). Returns one FusionResult per human in ascending human-id order.
std::vector<FusionResult> assign_and_fuse_image(
    std::vector<std::pair<long long, Mask>> humans,
    std::vector<FusionCandidate> others, const FusionConfig& config);

}  // namespace maskmatte
