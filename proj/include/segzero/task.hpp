#pragma once

#include <memory>

#include "segzero/dataprep.hpp"
#include "segzero/guide.hpp"
#include "segzero/policy.hpp"
#include "segzero/synth.hpp"

namespace segzero::task {

inline constexpr int kSceneSlots = synth::kMaxObjects;
inline constexpr int kSlotFeatures = 13;  // present, color one-hot, shape one-hot, size, cx, cy
inline constexpr int kContextSize =
    static_cast<int>(synth::kQueryFeatureSize) + kSceneSlots * kSlotFeatures;
inline constexpr int kCopyRadius = 3;

/// Query features followed by a fixed-length table of object attributes and positions.
policy::Context make_context(const dataprep::GroundTruthRecord& record,
                             const synth::Scene* scene);
/// Renders the record's scene when it has one.
policy::Context make_context(const dataprep::GroundTruthRecord& record);

policy::PolicyShape seg_shape(int hidden = 64, int embed = 16, int max_len = 96);
policy::PolicyNet make_policy(const policy::PolicyShape& shape,
                              const policy::PriorTable& prior = {});

}  // namespace segzero::task
