#include "segzero/task.hpp"

#include "segzero/vocabulary.hpp"

namespace segzero::task {

policy::Context make_context(const dataprep::GroundTruthRecord& record,
                             const synth::Scene* scene) {
  policy::Context ctx;
  ctx.features.assign(kContextSize, 0.0);
  std::copy(record.query_features.begin(), record.query_features.end(), ctx.features.begin());
  if (!scene) return ctx;
  ctx.objects = synth::object_views(*scene);
  const double frame = kFrameSize;
  for (int k = 0; k < kSceneSlots && k < static_cast<int>(ctx.objects.size()); ++k) {
    const auto& o = ctx.objects[k];
    double* f = ctx.features.data() + synth::kQueryFeatureSize + k * kSlotFeatures;
    f[0] = 1.0;
    f[1 + static_cast<int>(o.color)] = 1.0;
    f[1 + synth::kColorCount + static_cast<int>(o.shape)] = 1.0;
    f[10] = static_cast<double>(o.size) / synth::kMaxSize;
    f[11] = o.center.x / frame;
    f[12] = o.center.y / frame;
  }
  return ctx;
}

policy::Context make_context(const dataprep::GroundTruthRecord& record) {
  if (!record.scene) return make_context(record, nullptr);
  const synth::Scene scene = dataprep::render(*record.scene);
  return make_context(record, &scene);
}

policy::PolicyShape seg_shape(int hidden, int embed, int max_len) {
  policy::PolicyShape s;
  s.vocab = policy::Vocabulary::size();
  s.embed = embed;
  s.context = kContextSize;
  s.hidden = hidden;
  s.cues = policy::kPhaseCount + policy::kSlotCueCount;
  s.copy_radius = kCopyRadius;
  s.echo = true;
  s.max_len = max_len;
  s.eos = policy::tok::kEos;
  return s;
}

policy::PolicyNet make_policy(const policy::PolicyShape& shape,
                              const policy::PriorTable& prior) {
  return policy::PolicyNet(shape, std::make_shared<policy::SegGuide>(prior));
}

}  // namespace segzero::task
