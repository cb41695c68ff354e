// Acceptance gate: one PASS/FAIL line per criterion. Run with criterion names to select a
// subset; the exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "segzero/eval.hpp"
#include "segzero/geometry.hpp"
#include "segzero/grpo.hpp"
#include "segzero/parser.hpp"
#include "segzero/rewards.hpp"
#include "segzero/run.hpp"
#include "segzero/segmenter.hpp"
#include "segzero/task.hpp"

using namespace segzero;
using geometry::BBox;
using geometry::Point;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;  // 0: no wall-clock limit
  std::function<Outcome()> check;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- reward thresholds ------------------------------------------------------------------

std::string answer_text(const BBox& b, const Point& p1, const Point& p2) {
  return parser::canonical_response("the red circle", parser::SegPrompt{b, p1, p2});
}

Outcome reward_thresholds() {
  const rewards::RewardConfig hard;
  const BBox gt{0, 0, 100, 100};
  const Point g1{50, 50}, g2{20, 20};
  int cases = 0, ok = 0;
  std::ostringstream bad;
  auto expect = [&](const char* what, double got, double want) {
    ++cases;
    if (got == want) {
      ++ok;
    } else {
      bad << ' ' << what << "=" << got;
    }
  };

  // IoU must exceed 0.5: a 50x100 box over 100x100 is exactly 0.50, 51x100 is 0.51.
  const BBox iou50{0, 0, 50, 100}, iou51{0, 0, 51, 100};
  expect("iou0.50", rewards::bbox_iou_reward(iou50, gt, hard), 0.0);
  expect("iou0.51", rewards::bbox_iou_reward(iou51, gt, hard), 1.0);
  // L1 must be below 10 pixels.
  const BBox l1_10{2.5, 2.5, 102.5, 102.5}, l1_99{2.475, 2.475, 102.475, 102.475};
  expect("l1=10.0", rewards::bbox_l1_reward(l1_10, gt, hard), 0.0);
  expect("l1=9.9", rewards::bbox_l1_reward(l1_99, gt, hard), 1.0);
  // Closest point pairing must be below 100 pixels.
  const BBox wide{0, 0, 840, 840};
  expect("pt=100", rewards::point_l1_reward({150, 50}, {300, 300}, wide, g1, {800, 800}, hard),
         0.0);
  expect("pt=99", rewards::point_l1_reward({149, 50}, {300, 300}, wide, g1, {800, 800}, hard),
         1.0);
  // Points outside the gating box score zero whatever their distance.
  expect("pt_out1", rewards::point_l1_reward({101, 50}, {50, 50}, gt, g1, g2, hard), 0.0);
  expect("pt_out2", rewards::point_l1_reward({50, 50}, {50, -1}, gt, g1, g2, hard), 0.0);
  expect("pt_in", rewards::point_l1_reward({50, 50}, {20, 20}, gt, g1, g2, hard), 1.0);

  // The same rules through the full response scorer.
  auto total = [&](const BBox& b, const Point& p1, const Point& p2) {
    return rewards::score(answer_text(b, p1, p2), gt, g1, g2, hard);
  };
  expect("score_iou0.50", total(iou50, {25, 50}, {20, 20}).bbox_iou, 0.0);
  expect("score_iou0.51", total(iou51, {25, 50}, {20, 20}).bbox_iou, 1.0);
  expect("score_l1=10", total({10, 0, 100, 100}, g1, g2).bbox_l1, 0.0);
  expect("score_l1=9.9", total({9.9, 0, 100, 100}, g1, g2).bbox_l1, 1.0);
  expect("score_pt=100", total({0, 0, 840, 840}, {150, 50}, {300, 300}).point_l1, 0.0);
  expect("score_pt=99", total({0, 0, 840, 840}, {149, 50}, {300, 300}).point_l1, 1.0);
  expect("score_pt_out", total(gt, {50, 50}, {150, 50}).point_l1, 0.0);
  expect("score_exact", total(gt, g1, g2).total, 5.0);
  return {ok == cases, fmt("%d/%d cases", ok, cases) + bad.str()};
}

// ---- soft rewards -----------------------------------------------------------------------

Outcome soft_rewards() {
  rewards::RewardConfig soft;
  soft.accuracy_mode = rewards::AccuracyMode::Soft;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 840.0);
  auto box = [&] {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    return BBox{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
  };
  int iou_exact = 0;
  double worst_l1 = 0.0, worst_pt = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const BBox p = box(), g = box();
    if (rewards::bbox_iou_reward(p, g, soft) == geometry::bbox_iou(p, g)) ++iou_exact;
    const double l1 = std::abs(p.x1 - g.x1) + std::abs(p.y1 - g.y1) + std::abs(p.x2 - g.x2) +
                      std::abs(p.y2 - g.y2);
    const double want = std::max(0.0, 1.0 - l1 / 840.0);
    worst_l1 = std::max(worst_l1, std::abs(rewards::bbox_l1_reward(p, g, soft) - want));
    const Point a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)}, d{u(rng), u(rng)};
    auto dist = [](Point x, Point y) { return std::abs(x.x - y.x) + std::abs(x.y - y.y); };
    const double dmin = std::min({dist(a, c), dist(a, d), dist(b, c), dist(b, d)});
    const double want_pt = std::max(0.0, 1.0 - dmin / 840.0);
    const BBox all{0, 0, 840, 840};
    worst_pt = std::max(worst_pt, std::abs(rewards::point_l1_reward(a, b, all, c, d, soft) - want_pt));
  }
  const bool pass = iou_exact == n && worst_l1 <= 1e-12 && worst_pt <= 1e-12;
  return {pass, fmt("soft IoU exact %d/%d, max |L1 reward - (1 - L1/840)| %.2e, point %.2e",
                    iou_exact, n, worst_l1, worst_pt)};
}

// ---- geometry ---------------------------------------------------------------------------

Outcome geometry_oracles() {
  std::mt19937_64 rng(5);
  // Coordinates on a 1/4 grid; raster cells of 1/8 make the counting oracle exact.
  std::uniform_int_distribution<int> q(0, 64 * 4);
  auto box = [&] {
    const double a = q(rng) / 4.0, b = q(rng) / 4.0, c = q(rng) / 4.0, d = q(rng) / 4.0;
    return BBox{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
  };
  double worst_box = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BBox a = box(), b = box();
    worst_box = std::max(worst_box, std::abs(geometry::bbox_iou(a, b) -
                                             oracle::raster_bbox_iou(a, b, 0.0, 64.0, 0.125)));
  }

  int mask_exact = 0, dt_exact = 0, centers_exact = 0;
  std::vector<geometry::BinaryMask> preds, gts;
  for (int i = 0; i < 50; ++i) {
    auto m = oracle::random_mask(rng, 32);
    // Partner of the same size for the overlap metrics.
    geometry::BinaryMask other(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) other.set(x, y, rng() % 3 == 0 || (m.at(x, y) && rng() % 2));
    }
    if (geometry::mask_iou(m, other) == oracle::mask_iou(m, other)) ++mask_exact;

    const auto df = geometry::distance_transform(m);
    const auto want = oracle::squared_distances(m);
    bool same = true;
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        const auto w = want[static_cast<std::size_t>(y) * m.width() + x];
        same = same && df.squared_at(x, y) == w && df.at(x, y) == std::sqrt(static_cast<double>(w));
      }
    }
    dt_exact += same;
    centers_exact += geometry::inscribed_circle_centers(m) == oracle::inscribed_centers(m);
    preds.push_back(other);
    gts.push_back(std::move(m));
  }

  std::vector<eval::MaskPair> pairs;
  double mean = 0.0;
  long inter = 0, uni = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    pairs.push_back({&preds[i], &gts[i]});
    mean += oracle::mask_iou(preds[i], gts[i]);
    const auto [in, un] = oracle::count_overlap(preds[i], gts[i]);
    inter += in;
    uni += un;
  }
  mean /= static_cast<double>(pairs.size());
  const double giou = eval::giou(pairs), ciou = eval::ciou(pairs);
  const bool giou_ok = std::abs(giou - mean) <= 1e-15;
  const bool ciou_ok = ciou == static_cast<double>(inter) / static_cast<double>(uni);

  const bool pass = worst_box < 1e-3 && mask_exact == 50 && dt_exact == 50 &&
                    centers_exact == 50 && giou_ok && ciou_ok;
  return {pass, fmt("bbox max|d| %.1e; mask_iou %d/50, distance %d/50, centers %d/50 exact; "
                    "gIoU %s, cIoU %s",
                    worst_box, mask_exact, dt_exact, centers_exact, giou_ok ? "exact" : "off",
                    ciou_ok ? "exact" : "off")};
}

// ---- gradients --------------------------------------------------------------------------

// Central differences over every parameter; returns the worst relative error, measured
// against max(|analytic|, |numeric|, 1e-6).
template <typename F>
double worst_gradient_error(F&& f, const std::vector<double>& x, const std::vector<double>& g) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double num = oracle::central_difference(f, x, i, 3e-3);
    worst = std::max(worst, oracle::relative_error(g[i], num));
  }
  return worst;
}

grpo::RolloutGroup sampled_group(const policy::PolicyNet& net, const policy::Context& ctx,
                                 const std::vector<double>& params,
                                 const std::vector<double>& ref, int g, std::uint64_t seed) {
  grpo::RolloutGroup grp;
  grp.input_id = "gradcheck";
  std::vector<double> totals;
  for (int k = 0; k < g; ++k) {
    auto r = net.sample(params, ctx, 1.0, seed + k);
    grp.old_logp.push_back(r.logp());
    grp.ref_token_logps.push_back(net.token_log_probs(ref, ctx, r.tokens));
    grp.ref_logp.push_back(std::accumulate(grp.ref_token_logps.back().begin(),
                                           grp.ref_token_logps.back().end(), 0.0));
    totals.push_back(static_cast<double>(r.length % 3) + 0.25 * k);
    grp.rollouts.push_back(std::move(r));
  }
  grp.advantages = grpo::compute_advantages(totals, 1e-4);
  return grp;
}

// Smallest distance of any importance ratio to the clip boundaries, and how many ratios lie
// outside [1 - eps, 1 + eps].
std::pair<double, int> ratio_margin(const policy::PolicyNet& net, const policy::Context& ctx,
                                    const grpo::RolloutGroup& group,
                                    const std::vector<double>& params, grpo::RatioLevel level,
                                    double eps) {
  double margin = 1e9;
  int clipped = 0;
  auto visit = [&](double rho) {
    margin = std::min({margin, std::abs(rho - (1 - eps)), std::abs(rho - (1 + eps))});
    clipped += rho < 1 - eps || rho > 1 + eps;
  };
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto& r = group.rollouts[i];
    const auto lp = net.token_log_probs(params, ctx, r.tokens);
    if (level == grpo::RatioLevel::Sequence) {
      visit(std::exp(std::accumulate(lp.begin(), lp.end(), 0.0) - group.old_logp[i]));
    } else {
      for (std::size_t t = 0; t < lp.size(); ++t) visit(std::exp(lp[t] - r.logps[t]));
    }
  }
  return {margin, clipped};
}

Outcome gradient_checks() {
  double worst_logp = 0.0, worst_obj = 0.0;
  int checks = 0;

  // A small guided network on a real task context, and a plain one without a guide.
  const auto record = dataprep::make_synth_record(3, 3, 4);
  const auto seg_ctx = task::make_context(record);
  const auto seg_net = task::make_policy(task::seg_shape(4, 3, 14));
  policy::PolicyShape plain;
  plain.vocab = 7;
  plain.embed = 3;
  plain.context = 4;
  plain.hidden = 5;
  plain.max_len = 6;
  plain.eos = 0;
  const policy::PolicyNet plain_net(plain);
  policy::Context plain_ctx;
  plain_ctx.features = {0.3, -1.2, 0.7, 0.05};

  struct Case {
    const policy::PolicyNet* net;
    const policy::Context* ctx;
  };
  for (const Case c : {Case{&seg_net, &seg_ctx}, Case{&plain_net, &plain_ctx}}) {
    const auto params = c.net->init(21, 0.3);
    auto ref = params;
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += 0.05 * std::sin(1.0 + i);

    for (std::uint64_t s = 0; s < 2; ++s) {
      const auto ro = c.net->sample(params, *c.ctx, 1.0, 100 + s);
      for (double temp : {1.0, 0.7}) {
        const auto g = c.net->grad_log_prob(params, *c.ctx, ro.tokens, temp);
        auto f = [&](const std::vector<double>& p) {
          return c.net->log_prob(p, *c.ctx, ro.tokens, temp);
        };
        worst_logp = std::max(worst_logp, worst_gradient_error(f, params, g));
        ++checks;
      }
    }

    // Off-policy points exercise clipping. The clipped surrogate has kinks at 1 +/- eps, so
    // each point is chosen with every ratio clear of them and at least one ratio clipped.
    const double eps = 0.2;
    const auto group = sampled_group(*c.net, *c.ctx, params, ref, 4, 500);
    for (auto level : {grpo::RatioLevel::Sequence, grpo::RatioLevel::Token}) {
      std::vector<std::vector<double>> points{params};
      for (double scale = 0.02; scale <= 1.0 && points.size() < 2; scale *= 1.25) {
        auto moved = params;
        for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += scale * std::cos(3.0 * i);
        const auto [margin, clipped] = ratio_margin(*c.net, *c.ctx, group, moved, level, eps);
        if (margin >= 0.02 && clipped > 0) points.push_back(std::move(moved));
      }
      if (points.size() < 2) return {false, "no off-policy point clear of the clip kinks"};
      for (const auto& at : points) {
        const grpo::ObjectiveOptions opt{eps, 0.04, level, 1.0};
        const auto obj = grpo::grpo_objective(*c.net, *c.ctx, group, at, opt);
        auto f = [&](const std::vector<double>& p) {
          return grpo::grpo_objective(*c.net, *c.ctx, group, p, opt).loss;
        };
        worst_obj = std::max(worst_obj, worst_gradient_error(f, at, obj.grad));
        ++checks;
      }
    }
  }
  const bool pass = worst_logp <= 1e-4 && worst_obj <= 1e-4;
  return {pass, fmt("%d gradients, worst relative error: log-prob %.2e, objective %.2e", checks,
                    worst_logp, worst_obj)};
}

// ---- bandit -----------------------------------------------------------------------------

Outcome bandit() {
  policy::PolicyShape shape;
  shape.vocab = 2;
  shape.embed = 4;
  shape.context = 1;
  shape.hidden = 8;
  shape.max_len = 1;
  shape.eos = -1;
  const policy::PolicyNet net(shape);
  policy::Context ctx;
  ctx.features = {1.0};

  int solved = 0, monotone = 0;
  std::ostringstream hits;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    grpo::TrainConfig cfg;
    cfg.learning_rate = 0.03;
    cfg.max_steps = 500;
    cfg.group_size = 8;
    cfg.batch_rollouts = 16;
    cfg.seed = seed;
    const std::vector<grpo::Input> inputs{
        {"bandit", &ctx, [](const policy::Rollout& r) {
           rewards::RewardVector v;
           v.total = r.tokens.at(0) == 1 ? 1.0 : 0.0;
           return v;
         }}};
    auto state = grpo::initial_state(net.init(seed));
    auto p_best = [&](const std::vector<double>& params) {
      return net.next_token_probs(params, ctx, {})[1];
    };
    long hit = -1;
    std::vector<double> checkpoints{p_best(state.params)};
    grpo::TrainHooks hooks;
    hooks.on_step = [&](const grpo::LogRow&, const grpo::TrainState& s) {
      const double p = p_best(s.params);
      if (hit < 0 && p >= 0.99) hit = s.step;
      if (s.step % 100 == 0) checkpoints.push_back(p);
    };
    grpo::train(net, cfg, state, inputs, hooks);
    solved += hit > 0;
    // Expected reward at every 100-step boundary, computed exactly from the policy.
    bool up = checkpoints.size() == 6;
    for (std::size_t i = 1; up && i < checkpoints.size(); ++i) up = checkpoints[i] > checkpoints[i - 1];
    monotone += up;
    hits << ' ' << hit;
  }
  return {solved == 5 && monotone == 5,
          fmt("p>=0.99 reached in %d/5 seeds (steps:%s); expected reward rises across every "
              "100-step window in %d/5",
              solved, hits.str().c_str(), monotone)};
}

// ---- end-to-end -------------------------------------------------------------------------

config::RunConfig synth_config(std::uint64_t seed, parser::FormatMode mode) {
  config::RunConfig cfg;
  cfg.train.learning_rate = 0.06;
  cfg.train.batch_rollouts = 32;
  cfg.train.group_size = 8;
  cfg.train.kl_beta = 0.04;
  cfg.train.max_grad_norm = 0.0;
  cfg.train.max_steps = 2000;
  cfg.train.seed = seed;
  cfg.reward.format_mode = mode;
  return cfg;
}

// First step where the trailing 10-step mean reaches the threshold, or -1.
long first_crossing(const std::vector<grpo::LogRow>& log, double grpo::LogRow::*field,
                    double threshold) {
  const std::size_t w = 10;
  double acc = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    acc += log[i].*field;
    if (i >= w) acc -= log[i - w].*field;
    if (acc / static_cast<double>(std::min(i + 1, w)) >= threshold) return static_cast<long>(i);
  }
  return -1;
}

double tail_length(const std::vector<grpo::LogRow>& log) {
  const std::size_t n = std::max<std::size_t>(1, log.size() / 10);
  double s = 0.0;
  for (std::size_t i = log.size() - n; i < log.size(); ++i) s += log[i].len_mean;
  return s / static_cast<double>(n);
}

struct Shared {
  std::vector<dataprep::GroundTruthRecord> train;
  std::vector<dataprep::GroundTruthRecord> eval;
  std::optional<run::TrainResult> strict_seed1;
};

Shared& shared() {
  static Shared s = [] {
    Shared out;
    const auto cfg = synth_config(1, parser::FormatMode::Strict);
    out.train = run::train_records(cfg);
    out.eval = run::eval_records(cfg);
    return out;
  }();
  return s;
}

const run::TrainResult& strict_seed1() {
  auto& s = shared();
  if (!s.strict_seed1) s.strict_seed1 = run::train(synth_config(1, parser::FormatMode::Strict), s.train);
  return *s.strict_seed1;
}

Outcome end_to_end() {
  const auto cfg = synth_config(1, parser::FormatMode::Strict);
  const auto& res = strict_seed1();
  const auto& log = res.log;
  if (log.size() != 2000) return {false, fmt("log has %zu rows", log.size())};

  const long fmt95 = first_crossing(log, &grpo::LogRow::reward_format, 0.95);
  const long iou50 = first_crossing(log, &grpo::LogRow::reward_iou, 0.5);
  const bool a = fmt95 >= 0 && (iou50 < 0 || fmt95 < iou50);

  double dip = log[1].len_mean;
  for (std::size_t i = 1; i <= 200; ++i) dip = std::min(dip, log[i].len_mean);
  const bool b = dip < log[0].len_mean && log.back().len_mean > dip;

  const auto& eval_set = shared().eval;
  const double untrained = run::evaluate(cfg, run::initial_checkpoint(cfg), eval_set, "synth").giou;
  const double trained = run::evaluate(cfg, res.checkpoint, eval_set, "synth").giou;
  const bool c = trained >= 0.6 && untrained <= 0.05;

  return {a && b && c,
          fmt("(a) format>=0.95 at step %ld, bbox IoU>=0.5 at step %ld %s; (b) length %.1f -> "
              "min %.1f -> final %.1f %s; (c) gIoU %.3f trained vs %.3f untrained %s",
              fmt95, iou50, a ? "ok" : "FAIL", log[0].len_mean, dip, log.back().len_mean,
              b ? "ok" : "FAIL", trained, untrained, c ? "ok" : "FAIL")};
}

Outcome ablation() {
  auto& s = shared();
  int longer = 0, comparable = 0;
  std::ostringstream pairs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto strict = seed == 1 ? strict_seed1().log
                                  : run::train(synth_config(seed, parser::FormatMode::Strict),
                                               s.train).log;
    const auto soft = run::train(synth_config(seed, parser::FormatMode::Soft), s.train).log;
    bool same_steps = strict.size() == soft.size();
    for (std::size_t i = 0; same_steps && i < strict.size(); ++i) {
      same_steps = strict[i].step == soft[i].step;
    }
    comparable += same_steps && strict.size() == 2000;
    const double ls = tail_length(strict), lf = tail_length(soft);
    longer += ls > lf;
    pairs << fmt(" %.1f/%.1f", ls, lf);
  }
  return {longer >= 3 && comparable == 5,
          fmt("strict longer in %d/5 pairs (final-10%% length strict/soft:%s); %d/5 logs aligned",
              longer, pairs.str().c_str(), comparable)};
}

Outcome pipeline() {
  const auto records = dataprep::make_synth_dataset(500, 2024);
  std::vector<geometry::BinaryMask> preds;
  preds.reserve(records.size());
  for (const auto& r : records) {
    const auto scene = dataprep::render(*r.scene);
    preds.push_back(segmenter::segment_synthetic(scene, {r.gt_bbox, r.gt_p1, r.gt_p2}));
  }
  std::vector<eval::MaskPair> pairs;
  double worst = 1.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    pairs.push_back({&preds[i], &records[i].gt_mask});
    worst = std::min(worst, geometry::mask_iou(preds[i], records[i].gt_mask));
  }
  const double g = eval::giou(pairs);
  return {g >= 0.99, fmt("gIoU %.4f over %zu records (worst sample %.4f)", g, records.size(), worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"reward-thresholds", 1.0, reward_thresholds},
      {"soft-rewards", 0.0, soft_rewards},
      {"geometry-oracles", 30.0, geometry_oracles},
      {"gradient-checks", 60.0, gradient_checks},
      {"grpo-bandit", 120.0, bandit},
      {"end-to-end-dynamics", 0.0, end_to_end},
      {"format-ablation", 0.0, ablation},
      {"pipeline-self-consistency", 0.0, pipeline},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int run_count = 0, passed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", c.budget_s);
    }
    std::printf("%s %-26s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    ++run_count;
    passed += o.pass;
  }
  std::printf("%d/%d criteria passed\n", passed, run_count);
  return passed == run_count && run_count > 0 ? 0 : 1;
}
