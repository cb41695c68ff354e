#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "segzero/grpo.hpp"

using namespace segzero;
using namespace segzero::grpo;

namespace {

policy::PolicyShape plain_shape() {
  policy::PolicyShape s;
  s.vocab = 6;
  s.embed = 3;
  s.context = 2;
  s.hidden = 5;
  s.max_len = 5;
  s.eos = 0;
  return s;
}

policy::Context plain_context() {
  policy::Context c;
  c.features = {0.4, -0.9};
  return c;
}

RolloutGroup make_group(const policy::PolicyNet& net, const policy::Context& ctx,
                        const std::vector<double>& params, const std::vector<double>& ref,
                        const std::vector<double>& totals) {
  RolloutGroup g;
  g.input_id = "g";
  for (std::size_t k = 0; k < totals.size(); ++k) {
    auto r = net.sample(params, ctx, 1.0, 40 + k);
    g.old_logp.push_back(r.logp());
    g.ref_token_logps.push_back(net.token_log_probs(ref, ctx, r.tokens));
    g.ref_logp.push_back(
        std::accumulate(g.ref_token_logps.back().begin(), g.ref_token_logps.back().end(), 0.0));
    g.rollouts.push_back(std::move(r));
  }
  g.advantages = compute_advantages(totals, 1e-4);
  return g;
}

// The bandit: token 1 earns reward 1, token 0 earns nothing.
struct Bandit {
  policy::PolicyNet net{[] {
    policy::PolicyShape s;
    s.vocab = 2;
    s.embed = 4;
    s.context = 1;
    s.hidden = 8;
    s.max_len = 1;
    s.eos = -1;
    return s;
  }()};
  policy::Context ctx{{1.0}, {}};
  std::vector<Input> inputs{{"bandit", &ctx, [](const policy::Rollout& r) {
                               rewards::RewardVector v;
                               v.total = r.tokens.at(0) == 1 ? 1.0 : 0.0;
                               return v;
                             }}};

  double p_best(const std::vector<double>& params) const {
    return net.next_token_probs(params, ctx, std::vector<int>{})[1];
  }
};

}  // namespace

TEST_CASE("advantages: examples") {
  const std::vector<double> a = compute_advantages(std::vector<double>{1, 0, 0, 0}, 0.0);
  CHECK(a[0] == doctest::Approx(std::sqrt(3.0)));
  CHECK(a[1] == doctest::Approx(-1 / std::sqrt(3.0)));
  const auto flat = compute_advantages(std::vector<double>{2, 2, 2}, 1e-4);
  for (double v : flat) CHECK(v == 0.0);
  CHECK_THROWS(compute_advantages(std::vector<double>{1.0}, 1e-4));

  // Mean 0.5 and population std 0.5; mean 2.5 and std 2.5.
  const auto halves = compute_advantages(std::vector<double>{1, 1, 0, 0}, 1e-4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(halves[i] == doctest::Approx(i < 2 ? 1.0 : -1.0).epsilon(1e-3));
  }
  const auto pair = compute_advantages(std::vector<double>{5, 0}, 1e-4);
  CHECK(pair[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(pair[1] == doctest::Approx(-1.0).epsilon(1e-4));
}

TEST_CASE("advantages: zero mean, unit spread, order preserving") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n(0, 3);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> r(2 + i % 10);
    for (auto& v : r) v = n(rng);
    const auto a = compute_advantages(r, 0.0);
    double mean = 0, sq = 0;
    for (double v : a) mean += v;
    mean /= static_cast<double>(a.size());
    for (double v : a) sq += v * v;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-12).scale(1));
    CHECK(sq / static_cast<double>(a.size()) == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t j = 1; j < r.size(); ++j) CHECK((r[j] > r[0]) == (a[j] > a[0]));
    // Invariant to shifting and positive scaling of the rewards.
    std::vector<double> moved(r);
    for (auto& v : moved) v = 2.5 * v + 7;
    const auto b = compute_advantages(moved, 0.0);
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(b[j] == doctest::Approx(a[j]).epsilon(1e-9));
  }
}

TEST_CASE("on-policy objective reduces to the advantage-weighted score function") {
  const policy::PolicyNet net(plain_shape());
  const auto ctx = plain_context();
  const auto params = net.init(3, 0.6);
  auto ref = params;
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += 0.03 * std::cos(double(i));
  const auto group = make_group(net, ctx, params, ref, {1, 0, 3, 2});
  for (auto level : {RatioLevel::Sequence, RatioLevel::Token}) {
    const ObjectiveOptions opt{0.2, 0.0, level, 1.0};
    const auto obj = grpo_objective(net, ctx, group, params, opt);
    CHECK(obj.policy_term == doctest::Approx(0.0).scale(1));  // ratios 1, advantages sum to 0
    if (level == RatioLevel::Token) continue;
    std::vector<double> want(params.size(), 0.0);
    for (std::size_t k = 0; k < group.size(); ++k) {
      const auto g = net.grad_log_prob(params, ctx, group.rollouts[k].tokens);
      for (std::size_t i = 0; i < want.size(); ++i) want[i] -= group.advantages[k] * g[i] / 4.0;
    }
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(obj.grad[i] == doctest::Approx(want[i]).epsilon(1e-9).scale(1e-12));
    }
  }
}

TEST_CASE("inside the trust region the objective is the unclipped surrogate") {
  const policy::PolicyNet net(plain_shape());
  const auto ctx = plain_context();
  const auto params = net.init(13, 0.6);
  const auto group = make_group(net, ctx, params, params, {3, 1, 0, 2});
  auto moved = params;
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += 0.01 * std::cos(2.0 * i);
  const auto obj = grpo_objective(net, ctx, group, moved, {0.2, 0.0, RatioLevel::Sequence, 1.0});
  double want = 0;
  std::vector<double> grad(moved.size(), 0.0);
  for (std::size_t k = 0; k < group.size(); ++k) {
    const auto& tokens = group.rollouts[k].tokens;
    const double rho = std::exp(net.log_prob(moved, ctx, tokens) - group.old_logp[k]);
    REQUIRE(std::abs(rho - 1) < 0.2);
    want -= rho * group.advantages[k] / 4.0;
    const auto g = net.grad_log_prob(moved, ctx, tokens);
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] -= rho * group.advantages[k] * g[i] / 4.0;
  }
  CHECK(obj.policy_term == doctest::Approx(want).epsilon(1e-12));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    CHECK(obj.grad[i] == doctest::Approx(grad[i]).epsilon(1e-9).scale(1e-12));
  }
}

TEST_CASE("one small step ascends the advantage-weighted log-likelihood") {
  const policy::PolicyNet net(plain_shape());
  const auto ctx = plain_context();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto params = net.init(20 + seed, 0.6);
    const auto group = make_group(net, ctx, params, params, {0.5, 2, -1, 3});
    auto weighted = [&](const std::vector<double>& p) {
      double s = 0;
      for (std::size_t k = 0; k < group.size(); ++k) {
        s += group.advantages[k] * net.log_prob(p, ctx, group.rollouts[k].tokens);
      }
      return s;
    };
    const auto obj = grpo_objective(net, ctx, group, params, {0.2, 0.0, RatioLevel::Sequence, 1.0});
    auto next = params;
    for (std::size_t i = 0; i < next.size(); ++i) next[i] -= 1e-3 * obj.grad[i];
    CHECK(weighted(next) > weighted(params));
  }
}

TEST_CASE("uniform rewards without KL give a zero gradient") {
  const policy::PolicyNet net(plain_shape());
  const auto ctx = plain_context();
  const auto params = net.init(4, 0.6);
  const auto group = make_group(net, ctx, params, params, {1, 1, 1, 1});
  for (auto level : {RatioLevel::Sequence, RatioLevel::Token}) {
    const auto obj = grpo_objective(net, ctx, group, params, {0.2, 0.0, level, 1.0});
    for (double g : obj.grad) CHECK(g == 0.0);
  }
}

TEST_CASE("KL of the policy against itself is zero") {
  const policy::PolicyNet net(plain_shape());
  const auto ctx = plain_context();
  const auto params = net.init(5, 0.6);
  const auto group = make_group(net, ctx, params, params, {0, 1, 2, 5});
  for (auto level : {RatioLevel::Sequence, RatioLevel::Token}) {
    CHECK(grpo_objective(net, ctx, group, params, {0.2, 0.04, level, 1.0}).kl == 0.0);
  }
}

TEST_CASE("clipping removes the gradient of ratios pushed past the bound") {
  const policy::PolicyNet net(plain_shape());
  const auto ctx = plain_context();
  const auto params = net.init(6, 0.6);
  auto group = make_group(net, ctx, params, params, {0, 1, 2, 5});
  // Pretend every rollout was much less likely under the sampling policy: all ratios are
  // huge, so positive-advantage terms sit on the clipped branch.
  for (auto& lp : group.old_logp) lp -= 5.0;
  for (std::size_t k = 0; k < group.size(); ++k) {
    if (group.advantages[k] < 0) group.advantages[k] = 0;
  }
  const auto obj = grpo_objective(net, ctx, group, params, {0.2, 0.0, RatioLevel::Sequence, 1.0});
  for (double g : obj.grad) CHECK(g == 0.0);
  double want = 0;
  for (double a : group.advantages) want -= 1.2 * a / 4.0;
  CHECK(obj.policy_term == doctest::Approx(want));
}

TEST_CASE("non-finite parameters raise NonFiniteLoss naming the group") {
  const policy::PolicyNet net(plain_shape());
  const auto ctx = plain_context();
  auto params = net.init(7, 0.6);
  const auto group = make_group(net, ctx, params, params, {0, 1, 2, 5});
  params[net.layout().b_out] = std::numeric_limits<double>::quiet_NaN();
  try {
    grpo_objective(net, ctx, group, params, {});
    FAIL("expected NonFiniteLoss");
  } catch (const NonFiniteLoss& e) {
    CHECK(e.group == "g");
  }
}

TEST_CASE("a zero learning rate leaves parameters unchanged") {
  Bandit b;
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.max_steps = 5;
  auto state = initial_state(b.net.init(1));
  const auto before = state.params;
  const auto rows = train(b.net, cfg, state, b.inputs);
  CHECK(rows.size() == 5);
  CHECK(state.params == before);
  CHECK(state.step == 5);
}

TEST_CASE("one update moves probability toward the rewarded arm") {
  Bandit b;
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_rollouts = 64;
  cfg.weight_decay = 0.0;
  cfg.kl_beta = 0.0;
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    auto state = initial_state(b.net.init(seed));
    const double before = b.p_best(state.params);
    train_step(b.net, cfg, state, b.inputs);
    improved += b.p_best(state.params) > before;
  }
  CHECK(improved == 5);
}

TEST_CASE("training is bit-reproducible and logs round-trip") {
  Bandit b;
  TrainConfig cfg;
  cfg.learning_rate = 0.03;
  cfg.max_steps = 30;
  cfg.seed = 9;
  auto s1 = initial_state(b.net.init(2));
  auto s2 = initial_state(b.net.init(2));
  long seen = 0;
  TrainHooks hooks;
  hooks.on_step = [&](const LogRow& row, const TrainState& s) {
    CHECK(s.step == row.step + 1);
    ++seen;
  };
  const auto a = train(b.net, cfg, s1, b.inputs, hooks);
  const auto c = train(b.net, cfg, s2, b.inputs);
  CHECK(seen == 30);
  CHECK(a == c);
  CHECK(s1.params == s2.params);

  std::ostringstream out;
  write_log(out, a);
  std::istringstream in(out.str());
  CHECK(read_log(in) == a);
  std::istringstream empty("");
  CHECK(read_log(empty).empty());
  std::istringstream bad("step,x\n");
  CHECK_THROWS(read_log(bad));
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.group_size = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.batch_rollouts = 12;  // not a multiple of the group size
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.learning_rate = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_ratio_level("token") == RatioLevel::Token);
  CHECK_FALSE(parse_ratio_level("word"));
}
