#include "amdp/adversary.hpp"
#include "amdp/fpl.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace amdp;

TEST(Adversary, ParseKind) {
    EXPECT_EQ(parse_adversary_kind("constant"), AdversaryKind::Constant);
    EXPECT_EQ(parse_adversary_kind("iid_uniform"), AdversaryKind::IidUniform);
    EXPECT_EQ(parse_adversary_kind("switching"), AdversaryKind::Switching);
    EXPECT_EQ(parse_adversary_kind("replay"), AdversaryKind::Replay);
    EXPECT_THROW(parse_adversary_kind("adaptive"), std::invalid_argument);
}

TEST(Adversary, ConstantReturnsTheSameTensor) {
    RewardTensor r(2, 2, 2, 0.3);
    r.at(1, 1, 2) = 0.9;
    const auto adv = AdversarySpec::make_constant(r);
    for (std::size_t t : {1, 2, 100}) EXPECT_EQ(next_reward(adv, t), r);
    EXPECT_THROW(AdversarySpec::make_constant(RewardTensor(1, 1, 1, 1.5)), std::invalid_argument);
    EXPECT_THROW(next_reward(adv, 0), std::invalid_argument);
}

TEST(Adversary, SwitchingPeriodOneAlternates) {
    const auto adv = AdversarySpec::make_switching({1, 2, 1}, 1);
    const double expected[4][2] = {{1, 0}, {0, 1}, {1, 0}, {0, 1}};
    for (std::size_t t = 1; t <= 4; ++t) {
        const auto r = next_reward(adv, t);
        EXPECT_EQ(r(0, 0, 1), expected[t - 1][0]);
        EXPECT_EQ(r(0, 1, 1), expected[t - 1][1]);
    }
}

TEST(Adversary, SwitchingPeriodTIsConstant) {
    const std::size_t T = 50;
    const auto adv = AdversarySpec::make_switching({2, 3, 2}, T);
    const auto first = next_reward(adv, 1);
    for (std::size_t t = 2; t <= T; ++t) EXPECT_EQ(next_reward(adv, t), first);
    EXPECT_THROW(AdversarySpec::make_switching({1, 2, 1}, 0), std::invalid_argument);
}

TEST(Adversary, SwitchingRewardsBlockActionEverywhere) {
    const auto adv = AdversarySpec::make_switching({3, 4, 2}, 5);
    const auto r = next_reward(adv, 12); // block floor(11/5) = 2
    for (std::size_t h = 1; h <= 2; ++h)
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t a = 0; a < 4; ++a) EXPECT_EQ(r(s, a, h), a == 2 ? 1.0 : 0.0);
}

TEST(Adversary, IidUniformIsAPureFunctionOfSeedAndEpisode) {
    const auto adv = AdversarySpec::make_iid_uniform({3, 2, 3}, 7);
    EXPECT_EQ(next_reward(adv, 5), next_reward(adv, 5));
    EXPECT_FALSE(next_reward(adv, 5) == next_reward(adv, 6));
    EXPECT_FALSE(next_reward(adv, 5) == next_reward(AdversarySpec::make_iid_uniform({3, 2, 3}, 8), 5));
    for (std::size_t t = 1; t <= 100; ++t) EXPECT_TRUE(next_reward(adv, t).all_within(0.0, 1.0));
}

TEST(Adversary, IidUniformMean) {
    const auto adv = AdversarySpec::make_iid_uniform({4, 4, 4}, 3);
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t t = 1; t <= 500; ++t) {
        const auto r = next_reward(adv, t);
        for (double x : r.data()) {
            sum += x;
            ++n;
        }
    }
    EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Replay, RoundTrip) {
    Rng rng(1);
    std::vector<RewardTensor> tensors;
    for (int t = 0; t < 4; ++t) tensors.push_back(testutil::random_unit_tensor({2, 3, 2}, rng));
    std::stringstream ss;
    write_replay(ss, tensors);
    const auto back = read_replay(ss);
    EXPECT_EQ(back, tensors);

    const auto adv = AdversarySpec::make_replay(back);
    for (std::size_t t = 1; t <= 4; ++t) EXPECT_EQ(next_reward(adv, t), tensors[t - 1]);
    EXPECT_THROW(next_reward(adv, 5), AdversaryError);
}

TEST(Replay, MalformedFilesAreRejected) {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_replay(in);
    };
    EXPECT_THROW(parse(""), AdversaryError);
    EXPECT_THROW(parse("2 1 2"), AdversaryError);
    EXPECT_THROW(parse("0 1 2 1"), AdversaryError);
    EXPECT_THROW(parse("2 1 2 1\n0.1 0.2\n0.3"), AdversaryError);    // truncated
    EXPECT_THROW(parse("1 1 2 1\n0.1 1.2"), AdversaryError);         // out of range
    EXPECT_THROW(parse("1 1 2 1\n0.1 abc"), AdversaryError);
    EXPECT_THROW(parse("1 1 2 1\n0.1 0.2 0.3"), AdversaryError);     // trailing
    EXPECT_NO_THROW(parse("1 1 2 1\n0.1 0.2\n"));
    EXPECT_THROW(load_replay("/nonexistent/replay.txt"), AdversaryError);
}

TEST(Experts, EncodingIsOneStateOneLayer) {
    ExpertsInstance inst{3, {{0.0, 0.5, 1.0}, {1.0, 1.0, 0.25}}};
    const auto [spec, adv] = experts_as_mdp(inst);
    EXPECT_EQ(spec.dims(), (Dims{1, 3, 1}));
    EXPECT_TRUE(validate(spec).empty());
    const auto r2 = next_reward(adv, 2);
    EXPECT_DOUBLE_EQ(r2(0, 0, 1), 0.0);
    EXPECT_DOUBLE_EQ(r2(0, 2, 1), 0.75);
}

TEST(Experts, PolicyValueIsOneMinusLossAndRegretCarriesOver) {
    Rng rng(2);
    ExpertsInstance inst{4, {}};
    for (int t = 0; t < 30; ++t) inst.losses.push_back({rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()});
    const auto [spec, adv] = experts_as_mdp(inst);

    std::vector<double> loss_sum(4, 0.0);
    double reward_sum = 0, loss_of_choices = 0;
    std::vector<RewardTensor> seen;
    for (std::size_t t = 1; t <= 30; ++t) {
        const std::size_t choice = (t * 7) % 4;
        DeterministicPolicy pi(1, 1, choice);
        const auto r = next_reward(adv, t);
        EXPECT_NEAR(policy_value(r, spec.kernel, pi, 0), 1.0 - inst.losses[t - 1][choice], 1e-15);
        reward_sum += policy_value(r, spec.kernel, pi, 0);
        loss_of_choices += inst.losses[t - 1][choice];
        for (std::size_t i = 0; i < 4; ++i) loss_sum[i] += inst.losses[t - 1][i];
        seen.push_back(r);
    }
    const double mdp_regret = opt_in_hindsight(accumulate(spec.dims(), seen), spec.kernel, 0).value - reward_sum;
    const double experts_regret = loss_of_choices - *std::min_element(loss_sum.begin(), loss_sum.end());
    EXPECT_NEAR(mdp_regret, experts_regret, 1e-12);
}

TEST(Experts, RejectsBadInstances) {
    EXPECT_THROW(experts_as_mdp({0, {}}), std::invalid_argument);
    EXPECT_THROW(experts_as_mdp({2, {{0.5}}}), DimensionError);
    EXPECT_THROW(experts_as_mdp({2, {{0.5, 1.5}}}), std::invalid_argument);
}
