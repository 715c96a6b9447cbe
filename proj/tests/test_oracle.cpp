#include "amdp/oracle.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace amdp;

TEST(BruteForce, PolicyCountAndLimit) {
    EXPECT_EQ(oracle::policy_count({2, 2, 2}), 16u);
    EXPECT_EQ(oracle::policy_count({1, 16, 1}), 16u);
    EXPECT_THROW(oracle::for_each_policy({5, 4, 3}, [](const DeterministicPolicy&) {}), std::invalid_argument);
}

TEST(BruteForce, Examples) {
    EXPECT_EQ(oracle::brute_force_opt(RewardTensor(2, 2, 2), TransitionKernel::uniform(2, 2), 0), 0.0);
    RewardTensor r(1, 3, 1);
    r.at(0, 2, 1) = 0.8;
    EXPECT_DOUBLE_EQ(oracle::brute_force_opt(r, TransitionKernel::uniform(1, 3), 0), 0.8);
}

TEST(BruteForce, AgreesWithValueIteration) {
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        auto [spec, r] = testutil::random_instance({2, 3, 3}, rng, 4.0);
        EXPECT_NEAR(oracle::brute_force_opt(r, spec.kernel, 0), value_iteration(r, spec.kernel).values.v(1, 0), 1e-12);
    }
}

TEST(GridBall, Examples) {
    const std::vector<double> p{0.5, 0.3, 0.2}, w{1.0, 0.5, 0.0};
    EXPECT_NEAR(oracle::grid_l1_ball_max(p, 0.2, w, 1e-3), 0.75, 1e-3);
    EXPECT_DOUBLE_EQ(oracle::grid_l1_ball_max(p, 0.0, w, 1e-2), 0.5 + 0.15);
    EXPECT_NEAR(oracle::grid_l1_ball_max(p, 2.0, w, 1e-2), 1.0, 1e-12);
    const std::vector<double> one{1.0}, w1{0.4};
    EXPECT_DOUBLE_EQ(oracle::grid_l1_ball_max(one, 1.0, w1, 1e-2), 0.4);
}

TEST(GridBall, RejectsUnsupportedInputs) {
    const std::vector<double> p4(4, 0.25), w4(4, 1.0), p{0.5, 0.5}, w{1, 0};
    EXPECT_THROW(oracle::grid_l1_ball_max(p4, 0.1, w4, 1e-2), std::invalid_argument);
    EXPECT_THROW(oracle::grid_l1_ball_max(p, 0.1, w, 0.5), std::invalid_argument);
    EXPECT_THROW(oracle::grid_l1_ball_max(p, 0.1, w, 0.0), std::invalid_argument);
}

TEST(TwoAction, ClosedForm) {
    EXPECT_DOUBLE_EQ(oracle::two_action_choice_prob(0.0, ExpParams(1.0)), 0.5);
    EXPECT_DOUBLE_EQ(oracle::two_action_choice_prob(std::log(2.0), ExpParams(1.0)), 0.75);
    EXPECT_THROW(oracle::two_action_choice_prob(-1.0, ExpParams(1.0)), std::invalid_argument);
}

TEST(TwoAction, MonteCarloAtLogTwo) {
    // Pr[X_0 + d > X_1] for i.i.d. Exp(1) with d = ln 2, 1e6 draws.
    constexpr std::size_t N = 1000000;
    const ExpParams p(1.0);
    Rng rng(2);
    std::size_t wins = 0;
    for (std::size_t i = 0; i < N; ++i) wins += sample_exp(p, rng) + std::log(2.0) > sample_exp(p, rng);
    const double se = std::sqrt(0.75 * 0.25 / N);
    EXPECT_NEAR(static_cast<double>(wins) / N, 0.75, 4 * se);
}

TEST(McActionProbs, TiedBanditIsFair) {
    const MdpSpec spec{1, 2, 1, TransitionKernel::uniform(1, 2), 0};
    Rng rng(3);
    const auto table = oracle::mc_action_probs([&](Rng& r) { return FplAgent(spec, ExpParams(1.0), r); },
                                               std::span<const RewardTensor>{}, 20000, rng);
    EXPECT_EQ(table.samples(), 20000u);
    EXPECT_NEAR(table.prob(0, 1, 0), 0.5, 4 * std::sqrt(0.25 / 20000));
    EXPECT_DOUBLE_EQ(table.prob(0, 1, 0) + table.prob(0, 1, 1), 1.0);
}

TEST(StabilityCheck, ZeroExtraRewardGivesUnitRatios) {
    Rng g(4);
    auto [spec, unused] = testutil::random_instance({2, 2, 2}, g);
    Rng rng(5);
    const auto rep = oracle::stability_check(spec, ExpParams(0.5), {}, RewardTensor(spec.dims()), 2000, rng);
    for (const auto& e : rep.entries) {
        EXPECT_DOUBLE_EQ(e.ratio, 1.0);
        EXPECT_TRUE(e.pass);
    }
    EXPECT_TRUE(rep.value_pass);
}

TEST(StabilityCheck, RatiosWithinBoundsOnRandomHistory) {
    Rng g(6);
    auto [spec, unused] = testutil::random_instance({2, 2, 2}, g);
    std::vector<RewardTensor> history;
    for (int t = 0; t < 5; ++t) history.push_back(testutil::random_unit_tensor(spec.dims(), g));
    Rng rng(7);
    const ExpParams params(0.1);
    const auto rep =
        oracle::stability_check(spec, params, history, testutil::random_unit_tensor(spec.dims(), g), 100000, rng);
    EXPECT_GT(rep.entries.size(), 0u);
    for (const auto& e : rep.entries) {
        EXPECT_TRUE(e.pass) << "s=" << e.state << " h=" << e.layer << " a=" << e.action << " ratio=" << e.ratio;
        EXPECT_DOUBLE_EQ(e.upper, std::exp(params.eta() * (2.0 - static_cast<double>(e.layer) + 1.0)));
    }
    EXPECT_TRUE(rep.value_pass);
}

TEST(StabilityCheck, RejectsOutOfRangeExtra) {
    const MdpSpec spec{1, 2, 1, TransitionKernel::uniform(1, 2), 0};
    Rng rng(8);
    EXPECT_THROW(oracle::stability_check(spec, ExpParams(1.0), {}, RewardTensor(1, 2, 1, 2.0), 10, rng),
                 std::invalid_argument);
}

TEST(BtlResidual, ZeroRewardsGiveNonNegativeResidual) {
    Rng g(9);
    auto [spec, unused] = testutil::random_instance({2, 2, 2}, g);
    const auto adv = AdversarySpec::make_constant(RewardTensor(spec.dims()));
    Rng rng(10);
    const auto rec = oracle::record_fpl_run(spec, ExpParams(1.0), adv, 10, rng);
    // Every policy is greedy on r_0 alone, so the residual is exactly the r_0 term.
    EXPECT_EQ(rec.policies.size(), 11u);
    EXPECT_DOUBLE_EQ(oracle::btl_residual(rec), policy_value(rec.perturbation, spec.kernel, rec.policies[0], 0));
    EXPECT_GE(oracle::btl_residual(rec), 0.0);
}

TEST(BtlResidual, ZeroPerturbationIsBeTheLeader) {
    Rng g(11);
    for (int i = 0; i < 20; ++i) {
        auto [spec, unused] = testutil::random_instance({3, 2, 3}, g);
        oracle::FplRunRecord rec{spec, RewardTensor(spec.dims()), {}, {}};
        auto agent = FplAgent::with_perturbation(spec, ExpParams(1.0), RewardTensor(spec.dims()));
        rec.policies.push_back(agent.select_policy());
        for (int t = 0; t < 25; ++t) {
            rec.rewards.push_back(testutil::random_unit_tensor(spec.dims(), g));
            agent.observe(rec.rewards.back());
            rec.policies.push_back(agent.select_policy());
        }
        EXPECT_GE(oracle::btl_residual(rec), -1e-9);
    }
}
