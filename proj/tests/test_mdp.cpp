#include "amdp/mdp.hpp"
#include "amdp/oracle.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace amdp;

namespace {

// S=2, A=2, H=2; action j always leads to state j.
struct TwoStateExample {
    TransitionKernel kernel = TransitionKernel::deterministic(2, 2, [](std::size_t, std::size_t a) { return a; });
    RewardTensor reward{2, 2, 2};
    TwoStateExample() {
        reward.at(0, 0, 1) = 0.5;
        reward.at(0, 1, 1) = 0.0;
        reward.at(0, 0, 2) = 0.2;
        reward.at(0, 1, 2) = 0.2;
        reward.at(1, 0, 2) = 0.9;
        reward.at(1, 1, 2) = 0.9;
    }
};

} // namespace

TEST(Validate, WellFormedKernelHasNoViolations) {
    MdpSpec spec{3, 2, 2, TransitionKernel::uniform(3, 2), 0};
    EXPECT_TRUE(validate(spec).empty());
}

TEST(Validate, ShortRowNamesThePair) {
    MdpSpec spec{2, 2, 1, TransitionKernel::uniform(2, 2), 0};
    spec.kernel.at(1, 0, 0) = 0.4; // row (1,0) sums to 0.9
    const auto v = validate(spec);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, Violation::Kind::RowSum);
    EXPECT_EQ(v[0].state, 1u);
    EXPECT_EQ(v[0].action, 0u);
}

TEST(Validate, NegativeEntryIsOneViolation) {
    MdpSpec spec{2, 1, 1, TransitionKernel(2, 1), 0};
    spec.kernel.at(0, 0, 0) = -0.1;
    spec.kernel.at(0, 0, 1) = 1.1;
    spec.kernel.at(1, 0, 1) = 1.0;
    auto v = validate(spec);
    // -0.1 and 1.1 are both out of range; the row still sums to 1.
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].kind, Violation::Kind::Entry);
    EXPECT_EQ(v[0].next_state, 0u);

    MdpSpec single{1, 1, 1, TransitionKernel(1, 1), 0};
    single.kernel.at(0, 0, 0) = -0.1;
    v = validate(single);
    ASSERT_GE(v.size(), 1u);
    EXPECT_EQ(v[0].kind, Violation::Kind::Entry);
}

TEST(Validate, SizesAndInitialState) {
    EXPECT_FALSE(validate(MdpSpec{0, 1, 1, TransitionKernel(0, 1), 0}).empty());
    EXPECT_FALSE(validate(MdpSpec{2, 1, 1, TransitionKernel::uniform(2, 1), 2}).empty());
    EXPECT_FALSE(validate(MdpSpec{2, 2, 1, TransitionKernel::uniform(2, 1), 0}).empty());
}

TEST(Validate, RowSumToleranceIsOneInABillion) {
    MdpSpec spec{2, 1, 1, TransitionKernel::uniform(2, 1), 0};
    spec.kernel.at(0, 0, 0) = 0.5 + 5e-10;
    EXPECT_TRUE(validate(spec).empty());
    spec.kernel.at(0, 0, 0) = 0.5 + 5e-9;
    EXPECT_EQ(validate(spec).size(), 1u);
}

TEST(ValueIteration, SingleStateTwoActions) {
    RewardTensor r(1, 2, 1);
    r.at(0, 0, 1) = 0.3;
    r.at(0, 1, 1) = 0.7;
    const auto plan = value_iteration(r, TransitionKernel::uniform(1, 2));
    EXPECT_EQ(plan.policy(0, 1), 1u);
    EXPECT_DOUBLE_EQ(plan.values.v(1, 0), 0.7);
}

TEST(ValueIteration, ZeroRewardTiesGoToActionZero) {
    Rng rng(3);
    const auto k = TransitionKernel::random(3, 4, rng);
    const auto plan = value_iteration(RewardTensor(3, 4, 5), k);
    for (auto a : plan.policy.data()) EXPECT_EQ(a, 0u);
    for (std::size_t h = 1; h <= 6; ++h)
        for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(plan.values.v(h, s), 0.0);
}

TEST(ValueIteration, TwoStateExampleMatchesEnumeration) {
    TwoStateExample ex;
    const auto plan = value_iteration(ex.reward, ex.kernel);
    // 16 deterministic policies, enumerated independently.
    const double brute = oracle::brute_force_opt(ex.reward, ex.kernel, 0);
    EXPECT_NEAR(brute, 0.9, 1e-15);
    EXPECT_NEAR(plan.values.v(1, 0), brute, 1e-15);
    EXPECT_EQ(plan.policy(0, 1), 1u);
}

TEST(ValueIteration, RejectsDimensionMismatch) {
    EXPECT_THROW(value_iteration(RewardTensor(2, 2, 1), TransitionKernel::uniform(3, 2)), DimensionError);
}

TEST(PolicyValue, ZeroRewardIsZero) {
    Rng rng(5);
    const auto k = TransitionKernel::random(3, 2, rng);
    DeterministicPolicy pi(3, 4, 1);
    EXPECT_EQ(policy_value(RewardTensor(3, 2, 4), k, pi, 2), 0.0);
}

TEST(PolicyValue, FixedActionZeroOnTwoStateExample) {
    TwoStateExample ex;
    DeterministicPolicy all_a0(2, 2, 0);
    // a0 stays in s0: 0.5 at layer 1, 0.2 at layer 2.
    EXPECT_NEAR(policy_value(ex.reward, ex.kernel, all_a0, 0), 0.7, 1e-15);
}

TEST(PolicyValue, GreedyPolicyReproducesOptimalValueExactly) {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        auto [spec, r] = testutil::random_instance({4, 3, 5}, rng, 3.0);
        const auto plan = value_iteration(r, spec.kernel);
        for (std::size_t s = 0; s < 4; ++s) EXPECT_EQ(policy_value(r, spec.kernel, plan.policy, s), plan.values.v(1, s));
    }
}

TEST(PolicyValue, RejectsMismatchedPolicy) {
    EXPECT_THROW(policy_value(RewardTensor(2, 2, 2), TransitionKernel::uniform(2, 2), DeterministicPolicy(2, 3), 0),
                 DimensionError);
}

TEST(Properties, BellmanConsistency) {
    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        const Dims d{1 + rng() % 4, 1 + rng() % 4, 1 + rng() % 4};
        auto [spec, r] = testutil::random_instance(d, rng, 10.0);
        const auto plan = value_iteration(r, spec.kernel);
        for (std::size_t h = 1; h <= d.horizon; ++h)
            for (std::size_t s = 0; s < d.states; ++s) {
                double best = -1;
                for (std::size_t a = 0; a < d.actions; ++a) {
                    double next = 0;
                    for (std::size_t n = 0; n < d.states; ++n) next += spec.kernel(s, a, n) * plan.values.v(h + 1, n);
                    EXPECT_NEAR(plan.values.q(h, s, a) - r(s, a, h) - next, 0.0, 1e-9);
                    best = std::max(best, plan.values.q(h, s, a));
                    EXPECT_GE(plan.values.q(h, s, a), 0.0);
                }
                EXPECT_EQ(plan.values.v(h, s), best);
            }
    }
}

TEST(Properties, GreedyDominatesEveryDeterministicPolicy) {
    Rng rng(17);
    for (int i = 0; i < 30; ++i) {
        // S*H*log2(A) <= 20
        const Dims d{1 + rng() % 3, 2, 1 + rng() % 3};
        auto [spec, r] = testutil::random_instance(d, rng);
        const double v1 = value_iteration(r, spec.kernel).values.v(1, 0);
        oracle::for_each_policy(d, [&](const DeterministicPolicy& pi) {
            EXPECT_LE(policy_value(r, spec.kernel, pi, 0), v1 + 1e-12);
        });
    }
}

TEST(Properties, MonotoneInReward) {
    Rng rng(19);
    for (int i = 0; i < 50; ++i) {
        auto [spec, r] = testutil::random_instance({3, 3, 3}, rng);
        RewardTensor bigger = r;
        for (double& x : bigger.data()) x += rng.uniform() * (rng() % 2);
        const auto lo = value_iteration(r, spec.kernel).values;
        const auto hi = value_iteration(bigger, spec.kernel).values;
        for (std::size_t h = 1; h <= 3; ++h)
            for (std::size_t s = 0; s < 3; ++s) EXPECT_GE(hi.v(h, s), lo.v(h, s) - 1e-12);
    }
}

TEST(Properties, ShiftAtOneCellKeepsArgmaxAndAddsConstant) {
    Rng rng(23);
    for (int i = 0; i < 50; ++i) {
        auto [spec, r] = testutil::random_instance({3, 3, 3}, rng);
        const std::size_t s = rng() % 3, h = 1 + rng() % 3;
        const double c = 4.0 * rng.uniform();
        RewardTensor shifted = r;
        for (std::size_t a = 0; a < 3; ++a) shifted.at(s, a, h) += c;
        const auto base = value_iteration(r, spec.kernel);
        const auto moved = value_iteration(shifted, spec.kernel);
        EXPECT_EQ(base.policy(s, h), moved.policy(s, h));
        EXPECT_NEAR(moved.values.v(h, s) - base.values.v(h, s), c, 1e-12);
    }
}

TEST(SampleTrajectory, DeterministicKernelIgnoresRng) {
    const auto k = TransitionKernel::deterministic(3, 2, [](std::size_t s, std::size_t a) { return (s + a + 1) % 3; });
    DeterministicPolicy pi(3, 4, 1);
    Rng a(1), b(999);
    const auto t1 = sample_trajectory(k, pi, 0, a);
    const auto t2 = sample_trajectory(k, pi, 0, b);
    ASSERT_EQ(t1.steps.size(), 4u);
    EXPECT_EQ(t1.steps, t2.steps);
    EXPECT_EQ(t1.steps[1].state, 2u);
    EXPECT_EQ(t1.steps[2].state, 1u);
}

TEST(SampleTrajectory, HorizonOneHasOneStep) {
    Rng rng(2);
    RewardTensor r(2, 2, 1, 0.25);
    const auto t = sample_trajectory(TransitionKernel::uniform(2, 2), DeterministicPolicy(2, 1, 1), 1, rng, &r);
    ASSERT_EQ(t.steps.size(), 1u);
    EXPECT_EQ(t.steps[0], (Step{1, 1}));
    EXPECT_DOUBLE_EQ(t.realized_reward, 0.25);
}

TEST(SampleTrajectory, UniformKernelFrequencies) {
    constexpr std::size_t S = 3, N = 100000;
    const auto k = TransitionKernel::uniform(S, 1);
    DeterministicPolicy pi(S, 2, 0);
    Rng rng(7);
    std::vector<double> freq(S, 0);
    for (std::size_t i = 0; i < N; ++i) freq[sample_trajectory(k, pi, 0, rng).steps[1].state] += 1;
    const double p = 1.0 / S, sigma = std::sqrt(p * (1 - p) / N);
    for (double f : freq) EXPECT_NEAR(f / N, p, 4 * sigma);
}

TEST(SampleTrajectory, SameSeedSameTrajectory) {
    Rng g(31);
    const auto k = TransitionKernel::random(4, 2, g);
    DeterministicPolicy pi(4, 6, 1);
    Rng a(5), b(5);
    EXPECT_EQ(sample_trajectory(k, pi, 0, a).steps, sample_trajectory(k, pi, 0, b).steps);
}

TEST(Accumulate, IdentityAndAddition) {
    const Dims d{2, 2, 2};
    EXPECT_EQ(accumulate(d, {}), RewardTensor(d));
    RewardTensor one(d, 1.0);
    std::vector<RewardTensor> single{one};
    EXPECT_EQ(accumulate(d, single), one);
    std::vector<RewardTensor> two{one, one};
    EXPECT_EQ(accumulate(d, two), RewardTensor(d, 2.0));
    std::vector<RewardTensor> bad{RewardTensor(2, 2, 3)};
    EXPECT_THROW(accumulate(d, bad), DimensionError);
}

TEST(OptInHindsight, Examples) {
    Rng rng(37);
    const auto k = TransitionKernel::random(3, 2, rng);
    EXPECT_EQ(opt_in_hindsight(RewardTensor(3, 2, 3), k, 0).value, 0.0);

    RewardTensor r1(1, 2, 1), r2(1, 2, 1);
    r1.at(0, 0, 1) = 1.0;
    r2.at(0, 1, 1) = 1.0;
    EXPECT_EQ(opt_in_hindsight(r1 + r2, TransitionKernel::uniform(1, 2), 0).value, 1.0);

    EXPECT_THROW(opt_in_hindsight(RewardTensor(1, 2, 1, -1.0), TransitionKernel::uniform(1, 2), 0), std::invalid_argument);
}

TEST(OptInHindsight, MatchesExhaustiveEnumeration) {
    Rng rng(41);
    for (int i = 0; i < 200; ++i) {
        auto [spec, r] = testutil::random_instance({3, 2, 3}, rng, 7.0);
        EXPECT_NEAR(opt_in_hindsight(r, spec.kernel, 0).value, oracle::brute_force_opt(r, spec.kernel, 0), 1e-12);
    }
}
