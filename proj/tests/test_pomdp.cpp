#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <vector>

#include "actsugg/env/rocksample.hpp"
#include "actsugg/env/tag.hpp"
#include "actsugg/pomdp.hpp"
#include "support/oracles.hpp"

using namespace actsugg;

namespace {

void expect_distribution(const Belief& b, double tol = 1e-9) {
    double total = 0.0;
    for (double p : b.probs()) {
        EXPECT_GE(p, 0.0);
        total += p;
    }
    EXPECT_NEAR(total, 1.0, tol);
}

DiscretePomdp two_state_identity() {
    PomdpBuilder b(2, 1, 2, 0.9);
    for (StateIndex s = 0; s < 2; ++s) {
        b.set_transition(s, 0, {{s, 1.0}});
        b.set_observation(s, 0, {{0, 0.5}, {1, 0.5}});
    }
    return b.build();
}

} // namespace

// ---------------------------------------------------------------------------
// Belief
// ---------------------------------------------------------------------------

TEST(Belief, RejectsInvalidVectors) {
    EXPECT_THROW(Belief(std::vector<double>{}), ArgumentError);
    EXPECT_THROW(Belief(std::vector<double>{0.5, 0.6}), ArgumentError);
    EXPECT_THROW(Belief(std::vector<double>{-0.1, 1.1}), ArgumentError);
    EXPECT_THROW(Belief::from_weights({0.0, 0.0}), ArgumentError);
}

TEST(Belief, FactoriesAndSupport) {
    const Belief u = Belief::uniform(4);
    EXPECT_DOUBLE_EQ(u[2], 0.25);
    const Belief p = Belief::point(3, 1);
    EXPECT_EQ(p[1], 1.0);
    const std::vector<StateIndex> support{0, 2};
    const Belief o = Belief::uniform_over(4, support);
    EXPECT_DOUBLE_EQ(o[0], 0.5);
    EXPECT_EQ(o[1], 0.0);
    const SparseVector sv = o.support();
    EXPECT_EQ(sv.index, (std::vector<std::size_t>{0, 2}));
    EXPECT_NEAR(sv.sum(), 1.0, 1e-15);
}

// ---------------------------------------------------------------------------
// Builder and model invariants
// ---------------------------------------------------------------------------

TEST(PomdpBuilder, RejectsBadRowsAndParameters) {
    EXPECT_THROW(PomdpBuilder(0, 1, 1, 0.9), ArgumentError);
    EXPECT_THROW(PomdpBuilder(1, 1, 1, 1.0), ArgumentError);
    PomdpBuilder b(2, 1, 1, 0.9);
    b.set_transition(0, 0, {{0, 0.5}, {1, 0.4}});
    b.set_transition(1, 0, {{1, 1.0}});
    b.set_observation(0, 0, {{0, 1.0}});
    b.set_observation(1, 0, {{0, 1.0}});
    EXPECT_THROW(b.build(), ArgumentError);
    b.set_transition(0, 0, {{0, 0.5}, {2, 0.5}});
    EXPECT_THROW(b.build(), ArgumentError);
    EXPECT_THROW(b.set_reward(5, 0, 1.0), ArgumentError);
}

TEST(PomdpBuilder, MergesDuplicateEntriesAndDropsZeros) {
    PomdpBuilder b(2, 1, 1, 0.5);
    b.set_transition(0, 0, {{1, 0.25}, {0, 0.0}, {1, 0.75}});
    b.set_transition(1, 0, {{1, 1.0}});
    b.set_observation(0, 0, {{0, 1.0}});
    b.set_observation(1, 0, {{0, 1.0}});
    const auto m = b.build();
    const auto row = m.transition(0, 0);
    ASSERT_EQ(row.size(), 1u);
    EXPECT_EQ(row[0].index, 1u);
    EXPECT_DOUBLE_EQ(row[0].prob, 1.0);
}

TEST(PomdpBuilder, TerminalStatesAreAbsorbingWithZeroReward) {
    PomdpBuilder b(2, 2, 2, 0.9);
    for (StateIndex s = 0; s < 2; ++s)
        for (ActionIndex a = 0; a < 2; ++a) {
            b.set_transition(s, a, {{1, 1.0}});
            b.set_observation(s, a, {{0, 1.0}});
            b.set_reward(s, a, 3.0);
        }
    b.make_terminal(1, 1);
    const auto m = b.build();
    EXPECT_TRUE(m.is_terminal(1));
    for (ActionIndex a = 0; a < 2; ++a) {
        const auto row = m.transition(1, a);
        ASSERT_EQ(row.size(), 1u);
        EXPECT_EQ(row[0].index, 1u);
        EXPECT_EQ(m.reward(1, a), 0.0);
        EXPECT_EQ(m.observation_probability(1, a, 1), 1.0);
    }
}

TEST(TransitionDistribution, OutOfRangeIsArgumentError) {
    const auto m = two_state_identity();
    EXPECT_THROW(transition_distribution(m, 2, 0), ArgumentError);
    EXPECT_THROW(transition_distribution(m, 0, 1), ArgumentError);
}

TEST(TransitionDistribution, TagTerminalIsSelfLoop) {
    const TagEnvironment tag(TagSpec{});
    const auto& m = tag.model();
    for (ActionIndex a = 0; a < m.num_actions(); ++a) {
        const auto row = transition_distribution(m, tag.terminal_state(), a);
        ASSERT_EQ(row.size(), 1u);
        EXPECT_EQ(row[0].index, tag.terminal_state());
        EXPECT_EQ(row[0].prob, 1.0);
    }
}

TEST(TransitionDistribution, TagSuccessfulTagGoesTerminal) {
    const TagEnvironment tag(TagSpec{});
    const StateIndex s = tag.state(7, 7);
    const auto row = transition_distribution(tag.model(), s, kTagAction);
    ASSERT_EQ(row.size(), 1u);
    EXPECT_EQ(row[0].index, tag.terminal_state());
}

TEST(TransitionDistribution, RockSampleEastExitGoesTerminal) {
    const RockSampleEnvironment rs(RockSampleSpec{});
    for (std::size_t rocks = 0; rocks < rs.num_rock_states(); ++rocks) {
        const StateIndex s = rs.state(Cell{7, 3}, rocks);
        const auto row = transition_distribution(rs.model(), s, east);
        ASSERT_EQ(row.size(), 1u);
        EXPECT_EQ(row[0].index, rs.terminal_state());
    }
}

// ---------------------------------------------------------------------------
// belief_update
// ---------------------------------------------------------------------------

TEST(BeliefUpdate, UninformativeIdentityIsNoOp) {
    const auto m = two_state_identity();
    const Belief b(std::vector<double>{0.3, 0.7});
    for (ObservationIndex o = 0; o < 2; ++o) {
        const Belief post = belief_update(m, b, 0, o);
        EXPECT_NEAR(post[0], 0.3, 1e-15);
        EXPECT_NEAR(post[1], 0.7, 1e-15);
    }
}

TEST(BeliefUpdate, TigerListenHearLeft) {
    const auto m = oracle::to_pomdp(oracle::tiger());
    const Belief post = belief_update(m, Belief::uniform(2), oracle::kListen, oracle::kHearLeft);
    EXPECT_NEAR(post[oracle::kTigerLeft], 0.85, 1e-12);
    EXPECT_NEAR(post[oracle::kTigerRight], 0.15, 1e-12);
}

TEST(BeliefUpdate, ImpossibleObservationThrows) {
    PomdpBuilder b(2, 1, 2, 0.9);
    b.set_transition(0, 0, {{0, 1.0}});
    b.set_transition(1, 0, {{1, 1.0}});
    b.set_observation(0, 0, {{0, 1.0}});
    b.set_observation(1, 0, {{1, 1.0}});
    const auto m = b.build();
    EXPECT_THROW(belief_update(m, Belief::point(2, 0), 0, 1), ImpossibleObservation);
}

TEST(BeliefUpdate, RejectsBadIndices) {
    const auto m = two_state_identity();
    EXPECT_THROW(belief_update(m, Belief::uniform(3), 0, 0), ArgumentError);
    EXPECT_THROW(belief_update(m, Belief::uniform(2), 1, 0), ArgumentError);
    EXPECT_THROW(belief_update(m, Belief::uniform(2), 0, 2), ArgumentError);
}

TEST(BeliefUpdate, MatchesBruteForceBayesOnSmallModels) {
    std::mt19937_64 rng(11);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const std::size_t S = 2 + seed % 4; // up to 5 states
        const auto dense = oracle::random_model(S, 3, 3, 0.9, seed);
        const auto m = oracle::to_pomdp(dense);
        for (int trial = 0; trial < 10; ++trial) {
            const auto bv = oracle::random_belief(S, rng);
            const Belief b(bv);
            for (ActionIndex a = 0; a < 3; ++a)
                for (ObservationIndex o = 0; o < 3; ++o) {
                    const auto w = oracle::bayes_unnormalized(dense, bv, a, o);
                    double z = 0.0;
                    for (double x : w) z += x;
                    if (z == 0.0) {
                        EXPECT_THROW(belief_update(m, b, a, o), ImpossibleObservation);
                        continue;
                    }
                    const Belief post = belief_update(m, b, a, o);
                    expect_distribution(post);
                    for (StateIndex s = 0; s < S; ++s) EXPECT_NEAR(post[s], w[s] / z, 1e-12);
                }
        }
    }
}

// ---------------------------------------------------------------------------
// suggestion_update
// ---------------------------------------------------------------------------

TEST(SuggestionUpdate, ConstantLikelihoodLeavesBeliefUnchanged) {
    const Belief b(std::vector<double>{0.1, 0.2, 0.3, 0.4});
    const std::vector<double> l(4, 0.37);
    const Belief post = suggestion_update(b, l);
    for (StateIndex s = 0; s < 4; ++s) EXPECT_NEAR(post[s], b[s], 1e-15);
}

TEST(SuggestionUpdate, IndicatorConditions) {
    const std::vector<double> l{1.0, 0.0, 0.0, 0.0};
    const Belief post = suggestion_update(Belief::uniform(4), l);
    EXPECT_EQ(post[0], 1.0);
    EXPECT_EQ(post[3], 0.0);
}

TEST(SuggestionUpdate, DirectNormalization) {
    const std::vector<double> l{0.7, 0.1, 0.1, 0.1};
    const Belief post = suggestion_update(Belief::uniform(4), l);
    EXPECT_NEAR(post[0], 0.7, 1e-12);
    EXPECT_NEAR(post[1], 0.1, 1e-12);
}

TEST(SuggestionUpdate, ZeroNormalizerThrows) {
    const std::vector<double> l{0.0, 1.0};
    EXPECT_THROW(suggestion_update(Belief::point(2, 0), l), ImpossibleSuggestion);
    const std::vector<double> bad{-1.0, 1.0};
    EXPECT_THROW(suggestion_update(Belief::uniform(2), bad), ArgumentError);
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

TEST(PomdpProperties, UpdatesStayNormalized) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        const auto dense = oracle::random_model(6, 2, 4, 0.9, seed);
        const auto m = oracle::to_pomdp(dense);
        Belief b(oracle::random_belief(6, rng));
        for (int step = 0; step < 20; ++step) {
            const ActionIndex a = rng() % 2;
            const ObservationIndex o = rng() % 4;
            try {
                b = belief_update(m, b, a, o);
            } catch (const ImpossibleObservation&) {
                continue;
            }
            expect_distribution(b);
            std::vector<double> l(6);
            for (double& x : l) x = u(rng);
            try {
                b = suggestion_update(b, l);
            } catch (const ImpossibleSuggestion&) {
                continue;
            }
            expect_distribution(b);
        }
    }
}

TEST(PomdpProperties, SuggestionFactorIsOrderInvariant) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::uint64_t seed = 200; seed < 240; ++seed) {
        const auto dense = oracle::random_model(5, 3, 3, 0.9, seed);
        const auto m = oracle::to_pomdp(dense);
        const Belief b(oracle::random_belief(5, rng));
        std::vector<double> l(5);
        for (double& x : l) x = u(rng) + 0.01;
        for (ActionIndex a = 0; a < 3; ++a)
            for (ObservationIndex o = 0; o < 3; ++o) {
                Belief sequential = Belief::uniform(1);
                try {
                    sequential = suggestion_update(belief_update(m, b, a, o), l);
                } catch (const ImpossibleObservation&) {
                    continue;
                }
                auto joint = joint_update_weights(m, b, a, o);
                for (StateIndex s = 0; s < 5; ++s) joint[s] *= l[s];
                const Belief once = Belief::from_weights(joint);
                for (StateIndex s = 0; s < 5; ++s) EXPECT_NEAR(sequential[s], once[s], 1e-9);
            }
    }
}

// ---------------------------------------------------------------------------
// Debug dump
// ---------------------------------------------------------------------------

TEST(DumpModel, ListsNonzeroEntries) {
    PomdpBuilder b(2, 1, 2, 0.5);
    b.set_transition(0, 0, {{1, 1.0}});
    b.set_observation(0, 0, {{0, 0.25}, {1, 0.75}});
    b.set_reward(0, 0, -2.0);
    b.make_terminal(1, 1);
    std::ostringstream os;
    dump_model(b.build(), os);
    EXPECT_EQ(os.str(),
              "pomdp 2 1 2 0.5\n"
              "T 0 0 1 1\n"
              "O 0 0 0 0.25\n"
              "O 0 0 1 0.75\n"
              "R 0 0 -2\n"
              "terminal 1\n"
              "T 1 0 1 1\n"
              "O 1 0 1 1\n");
}
