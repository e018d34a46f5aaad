#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sdsh/errors.hpp"
#include "sdsh/event_model.hpp"
#include "sdsh/model_io.hpp"
#include "sdsh/simulator.hpp"

using namespace sdsh;

namespace {

ExcitationState state_with(const ModelSpec& spec, int spread, std::vector<double> z) {
    ExcitationState s = ExcitationState::cold(spec, spread);
    s.z = std::move(z);
    return s;
}

}  // namespace

TEST(EventType, IndexOrderPositiveThenNegative) {
    EXPECT_EQ(EventType{+1}.index(2), 0);
    EXPECT_EQ(EventType{+2}.index(2), 1);
    EXPECT_EQ(EventType{-1}.index(2), 2);
    EXPECT_EQ(EventType{-2}.index(2), 3);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(EventType::from_index(i, 2).index(2), i);
    EXPECT_THROW(EventType::checked(0, 2), std::invalid_argument);
    EXPECT_THROW(EventType::checked(3, 2), std::invalid_argument);
}

TEST(Advance, ZeroStepIsIdentity) {
    ModelSpec spec = make_spec(1, {1.0, 10.0}, 2);
    const auto s = state_with(spec, 2, {0.5, 1.5, 2.5, 3.5});
    const auto t = advance(spec, s, 0.0);
    EXPECT_EQ(t.z, s.z);
    EXPECT_EQ(t.spread, s.spread);
}

TEST(Advance, HalvesAtLogTwo) {
    ModelSpec spec = make_spec(1, {1.0}, 2);
    const auto t = advance(spec, state_with(spec, 1, {1.0, 0.0}), std::log(2.0));
    EXPECT_NEAR(t.z[0], 0.5, 1e-15);
}

TEST(Advance, SemigroupProperty) {
    Philox rng(11);
    ModelSpec spec = make_spec(2, {0.7, 13.0, 140.0}, 4);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> z(12);
        for (double& v : z) v = 10.0 * rng.uniform();
        const auto s = state_with(spec, 3, z);
        const double a = 0.05 * rng.uniform(), b = 0.05 * rng.uniform();
        const auto two = advance(spec, advance(spec, s, a), b);
        const auto one = advance(spec, s, a + b);
        for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(two.z[i], one.z[i], 1e-12 * std::fabs(one.z[i]) + 1e-300);
        EXPECT_NEAR(two.time, one.time, 1e-15);
    }
}

TEST(Advance, NegativeStepRejected) {
    ModelSpec spec = make_spec(1, {1.0}, 2);
    EXPECT_THROW(advance(spec, ExcitationState::cold(spec, 1), -1e-3), std::invalid_argument);
}

TEST(ApplyJump, AddsBetaToSourceRow) {
    ModelSpec spec = make_spec(1, {10.0, 100.0}, 3);
    const auto s = apply_jump(spec, ExcitationState::cold(spec, 1), EventType{+1});
    EXPECT_EQ(s.spread, 2);
    EXPECT_DOUBLE_EQ(s.z[0], 10.0);
    EXPECT_DOUBLE_EQ(s.z[1], 100.0);
    EXPECT_DOUBLE_EQ(s.z[2], 0.0);
    EXPECT_DOUBLE_EQ(s.z[3], 0.0);
    const auto twice = apply_jump(spec, s, EventType{+1});
    EXPECT_DOUBLE_EQ(twice.z[0], 20.0);
    EXPECT_DOUBLE_EQ(twice.z[1], 200.0);
}

TEST(ApplyJump, BelowOneTickThrows) {
    ModelSpec spec = make_spec(1, {1.0}, 3);
    EXPECT_THROW(apply_jump(spec, ExcitationState::cold(spec, 1), EventType{-1}), InvariantViolation);
}

TEST(Intensity, DemoSpecValues) {
    const ModelSpec spec = demo_spec();
    const auto at2 = ExcitationState::cold(spec, 2);
    EXPECT_NEAR(intensity(spec, at2, EventType{+1}), 0.21, 1e-15);
    EXPECT_NEAR(total_intensity(spec, at2), 0.51, 1e-15);

    auto warm = ExcitationState::cold(spec, 1);
    warm.z = {50.0, 50.0};
    EXPECT_EQ(intensity(spec, warm, EventType{-1}), 0.0);

    const auto after = apply_jump(spec, ExcitationState::cold(spec, 1), EventType{+1});
    EXPECT_NEAR(intensity(spec, after, EventType{+1}), 0.7 * (0.3 + 0.1 * 1.0), 1e-15);
}

TEST(Intensity, ZeroSpecIsZero) {
    ModelSpec spec = make_spec(2, {1.0}, 4);
    EXPECT_EQ(total_intensity(spec, ExcitationState::cold(spec, 3)), 0.0);
}

TEST(Intensity, TotalNonIncreasingBetweenEvents) {
    Philox rng(5);
    const ModelSpec spec = oracle::random_spec(rng, 2, {1.0, 30.0}, 5);
    auto s = ExcitationState::cold(spec, 3);
    s = apply_jump(spec, s, EventType{+1});
    s = apply_jump(spec, s, EventType{-2});
    double prev = total_intensity(spec, s);
    for (int i = 0; i < 50; ++i) {
        s = advance(spec, s, 0.01 * rng.uniform());
        const double now = total_intensity(spec, s);
        EXPECT_LE(now, prev);
        prev = now;
    }
}

TEST(Intensity, RescalingFInvariance) {
    Philox rng(17);
    ModelSpec spec = oracle::random_spec(rng, 2, {2.0, 20.0}, 4);
    auto s = ExcitationState::cold(spec, 3);
    s = apply_jump(spec, s, EventType{+2});
    s = advance(spec, s, 0.03);
    ModelSpec scaled = spec;
    const double c = 3.7;
    for (int e = 0; e < spec.dimension(); ++e) {
        for (auto& v : scaled.statefns.values[static_cast<std::size_t>(e)]) v *= c;
        scaled.mus[static_cast<std::size_t>(e)] /= c;
        for (int src = 0; src < spec.dimension(); ++src) {
            for (std::size_t l = 0; l < spec.decays(); ++l) scaled.kernels.alpha(e, src, l) /= c;
        }
    }
    for (int e = 0; e < spec.dimension(); ++e) {
        EXPECT_NEAR(intensity_at(scaled, s, e), intensity_at(spec, s, e), 1e-13 * intensity_at(spec, s, e));
    }
}

TEST(Excitation, RecursionMatchesDirectSum) {
    const ModelSpec spec = recovery_spec();
    const SpreadPath path = simulate(spec, 400.0, 1, 99);
    ASSERT_GE(path.events.size(), 200u);
    auto state = ExcitationState::cold(spec, path.s0);
    double worst = 0.0;
    for (const auto& ev : path.events) {
        state = advance(spec, state, ev.seconds() - state.time);
        const auto ref = oracle::z_direct(spec, path, ev.seconds());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (ref[i] > 1e-200) worst = std::max(worst, std::fabs(state.z[i] - ref[i]) / ref[i]);
        }
        state = apply_jump(spec, state, EventType{ev.size});
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(ModelSpec, ValidationCatchesStructuralZero) {
    ModelSpec spec = make_spec(2, {1.0}, 4);
    spec.statefns.at(EventType{-2}.index(2), 2) = 0.5;
    EXPECT_THROW(spec.validate(), ConfigurationError);
    ModelSpec bad_betas = make_spec(1, {10.0, 1.0}, 3);
    EXPECT_THROW(bad_betas.validate(), ConfigurationError);
}

TEST(ModelSpec, NormalizeKeepsIntensity) {
    Philox rng(3);
    ModelSpec spec = oracle::random_spec(rng, 1, {1.0}, 3);
    ModelSpec skewed = spec;
    for (auto& v : skewed.statefns.values[0]) v *= 2.5;
    skewed.mus[0] /= 2.5;
    skewed.kernels.alpha(0, 0, 0) /= 2.5;
    skewed.kernels.alpha(0, 1, 0) /= 2.5;
    EXPECT_FALSE(skewed.is_normalized());
    normalize(skewed);
    EXPECT_TRUE(skewed.is_normalized());
    EXPECT_NEAR(skewed.mus[0], spec.mus[0], 1e-14);
    EXPECT_NEAR(skewed.kernels.alpha(0, 1, 0), spec.kernels.alpha(0, 1, 0), 1e-14);
}

TEST(ModelIo, JsonRoundTripIsLossless) {
    Philox rng(23);
    const ModelSpec spec = oracle::random_spec(rng, 2, {1.0 / 3.0, 7.1, 1e3}, 5);
    const ModelSpec back = spec_from_json(Json::parse(spec_to_json(spec).dump()));
    EXPECT_EQ(back.mus, spec.mus);
    EXPECT_EQ(back.kernels.alphas, spec.kernels.alphas);
    EXPECT_EQ(back.kernels.betas, spec.kernels.betas);
    EXPECT_EQ(back.statefns.values, spec.statefns.values);
    EXPECT_EQ(spec_hash(back), spec_hash(spec));
}

TEST(ModelIo, ErrorNamesFieldPath) {
    Json doc = spec_to_json(demo_spec());
    doc["mus"] = Json::array({0.3});
    try {
        spec_from_json(doc);
        FAIL() << "expected ConfigurationError";
    } catch (const ConfigurationError& e) {
        EXPECT_NE(std::string(e.what()).find("spec.mus"), std::string::npos) << e.what();
    }
}

TEST(SpreadPath, ValidateRejectsTiesAndNegativeSpread) {
    SpreadPath p;
    p.s0 = 1;
    p.horizon = to_nanos(10.0);
    p.events = {{to_nanos(1.0), +1}, {to_nanos(1.0), -1}};
    EXPECT_THROW(p.validate(), InvariantViolation);
    p.events = {{to_nanos(1.0), -1}};
    EXPECT_THROW(p.validate(), InvariantViolation);
    p.events = {{to_nanos(1.0), +1}, {to_nanos(2.0), -1}};
    EXPECT_NO_THROW(p.validate(1));
    EXPECT_EQ(p.spread_at(to_nanos(1.0)), 2);
    EXPECT_EQ(p.spread_at(to_nanos(1.0) - 1), 1);
    EXPECT_EQ(p.final_spread(), 1);
}
