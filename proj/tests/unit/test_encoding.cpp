#include <doctest.h>

#include <cmath>

#include "mip/encoding.hpp"
#include "mip/error.hpp"
#include "mip/rng.hpp"

using namespace mip;

static EncodingConfig sinusoid_cfg(int dim, double scale = 1e4) {
    EncodingConfig c;
    c.kind = EncodingKind::sinusoid;
    c.dim = dim;
    c.max_scale = scale;
    return c;
}

static EncodingConfig bucket_cfg(EncodingKind kind, double base, int count) {
    EncodingConfig c;
    c.kind = kind;
    c.bucket_base = base;
    c.bucket_count = count;
    return c;
}

TEST_CASE("sinusoid at t=0 alternates 0 and 1") {
    auto v = sinusoid_encode(0.0, sinusoid_cfg(4));
    CHECK(v[0] == 0.0);
    CHECK(v[1] == 1.0);
    CHECK(v[2] == 0.0);
    CHECK(v[3] == 1.0);
}

TEST_CASE("sinusoid pairs satisfy sin^2+cos^2=1") {
    Rng rng(2);
    auto cfg = sinusoid_cfg(8);
    for (int trial = 0; trial < 50; ++trial) {
        const double t = rng.uniform(0.0, 5000.0);
        auto v = sinusoid_encode(t, cfg);
        for (int m = 0; 2 * m < cfg.dim; ++m) {
            const double s = v[static_cast<size_t>(2 * m)];
            const double c = v[static_cast<size_t>(2 * m + 1)];
            CHECK(s * s + c * c == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::abs(s) <= 1.0);
            CHECK(std::abs(c) <= 1.0);
        }
    }
}

TEST_CASE("sinusoid dim=2 matches high-precision values") {
    auto v = sinusoid_encode(1.0, sinusoid_cfg(2));
    CHECK(v[0] == doctest::Approx(0.8414709848078965).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(0.5403023058681398).epsilon(1e-12));
}

TEST_CASE("sinusoid rejects odd dims") {
    EncodingConfig c = sinusoid_cfg(3);
    CHECK_THROWS_AS(sinusoid_encode(1.0, c), MipError);
}

TEST_CASE("one-hot bucket boundaries") {
    auto cfg = bucket_cfg(EncodingKind::onehot, 2.0, 4);
    // Buckets: [0,2) [2,4) [4,8) [8,inf)
    CHECK(onehot_encode(0.0, cfg) == std::vector<double>{1, 0, 0, 0});
    CHECK(onehot_encode(5.0, cfg) == std::vector<double>{0, 0, 1, 0});
    CHECK(onehot_encode(1e9, cfg) == std::vector<double>{0, 0, 0, 1});
    CHECK(onehot_encode(2.0, cfg) == std::vector<double>{0, 1, 0, 0});
    CHECK(onehot_encode(4.0, cfg) == std::vector<double>{0, 0, 1, 0});
    CHECK(onehot_encode(8.0, cfg) == std::vector<double>{0, 0, 0, 1});
}

TEST_CASE("two-hot at exact powers puts full weight above") {
    auto cfg = bucket_cfg(EncodingKind::twohot, 2.0, 8);
    for (int i = 0; i < 4; ++i) {
        auto v = twohot_encode(std::pow(2.0, i), cfg);
        for (int c = 0; c < cfg.bucket_count; ++c)
            CHECK(v[static_cast<size_t>(c)] == doctest::Approx(c == i + 1 ? 1.0 : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("two-hot log midpoint splits evenly") {
    auto cfg = bucket_cfg(EncodingKind::twohot, 2.0, 8);
    const double t = std::sqrt(2.0) * 4.0; // midpoint of [4, 8) on the log scale
    auto v = twohot_encode(t, cfg);
    CHECK(v[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(v[3] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("two-hot digits sum to one over random timestamps") {
    auto cfg = bucket_cfg(EncodingKind::twohot, 2.0, 16);
    Rng rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const double t = std::exp(rng.uniform(-8.0, 14.0));
        auto v = twohot_encode(t, cfg);
        double total = 0.0;
        int nonzero = 0;
        for (double x : v) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
            total += x;
            if (x != 0.0) ++nonzero;
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
        CHECK(nonzero <= 2);
    }
}

TEST_CASE("two-hot edge values") {
    auto cfg = bucket_cfg(EncodingKind::twohot, 2.0, 6);
    auto zero = twohot_encode(0.0, cfg);
    CHECK(zero[0] == 1.0);
    auto giant = twohot_encode(1e18, cfg);
    CHECK(giant[5] == doctest::Approx(1.0));
    CHECK_THROWS_AS(twohot_encode(-1.0, cfg), MipError);
}

TEST_CASE("interaction embedding concatenates item, temporal, positional") {
    EncodingConfig none;
    none.kind = EncodingKind::none;
    std::vector<double> item{0.5, -0.5};

    auto bare = build_interaction_embedding(item, 3.0, 2, none, none);
    CHECK(bare == item);

    auto both = build_interaction_embedding(item, 0.0, 0, sinusoid_cfg(2), sinusoid_cfg(2));
    CHECK(both.size() == 6);
    CHECK(both[0] == 0.5);
    CHECK(both[2] == 0.0); // sin 0
    CHECK(both[3] == 1.0); // cos 0
    CHECK(both[4] == 0.0);
    CHECK(both[5] == 1.0);
}

TEST_CASE("all four ablation arms are reachable by config") {
    std::vector<double> item(4, 0.1);
    EncodingConfig none;
    none.kind = EncodingKind::none;
    auto arm_item = build_interaction_embedding(item, 1.0, 1, none, none);
    auto arm_pos = build_interaction_embedding(item, 1.0, 1, none, sinusoid_cfg(6));
    auto arm_temp = build_interaction_embedding(item, 1.0, 1, sinusoid_cfg(8), none);
    auto arm_both = build_interaction_embedding(item, 1.0, 1, sinusoid_cfg(8), sinusoid_cfg(6));
    CHECK(arm_item.size() == 4);
    CHECK(arm_pos.size() == 10);
    CHECK(arm_temp.size() == 12);
    CHECK(arm_both.size() == 18);
}

TEST_CASE("changing one timestamp alters only that row") {
    auto cfg = sinusoid_cfg(4);
    std::vector<double> times{0.0, 1.5, 3.0};
    Matrix base = temporal_rows(times, cfg);
    times[1] = 2.5;
    Matrix changed = temporal_rows(times, cfg);
    for (int c = 0; c < 4; ++c) {
        CHECK(base(0, c) == changed(0, c));
        CHECK(base(2, c) == changed(2, c));
    }
    bool row1_differs = false;
    for (int c = 0; c < 4; ++c) row1_differs = row1_differs || base(1, c) != changed(1, c);
    CHECK(row1_differs);
}
