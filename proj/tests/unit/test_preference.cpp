#include <doctest.h>

#include <cmath>

#include "mip/preference.hpp"
#include "support/test_util.hpp"

using namespace mip;

TEST_CASE("learned weights reduce to the output bias under zero layers") {
    Matrix z(2, 3);
    z(0, 0) = 1.0;
    z(1, 2) = -2.0;
    ClusterAssignment clu;
    clu.labels = {0, 1, 0};
    clu.num_clusters = 2;
    Matrix tau(3, 2, 0.5);
    Matrix w1(4, 3 + 5 * 2), b1(1, 4), w2(1, 4), b2(1, 1);
    b2(0, 0) = 0.3;
    auto wc = learned_weights(z, clu, tau, 5, w1, b1, w2, b2);
    CHECK(wc.w[0] == doctest::Approx(0.3));
    CHECK(wc.w[1] == doctest::Approx(0.3));
}

TEST_CASE("identical cluster inputs give identical weights") {
    Matrix z(2, 3);
    for (int c = 0; c < 3; ++c) {
        z(0, c) = 0.4 * c;
        z(1, c) = 0.4 * c;
    }
    ClusterAssignment clu;
    clu.labels = {0, 1};
    clu.num_clusters = 2;
    Matrix tau(2, 0); // temporal encoding off: the FFN sees only z
    Rng rng(1);
    Matrix w1 = test::random_matrix(4, 3, rng);
    Matrix b1 = test::random_matrix(1, 4, rng);
    Matrix w2 = test::random_matrix(1, 4, rng);
    Matrix b2 = test::random_matrix(1, 1, rng);
    auto wc = learned_weights(z, clu, tau, 6, w1, b1, w2, b2);
    CHECK(wc.w[0] == wc.w[1]);
}

TEST_CASE("learned weights match a hand-assembled FFN evaluation") {
    Rng rng(2);
    const int d = 3, dt = 2, l_max = 4, hidden = 5;
    Matrix z = test::random_matrix(2, d, rng);
    ClusterAssignment clu;
    clu.labels = {0, 1, 1};
    clu.num_clusters = 2;
    Matrix tau = test::random_matrix(3, dt, rng);
    Matrix w1 = test::random_matrix(hidden, d + l_max * dt, rng);
    Matrix b1 = test::random_matrix(1, hidden, rng);
    Matrix w2 = test::random_matrix(1, hidden, rng);
    Matrix b2 = test::random_matrix(1, 1, rng);
    auto wc = learned_weights(z, clu, tau, l_max, w1, b1, w2, b2);

    for (int lam = 0; lam < 2; ++lam) {
        std::vector<double> u(static_cast<size_t>(d + l_max * dt), 0.0);
        for (int c = 0; c < d; ++c) u[static_cast<size_t>(c)] = z(lam, c);
        for (int j = 0; j < 3; ++j)
            if (clu.labels[static_cast<size_t>(j)] == lam)
                for (int c = 0; c < dt; ++c) u[static_cast<size_t>(d + j * dt + c)] = tau(j, c);
        double out = b2(0, 0);
        for (int r = 0; r < hidden; ++r) {
            double acc = b1(0, r);
            for (size_t c = 0; c < u.size(); ++c) acc += w1(r, static_cast<int>(c)) * u[c];
            out += w2(0, r) * std::tanh(acc);
        }
        CHECK(wc.w[static_cast<size_t>(lam)] == doctest::Approx(out).epsilon(1e-12));
        CHECK(wc.input[static_cast<size_t>(lam)] == u);
    }
}

TEST_CASE("exponential decay weights") {
    // A lone item defines t_now, so its weight is exp(0) = 1.
    ClusterAssignment one;
    one.labels = {0};
    one.num_clusters = 1;
    CHECK(exp_decay_weights(one, {5.0}, 0.01)[0] == doctest::Approx(1.0).epsilon(1e-15));

    // One item 100 days older than t_now.
    ClusterAssignment two;
    two.labels = {0, 1};
    two.num_clusters = 2;
    auto w = exp_decay_weights(two, {0.0, 100.0}, 0.01);
    CHECK(w[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(1.0).epsilon(1e-12));

    // Two items at t_now in one cluster vs one in another: exactly double.
    ClusterAssignment mixed;
    mixed.labels = {0, 0, 1};
    mixed.num_clusters = 2;
    auto wm = exp_decay_weights(mixed, {7.0, 7.0, 7.0}, 0.01);
    CHECK(wm[0] == doctest::Approx(2.0 * wm[1]).epsilon(1e-15));
}

TEST_CASE("score takes the weighted max with deterministic ties") {
    Matrix z(2, 2);
    z(0, 0) = 3.0; // z0 . p = 3 with p = e0
    z(1, 0) = 1.0;
    std::vector<double> w{1.0, 2.0};
    std::vector<double> p{1.0, 0.0};
    auto sp = score(z, w, p.data());
    CHECK(sp.y == doctest::Approx(3.0));
    CHECK(sp.argmax == 0);
    CHECK(sp.probability == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))));

    Matrix z1(1, 2);
    z1(0, 0) = 0.5;
    z1(0, 1) = -0.5;
    std::vector<double> p2{2.0, 2.0};
    auto single = score(z1, {0.7}, p2.data());
    CHECK(single.y == doctest::Approx(0.7 * (0.5 * 2.0 - 0.5 * 2.0)));
    CHECK(single.argmax == 0);

    // Permuting clusters leaves y unchanged.
    Matrix zp(2, 2);
    zp(0, 0) = z(1, 0);
    zp(1, 0) = z(0, 0);
    auto swapped = score(zp, {w[1], w[0]}, p.data());
    CHECK(swapped.y == sp.y);

    // Ties route to the lowest cluster index.
    Matrix zt(2, 1);
    zt(0, 0) = 1.0;
    zt(1, 0) = 1.0;
    std::vector<double> pt{1.0};
    auto tie = score(zt, {1.0, 1.0}, pt.data());
    CHECK(tie.argmax == 0);
}

TEST_CASE("score dominance invariants") {
    Rng rng(3);
    Matrix z = test::random_matrix(3, 4, rng);
    std::vector<double> w{0.5, 1.5, 1.0};
    std::vector<double> p{0.3, -0.2, 0.9, 0.1};
    auto sp = score(z, w, p.data());
    for (int lam = 0; lam < 3; ++lam)
        CHECK(sp.y >= w[static_cast<size_t>(lam)] * dot(z.row(lam), p.data(), 4) - 1e-15);

    // Raising the argmax weight strictly raises y (when its term is positive).
    if (sp.y > 0.0) {
        auto w2 = w;
        w2[static_cast<size_t>(sp.argmax)] *= 2.0;
        CHECK(score(z, w2, p.data()).y > sp.y);
    }
}

TEST_CASE("nll loss hand values") {
    CHECK(nll_loss({0.5, 0.5, 0.5}, {1, 0, 1}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(nll_loss({1.0 - 1e-15, 1e-15}, {1, 0}) == doctest::Approx(0.0).epsilon(1e-9));
    const double expect = -(2.0 * std::log(0.9) + std::log(0.8)) / 3.0;
    CHECK(nll_loss({0.9, 0.9, 0.2}, {1, 1, 0}) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(nll_loss({0.9, 0.9, 0.2}, {1, 1, 0}) == doctest::Approx(0.144622).epsilon(1e-4));
    // Safe at exact 0/1 probabilities.
    CHECK(std::isfinite(nll_loss({0.0, 1.0}, {1, 0})));
}

TEST_CASE("triplet loss hand values") {
    CHECK(triplet_loss({2.0}, {0.5}, 0.5) == doctest::Approx(0.0)); // margin satisfied
    CHECK(triplet_loss({1.0}, {1.0}, 0.4) == doctest::Approx(0.4)); // equal scores cost alpha
    // One satisfied, one violated by 0.3.
    CHECK(triplet_loss({2.0, 1.0}, {0.0, 0.8}, 0.5) == doctest::Approx(0.15).epsilon(1e-12));
}
