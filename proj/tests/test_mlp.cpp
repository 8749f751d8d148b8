#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "orl/mlp.hpp"
#include "support/mlp_probe.hpp"

using namespace orl;
using Catch::Approx;

TEST_CASE("construction is deterministic and biases start at zero") {
    Mlp a(4, {64, 64}, 2, 7);
    Mlp b(4, {64, 64}, 2, 7);
    REQUIRE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));

    Mlp c(4, {64, 64}, 2, 8);
    REQUIRE_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));

    // Last output_size entries of the flat buffer are the output biases.
    auto params = a.parameters();
    for (std::size_t i = params.size() - 2; i < params.size(); ++i) {
        REQUIRE(params[i] == 0.0);
    }

    REQUIRE_THROWS(Mlp(0, {4}, 1, 1));
    REQUIRE_THROWS(Mlp(4, {0}, 1, 1));
}

TEST_CASE("forward computes rectified affine maps") {
    // Single linear layer W = [[2]], b = [1].
    Mlp net(1, {}, 1, 0);
    auto params = net.parameters();
    params[0] = 2.0;
    params[1] = 1.0;
    REQUIRE(net.forward(std::vector<double>{3.0})[0] == Approx(7.0));

    // Zero weights: output equals the biases.
    Mlp zero(3, {5}, 2, 0);
    std::fill(zero.parameters().begin(), zero.parameters().end(), 0.0);
    auto zero_params = zero.parameters();
    zero_params[zero_params.size() - 2] = 4.25;
    zero_params[zero_params.size() - 1] = -1.5;
    auto out = zero.forward(std::vector<double>{1.0, -2.0, 0.5});
    REQUIRE(out == std::vector<double>{4.25, -1.5});

    Mlp wide(4, {8}, 3, 3);
    auto y = wide.forward(std::vector<double>{0.2, -0.4, 1.0, 0.0});
    for (double v : y) {
        REQUIRE(std::isfinite(v));
    }
    REQUIRE_THROWS_AS(wide.forward(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("hidden layers rectify") {
    Mlp net(1, {1}, 1, 0);
    auto p = net.parameters();
    // layer 0: w = 1, b = 0; layer 1: w = 1, b = 0 -> identity on positives
    p[0] = 1.0;
    p[1] = 0.0;
    p[2] = 1.0;
    p[3] = 0.0;
    REQUIRE(net.forward(std::vector<double>{2.5})[0] == Approx(2.5));
    REQUIRE(net.forward(std::vector<double>{-2.5})[0] == 0.0);
}

TEST_CASE("fit with the network's own output changes nothing") {
    Mlp net(3, {8}, 2, 11);
    AdamState adam(net, 1e-3);
    const std::vector<double> x{0.3, -0.7, 1.1};
    const auto target = net.forward(x);
    const std::vector<double> before(net.parameters().begin(), net.parameters().end());
    const double loss = fit(net, x, target, {}, adam);
    REQUIRE(loss == 0.0);
    REQUIRE(std::equal(before.begin(), before.end(), net.parameters().begin()));
}

TEST_CASE("fit drives the loss down on a fixed sample") {
    Mlp net(2, {16}, 2, 5);
    AdamState adam(net, 1e-3);
    const std::vector<double> x{0.5, -0.25};
    const std::vector<double> target{0.8, -0.3};
    double last = 0.0;
    for (int i = 0; i < 5000; ++i) {
        last = fit(net, x, target, {}, adam);
        if (last < 1e-6) {
            break;
        }
    }
    REQUIRE(last < 1e-6);
}

TEST_CASE("loss decreases over fitting windows on a learnable batch") {
    Mlp net(3, {16}, 2, 21);
    AdamState adam(net, 1e-3);
    Rng rng(4);
    std::vector<std::vector<double>> xs, ts;
    for (int i = 0; i < 8; ++i) {
        xs.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        ts.push_back({0.25 * xs.back()[0] - 0.5 * xs.back()[1], xs.back()[2]});
    }
    std::vector<double> window_losses;
    double accum = 0.0;
    for (int step = 0; step < 5000; ++step) {
        const auto& x = xs[static_cast<std::size_t>(step % 8)];
        const auto& t = ts[static_cast<std::size_t>(step % 8)];
        accum += fit(net, x, t, {}, adam);
        if ((step + 1) % 500 == 0) {
            window_losses.push_back(accum / 500.0);
            accum = 0.0;
        }
    }
    for (std::size_t i = 1; i < window_losses.size(); ++i) {
        REQUIRE(window_losses[i] < window_losses[i - 1] + 1e-9);
    }
}

TEST_CASE("masked outputs contribute neither loss nor gradient") {
    Mlp net(2, {6}, 3, 9);
    AdamState adam(net, 1e-3);
    const std::vector<double> x{0.4, 0.6};
    const std::vector<double> target{100.0, -100.0, 100.0};
    const std::vector<std::uint8_t> none{0, 0, 0};
    const std::vector<double> before(net.parameters().begin(), net.parameters().end());
    REQUIRE(fit(net, x, target, none, adam) == 0.0);
    REQUIRE(std::equal(before.begin(), before.end(), net.parameters().begin()));

    // A one-hot mask matches fitting the full vector whose other entries
    // already equal the prediction.
    Mlp masked(2, {6}, 3, 9);
    Mlp full(2, {6}, 3, 9);
    AdamState adam_masked(masked, 1e-3);
    AdamState adam_full(full, 1e-3);
    const std::vector<std::uint8_t> only_first{1, 0, 0};
    auto spliced = full.forward(x);
    spliced[0] = 2.0;
    const std::vector<double> masked_target{2.0, 123.0, -9.0};
    const double l1 = fit(masked, x, masked_target, only_first, adam_masked);
    const double l2 = fit(full, x, spliced, {}, adam_full);
    REQUIRE(l1 == Approx(l2).margin(1e-15));
    REQUIRE(std::equal(masked.parameters().begin(), masked.parameters().end(),
                       full.parameters().begin()));

    const std::vector<double> bad_input{0.1, std::nan("")};
    REQUIRE_THROWS_WITH(fit(net, bad_input, target, {}, adam), "non-finite input");
}

TEST_CASE("analytic gradients match central finite differences") {
    // Scalar affine net: loss (wx + b - t)^2, so dL/dw = 2(wx + b - t)x.
    Mlp tiny(1, {}, 1, 0);
    tiny.parameters()[0] = 0.7;
    tiny.parameters()[1] = 0.0;
    {
        std::vector<double> grad(tiny.parameter_count(), 0.0);
        MlpWorkspace ws;
        tiny.loss_and_gradient(std::vector<double>{1.0}, std::vector<double>{0.0}, {}, grad, ws);
        REQUIRE(grad[0] == Approx(2.0 * 0.7).margin(1e-12));
    }
    REQUIRE(gradient_check(tiny, std::vector<double>{1.0}, std::vector<double>{0.0}) < 1e-7);

    // Zero-gradient case: the guarded denominator keeps the measure at 0.
    Mlp settled(2, {4}, 1, 2);
    const std::vector<double> x{0.3, 0.9};
    const auto t = settled.forward(x);
    REQUIRE(gradient_check(settled, x, t) < 1e-7);

    Rng rng(31);
    int accepted = 0;
    while (accepted < 25) {
        const int input = 1 + rng.below(4);
        const int output = 1 + rng.below(3);
        std::vector<int> hidden;
        for (int l = rng.below(3); l > 0; --l) {
            hidden.push_back(1 + rng.below(8));
        }
        Mlp net(input, hidden, output, rng.next_u64());
        std::vector<double> xv(static_cast<std::size_t>(input));
        std::vector<double> tv(static_cast<std::size_t>(output));
        for (auto& v : xv) v = rng.uniform(-1.5, 1.5);
        for (auto& v : tv) v = rng.uniform(-1.5, 1.5);
        // Central differences are meaningless across a rectifier kink; skip
        // samples that put a hidden unit within the probe step of zero.
        if (testing::min_hidden_preactivation_magnitude(net, xv) < 1e-3) {
            continue;
        }
        REQUIRE(gradient_check(net, xv, tv) < 1e-4);
        ++accepted;
    }
}

TEST_CASE("copy_parameters clones behaviour exactly") {
    Mlp src(3, {10}, 2, 1);
    Mlp dst(3, {10}, 2, 2);
    copy_parameters(src, dst);
    Rng rng(6);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        REQUIRE(src.forward(x) == dst.forward(x));
    }

    copy_parameters(src, src); // self-copy is a no-op
    Mlp other(3, {11}, 2, 3);
    REQUIRE_THROWS_WITH(copy_parameters(src, other), "architecture mismatch");
}

TEST_CASE("parameter records round-trip through the binary format") {
    Mlp net(4, {5, 3}, 2, 77);
    std::stringstream buffer;
    net.save(buffer);

    const std::string blob = buffer.str();
    REQUIRE(blob.substr(0, 5) == "ORLN1");
    // layer count (4) as little-endian u32 follows the magic
    REQUIRE(static_cast<unsigned char>(blob[5]) == 4);
    REQUIRE(static_cast<unsigned char>(blob[6]) == 0);
    REQUIRE(blob.size() == 5 + 4 * (1 + 4) + 8 * net.parameter_count());

    auto loaded = Mlp::load(buffer);
    REQUIRE(loaded.layer_sizes() == net.layer_sizes());
    REQUIRE(std::equal(loaded.parameters().begin(), loaded.parameters().end(),
                       net.parameters().begin()));

    std::stringstream bad("XXXXX");
    REQUIRE_THROWS(Mlp::load(bad));
}

TEST_CASE("adam moments stay shaped like the parameters") {
    Mlp net(2, {4}, 1, 0);
    AdamState adam(net, 1e-3);
    REQUIRE(adam.m.size() == net.parameter_count());
    REQUIRE(adam.v.size() == net.parameter_count());
    REQUIRE(adam.step_count == 0);
    fit(net, std::vector<double>{0.1, 0.2}, std::vector<double>{1.0}, {}, adam);
    REQUIRE(adam.step_count == 1);
    REQUIRE(parameters_finite(net));
}
