#include <doctest.h>

#include <cmath>

#include "chdrl/checkpoint.hpp"
#include "chdrl/numerics.hpp"

using namespace chdrl;

namespace {

// Straight-line forward pass over the flat layout, independent of Mlp::forward.
Vec reference_forward(const Mlp<double>& net, const Vec& x)
{
    const auto& sizes = net.layer_sizes();
    const Vec& p = net.flatten();
    Vec a = x;
    Index off = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const Index in = sizes[l], out = sizes[l + 1];
        Vec z(out);
        for (Index o = 0; o < out; ++o) {
            double acc = p[off + in * out + o];
            for (Index i = 0; i < in; ++i)
                acc += p[off + o * in + i] * a[i];
            z[o] = l + 2 < sizes.size() ? std::tanh(acc) : acc;
        }
        off += (in + 1) * out;
        a = z;
    }
    return a;
}

double objective(const Mlp<double>& net, const Vec& x, const Vec& up) { return up.dot(net.forward(x)); }

} // namespace

TEST_CASE("parameter count follows the layer formula")
{
    Rng rng(3);
    const auto net = Mlp<double>::initialized({4, 64, 64, 2}, rng);
    CHECK(net.parameter_count() == (4 + 1) * 64 + (64 + 1) * 64 + (64 + 1) * 2);
    CHECK(net.flatten().size() == net.parameter_count());
}

TEST_CASE("forward of a zero network is zero")
{
    Mlp<double> net({3, 5, 2});
    CHECK(net.forward(Vec(Vec::Constant(3, 0.7))).isZero(0.0));
}

TEST_CASE("1-1-1 unit-weight net maps 0 to 0")
{
    Mlp<double> net({1, 1, 1});
    Vec p(4);
    p << 1.0, 0.0, 1.0, 0.0;
    net.load(p);
    CHECK(net.forward(Vec(Vec::Zero(1)))[0] == 0.0);
}

TEST_CASE("forward matches a hand-rolled pass on seeded nets")
{
    Rng rng(11);
    for (int k = 0; k < 20; ++k) {
        const auto net = Mlp<double>::initialized({3, 7, 5, 2}, rng);
        const Vec x = standard_normal(rng, 3, 1).col(0);
        CHECK((net.forward(x) - reference_forward(net, x)).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("batched forward equals per-column forward")
{
    Rng rng(5);
    const auto net = Mlp<double>::initialized({4, 8, 3}, rng);
    const Mat xs = standard_normal(rng, 4, 6);
    const Mat ys = net.forward(xs);
    for (Index j = 0; j < xs.cols(); ++j)
        CHECK((ys.col(j) - net.forward(Vec(xs.col(j)))).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("forward rejects a wrong input size")
{
    Mlp<double> net({3, 4, 1});
    CHECK_THROWS_AS(net.forward(Vec(Vec::Zero(2))), Error);
    CHECK_THROWS_AS(net.backward(Vec::Zero(3), Vec::Zero(2)), Error);
}

TEST_CASE("zero upstream gives zero gradient")
{
    Rng rng(1);
    const auto net = Mlp<double>::initialized({3, 6, 2}, rng);
    CHECK(net.backward(Vec::Ones(3), Vec::Zero(2)).flat.isZero(0.0));
}

TEST_CASE("single linear layer gradient is the outer product")
{
    Rng rng(2);
    const auto net = Mlp<double>::initialized({3, 2}, rng);
    Vec x(3), u(2);
    x << 1.0, -2.0, 0.5;
    u << 3.0, -1.0;
    const Vec g = net.backward(x, u).flat;
    for (Index o = 0; o < 2; ++o) {
        for (Index i = 0; i < 3; ++i)
            CHECK(g[o * 3 + i] == doctest::Approx(u[o] * x[i]).epsilon(1e-15));
        CHECK(g[6 + o] == doctest::Approx(u[o]).epsilon(1e-15));
    }
}

TEST_CASE("gradients agree with central differences")
{
    Rng rng(17);
    const double h = 1e-5;
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        auto net = Mlp<double>::initialized({3, 6, 4, 2}, rng);
        const Vec x = standard_normal(rng, 3, 1).col(0);
        const Vec up = standard_normal(rng, 2, 1).col(0);
        const Vec g = net.backward(x, up).flat;
        Vec p = net.flatten();
        for (Index i = 0; i < p.size(); ++i) {
            const double p0 = p[i];
            p[i] = p0 + h;
            net.load(p);
            const double fp = objective(net, x, up);
            p[i] = p0 - h;
            net.load(p);
            const double fm = objective(net, x, up);
            p[i] = p0;
            net.load(p);
            const double fd = (fp - fm) / (2 * h);
            worst = std::max(worst, std::abs(fd - g[i]) / std::max(1e-6, std::abs(fd) + std::abs(g[i])));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("input gradient agrees with central differences")
{
    Rng rng(23);
    const auto net = Mlp<double>::initialized({4, 9, 3}, rng);
    const Mat x = standard_normal(rng, 4, 1);
    const Mat up = standard_normal(rng, 3, 1);
    Tape<double> tape;
    net.forward(x, &tape);
    Mat gx;
    net.backward(tape, up, &gx);
    const double h = 1e-6;
    for (Index i = 0; i < 4; ++i) {
        Mat xp = x, xm = x;
        xp(i, 0) += h;
        xm(i, 0) -= h;
        const double fd = ((up.transpose() * net.forward(xp))(0, 0) - (up.transpose() * net.forward(xm))(0, 0)) / (2 * h);
        CHECK(gx(i, 0) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("flat parameters round-trip exactly")
{
    Rng rng(9);
    for (const auto& sizes : {std::vector<Index>{1, 1}, {2, 3, 1}, {5, 64, 64, 3}}) {
        const auto a = Mlp<double>::initialized(sizes, rng);
        Mlp<double> b(sizes);
        b.load(a.flatten());
        CHECK(b.flatten() == a.flatten());
        CHECK_THROWS_AS(b.load(Vec::Zero(a.parameter_count() + 1)), Error);
    }
}

TEST_CASE("initialization is deterministic and within the fan-in bound")
{
    Rng r1(42), r2(42);
    const auto a = Mlp<double>::initialized({4, 16, 2}, r1);
    const auto b = Mlp<double>::initialized({4, 16, 2}, r2);
    CHECK(a.flatten() == b.flatten());
    CHECK(a.weights(0).cwiseAbs().maxCoeff() <= 0.5);
    CHECK(a.weights(1).cwiseAbs().maxCoeff() <= 0.25);
}

TEST_CASE("fast tanh tracks std::tanh")
{
    Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(20001, -25.0, 25.0);
    const Eigen::ArrayXd t = fast_tanh(x);
    double worst = 0.0;
    for (Index i = 0; i < x.size(); ++i)
        worst = std::max(worst, std::abs(t[i] - std::tanh(x[i])));
    CHECK(worst < 1e-15);
    CHECK(fast_tanh(Eigen::ArrayXd::Constant(1, 800.0))[0] == 1.0);
    CHECK(fast_tanh(Eigen::ArrayXd::Constant(1, -800.0))[0] == -1.0);
}

TEST_CASE("Adam first step moves by about lr times the sign")
{
    AdamState<double> adam(1, 0.1);
    Vec p = Vec::Zero(1);
    adam.apply(p, Vec::Ones(1));
    CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(adam.step == 1);
    adam.apply(p, Vec::Ones(1));
    CHECK(adam.step == 2);
}

TEST_CASE("Adam hand-evaluated second step")
{
    AdamState<double> adam(1, 0.01);
    Vec p = Vec::Constant(1, 1.0);
    adam.apply(p, Vec::Constant(1, 2.0));
    adam.apply(p, Vec::Constant(1, -1.0));
    const double m = 0.9 * (0.1 * 2.0) + 0.1 * -1.0;
    const double v = 0.999 * (0.001 * 4.0) + 0.001 * 1.0;
    const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
    const double first = 1.0 - 0.01 * 1.0 / (1.0 + 1e-8 / 2.0);
    CHECK(p[0] == doctest::Approx(first - 0.01 * mh / (std::sqrt(vh) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("Adam with zero gradients leaves parameters unchanged")
{
    AdamState<double> adam(3);
    Vec p(3);
    p << 1, 2, 3;
    const Vec before = p;
    adam.apply(p, Vec::Zero(3));
    CHECK(p == before);
}

TEST_CASE("Adam rejects non-finite gradients and shape mismatches")
{
    AdamState<double> adam(2);
    Vec p = Vec::Zero(2);
    Vec g(2);
    g << 1.0, std::nan("");
    CHECK_THROWS_AS(adam.apply(p, g), Error);
    CHECK_THROWS_AS(adam.apply(p, Vec::Zero(3)), Error);
    CHECK(adam.step == 0);
}

TEST_CASE("network checkpoint JSON round-trips")
{
    Rng rng(4);
    const auto net = Mlp<double>::initialized({4, 8, 2}, rng);
    const auto j = network_to_json(net);
    CHECK(j.at("activation") == "tanh");
    CHECK(j.at("layer_sizes").size() == 3);
    const auto back = network_from_json(j);
    CHECK(back.flatten() == net.flatten());
    CHECK(back.same_architecture(net));
    auto bad = j;
    bad["flat_params"].push_back(0.0);
    CHECK_THROWS_AS(network_from_json(bad), Error);
}
