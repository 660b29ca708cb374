#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "lftid/reference_systems.hpp"
#include "lftid/response.hpp"
#include "oracles.hpp"

using namespace lftid;

TEST_CASE("steady-state maps agree with the Kronecker solve and the TFM route") {
    std::mt19937_64 rng(31);
    for (int k = 0; k < 15; ++k) {
        const auto rp = oracle::random_plant(rng);
        const ParameterVector th(rp.theta);
        const InputGenerator g = oracle::random_generator(rng, rp.plant.m_u(), 1, 1);
        const auto a = oracle::assemble(rp.plant, rp.theta);
        const Mat X = oracle::kron_steady_x(rp.plant.E(), a.A, a.B, g.Xi(), g.Pi());
        const SteadyStateMaps m = solve_steady_maps(rp.plant, th, g);
        CHECK(oracle::rel(m.X, X) < 1e-8);
        CHECK(oracle::rel(m.Z, Mat(rp.plant.E() * X)) < 1e-8);
        const Mat ref = a.C * X + a.D * g.Pi();
        CHECK(oracle::rel(steady_matrix_from_tfm(rp.plant, th, decompose(g)), ref) < 1e-8);
    }
}

TEST_CASE("shared eigenvalue is rejected") {
    const LftPlant p = mass_spring_plant();
    const ParameterVector th(Vec::Zero(3));
    // d(s) = s^2 + 7 s + 25 has roots -3.5 +- j 3.5707
    const double w = std::sqrt(25.0 - 12.25);
    Mat Xi(2, 2);
    Xi << -3.5, w, -w, -3.5;
    const InputGenerator g(Xi, Mat::Ones(1, 2), Vec::Ones(2));
    CHECK_THROWS_AS(solve_steady_maps(p, th, g), SharedEigenvalue);
}

TEST_CASE("transient propagator matches expm for an explicit system") {
    std::mt19937_64 rng(32);
    const Mat A = oracle::randn(rng, 4, 4) - 3.0 * Mat::Identity(4, 4);
    const Mat E = Mat::Identity(4, 4) + 0.2 * oracle::randn(rng, 4, 4);
    const Mat C = oracle::randn(rng, 2, 4);
    const Vec w = oracle::randn(rng, 4, 1);
    const TransientPropagator prop(E, A, C);
    for (double t : {0.1, 0.7, 2.0}) {
        const Mat Ft = E.inverse() * A * t;
        const Vec ref = C * Ft.exp() * E.inverse() * w;
        CHECK((prop(w, t) - ref).norm() < 1e-10 * (1 + ref.norm()));
    }
}

TEST_CASE("index-one descriptor transient equals the reduced explicit system") {
    // x1' = -x1 + x2, 0 = -x2 + 0.5 x1  =>  x1' = -0.5 x1
    Mat E = Mat::Zero(2, 2);
    E(0, 0) = 1;
    Mat A(2, 2);
    A << -1, 1, 0.5, -1;
    const Mat C = Mat::Identity(2, 2);
    const TransientPropagator prop(E, A, C);
    Vec w(2);
    w << 1.0, 0.0;  // E x(0) with x1(0) = 1
    const Vec y = prop(w, 1.0);
    CHECK(std::abs(y(0) - std::exp(-0.5)) < 1e-10);
    CHECK(std::abs(y(1) - 0.5 * std::exp(-0.5)) < 1e-10);
}

TEST_CASE("higher-index pencil is rejected") {
    Mat E(2, 2);
    E << 0, 1, 0, 0;
    const Mat A = Mat::Identity(2, 2);
    CHECK_THROWS_AS(TransientPropagator(E, A, Mat::Identity(2, 2)), UnsupportedIndex);
}

TEST_CASE("simulated output matches augmented expm") {
    const LftPlant p = mass_spring_plant();
    const ParameterVector th = mass_spring_reference_theta();
    const InputGenerator g = two_tone_generator(-0.05, 0.02);
    const auto a = oracle::assemble(p, th.values());
    Vec x0(4);
    x0 << 0.1, -0.2, 0.3, 0.0;
    const std::vector<double> ts{0.05, 0.4, 1.1, 2.5, 6.0};
    const Mat Y = simulate_outputs(p, th, x0, g, ts);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const Vec ref = oracle::augmented_output(a.A, a.B, a.C, a.D, g.Xi(), g.Pi(), x0, g.xi0(), ts[k]);
        CHECK((Y.col(static_cast<Index>(k)) - ref).norm() < 1e-9 * (1 + ref.norm()));
        const Vec ys = steady_output(p, th, g, ts[k]);
        const Vec yt = transient_output(p, th, x0, g, ts[k]);
        CHECK((ys + yt - ref).norm() < 1e-9 * (1 + ref.norm()));
    }
}

TEST_CASE("descriptor plant simulation matches its explicit reduction") {
    // Algebraic state x2 = 2 u, output y = x1 + x2, x1' = -x1 + u.
    LftPlant::Data d;
    d.E = Mat::Zero(2, 2);
    d.E(0, 0) = 1;
    d.A_xx = (Mat(2, 2) << -1, 0, 0, -1).finished();
    d.B_xu = (Mat(2, 1) << 1, 2).finished();
    d.B_xv = (Mat(2, 1) << 1, 0).finished();
    d.C_yx = (Mat(1, 2) << 1, 1).finished();
    d.C_zx = (Mat(1, 2) << 1, 0).finished();
    d.D_zu = d.D_zv = d.D_yu = d.D_yv = Mat::Zero(1, 1);
    d.basis = {Mat::Ones(1, 1)};
    const LftPlant p(d);
    Vec t(1);
    t << -0.5;  // x1' = -1.5 x1 + u
    const ParameterVector th(t);
    const InputGenerator g = two_tone_generator();
    Vec x0(2);
    x0 << 0.4, 0.0;
    const Mat Ar = (Mat(1, 1) << -1.5).finished(), Br = Mat::Ones(1, 1), Cr = Mat::Ones(1, 1),
              Dr = (Mat(1, 1) << 2.0).finished();
    for (double tk : {0.3, 1.0, 4.0}) {
        const Vec ref = oracle::augmented_output(Ar, Br, Cr, Dr, g.Xi(), g.Pi(), x0.head(1), g.xi0(), tk);
        const Mat y = simulate_outputs(p, th, x0, g, {tk});
        CHECK(std::abs(y(0, 0) - ref(0)) < 1e-9);
    }
}

TEST_CASE("Jordan-block steady matrix equals the Kronecker solve") {
    std::mt19937_64 rng(33);
    for (Index m = 1; m <= 4; ++m) {
        const auto rp = oracle::random_plant(rng);
        const ParameterVector th(rp.theta);
        JordanGenerator j;
        j.lambda_r = 0.37;
        j.m_xi = m;
        j.T = oracle::randn(rng, m, m) + 2.0 * Mat::Identity(m, m);
        j.Pi_out = oracle::randn(rng, rp.plant.m_u(), m);
        j.xi0 = Vec::Ones(m);
        const auto a = oracle::assemble(rp.plant, rp.theta);
        const Mat X = oracle::kron_steady_x(rp.plant.E(), a.A, a.B, j.Xi(), j.Pi_out);
        CHECK(oracle::rel(steady_matrix_jordan(rp.plant, th, j), Mat(a.C * X + a.D * j.Pi_out)) < 1e-8);
    }
}

TEST_CASE("noise is reproducible and has the requested level") {
    const LftPlant p = mass_spring_plant();
    const ParameterVector th = mass_spring_reference_theta();
    const InputGenerator g = two_tone_generator();
    std::vector<double> ts;
    for (int k = 0; k < 4000; ++k) ts.push_back(3.0 + 0.1 * k);
    const SampleSet a = simulate_samples(p, th, Vec::Zero(4), g, ts, 0.25, 5);
    const SampleSet b = simulate_samples(p, th, Vec::Zero(4), g, ts, 0.25, 5);
    CHECK(a.y == b.y);
    const Mat clean = simulate_outputs(p, th, Vec::Zero(4), g, ts);
    const Mat n = a.y - clean;
    const double sd = std::sqrt(n.squaredNorm() / static_cast<double>(n.size()));
    CHECK(sd == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("sample CSV round trip and parse errors") {
    SampleSet s;
    s.times = {0.5, 1.25, 2.0};
    s.y = Mat::Random(2, 3);
    std::stringstream ss;
    write_samples_csv(ss, s);
    const SampleSet r = read_samples_csv(ss);
    CHECK(r.times == s.times);
    CHECK((r.y - s.y).norm() == 0.0);
    std::stringstream bad("t,y_1\n0.1,abc\n");
    CHECK_THROWS_AS(read_samples_csv(bad), ConfigError);
    std::stringstream unordered("t,y_1\n0.5,1\n0.2,1\n");
    CHECK_THROWS(read_samples_csv(unordered));
}

TEST_CASE("tangential value") {
    CMat H(2, 2);
    H << cplx(1, 2), cplx(0, -1), cplx(3, 0), cplx(0.5, 0.5);
    CVec pi(2);
    pi << cplx(1, 1), cplx(-2, 0.5);
    CHECK((tangential_value(H, pi) - H * pi).norm() < 1e-14);
    CHECK_THROWS_AS(tangential_value(H, CVec::Ones(3)), DimensionMismatch);
}
