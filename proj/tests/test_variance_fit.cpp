#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "judgecal/variance_fit.hpp"
#include "oracles.hpp"

using namespace judgecal;

namespace {

Points pts(const char* s) { return Points::parse(s).value(); }

VarianceBin bin(double center, std::size_t count, double sigma) {
    const auto c = Points::from_double(center);
    return {center, count, sigma, c, c};
}

JudgingError err(double control, double e) {
    return {"C", "P", "J", Points::from_double(control), Points::from_double(e)};
}

double model_loss(const VarianceModel& m, const std::vector<VarianceBin>& bins) {
    double s = 0.0;
    for (const auto& b : bins) {
        const double r = m.raw(b.center) - b.sigma;
        s += static_cast<double>(b.count) * r * r;
    }
    return s;
}

void unpack(const std::vector<VarianceBin>& bins, std::vector<double>& x, std::vector<double>& y,
            std::vector<double>& w) {
    for (const auto& b : bins) {
        x.push_back(b.center);
        y.push_back(b.sigma);
        w.push_back(static_cast<double>(b.count));
    }
}

}  // namespace

TEST_SUITE("variance_fit") {
    TEST_CASE("errors are mark minus control score") {
        std::istringstream in(
            "competition_id,discipline_id,performance_id,judge_id,mark,scale_min,scale_max,scale_step\n"
            "C,D,P1,J1,8.0,0,10,0.5\nC,D,P1,J2,8.5,0,10,0.5\nC,D,P1,J3,9.0,0,10,0.5\n");
        auto ds = build_dataset(parse_records(in).records).dataset;
        auto errors = extract_errors(ds, "D");
        REQUIRE(errors.size() == 3);
        CHECK(errors[0].error == pts("-0.5"));
        CHECK(errors[1].error == pts("0"));
        CHECK(errors[2].error == pts("0.5"));
        CHECK(errors[1].control_score == pts("8.5"));
        CHECK_THROWS_AS(extract_errors(ds, "X"), std::out_of_range);
    }

    TEST_CASE("bin sigma is the sample standard deviation") {
        std::vector<JudgingError> e{err(8.5, -0.5), err(8.5, 0.5), err(6, 0.25), err(6, 0.25)};
        auto bins = bin_errors(e, {2, SigmaCentering::bin_mean});
        REQUIRE(bins.size() == 2);
        CHECK(bins[0].center == 6.0);
        CHECK(bins[0].sigma == doctest::Approx(0.0));
        CHECK(bins[1].sigma == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

        auto zero = bin_errors(e, {2, SigmaCentering::zero});
        CHECK(zero[0].sigma == doctest::Approx(0.25));
        CHECK(zero[1].sigma == doctest::Approx(0.5));
    }

    TEST_CASE("bin sigma recovers the sampling deviation") {
        std::mt19937_64 gen(99);
        std::normal_distribution<double> noise(0.0, 0.3);
        std::vector<JudgingError> e;
        for (int i = 0; i < 1000; ++i) e.push_back(err(7.0, noise(gen)));
        auto bins = bin_errors(e);
        REQUIRE(bins.size() == 1);
        CHECK(bins[0].count == 1000);
        CHECK(bins[0].sigma >= 0.27);
        CHECK(bins[0].sigma <= 0.33);
    }

    TEST_CASE("small bins merge into their nearest neighbour") {
        std::vector<JudgingError> e;
        for (int i = 0; i < 12; ++i) e.push_back(err(1.0, i % 2 ? 0.1 : -0.1));
        for (int i = 0; i < 3; ++i) e.push_back(err(2.0, 0.2));
        for (int i = 0; i < 12; ++i) e.push_back(err(5.0, i % 2 ? 0.3 : -0.3));
        auto bins = bin_errors(e, {10, SigmaCentering::bin_mean});
        REQUIRE(bins.size() == 2);
        CHECK(bins[0].count == 15);
        CHECK(bins[0].lo == pts("1"));
        CHECK(bins[0].hi == pts("2"));
        CHECK(bins[0].center == doctest::Approx((12.0 * 1 + 3.0 * 2) / 15));
        CHECK(bins[1].count == 12);
        std::size_t total = 0;
        for (const auto& b : bins) total += b.count;
        CHECK(total == e.size());
    }

    TEST_CASE("equidistant neighbours: the smaller one absorbs the bin") {
        // 0.2 - 0.1 and 0.3 - 0.2 differ in binary floating point but are equal here
        std::vector<JudgingError> e;
        for (int i = 0; i < 15; ++i) e.push_back(err(0.1, i % 2 ? 0.1 : -0.1));
        for (int i = 0; i < 3; ++i) e.push_back(err(0.2, 0.2));
        for (int i = 0; i < 12; ++i) e.push_back(err(0.3, i % 2 ? 0.3 : -0.3));
        auto bins = bin_errors(e, {10, SigmaCentering::bin_mean});
        REQUIRE(bins.size() == 2);
        CHECK(bins[0].count == 15);
        CHECK(bins[1].count == 15);
        CHECK(bins[1].lo == pts("0.2"));
    }

    TEST_CASE("quadratic fit is exact on exact data") {
        std::vector<VarianceBin> bins;
        for (int i = 0; i <= 10; ++i) {
            const double c = i;
            bins.push_back(bin(c, static_cast<std::size_t>(10 + 7 * i), 0.2 + 0.1 * c - 0.01 * c * c));
        }
        auto m = fit_quadratic(bins);
        CHECK(m.coefficients[0] == doctest::Approx(0.2).epsilon(1e-9));
        CHECK(m.coefficients[1] == doctest::Approx(0.1).epsilon(1e-9));
        CHECK(m.coefficients[2] == doctest::Approx(-0.01).epsilon(1e-9));
        REQUIRE(m.r2_weighted);
        CHECK(*m.r2_weighted == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(m.rmsd_weighted < 1e-12);
        CHECK(m.shape == Shape::concave);
        CHECK(m.domain_lo == 0.0);
        CHECK(m.domain_hi == 10.0);
    }

    TEST_CASE("three bins give the interpolating parabola") {
        std::vector<VarianceBin> bins{bin(1, 5, 1), bin(2, 5, 2), bin(3, 5, 1)};
        auto m = fit_quadratic(bins);
        const auto expected = oracle::solve3({{{1, 1, 1, 1}, {1, 2, 4, 2}, {1, 3, 9, 1}}});
        CHECK(expected[0] == doctest::Approx(-2));
        CHECK(expected[1] == doctest::Approx(4));
        CHECK(expected[2] == doctest::Approx(-1));
        for (int k = 0; k < 3; ++k) CHECK(m.coefficients[k] == doctest::Approx(expected[k]).epsilon(1e-9));
    }

    TEST_CASE("quadratic fit needs three distinct centers") {
        std::vector<VarianceBin> two{bin(1, 5, 1), bin(2, 5, 2)};
        try {
            fit_quadratic(two);
            FAIL("expected FitFailure");
        } catch (const FitFailure& f) {
            CHECK(f.reason() == FitFailureReason::insufficient_support);
        }
    }

    TEST_CASE("exponential fit is exact on exact data") {
        std::vector<VarianceBin> bins;
        for (int i = 0; i <= 10; ++i) bins.push_back(bin(i, 20, 0.8 * std::exp(-0.2 * i)));
        auto m = fit_exponential(bins);
        CHECK(m.kind == ModelKind::exponential);
        CHECK(m.coefficients[0] == doctest::Approx(0.8).epsilon(1e-6));
        CHECK(m.coefficients[1] == doctest::Approx(-0.2).epsilon(1e-6));
        CHECK(m.converged);
        CHECK(evaluate_sigma(m, 0.0) == doctest::Approx(0.8).epsilon(1e-6));

        std::vector<VarianceBin> one{bin(3, 20, 0.4)};
        try {
            fit_exponential(one);
            FAIL("expected FitFailure");
        } catch (const FitFailure& f) {
            CHECK(f.reason() == FitFailureReason::insufficient_support);
        }
    }

    TEST_CASE("noisy exponential matches truth and a brute-force minimizer") {
        std::mt19937_64 gen(3);
        std::normal_distribution<double> noise(0.0, 0.05);
        std::vector<VarianceBin> bins;
        for (int i = 0; i < 20; ++i) {
            const double c = 0.5 * i;
            bins.push_back(bin(c, 30, 0.8 * std::exp(-0.2 * c) * (1.0 + noise(gen))));
        }
        auto m = fit_exponential(bins);
        CHECK(std::abs(m.coefficients[0] - 0.8) / 0.8 < 0.10);
        CHECK(std::abs(m.coefficients[1] + 0.2) / 0.2 < 0.10);

        std::vector<double> x, y, w;
        unpack(bins, x, y, w);
        const auto g = oracle::grid_search_exponential(x, y, w, 0.6, 1.0, -0.3, -0.1, 400);
        double grid_loss = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double r = g[0] * std::exp(g[1] * x[k]) - y[k];
            grid_loss += w[k] * r * r;
        }
        CHECK(model_loss(m, bins) <= grid_loss * (1.0 + 1e-9));
        CHECK(m.coefficients[0] == doctest::Approx(g[0]).epsilon(0.01));
        CHECK(m.coefficients[1] == doctest::Approx(g[1]).epsilon(0.02));
    }

    TEST_CASE("diagnostics follow the weighted definitions") {
        std::vector<VarianceBin> bins{bin(1, 10, 0.2), bin(2, 30, 0.4), bin(3, 20, 0.3), bin(4, 40, 0.25)};
        double sw = 0, swy = 0;
        for (const auto& b : bins) {
            sw += static_cast<double>(b.count);
            swy += static_cast<double>(b.count) * b.sigma;
        }
        VarianceModel flat;
        flat.coefficients = {swy / sw, 0, 0};
        auto d = diagnostics(bins, flat);
        REQUIRE(d.r2_weighted);
        CHECK(*d.r2_weighted == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(d.rmsd_weighted == doctest::Approx(std::sqrt(model_loss(flat, bins) / sw)).epsilon(1e-12));

        auto fitted = fit_quadratic(bins);
        double ss_tot = 0;
        for (const auto& b : bins) ss_tot += static_cast<double>(b.count) * std::pow(b.sigma - swy / sw, 2);
        REQUIRE(fitted.r2_weighted);
        CHECK(*fitted.r2_weighted == doctest::Approx(1.0 - model_loss(fitted, bins) / ss_tot).epsilon(1e-12));

        std::vector<VarianceBin> constant{bin(1, 10, 0.3), bin(2, 10, 0.3), bin(3, 10, 0.3)};
        CHECK_FALSE(diagnostics(constant, flat).r2_weighted);
    }

    TEST_CASE("evaluation clamps to the floor and reports the domain") {
        VarianceModel m;
        m.coefficients = {0.2, 0.1, -0.01};
        m.domain_lo = 0;
        m.domain_hi = 10;
        m.floor = 0.001;
        CHECK(evaluate_sigma(m, 5.0) == doctest::Approx(0.45));
        auto far = evaluate_sigma_detailed(m, 20.0);
        CHECK(far.value == 0.001);
        CHECK(far.clamped);
        CHECK(far.outside_domain);
        CHECK_FALSE(evaluate_sigma_detailed(m, 5.0).outside_domain);
        CHECK(sigma_floor({pts("0"), pts("10"), pts("0.5")}) == doctest::Approx(0.005));
        CHECK(sigma_floor({pts("0"), pts("10"), pts("0.00001")}) == 1e-6);
    }

    TEST_CASE("property: agrees with brute-force least squares on small bin sets") {
        std::mt19937_64 gen(17);
        std::uniform_int_distribution<int> nbins(3, 6);
        std::uniform_int_distribution<std::size_t> count(5, 60);
        std::uniform_real_distribution<double> sig(0.05, 0.6);
        for (int trial = 0; trial < 6; ++trial) {
            std::vector<VarianceBin> bins;
            const int n = nbins(gen);
            for (int i = 0; i < n; ++i) bins.push_back(bin(0.2 * i - 0.5, count(gen), sig(gen)));
            const auto m = fit_quadratic(bins);
            std::vector<double> x, y, w;
            unpack(bins, x, y, w);
            const auto ne = oracle::normal_equations_quadratic(x, y, w);
            for (int k = 0; k < 3; ++k) CHECK(m.coefficients[k] == doctest::Approx(ne[k]).epsilon(1e-7));

            const std::array<double, 3> t{x.front(), x[x.size() / 2], x.back()};
            const auto v = oracle::grid_search_quadratic(x, y, w, t, -1.0, 2.0, 0.1, 1e-5);
            const double lib = model_loss(m, bins);
            const double brute = oracle::weighted_loss(oracle::lagrange_coefficients(t, v), x, y, w);
            CHECK(lib <= brute * (1.0 + 1e-12) + 1e-15);
            for (int k = 0; k < 3; ++k) CHECK(std::abs(m.raw(t[k]) - v[k]) <= 1e-4);
        }
    }

    TEST_CASE("property: scale equivariance, weight invariance, floor positivity") {
        std::mt19937_64 gen(23);
        std::uniform_real_distribution<double> sig(0.05, 0.6);
        std::uniform_real_distribution<double> kdist(0.1, 10.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<VarianceBin> bins;
            for (int i = 0; i < 8; ++i) bins.push_back(bin(i + 0.5, 10 + static_cast<std::size_t>(i), sig(gen)));
            const auto m = fit_quadratic(bins);
            const double k = kdist(gen);

            auto scaled_bins = bins;
            for (auto& b : scaled_bins) {
                b.center *= k;
                b.sigma *= k;
            }
            const auto ms = fit_quadratic(scaled_bins);
            CHECK(ms.coefficients[0] == doctest::Approx(k * m.coefficients[0]).epsilon(1e-9));
            CHECK(ms.coefficients[1] == doctest::Approx(m.coefficients[1]).epsilon(1e-9));
            CHECK(ms.coefficients[2] == doctest::Approx(m.coefficients[2] / k).epsilon(1e-9));

            auto doubled = bins;
            for (auto& b : doubled) b.count *= 2;
            const auto md = fit_quadratic(doubled);
            for (int j = 0; j < 3; ++j)
                CHECK(std::abs(md.coefficients[j] - m.coefficients[j]) <= 1e-12 * (1.0 + std::abs(m.coefficients[j])));

            for (double c = -5; c <= 15; c += 0.25) CHECK(evaluate_sigma(m, c) >= m.floor);
        }
    }

    TEST_CASE("name round trips") {
        CHECK(model_kind_from_string(to_string(ModelKind::exponential)) == ModelKind::exponential);
        CHECK(shape_from_string(to_string(Shape::convex)) == Shape::convex);
        CHECK_THROWS(model_kind_from_string("cubic"));
    }
}
