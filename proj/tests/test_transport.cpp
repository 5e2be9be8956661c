#include <doctest.h>

#include <cmath>

#include "lipad/rng.hpp"
#include "lipad/transport.hpp"

using namespace lipad;
using ot::EmpiricalDist;

namespace {

Tensor random_points(Rng& rng, long n, long d, double spread = 1.0) {
    Tensor t(n, d);
    for (long i = 0; i < t.size(); ++i) t[i] = spread * rng.normal();
    return t;
}

void check_plan_marginals(const ot::W1Result& res, const EmpiricalDist& p, const EmpiricalDist& q) {
    const Tensor& pi = res.plan.coupling;
    for (long i = 0; i < p.size(); ++i) {
        double row = 0.0;
        for (long j = 0; j < q.size(); ++j) row += pi.at(i, j);
        CHECK(std::abs(row - p.weights[i]) < 1e-9);
    }
    for (long j = 0; j < q.size(); ++j) {
        double col = 0.0;
        for (long i = 0; i < p.size(); ++i) col += pi.at(i, j);
        CHECK(std::abs(col - q.weights[j]) < 1e-9);
    }
}

void check_potentials(const ot::W1Result& res, const EmpiricalDist& p, const EmpiricalDist& q) {
    // dual feasibility
    for (long i = 0; i < p.size(); ++i)
        for (long j = 0; j < q.size(); ++j) {
            double acc = 0.0;
            for (long c = 0; c < p.dim(); ++c) {
                const double d = p.points.at(i, c) - q.points.at(j, c);
                acc += d * d;
            }
            CHECK(res.potentials.phi[i] - res.potentials.psi[j] <= std::sqrt(acc) + 1e-9);
        }
    // strong duality and the phi[0] = 0 normalization
    double dual = 0.0;
    for (long i = 0; i < p.size(); ++i) dual += p.weights[i] * res.potentials.phi[i];
    for (long j = 0; j < q.size(); ++j) dual -= q.weights[j] * res.potentials.psi[j];
    CHECK(std::abs(dual - res.cost) < 1e-9);
    CHECK(res.potentials.phi[0] == 0.0);
}

} // namespace

TEST_CASE("exact_w1: unit mass moved unit distance") {
    const auto p = EmpiricalDist::uniform(Tensor::from_rows({{0.0}}));
    const auto q = EmpiricalDist::uniform(Tensor::from_rows({{1.0}}));
    const auto res = ot::exact_w1(p, q);
    CHECK(res.cost == doctest::Approx(1.0).epsilon(1e-12));
    check_plan_marginals(res, p, q);
    check_potentials(res, p, q);
}

TEST_CASE("exact_w1: W(P, P) = 0") {
    Rng rng(6);
    const auto p = EmpiricalDist::uniform(random_points(rng, 9, 3));
    const auto res = ot::exact_w1(p, p);
    CHECK(res.cost == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("exact_w1: two-point example {0,0} vs {1,3}") {
    const auto p = EmpiricalDist::uniform(Tensor::from_rows({{0.0}, {0.0}}));
    const auto q = EmpiricalDist::uniform(Tensor::from_rows({{1.0}, {3.0}}));
    const auto res = ot::exact_w1(p, q);
    CHECK(res.cost == doctest::Approx(2.0).epsilon(1e-12)); // both assignments cost (1+3)/2
    check_potentials(res, p, q);
}

TEST_CASE("brute_force_w1: agrees with exact_w1 on 100 random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const long n = 1 + static_cast<long>(rng.uniform_int(7));
        const long d = 1 + static_cast<long>(rng.uniform_int(3));
        const auto p = EmpiricalDist::uniform(random_points(rng, n, d));
        const auto q = EmpiricalDist::uniform(random_points(rng, n, d));
        const auto res = ot::exact_w1(p, q);
        const double brute = ot::brute_force_w1(p, q);
        CHECK(std::abs(res.cost - brute) < 1e-9);
        CHECK(res.duality_gap < 1e-9);
        check_plan_marginals(res, p, q);
        check_potentials(res, p, q);
    }
}

TEST_CASE("brute_force_w1: n = 1 reduces to the point distance, label order irrelevant") {
    const auto p = EmpiricalDist::uniform(Tensor::from_rows({{0.0, 0.0}}));
    const auto q = EmpiricalDist::uniform(Tensor::from_rows({{3.0, 4.0}}));
    CHECK(ot::brute_force_w1(p, q) == doctest::Approx(5.0).epsilon(1e-12));

    Rng rng(7);
    const Tensor pts = random_points(rng, 5, 2);
    Tensor shuffled(5, 2);
    const std::vector<int> perm = {3, 0, 4, 1, 2};
    for (long i = 0; i < 5; ++i)
        for (long c = 0; c < 2; ++c) shuffled.at(i, c) = pts.at(perm[i], c);
    const auto a = EmpiricalDist::uniform(random_points(rng, 5, 2));
    CHECK(ot::brute_force_w1(a, EmpiricalDist::uniform(pts)) ==
          doctest::Approx(ot::brute_force_w1(a, EmpiricalDist::uniform(shuffled))).epsilon(1e-12));
}

TEST_CASE("general weighted LP agrees with the assignment fast path via duplicated points") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        const long n = 4, d = 2;
        const Tensor base = random_points(rng, n, d);
        // duplicate each source point to make an equal-size uniform instance
        Tensor doubled(2 * n, d);
        for (long i = 0; i < n; ++i)
            for (long c = 0; c < d; ++c) {
                doubled.at(2 * i, c) = base.at(i, c);
                doubled.at(2 * i + 1, c) = base.at(i, c);
            }
        const Tensor targets = random_points(rng, 2 * n, d);
        const auto lp = ot::exact_w1(EmpiricalDist::uniform(base), EmpiricalDist::uniform(targets));
        const auto hungarian = ot::exact_w1(EmpiricalDist::uniform(doubled), EmpiricalDist::uniform(targets));
        CHECK(std::abs(lp.cost - hungarian.cost) < 1e-9);
    }
}

TEST_CASE("metric axioms on oracle output") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const long d = 1 + static_cast<long>(rng.uniform_int(3));
        const auto a = EmpiricalDist::uniform(random_points(rng, 3 + static_cast<long>(rng.uniform_int(5)), d));
        const auto b = EmpiricalDist::uniform(random_points(rng, 3 + static_cast<long>(rng.uniform_int(5)), d));
        const auto c = EmpiricalDist::uniform(random_points(rng, 3 + static_cast<long>(rng.uniform_int(5)), d));
        const double ab = ot::exact_w1(a, b).cost;
        const double ba = ot::exact_w1(b, a).cost;
        const double bc = ot::exact_w1(b, c).cost;
        const double ac = ot::exact_w1(a, c).cost;
        CHECK(std::abs(ab - ba) < 1e-9);       // symmetry
        CHECK(ac <= ab + bc + 1e-9);           // triangle inequality
        CHECK(ot::exact_w1(a, a).cost < 1e-9); // identity
    }
    // W = 0 iff identical multisets (uniform case): permuted copy has W = 0
    const Tensor pts = random_points(rng, 6, 2);
    Tensor perm_pts(6, 2);
    const std::vector<int> perm = {5, 2, 0, 4, 1, 3};
    for (long i = 0; i < 6; ++i)
        for (long c = 0; c < 2; ++c) perm_pts.at(i, c) = pts.at(perm[i], c);
    CHECK(ot::exact_w1(EmpiricalDist::uniform(pts), EmpiricalDist::uniform(perm_pts)).cost < 1e-9);
    // and a genuinely different set has W > 0
    Tensor moved = pts;
    moved.at(0, 0) += 1.0;
    CHECK(ot::exact_w1(EmpiricalDist::uniform(pts), EmpiricalDist::uniform(moved)).cost > 1e-3);
}

TEST_CASE("potential_value: c-transform evaluates to the stored potentials at the support") {
    Rng rng(11);
    const auto p = EmpiricalDist::uniform(random_points(rng, 6, 2));
    const auto q = EmpiricalDist::uniform(random_points(rng, 6, 2));
    const auto res = ot::exact_w1(p, q);
    for (long i = 0; i < p.size(); ++i) {
        std::vector<double> z(p.points.row(i).begin(), p.points.row(i).end());
        CHECK(ot::potential_value(res.potentials, q.points, z.data()) ==
              doctest::Approx(res.potentials.phi[i]).epsilon(1e-12));
    }
    for (long j = 0; j < q.size(); ++j) {
        std::vector<double> z(q.points.row(j).begin(), q.points.row(j).end());
        CHECK(ot::potential_value(res.potentials, q.points, z.data()) ==
              doctest::Approx(res.potentials.psi[j]).epsilon(1e-12));
    }
}

TEST_CASE("check_prop2_bound: trivial cases") {
    Rng rng(3);
    const auto pn = EmpiricalDist::uniform(random_points(rng, 8, 2));
    // Pa = Pn: every Wasserstein term is 0 and A = 0
    const auto rep_same = ot::check_prop2_bound(pn, pn, 0.1);
    CHECK(rep_same.a_value < 1e-9);
    CHECK(rep_same.holds);
    // tiny gamma: mixture nearly equals Pn, A stays near 0
    const auto pa = EmpiricalDist::uniform(random_points(rng, 6, 2, 2.0));
    const auto rep_small = ot::check_prop2_bound(pn, pa, 1e-6);
    CHECK(rep_small.a_value <= rep_small.b_value + 1e-6);
    CHECK(rep_small.a_value < 1e-3);
}

TEST_CASE("check_prop2_bound: holds on random 2-d instances, gamma = 0.1") {
    Rng rng(424);
    for (int trial = 0; trial < 100; ++trial) {
        const auto pn = EmpiricalDist::uniform(random_points(rng, 30, 2));
        const auto pa = EmpiricalDist::uniform(random_points(rng, 12, 2, 1.5));
        const auto rep = ot::check_prop2_bound(pn, pa, 0.1);
        CAPTURE(trial);
        CHECK(rep.holds);
    }
}

TEST_CASE("check_stability_triangle: trivial and random cases") {
    Rng rng(17);
    const auto pn = EmpiricalDist::uniform(random_points(rng, 7, 2));
    const auto pa = EmpiricalDist::uniform(random_points(rng, 5, 2));
    // Pa_hat = Pa: left side is exactly 0
    const auto rep_same = ot::check_stability_triangle(pn, pa, pa);
    CHECK(rep_same.lhs < 1e-12);
    CHECK(rep_same.holds);
    // Pn = Pa reduces to equality
    const auto rep_eq = ot::check_stability_triangle(pn, pn, pa);
    CHECK(rep_eq.lhs <= rep_eq.rhs + 1e-9);

    for (int trial = 0; trial < 50; ++trial) {
        const long d = 1 + static_cast<long>(rng.uniform_int(5));
        const auto a = EmpiricalDist::uniform(random_points(rng, 2 + static_cast<long>(rng.uniform_int(10)), d));
        const auto b = EmpiricalDist::uniform(random_points(rng, 2 + static_cast<long>(rng.uniform_int(10)), d));
        const auto c = EmpiricalDist::uniform(random_points(rng, 2 + static_cast<long>(rng.uniform_int(10)), d));
        CHECK(ot::check_stability_triangle(a, b, c).holds);
    }
}

TEST_CASE("exact_w1: input validation") {
    const auto p = EmpiricalDist::uniform(Tensor::from_rows({{0.0}}));
    CHECK_THROWS_AS((void)EmpiricalDist::weighted(Tensor::from_rows({{0.0}, {1.0}}), {0.5, 0.6}), ContractError);
    CHECK_THROWS_AS((void)EmpiricalDist::weighted(Tensor::from_rows({{0.0}}), {-1.0}), ContractError);
    const auto q3 = EmpiricalDist::uniform(Tensor::from_rows({{0.0, 0.0}}));
    CHECK_THROWS_AS((void)ot::exact_w1(p, q3), DimensionError);
}
