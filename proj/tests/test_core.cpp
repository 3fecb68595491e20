#include "doctest.h"

#include <cmath>
#include <random>

#include "mci/core.hpp"
#include "support.hpp"

using namespace mci;

TEST_CASE("distance of identical vectors is zero") {
    const std::vector<float> a{0.0F, 0.0F};
    CHECK(distance(a, a) == 0.0F);
}

TEST_CASE("distance is squared: 3-4-5 triangle gives 25") {
    const std::vector<float> a{0.0F, 0.0F};
    const std::vector<float> b{3.0F, 4.0F};
    CHECK(distance(a, b) == 25.0F);
    CHECK(distance(a, b, Accumulator::f64) == 25.0F);
    CHECK(std::sqrt(distance(a, b)) == doctest::Approx(5.0));
}

TEST_CASE("distance between rows 0 and 4 of the construction example squares the matrix entry") {
    const auto ds = testing::fig4_dataset();
    const double d04 = testing::fig4_matrix()[0][4];
    CHECK(distance(ds.row(0), ds.row(4)) == doctest::Approx(d04 * d04).epsilon(1e-5));
    for (NodeId i = 0; i < 9; ++i) {
        for (NodeId j = 0; j < 9; ++j) {
            CHECK(std::sqrt(distance(ds.row(i), ds.row(j))) ==
                  doctest::Approx(testing::fig4_matrix()[i][j]).epsilon(1e-5));
        }
    }
}

TEST_CASE("distance rejects length mismatch") {
    const std::vector<float> a{1.0F, 2.0F};
    const std::vector<float> b{1.0F, 2.0F, 3.0F};
    CHECK_THROWS_AS(distance(a, b), DimensionError);
}

TEST_CASE("distance properties on random vectors") {
    std::mt19937_64 rng(11);
    std::normal_distribution<float> g(0.0F, 1.0F);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t dim = 1 + static_cast<std::size_t>(trial % 37);
        std::vector<float> a(dim), b(dim), c(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            a[i] = g(rng);
            b[i] = g(rng);
            c[i] = g(rng);
        }
        const float ab = distance(a, b);
        CHECK(ab == distance(b, a));
        CHECK(ab > 0.0F);
        CHECK(distance(a, a) == 0.0F);
        CHECK(ab == doctest::Approx(std::pow(testing::true_dist(a.data(), b.data(), dim), 2)).epsilon(1e-5));
        CHECK(distance(a, b, Accumulator::f64) ==
              doctest::Approx(std::pow(testing::true_dist(a.data(), b.data(), dim), 2)).epsilon(1e-6));
        const double sab = std::sqrt(static_cast<double>(ab));
        const double sbc = std::sqrt(static_cast<double>(distance(b, c)));
        const double sac = std::sqrt(static_cast<double>(distance(a, c)));
        CHECK(sac <= (sab + sbc) * (1.0 + 1e-6));
    }
}

TEST_CASE("dataset construction validates shape and values") {
    CHECK_THROWS_AS(Dataset(0, {1.0F}), InvalidArgument);
    CHECK_THROWS_AS(Dataset(2, {}), InvalidArgument);
    CHECK_THROWS_AS(Dataset(2, {1.0F, 2.0F, 3.0F}), DimensionError);
    CHECK_THROWS_AS(Dataset(1, {std::nanf("")}), InvalidArgument);
    CHECK_THROWS_AS(Dataset(1, {INFINITY}), InvalidArgument);
    CHECK_THROWS_AS(Dataset(1, {1.0F, 2.0F}, {Feature{1.0F}}), InvalidArgument);

    Dataset ds(2, {1.0F, 2.0F, 3.0F, 4.0F});
    CHECK(ds.size() == 2);
    CHECK(ds.dim() == 2);
    CHECK(ds.row(1)[0] == 3.0F);
    CHECK(kind_of(ds.feature(0)) == FeatureKind::none);
    const std::vector<float> extra{5.0F, 6.0F};
    CHECK(ds.append(extra, Feature{0.5F}) == 2);
    CHECK(ds.size() == 3);
    CHECK(std::get<float>(ds.feature(2)) == 0.5F);
    const std::vector<float> bad{1.0F};
    CHECK_THROWS_AS(ds.append(bad), DimensionError);
}

TEST_CASE("selectivity examples") {
    PredicateMask all(100, true);
    PredicateMask none(100, false);
    PredicateMask some(100, false);
    for (std::size_t i = 0; i < 37; ++i) some.set(i * 2, true);
    CHECK(selectivity(all, 100) == 1.0);
    CHECK(selectivity(none, 100) == 0.0);
    CHECK(some.true_count() == 37);
    CHECK(selectivity(some, 100) == doctest::Approx(0.37));
    CHECK_THROWS(selectivity(all, 0));
}

TEST_CASE("mask bookkeeping") {
    PredicateMask m(130);
    m.set(0, true);
    m.set(129, true);
    m.set(129, true);
    CHECK(m.true_count() == 2);
    m.set(0, false);
    CHECK(m.true_count() == 1);
    std::vector<NodeId> seen;
    m.for_each_set([&](NodeId u) { seen.push_back(u); });
    CHECK(seen == std::vector<NodeId>{129});
    PredicateMask other(130, true);
    other.set(129, false);
    m &= other;
    CHECK(m.true_count() == 0);
    CHECK_THROWS_AS(m &= PredicateMask(5), DimensionError);
}

TEST_CASE("range predicate over scalar features") {
    Dataset ds(1, {0.0F, 0.0F, 0.0F}, {Feature{0.1F}, Feature{0.5F}, Feature{0.9F}});
    const auto mask = evaluate_mask(ds, Query{{0.0F}, Predicate::range(0.4F, 1.0F)});
    CHECK_FALSE(mask.test(0));
    CHECK(mask.test(1));
    CHECK(mask.test(2));
    CHECK(mask.true_count() == 2);
}

TEST_CASE("label match on an absent label is all false") {
    Dataset ds(1, {0.0F, 0.0F, 0.0F},
               {Feature{LabelSet::of({1, 2})}, Feature{LabelSet::of({2})}, Feature{LabelSet::of({3, 1})}});
    CHECK(evaluate_mask(ds, Predicate::label(7)).true_count() == 0);
    CHECK(evaluate_mask(ds, Predicate::label(1)).true_count() == 2);
    CHECK(evaluate_mask(ds, Predicate::labels_subset({1, 3})).true_count() == 1);
}

TEST_CASE("feature-kind mismatch raises a predicate-type error") {
    Dataset labels(1, {0.0F}, {Feature{LabelSet::of({1})}});
    CHECK_THROWS_AS(evaluate_mask(labels, Predicate::range(0.0F, 1.0F)), PredicateTypeError);
    Dataset scalars(1, {0.0F}, {Feature{0.5F}});
    CHECK_THROWS_AS(evaluate_mask(scalars, Predicate::label(1)), PredicateTypeError);
    Dataset bare(1, {0.0F});
    CHECK_THROWS_AS(evaluate_mask(bare, Predicate::label(1)), PredicateTypeError);
    CHECK(evaluate_mask(bare, Predicate::always_true()).true_count() == 1);
}

TEST_CASE("external mask and byte callback predicates") {
    Dataset ds(1, {0.0F, 1.0F, 2.0F},
               {Feature{Bytes{{1}}}, Feature{Bytes{{2, 2}}}, Feature{Bytes{{}}}});
    auto bits = std::make_shared<const std::vector<bool>>(std::vector<bool>{true, false, true});
    const auto ext = evaluate_mask(ds, Predicate::external(bits));
    CHECK(ext.test(0));
    CHECK_FALSE(ext.test(1));
    CHECK(ext.test(2));
    const auto cb = evaluate_mask(ds, Predicate::bytes_callback([](std::span<const std::uint8_t> b) {
        return b.size() == 2;
    }));
    CHECK(cb.true_count() == 1);
    CHECK(cb.test(1));
    auto short_bits = std::make_shared<const std::vector<bool>>(std::vector<bool>{true});
    CHECK_THROWS_AS(evaluate_mask(ds, Predicate::external(short_bits)), PredicateTypeError);
}

TEST_CASE("range predicate of width s over uniform scalars is binomial") {
    // Mean s, sd sqrt(s(1-s)/n); assert within 3 sd.
    const std::size_t n = 20000;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(0.0F, 1.0F);
    std::vector<Feature> f;
    for (std::size_t i = 0; i < n; ++i) f.emplace_back(u(rng));
    Dataset ds(1, std::vector<float>(n, 0.0F), f);
    for (double s : {0.5, 0.1, 0.01}) {
        const auto mask = evaluate_mask(ds, Predicate::range(0.25F, static_cast<float>(0.25 + s)));
        const double sd = std::sqrt(s * (1.0 - s) / static_cast<double>(n));
        CHECK(std::abs(selectivity(mask, n) - s) <= 3.0 * sd);
    }
}

TEST_CASE("evaluate_mask is deterministic") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> u(0.0F, 1.0F);
    std::vector<Feature> f;
    for (int i = 0; i < 1000; ++i) f.emplace_back(u(rng));
    Dataset ds(1, std::vector<float>(1000, 0.0F), f);
    const auto p = Predicate::range(0.2F, 0.3F);
    CHECK(evaluate_mask(ds, p) == evaluate_mask(ds, p));
}

TEST_CASE("predicate grammar") {
    CHECK(Predicate::parse("true").kind() == Predicate::Kind::always_true);
    const auto r = Predicate::parse("range 0.25 0.5");
    CHECK(r.kind() == Predicate::Kind::scalar_range);
    CHECK(r.lo() == 0.25F);
    CHECK(r.hi() == 0.5F);
    const auto l = Predicate::parse("label 4");
    CHECK(l.kind() == Predicate::Kind::label_match);
    CHECK(l.label_value() == 4);
    CHECK_THROWS_AS(Predicate::parse("range 1"), InvalidArgument);
    CHECK_THROWS_AS(Predicate::parse("label -3"), InvalidArgument);
    CHECK_THROWS_AS(Predicate::parse("bogus"), InvalidArgument);
    CHECK_THROWS_AS(Predicate::parse("true extra"), InvalidArgument);
    CHECK_THROWS_AS(Predicate::parse("range 2 1"), InvalidArgument);
    CHECK(Predicate::parse(Predicate::range(0.125F, 0.75F).to_string()).hi() == 0.75F);
}
