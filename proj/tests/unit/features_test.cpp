#include "cidlab/features.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

using namespace cid;
using cid::testing::make_order;

namespace {

// Naive reference: stack orders of one side across products by price, merge
// equal prices, read percentiles in grain units.
struct NaiveCurve {
    std::vector<double> price;
    std::vector<long long> cum;  // grains

    double p_at(int pct) const {
        for (std::size_t i = 0; i < cum.size(); ++i)
            if (cum[i] * 100 >= cum.back() * pct) return price[i];
        return price.back();
    }
    double v_at(int pct) const {
        for (std::size_t i = 0; i < cum.size(); ++i)
            if (cum[i] * 100 >= cum.back() * pct) return cum[i] / 1000.0;
        return cum.back() / 1000.0;
    }
};

NaiveCurve naive_curve(const std::vector<Order>& orders, Side side) {
    std::map<long long, long long> levels;  // ticks -> grains
    for (const auto& o : orders)
        if (o.side == side) levels[o.price.ticks()] += o.volume.units() / Volume::kGrainUnits;
    NaiveCurve c;
    long long run = 0;
    const auto push = [&](long long ticks, long long grains) {
        run += grains;
        c.price.push_back(ticks / 100.0);
        c.cum.push_back(run);
    };
    if (side == Side::Sell)
        for (auto it = levels.begin(); it != levels.end(); ++it) push(it->first, it->second);
    else
        for (auto it = levels.rbegin(); it != levels.rend(); ++it) push(it->first, it->second);
    return c;
}

std::array<double, 10> naive_features(const std::vector<Order>& orders) {
    const auto b = naive_curve(orders, Side::Buy);
    const auto s = naive_curve(orders, Side::Sell);
    if (b.cum.empty() || s.cum.empty()) return {};
    const auto mean_price = [](const NaiveCurve& c) {
        double w = 0;
        long long prev = 0;
        for (std::size_t i = 0; i < c.cum.size(); ++i) {
            w += c.price[i] * static_cast<double>(c.cum[i] - prev);
            prev = c.cum[i];
        }
        return w / static_cast<double>(c.cum.back());
    };
    const auto mean_cum = [](const NaiveCurve& c) {
        double t = 0;
        for (long long v : c.cum) t += v / 1000.0;
        return t / static_cast<double>(c.cum.size());
    };
    return {b.price.front() - s.price.front(),
            mean_price(b) - mean_price(s),
            b.p_at(25) - s.p_at(75),
            b.p_at(50) - s.p_at(50),
            b.p_at(75) - s.p_at(25),
            std::abs(b.cum.front() - s.cum.front()) / 1000.0,
            std::abs(mean_cum(b) - mean_cum(s)),
            std::abs(b.v_at(25) - s.v_at(25)),
            std::abs(b.v_at(50) - s.v_at(50)),
            std::abs(b.v_at(75) - s.v_at(75))};
}

// Random uncrossed book over a few products.
std::vector<Order> random_orders(std::mt19937_64& rng, int n_products, int count) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Order> out;
    for (int k = 0; k < count; ++k) {
        const Side side = u(rng) < 0.5 ? Side::Buy : Side::Sell;
        const double price = side == Side::Buy ? 10.0 + 30.0 * u(rng) : 41.0 + 30.0 * u(rng);
        out.push_back(make_order(static_cast<OrderId>(k + 1), static_cast<int>(u(rng) * n_products), side,
                                 0.1 + 9.9 * u(rng), std::round(price)));
    }
    return out;
}

OrderBook book_of(const std::vector<Order>& orders, int n_products) {
    OrderBook book(n_products);
    for (const auto& o : orders) book.match_insert(o);
    return book;
}

}  // namespace

TEST(BookFeatures, Q1Book) {
    const auto f = book_features(cid::testing::q1_book());
    EXPECT_FALSE(f.empty_buy);
    EXPECT_FALSE(f.empty_sell);
    EXPECT_NEAR(f.d[0], -0.7, 1e-12);
    // Hand computation on the two curves:
    // Buy 33.8/3.15, 29.3/4.275, 15.9/6.775; Sell 34.5/2.35, 36.3/8.6.
    EXPECT_NEAR(f.d[1], 179.1825 / 6.775 - 307.95 / 8.6, 1e-12);
    EXPECT_NEAR(f.d[2], 33.8 - 36.3, 1e-12);
    EXPECT_NEAR(f.d[3], 29.3 - 36.3, 1e-12);
    EXPECT_NEAR(f.d[4], 15.9 - 34.5, 1e-12);
    EXPECT_NEAR(f.d[5], 0.8, 1e-12);
    EXPECT_NEAR(f.d[6], std::abs(14.2 / 3 - 10.95 / 2), 1e-12);
    EXPECT_NEAR(f.d[7], 0.8, 1e-12);
    EXPECT_NEAR(f.d[8], 4.325, 1e-12);
    EXPECT_NEAR(f.d[9], 1.825, 1e-12);
}

TEST(BookFeatures, EmptyBook) {
    const auto f = book_features(OrderBook(3));
    EXPECT_TRUE(f.empty_buy);
    EXPECT_TRUE(f.empty_sell);
    for (double v : f.d) EXPECT_EQ(v, 0.0);
}

TEST(BookFeatures, OneSidedBookZeroes) {
    OrderBook book(1);
    book.match_insert(make_order(1, 0, Side::Buy, 2, 30));
    const auto f = book_features(book);
    EXPECT_FALSE(f.empty_buy);
    EXPECT_TRUE(f.empty_sell);
    for (double v : f.d) EXPECT_EQ(v, 0.0);
}

TEST(BookFeatures, MirrorBookHasNoVolumeGap) {
    OrderBook book(2);
    book.match_insert(make_order(1, 0, Side::Buy, 2, 30));
    book.match_insert(make_order(2, 1, Side::Buy, 5, 25));
    book.match_insert(make_order(3, 0, Side::Sell, 2, 32));
    book.match_insert(make_order(4, 1, Side::Sell, 5, 37));
    const auto f = book_features(book);
    for (int i = 5; i < 10; ++i) EXPECT_EQ(f.d[i], 0.0);
}

TEST(BookFeatures, MatchesNaiveReference) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        const auto orders = random_orders(rng, 4, 1 + trial % 25);
        const auto f = book_features(book_of(orders, 4));
        const auto ref = naive_features(orders);
        for (int i = 0; i < 10; ++i) EXPECT_NEAR(f.d[i], ref[i], 1e-9) << "trial " << trial << " D" << i + 1;
    }
}

TEST(BookFeatures, PriceTranslationInvariance) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        auto orders = random_orders(rng, 3, 12);
        const auto f = book_features(book_of(orders, 3));
        for (auto& o : orders) o.price = Price::from_ticks(o.price.ticks() + 1234);
        const auto g = book_features(book_of(orders, 3));
        for (int i = 0; i < 10; ++i) EXPECT_NEAR(f.d[i], g.d[i], 1e-9);
    }
}

TEST(BookFeatures, VolumeScaling) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        auto orders = random_orders(rng, 3, 12);
        const auto f = book_features(book_of(orders, 3));
        for (auto& o : orders) o.volume = Volume::from_units(o.volume.units() * 3);
        const auto g = book_features(book_of(orders, 3));
        for (int i = 0; i < 5; ++i) EXPECT_NEAR(f.d[i], g.d[i], 1e-9);
        for (int i = 5; i < 10; ++i) EXPECT_NEAR(3 * f.d[i], g.d[i], 1e-9);
    }
}

TEST(BookFeatures, IndependentOfInsertionOrder) {
    std::mt19937_64 rng(10);
    auto orders = random_orders(rng, 3, 20);
    const auto f = book_features(book_of(orders, 3));
    std::shuffle(orders.begin(), orders.end(), rng);
    OrderId id = 1;
    for (auto& o : orders) o.id = id++;
    const auto g = book_features(book_of(orders, 3));
    EXPECT_EQ(f.d, g.d);
}

TEST(StepObservation, LayoutWidth) {
    StepObservation obs;
    obs.contracted = {1.0, -2.0, 3.0};
    obs.previous_action = Action::Idle;
    obs.previous_reward = 7.5;
    obs.exog.hour = 17;
    const auto v = obs.flatten();
    ASSERT_EQ(static_cast<int>(v.size()), StepObservation::width(3));
    EXPECT_EQ(v[12], 1.0);
    EXPECT_EQ(v[14], 3.0);
    EXPECT_EQ(v[v.size() - 3], 0.0);
    EXPECT_EQ(v[v.size() - 2], 1.0);
    EXPECT_EQ(v.back(), 7.5);
    EXPECT_EQ(StepObservation::width(96), 146);
}

TEST(PseudoState, SingleObservationPadsFront) {
    std::vector<std::vector<double>> h{{1.0, 2.0}};
    const auto z = build_pseudo_state(h, 10);
    ASSERT_EQ(z.values.size(), 20u);
    for (int i = 0; i < 18; ++i) EXPECT_EQ(z.values[i], 0.0);
    EXPECT_EQ(z.values[18], 1.0);
    EXPECT_EQ(z.values[19], 2.0);
}

TEST(PseudoState, KeepsNewestWindow) {
    std::vector<std::vector<double>> h;
    for (int i = 1; i <= 15; ++i) h.push_back({double(i)});
    const auto z = build_pseudo_state(h, 10);
    ASSERT_EQ(z.values.size(), 10u);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(z.values[i], 6.0 + i);
    EXPECT_EQ(build_pseudo_state(h, 1).values, std::vector<double>{15.0});
}

TEST(PseudoState, RejectsEmptyHistory) {
    EXPECT_THROW(build_pseudo_state(std::span<const std::vector<double>>{}, 3), ValidationError);
}
