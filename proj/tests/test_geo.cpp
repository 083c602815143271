#include "newsmon/error.hpp"
#include "newsmon/geo.hpp"
#include "newsmon/rng.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace newsmon;

namespace {

const Gazetteer& gazetteer() {
    static const Gazetteer g = Gazetteer::load(testutil::source_path("resources/gazetteer_bd.csv"));
    return g;
}

Article make(const std::string& id, const std::string& location, Date d, std::optional<Sentiment> s = {}) {
    Article a;
    a.id = id;
    a.body = "x";
    a.location = location;
    a.published = d;
    a.sentiment = s;
    return a;
}

double row(const RegionWeekGrid& g, const std::string& region, Eigen::Index week) {
    auto it = std::find(g.regions.begin(), g.regions.end(), region);
    REQUIRE(it != g.regions.end());
    return g.cells(it - g.regions.begin(), week);
}

Corpus random_corpus(std::uint64_t seed, std::size_t n) {
    CounterRng rng(seed);
    const auto& districts = gazetteer().districts();
    std::vector<Article> articles;
    for (std::size_t i = 0; i < n; ++i) {
        std::string loc = rng.uniform() < 0.1 ? "Atlantis" : districts[rng.index(districts.size())];
        auto s = rng.uniform() < 0.5 ? Sentiment::positive : Sentiment::negative;
        articles.push_back(make("a" + std::to_string(i), loc, Date(2020, 1, 21) + static_cast<int>(rng.index(120)), s));
    }
    return Corpus(articles);
}

} // namespace

TEST_CASE("division volume shares") {
    std::vector<Article> articles;
    const char* places[] = {"Dhaka", "Gazipur", "Narayanganj", "Dhaka", "Faridpur", "Tangail",
                            "Chittagong", "Sylhet", "Khulna", "Wuhan"};
    for (int i = 0; i < 10; ++i) {
        articles.push_back(make("a" + std::to_string(i), places[i], Date(2020, 3, 1)));
    }
    auto v = aggregate_volume(Corpus(articles), gazetteer(), RegionLevel::division);
    CHECK(v.at("Dhaka") == 6);
    CHECK(v.at("INTERNATIONAL") == 1);
    CHECK(v.at("Rangpur") == 0);
    CHECK(v.at("UNRESOLVED") == 0);
    CHECK(v.size() == 10);  // 8 divisions + INTERNATIONAL + UNRESOLVED
}

TEST_CASE("all-unresolved corpus") {
    Corpus c({make("a", "Mars", Date(2020, 3, 1)), make("b", "", Date(2020, 3, 2))});
    auto v = aggregate_volume(c, gazetteer(), RegionLevel::division);
    CHECK(v.at("UNRESOLVED") == 2);
}

TEST_CASE("conservation and exact district rollup") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto c = random_corpus(seed, 400);
        auto districts = aggregate_volume(c, gazetteer(), RegionLevel::district);
        auto divisions = aggregate_volume(c, gazetteer(), RegionLevel::division);
        std::size_t total = 0;
        for (const auto& [r, n] : districts) {
            total += n;
        }
        CHECK(total == c.size());
        CHECK(rollup_to_divisions(districts, gazetteer()) == divisions);

        RegionAssignment regions(c, gazetteer(), RegionLevel::division);
        auto grid = volume_grid(c, regions);
        CHECK(grid.total() == static_cast<double>(c.size()));
        CHECK(grid.cells.cols() == 18);
        auto s = sentiment_grid(c, regions);
        CHECK((s.positive.cells + s.negative.cells) == grid.cells);
    }
}

TEST_CASE("hand-tallied sentiment grid") {
    // 20 articles over 3 weeks starting 2020-03-01.
    const Date w0(2020, 3, 1);
    const auto P = Sentiment::positive;
    const auto N = Sentiment::negative;
    std::vector<Article> a{
        make("01", "Dhaka", w0, P),          make("02", "Dhaka", w0 + 1, P),      make("03", "Gazipur", w0 + 2, N),
        make("04", "Chittagong", w0, N),     make("05", "Comilla", w0 + 3, N),    make("06", "Sylhet", w0 + 6, P),
        make("07", "Dhaka", w0 + 7, N),      make("08", "Dhaka", w0 + 8, N),      make("09", "Narayanganj", w0 + 9, P),
        make("10", "Khulna", w0 + 10, P),    make("11", "Rajshahi", w0 + 11, N),  make("12", "Atlantis", w0 + 12, P),
        make("13", "Rangpur", w0 + 13, P),   make("14", "Dhaka", w0 + 14, P),     make("15", "Dhaka", w0 + 15, N),
        make("16", "Barisal", w0 + 16, N),   make("17", "Mymensingh", w0 + 17, P), make("18", "Wuhan", w0 + 18, N),
        make("19", "Chittagong", w0 + 19, P), make("20", "Atlantis", w0 + 20, N),
    };
    Corpus c(a);
    RegionAssignment regions(c, gazetteer(), RegionLevel::division);
    auto g = sentiment_grid(c, regions);
    // Week 0: Dhaka +2 -1, Chittagong -2, Sylhet +1.
    CHECK(row(g.positive, "Dhaka", 0) == 2);
    CHECK(row(g.negative, "Dhaka", 0) == 1);
    CHECK(row(g.negative, "Chittagong", 0) == 2);
    CHECK(row(g.positive, "Sylhet", 0) == 1);
    // Week 1: Dhaka +1 -2, Khulna +1, Rajshahi -1, UNRESOLVED +1, Rangpur +1.
    CHECK(row(g.positive, "Dhaka", 1) == 1);
    CHECK(row(g.negative, "Dhaka", 1) == 2);
    CHECK(row(g.positive, "Khulna", 1) == 1);
    CHECK(row(g.negative, "Rajshahi", 1) == 1);
    CHECK(row(g.positive, "UNRESOLVED", 1) == 1);
    CHECK(row(g.positive, "Rangpur", 1) == 1);
    // Week 2: Dhaka +1 -1, Barisal -1, Mymensingh +1, INTERNATIONAL -1, Chittagong +1, UNRESOLVED -1.
    CHECK(row(g.positive, "Dhaka", 2) == 1);
    CHECK(row(g.negative, "Dhaka", 2) == 1);
    CHECK(row(g.negative, "Barisal", 2) == 1);
    CHECK(row(g.positive, "Mymensingh", 2) == 1);
    CHECK(row(g.negative, "INTERNATIONAL", 2) == 1);
    CHECK(row(g.positive, "Chittagong", 2) == 1);
    CHECK(row(g.negative, "UNRESOLVED", 2) == 1);
    CHECK(g.positive.total() == 10);
    CHECK(g.negative.total() == 10);
}

TEST_CASE("sentiment grid: predictions override gold, missing ids are listed") {
    Corpus c({make("x1", "Dhaka", Date(2020, 3, 1), Sentiment::positive), make("x2", "Dhaka", Date(2020, 3, 1)),
              make("x3", "Dhaka", Date(2020, 3, 2))});
    RegionAssignment regions(c, gazetteer(), RegionLevel::division);
    try {
        sentiment_grid(c, regions);
        FAIL("expected a data error");
    } catch (const DataError& e) {
        std::string msg = e.what();
        CHECK(msg.find("x2") != std::string::npos);
        CHECK(msg.find("x3") != std::string::npos);
        CHECK(msg.find("x1") == std::string::npos);
    }
    std::unordered_map<std::string, Sentiment> pred{
        {"x1", Sentiment::negative}, {"x2", Sentiment::negative}, {"x3", Sentiment::negative}};
    auto g = sentiment_grid(c, regions, pred);
    CHECK(g.positive.total() == 0);
    CHECK(row(g.negative, "Dhaka", 0) == 3);
}

TEST_CASE("topic_by_region and topic mass grids") {
    Corpus c({make("a", "Dhaka", Date(2020, 3, 1)), make("b", "Gazipur", Date(2020, 3, 9)),
              make("c", "Sylhet", Date(2020, 3, 2))});
    Eigen::MatrixXd theta(3, 2);
    theta << 1.0, 0.0, 0.0, 1.0, 0.3, 0.7;
    RegionAssignment regions(c, gazetteer(), RegionLevel::division);
    auto by = topic_by_region(regions, theta);
    CHECK(by.size() == 2);
    CHECK(by.at("Dhaka").isApprox(Eigen::Vector2d(0.5, 0.5)));
    CHECK(by.at("Sylhet").isApprox(Eigen::Vector2d(0.3, 0.7)));
    auto hard = topic_by_region(regions, theta, true);
    CHECK(hard.at("Sylhet").isApprox(Eigen::Vector2d(0.0, 1.0)));

    auto mass = topic_mass_grid(c, regions, theta, 1);
    CHECK(row(mass, "Dhaka", 1) == 1.0);
    CHECK(row(mass, "Sylhet", 0) == doctest::Approx(0.7));
    // Per week, the topic masses sum to the week's document count.
    auto other = topic_mass_grid(c, regions, theta, 0);
    Eigen::VectorXd weekly = (mass.cells + other.cells).colwise().sum();
    CHECK(weekly.isApprox(Eigen::Vector2d(2.0, 1.0)));
    CHECK_THROWS_AS(topic_mass_grid(c, regions, theta, 2), UsageError);
    CHECK_THROWS_AS(topic_by_region(regions, Eigen::MatrixXd::Zero(2, 2)), DataError);
}

TEST_CASE("planted regions: top topic follows the region") {
    auto c = random_corpus(9, 200);
    RegionAssignment regions(c, gazetteer(), RegionLevel::division);
    Eigen::MatrixXd theta(200, 3);
    CounterRng rng(2);
    for (std::size_t i = 0; i < 200; ++i) {
        const auto& name = regions.rows()[static_cast<std::size_t>(regions.row_of(i))];
        Eigen::RowVector3d noise(rng.uniform(), rng.uniform(), rng.uniform());
        if (name == "Dhaka") {
            noise(1) += 5.0;  // Dhaka documents are mostly topic 1
        }
        theta.row(static_cast<Eigen::Index>(i)) = noise / noise.sum();
    }
    Eigen::Index top = 0;
    topic_by_region(regions, theta).at("Dhaka").maxCoeff(&top);
    CHECK(top == 1);
}

TEST_CASE("CSV emitters") {
    Corpus c({make("a", "Dhaka", Date(2020, 3, 1)), make("b", "Dhaka", Date(2020, 3, 9))});
    RegionAssignment regions(c, gazetteer(), RegionLevel::division);
    auto text = grid_csv(volume_grid(c, regions));
    CHECK(text.rfind("region,week_0,week_1\n", 0) == 0);
    CHECK(text.find("\nDhaka,1,1\n") != std::string::npos);
    CHECK(text.find("\nUNRESOLVED,0,0\n") != std::string::npos);
    CHECK(choropleth_csv({{"Dhaka", 0.5}, {"Cox's Bazar", 1.0}}) == "region,value\nCox's Bazar,1\nDhaka,0.5\n");
    CHECK(parse_region_level("district") == RegionLevel::district);
    CHECK_THROWS_AS(parse_region_level("country"), UsageError);
}
