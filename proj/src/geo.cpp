#include "newsmon/geo.hpp"

#include "newsmon/csv.hpp"
#include "newsmon/error.hpp"

#include <fmt/format.h>

namespace newsmon {

std::string_view to_string(RegionLevel l) {
    return l == RegionLevel::district ? "district" : "division";
}

RegionLevel parse_region_level(std::string_view text) {
    if (text == "district") {
        return RegionLevel::district;
    }
    if (text == "division") {
        return RegionLevel::division;
    }
    throw UsageError(fmt::format("unknown region level '{}' (district, division)", text));
}

RegionAssignment::RegionAssignment(const Corpus& corpus, const Gazetteer& gazetteer, RegionLevel level)
    : level_(level) {
    rows_ = level == RegionLevel::district ? gazetteer.districts() : gazetteer.divisions();
    rows_.emplace_back(kUnresolved);
    std::unordered_map<std::string, int> row_index;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        row_index.emplace(rows_[r], static_cast<int>(r));
    }
    const int unresolved = static_cast<int>(rows_.size()) - 1;
    for (const auto& a : corpus.articles()) {
        auto region = resolve_region(a, gazetteer);
        if (!region) {
            article_rows_.push_back(unresolved);
            continue;
        }
        const auto& name = level == RegionLevel::district ? region->district : region->division;
        article_rows_.push_back(row_index.at(name));
    }
}

std::map<std::string, std::size_t> aggregate_volume(const Corpus& corpus, const Gazetteer& gazetteer, RegionLevel level) {
    RegionAssignment regions(corpus, gazetteer, level);
    std::map<std::string, std::size_t> out;
    for (const auto& r : regions.rows()) {
        out[r] = 0;
    }
    for (std::size_t i = 0; i < regions.articles(); ++i) {
        ++out[regions.rows()[static_cast<std::size_t>(regions.row_of(i))]];
    }
    return out;
}

std::map<std::string, std::size_t> rollup_to_divisions(const std::map<std::string, std::size_t>& districts,
                                                       const Gazetteer& gazetteer) {
    std::map<std::string, std::size_t> out;
    for (const auto& d : gazetteer.divisions()) {
        out[d] = 0;
    }
    for (const auto& [district, count] : districts) {
        if (district == kUnresolved) {
            out[std::string(kUnresolved)] += count;
        } else {
            out[gazetteer.division_of(district)] += count;
        }
    }
    return out;
}

namespace {

RegionWeekGrid empty_grid(const Corpus& corpus, const RegionAssignment& regions, std::string measure) {
    RegionWeekGrid g;
    g.measure = std::move(measure);
    g.regions = regions.rows();
    g.cells = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.regions.size()), corpus.empty() ? 0 : corpus.week_count());
    return g;
}

void check_sizes(const Corpus& corpus, const RegionAssignment& regions) {
    if (regions.articles() != corpus.size()) {
        throw UsageError("region assignment does not belong to this corpus");
    }
}

void check_theta(const RegionAssignment& regions, const Eigen::MatrixXd& theta) {
    if (static_cast<std::size_t>(theta.rows()) != regions.articles()) {
        throw DataError(fmt::format("theta has {} rows for {} articles", theta.rows(), regions.articles()));
    }
}

Eigen::Index top_topic(const Eigen::MatrixXd& theta, std::size_t i) {
    Eigen::Index k = 0;
    theta.row(static_cast<Eigen::Index>(i)).maxCoeff(&k);
    return k;
}

} // namespace

RegionWeekGrid volume_grid(const Corpus& corpus, const RegionAssignment& regions) {
    check_sizes(corpus, regions);
    auto g = empty_grid(corpus, regions, "volume");
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        g.cells(regions.row_of(i), corpus.week_of(corpus[i])) += 1.0;
    }
    return g;
}

RegionWeekGrid topic_mass_grid(const Corpus& corpus, const RegionAssignment& regions, const Eigen::MatrixXd& theta,
                               int topic, bool argmax) {
    check_sizes(corpus, regions);
    check_theta(regions, theta);
    if (topic < 0 || topic >= theta.cols()) {
        throw UsageError(fmt::format("topic {} out of range", topic));
    }
    auto g = empty_grid(corpus, regions, fmt::format("topic_mass_{}", topic));
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        double mass = argmax ? (top_topic(theta, i) == topic ? 1.0 : 0.0) : theta(static_cast<Eigen::Index>(i), topic);
        g.cells(regions.row_of(i), corpus.week_of(corpus[i])) += mass;
    }
    return g;
}

std::map<std::string, Eigen::VectorXd> topic_by_region(const RegionAssignment& regions, const Eigen::MatrixXd& theta,
                                                       bool argmax) {
    check_theta(regions, theta);
    std::vector<Eigen::VectorXd> sums(regions.rows().size(), Eigen::VectorXd::Zero(theta.cols()));
    std::vector<std::size_t> members(regions.rows().size(), 0);
    for (std::size_t i = 0; i < regions.articles(); ++i) {
        auto r = static_cast<std::size_t>(regions.row_of(i));
        if (argmax) {
            sums[r](top_topic(theta, i)) += 1.0;
        } else {
            sums[r] += theta.row(static_cast<Eigen::Index>(i)).transpose();
        }
        ++members[r];
    }
    std::map<std::string, Eigen::VectorXd> out;
    for (std::size_t r = 0; r < sums.size(); ++r) {
        if (members[r] > 0) {
            out[regions.rows()[r]] = sums[r] / sums[r].sum();
        }
    }
    return out;
}

SentimentGrids sentiment_grid(const Corpus& corpus, const RegionAssignment& regions,
                              const std::unordered_map<std::string, Sentiment>& predictions) {
    check_sizes(corpus, regions);
    SentimentGrids g{empty_grid(corpus, regions, "sentiment_positive"), empty_grid(corpus, regions, "sentiment_negative")};
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& a = corpus[i];
        std::optional<Sentiment> s = a.sentiment;
        if (auto it = predictions.find(a.id); it != predictions.end()) {
            s = it->second;
        }
        if (!s) {
            missing.push_back(a.id);
            continue;
        }
        auto& grid = *s == Sentiment::positive ? g.positive : g.negative;
        grid.cells(regions.row_of(i), corpus.week_of(a)) += 1.0;
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
            list += (i ? ", " : "") + missing[i];
        }
        if (missing.size() > 20) {
            list += fmt::format(", ... ({} total)", missing.size());
        }
        throw DataError("articles without gold or predicted sentiment: " + list);
    }
    return g;
}

std::string grid_csv(const RegionWeekGrid& grid) {
    std::string out = "region";
    for (Eigen::Index w = 0; w < grid.cells.cols(); ++w) {
        out += fmt::format(",week_{}", w);
    }
    out += '\n';
    for (std::size_t r = 0; r < grid.regions.size(); ++r) {
        out += csv::escape(grid.regions[r]);
        for (Eigen::Index w = 0; w < grid.cells.cols(); ++w) {
            out += "," + csv::real(grid.cells(static_cast<Eigen::Index>(r), w));
        }
        out += '\n';
    }
    return out;
}

std::string choropleth_csv(const std::map<std::string, double>& values) {
    std::string out = "region,value\n";
    for (const auto& [region, v] : values) {
        out += csv::escape(region) + "," + csv::real(v) + "\n";
    }
    return out;
}

} // namespace newsmon
