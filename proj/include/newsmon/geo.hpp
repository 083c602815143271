#pragma once

#include "newsmon/corpus.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace newsmon {

enum class RegionLevel { district, division };

std::string_view to_string(RegionLevel l);
RegionLevel parse_region_level(std::string_view text);

/// Every article's region at one level. Rows list all gazetteer regions at
/// that level (divisions include INTERNATIONAL) followed by UNRESOLVED, so
/// grids keep a fixed shape even when a region has no articles.
class RegionAssignment {
public:
    RegionAssignment(const Corpus& corpus, const Gazetteer& gazetteer, RegionLevel level);

    RegionLevel level() const { return level_; }
    const std::vector<std::string>& rows() const { return rows_; }
    /// Row of article i (corpus order).
    int row_of(std::size_t article) const { return article_rows_[article]; }
    std::size_t articles() const { return article_rows_.size(); }

private:
    RegionLevel level_;
    std::vector<std::string> rows_;
    std::vector<int> article_rows_;
};

/// Article count per region at the level (UNRESOLVED included; zero-count
/// regions listed).
std::map<std::string, std::size_t> aggregate_volume(const Corpus& corpus, const Gazetteer& gazetteer, RegionLevel level);

/// Sums district counts into their divisions.
std::map<std::string, std::size_t> rollup_to_divisions(const std::map<std::string, std::size_t>& districts,
                                                       const Gazetteer& gazetteer);

struct RegionWeekGrid {
    std::string measure;  // "volume", "topic_mass_<k>", "sentiment_positive", "sentiment_negative"
    std::vector<std::string> regions;
    Eigen::MatrixXd cells;  // regions x weeks

    double total() const { return cells.sum(); }
};

RegionWeekGrid volume_grid(const Corpus& corpus, const RegionAssignment& regions);

/// Document-level theta mass of topic k per region and week (theta rows in
/// corpus order). With `argmax`, each article adds 1 to its top topic instead.
RegionWeekGrid topic_mass_grid(const Corpus& corpus, const RegionAssignment& regions, const Eigen::MatrixXd& theta,
                               int topic, bool argmax = false);

/// Region -> topic distribution: normalized sum of member articles' theta
/// rows (or argmax one-hot rows). Regions without articles are omitted.
std::map<std::string, Eigen::VectorXd> topic_by_region(const RegionAssignment& regions, const Eigen::MatrixXd& theta,
                                                       bool argmax = false);

struct SentimentGrids {
    RegionWeekGrid positive;
    RegionWeekGrid negative;
};

/// Predicted sentiment wins over gold when both exist. Throws DataError
/// listing the ids of articles that have neither.
SentimentGrids sentiment_grid(const Corpus& corpus, const RegionAssignment& regions,
                              const std::unordered_map<std::string, Sentiment>& predictions = {});

/// "region,week_0,...,week_n".
std::string grid_csv(const RegionWeekGrid& grid);
/// "region,value".
std::string choropleth_csv(const std::map<std::string, double>& values);

} // namespace newsmon
