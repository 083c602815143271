#pragma once

#include "newsmon/topics.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace newsmon {

class Corpus;
class Vocabulary;

struct DtmConfig {
    int topics = 9;
    std::optional<double> alpha;  // unset: 50 / K
    double beta = 0.01;
    /// Pseudo-count mass of the previous slice's phi in the next slice's prior.
    double kappa = 50.0;
    int iterations = 1000;  // Gibbs sweeps per slice
    std::uint64_t seed = 1;

    double alpha_value() const { return alpha ? *alpha : 50.0 / topics; }
    void validate() const;
};

nlohmann::json to_json(const DtmConfig& c);
DtmConfig dtm_config_from_json(const nlohmann::json& j);

/// Article indices per calendar week, week 0 starting at the corpus's first
/// date. Empty interior weeks are kept.
std::vector<std::vector<std::size_t>> slice_by_week(const Corpus& corpus);

/// Token lists grouped by TokenizedDoc::week. `weeks` fixes the slice count;
/// when 0 it is max(week) + 1.
std::vector<TokenLists> slice_tokens(std::span<const TokenizedDoc> docs, int weeks = 0);

struct DtmModel {
    DtmConfig config;
    std::size_t vocab_size = 0;
    std::string vocab_hash;
    std::vector<int> weeks;             // week index of each slice
    std::vector<Eigen::MatrixXd> phi;   // per slice, K x V
    /// Fraction of the slice's tokens assigned to each topic; empty for
    /// slices without tokens.
    std::vector<std::optional<Eigen::VectorXd>> prevalence;

    int topics() const { return config.topics; }
    std::size_t slices() const { return phi.size(); }
};

/// Forward, slice-coupled Gibbs. The first non-empty slice is fitted as
/// static LDA; each later slice uses the word prior beta + kappa * phi_{t-1}.
/// Slices without tokens copy the previous phi (leading ones copy the first
/// fitted phi). Slice t is seeded with derive_seed(seed, t), so kappa = 0
/// reproduces a static fit_lda of that slice with the same seed.
/// Throws DataError when no slice has tokens or when K exceeds the number of
/// distinct words of the first fitted slice.
DtmModel fit_dtm(const std::vector<TokenLists>& slices, std::size_t vocab_size, const DtmConfig& config);

/// p_t(k) per slice; empty slices give nullopt.
std::vector<std::optional<double>> topic_trajectory(const DtmModel& model, int k);

/// CSV "topic,week,prevalence" with empty cells for flagged slices.
std::string prevalence_csv(const DtmModel& model);
/// CSV "topic,week,rank,word,probability" with the top m words per (topic, week).
std::string top_words_csv(const DtmModel& model, const Vocabulary& vocab, int m);

nlohmann::json dtm_to_json(const DtmModel& model);
DtmModel dtm_from_json(const nlohmann::json& j);
void save_dtm(const DtmModel& model, const std::string& path);
DtmModel load_dtm(const std::string& path);

} // namespace newsmon
