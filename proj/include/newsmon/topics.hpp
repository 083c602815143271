#pragma once

#include "newsmon/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace newsmon {

struct TokenizedDoc;

/// Token-id sequences; ids must be < the vocabulary size passed alongside.
using TokenLists = std::vector<std::vector<int>>;
TokenLists token_lists(std::span<const TokenizedDoc> docs);

struct LdaConfig {
    int topics = 9;
    /// Symmetric doc-topic concentration; unset means 50 / K.
    std::optional<double> alpha;
    double beta = 0.01;
    int iterations = 1000;
    int burn_in = 200;
    std::uint64_t seed = 1;
    /// Average the smoothed estimates over post-burn-in sweeps instead of
    /// using the final sweep's counts.
    bool average = false;

    double alpha_value() const { return alpha ? *alpha : 50.0 / topics; }
    /// Throws UsageError unless K >= 2, alpha, beta > 0 and iterations > burn_in >= 0.
    void validate() const;
};

nlohmann::json to_json(const LdaConfig& c);
LdaConfig lda_config_from_json(const nlohmann::json& j);

/// Collapsed Gibbs sampler over a fixed corpus (held by reference; it must
/// outlive the sampler).
///
/// Token i of document d takes topic k with probability proportional to
///
///     (n_dk + alpha) (n_kw + prior_kw) / (n_k + sum_w prior_kw)
///
/// with counts excluding the token itself. prior_kw is beta everywhere for
/// static LDA; the dynamic model passes beta + kappa * phi_prev.
/// Draws use inverse-CDF over the cumulative weights in topic order, with
/// one CounterRng draw per token, so runs are bit-reproducible.
class GibbsSampler {
public:
    GibbsSampler(const TokenLists& docs, std::size_t vocab_size, int topics, double alpha, double beta,
                 std::uint64_t seed);
    /// Full K x V word prior (each entry > 0).
    GibbsSampler(const TokenLists& docs, std::size_t vocab_size, int topics, double alpha,
                 Eigen::MatrixXd word_prior, std::uint64_t seed);

    void sweep();
    int sweeps_done() const { return sweeps_; }

    int topics() const { return topics_; }
    std::size_t vocab_size() const { return vocab_size_; }
    const std::vector<std::vector<int>>& assignments() const { return z_; }
    const Eigen::MatrixXi& topic_word() const { return n_kw_; }   // K x V
    const Eigen::MatrixXi& doc_topic() const { return n_dk_; }    // D x K
    const Eigen::VectorXi& topic_totals() const { return n_k_; }  // K

    /// (n_kw + prior_kw) / (n_k + sum_w prior_kw)
    Eigen::MatrixXd phi() const;
    /// (n_dk + alpha) / (N_d + K alpha); uniform for empty documents.
    Eigen::MatrixXd theta() const;

    /// Recomputes all tables from z and compares.
    bool counts_consistent() const;

private:
    void init(std::uint64_t seed);
    double prior(int k, int w) const { return uniform_prior_ ? beta_ : word_prior_(k, w); }

    const TokenLists& docs_;
    std::size_t vocab_size_;
    int topics_;
    double alpha_;
    double beta_ = 0.0;
    bool uniform_prior_ = true;
    Eigen::MatrixXd word_prior_;
    Eigen::VectorXd prior_sum_;
    std::vector<std::vector<int>> z_;
    Eigen::MatrixXi n_kw_;
    Eigen::MatrixXi n_dk_;
    Eigen::VectorXi n_k_;
    std::vector<double> cdf_;
    CounterRng rng_;
    int sweeps_ = 0;
};

struct TopicModel {
    LdaConfig config;
    std::size_t vocab_size = 0;
    std::string vocab_hash;
    Eigen::MatrixXd phi;    // K x V, rows sum to 1
    Eigen::MatrixXd theta;  // D x K, rows sum to 1
    std::vector<std::vector<int>> z;
    Eigen::MatrixXi topic_word;
    Eigen::MatrixXi doc_topic;
    Eigen::VectorXi topic_totals;

    int topics() const { return static_cast<int>(phi.rows()); }
    double alpha() const { return config.alpha_value(); }
};

/// Fits static LDA; throws DataError on a corpus without tokens or with
/// token ids out of range. Empty documents are skipped by the sampler and
/// get the uniform theta row.
TopicModel fit_lda(const TokenLists& docs, std::size_t vocab_size, const LdaConfig& config);

/// Gibbs over the new document's assignments with phi frozen:
/// p(z = k) proportional to (n_dk + alpha) phi_kw. Returns the smoothed
/// theta row averaged over the second half of the sweeps. Out-of-range ids
/// are ignored; an empty document gets the uniform row.
Eigen::VectorXd fold_in(const std::vector<int>& doc, const TopicModel& model, int sweeps, std::uint64_t seed);

/// Document frequencies and co-document frequencies over a reference corpus.
class CooccurrenceIndex {
public:
    CooccurrenceIndex(const TokenLists& docs, std::size_t vocab_size);
    std::size_t df(int w) const { return postings_[static_cast<std::size_t>(w)].size(); }
    std::size_t co_df(int a, int b) const;
    std::size_t documents() const { return documents_; }

private:
    std::vector<std::vector<int>> postings_;
    std::size_t documents_;
};

struct CoherenceScore {
    std::vector<double> per_topic;
    double mean = 0.0;
    std::vector<std::string> warnings;
};

/// UMass over a ranked word list: mean over pairs (a, b), rank a < b, of
/// log((D(w_a, w_b) + 1) / D(w_a)). Pairs whose conditioning word never
/// occurs are skipped. Fewer than two scorable words gives 0.
double umass_words(const std::vector<int>& ranked_words, const CooccurrenceIndex& index, std::string* warning = nullptr);

/// Per-topic UMass over each topic's top_m words (descending phi).
CoherenceScore umass_coherence(const TopicModel& model, int top_m, const TokenLists& docs);

/// Sliding-window NPMI (window 20 by default): mean over top-word pairs of
/// log(p_ab / (p_a p_b)) / -log p_ab, with -1 for pairs that never share a window.
CoherenceScore npmi_coherence(const TopicModel& model, int top_m, const TokenLists& docs, int window = 20);

/// Per-word natural-log likelihood: sum_d sum_i log sum_k theta_dk phi_k,w_di / N.
/// theta has one row per held-out doc. Out-of-range ids are dropped.
double log_likelihood_per_word(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& theta, const TokenLists& docs);

/// log_likelihood_per_word with theta from fold_in (sweeps each); throws
/// DataError when no held-out token is in the vocabulary.
double log_perplexity(const TopicModel& model, const TokenLists& heldout, int fold_in_sweeps, std::uint64_t seed);

enum class CoherenceMetric { umass, npmi };

struct SweepEntry {
    int topics = 0;
    double coherence = 0.0;
    double log_perplexity = 0.0;
};

struct SelectionReport {
    std::vector<SweepEntry> entries;
    int chosen_topics = 0;
    std::string rule;
};

struct SweepOptions {
    int top_m = 10;
    CoherenceMetric metric = CoherenceMetric::umass;
    int fold_in_sweeps = 50;
    /// Perplexity is measured on these when given, on the training docs otherwise.
    const TokenLists* heldout = nullptr;
};

/// Fits every K (seed derived per K from the template seed), scores both
/// criteria, and picks the K of maximum coherence (ties to the smallest K).
SelectionReport sweep_k(const TokenLists& docs, std::size_t vocab_size, const std::vector<int>& ks,
                        const LdaConfig& config_template, const SweepOptions& options = {});

/// Per topic: (word id, phi) pairs by descending phi, ties by ascending id.
std::vector<std::vector<std::pair<int, double>>> top_words(const Eigen::MatrixXd& phi, int m);

/// JSON with config, vocab hash, phi and theta (assignments are not stored).
nlohmann::json model_to_json(const TopicModel& model);
TopicModel model_from_json(const nlohmann::json& j);
void save_model(const TopicModel& model, const std::string& path);
TopicModel load_model(const std::string& path);

} // namespace newsmon
