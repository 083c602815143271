#include "newsmon/topics.hpp"

#include "newsmon/error.hpp"
#include "newsmon/jsonio.hpp"
#include "newsmon/textprep.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace newsmon {

TokenLists token_lists(std::span<const TokenizedDoc> docs) {
    TokenLists out;
    out.reserve(docs.size());
    for (const auto& d : docs) {
        out.push_back(d.tokens);
    }
    return out;
}

void LdaConfig::validate() const {
    if (topics < 2) {
        throw UsageError(fmt::format("LDA needs K >= 2, got {}", topics));
    }
    if (!(alpha_value() > 0.0) || !(beta > 0.0)) {
        throw UsageError("alpha and beta must be positive");
    }
    if (burn_in < 0 || iterations <= burn_in) {
        throw UsageError(fmt::format("need iterations > burn_in >= 0 (got {} / {})", iterations, burn_in));
    }
}

nlohmann::json to_json(const LdaConfig& c) {
    nlohmann::json j;
    j["topics"] = c.topics;
    j["alpha"] = c.alpha_value();
    j["beta"] = c.beta;
    j["iterations"] = c.iterations;
    j["burn_in"] = c.burn_in;
    j["seed"] = c.seed;
    j["average"] = c.average;
    return j;
}

LdaConfig lda_config_from_json(const nlohmann::json& j) {
    LdaConfig c;
    c.topics = j.at("topics").get<int>();
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.iterations = j.at("iterations").get<int>();
    c.burn_in = j.at("burn_in").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.average = j.value("average", false);
    return c;
}

// -- sampler ------------------------------------------------------------------

namespace {

void check_ids(const TokenLists& docs, std::size_t vocab_size) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (int w : docs[d]) {
            if (w < 0 || static_cast<std::size_t>(w) >= vocab_size) {
                throw DataError(fmt::format("document {} has token id {} outside vocabulary of {}", d, w, vocab_size));
            }
        }
    }
}

} // namespace

GibbsSampler::GibbsSampler(const TokenLists& docs, std::size_t vocab_size, int topics, double alpha, double beta,
                           std::uint64_t seed)
    : docs_(docs), vocab_size_(vocab_size), topics_(topics), alpha_(alpha), beta_(beta), rng_(seed, 0x6166) {
    prior_sum_ = Eigen::VectorXd::Constant(topics, beta * static_cast<double>(vocab_size));
    init(seed);
}

GibbsSampler::GibbsSampler(const TokenLists& docs, std::size_t vocab_size, int topics, double alpha,
                           Eigen::MatrixXd word_prior, std::uint64_t seed)
    : docs_(docs), vocab_size_(vocab_size), topics_(topics), alpha_(alpha), uniform_prior_(false),
      word_prior_(std::move(word_prior)), rng_(seed, 0x6166) {
    if (word_prior_.rows() != topics || static_cast<std::size_t>(word_prior_.cols()) != vocab_size) {
        throw UsageError("word prior must be K x V");
    }
    if ((word_prior_.array() <= 0.0).any()) {
        throw UsageError("word prior entries must be positive");
    }
    prior_sum_ = word_prior_.rowwise().sum();
    init(seed);
}

void GibbsSampler::init(std::uint64_t) {
    if (topics_ < 1) {
        throw UsageError("need at least one topic");
    }
    check_ids(docs_, vocab_size_);
    n_kw_ = Eigen::MatrixXi::Zero(topics_, static_cast<Eigen::Index>(vocab_size_));
    n_dk_ = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(docs_.size()), topics_);
    n_k_ = Eigen::VectorXi::Zero(topics_);
    cdf_.assign(static_cast<std::size_t>(topics_), 0.0);
    z_.resize(docs_.size());
    for (std::size_t d = 0; d < docs_.size(); ++d) {
        z_[d].resize(docs_[d].size());
        for (std::size_t i = 0; i < docs_[d].size(); ++i) {
            int k = static_cast<int>(rng_.index(static_cast<std::size_t>(topics_)));
            z_[d][i] = k;
            ++n_kw_(k, docs_[d][i]);
            ++n_dk_(static_cast<Eigen::Index>(d), k);
            ++n_k_(k);
        }
    }
}

void GibbsSampler::sweep() {
    for (std::size_t d = 0; d < docs_.size(); ++d) {
        const auto& doc = docs_[d];
        auto di = static_cast<Eigen::Index>(d);
        for (std::size_t i = 0; i < doc.size(); ++i) {
            int w = doc[i];
            int old = z_[d][i];
            --n_kw_(old, w);
            --n_dk_(di, old);
            --n_k_(old);

            double total = 0.0;
            for (int k = 0; k < topics_; ++k) {
                total += (n_dk_(di, k) + alpha_) * (n_kw_(k, w) + prior(k, w)) / (n_k_(k) + prior_sum_(k));
                cdf_[static_cast<std::size_t>(k)] = total;
            }
            double u = rng_.uniform() * total;
            int chosen = topics_ - 1;
            for (int k = 0; k < topics_; ++k) {
                if (u < cdf_[static_cast<std::size_t>(k)]) {
                    chosen = k;
                    break;
                }
            }

            z_[d][i] = chosen;
            ++n_kw_(chosen, w);
            ++n_dk_(di, chosen);
            ++n_k_(chosen);
        }
    }
    ++sweeps_;
}

Eigen::MatrixXd GibbsSampler::phi() const {
    Eigen::MatrixXd out(topics_, static_cast<Eigen::Index>(vocab_size_));
    for (int k = 0; k < topics_; ++k) {
        double denom = n_k_(k) + prior_sum_(k);
        for (Eigen::Index w = 0; w < out.cols(); ++w) {
            out(k, w) = (n_kw_(k, w) + prior(k, static_cast<int>(w))) / denom;
        }
    }
    return out;
}

Eigen::MatrixXd GibbsSampler::theta() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(docs_.size()), topics_);
    for (std::size_t d = 0; d < docs_.size(); ++d) {
        auto di = static_cast<Eigen::Index>(d);
        double denom = static_cast<double>(docs_[d].size()) + topics_ * alpha_;
        for (int k = 0; k < topics_; ++k) {
            out(di, k) = (n_dk_(di, k) + alpha_) / denom;
        }
    }
    return out;
}

bool GibbsSampler::counts_consistent() const {
    Eigen::MatrixXi kw = Eigen::MatrixXi::Zero(n_kw_.rows(), n_kw_.cols());
    Eigen::MatrixXi dk = Eigen::MatrixXi::Zero(n_dk_.rows(), n_dk_.cols());
    Eigen::VectorXi k_tot = Eigen::VectorXi::Zero(n_k_.size());
    for (std::size_t d = 0; d < docs_.size(); ++d) {
        if (n_dk_.row(static_cast<Eigen::Index>(d)).sum() != static_cast<int>(docs_[d].size())) {
            return false;
        }
        for (std::size_t i = 0; i < docs_[d].size(); ++i) {
            int k = z_[d][i];
            if (k < 0 || k >= topics_) {
                return false;
            }
            ++kw(k, docs_[d][i]);
            ++dk(static_cast<Eigen::Index>(d), k);
            ++k_tot(k);
        }
    }
    return kw == n_kw_ && dk == n_dk_ && k_tot == n_k_ && (n_kw_.rowwise().sum() == n_k_) &&
           (n_kw_.array() >= 0).all() && (n_dk_.array() >= 0).all();
}

// -- fitting --------------------------------------------------------------------

TopicModel fit_lda(const TokenLists& docs, std::size_t vocab_size, const LdaConfig& config) {
    config.validate();
    if (docs.empty() || vocab_size == 0) {
        throw DataError("cannot fit LDA on an empty corpus");
    }
    std::size_t tokens = 0;
    for (const auto& d : docs) {
        tokens += d.size();
    }
    if (tokens == 0) {
        throw DataError("cannot fit LDA: every document is empty");
    }

    GibbsSampler sampler(docs, vocab_size, config.topics, config.alpha_value(), config.beta, config.seed);
    Eigen::MatrixXd phi_sum = Eigen::MatrixXd::Zero(config.topics, static_cast<Eigen::Index>(vocab_size));
    Eigen::MatrixXd theta_sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(docs.size()), config.topics);
    int averaged = 0;
    for (int it = 0; it < config.iterations; ++it) {
        sampler.sweep();
        if (config.average && it >= config.burn_in) {
            phi_sum += sampler.phi();
            theta_sum += sampler.theta();
            ++averaged;
        }
    }

    TopicModel model;
    model.config = config;
    model.config.alpha = config.alpha_value();
    model.vocab_size = vocab_size;
    if (config.average && averaged > 0) {
        model.phi = phi_sum / averaged;
        model.theta = theta_sum / averaged;
    } else {
        model.phi = sampler.phi();
        model.theta = sampler.theta();
    }
    model.z = sampler.assignments();
    model.topic_word = sampler.topic_word();
    model.doc_topic = sampler.doc_topic();
    model.topic_totals = sampler.topic_totals();
    return model;
}

Eigen::VectorXd fold_in(const std::vector<int>& doc, const TopicModel& model, int sweeps, std::uint64_t seed) {
    const int K = model.topics();
    const double alpha = model.alpha();
    std::vector<int> words;
    for (int w : doc) {
        if (w >= 0 && w < model.phi.cols()) {
            words.push_back(w);
        }
    }
    if (words.empty() || sweeps <= 0) {
        return Eigen::VectorXd::Constant(K, 1.0 / K);
    }
    CounterRng rng(seed, 0xF01D);
    std::vector<int> z(words.size());
    Eigen::VectorXd n_k = Eigen::VectorXd::Zero(K);
    for (std::size_t i = 0; i < words.size(); ++i) {
        z[i] = static_cast<int>(rng.index(static_cast<std::size_t>(K)));
        n_k(z[i]) += 1.0;
    }
    std::vector<double> cdf(static_cast<std::size_t>(K));
    Eigen::VectorXd theta_sum = Eigen::VectorXd::Zero(K);
    int kept = 0;
    const double denom = static_cast<double>(words.size()) + K * alpha;
    for (int s = 0; s < sweeps; ++s) {
        for (std::size_t i = 0; i < words.size(); ++i) {
            n_k(z[i]) -= 1.0;
            double total = 0.0;
            for (int k = 0; k < K; ++k) {
                total += (n_k(k) + alpha) * model.phi(k, words[i]);
                cdf[static_cast<std::size_t>(k)] = total;
            }
            double u = rng.uniform() * total;
            int chosen = K - 1;
            for (int k = 0; k < K; ++k) {
                if (u < cdf[static_cast<std::size_t>(k)]) {
                    chosen = k;
                    break;
                }
            }
            z[i] = chosen;
            n_k(chosen) += 1.0;
        }
        if (s >= sweeps / 2) {
            theta_sum += (n_k.array() + alpha).matrix() / denom;
            ++kept;
        }
    }
    Eigen::VectorXd theta = theta_sum / kept;
    return theta / theta.sum();
}

// -- coherence --------------------------------------------------------------------

CooccurrenceIndex::CooccurrenceIndex(const TokenLists& docs, std::size_t vocab_size)
    : postings_(vocab_size), documents_(docs.size()) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (int w : docs[d]) {
            if (w < 0 || static_cast<std::size_t>(w) >= vocab_size) {
                continue;
            }
            auto& list = postings_[static_cast<std::size_t>(w)];
            if (list.empty() || list.back() != static_cast<int>(d)) {
                list.push_back(static_cast<int>(d));
            }
        }
    }
}

std::size_t CooccurrenceIndex::co_df(int a, int b) const {
    const auto& x = postings_[static_cast<std::size_t>(a)];
    const auto& y = postings_[static_cast<std::size_t>(b)];
    std::size_t i = 0, j = 0, n = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i] < y[j]) {
            ++i;
        } else if (y[j] < x[i]) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

double umass_words(const std::vector<int>& ranked, const CooccurrenceIndex& index, std::string* warning) {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < ranked.size(); ++a) {
        std::size_t da = index.df(ranked[a]);
        if (da == 0) {
            continue;
        }
        for (std::size_t b = a + 1; b < ranked.size(); ++b) {
            double co = static_cast<double>(index.co_df(ranked[a], ranked[b]));
            sum += std::log((co + 1.0) / static_cast<double>(da));
            ++pairs;
        }
    }
    if (pairs == 0) {
        if (warning) {
            *warning = "fewer than two scorable top words";
        }
        return 0.0;
    }
    return sum / static_cast<double>(pairs);
}

namespace {

std::vector<int> top_ids(const Eigen::MatrixXd& phi, int k, int m) {
    std::vector<int> ids;
    auto ranked = top_words(phi.row(k), m);
    for (const auto& [w, p] : ranked[0]) {
        if (p > 0.0) {
            ids.push_back(w);
        }
    }
    return ids;
}

void finish(CoherenceScore& score) {
    score.mean = score.per_topic.empty()
                     ? 0.0
                     : std::accumulate(score.per_topic.begin(), score.per_topic.end(), 0.0) /
                           static_cast<double>(score.per_topic.size());
}

} // namespace

CoherenceScore umass_coherence(const TopicModel& model, int top_m, const TokenLists& docs) {
    CooccurrenceIndex index(docs, static_cast<std::size_t>(model.phi.cols()));
    CoherenceScore score;
    for (int k = 0; k < model.topics(); ++k) {
        auto ids = top_ids(model.phi, k, top_m);
        std::string warning;
        double s = ids.size() < 2 ? 0.0 : umass_words(ids, index, &warning);
        if (ids.size() < 2) {
            warning = "fewer than two top words with nonzero probability";
        }
        if (!warning.empty()) {
            score.warnings.push_back(fmt::format("topic {}: {}", k, warning));
        }
        score.per_topic.push_back(s);
    }
    finish(score);
    return score;
}

CoherenceScore npmi_coherence(const TopicModel& model, int top_m, const TokenLists& docs, int window) {
    if (window < 1) {
        throw UsageError("NPMI window must be positive");
    }
    const auto V = static_cast<std::size_t>(model.phi.cols());
    // Window-occurrence postings: one "virtual document" per sliding window.
    TokenLists windows;
    for (const auto& doc : docs) {
        auto w = static_cast<std::size_t>(window);
        if (doc.size() <= w) {
            windows.push_back(doc);
            continue;
        }
        for (std::size_t start = 0; start + w <= doc.size(); ++start) {
            windows.emplace_back(doc.begin() + static_cast<std::ptrdiff_t>(start),
                                 doc.begin() + static_cast<std::ptrdiff_t>(start + w));
        }
    }
    CooccurrenceIndex index(windows, V);
    const double n = static_cast<double>(std::max<std::size_t>(windows.size(), 1));

    CoherenceScore score;
    for (int k = 0; k < model.topics(); ++k) {
        auto ids = top_ids(model.phi, k, top_m);
        double sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < ids.size(); ++a) {
            for (std::size_t b = a + 1; b < ids.size(); ++b) {
                double pa = index.df(ids[a]) / n;
                double pb = index.df(ids[b]) / n;
                double pab = index.co_df(ids[a], ids[b]) / n;
                double v;
                if (pab <= 0.0) {
                    v = -1.0;
                } else if (pab >= 1.0) {
                    v = 1.0;
                } else {
                    v = std::log(pab / (pa * pb)) / -std::log(pab);
                }
                sum += v;
                ++pairs;
            }
        }
        if (pairs == 0) {
            score.warnings.push_back(fmt::format("topic {}: fewer than two top words with nonzero probability", k));
        }
        score.per_topic.push_back(pairs ? sum / static_cast<double>(pairs) : 0.0);
    }
    finish(score);
    return score;
}

// -- perplexity -------------------------------------------------------------------

double log_likelihood_per_word(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& theta, const TokenLists& docs) {
    if (theta.rows() != static_cast<Eigen::Index>(docs.size()) || theta.cols() != phi.rows()) {
        throw UsageError("theta must have one row per document and K columns");
    }
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (int w : docs[d]) {
            if (w < 0 || w >= phi.cols()) {
                continue;
            }
            total += std::log(theta.row(static_cast<Eigen::Index>(d)).dot(phi.col(w)));
            ++n;
        }
    }
    if (n == 0) {
        throw DataError("no held-out token is in the vocabulary");
    }
    return total / static_cast<double>(n);
}

double log_perplexity(const TopicModel& model, const TokenLists& heldout, int fold_in_sweeps, std::uint64_t seed) {
    Eigen::MatrixXd theta(static_cast<Eigen::Index>(heldout.size()), model.topics());
    for (std::size_t d = 0; d < heldout.size(); ++d) {
        theta.row(static_cast<Eigen::Index>(d)) = fold_in(heldout[d], model, fold_in_sweeps, derive_seed(seed, d)).transpose();
    }
    return log_likelihood_per_word(model.phi, theta, heldout);
}

// -- selection --------------------------------------------------------------------

SelectionReport sweep_k(const TokenLists& docs, std::size_t vocab_size, const std::vector<int>& ks,
                        const LdaConfig& config_template, const SweepOptions& options) {
    if (ks.empty()) {
        throw UsageError("topic-count range is empty");
    }
    SelectionReport report;
    report.rule = options.metric == CoherenceMetric::umass ? "max-umass-coherence;ties-smallest-k"
                                                           : "max-npmi-coherence;ties-smallest-k";
    std::vector<int> sorted = ks;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    const TokenLists& heldout = options.heldout ? *options.heldout : docs;
    for (int k : sorted) {
        LdaConfig cfg = config_template;
        cfg.topics = k;
        cfg.seed = derive_seed(config_template.seed, static_cast<std::uint64_t>(k));
        auto model = fit_lda(docs, vocab_size, cfg);
        SweepEntry entry;
        entry.topics = k;
        entry.coherence = options.metric == CoherenceMetric::umass ? umass_coherence(model, options.top_m, docs).mean
                                                                   : npmi_coherence(model, options.top_m, docs).mean;
        entry.log_perplexity = log_perplexity(model, heldout, options.fold_in_sweeps, cfg.seed);
        report.entries.push_back(entry);
    }
    const SweepEntry* best = &report.entries.front();
    for (const auto& e : report.entries) {
        if (e.coherence > best->coherence) {
            best = &e;
        }
    }
    report.chosen_topics = best->topics;
    return report;
}

std::vector<std::vector<std::pair<int, double>>> top_words(const Eigen::MatrixXd& phi, int m) {
    std::vector<std::vector<std::pair<int, double>>> out;
    const auto V = static_cast<int>(phi.cols());
    const int take = std::clamp(m, 0, V);
    for (Eigen::Index k = 0; k < phi.rows(); ++k) {
        std::vector<int> ids(static_cast<std::size_t>(V));
        std::iota(ids.begin(), ids.end(), 0);
        std::partial_sort(ids.begin(), ids.begin() + take, ids.end(), [&](int a, int b) {
            if (phi(k, a) != phi(k, b)) {
                return phi(k, a) > phi(k, b);
            }
            return a < b;
        });
        std::vector<std::pair<int, double>> row;
        for (int r = 0; r < take; ++r) {
            row.emplace_back(ids[static_cast<std::size_t>(r)], phi(k, ids[static_cast<std::size_t>(r)]));
        }
        out.push_back(std::move(row));
    }
    return out;
}

// -- serialization ----------------------------------------------------------------


nlohmann::json model_to_json(const TopicModel& model) {
    nlohmann::json j;
    j["format"] = "newsmon-lda";
    j["version"] = 1;
    j["config"] = to_json(model.config);
    j["vocab_size"] = model.vocab_size;
    j["vocab_hash"] = model.vocab_hash;
    j["phi"] = jsonio::matrix(model.phi);
    j["theta"] = jsonio::matrix(model.theta);
    return j;
}

TopicModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "newsmon-lda" || j.value("version", 0) != 1) {
        throw DataError("not a version-1 newsmon LDA model");
    }
    TopicModel m;
    m.config = lda_config_from_json(j.at("config"));
    m.vocab_size = j.at("vocab_size").get<std::size_t>();
    m.vocab_hash = j.value("vocab_hash", "");
    m.phi = jsonio::to_matrix(j.at("phi"), static_cast<Eigen::Index>(m.vocab_size));
    m.theta = jsonio::to_matrix(j.at("theta"), m.phi.rows());
    return m;
}

void save_model(const TopicModel& model, const std::string& path) {
    jsonio::write_file(model_to_json(model), path);
}

TopicModel load_model(const std::string& path) {
    return model_from_json(jsonio::read_file(path, "model"));
}

} // namespace newsmon
