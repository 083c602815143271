#include "newsmon/dtm.hpp"

#include "newsmon/corpus.hpp"
#include "newsmon/csv.hpp"
#include "newsmon/error.hpp"
#include "newsmon/jsonio.hpp"
#include "newsmon/textprep.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace newsmon {

void DtmConfig::validate() const {
    if (topics < 1) {
        throw UsageError("DTM needs at least one topic");
    }
    if (!(alpha_value() > 0.0) || !(beta > 0.0)) {
        throw UsageError("alpha and beta must be positive");
    }
    if (!(kappa >= 0.0)) {
        throw UsageError("coupling mass kappa must be >= 0");
    }
    if (iterations < 1) {
        throw UsageError("DTM needs at least one sweep per slice");
    }
}

nlohmann::json to_json(const DtmConfig& c) {
    return {{"topics", c.topics}, {"alpha", c.alpha_value()}, {"beta", c.beta},
            {"kappa", c.kappa},   {"iterations", c.iterations}, {"seed", c.seed}};
}

DtmConfig dtm_config_from_json(const nlohmann::json& j) {
    DtmConfig c;
    c.topics = j.at("topics").get<int>();
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.kappa = j.at("kappa").get<double>();
    c.iterations = j.at("iterations").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

std::vector<std::vector<std::size_t>> slice_by_week(const Corpus& corpus) {
    std::vector<std::vector<std::size_t>> slices(static_cast<std::size_t>(corpus.week_count()));
    const auto& articles = corpus.articles();
    for (std::size_t i = 0; i < articles.size(); ++i) {
        slices[static_cast<std::size_t>(corpus.week_of(articles[i]))].push_back(i);
    }
    return slices;
}

std::vector<TokenLists> slice_tokens(std::span<const TokenizedDoc> docs, int weeks) {
    int count = weeks;
    if (count <= 0) {
        for (const auto& d : docs) {
            count = std::max(count, d.week + 1);
        }
    }
    std::vector<TokenLists> slices(static_cast<std::size_t>(std::max(count, 0)));
    for (const auto& d : docs) {
        if (d.week < 0 || d.week >= count) {
            throw DataError(fmt::format("document {} has week {} outside 0..{}", d.article_id, d.week, count - 1));
        }
        slices[static_cast<std::size_t>(d.week)].push_back(d.tokens);
    }
    return slices;
}

namespace {

std::size_t token_count(const TokenLists& docs) {
    std::size_t n = 0;
    for (const auto& d : docs) {
        n += d.size();
    }
    return n;
}

} // namespace

DtmModel fit_dtm(const std::vector<TokenLists>& slices, std::size_t vocab_size, const DtmConfig& config) {
    config.validate();
    const int K = config.topics;
    const double alpha = config.alpha_value();

    auto first = std::find_if(slices.begin(), slices.end(), [](const TokenLists& s) { return token_count(s) > 0; });
    if (first == slices.end()) {
        throw DataError("dynamic topic model needs at least one slice with tokens");
    }
    std::set<int> distinct;
    for (const auto& doc : *first) {
        distinct.insert(doc.begin(), doc.end());
    }
    if (static_cast<std::size_t>(K) > distinct.size()) {
        throw DataError(fmt::format("K = {} exceeds the {} distinct words of the first slice", K, distinct.size()));
    }

    DtmModel model;
    model.config = config;
    model.config.alpha = alpha;
    model.vocab_size = vocab_size;
    model.phi.resize(slices.size());
    model.prevalence.resize(slices.size());
    const auto first_index = static_cast<std::size_t>(first - slices.begin());

    std::optional<Eigen::MatrixXd> previous;
    for (std::size_t t = first_index; t < slices.size(); ++t) {
        const auto& docs = slices[t];
        if (token_count(docs) == 0) {
            model.phi[t] = *previous;
            continue;
        }
        const auto seed = derive_seed(config.seed, t);
        auto sampler = (!previous || config.kappa == 0.0)
                           ? GibbsSampler(docs, vocab_size, K, alpha, config.beta, seed)
                           : GibbsSampler(docs, vocab_size, K, alpha,
                                          (config.kappa * previous->array() + config.beta).matrix(), seed);
        for (int it = 0; it < config.iterations; ++it) {
            sampler.sweep();
        }
        model.phi[t] = sampler.phi();
        Eigen::VectorXd totals = sampler.topic_totals().cast<double>();
        model.prevalence[t] = totals / totals.sum();
        previous = model.phi[t];
    }
    for (std::size_t t = 0; t < first_index; ++t) {
        model.phi[t] = model.phi[first_index];
    }
    model.weeks.resize(slices.size());
    for (std::size_t t = 0; t < slices.size(); ++t) {
        model.weeks[t] = static_cast<int>(t);
    }
    return model;
}

std::vector<std::optional<double>> topic_trajectory(const DtmModel& model, int k) {
    if (k < 0 || k >= model.topics()) {
        throw UsageError(fmt::format("topic {} out of range", k));
    }
    std::vector<std::optional<double>> out;
    for (const auto& p : model.prevalence) {
        out.push_back(p ? std::optional<double>((*p)(k)) : std::nullopt);
    }
    return out;
}

std::string prevalence_csv(const DtmModel& model) {
    std::string out = "topic,week,prevalence\n";
    for (int k = 0; k < model.topics(); ++k) {
        auto traj = topic_trajectory(model, k);
        for (std::size_t t = 0; t < traj.size(); ++t) {
            out += fmt::format("{},{},{}\n", k, model.weeks[t], csv::real(traj[t]));
        }
    }
    return out;
}

std::string top_words_csv(const DtmModel& model, const Vocabulary& vocab, int m) {
    if (vocab.size() != model.vocab_size) {
        throw DataError("vocabulary does not match the dynamic model");
    }
    std::string out = "topic,week,rank,word,probability\n";
    std::vector<std::vector<std::vector<std::pair<int, double>>>> per_slice;
    for (const auto& phi : model.phi) {
        per_slice.push_back(top_words(phi, m));
    }
    for (int k = 0; k < model.topics(); ++k) {
        for (std::size_t t = 0; t < per_slice.size(); ++t) {
            const auto& row = per_slice[t][static_cast<std::size_t>(k)];
            for (std::size_t r = 0; r < row.size(); ++r) {
                out += fmt::format("{},{},{},{},{}\n", k, model.weeks[t], r + 1, csv::escape(vocab.word(row[r].first)),
                                   csv::real(row[r].second));
            }
        }
    }
    return out;
}

nlohmann::json dtm_to_json(const DtmModel& model) {
    nlohmann::json j;
    j["format"] = "newsmon-dtm";
    j["version"] = 1;
    j["config"] = to_json(model.config);
    j["vocab_size"] = model.vocab_size;
    j["vocab_hash"] = model.vocab_hash;
    j["weeks"] = model.weeks;
    nlohmann::json slices = nlohmann::json::array();
    for (std::size_t t = 0; t < model.phi.size(); ++t) {
        nlohmann::json s;
        s["phi"] = jsonio::matrix(model.phi[t]);
        s["prevalence"] = model.prevalence[t] ? jsonio::vector(*model.prevalence[t]) : nlohmann::json();
        slices.push_back(s);
    }
    j["slices"] = slices;
    return j;
}

DtmModel dtm_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "newsmon-dtm" || j.value("version", 0) != 1) {
        throw DataError("not a version-1 newsmon dynamic topic model");
    }
    DtmModel m;
    m.config = dtm_config_from_json(j.at("config"));
    m.vocab_size = j.at("vocab_size").get<std::size_t>();
    m.vocab_hash = j.value("vocab_hash", "");
    m.weeks = j.at("weeks").get<std::vector<int>>();
    for (const auto& s : j.at("slices")) {
        m.phi.push_back(jsonio::to_matrix(s.at("phi"), static_cast<Eigen::Index>(m.vocab_size)));
        const auto& p = s.at("prevalence");
        m.prevalence.push_back(p.is_null() ? std::nullopt : std::optional<Eigen::VectorXd>(jsonio::to_vector(p)));
    }
    if (m.weeks.size() != m.phi.size()) {
        throw DataError("dynamic model has mismatched slice and week lists");
    }
    return m;
}

void save_dtm(const DtmModel& model, const std::string& path) {
    jsonio::write_file(dtm_to_json(model), path);
}

DtmModel load_dtm(const std::string& path) {
    return dtm_from_json(jsonio::read_file(path, "dynamic model"));
}

} // namespace newsmon
