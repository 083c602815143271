#include "newsmon/config.hpp"

#include "newsmon/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace newsmon {

namespace fs = std::filesystem;

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"run.seed", "1", "global seed (MONITOR_SEED overrides the config file value)"},
        {"run.corpus", "data/mini_corpus.jsonl", "input corpus, .jsonl or .csv"},
        {"run.resources", "resources", "directory with stopwords.txt, suffixes.txt, lemma_overrides.tsv, gazetteer_bd.csv"},
        {"run.output", "out", "output directory for the report bundle"},
        {"run.skip", "", "comma separated stages to skip: ingest, prep, volume, decompose, topics, dtm, classify, "
                         "sentiment, eval, geo, report"},
        {"run.embeddings", "", "word2vec text file for both networks; empty draws random vectors"},
        {"prep.min_letters", "6", "drop tokens with fewer letters"},
        {"prep.max_vocab", "0", "keep only the most frequent words (0 keeps all)"},
        {"prep.max_doc_len", "0", "truncate token streams (0 keeps all)"},
        {"prep.fields", "body", "comma separated article fields to analyse: title, body, summary"},
        {"prep.lowercase", "true", "fold case before filtering"},
        {"split.train", "0.8", "train share of each labeled subset"},
        {"split.validation", "0.1", "validation share"},
        {"split.test", "0.1", "test share"},
        {"decompose.model", "multiplicative", "additive or multiplicative"},
        {"decompose.period", "7", "season length in days"},
        {"decompose.offset", "1", "added before a multiplicative fit so zero days are admissible"},
        {"decompose.refine", "true", "iterate trend and seasonal estimates to a fixed point"},
        {"topics.k_min", "2", "smallest K in the sweep"},
        {"topics.k_max", "12", "largest K in the sweep"},
        {"topics.k", "0", "topics of the fitted model (0 takes the K chosen by the sweep)"},
        {"topics.alpha", "0", "doc-topic prior (0 means 50 / K)"},
        {"topics.beta", "0.01", "topic-word prior"},
        {"topics.iterations", "1000", "Gibbs sweeps"},
        {"topics.burn_in", "200", "sweeps discarded before averaging"},
        {"topics.average", "false", "average post-burn-in estimates instead of using the last sweep"},
        {"topics.top_m", "10", "top words per topic scored for coherence"},
        {"topics.metric", "umass", "coherence used to choose K: umass or npmi"},
        {"topics.fold_in_sweeps", "50", "sweeps per held-out document for perplexity"},
        {"topics.top_words", "15", "words per topic in top_words.csv"},
        {"dtm.topics", "0", "topics per slice (0 reuses the static model's K)"},
        {"dtm.alpha", "0", "doc-topic prior (0 means 50 / K)"},
        {"dtm.beta", "0.01", "base topic-word prior"},
        {"dtm.kappa", "50", "pseudo-count mass carried from the previous week's topics"},
        {"dtm.iterations", "1000", "Gibbs sweeps per weekly slice"},
        {"dtm.top_words", "10", "words per topic and week in top_words.csv"},
        {"classify.label", "class", "label to learn: class, subclass or topic (LDA argmax)"},
        {"classify.embedding_dim", "300", "embedding width"},
        {"classify.hidden", "100", "LSTM units"},
        {"classify.max_len", "1000", "tokens kept per document"},
        {"classify.vocab_cap", "50000", "network vocabulary size including pad and unknown"},
        {"classify.batch", "32", "mini-batch size"},
        {"classify.epochs", "5", "training epochs"},
        {"classify.learning_rate", "0.001", "Adam step size"},
        {"sentiment.embedding_dim", "300", "embedding width"},
        {"sentiment.filters", "200", "convolution filters"},
        {"sentiment.conv_width", "3", "convolution window"},
        {"sentiment.pool", "2", "max-pool size"},
        {"sentiment.hidden", "100", "units per BiLSTM direction"},
        {"sentiment.dense", "64", "hidden dense units"},
        {"sentiment.dropout", "0.5", "dropout after each BiLSTM"},
        {"sentiment.l2", "0.0001", "L2 weight on kernels"},
        {"sentiment.max_len", "200", "tokens kept per document"},
        {"sentiment.vocab_cap", "60000", "network vocabulary size including pad and unknown"},
        {"sentiment.batch", "256", "mini-batch size"},
        {"sentiment.epochs", "5", "training epochs"},
        {"sentiment.learning_rate", "0.001", "Adam step size"},
        {"eval.averaging", "macro", "headline averaging: macro, micro or binary"},
        {"geo.level", "division", "region level of the grids: district or division"},
        {"geo.gazetteer", "", "district table (empty: gazetteer_bd.csv in run.resources)"},
        {"geo.argmax", "false", "count each article once under its top topic instead of spreading theta"},
    };
    return keys;
}

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool known(const std::string& key) {
    const auto& keys = config_keys();
    return std::any_of(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == key; });
}

} // namespace

RunConfig::RunConfig() {
    for (const auto& k : config_keys()) {
        values_[std::string(k.name)] = std::string(k.default_value);
    }
}

void RunConfig::merge_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read config file " + path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    merge_text(text.str(), path);
}

void RunConfig::merge_text(std::string_view text, const std::string& origin) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        auto stripped = trim(line);
        if (stripped.empty()) {
            continue;
        }
        auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw UsageError(fmt::format("{}:{}: expected 'key = value'", origin, line_no));
        }
        auto key = trim(std::string_view(stripped).substr(0, eq));
        auto value = trim(std::string_view(stripped).substr(eq + 1));
        if (!known(key)) {
            throw UsageError(fmt::format("{}:{}: unknown key '{}'", origin, line_no, key));
        }
        values_[key] = value;
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!known(key)) {
        throw UsageError("unknown config key '" + key + "'");
    }
    values_[key] = trim(value);
}

void RunConfig::apply_environment() {
    if (const char* seed = std::getenv("MONITOR_SEED"); seed != nullptr && *seed != '\0') {
        set("run.seed", seed);
        (void)this->seed();  // reject junk early
    }
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw UsageError("unknown config key '" + key + "'");
    }
    return it->second;
}

int RunConfig::get_int(const std::string& key) const {
    const auto& v = get(key);
    int out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw UsageError(fmt::format("{} must be an integer, got '{}'", key, v));
    }
    return out;
}

double RunConfig::get_double(const std::string& key) const {
    const auto& v = get(key);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw UsageError(fmt::format("{} must be a number, got '{}'", key, v));
    }
    return out;
}

bool RunConfig::get_bool(const std::string& key) const {
    const auto& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    throw UsageError(fmt::format("{} must be true or false, got '{}'", key, v));
}

std::uint64_t RunConfig::seed() const {
    const auto& v = get("run.seed");
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw UsageError("run.seed must be a non-negative integer, got '" + v + "'");
    }
    return out;
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::string_view v = get(key);
    std::size_t pos = 0;
    while (pos <= v.size()) {
        auto end = v.find(',', pos);
        if (end == std::string_view::npos) {
            end = v.size();
        }
        auto item = trim(v.substr(pos, end - pos));
        if (!item.empty()) {
            out.push_back(item);
        }
        pos = end + 1;
    }
    return out;
}

std::string RunConfig::gazetteer_path() const {
    const auto& g = get("geo.gazetteer");
    return g.empty() ? (fs::path(resources_dir()) / "gazetteer_bd.csv").string() : g;
}

void RunConfig::validate() const {
    // Parse every typed key once so junk surfaces before any stage runs.
    (void)seed();
    for (const char* k : {"prep.min_letters", "prep.max_vocab", "prep.max_doc_len", "decompose.period",
                          "topics.k_min", "topics.k_max", "topics.k", "topics.iterations", "topics.burn_in",
                          "topics.top_m", "topics.fold_in_sweeps", "topics.top_words", "dtm.topics",
                          "dtm.iterations", "dtm.top_words", "classify.embedding_dim", "classify.hidden",
                          "classify.max_len", "classify.vocab_cap", "classify.batch", "classify.epochs",
                          "sentiment.embedding_dim", "sentiment.filters", "sentiment.conv_width", "sentiment.pool",
                          "sentiment.hidden", "sentiment.dense", "sentiment.max_len", "sentiment.vocab_cap",
                          "sentiment.batch", "sentiment.epochs"}) {
        if (get_int(k) < 0) {
            throw UsageError(std::string(k) + " must not be negative");
        }
    }
    for (const char* k : {"split.train", "split.validation", "split.test", "decompose.offset", "topics.alpha",
                          "topics.beta", "dtm.alpha", "dtm.beta", "dtm.kappa", "classify.learning_rate",
                          "sentiment.dropout", "sentiment.l2", "sentiment.learning_rate"}) {
        if (get_double(k) < 0.0) {
            throw UsageError(std::string(k) + " must not be negative");
        }
    }
    for (const char* k : {"prep.lowercase", "decompose.refine", "topics.average", "geo.argmax"}) {
        (void)get_bool(k);
    }
    double ratio_sum = get_double("split.train") + get_double("split.validation") + get_double("split.test");
    if (std::abs(ratio_sum - 1.0) > 1e-9) {
        throw UsageError("split ratios must sum to 1");
    }
    if (get_int("topics.k_min") < 2 || get_int("topics.k_max") < get_int("topics.k_min")) {
        throw UsageError("topic sweep needs 2 <= topics.k_min <= topics.k_max");
    }
    if (get_int("topics.k") == 1 || get_int("dtm.topics") == 1) {
        throw UsageError("a topic model needs at least 2 topics");
    }
    static const std::vector<std::string> stages = {"ingest", "prep", "volume", "decompose", "topics", "dtm",
                                                    "classify", "sentiment", "eval", "geo", "report"};
    for (const auto& s : get_list("run.skip")) {
        if (std::find(stages.begin(), stages.end(), s) == stages.end()) {
            throw UsageError("run.skip names unknown stage '" + s + "'");
        }
    }
    for (const auto& f : get_list("prep.fields")) {
        if (f != "title" && f != "body" && f != "summary") {
            throw UsageError("prep.fields: unknown field '" + f + "'");
        }
    }
    if (get_list("prep.fields").empty()) {
        throw UsageError("prep.fields must name at least one field");
    }
    const auto& label = get("classify.label");
    if (label != "class" && label != "subclass" && label != "topic") {
        throw UsageError("classify.label must be class, subclass or topic");
    }
    const auto& metric = get("topics.metric");
    if (metric != "umass" && metric != "npmi") {
        throw UsageError("topics.metric must be umass or npmi");
    }
    const auto& model = get("decompose.model");
    if (model != "additive" && model != "multiplicative") {
        throw UsageError("decompose.model must be additive or multiplicative");
    }
    const auto& avg = get("eval.averaging");
    if (avg != "macro" && avg != "micro" && avg != "binary") {
        throw UsageError("eval.averaging must be macro, micro or binary");
    }
    const auto& level = get("geo.level");
    if (level != "district" && level != "division") {
        throw UsageError("geo.level must be district or division");
    }

    if (!fs::is_regular_file(corpus_path())) {
        throw UsageError("corpus file not found: " + corpus_path());
    }
    if (!fs::is_directory(resources_dir())) {
        throw UsageError("resources directory not found: " + resources_dir());
    }
    if (!fs::is_regular_file(gazetteer_path())) {
        throw UsageError("gazetteer not found: " + gazetteer_path());
    }
    if (const auto& e = get("run.embeddings"); !e.empty() && !fs::is_regular_file(e)) {
        throw UsageError("embeddings file not found: " + e);
    }
    std::error_code ec;
    fs::create_directories(output_dir(), ec);
    if (ec || !fs::is_directory(output_dir())) {
        throw UsageError("output directory is not writable: " + output_dir());
    }
    auto probe = fs::path(output_dir()) / ".write-probe";
    {
        std::ofstream out(probe);
        if (!out) {
            throw UsageError("output directory is not writable: " + output_dir());
        }
    }
    fs::remove(probe, ec);
}

std::string RunConfig::snapshot() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        if (k != "run.output") {
            out += k + " = " + v + "\n";
        }
    }
    return out;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : values_) {
        if (k != "run.output") {
            j[k] = v;
        }
    }
    return j;
}

} // namespace newsmon
