#include "newsmon/pipeline.hpp"

#include "newsmon/csv.hpp"
#include "newsmon/dtm.hpp"
#include "newsmon/error.hpp"
#include "newsmon/geo.hpp"
#include "newsmon/jsonio.hpp"
#include "newsmon/metrics.hpp"
#include "newsmon/report.hpp"
#include "newsmon/rng.hpp"
#include "newsmon/topics.hpp"
#include "newsmon/tsdecomp.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace newsmon {

namespace fs = std::filesystem;

namespace {

// Sub-seeds per stage, so skipping one stage never shifts another's draws.
constexpr std::uint64_t kSplitTag = 0x5b11;
constexpr std::uint64_t kTopicsTag = 0x70b1;
constexpr std::uint64_t kHeldoutTag = 0x4e1d;
constexpr std::uint64_t kDtmTag = 0xd7a1;
constexpr std::uint64_t kClassifyTag = 0xc1a5;
constexpr std::uint64_t kSentimentTag = 0x5e17;

constexpr const char* kWeekdays[] = {"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};

void write_text(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw DataError("write failed: " + path);
    }
}

std::string csv_text(const std::vector<csv::Row>& rows) {
    std::ostringstream out;
    for (const auto& r : rows) {
        csv::write_row(out, r);
    }
    return out.str();
}

std::string utc_now() {
    auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", now);
}

std::vector<std::string> label_names(LabelKind kind, int topics) {
    std::vector<std::string> names;
    switch (kind) {
    case LabelKind::class_label:
        for (auto n : kClassNames) {
            names.emplace_back(n);
        }
        break;
    case LabelKind::subclass:
        for (int i = 1; i <= kSubclassCount; ++i) {
            names.push_back(fmt::format("subclass_{}", i));
        }
        break;
    case LabelKind::sentiment:
        names = {"negative", "positive"};
        break;
    case LabelKind::topic:
        for (int k = 0; k < topics; ++k) {
            names.push_back(fmt::format("topic_{}", k));
        }
        break;
    }
    return names;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& theta) {
    std::vector<int> out(static_cast<std::size_t>(theta.rows()));
    for (Eigen::Index d = 0; d < theta.rows(); ++d) {
        Eigen::Index best = 0;
        theta.row(d).maxCoeff(&best);  // first maximum on ties
        out[static_cast<std::size_t>(d)] = static_cast<int>(best);
    }
    return out;
}

} // namespace

const std::vector<std::string>& pipeline_stages() {
    static const std::vector<std::string> stages = {"ingest", "prep", "volume", "decompose", "topics", "dtm",
                                                    "classify", "sentiment", "eval", "geo", "report"};
    return stages;
}

PrepConfig prep_config(const RunConfig& config) {
    auto prep = PrepConfig::from_directory(config.resources_dir());
    prep.set_min_letters(static_cast<std::size_t>(config.get_int("prep.min_letters")));
    if (int v = config.get_int("prep.max_vocab"); v > 0) {
        prep.max_vocab = static_cast<std::size_t>(v);
    }
    if (int v = config.get_int("prep.max_doc_len"); v > 0) {
        prep.max_doc_len = static_cast<std::size_t>(v);
    }
    prep.lowercase = config.get_bool("prep.lowercase");
    prep.fields = TextFields{false, false, false};
    for (const auto& f : config.get_list("prep.fields")) {
        if (f == "title") {
            prep.fields.title = true;
        } else if (f == "body") {
            prep.fields.body = true;
        } else if (f == "summary") {
            prep.fields.summary = true;
        }
    }
    return prep;
}

Pipeline::Pipeline(RunConfig config, std::ostream& log) : config_(std::move(config)), log_(log) {
    config_.validate();
}

std::string Pipeline::output(const std::string& relative) const {
    auto path = fs::path(config_.output_dir()) / relative;
    fs::create_directories(path.parent_path());
    return path.string();
}

void Pipeline::stage(const std::string& name, const std::function<void()>& body) {
    records_.push_back({name, "done", {}, utc_now(), 0.0});
    auto t0 = std::chrono::steady_clock::now();
    auto finish = [&](const char* status) {
        records_.back().status = status;
        records_.back().seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    log_ << "[" << name << "] start\n";
    try {
        body();
    } catch (const StageError&) {
        finish("failed");
        throw;
    } catch (const DataError& e) {
        finish("failed");
        throw DataError("[" + name + "] " + e.what());
    } catch (const UsageError& e) {
        finish("failed");
        throw UsageError("[" + name + "] " + e.what());
    } catch (const std::exception& e) {
        finish("failed");
        throw StageError(name, e.what());
    }
    finish(records_.back().status == "skipped" ? "skipped" : "done");
    log_ << fmt::format("[{}] {} in {:.1f}s\n", name, records_.back().status, records_.back().seconds);
}

void Pipeline::notice(const std::string& message) {
    records_.back().notices.push_back(message);
    log_ << "[" << records_.back().stage << "] notice: " << message << "\n";
}

void Pipeline::skip(const std::string& message) {
    notice(message);
    records_.back().status = "skipped";
}

Corpus Pipeline::load_ingested() const {
    auto path = fs::path(config_.output_dir()) / "ingest" / "corpus.jsonl";
    if (!fs::exists(path)) {
        throw StageError(records_.empty() ? "load" : records_.back().stage,
                         "missing " + path.string() + "; run the ingest stage first");
    }
    return load_corpus(path.string(), CorpusFormat::jsonl).corpus;
}

PreparedCorpus Pipeline::load_prepared() const {
    auto dir = fs::path(config_.output_dir()) / "prep";
    if (!fs::exists(dir / "vocab.tsv") || !fs::exists(dir / "tokens.jsonl")) {
        throw StageError(records_.empty() ? "load" : records_.back().stage,
                         "missing prep outputs in " + dir.string() + "; run the prep stage first");
    }
    PreparedCorpus p;
    p.vocab = Vocabulary::load((dir / "vocab.tsv").string());
    p.docs = load_tokens((dir / "tokens.jsonl").string());
    return p;
}

// -- ingest -------------------------------------------------------------------

void Pipeline::ingest() {
    stage("ingest", [&] {
        const auto& path = config_.corpus_path();
        auto result = load_corpus(path, format_from_path(path));
        save_jsonl(result.corpus, output("ingest/corpus.jsonl"));

        std::vector<csv::Row> rejected{{"line", "message"}};
        for (const auto& r : result.rejected) {
            rejected.push_back({std::to_string(r.line), r.message});
        }
        write_text(output("ingest/rejected.csv"), csv_text(rejected));
        if (!result.rejected.empty()) {
            notice(fmt::format("{} record(s) rejected, see ingest/rejected.csv", result.rejected.size()));
        }

        std::vector<csv::Row> sources{{"source", "articles"}};
        for (const auto& [name, n] : counts_by_source(result.corpus)) {
            sources.push_back({name, std::to_string(n)});
        }
        sources.push_back({"TOTAL", std::to_string(result.corpus.size())});
        write_text(output("ingest/sources.csv"), csv_text(sources));

        std::size_t labeled[4] = {0, 0, 0, 0};
        std::size_t english = 0;
        for (const auto& a : result.corpus.articles()) {
            labeled[0] += a.class_label.has_value();
            labeled[1] += a.subclass_label.has_value();
            labeled[2] += a.sentiment.has_value();
            labeled[3] += a.topic_label.has_value();
            english += a.language == Language::en;
        }
        nlohmann::json summary = {
            {"articles", result.corpus.size()},
            {"rejected", result.rejected.size()},
            {"first_date", result.corpus.first_date().to_string()},
            {"last_date", result.corpus.last_date().to_string()},
            {"weeks", result.corpus.week_count()},
            {"english", english},
            {"bengali", result.corpus.size() - english},
            {"labeled", {{"class", labeled[0]}, {"subclass", labeled[1]}, {"sentiment", labeled[2]},
                         {"topic", labeled[3]}}},
        };
        jsonio::write_file(summary, output("ingest/summary.json"));
        log_ << fmt::format("[ingest] {} articles, {} rejected\n", result.corpus.size(), result.rejected.size());
    });
}

// -- prep ---------------------------------------------------------------------

void Pipeline::prep() {
    stage("prep", [&] {
        auto corpus = load_ingested();
        auto gazetteer = Gazetteer::load(config_.gazetteer_path());
        auto prepared = prepare_corpus(corpus, prep_config(config_), &gazetteer);
        prepared.vocab.save(output("prep/vocab.tsv"));
        save_tokens(prepared.docs, output("prep/tokens.jsonl"));
        std::size_t empty = std::count_if(prepared.docs.begin(), prepared.docs.end(),
                                          [](const TokenizedDoc& d) { return d.tokens.empty(); });
        if (empty > 0) {
            notice(fmt::format("{} article(s) have no tokens after filtering", empty));
        }
        log_ << fmt::format("[prep] vocabulary {} words, {} tokens\n", prepared.vocab.size(),
                            prepared.vocab.total_tokens());
    });
}

// -- volume and decomposition ------------------------------------------------

void Pipeline::volume() {
    stage("volume", [&] {
        auto corpus = load_ingested();
        auto all = build_volume_series(corpus);
        auto bn = build_volume_series(corpus, [](const Article& a) { return a.language == Language::bn; });
        auto en = build_volume_series(corpus, [](const Article& a) { return a.language == Language::en; });
        std::vector<csv::Row> rows{{"date", "articles", "bn", "en"}};
        std::vector<std::string> labels;
        ChartSeries total{"all", {}};
        for (std::size_t i = 0; i < all.values.size(); ++i) {
            labels.push_back(all.date_at(i).to_string());
            rows.push_back({labels.back(), csv::real(all.values[i]), csv::real(bn.values[i]), csv::real(en.values[i])});
            total.values.emplace_back(all.values[i]);
        }
        write_text(output("volume/daily.csv"), csv_text(rows));

        std::map<std::string, std::vector<double>> by_source;
        for (const auto& [name, n] : counts_by_source(corpus)) {
            auto series = build_volume_series(corpus, [&name](const Article& a) { return a.source == name; });
            by_source[name] = series.values;
        }
        std::vector<csv::Row> source_rows{{"date"}};
        for (const auto& [name, v] : by_source) {
            source_rows[0].push_back(name);
        }
        for (std::size_t i = 0; i < all.values.size(); ++i) {
            csv::Row r{labels[i]};
            for (const auto& [name, v] : by_source) {
                r.push_back(csv::real(v[i]));
            }
            source_rows.push_back(std::move(r));
        }
        write_text(output("volume/daily_by_source.csv"), csv_text(source_rows));

        ChartSeries bengali{"bn", {bn.values.begin(), bn.values.end()}};
        ChartSeries english{"en", {en.values.begin(), en.values.end()}};
        write_text(output("volume/daily.svg"),
                   line_chart_svg("Daily article volume", labels, {total, bengali, english}, "articles per day"));
    });
}

void Pipeline::decompose() {
    stage("decompose", [&] {
        auto corpus = load_ingested();
        auto series = build_volume_series(corpus);
        DecompositionOptions options;
        options.period = config_.get_int("decompose.period");
        options.refine = config_.get_bool("decompose.refine");
        auto model = parse_decomposition_model(config_.get("decompose.model"));
        if (model == DecompositionModel::multiplicative) {
            options.offset = config_.get_double("decompose.offset");
        }
        auto d = newsmon::decompose(series.values, model, options);
        write_text(output("decompose/decomposition.csv"), decomposition_csv(d, series.start));

        std::vector<csv::Row> seasonal{{"phase", "weekday", "index"}};
        std::vector<std::string> phase_labels;
        for (int p = 0; p < d.period; ++p) {
            std::string weekday;
            if (d.period == 7) {
                auto wd = std::chrono::weekday((series.start + p).days()).c_encoding();
                weekday = kWeekdays[wd];
            }
            seasonal.push_back({std::to_string(p), weekday, csv::real(d.seasonal_indices[static_cast<std::size_t>(p)])});
            phase_labels.push_back(weekday.empty() ? std::to_string(p) : weekday);
        }
        write_text(output("decompose/seasonal.csv"), csv_text(seasonal));

        std::vector<std::string> labels;
        ChartSeries observed{"observed", {}};
        ChartSeries trend{"trend", {}};
        for (std::size_t i = 0; i < series.values.size(); ++i) {
            labels.push_back(series.date_at(i).to_string());
            observed.values.emplace_back(series.values[i]);
            // The trend lives on the offset scale; shift it back for plotting.
            trend.values.push_back(d.trend[i] ? std::optional<double>(*d.trend[i] - d.offset) : std::nullopt);
        }
        write_text(output("decompose/trend.svg"),
                   line_chart_svg("Daily volume and trend", labels, {observed, trend}, "articles per day"));
        write_text(output("decompose/seasonal.svg"),
                   bar_chart_svg("Seasonal indices (" + std::string(to_string(d.model)) + ")", phase_labels,
                                 d.seasonal_indices, "index"));
        log_ << fmt::format("[decompose] {} model, {} pass(es)\n", to_string(d.model), d.passes);
    });
}

// -- topics -------------------------------------------------------------------

namespace {

LdaConfig lda_config(const RunConfig& c, int k) {
    LdaConfig lda;
    lda.topics = k;
    if (double a = c.get_double("topics.alpha"); a > 0.0) {
        lda.alpha = a;
    }
    lda.beta = c.get_double("topics.beta");
    lda.iterations = c.get_int("topics.iterations");
    lda.burn_in = c.get_int("topics.burn_in");
    lda.average = c.get_bool("topics.average");
    lda.seed = derive_seed(c.seed(), kTopicsTag);
    return lda;
}

} // namespace

void Pipeline::topics_sweep() {
    stage("topics-sweep", [&] {
        auto prepared = load_prepared();
        auto lists = token_lists(prepared.docs);

        // Held-out documents for perplexity: the test share of a seeded split.
        std::vector<std::string> ids;
        for (const auto& d : prepared.docs) {
            ids.push_back(d.article_id);
        }
        SplitRatios ratios{config_.get_double("split.train"), config_.get_double("split.validation"),
                           config_.get_double("split.test")};
        auto split = split_dataset(ids, ratios, derive_seed(config_.seed(), kHeldoutTag));
        std::set<std::string> heldout_ids(split.test.begin(), split.test.end());
        TokenLists fit_docs;
        TokenLists heldout;
        for (std::size_t i = 0; i < lists.size(); ++i) {
            (heldout_ids.count(prepared.docs[i].article_id) ? heldout : fit_docs).push_back(lists[i]);
        }

        std::vector<int> ks;
        for (int k = config_.get_int("topics.k_min"); k <= config_.get_int("topics.k_max"); ++k) {
            ks.push_back(k);
        }
        SweepOptions options;
        options.top_m = config_.get_int("topics.top_m");
        options.metric = config_.get("topics.metric") == "npmi" ? CoherenceMetric::npmi : CoherenceMetric::umass;
        options.fold_in_sweeps = config_.get_int("topics.fold_in_sweeps");
        bool has_heldout = std::any_of(heldout.begin(), heldout.end(), [](const auto& d) { return !d.empty(); });
        if (has_heldout) {
            options.heldout = &heldout;
        } else {
            notice("no held-out tokens; perplexity is measured on the fitted documents");
        }
        auto report = sweep_k(fit_docs, prepared.vocab.size(), ks, lda_config(config_, ks.front()), options);

        std::vector<csv::Row> rows{{"topics", "coherence", "log_perplexity"}};
        std::vector<std::string> labels;
        ChartSeries coherence{config_.get("topics.metric") + " coherence", {}};
        ChartSeries perplexity{"log perplexity per word", {}};
        for (const auto& e : report.entries) {
            rows.push_back({std::to_string(e.topics), csv::real(e.coherence), csv::real(e.log_perplexity)});
            labels.push_back(std::to_string(e.topics));
            coherence.values.emplace_back(e.coherence);
            perplexity.values.emplace_back(e.log_perplexity);
        }
        write_text(output("topics/sweep.csv"), csv_text(rows));
        jsonio::write_file({{"chosen_topics", report.chosen_topics},
                            {"rule", report.rule},
                            {"metric", config_.get("topics.metric")},
                            {"fitted_documents", fit_docs.size()},
                            {"heldout_documents", heldout.size()}},
                           output("topics/selection.json"));
        write_text(output("topics/sweep_coherence.svg"),
                   line_chart_svg("Topic coherence by K", labels, {coherence}, "coherence"));
        write_text(output("topics/sweep_perplexity.svg"),
                   line_chart_svg("Held-out log perplexity by K", labels, {perplexity}, "nats per word"));
        log_ << fmt::format("[topics-sweep] chose K = {}\n", report.chosen_topics);
    });
}

void Pipeline::topics_fit() {
    stage("topics-fit", [&] {
        int k = config_.get_int("topics.k");
        if (k == 0) {
            auto sel = fs::path(config_.output_dir()) / "topics" / "selection.json";
            if (!fs::exists(sel)) {
                throw UsageError("topics.k is 0 and no sweep result exists; run the topic sweep or set topics.k");
            }
            k = jsonio::read_file(sel.string(), "selection").at("chosen_topics").get<int>();
        }
        auto prepared = load_prepared();
        auto lists = token_lists(prepared.docs);
        auto model = fit_lda(lists, prepared.vocab.size(), lda_config(config_, k));
        model.vocab_hash = prepared.vocab.hash();
        save_model(model, output("topics/model.json"));

        int top_m = config_.get_int("topics.top_m");
        auto score = config_.get("topics.metric") == "npmi" ? npmi_coherence(model, top_m, lists)
                                                           : umass_coherence(model, top_m, lists);
        std::vector<csv::Row> coherence{{"topic", "coherence"}};
        for (std::size_t t = 0; t < score.per_topic.size(); ++t) {
            coherence.push_back({std::to_string(t), csv::real(score.per_topic[t])});
        }
        coherence.push_back({"mean", csv::real(score.mean)});
        write_text(output("topics/coherence.csv"), csv_text(coherence));
        for (const auto& w : score.warnings) {
            notice(w);
        }

        std::vector<csv::Row> doc_topics{{"id"}};
        for (int t = 0; t < k; ++t) {
            doc_topics[0].push_back(fmt::format("topic_{}", t));
        }
        doc_topics[0].push_back("top_topic");
        auto top = argmax_rows(model.theta);
        for (std::size_t d = 0; d < prepared.docs.size(); ++d) {
            csv::Row r{prepared.docs[d].article_id};
            for (int t = 0; t < k; ++t) {
                r.push_back(csv::real(model.theta(static_cast<Eigen::Index>(d), t)));
            }
            r.push_back(std::to_string(top[d]));
            doc_topics.push_back(std::move(r));
        }
        write_text(output("topics/doc_topics.csv"), csv_text(doc_topics));
        log_ << fmt::format("[topics-fit] K = {}, mean coherence {:.4f}\n", k, score.mean);
    });
    topics_top_words();
}

void Pipeline::topics_top_words() {
    stage("topics-top-words", [&] {
        auto path = fs::path(config_.output_dir()) / "topics" / "model.json";
        if (!fs::exists(path)) {
            throw StageError("topics-top-words", "missing " + path.string() + "; fit the topic model first");
        }
        auto model = load_model(path.string());
        auto vocab = Vocabulary::load((fs::path(config_.output_dir()) / "prep" / "vocab.tsv").string());
        if (vocab.hash() != model.vocab_hash) {
            throw DataError("topic model was fitted on a different vocabulary");
        }
        std::vector<csv::Row> rows{{"topic", "rank", "word", "probability"}};
        auto words = top_words(model.phi, config_.get_int("topics.top_words"));
        for (std::size_t t = 0; t < words.size(); ++t) {
            for (std::size_t r = 0; r < words[t].size(); ++r) {
                rows.push_back({std::to_string(t), std::to_string(r + 1), vocab.word(words[t][r].first),
                                csv::real(words[t][r].second)});
            }
        }
        write_text(output("topics/top_words.csv"), csv_text(rows));

        // Corpus-wide topic share, the static counterpart of the weekly prevalence.
        Eigen::VectorXd share = model.theta.colwise().mean();
        std::vector<std::string> labels;
        std::vector<double> values;
        for (Eigen::Index t = 0; t < share.size(); ++t) {
            labels.push_back(fmt::format("topic {}", t));
            values.push_back(share(t));
        }
        write_text(output("topics/topic_share.svg"), bar_chart_svg("Mean topic share", labels, values, "share"));
    });
}

// -- dynamic topics -------------------------------------------------------------

void Pipeline::dtm_fit() {
    stage("dtm-fit", [&] {
        int k = config_.get_int("dtm.topics");
        auto static_model = fs::path(config_.output_dir()) / "topics" / "model.json";
        if (k == 0) {
            if (!fs::exists(static_model)) {
                throw UsageError("dtm.topics is 0 and no static topic model exists; fit topics or set dtm.topics");
            }
            k = static_cast<int>(jsonio::read_file(static_model.string(), "topic model").at("phi").size());
        }
        auto corpus = load_ingested();
        auto prepared = load_prepared();
        DtmConfig cfg;
        cfg.topics = k;
        if (double a = config_.get_double("dtm.alpha"); a > 0.0) {
            cfg.alpha = a;
        }
        cfg.beta = config_.get_double("dtm.beta");
        cfg.kappa = config_.get_double("dtm.kappa");
        cfg.iterations = config_.get_int("dtm.iterations");
        cfg.seed = derive_seed(config_.seed(), kDtmTag);
        auto slices = slice_tokens(prepared.docs, corpus.week_count());
        auto model = fit_dtm(slices, prepared.vocab.size(), cfg);
        model.vocab_hash = prepared.vocab.hash();
        save_dtm(model, output("dtm/model.json"));
        auto empty = std::count_if(model.prevalence.begin(), model.prevalence.end(),
                                   [](const auto& p) { return !p.has_value(); });
        if (empty > 0) {
            notice(fmt::format("{} week(s) without tokens carry the previous topics forward", empty));
        }
        log_ << fmt::format("[dtm-fit] K = {}, {} weekly slices\n", k, model.slices());
    });
    dtm_export();
}

void Pipeline::dtm_export() {
    stage("dtm-export", [&] {
        auto path = fs::path(config_.output_dir()) / "dtm" / "model.json";
        if (!fs::exists(path)) {
            throw StageError("dtm-export", "missing " + path.string() + "; fit the dynamic model first");
        }
        auto model = load_dtm(path.string());
        auto vocab = Vocabulary::load((fs::path(config_.output_dir()) / "prep" / "vocab.tsv").string());
        if (vocab.hash() != model.vocab_hash) {
            throw DataError("dynamic model was fitted on a different vocabulary");
        }
        write_text(output("dtm/prevalence.csv"), prevalence_csv(model));
        write_text(output("dtm/top_words.csv"), top_words_csv(model, vocab, config_.get_int("dtm.top_words")));

        std::vector<std::string> labels;
        for (int w : model.weeks) {
            labels.push_back(fmt::format("week {}", w));
        }
        std::vector<ChartSeries> series;
        for (int k = 0; k < model.topics(); ++k) {
            series.push_back({fmt::format("topic {}", k), topic_trajectory(model, k)});
        }
        write_text(output("dtm/prevalence.svg"),
                   line_chart_svg("Weekly topic prevalence", labels, series, "share of tokens"));
    });
}

// -- networks -----------------------------------------------------------------

void Pipeline::train_classifier() {
    stage("classify", [&] { train_network(false); });
}

void Pipeline::train_sentiment() {
    stage("sentiment", [&] { train_network(true); });
}

void Pipeline::train_network(bool sentiment) {
    const std::string dir = sentiment ? "sentiment" : "classify";
    auto corpus = load_ingested();
    auto prep = prep_config(config_);

    LabelKind kind = sentiment ? LabelKind::sentiment : parse_label_kind(config_.get("classify.label"));
    int topics = 0;
    std::vector<std::optional<int>> labels(corpus.size());
    if (kind == LabelKind::topic) {
        auto path = fs::path(config_.output_dir()) / "topics" / "model.json";
        if (!fs::exists(path)) {
            skip("classify.label is topic but no topic model exists; classifier training skipped");
            return;
        }
        auto model = load_model(path.string());
        if (static_cast<std::size_t>(model.theta.rows()) != corpus.size()) {
            throw DataError("topic model does not match the ingested corpus");
        }
        topics = model.topics();
        auto top = argmax_rows(model.theta);
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            // Gold topic labels win over the model's argmax when present.
            labels[i] = corpus[i].topic_label ? corpus[i].topic_label : std::optional<int>(top[i]);
        }
    } else {
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            labels[i] = label_of(corpus[i], kind);
        }
    }
    std::vector<std::string> labeled_ids;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (labels[i]) {
            labeled_ids.push_back(corpus[i].id);
        }
    }
    if (labeled_ids.empty()) {
        skip(fmt::format("corpus has no {} labels; {} training skipped", to_string(kind), dir));
        return;
    }

    SplitRatios ratios{config_.get_double("split.train"), config_.get_double("split.validation"),
                       config_.get_double("split.test")};
    auto split = split_dataset(labeled_ids, ratios, derive_seed(config_.seed(), kSplitTag));
    std::map<std::string, std::string> split_of;
    for (const auto& id : split.train) split_of[id] = "train";
    for (const auto& id : split.validation) split_of[id] = "validation";
    for (const auto& id : split.test) split_of[id] = "test";

    std::vector<std::vector<std::string>> words(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        words[i] = analyze(article_text(corpus[i], prep.fields), prep);
    }
    std::vector<std::vector<std::string>> train_words;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (split_of.count(corpus[i].id) && split_of[corpus[i].id] == "train") {
            train_words.push_back(words[i]);
        }
    }
    const std::string p = sentiment ? "sentiment." : "classify.";
    auto encoder = SequenceEncoder::build(train_words, static_cast<std::size_t>(config_.get_int(p + "vocab_cap")));
    auto names = label_names(kind, topics);

    NetSpec spec;
    if (sentiment) {
        spec = sentiment_spec(encoder.size(), config_.get_int("sentiment.embedding_dim"),
                              config_.get_int("sentiment.filters"), config_.get_int("sentiment.hidden"),
                              config_.get_int("sentiment.dense"));
        spec.conv_width = config_.get_int("sentiment.conv_width");
        spec.pool = config_.get_int("sentiment.pool");
        for (auto& r : spec.recurrent) {
            r.dropout = config_.get_double("sentiment.dropout");
        }
        spec.l2 = config_.get_double("sentiment.l2");
    } else {
        spec = classifier_spec(encoder.size(), static_cast<int>(names.size()));
        spec.embedding_dim = config_.get_int("classify.embedding_dim");
        spec.recurrent.front().hidden = config_.get_int("classify.hidden");
    }
    spec.max_len = config_.get_int(p + "max_len");
    spec.batch_size = config_.get_int(p + "batch");
    spec.epochs = config_.get_int(p + "epochs");
    spec.adam.learning_rate = config_.get_double(p + "learning_rate");
    spec.seed = derive_seed(config_.seed(), sentiment ? kSentimentTag : kClassifyTag);
    spec.validate();

    Network net(spec);
    if (const auto& emb = config_.get("run.embeddings"); !emb.empty()) {
        EmbeddingStats stats;
        net.set_embeddings(load_embeddings(emb, encoder, spec.embedding_dim, spec.seed, &stats));
        notice(fmt::format("embeddings: {} words found, {} random", stats.found, stats.random));
    }

    std::vector<Example> train_set;
    std::vector<Example> validation;
    std::vector<Example> all(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        all[i] = {encoder.encode(words[i], static_cast<std::size_t>(spec.max_len)), labels[i].value_or(0)};
        auto it = split_of.find(corpus[i].id);
        if (it == split_of.end()) {
            continue;
        }
        if (it->second == "train") {
            train_set.push_back(all[i]);
        } else if (it->second == "validation") {
            validation.push_back(all[i]);
        }
    }
    auto result = train(net, train_set, validation);
    save_network(net, encoder, names, output(dir + "/model.bin"));
    write_text(output(dir + "/training_log.csv"), training_log_csv(result.log));

    // Predictions for every article; unlabeled ones are marked "none".
    auto predictions = predict_all(net, all);
    std::vector<csv::Row> rows{{"id", "split", "gold", "predicted"}};
    for (const auto& n : names) {
        rows[0].push_back("p_" + n);
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto it = split_of.find(corpus[i].id);
        csv::Row r{corpus[i].id, it == split_of.end() ? "none" : it->second,
                   labels[i] ? names[static_cast<std::size_t>(*labels[i])] : "",
                   names[static_cast<std::size_t>(predictions[i].label)]};
        for (Eigen::Index c = 0; c < predictions[i].probabilities.size(); ++c) {
            r.push_back(csv::real(predictions[i].probabilities(c)));
        }
        rows.push_back(std::move(r));
    }
    write_text(output(dir + "/predictions.csv"), csv_text(rows));

    std::vector<std::string> epochs;
    ChartSeries train_loss{"train loss", {}};
    ChartSeries val_loss{"validation loss", {}};
    ChartSeries train_acc{"train accuracy", {}};
    ChartSeries val_acc{"validation accuracy", {}};
    for (const auto& e : result.log) {
        if (e.split == "train") {
            epochs.push_back(std::to_string(e.epoch));
            train_loss.values.emplace_back(e.loss);
            train_acc.values.emplace_back(e.accuracy);
        } else {
            val_loss.values.emplace_back(e.loss);
            val_acc.values.emplace_back(e.accuracy);
        }
    }
    write_text(output(dir + "/training.svg"),
               line_chart_svg(std::string(sentiment ? "Sentiment" : "Classifier") + " training", epochs,
                              {train_loss, val_loss, train_acc, val_acc}, "loss / accuracy"));
    log_ << fmt::format("[{}] {} train / {} validation / {} test, vocabulary {}\n", dir, split.train.size(),
                        split.validation.size(), split.test.size(), encoder.size());
}

void Pipeline::evaluate() {
    stage("eval", [&] {
        bool any = false;
        for (const char* dir : {"classify", "sentiment"}) {
            if (fs::exists(fs::path(config_.output_dir()) / dir / "predictions.csv")) {
                evaluate_network(dir);
                any = true;
            }
        }
        if (!any) {
            skip("no trained model predictions to evaluate");
        }
    });
}

void Pipeline::evaluate_network(const std::string& dir) {
    auto rows = csv::read_file((fs::path(config_.output_dir()) / dir / "predictions.csv").string());
    if (rows.empty() || rows[0].size() < 5) {
        throw DataError("malformed " + dir + "/predictions.csv");
    }
    std::vector<std::string> names;
    for (std::size_t c = 4; c < rows[0].size(); ++c) {
        names.push_back(rows[0][c].substr(2));  // strip "p_"
    }
    auto index_of = [&](const std::string& n) {
        auto it = std::find(names.begin(), names.end(), n);
        if (it == names.end()) {
            throw DataError("unknown label '" + n + "' in " + dir + "/predictions.csv");
        }
        return static_cast<int>(it - names.begin());
    };
    std::vector<int> gold;
    std::vector<int> predicted;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() >= 4 && rows[r][1] == "test") {
            gold.push_back(index_of(rows[r][2]));
            predicted.push_back(index_of(rows[r][3]));
        }
    }
    if (gold.empty()) {
        notice(dir + ": test split is empty; nothing to evaluate");
        return;
    }
    auto averaging = parse_averaging(config_.get("eval.averaging"));
    auto report = newsmon::evaluate(gold, predicted, names, averaging, names.size() == 2 ? 1 : 0);
    jsonio::write_file(report_json(report), output(dir + "/evaluation.json"));
    write_text(output(dir + "/confusion.csv"), confusion_csv(report.confusion));
    auto h = report.headline();
    log_ << fmt::format("[eval] {}: accuracy {:.4f}, {} P {:.4f} R {:.4f} F1 {:.4f} on {} test articles\n", dir,
                        report.accuracy, to_string(averaging), h.precision, h.recall, h.f1, gold.size());
}

// -- geography ------------------------------------------------------------------

void Pipeline::geo() {
    stage("geo", [&] {
        auto corpus = load_ingested();
        auto gazetteer = Gazetteer::load(config_.gazetteer_path());
        auto level = parse_region_level(config_.get("geo.level"));
        bool argmax = config_.get_bool("geo.argmax");

        for (auto l : {RegionLevel::district, RegionLevel::division}) {
            std::map<std::string, double> values;
            for (const auto& [region, n] : aggregate_volume(corpus, gazetteer, l)) {
                values[region] = static_cast<double>(n);
            }
            write_text(output(fmt::format("geo/volume_{}.csv", to_string(l))), choropleth_csv(values));
            if (l == RegionLevel::division) {
                std::vector<std::string> labels;
                std::vector<double> counts;
                for (const auto& [region, v] : values) {
                    labels.push_back(region);
                    counts.push_back(v);
                }
                write_text(output("geo/volume_division.svg"),
                           bar_chart_svg("Articles by division", labels, counts, "articles"));
            }
        }

        RegionAssignment regions(corpus, gazetteer, level);
        write_text(output("geo/volume_grid.csv"), grid_csv(volume_grid(corpus, regions)));
        auto unresolved = std::count_if(corpus.articles().begin(), corpus.articles().end(), [&](const Article& a) {
            return !resolve_region(a, gazetteer).has_value();
        });
        if (unresolved > 0) {
            notice(fmt::format("{} article location(s) not in the gazetteer (row UNRESOLVED)", unresolved));
        }

        auto topic_path = fs::path(config_.output_dir()) / "topics" / "model.json";
        if (fs::exists(topic_path)) {
            auto model = load_model(topic_path.string());
            if (static_cast<std::size_t>(model.theta.rows()) != corpus.size()) {
                throw DataError("topic model does not match the ingested corpus");
            }
            std::vector<csv::Row> rows{{"region"}};
            for (int k = 0; k < model.topics(); ++k) {
                rows[0].push_back(fmt::format("topic_{}", k));
                write_text(output(fmt::format("geo/topic_{}_grid.csv", k)),
                           grid_csv(topic_mass_grid(corpus, regions, model.theta, k, argmax)));
            }
            for (const auto& [region, dist] : topic_by_region(regions, model.theta, argmax)) {
                csv::Row r{region};
                for (Eigen::Index k = 0; k < dist.size(); ++k) {
                    r.push_back(csv::real(dist(k)));
                }
                rows.push_back(std::move(r));
            }
            write_text(output("geo/topic_by_region.csv"), csv_text(rows));
        } else {
            notice("no topic model; topic grids skipped");
        }

        std::unordered_map<std::string, Sentiment> predicted;
        auto pred_path = fs::path(config_.output_dir()) / "sentiment" / "predictions.csv";
        if (fs::exists(pred_path)) {
            auto rows = csv::read_file(pred_path.string());
            for (std::size_t r = 1; r < rows.size(); ++r) {
                if (rows[r].size() >= 4) {
                    predicted[rows[r][0]] = rows[r][3] == "positive" ? Sentiment::positive : Sentiment::negative;
                }
            }
        }
        auto missing = std::count_if(corpus.articles().begin(), corpus.articles().end(), [&](const Article& a) {
            return !a.sentiment && !predicted.count(a.id);
        });
        if (missing > 0) {
            notice(fmt::format("{} article(s) have neither predicted nor gold sentiment; sentiment grids skipped",
                               missing));
        } else {
            auto grids = sentiment_grid(corpus, regions, predicted);
            write_text(output("geo/sentiment_positive_grid.csv"), grid_csv(grids.positive));
            write_text(output("geo/sentiment_negative_grid.csv"), grid_csv(grids.negative));
        }
    });
}

// -- report -------------------------------------------------------------------

void Pipeline::report() {
    stage("report", [&] {
        const fs::path root(config_.output_dir());
        nlohmann::json summary = nlohmann::json::object();
        if (fs::exists(root / "ingest" / "summary.json")) {
            summary["corpus"] = jsonio::read_file((root / "ingest" / "summary.json").string(), "summary");
        }
        if (fs::exists(root / "geo" / "volume_division.csv")) {
            auto rows = csv::read_file((root / "geo" / "volume_division.csv").string());
            double total = 0.0;
            double dhaka = 0.0;
            for (std::size_t r = 1; r < rows.size(); ++r) {
                double v = std::stod(rows[r].at(1));
                total += v;
                if (rows[r][0] == "Dhaka") {
                    dhaka = v;
                }
            }
            summary["dhaka_division_share"] = total > 0.0 ? dhaka / total : 0.0;
        }
        if (fs::exists(root / "topics" / "selection.json")) {
            summary["topic_selection"] = jsonio::read_file((root / "topics" / "selection.json").string(), "selection");
        }
        if (fs::exists(root / "topics" / "coherence.csv")) {
            auto rows = csv::read_file((root / "topics" / "coherence.csv").string());
            summary["topic_coherence_mean"] = std::stod(rows.back().at(1));
            summary["topics"] = static_cast<int>(rows.size()) - 2;
        }
        for (const char* dir : {"classify", "sentiment"}) {
            auto path = root / dir / "evaluation.json";
            if (fs::exists(path)) {
                summary["evaluation"][dir] = jsonio::read_file(path.string(), "evaluation");
            }
        }
        summary["seed"] = config_.seed();
        jsonio::write_file(summary, output("report/summary.json"));
        write_text(output("config.txt"), config_.snapshot());

        auto entries = scan_bundle(root.string(), {"manifest.json", "run_manifest.json"});
        jsonio::write_file(manifest_json(entries, config_.to_json(), config_.seed()), output("manifest.json"));
        log_ << fmt::format("[report] manifest lists {} files\n", entries.size());
    });
}

// -- orchestration --------------------------------------------------------------

void Pipeline::run_all() {
    auto skipped = config_.get_list("run.skip");
    auto wanted = [&](const std::string& s) {
        if (std::find(skipped.begin(), skipped.end(), s) == skipped.end()) {
            return true;
        }
        records_.push_back({s, "skipped", {"skipped by run.skip"}, utc_now(), 0.0});
        log_ << "[" << s << "] skipped by run.skip\n";
        return false;
    };
    try {
        if (wanted("ingest")) ingest();
        if (wanted("prep")) prep();
        if (wanted("volume")) volume();
        if (wanted("decompose")) decompose();
        if (wanted("topics")) {
            if (config_.get_int("topics.k") == 0) {
                topics_sweep();
            }
            topics_fit();
        }
        if (wanted("dtm")) dtm_fit();
        if (wanted("classify")) train_classifier();
        if (wanted("sentiment")) train_sentiment();
        if (wanted("eval")) evaluate();
        if (wanted("geo")) geo();
        if (wanted("report")) report();
    } catch (...) {
        write_run_manifest();
        throw;
    }
    write_run_manifest();
}

void Pipeline::write_run_manifest() const {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& r : records_) {
        stages.push_back({{"stage", r.stage},
                          {"status", r.status},
                          {"started", r.started},
                          {"seconds", r.seconds},
                          {"notices", r.notices}});
    }
    nlohmann::json j = {{"finished", utc_now()}, {"seed", config_.seed()}, {"stages", stages}};
    jsonio::write_file(j, output("run_manifest.json"));
}

std::string predict_csv(LoadedNetwork& model, const Corpus& corpus, const PrepConfig& prep) {
    std::vector<Example> docs;
    for (const auto& a : corpus.articles()) {
        docs.push_back({model.encoder.encode(analyze(article_text(a, prep.fields), prep),
                                             static_cast<std::size_t>(model.net.spec().max_len)),
                        0});
    }
    auto predictions = predict_all(model.net, docs);
    std::vector<csv::Row> rows{{"id", "predicted"}};
    for (const auto& n : model.labels) {
        rows[0].push_back("p_" + n);
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        csv::Row r{corpus[i].id, model.labels.at(static_cast<std::size_t>(predictions[i].label))};
        for (Eigen::Index c = 0; c < predictions[i].probabilities.size(); ++c) {
            r.push_back(csv::real(predictions[i].probabilities(c)));
        }
        rows.push_back(std::move(r));
    }
    return csv_text(rows);
}

} // namespace newsmon
