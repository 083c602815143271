// newsmon: command-line front end of the news monitoring pipeline.

#include "newsmon/config.hpp"
#include "newsmon/corpus.hpp"
#include "newsmon/error.hpp"
#include "newsmon/neural.hpp"
#include "newsmon/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kStage = 3 };

int run(int argc, char** argv) {
    CLI::App app{"Spatio-temporal monitoring of a news corpus: volume, topics, dynamic topics, "
                 "classification, sentiment and regional aggregation."};
    app.require_subcommand(1);
    app.fallthrough();
    app.footer("Every config key is also a flag (--section.key VALUE). Precedence: defaults < --config file < "
               "MONITOR_SEED (run.seed) < flags.\nExit codes: 0 success, 1 usage error, 2 data error, 3 stage failure.");

    std::string config_file;
    app.add_option("-c,--config", config_file, "config file of 'section.key = value' lines")->check(CLI::ExistingFile);
    std::map<std::string, std::string> overrides;
    for (const auto& key : newsmon::config_keys()) {
        std::string name(key.name);
        std::string help = std::string(key.help) + " [default: " + std::string(key.default_value) + "]";
        app.add_option_function<std::string>(
               "--" + name, [&overrides, name](const std::string& v) { overrides[name] = v; }, help)
            ->group("Config keys");
    }

    std::function<void(newsmon::Pipeline&)> action;
    auto stage_command = [&](CLI::App* parent, const std::string& name, const std::string& help,
                             std::function<void(newsmon::Pipeline&)> fn) {
        auto* sub = parent->add_subcommand(name, help);
        sub->fallthrough();
        sub->callback([&action, fn] { action = fn; });
        return sub;
    };

    stage_command(&app, "ingest", "load and validate the corpus; per-source counts", &newsmon::Pipeline::ingest);
    stage_command(&app, "prep", "normalise, tokenise and encode the articles", &newsmon::Pipeline::prep);
    stage_command(&app, "volume", "daily article volume series", &newsmon::Pipeline::volume);
    stage_command(&app, "decompose", "trend / seasonal / residual decomposition of the daily volume",
                  &newsmon::Pipeline::decompose);

    auto* topics = app.add_subcommand("topics", "static topic model");
    topics->require_subcommand(1);
    topics->fallthrough();
    stage_command(topics, "sweep", "fit every K in [topics.k_min, topics.k_max] and choose by coherence",
                  &newsmon::Pipeline::topics_sweep);
    stage_command(topics, "fit", "fit the topic model (K from topics.k or the sweep)", &newsmon::Pipeline::topics_fit);
    stage_command(topics, "top-words", "rewrite the top-word table of the fitted model",
                  &newsmon::Pipeline::topics_top_words);

    auto* dtm = app.add_subcommand("dtm", "dynamic topic model over weekly slices");
    dtm->require_subcommand(1);
    dtm->fallthrough();
    stage_command(dtm, "fit", "fit the weekly coupled model", &newsmon::Pipeline::dtm_fit);
    stage_command(dtm, "export", "prevalence and top-word tables from the fitted model",
                  &newsmon::Pipeline::dtm_export);

    auto* train = app.add_subcommand("train", "train a neural model");
    train->require_subcommand(1);
    train->fallthrough();
    stage_command(train, "classify", "LSTM news classifier (label from classify.label)",
                  &newsmon::Pipeline::train_classifier);
    stage_command(train, "sentiment", "CNN + BiLSTM sentiment model", &newsmon::Pipeline::train_sentiment);

    stage_command(&app, "eval", "score trained models on their test split", &newsmon::Pipeline::evaluate);
    stage_command(&app, "geo", "regional volume, topic and sentiment aggregation", &newsmon::Pipeline::geo);
    stage_command(&app, "report", "summary, config snapshot and content-hash manifest", &newsmon::Pipeline::report);
    stage_command(&app, "run", "every stage in order (run.skip removes stages)", &newsmon::Pipeline::run_all);

    auto* predict = app.add_subcommand("predict", "apply a saved model checkpoint to a corpus");
    predict->fallthrough();
    std::string model_path;
    std::string input_path;
    std::string output_path;
    predict->add_option("--model", model_path, "checkpoint written by 'train'")->required()->check(CLI::ExistingFile);
    predict->add_option("--input", input_path, "corpus (.jsonl or .csv)")->required()->check(CLI::ExistingFile);
    predict->add_option("--out", output_path, "CSV destination (default: stdout)");

    auto* show = app.add_subcommand("config", "print the resolved configuration");
    show->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    newsmon::RunConfig config;
    if (!config_file.empty()) {
        config.merge_file(config_file);
    }
    config.apply_environment();
    for (const auto& [k, v] : overrides) {
        config.set(k, v);
    }

    if (show->parsed()) {
        std::cout << config.snapshot();
        return kOk;
    }
    if (predict->parsed()) {
        auto model = newsmon::load_network(model_path);
        auto corpus = newsmon::load_corpus(input_path, newsmon::format_from_path(input_path));
        for (const auto& r : corpus.rejected) {
            std::cerr << "line " << r.line << ": " << r.message << "\n";
        }
        auto text = newsmon::predict_csv(model, corpus.corpus, newsmon::prep_config(config));
        if (output_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(output_path, std::ios::binary);
            if (!out) {
                throw newsmon::DataError("cannot write " + output_path);
            }
            out << text;
        }
        return kOk;
    }

    newsmon::Pipeline pipeline(config, std::cerr);
    try {
        action(pipeline);
    } catch (...) {
        pipeline.write_run_manifest();
        throw;
    }
    pipeline.write_run_manifest();
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const newsmon::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const newsmon::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const newsmon::StageError& e) {
        std::cerr << "stage failure: " << e.what() << "\n";
        return kStage;
    } catch (const std::exception& e) {
        std::cerr << "stage failure: " << e.what() << "\n";
        return kStage;
    }
}
