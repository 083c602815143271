#pragma once

#include "newsmon/config.hpp"
#include "newsmon/corpus.hpp"
#include "newsmon/neural.hpp"
#include "newsmon/textprep.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace newsmon {

/// Stage names in run order.
const std::vector<std::string>& pipeline_stages();

struct StageRecord {
    std::string stage;
    std::string status;  // "done", "skipped" or "failed"
    std::vector<std::string> notices;
    std::string started;  // UTC, ISO 8601
    double seconds = 0.0;
};

/// Runs the analysis stages against one output directory. Each stage reads
/// what earlier stages wrote there, so stages can also be invoked one by one.
///
/// Failures are re-thrown tagged with the stage name: DataError and
/// UsageError keep their type, anything else becomes StageError. Files
/// written before the failure are left in place.
class Pipeline {
public:
    /// Validates the config (UsageError) and creates the output directory.
    Pipeline(RunConfig config, std::ostream& log);

    void ingest();
    void prep();
    void volume();
    void decompose();
    void topics_sweep();
    void topics_fit();
    void topics_top_words();
    void dtm_fit();
    void dtm_export();
    void train_classifier();
    void train_sentiment();
    void evaluate();
    void geo();
    /// Summary, config snapshot and the content-hash manifest.
    void report();

    /// All stages in order, honouring run.skip, then the run manifest.
    void run_all();

    /// Timestamps and durations of this invocation (run_manifest.json);
    /// kept out of the hashed manifest so reruns compare equal.
    void write_run_manifest() const;

    const RunConfig& config() const { return config_; }
    const std::vector<StageRecord>& records() const { return records_; }
    /// Path below the output directory; parent directories are created.
    std::string output(const std::string& relative) const;

private:
    void stage(const std::string& name, const std::function<void()>& body);
    void notice(const std::string& message);
    void skip(const std::string& message);

    Corpus load_ingested() const;
    PreparedCorpus load_prepared() const;
    void train_network(bool sentiment);
    void evaluate_network(const std::string& dir);

    RunConfig config_;
    std::ostream& log_;
    std::vector<StageRecord> records_;
};

/// The preprocessing settings the config describes.
PrepConfig prep_config(const RunConfig& config);

/// Per-article predictions as CSV "id,predicted,p_<label>..." using the
/// checkpoint's vocabulary and label names.
std::string predict_csv(LoadedNetwork& model, const Corpus& corpus, const PrepConfig& prep);

} // namespace newsmon
