#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace newsmon {

/// C x C counts, rows = gold, columns = predicted.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::vector<std::string> classes);

    void add(int gold, int predicted);
    std::size_t operator()(int gold, int predicted) const { return counts_[index(gold, predicted)]; }
    std::size_t classes() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    std::size_t total() const { return total_; }
    std::size_t trace() const;
    std::size_t row_sum(int gold) const;
    std::size_t col_sum(int predicted) const;

private:
    std::size_t index(int g, int p) const { return static_cast<std::size_t>(g) * names_.size() + static_cast<std::size_t>(p); }

    std::vector<std::string> names_;
    std::vector<std::size_t> counts_;
    std::size_t total_ = 0;
};

struct ClassMetrics {
    std::string name;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;  // gold count
    /// Set when the metric's denominator was zero (value reported as 0).
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

/// macro: unweighted mean over classes; micro: pooled counts;
/// binary: the metrics of one positive class.
enum class Averaging { macro, micro, binary };

std::string_view to_string(Averaging a);
Averaging parse_averaging(std::string_view text);

struct Summary {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvaluationReport {
    ConfusionMatrix confusion{{}};
    std::vector<ClassMetrics> per_class;
    Summary macro;
    Summary micro;
    double accuracy = 0.0;  // trace / total
    Averaging averaging = Averaging::macro;
    int positive_class = 1;

    /// The summary selected by `averaging`.
    Summary headline() const;
};

/// Labels are class indices. Throws DataError on unequal lengths, an empty
/// evaluation set or a label outside [0, classes).
EvaluationReport evaluate(std::span<const int> gold, std::span<const int> predicted,
                          const std::vector<std::string>& classes, Averaging averaging = Averaging::macro,
                          int positive_class = 1);

nlohmann::json report_json(const EvaluationReport& r);
/// Header "gold\predicted,<names...>", one row per gold class.
std::string confusion_csv(const ConfusionMatrix& m);

} // namespace newsmon
