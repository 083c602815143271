#include "newsmon/metrics.hpp"

#include "newsmon/csv.hpp"
#include "newsmon/error.hpp"

#include <fmt/format.h>

namespace newsmon {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : names_(std::move(classes)), counts_(names_.size() * names_.size(), 0) {}

void ConfusionMatrix::add(int gold, int predicted) {
    const auto c = static_cast<int>(names_.size());
    if (gold < 0 || gold >= c || predicted < 0 || predicted >= c) {
        throw DataError(fmt::format("label pair ({}, {}) outside the {} known classes", gold, predicted, c));
    }
    ++counts_[index(gold, predicted)];
    ++total_;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        t += counts_[i * names_.size() + i];
    }
    return t;
}

std::size_t ConfusionMatrix::row_sum(int gold) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < names_.size(); ++p) {
        s += counts_[index(gold, static_cast<int>(p))];
    }
    return s;
}

std::size_t ConfusionMatrix::col_sum(int predicted) const {
    std::size_t s = 0;
    for (std::size_t g = 0; g < names_.size(); ++g) {
        s += counts_[index(static_cast<int>(g), predicted)];
    }
    return s;
}

std::string_view to_string(Averaging a) {
    switch (a) {
    case Averaging::macro: return "macro";
    case Averaging::micro: return "micro";
    case Averaging::binary: return "binary";
    }
    return "macro";
}

Averaging parse_averaging(std::string_view text) {
    if (text == "macro") {
        return Averaging::macro;
    }
    if (text == "micro") {
        return Averaging::micro;
    }
    if (text == "binary") {
        return Averaging::binary;
    }
    throw UsageError(fmt::format("unknown averaging '{}' (macro, micro, binary)", text));
}

namespace {

double ratio(std::size_t num, std::size_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r, bool& undefined) {
    undefined = p + r == 0.0;
    return undefined ? 0.0 : 2.0 * p * r / (p + r);
}

} // namespace

Summary EvaluationReport::headline() const {
    switch (averaging) {
    case Averaging::micro: return micro;
    case Averaging::binary: {
        const auto& c = per_class.at(static_cast<std::size_t>(positive_class));
        return {c.precision, c.recall, c.f1};
    }
    case Averaging::macro: break;
    }
    return macro;
}

EvaluationReport evaluate(std::span<const int> gold, std::span<const int> predicted,
                          const std::vector<std::string>& classes, Averaging averaging, int positive_class) {
    if (gold.size() != predicted.size()) {
        throw DataError(fmt::format("{} gold labels but {} predictions", gold.size(), predicted.size()));
    }
    if (gold.empty()) {
        throw DataError("empty evaluation set");
    }
    if (classes.empty()) {
        throw UsageError("no classes given");
    }
    if (averaging == Averaging::binary && (positive_class < 0 || positive_class >= static_cast<int>(classes.size()))) {
        throw UsageError(fmt::format("positive class {} out of range", positive_class));
    }
    EvaluationReport r;
    r.confusion = ConfusionMatrix(classes);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        r.confusion.add(gold[i], predicted[i]);
    }
    r.averaging = averaging;
    r.positive_class = positive_class;

    const auto C = static_cast<int>(classes.size());
    std::size_t tp_all = 0, fp_all = 0, fn_all = 0;
    for (int c = 0; c < C; ++c) {
        ClassMetrics m;
        m.name = classes[static_cast<std::size_t>(c)];
        const auto tp = r.confusion(c, c);
        const auto fp = r.confusion.col_sum(c) - tp;
        const auto fn = r.confusion.row_sum(c) - tp;
        m.support = tp + fn;
        m.precision = ratio(tp, tp + fp, m.precision_undefined);
        m.recall = ratio(tp, tp + fn, m.recall_undefined);
        m.f1 = harmonic(m.precision, m.recall, m.f1_undefined);
        r.macro.precision += m.precision;
        r.macro.recall += m.recall;
        r.macro.f1 += m.f1;
        tp_all += tp;
        fp_all += fp;
        fn_all += fn;
        r.per_class.push_back(std::move(m));
    }
    r.macro.precision /= C;
    r.macro.recall /= C;
    r.macro.f1 /= C;
    bool ignored = false;
    r.micro.precision = ratio(tp_all, tp_all + fp_all, ignored);
    r.micro.recall = ratio(tp_all, tp_all + fn_all, ignored);
    r.micro.f1 = harmonic(r.micro.precision, r.micro.recall, ignored);
    r.accuracy = static_cast<double>(r.confusion.trace()) / static_cast<double>(r.confusion.total());
    return r;
}

nlohmann::json report_json(const EvaluationReport& r) {
    auto summary = [](const Summary& s) {
        return nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
    };
    nlohmann::json j;
    j["averaging"] = to_string(r.averaging);
    if (r.averaging == Averaging::binary) {
        j["positive_class"] = r.confusion.names().at(static_cast<std::size_t>(r.positive_class));
    }
    auto head = r.headline();
    j["precision"] = head.precision;
    j["recall"] = head.recall;
    j["f1"] = head.f1;
    j["accuracy"] = r.accuracy;
    j["macro"] = summary(r.macro);
    j["micro"] = summary(r.micro);
    j["total"] = r.confusion.total();
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : r.per_class) {
        nlohmann::json cj{{"class", c.name},    {"precision", c.precision}, {"recall", c.recall},
                          {"f1", c.f1},         {"support", c.support}};
        nlohmann::json undefined = nlohmann::json::array();
        if (c.precision_undefined) {
            undefined.push_back("precision");
        }
        if (c.recall_undefined) {
            undefined.push_back("recall");
        }
        if (c.f1_undefined) {
            undefined.push_back("f1");
        }
        cj["zero_division"] = undefined;
        classes.push_back(cj);
    }
    j["per_class"] = classes;
    return j;
}

std::string confusion_csv(const ConfusionMatrix& m) {
    std::string out = "gold\\predicted";
    for (const auto& n : m.names()) {
        out += "," + csv::escape(n);
    }
    out += '\n';
    for (std::size_t g = 0; g < m.classes(); ++g) {
        out += csv::escape(m.names()[g]);
        for (std::size_t p = 0; p < m.classes(); ++p) {
            out += fmt::format(",{}", m(static_cast<int>(g), static_cast<int>(p)));
        }
        out += '\n';
    }
    return out;
}

} // namespace newsmon
