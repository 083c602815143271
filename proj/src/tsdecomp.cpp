#include "newsmon/tsdecomp.hpp"

#include "newsmon/corpus.hpp"
#include "newsmon/csv.hpp"
#include "newsmon/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>

namespace newsmon {

VolumeSeries build_volume_series(const Corpus& corpus, const std::function<bool(const Article&)>& filter) {
    if (corpus.empty()) {
        throw DataError("cannot build a volume series from an empty corpus");
    }
    VolumeSeries s;
    s.start = corpus.first_date();
    s.values.assign(static_cast<std::size_t>(corpus.last_date() - corpus.first_date() + 1), 0.0);
    for (const auto& a : corpus.articles()) {
        if (!filter || filter(a)) {
            s.values[static_cast<std::size_t>(a.published - s.start)] += 1.0;
        }
    }
    return s;
}

std::map<std::string, std::size_t> counts_by_source(const Corpus& corpus) {
    std::map<std::string, std::size_t> out;
    for (const auto& a : corpus.articles()) {
        ++out[a.source];
    }
    return out;
}

std::string_view to_string(DecompositionModel m) {
    return m == DecompositionModel::additive ? "additive" : "multiplicative";
}

DecompositionModel parse_decomposition_model(std::string_view text) {
    if (text == "additive") {
        return DecompositionModel::additive;
    }
    if (text == "multiplicative") {
        return DecompositionModel::multiplicative;
    }
    throw UsageError(fmt::format("unknown decomposition model '{}'", text));
}

namespace {

/// Centered moving average; even periods use the 2 x period average
/// (half weights on the two end points).
std::vector<std::optional<double>> centered_average(const std::vector<double>& y, int period) {
    const auto n = y.size();
    const auto half = static_cast<std::size_t>(period / 2);
    std::vector<std::optional<double>> out(n);
    for (std::size_t i = half; i + half < n; ++i) {
        double sum = 0.0;
        if (period % 2 == 1) {
            for (std::size_t j = i - half; j <= i + half; ++j) {
                sum += y[j];
            }
        } else {
            sum = 0.5 * y[i - half] + 0.5 * y[i + half];
            for (std::size_t j = i - half + 1; j < i + half; ++j) {
                sum += y[j];
            }
        }
        out[i] = sum / period;
    }
    return out;
}

std::vector<double> phase_indices(const std::vector<double>& y, const std::vector<std::optional<double>>& trend,
                                  int period, bool multiplicative) {
    std::vector<double> sum(static_cast<std::size_t>(period), 0.0);
    std::vector<int> count(static_cast<std::size_t>(period), 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!trend[i]) {
            continue;
        }
        auto p = i % static_cast<std::size_t>(period);
        sum[p] += multiplicative ? y[i] / *trend[i] : y[i] - *trend[i];
        ++count[p];
    }
    for (std::size_t p = 0; p < sum.size(); ++p) {
        sum[p] /= count[p];
    }
    double mean = std::accumulate(sum.begin(), sum.end(), 0.0) / period;
    for (double& s : sum) {
        s = multiplicative ? s / mean : s - mean;
    }
    return sum;
}

} // namespace

Decomposition decompose(const std::vector<double>& series, DecompositionModel model, const DecompositionOptions& options) {
    const int period = options.period;
    if (period < 2) {
        throw UsageError(fmt::format("period must be at least 2, got {}", period));
    }
    if (series.size() < 2 * static_cast<std::size_t>(period)) {
        throw DataError(fmt::format("series of length {} is shorter than two periods ({})", series.size(), 2 * period));
    }
    const bool multiplicative = model == DecompositionModel::multiplicative;
    std::vector<double> y = series;
    if (multiplicative) {
        for (double& v : y) {
            v += options.offset;
        }
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!(y[i] > 0.0)) {
                throw DataError(fmt::format(
                    "multiplicative decomposition needs strictly positive values (day {} is {}); "
                    "use the additive model or set an offset such as 1",
                    i, series[i]));
            }
        }
    }

    Decomposition d;
    d.model = model;
    d.period = period;
    d.offset = multiplicative ? options.offset : 0.0;
    d.observed = series;
    d.level = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());

    auto trend = centered_average(y, period);
    auto seasonal = phase_indices(y, trend, period, multiplicative);
    d.passes = 1;
    while (options.refine && d.passes < options.max_passes) {
        std::vector<double> adjusted(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            double s = seasonal[i % static_cast<std::size_t>(period)];
            adjusted[i] = multiplicative ? y[i] / s : y[i] - s;
        }
        auto next_trend = centered_average(adjusted, period);
        auto next = phase_indices(y, next_trend, period, multiplicative);
        double change = 0.0;
        for (std::size_t p = 0; p < next.size(); ++p) {
            change = std::max(change, std::abs(next[p] - seasonal[p]));
        }
        trend = std::move(next_trend);
        seasonal = std::move(next);
        ++d.passes;
        if (change <= options.tolerance) {
            break;
        }
    }

    d.trend = trend;
    d.seasonal_indices = seasonal;
    d.residual.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (trend[i]) {
            double s = d.seasonal_at(i);
            d.residual[i] = multiplicative ? y[i] / (*trend[i] * s) : y[i] - *trend[i] - s;
        }
    }
    return d;
}

std::vector<std::optional<double>> reconstruct(const Decomposition& d) {
    std::vector<std::optional<double>> out(d.trend.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (d.trend[i] && d.residual[i]) {
            double s = d.seasonal_at(i);
            out[i] = d.model == DecompositionModel::multiplicative ? *d.trend[i] * s * *d.residual[i] - d.offset
                                                                    : *d.trend[i] + s + *d.residual[i];
        }
    }
    return out;
}

std::string decomposition_csv(const Decomposition& d, Date start) {
    std::string out = "date,observed,trend,seasonal,residual\n";
    for (std::size_t i = 0; i < d.observed.size(); ++i) {
        out += fmt::format("{},{},{},{},{}\n", (start + static_cast<int>(i)).to_string(), csv::real(d.observed[i]),
                           csv::real(d.trend[i]), csv::real(d.seasonal_at(i)), csv::real(d.residual[i]));
    }
    return out;
}

} // namespace newsmon
