#pragma once

#include "newsmon/dates.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace newsmon {

class Corpus;
struct Article;

/// Daily counts over a dense date range (missing days are 0).
struct VolumeSeries {
    Date start;
    std::vector<double> values;

    Date date_at(std::size_t i) const { return start + static_cast<int>(i); }
};

/// Daily article counts over [first date, last date] of the whole corpus, so
/// filtered series stay aligned. Throws DataError on an empty corpus.
VolumeSeries build_volume_series(const Corpus& corpus, const std::function<bool(const Article&)>& filter = {});

/// Article counts per source name.
std::map<std::string, std::size_t> counts_by_source(const Corpus& corpus);

enum class DecompositionModel { additive, multiplicative };

std::string_view to_string(DecompositionModel m);
DecompositionModel parse_decomposition_model(std::string_view text);

struct DecompositionOptions {
    int period = 7;
    /// Re-estimate the trend on the seasonally adjusted series until the
    /// seasonal indices stop changing. A single pass leaves a phase-dependent
    /// bias when trend and season interact multiplicatively.
    bool refine = true;
    int max_passes = 100;
    double tolerance = 1e-14;
    /// Added to every value before a multiplicative fit (typically 1 to admit
    /// zero counts). Trend is reported on the shifted scale; reconstruct()
    /// subtracts it again.
    double offset = 0.0;
};

struct Decomposition {
    DecompositionModel model = DecompositionModel::multiplicative;
    int period = 7;
    double offset = 0.0;
    int passes = 0;
    double level = 0.0;                     // mean of the observed series
    std::vector<double> observed;
    std::vector<std::optional<double>> trend;     // gaps where the centered average is undefined
    std::vector<double> seasonal_indices;         // one per phase, phase = day index mod period
    std::vector<std::optional<double>> residual;  // gaps as trend

    double seasonal_at(std::size_t i) const { return seasonal_indices[i % static_cast<std::size_t>(period)]; }
};

/// Classical decomposition. Trend is the centered moving average of width
/// `period` (2 x period for even periods); seasonal indices are phase means of
/// the detrended series, re-centered to sum 0 (additive) or re-normalized to
/// mean 1 (multiplicative); residual = y - trend - seasonal or
/// y / (trend x seasonal). Throws DataError when the series is shorter than
/// 2 x period or, under the multiplicative model, not strictly positive after
/// the offset; UsageError on a period below 2.
Decomposition decompose(const std::vector<double>& series, DecompositionModel model,
                        const DecompositionOptions& options = {});

/// trend + seasonal + residual, or trend x seasonal x residual - offset;
/// gaps stay gaps.
std::vector<std::optional<double>> reconstruct(const Decomposition& d);

/// CSV "date,observed,trend,seasonal,residual" with empty cells for gaps.
std::string decomposition_csv(const Decomposition& d, Date start);

} // namespace newsmon
