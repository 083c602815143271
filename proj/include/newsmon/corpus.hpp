#pragma once

#include "newsmon/dates.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace newsmon {

enum class Language { bn, en };
enum class Sentiment { negative = 0, positive = 1 };

/// The eight manually extracted news classes, in table order.
inline constexpr std::array<std::string_view, 8> kClassNames = {
    "Statistics",
    "Social Information",
    "COVID-19 Effects",
    "COVID-19 Responses and Preventive Measure",
    "Government Announcement and Responses",
    "Solidarity and Cooperation",
    "International Information",
    "Health Organization Responses",
};
inline constexpr int kSubclassCount = 19;

std::string_view to_string(Language lang);
std::string_view to_string(Sentiment s);

struct Article {
    std::string id;
    std::string source;
    Language language = Language::bn;
    std::string title;
    std::string body;
    std::string summary;
    Date published;
    std::string location;
    std::optional<std::string> district;
    std::optional<std::string> division;
    std::optional<int> class_label;     // 0-based index into kClassNames
    std::optional<int> subclass_label;  // 0-based, < kSubclassCount
    std::optional<Sentiment> sentiment;
    std::optional<int> topic_label;
    std::optional<std::string> translated_body;

    /// Text fed to the Bengali pipeline stages: the translation when supplied.
    const std::string& analysis_text() const { return translated_body ? *translated_body : body; }
};

/// Which label an operation needs; selects the "labeled subset".
enum class LabelKind { class_label, subclass, sentiment, topic };

std::optional<int> label_of(const Article& a, LabelKind kind);
int label_count(LabelKind kind, int topic_count = 0);
std::string_view to_string(LabelKind kind);
LabelKind parse_label_kind(std::string_view text);

/// Validated, immutable article collection.
class Corpus {
public:
    Corpus() = default;
    /// Throws DataError on empty input or duplicate ids.
    explicit Corpus(std::vector<Article> articles);

    std::span<const Article> articles() const { return articles_; }
    std::size_t size() const { return articles_.size(); }
    bool empty() const { return articles_.empty(); }
    const Article& operator[](std::size_t i) const { return articles_[i]; }
    const Article* find(std::string_view id) const;
    std::optional<std::size_t> index_of(std::string_view id) const;

    Date first_date() const { return first_; }
    Date last_date() const { return last_; }
    int week_of(const Article& a) const { return week_index(first_, a.published); }
    int week_count() const { return week_index(first_, last_) + 1; }

private:
    std::vector<Article> articles_;
    std::unordered_map<std::string, std::size_t> by_id_;
    Date first_;
    Date last_;
};

enum class CorpusFormat { jsonl, csv };

struct RecordError {
    std::size_t line = 0;  // 1-based; CSV header is line 1
    std::string message;
};

struct LoadResult {
    Corpus corpus;
    std::vector<RecordError> rejected;
};

/// Parses one JSON record into an Article; throws DataError naming the bad field.
Article article_from_json(const nlohmann::json& record);
nlohmann::json article_to_json(const Article& a);

/// Loads and validates a corpus. Bad records are reported, not fatal; an
/// empty file, or one with no valid record, throws DataError.
LoadResult load_corpus(const std::string& path, CorpusFormat format);
LoadResult load_corpus_text(std::string_view text, CorpusFormat format);
CorpusFormat format_from_path(const std::string& path);

/// Canonical JSON-lines form, one article per line.
std::string serialize_jsonl(const Corpus& corpus);
void save_jsonl(const Corpus& corpus, const std::string& path);

// -- splits -----------------------------------------------------------------

struct SplitRatios {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

struct DatasetSplit {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
    SplitRatios ratios;
};

/// Sizes by largest remainder: floor(n * r_i), then the leftover units go to
/// the largest fractional parts (ties to the earlier split). Ids are sorted,
/// shuffled with the seed, then cut in train/validation/test order.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);
DatasetSplit split_dataset(std::vector<std::string> ids, const SplitRatios& ratios, std::uint64_t seed);
DatasetSplit split_dataset(const Corpus& corpus, LabelKind kind, const SplitRatios& ratios,
                           std::uint64_t seed);

// -- regions ----------------------------------------------------------------

inline constexpr std::string_view kUnresolved = "UNRESOLVED";
inline constexpr std::string_view kInternational = "INTERNATIONAL";

struct Region {
    std::string district;
    std::string division;
    friend bool operator==(const Region&, const Region&) = default;
};

/// District -> division table. Exactly 8 real divisions; INTERNATIONAL is a
/// reserved synthetic division for foreign place names.
class Gazetteer {
public:
    static Gazetteer load(const std::string& path);
    static Gazetteer parse(std::string_view csv_text);

    std::optional<Region> lookup(std::string_view place) const;
    /// Divisions in first-seen order (synthetic INTERNATIONAL last if present).
    const std::vector<std::string>& divisions() const { return divisions_; }
    const std::vector<std::string>& districts() const { return districts_; }
    const std::string& division_of(const std::string& district) const;

private:
    std::unordered_map<std::string, Region> by_key_;
    std::map<std::string, std::string> district_division_;
    std::vector<std::string> divisions_;
    std::vector<std::string> districts_;
};

/// Exact match on the folded location text; nullopt means unresolved.
std::optional<Region> resolve_region(const Article& article, const Gazetteer& gazetteer);
/// One entry per article, in corpus order. Unresolved -> {UNRESOLVED, UNRESOLVED}.
std::vector<Region> resolve_all(const Corpus& corpus, const Gazetteer& gazetteer);

} // namespace newsmon
