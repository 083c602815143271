#include "newsmon/corpus.hpp"

#include "newsmon/csv.hpp"
#include "newsmon/error.hpp"
#include "newsmon/rng.hpp"
#include "newsmon/unicode.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace newsmon {

std::string_view to_string(Language lang) {
    return lang == Language::bn ? "bn" : "en";
}

std::string_view to_string(Sentiment s) {
    return s == Sentiment::positive ? "positive" : "negative";
}

std::optional<int> label_of(const Article& a, LabelKind kind) {
    switch (kind) {
    case LabelKind::class_label:
        return a.class_label;
    case LabelKind::subclass:
        return a.subclass_label;
    case LabelKind::sentiment:
        if (a.sentiment) {
            return static_cast<int>(*a.sentiment);
        }
        return std::nullopt;
    case LabelKind::topic:
        return a.topic_label;
    }
    return std::nullopt;
}

int label_count(LabelKind kind, int topic_count) {
    switch (kind) {
    case LabelKind::class_label:
        return static_cast<int>(kClassNames.size());
    case LabelKind::subclass:
        return kSubclassCount;
    case LabelKind::sentiment:
        return 2;
    case LabelKind::topic:
        return topic_count;
    }
    return 0;
}

std::string_view to_string(LabelKind kind) {
    switch (kind) {
    case LabelKind::class_label:
        return "class";
    case LabelKind::subclass:
        return "subclass";
    case LabelKind::sentiment:
        return "sentiment";
    case LabelKind::topic:
        return "topic";
    }
    return "";
}

LabelKind parse_label_kind(std::string_view text) {
    for (auto kind : {LabelKind::class_label, LabelKind::subclass, LabelKind::sentiment, LabelKind::topic}) {
        if (text == to_string(kind)) {
            return kind;
        }
    }
    throw UsageError("unknown label kind '" + std::string(text) + "' (class|subclass|sentiment|topic)");
}

// -- Corpus -----------------------------------------------------------------

Corpus::Corpus(std::vector<Article> articles) : articles_(std::move(articles)) {
    if (articles_.empty()) {
        throw DataError("corpus is empty");
    }
    first_ = last_ = articles_.front().published;
    for (std::size_t i = 0; i < articles_.size(); ++i) {
        const auto& a = articles_[i];
        if (a.id.empty()) {
            throw DataError("article with empty id");
        }
        if (!by_id_.emplace(a.id, i).second) {
            throw DataError("duplicate article id '" + a.id + "'");
        }
        first_ = std::min(first_, a.published);
        last_ = std::max(last_, a.published);
    }
}

const Article* Corpus::find(std::string_view id) const {
    auto i = index_of(id);
    return i ? &articles_[*i] : nullptr;
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

// -- record parsing ---------------------------------------------------------

namespace {

std::string text_field(const nlohmann::json& rec, const char* key, bool required) {
    auto it = rec.find(key);
    if (it == rec.end() || it->is_null()) {
        if (required) {
            throw DataError(fmt::format("missing required field '{}'", key));
        }
        return {};
    }
    if (it->is_string()) {
        return it->get<std::string>();
    }
    if (it->is_number_integer()) {
        return std::to_string(it->get<long long>());
    }
    throw DataError(fmt::format("field '{}' must be a string", key));
}

std::optional<std::string> optional_text(const nlohmann::json& rec, const char* key) {
    auto it = rec.find(key);
    if (it == rec.end() || it->is_null()) {
        return std::nullopt;
    }
    std::string v = text_field(rec, key, false);
    if (v.empty()) {
        return std::nullopt;
    }
    return v;
}

std::optional<int> parse_index(const std::string& text) {
    if (text.empty() || text.size() > 6) {
        return std::nullopt;
    }
    int v = 0;
    for (char c : text) {
        if (c < '0' || c > '9') {
            return std::nullopt;
        }
        v = v * 10 + (c - '0');
    }
    return v;
}

int parse_class(const std::string& text) {
    if (auto idx = parse_index(text)) {
        if (*idx >= 1 && *idx <= static_cast<int>(kClassNames.size())) {
            return *idx - 1;
        }
    }
    std::string key = unicode::fold_key(text);
    for (std::size_t i = 0; i < kClassNames.size(); ++i) {
        if (unicode::fold_key(kClassNames[i]) == key) {
            return static_cast<int>(i);
        }
    }
    throw DataError("unknown class '" + text + "'");
}

int parse_subclass(const std::string& text) {
    auto idx = parse_index(text);
    if (!idx || *idx < 1 || *idx > kSubclassCount) {
        throw DataError(fmt::format("subclass must be 1..{}, got '{}'", kSubclassCount, text));
    }
    return *idx - 1;
}

} // namespace

Article article_from_json(const nlohmann::json& rec) {
    if (!rec.is_object()) {
        throw DataError("record is not a JSON object");
    }
    Article a;
    a.id = text_field(rec, "id", true);
    if (a.id.empty()) {
        throw DataError("field 'id' is empty");
    }
    a.body = text_field(rec, "body", true);
    a.published = Date::parse(text_field(rec, "published_date", true));
    a.source = text_field(rec, "source", false);
    std::string lang = text_field(rec, "language", false);
    if (lang.empty() || lang == "bn") {
        a.language = Language::bn;
    } else if (lang == "en") {
        a.language = Language::en;
    } else {
        throw DataError("language must be 'bn' or 'en', got '" + lang + "'");
    }
    a.title = text_field(rec, "title", false);
    a.summary = text_field(rec, "summary", false);
    a.location = text_field(rec, "location", false);
    a.district = optional_text(rec, "district");
    a.division = optional_text(rec, "division");
    a.translated_body = optional_text(rec, "translated_body");
    if (auto c = optional_text(rec, "class")) {
        a.class_label = parse_class(*c);
    }
    if (auto s = optional_text(rec, "subclass")) {
        a.subclass_label = parse_subclass(*s);
    }
    if (auto s = optional_text(rec, "sentiment")) {
        if (*s == "positive") {
            a.sentiment = Sentiment::positive;
        } else if (*s == "negative") {
            a.sentiment = Sentiment::negative;
        } else {
            throw DataError("sentiment must be 'positive' or 'negative', got '" + *s + "'");
        }
    }
    if (auto t = optional_text(rec, "topic")) {
        auto idx = parse_index(*t);
        if (!idx) {
            throw DataError("topic must be a non-negative integer, got '" + *t + "'");
        }
        a.topic_label = *idx;
    }
    return a;
}

nlohmann::json article_to_json(const Article& a) {
    nlohmann::json j;
    j["id"] = a.id;
    j["source"] = a.source;
    j["language"] = std::string(to_string(a.language));
    j["title"] = a.title;
    j["body"] = a.body;
    j["summary"] = a.summary;
    j["published_date"] = a.published.to_string();
    j["location"] = a.location;
    if (a.district) {
        j["district"] = *a.district;
    }
    if (a.division) {
        j["division"] = *a.division;
    }
    if (a.class_label) {
        j["class"] = std::string(kClassNames[static_cast<std::size_t>(*a.class_label)]);
    }
    if (a.subclass_label) {
        j["subclass"] = *a.subclass_label + 1;
    }
    if (a.sentiment) {
        j["sentiment"] = std::string(to_string(*a.sentiment));
    }
    if (a.topic_label) {
        j["topic"] = *a.topic_label;
    }
    if (a.translated_body) {
        j["translated_body"] = *a.translated_body;
    }
    return j;
}

// -- loading ----------------------------------------------------------------

namespace {

LoadResult finish(std::vector<std::pair<std::size_t, Article>> articles, std::vector<RecordError> rejected) {
    std::set<std::string> seen;
    std::vector<Article> kept;
    kept.reserve(articles.size());
    // Duplicate ids are record-level errors too; the first occurrence wins.
    for (auto& [line, a] : articles) {
        if (!seen.insert(a.id).second) {
            rejected.push_back({line, "duplicate id '" + a.id + "'"});
            continue;
        }
        kept.push_back(std::move(a));
    }
    std::sort(rejected.begin(), rejected.end(),
              [](const RecordError& x, const RecordError& y) { return x.line < y.line; });
    if (kept.empty()) {
        throw DataError(fmt::format("no valid records ({} rejected)", rejected.size()));
    }
    return LoadResult{Corpus(std::move(kept)), std::move(rejected)};
}

} // namespace

LoadResult load_corpus_text(std::string_view text, CorpusFormat format) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw DataError("corpus file is empty");
    }
    std::vector<std::pair<std::size_t, Article>> articles;
    std::vector<RecordError> rejected;
    if (format == CorpusFormat::jsonl) {
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t end = text.find('\n', pos);
            if (end == std::string_view::npos) {
                end = text.size();
            }
            ++line_no;
            std::string_view line = text.substr(pos, end - pos);
            pos = end + 1;
            if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
                if (end == text.size()) {
                    break;
                }
                continue;
            }
            try {
                articles.emplace_back(line_no, article_from_json(nlohmann::json::parse(line)));
            } catch (const nlohmann::json::exception& e) {
                rejected.push_back({line_no, std::string("malformed JSON: ") + e.what()});
            } catch (const DataError& e) {
                rejected.push_back({line_no, e.what()});
            }
            if (end == text.size()) {
                break;
            }
        }
    } else {
        auto rows = csv::parse(text);
        if (rows.empty()) {
            throw DataError("corpus file is empty");
        }
        const auto& header = rows.front();
        for (std::size_t r = 1; r < rows.size(); ++r) {
            nlohmann::json rec = nlohmann::json::object();
            for (std::size_t c = 0; c < header.size() && c < rows[r].size(); ++c) {
                if (!rows[r][c].empty()) {
                    rec[header[c]] = rows[r][c];
                }
            }
            try {
                articles.emplace_back(r + 1, article_from_json(rec));
            } catch (const DataError& e) {
                // Rows can span lines when quoted; report the record ordinal + 1 (header).
                rejected.push_back({r + 1, e.what()});
            }
        }
    }
    return finish(std::move(articles), std::move(rejected));
}

LoadResult load_corpus(const std::string& path, CorpusFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open corpus file " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return load_corpus_text(buffer.str(), format);
}

CorpusFormat format_from_path(const std::string& path) {
    auto dot = path.rfind('.');
    if (dot != std::string::npos && path.substr(dot) == ".csv") {
        return CorpusFormat::csv;
    }
    return CorpusFormat::jsonl;
}

std::string serialize_jsonl(const Corpus& corpus) {
    std::string out;
    for (const auto& a : corpus.articles()) {
        out += article_to_json(a).dump();
        out.push_back('\n');
    }
    return out;
}

void save_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out << serialize_jsonl(corpus);
}

// -- splits -----------------------------------------------------------------

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& r) {
    std::array<double, 3> ratios{r.train, r.validation, r.test};
    double sum = 0.0;
    for (double x : ratios) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw UsageError("split ratios must be non-negative");
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw UsageError(fmt::format("split ratios must sum to 1, got {}", sum));
    }
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        double exact = static_cast<double>(n) * ratios[i];
        sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        frac[i] = exact - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) {
        ++sizes[order[k % 3]];
    }
    return sizes;
}

DatasetSplit split_dataset(std::vector<std::string> ids, const SplitRatios& ratios, std::uint64_t seed) {
    if (ids.empty()) {
        throw DataError("cannot split an empty labeled set");
    }
    auto sizes = split_sizes(ids.size(), ratios);
    std::sort(ids.begin(), ids.end());
    CounterRng rng(seed, 0x5E11);
    shuffle(std::span<std::string>(ids), rng);
    DatasetSplit split;
    split.ratios = ratios;
    auto first = ids.begin();
    split.train.assign(first, first + static_cast<std::ptrdiff_t>(sizes[0]));
    first += static_cast<std::ptrdiff_t>(sizes[0]);
    split.validation.assign(first, first + static_cast<std::ptrdiff_t>(sizes[1]));
    first += static_cast<std::ptrdiff_t>(sizes[1]);
    split.test.assign(first, ids.end());
    return split;
}

DatasetSplit split_dataset(const Corpus& corpus, LabelKind kind, const SplitRatios& ratios,
                           std::uint64_t seed) {
    std::vector<std::string> ids;
    for (const auto& a : corpus.articles()) {
        if (label_of(a, kind)) {
            ids.push_back(a.id);
        }
    }
    if (ids.empty()) {
        throw DataError("no articles carry a " + std::string(to_string(kind)) + " label");
    }
    return split_dataset(std::move(ids), ratios, seed);
}

// -- gazetteer --------------------------------------------------------------

Gazetteer Gazetteer::parse(std::string_view csv_text) {
    Gazetteer g;
    auto rows = csv::parse(csv_text);
    std::size_t line = 0;
    std::vector<std::string> synthetic;
    for (const auto& row : rows) {
        ++line;
        if (row.empty() || row[0].empty() || row[0][0] == '#') {
            continue;
        }
        if (row.size() < 2) {
            throw DataError(fmt::format("gazetteer line {}: expected district,division", line));
        }
        if (line == 1 && unicode::fold_key(row[0]) == "district") {
            continue;
        }
        std::string district = row[0];
        std::string division = row[1];
        auto [it, fresh] = g.district_division_.emplace(district, division);
        if (!fresh && it->second != division) {
            throw DataError(fmt::format("gazetteer: district '{}' maps to both '{}' and '{}'", district,
                                        it->second, division));
        }
        if (fresh) {
            g.districts_.push_back(district);
        }
        g.by_key_[unicode::fold_key(district)] = Region{district, division};
        auto& list = division == kInternational ? synthetic : g.divisions_;
        if (std::find(list.begin(), list.end(), division) == list.end()) {
            list.push_back(division);
        }
    }
    if (g.divisions_.size() != 8) {
        throw DataError(fmt::format("gazetteer must define exactly 8 divisions, found {}", g.divisions_.size()));
    }
    for (auto& s : synthetic) {
        g.divisions_.push_back(std::move(s));
    }
    return g;
}

Gazetteer Gazetteer::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open gazetteer " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

std::optional<Region> Gazetteer::lookup(std::string_view place) const {
    auto it = by_key_.find(unicode::fold_key(place));
    if (it == by_key_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const std::string& Gazetteer::division_of(const std::string& district) const {
    auto it = district_division_.find(district);
    if (it == district_division_.end()) {
        throw DataError("unknown district '" + district + "'");
    }
    return it->second;
}

std::optional<Region> resolve_region(const Article& article, const Gazetteer& gazetteer) {
    return gazetteer.lookup(article.location);
}

std::vector<Region> resolve_all(const Corpus& corpus, const Gazetteer& gazetteer) {
    std::vector<Region> out;
    out.reserve(corpus.size());
    for (const auto& a : corpus.articles()) {
        auto r = resolve_region(a, gazetteer);
        out.push_back(r ? *r : Region{std::string(kUnresolved), std::string(kUnresolved)});
    }
    return out;
}

} // namespace newsmon
