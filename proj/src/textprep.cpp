#include "newsmon/textprep.hpp"

#include "newsmon/error.hpp"
#include "newsmon/unicode.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace newsmon {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

// -- resources --------------------------------------------------------------

std::vector<std::string> read_list_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        auto t = trim(line);
        if (!t.empty()) {
            out.push_back(std::move(t));
        }
    }
    return out;
}

std::unordered_map<std::string, std::string> read_override_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    std::unordered_map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        if (trim(line).empty()) {
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError(fmt::format("{}:{}: expected raw<TAB>lemma", path, line_no));
        }
        auto raw = trim(std::string_view(line).substr(0, tab));
        auto lemma = trim(std::string_view(line).substr(tab + 1));
        if (raw.empty() || lemma.empty()) {
            throw DataError(fmt::format("{}:{}: empty override entry", path, line_no));
        }
        out[raw] = lemma;
    }
    return out;
}

PrepConfig PrepConfig::from_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    PrepConfig cfg;
    auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
    if (fs::exists(path("stopwords.txt"))) {
        auto words = read_list_file(path("stopwords.txt"));
        std::set<std::string> set;
        for (auto& w : words) {
            set.insert(unicode::to_lower(w));
        }
        cfg.set_stopwords(std::move(set));
    }
    if (fs::exists(path("suffixes.txt"))) {
        cfg.set_suffixes(read_list_file(path("suffixes.txt")));
    }
    if (fs::exists(path("lemma_overrides.tsv"))) {
        cfg.set_lemma_overrides(read_override_file(path("lemma_overrides.tsv")));
    }
    return cfg;
}

void PrepConfig::set_stopwords(std::set<std::string> words) {
    stopwords_ = std::move(words);
}

void PrepConfig::set_suffixes(std::vector<std::string> suffixes) {
    std::stable_sort(suffixes.begin(), suffixes.end(), [](const std::string& a, const std::string& b) {
        auto la = unicode::decode(a).size();
        auto lb = unicode::decode(b).size();
        if (la != lb) {
            return la > lb;
        }
        return a.size() > b.size();
    });
    suffixes.erase(std::unique(suffixes.begin(), suffixes.end()), suffixes.end());
    suffixes_ = std::move(suffixes);
}

void PrepConfig::set_lemma_overrides(std::unordered_map<std::string, std::string> overrides) {
    std::unordered_map<std::string, std::string> resolved;
    for (const auto& [raw, lemma] : overrides) {
        std::string target = lemma;
        std::set<std::string> seen{raw};
        while (true) {
            auto it = overrides.find(target);
            if (it == overrides.end() || it->second == target) {
                break;
            }
            if (!seen.insert(target).second) {
                throw DataError("lemma override cycle through '" + raw + "'");
            }
            target = it->second;
        }
        if (target != raw) {
            resolved[raw] = target;
        }
    }
    overrides_ = std::move(resolved);
    targets_.clear();
    for (const auto& [raw, lemma] : overrides_) {
        targets_.insert(lemma);
    }
}

void PrepConfig::set_min_letters(std::size_t n) {
    if (n < 1) {
        throw UsageError("min_letters must be at least 1");
    }
    min_letters_ = n;
}

// -- vocabulary -------------------------------------------------------------

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    Vocabulary v;
    for (auto& w : words) {
        v.add(w);
    }
    return v;
}

std::optional<int> Vocabulary::id(std::string_view word) const {
    auto it = ids_.find(std::string(word));
    if (it == ids_.end()) {
        return std::nullopt;
    }
    return it->second;
}

int Vocabulary::add(const std::string& word) {
    auto [it, fresh] = ids_.emplace(word, static_cast<int>(words_.size()));
    if (fresh) {
        words_.push_back(word);
        df_.push_back(0);
        counts_.push_back(0);
    }
    return it->second;
}

void Vocabulary::observe(const std::vector<int>& ids) {
    ++documents_;
    std::vector<int> distinct = ids;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (int id : distinct) {
        ++df_.at(static_cast<std::size_t>(id));
    }
    for (int id : ids) {
        ++counts_.at(static_cast<std::size_t>(id));
    }
    total_tokens_ += ids.size();
}

std::string Vocabulary::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](unsigned char c) {
        h ^= c;
        h *= 0x100000001b3ULL;
    };
    for (const auto& w : words_) {
        for (char c : w) {
            feed(static_cast<unsigned char>(c));
        }
        feed(0);
    }
    return fmt::format("{:016x}", h);
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out << "id\tword\tdf\tcount\n";
    for (std::size_t i = 0; i < words_.size(); ++i) {
        out << i << '\t' << words_[i] << '\t' << df_[i] << '\t' << counts_[i] << '\n';
    }
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open vocabulary " + path);
    }
    Vocabulary v;
    std::string line;
    std::getline(in, line);
    std::size_t expected = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        std::size_t id = 0, df = 0, count = 0;
        std::string word;
        if (!(fields >> id) || fields.get() != '\t' || !std::getline(fields, word, '\t') || !(fields >> df >> count)) {
            throw DataError("malformed vocabulary line: " + line);
        }
        if (id != expected++) {
            throw DataError("vocabulary ids must be dense and ordered");
        }
        v.add(word);
        v.df_.back() = df;
        v.counts_.back() = count;
        v.total_tokens_ += count;
    }
    return v;
}

// -- text pipeline ----------------------------------------------------------

std::string normalize(std::string_view text) {
    std::string stripped;
    stripped.reserve(text.size());
    // Tags and entities become separators.
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '<') {
            auto close = text.find('>', i);
            if (close != std::string_view::npos) {
                stripped.push_back(' ');
                i = close;
                continue;
            }
        } else if (c == '&') {
            auto semi = text.find(';', i);
            if (semi != std::string_view::npos && semi - i <= 10 && semi > i + 1) {
                bool entity = true;
                for (std::size_t k = i + 1; k < semi; ++k) {
                    char e = text[k];
                    if (!(std::isalnum(static_cast<unsigned char>(e)) || e == '#')) {
                        entity = false;
                        break;
                    }
                }
                if (entity) {
                    stripped.push_back(' ');
                    i = semi;
                    continue;
                }
            }
        }
        stripped.push_back(c);
    }

    std::string out;
    out.reserve(stripped.size());
    bool pending_space = false;
    for (char32_t cp : unicode::decode(stripped)) {
        if (cp == 0x200C || cp == 0x200D) {
            // ZWNJ/ZWJ shape Bengali conjuncts; they are not separators.
            continue;
        }
        if (unicode::is_letter(cp) || unicode::is_mark(cp)) {
            if (pending_space && !out.empty()) {
                out.push_back(' ');
            }
            pending_space = false;
            unicode::append(out, cp);
        } else {
            pending_space = true;
        }
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) {
            ++j;
        }
        if (j > i) {
            out.emplace_back(text.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

std::string strip_suffix(const std::string& word, const std::vector<std::string>& suffixes) {
    for (const auto& suffix : suffixes) {
        if (suffix.size() < word.size() && ends_with(word, suffix)) {
            std::string stem = word.substr(0, word.size() - suffix.size());
            return unicode::letter_count(stem) >= 2 ? stem : word;
        }
        if (suffix == word) {
            return word;
        }
    }
    return word;
}

std::vector<std::string> analyze(std::string_view text, const PrepConfig& config) {
    std::vector<std::string> out;
    const auto& overrides = config.lemma_overrides();
    for (auto& raw : tokenize(normalize(text))) {
        std::string surface = config.lowercase ? unicode::to_lower(raw) : raw;
        std::string word = surface;
        if (auto it = overrides.find(word); it != overrides.end()) {
            word = it->second;
        } else if (!config.is_override_target(word)) {
            for (std::string next = strip_suffix(word, config.suffixes()); next != word;
                 next = strip_suffix(word, config.suffixes())) {
                word = std::move(next);
            }
            if (auto hit = overrides.find(word); hit != overrides.end()) {
                word = hit->second;
            }
        }
        if (config.stopwords().count(word) || config.stopwords().count(surface)) {
            continue;
        }
        if (unicode::letter_count(word) < config.min_letters()) {
            continue;
        }
        out.push_back(std::move(word));
    }
    return out;
}

std::string article_text(const Article& article, const TextFields& fields) {
    std::string text;
    auto add = [&](const std::string& part) {
        if (!text.empty()) {
            text.push_back('\n');
        }
        text += part;
    };
    if (fields.title) {
        add(article.title);
    }
    if (fields.body) {
        add(article.analysis_text());
    }
    if (fields.summary) {
        add(article.summary);
    }
    return text;
}

TokenizedDoc preprocess(const Article& article, const PrepConfig& config, VocabMode mode, Vocabulary& vocab) {
    if (mode == VocabMode::frozen && vocab.empty()) {
        throw DataError("frozen vocabulary is empty");
    }
    TokenizedDoc doc;
    doc.article_id = article.id;
    for (const auto& word : analyze(article_text(article, config.fields), config)) {
        if (config.max_doc_len && doc.tokens.size() >= *config.max_doc_len) {
            break;
        }
        if (mode == VocabMode::build) {
            doc.tokens.push_back(vocab.add(word));
        } else if (auto id = vocab.id(word)) {
            doc.tokens.push_back(*id);
        }
    }
    if (mode == VocabMode::build) {
        vocab.observe(doc.tokens);
    }
    return doc;
}

namespace {

void attach_context(TokenizedDoc& doc, const Corpus& corpus, const Article& a, const Gazetteer* gazetteer) {
    doc.week = corpus.week_of(a);
    if (gazetteer) {
        auto r = resolve_region(a, *gazetteer);
        doc.region = r ? *r : Region{std::string(kUnresolved), std::string(kUnresolved)};
    } else {
        doc.region = Region{std::string(kUnresolved), std::string(kUnresolved)};
    }
}

} // namespace

PreparedCorpus prepare_corpus(const Corpus& corpus, const PrepConfig& config, const Gazetteer* gazetteer) {
    std::vector<std::vector<std::string>> analyzed;
    analyzed.reserve(corpus.size());
    std::map<std::string, std::size_t> freq;
    for (const auto& a : corpus.articles()) {
        auto words = analyze(article_text(a, config.fields), config);
        if (config.max_doc_len && words.size() > *config.max_doc_len) {
            words.resize(*config.max_doc_len);
        }
        for (const auto& w : words) {
            ++freq[w];
        }
        analyzed.push_back(std::move(words));
    }

    std::vector<std::string> keep;
    keep.reserve(freq.size());
    if (config.max_vocab && freq.size() > *config.max_vocab) {
        std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& x, const auto& y) { return x.second > y.second; });
        ranked.resize(*config.max_vocab);
        for (auto& [w, n] : ranked) {
            keep.push_back(w);
        }
    } else {
        for (auto& [w, n] : freq) {
            keep.push_back(w);
        }
    }

    PreparedCorpus out;
    out.vocab = Vocabulary::from_words(std::move(keep));
    out.docs.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        TokenizedDoc doc;
        doc.article_id = corpus[i].id;
        for (const auto& w : analyzed[i]) {
            if (auto id = out.vocab.id(w)) {
                doc.tokens.push_back(*id);
            }
        }
        out.vocab.observe(doc.tokens);
        attach_context(doc, corpus, corpus[i], gazetteer);
        out.docs.push_back(std::move(doc));
    }
    return out;
}

std::vector<TokenizedDoc> encode_corpus(const Corpus& corpus, const PrepConfig& config, const Vocabulary& vocab,
                                        const Gazetteer* gazetteer) {
    std::vector<TokenizedDoc> docs;
    docs.reserve(corpus.size());
    Vocabulary frozen = vocab;
    for (const auto& a : corpus.articles()) {
        auto doc = preprocess(a, config, VocabMode::frozen, frozen);
        attach_context(doc, corpus, a, gazetteer);
        docs.push_back(std::move(doc));
    }
    return docs;
}

void save_tokens(const std::vector<TokenizedDoc>& docs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    for (const auto& d : docs) {
        nlohmann::json j;
        j["id"] = d.article_id;
        j["week"] = d.week;
        j["district"] = d.region.district;
        j["division"] = d.region.division;
        j["tokens"] = d.tokens;
        out << j.dump() << '\n';
    }
}

std::vector<TokenizedDoc> load_tokens(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open token file " + path);
    }
    std::vector<TokenizedDoc> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            auto j = nlohmann::json::parse(line);
            TokenizedDoc d;
            d.article_id = j.at("id").get<std::string>();
            d.week = j.at("week").get<int>();
            d.region.district = j.value("district", std::string(kUnresolved));
            d.region.division = j.value("division", std::string(kUnresolved));
            d.tokens = j.at("tokens").get<std::vector<int>>();
            docs.push_back(std::move(d));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(fmt::format("{}:{}: {}", path, line_no, e.what()));
        }
    }
    return docs;
}

} // namespace newsmon
