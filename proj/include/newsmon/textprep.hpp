#pragma once

#include "newsmon/corpus.hpp"

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace newsmon {

/// Which article fields feed the token stream (body only by default).
struct TextFields {
    bool title = false;
    bool body = true;
    bool summary = false;
};

class PrepConfig {
public:
    PrepConfig() = default;

    /// Loads stopwords.txt, suffixes.txt and lemma_overrides.tsv from `dir`;
    /// a missing file leaves that list empty.
    static PrepConfig from_directory(const std::string& dir);

    void set_stopwords(std::set<std::string> words);
    /// Sorted longest-first (letter count, then bytes) on insertion.
    void set_suffixes(std::vector<std::string> suffixes);
    /// Resolves chains (a->b, b->c becomes a->c); throws DataError on cycles.
    void set_lemma_overrides(std::unordered_map<std::string, std::string> overrides);
    void set_min_letters(std::size_t n);

    const std::set<std::string>& stopwords() const { return stopwords_; }
    const std::vector<std::string>& suffixes() const { return suffixes_; }
    const std::unordered_map<std::string, std::string>& lemma_overrides() const { return overrides_; }
    bool is_override_target(const std::string& w) const { return targets_.count(w) > 0; }
    std::size_t min_letters() const { return min_letters_; }

    std::optional<std::size_t> max_vocab;
    std::optional<std::size_t> max_doc_len;
    bool lowercase = true;
    TextFields fields;

private:
    std::set<std::string> stopwords_;
    std::vector<std::string> suffixes_;
    std::unordered_map<std::string, std::string> overrides_;
    std::set<std::string> targets_;
    std::size_t min_letters_ = 6;
};

/// One entry per line, UTF-8, '#' starts a comment, blank lines skipped.
std::vector<std::string> read_list_file(const std::string& path);
/// "raw<TAB>lemma" per line.
std::unordered_map<std::string, std::string> read_override_file(const std::string& path);

class Vocabulary {
public:
    Vocabulary() = default;
    /// Ids assigned in lexicographic (byte) order of the words.
    static Vocabulary from_words(std::vector<std::string> words);

    std::size_t size() const { return words_.size(); }
    bool empty() const { return words_.empty(); }
    std::optional<int> id(std::string_view word) const;
    const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& words() const { return words_; }

    /// Adds a word at the next free id if new; returns its id.
    int add(const std::string& word);

    std::size_t df(int id) const { return df_.at(static_cast<std::size_t>(id)); }
    std::size_t term_count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
    std::size_t total_tokens() const { return total_tokens_; }
    std::size_t document_count() const { return documents_; }

    /// Accounts one document's encoded tokens in df/count tables.
    void observe(const std::vector<int>& ids);

    /// FNV-1a over the id-ordered word list; stored with fitted models.
    std::string hash() const;

    /// TSV "id<TAB>word<TAB>df<TAB>count" with a header line.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> ids_;
    std::vector<std::size_t> df_;
    std::vector<std::size_t> counts_;
    std::size_t total_tokens_ = 0;
    std::size_t documents_ = 0;
};

struct TokenizedDoc {
    std::string article_id;
    std::vector<int> tokens;
    int week = 0;
    Region region;
};

enum class VocabMode { build, frozen };

/// Strips HTML tags and entities, digits, punctuation and symbols; collapses
/// whitespace. Letters and combining marks of any script are kept.
std::string normalize(std::string_view text);
/// Splits on whitespace, order preserved.
std::vector<std::string> tokenize(std::string_view text);
/// Removes the first listed suffix that matches, provided the stem keeps at
/// least two letters; otherwise returns the word unchanged.
std::string strip_suffix(const std::string& word, const std::vector<std::string>& suffixes);

/// The full chain up to (not including) encoding:
/// normalize -> tokenize -> lowercase -> lemma override -> suffix strip ->
/// stopword filter -> min-length filter.
std::vector<std::string> analyze(std::string_view text, const PrepConfig& config);

/// Text of the configured fields, joined by newlines.
std::string article_text(const Article& article, const TextFields& fields);

/// Encodes one article. Build mode extends `vocab` with unseen words (and
/// updates df); frozen mode drops out-of-vocabulary words and throws if the
/// vocabulary is empty.
TokenizedDoc preprocess(const Article& article, const PrepConfig& config, VocabMode mode, Vocabulary& vocab);

struct PreparedCorpus {
    Vocabulary vocab;
    std::vector<TokenizedDoc> docs;  // corpus order
};

/// Two-pass build: analyze every article, keep the max_vocab most frequent
/// words (ties lexicographic), assign ids lexicographically, then encode.
/// Week indices count from the corpus start; regions come from the
/// gazetteer when one is given.
PreparedCorpus prepare_corpus(const Corpus& corpus, const PrepConfig& config, const Gazetteer* gazetteer = nullptr);

/// Encodes with an existing vocabulary (OOV dropped).
std::vector<TokenizedDoc> encode_corpus(const Corpus& corpus, const PrepConfig& config, const Vocabulary& vocab,
                                        const Gazetteer* gazetteer = nullptr);

/// JSONL: {"id":..., "week":..., "division":..., "district":..., "tokens":[...]}.
void save_tokens(const std::vector<TokenizedDoc>& docs, const std::string& path);
std::vector<TokenizedDoc> load_tokens(const std::string& path);

} // namespace newsmon
