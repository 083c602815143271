#include "newsmon/error.hpp"
#include "newsmon/rng.hpp"
#include "newsmon/textprep.hpp"
#include "newsmon/unicode.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>

using namespace newsmon;

namespace {

const char* kFixture =
    "<p>The government announced 12 new hospitals and testing centres in Dhaka, because coronavirus "
    "infections rose!</p> Covid testing of patients continued in Narayanganj; 45 doctors &amp; nurses "
    "joined the outbreak response teams to support quarantine measures in the districts across several "
    "crowded cities yesterday.";

PrepConfig fixture_config() {
    PrepConfig cfg;
    cfg.set_stopwords({"the", "and", "of", "in", "to", "government", "because", "announced", "continued",
                       "several", "yesterday", "joined", "crowded", "support", "response"});
    cfg.set_suffixes({"s", "ing", "es", "ings"});
    cfg.set_lemma_overrides({{"hospitals", "hospital"}, {"covid", "coronavirus"}});
    return cfg;
}

Article article(std::string id, std::string body) {
    Article a;
    a.id = std::move(id);
    a.body = std::move(body);
    a.published = Date(2020, 3, 1);
    return a;
}

} // namespace

TEST_CASE("normalize strips markup, digits and punctuation") {
    CHECK(normalize("<b>abc</b>  12 x!") == "abc x");
    CHECK(normalize("") == "");
    CHECK(normalize("  \t\n ") == "");
    CHECK(normalize("a&amp;b &nbsp; c") == "a b c");
    CHECK(normalize("Tom's 3rd e-mail") == "Tom s rd e mail");
    // Bengali digits and the danda are separators; vowel signs stay attached.
    CHECK(normalize("করোনাভাইরাসে ২০২০ সালে ৫ জন মারা গেছেন। নতুন") ==
          "করোনাভাইরাসে সালে জন মারা গেছেন নতুন");
    // ZWNJ inside a word does not split it.
    CHECK(normalize("র‌যাব") == "রযাব");
}

TEST_CASE("tokenize splits on whitespace") {
    CHECK(tokenize("a b  c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(tokenize("").empty());
    CHECK(tokenize(normalize("ঢাকায় নতুন করে ৩৫ জন আক্রান্ত।")) ==
          std::vector<std::string>{"ঢাকায়", "নতুন", "করে", "জন", "আক্রান্ত"});
}

TEST_CASE("strip_suffix") {
    std::vector<std::string> suffixes{"দের", "ের", "কে"};
    CHECK(strip_suffix("মানুষকে", suffixes) == "মানুষ");
    CHECK(strip_suffix("কে", suffixes) == "কে");
    // "ছাত্রদের" ends with both the 3-letter "দের" and the 2-letter "ের".
    CHECK(strip_suffix("ছাত্রদের", suffixes) == "ছাত্র");
    // Stem would keep fewer than two letters.
    CHECK(strip_suffix("xকে", suffixes) == "xকে");
    CHECK(strip_suffix("plain", suffixes) == "plain");

    PrepConfig cfg;
    cfg.set_suffixes({"ের", "কে", "দের"});
    CHECK(cfg.suffixes().front() == "দের");
}

TEST_CASE("letter counting is per Unicode letter, not per byte") {
    CHECK(unicode::letter_count("abcdef") == 6);
    // ক র ো ন া: two vowel signs are marks, not letters.
    CHECK(unicode::letter_count("করোনা") == 3);
    // ছ া ত ্ র: the hasant is a mark too.
    CHECK(unicode::letter_count("ছাত্র") == 3);
}

TEST_CASE("preprocess on the 40-token fixture") {
    REQUIRE(tokenize(normalize(kFixture)).size() == 40);
    auto cfg = fixture_config();
    CHECK(analyze(kFixture, cfg) ==
          std::vector<std::string>{"hospital", "coronavirus", "infection", "coronavirus", "patient", "narayanganj",
                                   "doctor", "outbreak", "quarantine", "measur", "district"});

    Vocabulary vocab;
    auto doc = preprocess(article("f", kFixture), cfg, VocabMode::build, vocab);
    CHECK(doc.tokens == std::vector<int>{0, 1, 2, 1, 3, 4, 5, 6, 7, 8, 9});
    CHECK(vocab.size() == 10);
    CHECK(vocab.df(1) == 1);
    CHECK(vocab.term_count(1) == 2);

    std::vector<Article> arts{article("f", kFixture)};
    auto prepared = prepare_corpus(Corpus(arts), cfg);
    CHECK(prepared.docs[0].tokens == std::vector<int>{3, 0, 4, 0, 8, 6, 2, 7, 9, 5, 1});
    CHECK(prepared.vocab.word(0) == "coronavirus");
}

TEST_CASE("preprocess degenerate and frozen cases") {
    auto cfg = fixture_config();
    Vocabulary vocab;
    auto empty = preprocess(article("e", "the and of in to"), cfg, VocabMode::build, vocab);
    CHECK(empty.tokens.empty());
    CHECK(vocab.document_count() == 1);

    Vocabulary none;
    CHECK_THROWS_AS(preprocess(article("x", "patients"), cfg, VocabMode::frozen, none), DataError);

    auto frozen = Vocabulary::from_words({"patient", "doctor"});
    auto d = preprocess(article("y", "doctors treat patients and infections"), cfg, VocabMode::frozen, frozen);
    CHECK(d.tokens == std::vector<int>{0, 1});
    CHECK(frozen.size() == 2);
}

TEST_CASE("lemma override wins and its raw form never appears") {
    auto cfg = fixture_config();
    auto out = analyze("covid covid hospitals", cfg);
    CHECK(out == std::vector<std::string>{"coronavirus", "coronavirus", "hospital"});
    // Override targets are protected from suffix stripping.
    CHECK(analyze("coronavirus", cfg) == std::vector<std::string>{"coronavirus"});

    PrepConfig chain;
    chain.set_lemma_overrides({{"aaaaaa", "bbbbbb"}, {"bbbbbb", "cccccc"}});
    CHECK(analyze("aaaaaa", chain) == std::vector<std::string>{"cccccc"});
    CHECK_THROWS_AS(chain.set_lemma_overrides({{"aaaaaa", "bbbbbb"}, {"bbbbbb", "aaaaaa"}}), DataError);
}

TEST_CASE("max_doc_len truncates and min_letters validates") {
    auto cfg = fixture_config();
    cfg.max_doc_len = 3;
    Vocabulary v;
    CHECK(preprocess(article("f", kFixture), cfg, VocabMode::build, v).tokens.size() == 3);
    CHECK_THROWS_AS(cfg.set_min_letters(0), UsageError);
}

TEST_CASE("bundled resources load") {
    auto cfg = PrepConfig::from_directory(testutil::source_path("resources"));
    CHECK(cfg.stopwords().count("এবং") == 1);
    CHECK(cfg.suffixes().size() >= 10);
    CHECK(cfg.lemma_overrides().at("covid") == "coronavirus");
    CHECK(analyze("ছাত্রদেরকে", cfg).empty());  // stem ছাত্র has 3 letters < 6
    cfg.set_min_letters(2);
    CHECK(analyze("ছাত্রদেরকে এবং", cfg) == std::vector<std::string>{"ছাত্র"});
}

// -- properties ---------------------------------------------------------------

namespace {

const std::vector<std::string> kPool = {
    "হাসপাতাল", "চিকিৎসক", "আক্রান্ত", "ছাত্র",  "মানুষ", "দের", "কে", "গুলো", "ের", "এবং",  "করোনা",
    "testing", "patients", "measures", "crisis", "doctor", "s",   "es",  "ing",  "covid", "hospitals", "the",
    "lockdown", "ab", "coronavirus", "<i>", "12", "।", ",", "&amp;",
};

std::string random_text(CounterRng& rng) {
    std::string text;
    std::size_t words = 1 + rng.index(25);
    for (std::size_t w = 0; w < words; ++w) {
        // Glue 1-3 pool pieces so suffixes stack.
        std::size_t parts = 1 + rng.index(3);
        for (std::size_t p = 0; p < parts; ++p) {
            text += kPool[rng.index(kPool.size())];
        }
        text += rng.index(4) == 0 ? "  " : " ";
    }
    return text;
}

std::vector<std::string> sorted(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        out += w + " ";
    }
    return out;
}

} // namespace

TEST_CASE("property: preprocessing is idempotent and respects the filters") {
    CounterRng rng(2024);
    auto bundled = PrepConfig::from_directory(testutil::source_path("resources"));
    for (int trial = 0; trial < 400; ++trial) {
        PrepConfig cfg = trial % 2 == 0 ? fixture_config() : bundled;
        cfg.set_min_letters(1 + rng.index(6));
        std::string text = random_text(rng);
        auto once = analyze(text, cfg);
        auto twice = analyze(join(once), cfg);
        REQUIRE_MESSAGE(sorted(once) == sorted(twice), text);
        for (const auto& w : once) {
            CHECK(unicode::letter_count(w) >= cfg.min_letters());
            CHECK(cfg.stopwords().count(w) == 0);
        }
    }
}

TEST_CASE("property: vocabulary content and ids are independent of document order") {
    CounterRng rng(99);
    auto cfg = fixture_config();
    cfg.set_min_letters(2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Article> arts;
        for (int i = 0; i < 12; ++i) {
            auto a = article("d" + std::to_string(i), random_text(rng));
            a.published = Date(2020, 3, 1) + static_cast<int>(rng.index(30));
            arts.push_back(a);
        }
        auto forward = prepare_corpus(Corpus(arts), cfg);
        std::reverse(arts.begin(), arts.end());
        auto backward = prepare_corpus(Corpus(arts), cfg);
        CHECK(forward.vocab.words() == backward.vocab.words());
        for (std::size_t i = 0; i < arts.size(); ++i) {
            CHECK(forward.docs[i].tokens == backward.docs[arts.size() - 1 - i].tokens);
        }
        for (std::size_t id = 0; id < forward.vocab.size(); ++id) {
            CHECK(forward.vocab.df(static_cast<int>(id)) <= forward.vocab.document_count());
            CHECK(cfg.stopwords().count(forward.vocab.word(static_cast<int>(id))) == 0);
        }
    }
}

TEST_CASE("vocabulary and token files round-trip") {
    auto cfg = fixture_config();
    std::vector<Article> arts{article("f", kFixture), article("g", "patients hospitals")};
    auto prepared = prepare_corpus(Corpus(arts), cfg);
    auto dir = testutil::scratch_dir("vocab_rt");
    prepared.vocab.save((dir / "vocab.tsv").string());
    auto loaded = Vocabulary::load((dir / "vocab.tsv").string());
    CHECK(loaded.words() == prepared.vocab.words());
    CHECK(loaded.df(*loaded.id("patient")) == 2);
    CHECK(loaded.hash() == prepared.vocab.hash());
    save_tokens(prepared.docs, (dir / "tokens.jsonl").string());
    auto docs = load_tokens((dir / "tokens.jsonl").string());
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].tokens == prepared.docs[0].tokens);
    CHECK(docs[1].article_id == "g");
}
