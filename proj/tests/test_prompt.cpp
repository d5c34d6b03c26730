#include <doctest.h>

#include <set>

#include "sgic/errors.hpp"
#include "sgic/prompt.hpp"
#include "sgic/util.hpp"
#include "test_support.hpp"

using namespace sgic;

namespace {

QASample golden_sample() {
    QASample s;
    s.id = "g1";
    s.question = "Which observatory kept the reference meridian?";
    const char* texts[] = {
        "The Royal Observatory in Greenwich set the prime meridian.",
        "The Paris Observatory predates Greenwich by nearly a decade.",
        "Nautical almanacs used Greenwich as reference from 1767.",
    };
    for (int i = 0; i < 3; ++i) {
        Document d;
        d.id = "d" + std::to_string(i + 1);
        d.title = "T" + std::to_string(i + 1);
        d.text = texts[i];
        s.documents.push_back(std::move(d));
    }
    return s;
}

std::string golden(const std::string& name) {
    return read_text_file(testsup::goldens() / name);
}

QASample placement_sample(std::size_t n, std::set<std::size_t> relevant_at) {
    QASample s;
    s.id = "perm";
    s.question = "q";
    for (std::size_t i = 0; i < n; ++i) {
        Document d;
        d.id = "d" + std::to_string(i);
        d.text = "text " + std::to_string(i);
        d.gold_relevant = relevant_at.count(i) > 0;
        s.documents.push_back(std::move(d));
    }
    return s;
}

std::vector<std::size_t> relevant_positions(const QASample& s) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < s.documents.size(); ++i)
        if (s.documents[i].gold_relevant.value_or(false)) out.push_back(i);
    return out;
}

}  // namespace

TEST_CASE("initial prompt matches the golden file byte-for-byte") {
    const auto t = TemplateSet::defaults();
    CHECK(render_initial(t, golden_sample(), RenderOptions{}) == golden("initial_qa.txt"));
}

TEST_CASE("document probe prompt matches the golden file byte-for-byte") {
    const auto t = TemplateSet::defaults();
    const auto s = golden_sample();
    CHECK(render_doc_probe(t, s.question, s.documents[0], RenderOptions{}) ==
          golden("doc_probe.txt"));
}

TEST_CASE("calibration prompt matches the golden file byte-for-byte") {
    const auto t = TemplateSet::defaults();
    DocScoreSet scores;
    scores.raw = {0.1, 0.4, 0.7};
    scores.normalized = {0.0, 50.0, 100.0};
    std::vector<RoundHistoryEntry> history{
        {1, "The Paris Observatory", 73},
        {2, "The Royal Observatory", 51},
    };
    CHECK(render_calibration(t, golden_sample(), scores, history, RenderOptions{}) ==
          golden("calibration.txt"));
}

TEST_CASE("key-tag prompt matches the golden file byte-for-byte") {
    const auto t = TemplateSet::defaults();
    CHECK(render_key_tag(t, golden_sample(), {"d1"}, RenderOptions{}) == golden("key_tag.txt"));
}

TEST_CASE("math-step calibration prompt matches the golden file byte-for-byte") {
    const auto t = TemplateSet::defaults();
    std::vector<GsmStep> steps{
        {"Natalia sold 48 / 2 = 24 clips in May.", 57},
        {"Altogether she sold 48 + 24 = 72 clips.", 12},
        {"The final answer is 72.", 8},
    };
    CHECK(render_gsm8k_calibration(t, "How many clips did Natalia sell in April and May?",
                                   steps) == golden("gsm8k_calibration.txt"));
}

TEST_CASE("template files on disk reproduce the embedded defaults") {
    const auto from_disk = TemplateSet::load_dir(testsup::templates_dir());
    const auto embedded = TemplateSet::defaults();
    CHECK(from_disk.initial_qa == embedded.initial_qa);
    CHECK(from_disk.doc_probe == embedded.doc_probe);
    CHECK(from_disk.calibration == embedded.calibration);
    CHECK(from_disk.key_tag == embedded.key_tag);
    CHECK(from_disk.gsm8k_calibration == embedded.gsm8k_calibration);
}

TEST_CASE("calibration prompt validation") {
    const auto t = TemplateSet::defaults();
    const auto s = golden_sample();
    DocScoreSet scores;
    scores.normalized = {0.0, 50.0};  // one score short
    std::vector<RoundHistoryEntry> history{{1, "x", 10}};
    CHECK_THROWS_AS(render_calibration(t, s, scores, history, RenderOptions{}),
                    InvalidInputError);

    scores.normalized = {0.0, 50.0, 100.0};
    CHECK_THROWS_AS(render_calibration(t, s, scores, {}, RenderOptions{}), InvalidInputError);

    std::vector<RoundHistoryEntry> unsorted{{2, "x", 10}, {1, "y", 20}};
    CHECK_THROWS_AS(render_calibration(t, s, scores, unsorted, RenderOptions{}),
                    InvalidInputError);

    std::vector<RoundHistoryEntry> out_of_range{{1, "x", 101}};
    CHECK_THROWS_AS(render_calibration(t, s, scores, out_of_range, RenderOptions{}),
                    InvalidInputError);
}

TEST_CASE("key-tag rejects unknown document ids") {
    const auto t = TemplateSet::defaults();
    CHECK_THROWS_AS(render_key_tag(t, golden_sample(), {"nope"}, RenderOptions{}),
                    InvalidInputError);
}

TEST_CASE("display score rounds half up onto the printed integer scale") {
    CHECK(display_score(73.5) == 74);
    CHECK(display_score(73.49) == 73);
    CHECK(display_score(0.0) == 0);
    CHECK(display_score(100.0) == 100);
}

TEST_CASE("placement: two relevant docs among ten land at begin, center, end") {
    const auto s = placement_sample(10, {3, 7});

    const auto begin = permute_documents(s, Placement::begin, 1);
    CHECK(relevant_positions(begin) == std::vector<std::size_t>{0, 1});

    const auto middle = permute_documents(s, Placement::middle, 1);
    CHECK(relevant_positions(middle) == std::vector<std::size_t>{4, 5});

    const auto end = permute_documents(s, Placement::end, 1);
    CHECK(relevant_positions(end) == std::vector<std::size_t>{8, 9});
}

TEST_CASE("placement keeps the document multiset and non-relevant order") {
    const auto s = placement_sample(10, {0, 9});
    for (const Placement p : {Placement::begin, Placement::middle, Placement::end}) {
        const auto out = permute_documents(s, p, 1);
        REQUIRE(out.documents.size() == 10);
        std::multiset<std::string> in_ids, out_ids;
        for (const auto& d : s.documents) in_ids.insert(d.id);
        for (const auto& d : out.documents) out_ids.insert(d.id);
        CHECK(in_ids == out_ids);
    }
}

TEST_CASE("random placement is a seeded permutation") {
    const auto s = placement_sample(10, {3, 7});
    const auto a = permute_documents(s, Placement::random, 99);
    const auto b = permute_documents(s, Placement::random, 99);
    const auto c = permute_documents(s, Placement::random, 100);
    auto ids = [](const QASample& q) {
        std::vector<std::string> v;
        for (const auto& d : q.documents) v.push_back(d.id);
        return v;
    };
    CHECK(ids(a) == ids(b));
    CHECK(ids(a) != ids(c));
    const auto in_ids = ids(s);
    const auto out_ids = ids(a);
    CHECK(std::multiset<std::string>(in_ids.begin(), in_ids.end()) ==
          std::multiset<std::string>(out_ids.begin(), out_ids.end()));
}

TEST_CASE("placement requires relevance flags") {
    QASample s = placement_sample(4, {0});
    s.documents[2].gold_relevant.reset();
    CHECK_THROWS_AS(permute_documents(s, Placement::begin, 1), InvalidInputError);
}

TEST_CASE("document truncation caps the word count and preserves spacing") {
    Document d;
    d.id = "d";
    d.text = "one two  three\tfour five";

    CHECK(truncate_document(d, 100).text == d.text);  // under the cap: untouched
    const auto cut = truncate_document(d, 4);         // keeps limit-1 = 3 words
    CHECK(cut.text == "one two  three");
    CHECK(truncate_document(d, 2).text == "one");
    CHECK(truncate_document(d, 1).text == "one");  // never empties the document
    CHECK_THROWS_AS(truncate_document(d, 0), InvalidInputError);

    // Truncation is idempotent.
    CHECK(truncate_document(cut, 4).text == cut.text);
}

TEST_CASE("prompt renderers reject empty document lists") {
    const auto t = TemplateSet::defaults();
    QASample s;
    s.id = "empty";
    s.question = "q";
    CHECK_THROWS_AS(render_initial(t, s, RenderOptions{}), InvalidInputError);
    CHECK_THROWS_AS(render_gsm8k_calibration(t, "q", {}), InvalidInputError);
}
