#include <gtest/gtest.h>

#include <set>

#include <grevo/parser.hpp>

#include "oracle.hpp"
#include "test_support.hpp"

using namespace grevo;
using grevo::testing::GeneBuilder;
using grevo::testing::words;

namespace {

std::set<std::tuple<Symbol, std::size_t, std::size_t>> edge_set(const Chart& c)
{
    std::set<std::tuple<Symbol, std::size_t, std::size_t>> s;
    for (const auto& e : c.edges()) s.insert({e.symbol, e.start, e.end});
    return s;
}

Gene dog_barks() { return GeneBuilder().rule(10, 0, {0, 1}).tag("dog", 0, 0).tag("barks", 1, 1).build(); }

} // namespace

TEST(ParseChart, SingleForcedDerivation)
{
    const Chart c = parse_chart(words({"dog", "barks"}), dog_barks());
    using T = std::tuple<Symbol, std::size_t, std::size_t>;
    EXPECT_EQ(edge_set(c), (std::set<T>{{0, 0, 1}, {1, 1, 2}, {10, 0, 2}}));
    const auto top = c.find(10, 0, 2);
    ASSERT_TRUE(top);
    EXPECT_EQ(c.edge(*top).rule_count, 1);
    EXPECT_EQ(c.total_rule_applications(), 1u);
    EXPECT_EQ(render_tree(c, *top), "10\n  0 dog\n  1 barks\n");
    EXPECT_EQ(render_tree(c, *c.find(0, 0, 1)), "0 dog\n");
    EXPECT_EQ(largest_edge(c), top);
}

TEST(ParseChart, KeepsTheCheapestDerivation)
{
    GeneBuilder b;
    b.config.rules_per_lhs = 2;
    // 10 -> 0 1 costs 1; 10 -> 11 12 with 11 -> 0 and 12 -> 1 costs 3
    b.rule(10, 0, {0, 1}).rule(10, 1, {11, 12}).rule(11, 0, {0}).rule(12, 0, {1});
    const Gene g = b.tag("dog", 0, 0).tag("barks", 1, 1).build();
    const Chart c = parse_chart(words({"dog", "barks"}), g);
    const auto top = c.find(10, 0, 2);
    ASSERT_TRUE(top);
    EXPECT_EQ(c.edge(*top).rule_count, 1);
    EXPECT_EQ(c.edge(*top).rule, g.rule_index(10, 0));

    const auto d = grevo::testing::brute_force_derivations(words({"dog", "barks"}), g);
    EXPECT_EQ(d.costs.at({10, 0, 2}), (std::set<int>{1, 3}));
    EXPECT_FALSE(grevo::testing::oracle_mismatch(words({"dog", "barks"}), g));
}

TEST(ParseChart, UnknownTermsAreDiagnosedNotFatal)
{
    const Chart c = parse_chart(words({"dog", "meows", "barks"}), dog_barks());
    EXPECT_EQ(c.unknown_terms(), (std::vector<std::size_t>{1}));
    EXPECT_EQ(c.edges().size(), 2u);
    const Cover cover = select_cover(c);
    EXPECT_EQ(cover.uncovered, (std::vector<std::size_t>{1}));
}

TEST(ParseChart, UnaryCyclesTerminate)
{
    const Gene g = GeneBuilder().rule(10, 0, {11}).rule(11, 0, {10}).rule(12, 0, {0}).tag("x", 0, 0).build();
    const Chart c = parse_chart(words({"x"}), g);
    EXPECT_FALSE(c.find(10, 0, 1));
    EXPECT_EQ(c.edge(*c.find(12, 0, 1)).rule_count, 1);

    const Gene loop =
        GeneBuilder().rule(10, 0, {0}).rule(11, 0, {10}).rule(12, 0, {11}).rule(13, 0, {12}).tag("x", 0, 0).build();
    const Chart lc = parse_chart(words({"x"}), loop);
    EXPECT_EQ(lc.edge(*lc.find(13, 0, 1)).rule_count, 4);
    EXPECT_EQ(lc.total_rule_applications(), 4u);
}

TEST(ParseChart, AgreesWithEnumeratorOnRandomGenes)
{
    Rng rng(4242);
    std::size_t checked = 0;
    while (checked < 300) {
        auto [gene, sentence] = grevo::testing::random_oracle_case(rng);
        try {
            const auto m = grevo::testing::oracle_mismatch(sentence, gene);
            ASSERT_FALSE(m) << *m << "\n" << gene_to_string(gene);
            ++checked;
        } catch (const grevo::testing::DerivationLimitExceeded&) {
        }
    }
}

TEST(ParseChart, EdgesAreSortedAndCostsAdditive)
{
    const Corpus corpus = grevo::testing::synthetic_corpus(3, 5, 4, 3);
    Rng rng(17);
    const Gene g = random_gene(GeneConfig{}, make_vocabulary(corpus.vocabulary()), rng);
    for (const auto& d : corpus.documents())
        for (const auto& s : d.sentences) {
            const Chart c = parse_chart(s, g);
            const auto edges = c.edges();
            for (std::size_t i = 0; i < edges.size(); ++i) {
                const Edge& e = edges[i];
                if (i > 0) {
                    const Edge& p = edges[i - 1];
                    EXPECT_LT(std::tie(p.start, p.end, p.symbol), std::tie(e.start, e.end, e.symbol));
                }
                EXPECT_EQ(c.find(e.symbol, e.start, e.end), i);
                int sum = e.is_lexical() ? 0 : 1;
                std::size_t at = e.start;
                for (std::size_t ch : e.children) {
                    EXPECT_EQ(c.edge(ch).start, at);
                    at = c.edge(ch).end;
                    sum += c.edge(ch).rule_count;
                }
                if (!e.is_lexical()) {
                    EXPECT_EQ(at, e.end);
                }
                EXPECT_EQ(sum, e.rule_count);
            }
        }
}

TEST(SelectCover, FullSentenceEdgeWins)
{
    const Chart c = parse_chart(words({"dog", "barks"}), dog_barks());
    const Cover cover = select_cover(c);
    ASSERT_EQ(cover.constituents.size(), 1u);
    EXPECT_EQ(c.edge(cover.constituents[0]).symbol, 10);
    EXPECT_TRUE(cover.uncovered.empty());
}

TEST(SelectCover, FallsBackToPosEdges)
{
    const Gene g = GeneBuilder().tag("dog", 0, 0).tag("barks", 1, 1).build();
    const Chart c = parse_chart(words({"dog", "barks"}), g);
    const Cover cover = select_cover(c);
    ASSERT_EQ(cover.constituents.size(), 2u);
    EXPECT_EQ(c.edge(cover.constituents[0]).symbol, 0);
    EXPECT_EQ(c.edge(cover.constituents[1]).symbol, 1);
}

TEST(SelectCover, LongestFirst)
{
    GeneBuilder b;
    b.rule(10, 0, {0, 1, 2}).rule(11, 0, {0, 1});
    const Gene g = b.tag("x", 0, 0).tag("y", 1, 1).tag("z", 2, 2).build();
    const Chart c = parse_chart(words({"x", "y", "z"}), g);
    ASSERT_TRUE(c.find(11, 0, 2));
    const Cover cover = select_cover(c);
    ASSERT_EQ(cover.constituents.size(), 1u);
    const Edge& e = c.edge(cover.constituents[0]);
    EXPECT_EQ(e.symbol, 10);
    EXPECT_EQ(e.end, 3u);
}

TEST(SelectCover, TieBreaksOnRuleCountThenSymbol)
{
    // 10 -> 11 (cost 2) and 11 -> 0 1 (cost 1) over the same span: 11 wins
    const Gene g = GeneBuilder().rule(10, 0, {11}).rule(11, 0, {0, 1}).tag("x", 0, 0).tag("y", 1, 1).build();
    const Chart c = parse_chart(words({"x", "y"}), g);
    EXPECT_EQ(c.edge(select_cover(c).constituents[0]).symbol, 11);

    // two POS edges of equal cost: lower id
    const Gene h = GeneBuilder().tag("x", 4, 2).build();
    const Chart hc = parse_chart(words({"x"}), h);
    EXPECT_EQ(hc.edges().size(), 2u);
    EXPECT_EQ(hc.edge(select_cover(hc).constituents[0]).symbol, 2);
}

TEST(SelectCover, DisjointAndExhaustive)
{
    const Corpus corpus = grevo::testing::synthetic_corpus(4, 5, 4, 3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const Gene g = random_gene(GeneConfig{}, make_vocabulary(corpus.vocabulary()), rng);
        for (const auto& d : corpus.documents())
            for (const auto& s : d.sentences) {
                const Chart c = parse_chart(s, g);
                const Cover cover = select_cover(c);
                std::vector<int> hits(s.size(), 0);
                for (auto i : cover.constituents)
                    for (std::size_t p = c.edge(i).start; p < c.edge(i).end; ++p) ++hits[p];
                for (auto p : cover.uncovered) ++hits[p];
                for (int h : hits) EXPECT_EQ(h, 1);
            }
    }
}

TEST(TermComplexes, DepthZeroIsBareTerms)
{
    const Chart c = parse_chart(words({"dog", "barks"}), dog_barks());
    const auto tc = term_complexes(c, select_cover(c), 0);
    ASSERT_EQ(tc.size(), 2u);
    EXPECT_EQ(tc[0].render(), "dog");
    EXPECT_EQ(tc[1].render(), "barks");
}

TEST(TermComplexes, PathReading)
{
    const Gene g = GeneBuilder().rule(12, 0, {3, 4}).rule(14, 0, {4, 3}).tag("dog", 3, 3).tag("cat", 4, 4).build();
    const Chart c1 = parse_chart(words({"dog", "cat"}), g);
    const auto a = term_complexes(c1, select_cover(c1), 2);
    EXPECT_EQ(a[0].render(), "dog—3—12");
    EXPECT_EQ(a[1].render(), "cat—4—12");
    EXPECT_EQ(term_complexes(c1, select_cover(c1), 1)[0].render(), "dog—3");

    const Chart c2 = parse_chart(words({"cat", "dog"}), g);
    const auto b = term_complexes(c2, select_cover(c2), 2);
    EXPECT_EQ(b[1].render(), "dog—3—14");
    EXPECT_NE(a[0].render(), b[1].render());
}

TEST(TermComplexes, UncoveredTermsAreBare)
{
    const Chart c = parse_chart(words({"dog", "meows"}), dog_barks());
    const auto tc = term_complexes(c, select_cover(c), 2);
    EXPECT_EQ(tc[0].render(), "dog—0");
    EXPECT_EQ(tc[1].render(), "meows");
}

TEST(TermComplexes, ShallowerDepthIsAPrefix)
{
    const Corpus corpus = grevo::testing::synthetic_corpus(5, 5, 4, 3);
    Rng rng(9);
    const Gene g = random_gene(GeneConfig{}, make_vocabulary(corpus.vocabulary()), rng);
    for (const auto& d : corpus.documents())
        for (const auto& s : d.sentences) {
            const Chart c = parse_chart(s, g);
            const Cover cover = select_cover(c);
            for (std::size_t depth = 0; depth < 3; ++depth) {
                const auto lo = term_complexes(c, cover, depth);
                const auto hi = term_complexes(c, cover, depth + 1);
                for (std::size_t i = 0; i < lo.size(); ++i) {
                    ASSERT_LE(lo[i].tags.size(), hi[i].tags.size());
                    EXPECT_TRUE(std::equal(lo[i].tags.begin(), lo[i].tags.end(), hi[i].tags.begin()));
                }
            }
        }
}

TEST(Ampl, Examples)
{
    std::vector<Document> docs{{"a", 0, {words({"dog", "barks"})}}, {"b", 1, {words({"dog", "barks"}), words({"dog"})}}};
    const Corpus corpus(docs, 2);
    // sentences fully parsed: mean length (2 + 2 + 1) / 3
    EXPECT_DOUBLE_EQ(ampl(corpus, dog_barks()), 5.0 / 3.0);
    const Gene none = GeneBuilder().tag("dog", 0, 0).tag("barks", 1, 1).build();
    EXPECT_DOUBLE_EQ(ampl(corpus, none), 1.0);
}

TEST(Ampl, BoundedBySentenceLength)
{
    const Corpus corpus = grevo::testing::synthetic_corpus(6, 5, 4, 3);
    std::size_t longest = 0;
    for (const auto& d : corpus.documents())
        for (const auto& s : d.sentences) longest = std::max(longest, s.size());
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const Gene g = random_gene(GeneConfig{}, make_vocabulary(corpus.vocabulary()), rng);
        const double a = ampl(corpus, g);
        EXPECT_GE(a, 1.0);
        EXPECT_LE(a, static_cast<double>(longest));
    }
}

TEST(Nsp, Examples)
{
    std::vector<Document> docs{{"a", 0, {words({"x", "y", "z"})}}, {"b", 1, {words({"z"})}}};
    const Corpus corpus(docs, 2);
    const Gene idle = GeneBuilder().tag("x", 0, 0).tag("y", 1, 1).tag("z", 2, 2).build();
    EXPECT_EQ(nsp(corpus, idle), 0u);
    const Gene chain =
        GeneBuilder().rule(10, 0, {0, 1}).rule(11, 0, {10, 2}).tag("x", 0, 0).tag("y", 1, 1).tag("z", 2, 2).build();
    EXPECT_EQ(nsp(corpus, chain), 2u);
}

TEST(Nsp, CountsEveryCompletionNotOnlyWinners)
{
    GeneBuilder b;
    b.config.rules_per_lhs = 2;
    b.rule(10, 0, {0, 1}).rule(10, 1, {11, 12}).rule(11, 0, {0}).rule(12, 0, {1});
    const Gene g = b.tag("dog", 0, 0).tag("barks", 1, 1).build();
    // 10 twice over [0,2), 11 over [0,1), 12 over [1,2)
    EXPECT_EQ(parse_chart(words({"dog", "barks"}), g).total_rule_applications(), 4u);
}

TEST(RenderTree, Deterministic)
{
    const Corpus corpus = grevo::testing::synthetic_corpus(7, 5, 2, 2);
    Rng rng(3);
    const Gene g = random_gene(GeneConfig{}, make_vocabulary(corpus.vocabulary()), rng);
    for (const auto& d : corpus.documents())
        for (const auto& s : d.sentences) {
            const Chart a = parse_chart(s, g), b = parse_chart(s, g);
            const auto ia = largest_edge(a);
            ASSERT_TRUE(ia);
            EXPECT_EQ(render_tree(a, *ia), render_tree(b, *largest_edge(b)));
            EXPECT_EQ(a.edge(*ia).length(), a.max_span());
        }
}
