#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dparse/discourse_graph.hpp"
#include "generators.hpp"

using namespace dparse;

TEST_CASE("add_relation base case") {
    DiscourseGraph g("d", 2);
    auto r = add_relation(g, {"RES", 0, 1});
    CHECK(r.graph.size() == 1);
    CHECK_FALSE(r.duplicate);
}

TEST_CASE("add_relation is idempotent for exact duplicates") {
    DiscourseGraph g("d", 2);
    g.insert({"RES", 0, 1});
    auto r = add_relation(g, {"RES", 0, 1});
    CHECK(r.duplicate);
    CHECK(r.graph == g);
}

TEST_CASE("add_relation rejects out-of-range endpoints") {
    DiscourseGraph g("d", 3);
    CHECK_THROWS_AS(g.insert({"ACK", 1, 5}), InputError);
    CHECK_THROWS_AS(g.insert({"RES", 2, 1}), InputError);
    CHECK_THROWS_AS(g.insert({"RES", 1, 1}), InputError);
}

TEST_CASE("validate: well-formed graph yields empty report") {
    DiscourseGraph g("d", 3);
    g.insert({"RES", 0, 1});
    g.insert({"QAP", 1, 2});
    CHECK(validate(g, msdc_taxonomy()).well_formed());
}

TEST_CASE("validate flags unknown labels and order violations") {
    auto report = validate({{"FOO", 0, 1}}, 2, msdc_taxonomy());
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == ViolationKind::unknown_label);

    report = validate({{"RES", 5, 2}}, 6, msdc_taxonomy());
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == ViolationKind::index_order);
}

TEST_CASE("validate counts multi-label pairs separately") {
    auto report = validate({{"RES", 0, 1}, {"ACK", 0, 1}}, 2, msdc_taxonomy());
    CHECK(report.well_formed());
    CHECK(report.multi_label_pairs == 1);
}

TEST_CASE("mpdu_set identifies multi-parent units") {
    DiscourseGraph g("d", 3);
    g.insert({"RES", 0, 2});
    g.insert({"QAP", 1, 2});
    CHECK(mpdu_set(g).units == std::set<int>{2});

    CHECK(mpdu_set(DiscourseGraph("d", 5)).units.empty());

    DiscourseGraph h("d", 4);
    h.insert({"RES", 0, 3});
    h.insert({"ACK", 1, 3});
    h.insert({"CORR", 2, 3});
    auto stats = mpdu_set(h);
    CHECK(stats.units == std::set<int>{3});
    CHECK(stats.indegree3_count == 1);
    CHECK(stats.indegree_gt3_count == 0);
}

TEST_CASE("distance in post-preprocessing indices") {
    CHECK(distance({"RES", 0, 1}) == 1);
    CHECK(distance({"NARR", 3, 13}) == 10);
    CHECK(distance({"NARR", 2, 17}) == 15);  // the engine window bound
}

TEST_CASE("property: graphs built via insert always validate clean") {
    auto& g = testgen::rng(101, true);
    for (int trial = 0; trial < 200; ++trial) {
        auto graph = testgen::random_graph(g, "d", testgen::pick_int(g, 2, 50), 30);
        CHECK(validate(graph, msdc_taxonomy()).well_formed());
    }
}

TEST_CASE("property: every constructible graph topologically sorts") {
    auto& g = testgen::rng(102, true);
    for (int trial = 0; trial < 100; ++trial) {
        auto graph = testgen::random_graph(g, "d", testgen::pick_int(g, 2, 50), 40);
        // Kahn's algorithm must consume every node.
        std::vector<int> indeg(graph.unit_count(), 0);
        for (const auto& r : graph.relations()) indeg[r.target]++;
        std::vector<int> queue;
        for (int u = 0; u < graph.unit_count(); ++u)
            if (indeg[u] == 0) queue.push_back(u);
        int visited = 0;
        while (!queue.empty()) {
            int u = queue.back();
            queue.pop_back();
            ++visited;
            for (const auto& r : graph.relations())
                if (r.source == u && --indeg[r.target] == 0) queue.push_back(r.target);
        }
        CHECK(visited == graph.unit_count());
    }
}

TEST_CASE("property: mpdu_set matches brute-force in-degree count") {
    auto& g = testgen::rng(103, true);
    for (int trial = 0; trial < 200; ++trial) {
        auto graph = testgen::random_graph(g, "d", testgen::pick_int(g, 2, 50), 40);
        CHECK(mpdu_set(graph).units == testgen::oracle_mpdus(graph));
    }
}

TEST_CASE("property: distance of any valid relation is at least 1") {
    auto& g = testgen::rng(104, true);
    for (int trial = 0; trial < 50; ++trial) {
        auto graph = testgen::random_graph(g, "d", 20, 20);
        for (const auto& r : graph.relations()) CHECK(distance(r) >= 1);
    }
}

TEST_CASE("taxonomy: MSDC has the 16 published types") {
    const auto& tax = msdc_taxonomy();
    CHECK(tax.size() == 16);
    for (const char* code : {"RES", "ACK", "NARR", "ELAB", "CORR", "CONT", "QAP", "COM", "CONFQ",
                             "CLARIFQ", "CONTR", "QELAB", "ALT", "EXPL", "COND", "SEQ"})
        CHECK(tax.contains(code));
    CHECK(tax.at("QAP").long_name == "Question-answer Pair");
    CHECK_THROWS_AS(Taxonomy({{"res", "Result", "x"}}), InputError);
}
