#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <string>
#include <vector>

#include "geoaot/proposal.hpp"

using namespace geoaot;

namespace {

StubMapProvider flow_provider() {
    return StubMapProvider({
        {GeoPoint{10.0, 10.0}, "alpha"},
        {GeoPoint{10.0, 10.1}, "beta"},
        {GeoPoint{10.0, 10.2}, "gamma"},
        {GeoPoint{50.0, 50.0}, "delta"},
    });
}

ScriptedBackend replies_backend(std::vector<std::string> replies) {
    auto v = std::make_shared<std::vector<std::string>>(std::move(replies));
    return ScriptedBackend([v](size_t turn, const std::string&, const Observation&) {
        return turn < v->size() ? (*v)[turn] : std::string("REJECT out of script");
    });
}

// Exposes the session key propose_location derives from continent/difficulty.
class KeyRecorder : public ModelBackend {
public:
    explicit KeyRecorder(ModelBackend& inner) : inner_(inner) {}
    std::unique_ptr<BackendSession> start_session(const std::string& key) override {
        keys.push_back(key);
        return inner_.start_session(key);
    }
    bool deterministic() const override { return inner_.deterministic(); }
    bool concurrent_sessions() const override { return inner_.concurrent_sessions(); }
    std::string name() const override { return inner_.name(); }

    std::vector<std::string> keys;

private:
    ModelBackend& inner_;
};

}  // namespace

TEST_CASE("stub provider returns the k nearest markers, ties by bank order") {
    StubMapProvider p({
        {GeoPoint{48.8600, 2.3500}, "rivoli-a"},
        {GeoPoint{48.8600, 2.3600}, "rivoli-b"},
        {GeoPoint{48.8700, 2.3500}, "louvre"},
        {GeoPoint{35.6595, 139.7005}, "dogenzaka"},
        {GeoPoint{48.8600, 2.3500}, "rivoli-dup"},  // exact tie with rivoli-a
    });
    const GeoPoint seed{48.8600, 2.3500};

    const auto three = p.candidates(seed, 3);
    REQUIRE(three.size() == 3);
    CHECK(three[0].label == "rivoli-a");
    CHECK(three[1].label == "rivoli-dup");
    CHECK(three[2].label == "rivoli-b");

    const auto all = p.candidates(seed, 99);
    REQUIRE(all.size() == 5);
    CHECK(all.back().label == "dogenzaka");

    CHECK_THROWS_AS(StubMapProvider({}), std::invalid_argument);
}

TEST_CASE("tile descriptor spells out the seed and numbered markers") {
    StubMapProvider p({{GeoPoint{10.0, 10.0}, "alpha"}});
    const GeoPoint seed{48.86, 2.35};
    const std::vector<MapMarker> markers = {
        {GeoPoint{48.8600, 2.3500}, "rivoli-a"},
        {GeoPoint{48.8600, 2.3600}, "rivoli-b"},
    };
    CHECK(p.tile_descriptor(seed, markers) ==
          "satellite tile, zoom 16, centered 48.860000,2.350000; markers:"
          " 1=(48.860000,2.350000 rivoli-a) 2=(48.860000,2.360000 rivoli-b)");
}

TEST_CASE("propose then accept resolves to the chosen marker") {
    StubMapProvider provider = flow_provider();
    ScriptedBackend backend = replies_backend({
        "Coastal light, low latitude. PROPOSE 10,10 \"sunlit coastal boulevard\"",
        "Marker two sits right on the boulevard.\nACCEPT 2",
    });
    const ProposalResult res =
        propose_location(backend, provider, Continent::Africa, Difficulty::Hard);
    CHECK(res.point == GeoPoint{10.0, 10.1});
    CHECK(res.rationale == "sunlit coastal boulevard");
    CHECK(res.rounds == 1);
    REQUIRE(res.transcript.size() == 2);
    CHECK(res.transcript[0].first.find(
              "Propose a street-level location on continent AF at hard difficulty") == 0);
    CHECK(res.transcript[1].first.find("satellite tile") != std::string::npos);
    CHECK(res.transcript[1].second.find("ACCEPT 2") != std::string::npos);
}

TEST_CASE("the session key encodes continent and difficulty") {
    StubMapProvider provider = flow_provider();
    ScriptedBackend inner = replies_backend({"PROPOSE 10,10 \"x\"", "ACCEPT 1"});
    KeyRecorder recorder(inner);
    propose_location(recorder, provider, Continent::Asia, Difficulty::Medium);
    REQUIRE(recorder.keys.size() == 1);
    CHECK(recorder.keys[0] == "proposal:AS:medium");
}

TEST_CASE("the last PROPOSE in a reply wins and bad coordinates are skipped") {
    StubMapProvider provider = flow_provider();
    ScriptedBackend backend = replies_backend({
        "PROPOSE 95,10 \"off the globe\"\n"
        "PROPOSE 10,10 \"first idea\"\n"
        "on reflection: propose 50,50 \"inland plateau\"",
        "accept 1",
    });
    const ProposalResult res =
        propose_location(backend, provider, Continent::Europe, Difficulty::Easy);
    CHECK(res.point == GeoPoint{50.0, 50.0});  // nearest to the 50,50 seed
    CHECK(res.rationale == "inland plateau");
}

TEST_CASE("a rejected batch regenerates the seed") {
    StubMapProvider provider = flow_provider();
    ScriptedBackend backend = replies_backend({
        "PROPOSE 10,10 \"tropical\"",
        "REJECT all three look temperate",
        "PROPOSE 50,50 \"temperate then\"",
        "ACCEPT 1",
    });
    const ProposalResult res =
        propose_location(backend, provider, Continent::Europe, Difficulty::Easy);
    CHECK(res.point == GeoPoint{50.0, 50.0});
    CHECK(res.rationale == "temperate then");
    CHECK(res.rounds == 2);
    REQUIRE(res.transcript.size() == 4);
    CHECK(res.transcript[2].first.find("previous batch was rejected") != std::string::npos);
}

TEST_CASE("REJECT overrides an earlier ACCEPT in the same reply") {
    StubMapProvider provider = flow_provider();
    ScriptedBackend backend = replies_backend({
        "PROPOSE 10,10 \"a\"",
        "ACCEPT 1\nno wait, the shadows are wrong. REJECT",
        "PROPOSE 10,10.1 \"b\"",
        "ACCEPT 1",
    });
    const ProposalResult res =
        propose_location(backend, provider, Continent::Europe, Difficulty::Easy);
    CHECK(res.rounds == 2);
    CHECK(res.point == GeoPoint{10.0, 10.1});
}

TEST_CASE("unparseable replies earn exactly one reprompt per stage") {
    StubMapProvider provider = flow_provider();

    SECTION("stage 1 recovers") {
        ScriptedBackend backend = replies_backend({
            "let me think about this first",
            "PROPOSE 10,10 \"second try\"",
            "ACCEPT 1",
        });
        const ProposalResult res =
            propose_location(backend, provider, Continent::Europe, Difficulty::Easy);
        CHECK(res.rationale == "second try");
        REQUIRE(res.transcript.size() == 3);
        CHECK(res.transcript[1].first.find("was not parseable") != std::string::npos);
    }

    SECTION("stage 1 fails twice") {
        ScriptedBackend backend = replies_backend({"hmm", "still hmm"});
        try {
            propose_location(backend, provider, Continent::Europe, Difficulty::Easy);
            FAIL("expected ProposalFailed");
        } catch (const ProposalFailed& e) {
            CHECK(std::string(e.what()).find("stage 1") != std::string::npos);
            CHECK(e.transcript().size() == 2);
            CHECK(e.transcript()[1].second == "still hmm");
        }
    }

    SECTION("stage 2 recovers, out-of-range index counts as unparseable") {
        ScriptedBackend backend = replies_backend({
            "PROPOSE 10,10 \"x\"",
            "ACCEPT 7",  // only 3 markers shown
            "ACCEPT 3",
        });
        const ProposalResult res =
            propose_location(backend, provider, Continent::Europe, Difficulty::Easy);
        CHECK(res.point == GeoPoint{10.0, 10.2});
        CHECK(res.rounds == 1);
        CHECK(res.transcript.size() == 3);
    }

    SECTION("stage 2 fails twice") {
        ScriptedBackend backend = replies_backend({
            "PROPOSE 10,10 \"x\"",
            "that batch is unacceptable",  // no word-boundary ACCEPT here
            "simply dreadful",
        });
        try {
            propose_location(backend, provider, Continent::Europe, Difficulty::Easy);
            FAIL("expected ProposalFailed");
        } catch (const ProposalFailed& e) {
            CHECK(std::string(e.what()).find("stage 2") != std::string::npos);
            CHECK(e.transcript().size() == 3);
        }
    }
}

TEST_CASE("rejecting every round exhausts the bound") {
    StubMapProvider provider = flow_provider();
    ScriptedBackend backend = replies_backend({
        "PROPOSE 10,10 \"a\"",
        "REJECT",
        "PROPOSE 10,10 \"b\"",
        "REJECT again",
    });
    ProposalConfig cfg;
    cfg.max_rounds = 2;
    try {
        propose_location(backend, provider, Continent::Europe, Difficulty::Easy, cfg);
        FAIL("expected ProposalFailed");
    } catch (const ProposalFailed& e) {
        CHECK(std::string(e.what()).find("round bound") != std::string::npos);
        CHECK(e.transcript().size() == 4);
    }
}

TEST_CASE("config bounds are validated") {
    StubMapProvider provider = flow_provider();
    ScriptedBackend backend = replies_backend({"PROPOSE 10,10 \"x\"", "ACCEPT 1"});
    ProposalConfig bad;
    bad.max_rounds = 0;
    CHECK_THROWS_AS(propose_location(backend, provider, Continent::Europe, Difficulty::Easy, bad),
                    std::invalid_argument);
    bad.max_rounds = 1;
    bad.markers_per_round = 0;
    CHECK_THROWS_AS(propose_location(backend, provider, Continent::Europe, Difficulty::Easy, bad),
                    std::invalid_argument);

    ProposalConfig one;
    one.markers_per_round = 1;
    const ProposalResult res =
        propose_location(backend, provider, Continent::Europe, Difficulty::Easy, one);
    CHECK(res.point == GeoPoint{10.0, 10.0});
}
