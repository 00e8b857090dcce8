#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <string>
#include <vector>

#include "archetype/io.hpp"
#include "archetype/synth.hpp"
#include "test_support.hpp"

using namespace archetype;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kVocab{"Q", "A", "C", "E", "M"};

fs::path scratchFile(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "archetype_ingest_tests";
  fs::create_directories(dir);
  return dir / name;
}

void writeLines(const fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

std::vector<PublicationRecord> pubs(const std::vector<std::pair<int, std::string>>& items) {
  std::vector<PublicationRecord> out;
  for (const auto& [year, subfield] : items) out.push_back({"a1", year, subfield});
  return out;
}

std::string errorOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const UsageError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Sessionize, GapSplitsSessions) {
  const std::vector<Event> events{{"u", 0.0, "Q"}, {"u", 3600.0, "A"}, {"u", 8 * 3600.0, "Q"}};
  const auto corpus = sessionize(events, kVocab);
  ASSERT_EQ(corpus.size(), 1u);
  ASSERT_EQ(corpus[0].length(), 2u);
  EXPECT_EQ(corpus[0].sessions[0].values()[0], 0.5);
  EXPECT_EQ(corpus[0].sessions[0].values()[1], 0.5);
  EXPECT_EQ(corpus[0].sessions[1].values()[0], 1.0);
}

TEST(Sessionize, GapOfExactlySixHoursKeepsSession) {
  const std::vector<Event> events{{"u", 1000.0, "Q"}, {"u", 1000.0 + 21600.0, "A"}};
  EXPECT_EQ(sessionize(events, kVocab)[0].length(), 1u);
  const std::vector<Event> later{{"u", 1000.0, "Q"}, {"u", 1000.0 + 21600.5, "A"}};
  EXPECT_EQ(sessionize(later, kVocab)[0].length(), 2u);
}

TEST(Sessionize, CountsBecomeFractions) {
  const std::vector<Event> events{{"u", 0.0, "Q"}, {"u", 1.0, "Q"}, {"u", 2.0, "A"}};
  const auto corpus = sessionize(events, kVocab);
  const auto s = corpus[0].sessions[0].values();
  EXPECT_EQ(s[0], 2.0 / 3.0);
  EXPECT_EQ(s[1], 1.0 / 3.0);
  for (std::size_t m = 2; m < 5; ++m) EXPECT_EQ(s[m], 0.0);
}

TEST(Sessionize, UnknownActionNamesLabel) {
  const std::vector<Event> events{{"u", 0.0, "Q"}, {"u", 1.0, "Z"}};
  const auto msg = errorOf([&] { sessionize(events, kVocab); });
  EXPECT_NE(msg.find("'Z'"), std::string::npos);
}

TEST(Sessionize, UsersSortedAndEventsOrdered) {
  const std::vector<Event> events{{"zed", 50000.0, "A"}, {"amy", 0.0, "C"}, {"zed", 0.0, "Q"}, {"amy", 1.0, "C"}};
  const auto corpus = sessionize(events, kVocab);
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[0].id, "amy");
  EXPECT_EQ(corpus[1].id, "zed");
  EXPECT_EQ(corpus[1].sessions[0].values()[0], 1.0);
  EXPECT_EQ(corpus[1].sessions[1].values()[1], 1.0);
}

TEST(Sessionize, SessionCountIsOnePlusGaps) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Event> events;
    double t = 0.0;
    std::size_t gaps = 0;
    const std::size_t n = 1 + rng.index(30);
    for (std::size_t i = 0; i < n; ++i) {
      const double step = rng.uniform() < 0.3 ? rng.uniform(21601.0, 90000.0) : rng.uniform(0.0, 21600.0);
      if (i > 0) {
        t += step;
        gaps += step > 21600.0;
      }
      events.push_back({"u", t, kVocab[rng.index(kVocab.size())]});
    }
    EXPECT_EQ(sessionize(events, kVocab)[0].length(), gaps + 1);
  }
}

TEST(AreasOfInterest, SingleSubfield) {
  const auto r = labelAreasOfInterest(pubs({{1990, "S"}, {1991, "S"}, {1992, "S"}}));
  ASSERT_TRUE(r.sequence.has_value());
  EXPECT_EQ(r.areas, std::vector<std::string>{"S"});
  for (const auto& s : r.sequence->sessions) {
    EXPECT_EQ(std::vector<double>(s.values().begin(), s.values().end()), (std::vector<double>{1, 0, 0, 0, 0, 0}));
  }
}

TEST(AreasOfInterest, UnqualifiedNewSubfieldIsExplore) {
  const auto r = labelAreasOfInterest(
      pubs({{2000, "S"}, {2000, "S"}, {2001, "S"}, {2004, "T"}, {2004, "T"}, {2004, "S"}}));
  ASSERT_TRUE(r.sequence.has_value());
  ASSERT_EQ(r.years.back(), 2004);
  const auto last = r.sequence->sessions.back().values();
  EXPECT_EQ(last[0], 1.0 / 3.0);
  EXPECT_EQ(last[kExploreDim], 2.0 / 3.0);
}

TEST(AreasOfInterest, CraftedRecord) {
  const auto r = labelAreasOfInterest(
      pubs({{1, "S"}, {2, "S"}, {3, "S"}, {4, "T"}, {4, "T"}, {4, "T"}, {4, "U"}}), YearWindow{0, 10});
  ASSERT_TRUE(r.sequence.has_value());
  EXPECT_EQ(r.areas, (std::vector<std::string>{"S", "T"}));
  EXPECT_EQ(r.activeFrom, (std::vector<int>{1, 4}));
  const auto y4 = r.sequence->sessions.back().values();
  EXPECT_EQ(std::vector<double>(y4.begin(), y4.end()), (std::vector<double>{0, 0.75, 0, 0, 0, 0.25}));
}

TEST(AreasOfInterest, AreaCountsOnlyFromQualifyingYear) {
  const auto r = labelAreasOfInterest(pubs({{2000, "S"}, {2000, "S"}, {2000, "S"}, {2001, "T"}, {2002, "T"},
                                            {2002, "T"}, {2002, "T"}, {2003, "T"}}));
  EXPECT_EQ(r.areas, (std::vector<std::string>{"S", "T"}));
  const auto& s = r.sequence->sessions;
  EXPECT_EQ(s[1].values()[kExploreDim], 1.0);
  EXPECT_EQ(s[2].values()[1], 1.0);
  EXPECT_EQ(s[3].values()[1], 1.0);
}

TEST(AreasOfInterest, NoD1MeansUnlabelable) {
  const auto r = labelAreasOfInterest(pubs({{2000, "S"}, {2001, "T"}, {2003, "S"}, {2003, "S"}, {2003, "S"}}));
  EXPECT_FALSE(r.sequence.has_value());
  const auto all = labelAuthors(pubs({{2000, "S"}}));
  EXPECT_TRUE(all.corpus.empty());
  EXPECT_EQ(all.unlabelable, std::vector<std::string>{"a1"});
}

TEST(AreasOfInterest, D1TieBreak) {
  auto r = labelAreasOfInterest(pubs({{2000, "T"}, {2000, "T"}, {2000, "T"}, {2000, "S"}, {2000, "S"}, {2000, "S"}}));
  EXPECT_EQ(r.areas.front(), "S");
  EXPECT_EQ(r.areas.size(), 2u);
  r = labelAreasOfInterest(pubs({{2000, "S"}, {2000, "S"}, {2000, "S"}, {2000, "T"}, {2000, "T"}, {2000, "T"},
                                 {2000, "T"}}));
  EXPECT_EQ(r.areas.front(), "T");
}

TEST(AreasOfInterest, AtMostFiveAreas) {
  std::vector<std::pair<int, std::string>> items;
  for (int y = 0; y < 8; ++y) {
    for (int k = 0; k < 3; ++k) items.emplace_back(2000 + y, std::string(1, static_cast<char>('a' + y)));
  }
  const auto r = labelAreasOfInterest(pubs(items));
  ASSERT_EQ(r.areas.size(), 5u);
  EXPECT_EQ(r.areas, (std::vector<std::string>{"a", "b", "c", "d", "e"}));
  for (const auto& s : r.sequence->sessions) EXPECT_EQ(s.size(), kAoiDims);
  EXPECT_EQ(r.sequence->sessions.back().values()[kExploreDim], 1.0);
}

TEST(AreasOfInterest, WindowAndGapYears) {
  const auto r = labelAreasOfInterest(pubs({{1969, "X"}, {1980, "S"}, {1980, "S"}, {1980, "S"}, {1985, "S"}}));
  EXPECT_EQ(r.years, (std::vector<int>{1980, 1985}));
  EXPECT_EQ(r.areas, std::vector<std::string>{"S"});
}

TEST(FilterSequences, Boundaries) {
  Corpus corpus;
  for (std::size_t len : {9u, 10u, 750u, 751u, 100u}) {
    Sequence s;
    s.id = std::to_string(len);
    s.sessions.assign(len, SessionVector(std::vector<double>{1.0}));
    corpus.push_back(s);
  }
  const auto r = filterSequences(corpus);
  ASSERT_EQ(r.kept.size(), 3u);
  EXPECT_EQ(r.kept[0].id, "10");
  EXPECT_EQ(r.kept[1].id, "750");
  EXPECT_EQ(r.kept[2].id, "100");
  EXPECT_EQ(r.droppedShort, 1u);
  EXPECT_EQ(r.droppedLong, 1u);
  const auto empty = filterSequences({});
  EXPECT_TRUE(empty.kept.empty());
  EXPECT_EQ(empty.droppedShort + empty.droppedLong, 0u);
}

TEST(CorpusStats, Table1Shape) {
  Corpus corpus(2);
  corpus[0].sessions.assign(2, SessionVector(std::vector<double>{0.5, 0.5}));
  corpus[1].sessions.assign(5, SessionVector(std::vector<double>{0.5, 0.5}));
  const auto s = corpusStats(corpus, {"x", "y"});
  EXPECT_EQ(s.sequences, 2u);
  EXPECT_EQ(s.meanLength, 3.5);
  EXPECT_EQ(s.maxLength, 5u);
  EXPECT_EQ(s.minLength, 2u);
  EXPECT_EQ(s.dims, 2u);
}

TEST(CorpusIo, RoundTripIsBitExact) {
  Rng rng(4);
  Corpus corpus;
  for (int i = 0; i < 20; ++i) {
    auto s = testsupport::randomSequence(rng, 1 + i % 7, 4, "s" + std::to_string(i));
    if (i % 3 == 0) s.group = i % 2 ? "f" : "m";
    corpus.push_back(s);
  }
  const auto path = scratchFile("roundtrip.jsonl");
  saveCorpus(corpus, path.string());
  EXPECT_EQ(loadCorpus(path.string()), corpus);
}

TEST(CorpusIo, EmptyFile) {
  const auto path = scratchFile("empty.jsonl");
  writeLines(path, {});
  EXPECT_TRUE(loadCorpus(path.string()).empty());
}

TEST(CorpusIo, SimplexViolationRejected) {
  const auto path = scratchFile("bad_sum.jsonl");
  writeLines(path, {R"({"id":"a","sessions":[[0.5,0.5]]})", R"({"id":"b","sessions":[[0.5,0.3]]})"});
  const auto msg = errorOf([&] { loadCorpus(path.string()); });
  EXPECT_NE(msg.find("simplex violation"), std::string::npos);
  EXPECT_NE(msg.find(":2:"), std::string::npos);
}

TEST(CorpusIo, SmallDriftRenormalized) {
  const auto path = scratchFile("drift.jsonl");
  writeLines(path, {R"({"id":"a","sessions":[[0.5000004,0.5]]})"});
  const auto corpus = loadCorpus(path.string());
  const auto v = corpus[0].sessions[0].values();
  EXPECT_NEAR(v[0] + v[1], 1.0, 1e-15);
  EXPECT_EQ(v[0], 0.5000004 / 1.0000004);
}

TEST(CorpusIo, MalformedAndInconsistentLines) {
  const auto path = scratchFile("malformed.jsonl");
  writeLines(path, {R"({"id":"a","sessions":[[1.0, 0.0]]})", "", "{not json"});
  EXPECT_NE(errorOf([&] { loadCorpus(path.string()); }).find(":3:"), std::string::npos);
  writeLines(path, {R"({"id":"a","sessions":[[1.0, 0.0]]})", R"({"id":"b","sessions":[[1.0]]})"});
  EXPECT_NE(errorOf([&] { loadCorpus(path.string()); }).find("dimension"), std::string::npos);
  EXPECT_NE(errorOf([&] { loadCorpus("/nonexistent/corpus.jsonl"); }).find("/nonexistent/corpus.jsonl"),
            std::string::npos);
}

TEST(CorpusIo, CustomGroupField) {
  const auto path = scratchFile("gender.jsonl");
  writeLines(path, {R"({"id":"a","sessions":[[1.0]],"gender":"f"})", R"({"id":"b","sessions":[[1.0]]})"});
  CorpusFormat format;
  format.groupField = "gender";
  const auto corpus = loadCorpus(path.string(), format);
  EXPECT_EQ(corpus[0].group, std::optional<std::string>("f"));
  EXPECT_FALSE(corpus[1].group.has_value());
}

TEST(ModelIo, RoundTrip) {
  SynthSpec spec;
  spec.clusters = 2;
  spec.states = 3;
  spec.sequences = 4;
  const auto syn = generateSyntheticCorpus(spec);
  const auto path = scratchFile("model.json");
  saveModelSet(syn.truth, path.string());
  const auto back = loadModelSet(path.string());
  EXPECT_EQ(back, syn.truth);
  EXPECT_EQ(back.cfg.varFloor, syn.truth.cfg.varFloor);
  const auto j = Json::parse(std::ifstream(path));
  for (const char* key : {"C", "K", "M", "leftRight", "archetypes"}) EXPECT_TRUE(j.contains(key)) << key;
}

TEST(ModelIo, RejectsInvalidModels) {
  const auto path = scratchFile("bad_model.json");
  writeLines(path, {R"({"C":1,"K":2,"M":1,"leftRight":true,"archetypes":[{"pi":[0.5,0.5],)"
                    R"("tau":[[0.5,0.5],[0.5,0.5]],"means":[[1.0],[1.0]],"vars":[[0.01],[0.01]]}]})"});
  EXPECT_THROW(loadModelSet(path.string()), UsageError);
}

TEST(EventIo, LoadsEventsAndPublications) {
  const auto events = scratchFile("events.jsonl");
  writeLines(events, {R"({"user":"u1","ts":0,"action":"Q"})", R"({"user":7,"ts":3600.5,"action":"A"})"});
  const auto ev = loadEvents(events.string());
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[1].userId, "7");
  EXPECT_EQ(ev[1].timestamp, 3600.5);

  const auto pubsPath = scratchFile("pubs.jsonl");
  writeLines(pubsPath, {R"({"author":"a","year":1999,"subfield":"ML"})"});
  const auto p = loadPublications(pubsPath.string());
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].year, 1999);
  writeLines(pubsPath, {R"({"author":"a","year":"x","subfield":"ML"})"});
  EXPECT_THROW(loadPublications(pubsPath.string()), UsageError);
}
