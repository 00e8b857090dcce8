#pragma once

// Turning raw activity into corpora: event logs into sessions, yearly
// publication records into area-of-interest vectors, and length filtering.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "archetype/common.hpp"
#include "archetype/sequence.hpp"

namespace archetype {

inline constexpr double kDefaultSessionGap = 6.0 * 3600.0;

struct Event {
  std::string userId;
  /// Seconds since the epoch.
  double timestamp = 0.0;
  std::string action;
};

/// Splits each user's events into sessions wherever consecutive events are
/// more than `gapSeconds` apart, and turns each session into action
/// fractions over `vocab`. Users come out in lexicographic order.
inline Corpus sessionize(std::span<const Event> events, const std::vector<std::string>& vocab,
                         double gapSeconds = kDefaultSessionGap) {
  if (vocab.empty()) throw UsageError("sessionize: empty action vocabulary");
  if (!(gapSeconds >= 0.0)) throw UsageError("sessionize: gap must be >= 0");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t m = 0; m < vocab.size(); ++m) {
    if (!index.emplace(vocab[m], m).second) throw UsageError("sessionize: duplicate action '" + vocab[m] + "'");
  }
  std::map<std::string, std::vector<const Event*>> byUser;
  for (const auto& e : events) {
    if (!std::isfinite(e.timestamp)) throw UsageError("sessionize: non-finite timestamp for user '" + e.userId + "'");
    if (e.action.empty()) throw UsageError("sessionize: empty action for user '" + e.userId + "'");
    if (!index.contains(e.action)) throw UsageError("sessionize: unknown action '" + e.action + "'");
    byUser[e.userId].push_back(&e);
  }

  Corpus out;
  for (auto& [user, list] : byUser) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Event* a, const Event* b) { return a->timestamp < b->timestamp; });
    Sequence seq;
    seq.id = user;
    std::vector<double> counts(vocab.size(), 0.0);
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i > 0 && list[i]->timestamp - list[i - 1]->timestamp > gapSeconds) {
        seq.sessions.push_back(SessionVector::fromWeights(counts));
        std::fill(counts.begin(), counts.end(), 0.0);
      }
      counts[index.at(list[i]->action)] += 1.0;
    }
    seq.sessions.push_back(SessionVector::fromWeights(counts));
    out.push_back(std::move(seq));
  }
  return out;
}

struct PublicationRecord {
  std::string authorId;
  int year = 0;
  std::string subfield;
};

struct YearWindow {
  int first = 1970;
  int last = 2016;

  bool contains(int y) const { return y >= first && y <= last; }
};

inline constexpr std::size_t kAreaCount = 5;
inline constexpr std::size_t kAoiDims = kAreaCount + 1;
inline constexpr std::size_t kExploreDim = kAreaCount;

struct AreaLabeling {
  std::string authorId;
  /// Subfields labeled D1, D2, ... in order, at most 5.
  std::vector<std::string> areas;
  /// Year from which each area counts as labeled; D1 counts from the first year.
  std::vector<int> activeFrom;
  /// One session per publishing year: fractions over D1..D5 and Explore.
  std::optional<Sequence> sequence;
  std::vector<int> years;
};

namespace detail {

/// Picks the subfield with the larger count, then the smaller name.
inline bool preferSubfield(const std::pair<std::string, int>& a, const std::pair<std::string, int>& b) {
  return a.second != b.second ? a.second > b.second : a.first < b.first;
}

}  // namespace detail

/// Area-of-interest sequence for one author. D1 is the first subfield to
/// reach 3 papers cumulatively within the first 3 calendar years; D2..D5
/// are further subfields in the order they first reach 3 papers in a single
/// year. Papers outside labeled areas (or before their area qualifies) count
/// as Explore. Records outside `window` are ignored. Without a D1 the
/// author is unlabelable and `sequence` is empty.
inline AreaLabeling labelAreasOfInterest(std::span<const PublicationRecord> records, YearWindow window = {}) {
  AreaLabeling out;
  std::map<int, std::map<std::string, int>> perYear;
  for (const auto& r : records) {
    if (out.authorId.empty()) out.authorId = r.authorId;
    if (r.authorId != out.authorId) throw UsageError("labelAreasOfInterest: records of several authors");
    if (r.subfield.empty()) throw UsageError("labelAreasOfInterest: empty subfield for '" + r.authorId + "'");
    if (window.contains(r.year)) ++perYear[r.year][r.subfield];
  }
  if (perYear.empty()) return out;

  const int firstYear = perYear.begin()->first;
  std::map<std::string, int> cumulative;
  for (const auto& [year, counts] : perYear) {
    if (year > firstYear + 2) break;
    std::vector<std::pair<std::string, int>> qualified;
    for (const auto& [s, n] : counts) {
      cumulative[s] += n;
      if (cumulative[s] >= 3) qualified.emplace_back(s, cumulative[s]);
    }
    if (!qualified.empty()) {
      std::sort(qualified.begin(), qualified.end(), detail::preferSubfield);
      out.areas.push_back(qualified.front().first);
      out.activeFrom.push_back(firstYear);
      break;
    }
  }
  if (out.areas.empty()) return out;

  for (const auto& [year, counts] : perYear) {
    std::vector<std::pair<std::string, int>> qualified;
    for (const auto& [s, n] : counts) {
      if (n >= 3 && std::find(out.areas.begin(), out.areas.end(), s) == out.areas.end()) {
        qualified.emplace_back(s, n);
      }
    }
    std::sort(qualified.begin(), qualified.end(), detail::preferSubfield);
    for (const auto& q : qualified) {
      if (out.areas.size() == kAreaCount) break;
      out.areas.push_back(q.first);
      out.activeFrom.push_back(year);
    }
  }

  Sequence seq;
  seq.id = out.authorId;
  for (const auto& [year, counts] : perYear) {
    std::vector<double> v(kAoiDims, 0.0);
    for (const auto& [s, n] : counts) {
      std::size_t dim = kExploreDim;
      for (std::size_t a = 0; a < out.areas.size(); ++a) {
        if (out.areas[a] == s && out.activeFrom[a] <= year) dim = a;
      }
      v[dim] += static_cast<double>(n);
    }
    seq.sessions.push_back(SessionVector::fromWeights(v));
    out.years.push_back(year);
  }
  out.sequence = std::move(seq);
  return out;
}

struct AuthorCorpus {
  Corpus corpus;
  std::vector<AreaLabeling> labelings;
  std::vector<std::string> unlabelable;
};

/// Groups records by author (lexicographic order) and labels each one.
inline AuthorCorpus labelAuthors(std::span<const PublicationRecord> records, YearWindow window = {}) {
  std::map<std::string, std::vector<PublicationRecord>> byAuthor;
  for (const auto& r : records) byAuthor[r.authorId].push_back(r);
  AuthorCorpus out;
  for (const auto& [author, list] : byAuthor) {
    auto labeling = labelAreasOfInterest(list, window);
    if (labeling.sequence) {
      out.corpus.push_back(*labeling.sequence);
      out.labelings.push_back(std::move(labeling));
    } else {
      out.unlabelable.push_back(author);
    }
  }
  return out;
}

struct FilterReport {
  Corpus kept;
  std::size_t droppedShort = 0;
  std::size_t droppedLong = 0;
};

/// Keeps sequences with minLen <= length <= maxLen, preserving order.
inline FilterReport filterSequences(Corpus seqs, std::size_t minLen = 10, std::size_t maxLen = 750) {
  if (minLen > maxLen) throw UsageError("filterSequences: minLen > maxLen");
  FilterReport out;
  for (auto& s : seqs) {
    if (s.length() < minLen) {
      ++out.droppedShort;
    } else if (s.length() > maxLen) {
      ++out.droppedLong;
    } else {
      out.kept.push_back(std::move(s));
    }
  }
  return out;
}

struct CorpusStats {
  std::size_t sequences = 0;
  double meanLength = 0.0;
  std::size_t maxLength = 0;
  std::size_t minLength = 0;
  std::size_t dims = 0;
  std::vector<std::string> vocabulary;
};

inline CorpusStats corpusStats(const Corpus& corpus, std::vector<std::string> vocabulary = {}) {
  CorpusStats s;
  s.sequences = corpus.size();
  s.dims = corpusDim(corpus);
  s.vocabulary = std::move(vocabulary);
  if (corpus.empty()) return s;
  s.minLength = corpus.front().length();
  std::size_t total = 0;
  for (const auto& seq : corpus) {
    total += seq.length();
    s.maxLength = std::max(s.maxLength, seq.length());
    s.minLength = std::min(s.minLength, seq.length());
  }
  s.meanLength = static_cast<double>(total) / static_cast<double>(corpus.size());
  return s;
}

}  // namespace archetype
