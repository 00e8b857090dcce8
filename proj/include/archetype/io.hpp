#pragma once

// File formats. Corpora, events and publications are JSON lines; model
// files, assignments and training reports are JSON documents. Doubles are
// written in shortest round-trip form, so save/load is bit-exact.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "archetype/cluster.hpp"
#include "archetype/common.hpp"
#include "archetype/ingest.hpp"
#include "archetype/sequence.hpp"
#include "json.hpp"

namespace archetype {

using Json = nlohmann::json;

/// Sessions whose sum is off by more than this are rejected on load.
inline constexpr double kInputSumTolerance = 1e-6;

namespace detail {

inline std::ifstream openInput(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open input file '" + path + "'");
  return in;
}

inline std::ofstream openOutput(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot open output file '" + path + "'");
  return out;
}

/// Calls fn(json, lineNumber) for every non-blank line.
template <typename Fn>
void forEachJsonLine(const std::string& path, Fn&& fn) {
  auto in = openInput(path);
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw UsageError(path + ":" + std::to_string(lineNo) + ": malformed JSON (" + e.what() + ")");
    }
    try {
      fn(j, lineNo);
    } catch (const Json::exception& e) {
      throw UsageError(path + ":" + std::to_string(lineNo) + ": " + e.what());
    } catch (const UsageError& e) {
      throw UsageError(path + ":" + std::to_string(lineNo) + ": " + e.what());
    }
  }
}

inline std::string stringField(const Json& j, const char* key) {
  if (!j.contains(key)) throw UsageError(std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return v.dump();
  throw UsageError(std::string("field '") + key + "' must be a string");
}

}  // namespace detail

/// Validates raw session values, renormalizing sums within
/// kInputSumTolerance. Sums within 1e-9 are kept untouched.
inline SessionVector parseSession(std::vector<double> v) {
  if (v.empty()) throw UsageError("empty session");
  double total = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) throw UsageError("session component outside [0, 1]");
    total += x;
  }
  const double off = std::abs(total - 1.0);
  if (off > kInputSumTolerance) {
    throw UsageError("session sums to " + std::to_string(total) + " (simplex violation)");
  }
  if (off > SessionVector::kSumTolerance) {
    for (double& x : v) x /= total;
  }
  return SessionVector(std::move(v));
}

struct CorpusFormat {
  /// Record key holding the optional subgroup label.
  std::string groupField = "group";
};

inline Json sequenceToJson(const Sequence& seq) {
  Json j;
  j["id"] = seq.id;
  Json sessions = Json::array();
  for (const auto& s : seq.sessions) sessions.push_back(std::vector<double>(s.values().begin(), s.values().end()));
  j["sessions"] = std::move(sessions);
  if (seq.group) j["group"] = *seq.group;
  return j;
}

inline Corpus loadCorpus(const std::string& path, const CorpusFormat& format = {}) {
  Corpus out;
  std::size_t dim = 0;
  detail::forEachJsonLine(path, [&](const Json& j, std::size_t) {
    Sequence seq;
    seq.id = detail::stringField(j, "id");
    if (!j.contains("sessions") || !j.at("sessions").is_array()) throw UsageError("missing 'sessions' array");
    for (const auto& s : j.at("sessions")) seq.sessions.push_back(parseSession(s.get<std::vector<double>>()));
    if (seq.sessions.empty()) throw UsageError("sequence '" + seq.id + "' has no sessions");
    for (const auto& s : seq.sessions) {
      if (dim == 0) dim = s.size();
      if (s.size() != dim) {
        throw UsageError("sequence '" + seq.id + "' has sessions of dimension " + std::to_string(s.size()) +
                         ", expected " + std::to_string(dim));
      }
    }
    if (j.contains(format.groupField) && !j.at(format.groupField).is_null()) {
      seq.group = detail::stringField(j, format.groupField.c_str());
    }
    out.push_back(std::move(seq));
  });
  return out;
}

inline void saveCorpus(const Corpus& corpus, const std::string& path) {
  auto out = detail::openOutput(path);
  for (const auto& seq : corpus) out << sequenceToJson(seq).dump() << '\n';
  if (!out) throw NumericalError("failed writing '" + path + "'");
}

inline Json modelSetToJson(const ModelSet& ms) {
  Json j;
  j["C"] = ms.numArchetypes();
  j["K"] = ms.numStates();
  j["M"] = ms.dim();
  j["leftRight"] = ms.leftRight();
  j["varFloor"] = ms.cfg.varFloor;
  Json archetypes = Json::array();
  for (const auto& m : ms.models) {
    Json a;
    a["pi"] = m.prior;
    Json tau = Json::array();
    for (std::size_t r = 0; r < m.numStates(); ++r) {
      const auto row = m.trans.row(r);
      tau.push_back(std::vector<double>(row.begin(), row.end()));
    }
    a["tau"] = std::move(tau);
    a["means"] = m.means;
    a["vars"] = m.vars;
    archetypes.push_back(std::move(a));
  }
  j["archetypes"] = std::move(archetypes);
  return j;
}

inline ModelSet modelSetFromJson(const Json& j) {
  try {
    ModelSet ms;
    const auto c = j.at("C").get<std::size_t>();
    const auto k = j.at("K").get<std::size_t>();
    const auto m = j.at("M").get<std::size_t>();
    const bool leftRight = j.at("leftRight").get<bool>();
    if (j.contains("varFloor")) ms.cfg.varFloor = j.at("varFloor").get<double>();
    ms.cfg.clusters = c;
    ms.cfg.states = k;
    ms.cfg.leftRight = leftRight;
    const auto& archetypes = j.at("archetypes");
    if (archetypes.size() != c) throw UsageError("model file: C does not match the archetype count");
    for (const auto& a : archetypes) {
      ArchetypeModel model;
      model.leftRight = leftRight;
      model.prior = a.at("pi").get<std::vector<double>>();
      const auto tau = a.at("tau").get<std::vector<std::vector<double>>>();
      if (tau.size() != k) throw UsageError("model file: tau must have K rows");
      model.trans = Matrix(k, k);
      for (std::size_t r = 0; r < k; ++r) {
        if (tau[r].size() != k) throw UsageError("model file: tau must be K x K");
        for (std::size_t col = 0; col < k; ++col) model.trans(r, col) = tau[r][col];
      }
      model.means = a.at("means").get<std::vector<std::vector<double>>>();
      model.vars = a.at("vars").get<std::vector<std::vector<double>>>();
      if (model.means.size() != k || model.vars.size() != k) throw UsageError("model file: need K means and vars");
      for (std::size_t s = 0; s < k; ++s) {
        if (model.means[s].size() != m || model.vars[s].size() != m) {
          throw UsageError("model file: mean or variance of the wrong dimension");
        }
      }
      ms.models.push_back(std::move(model));
    }
    ms.validate();
    return ms;
  } catch (const Json::exception& e) {
    throw UsageError(std::string("model file: ") + e.what());
  }
}

inline void saveModelSet(const ModelSet& ms, const std::string& path) {
  auto out = detail::openOutput(path);
  out << modelSetToJson(ms).dump(2) << '\n';
  if (!out) throw NumericalError("failed writing '" + path + "'");
}

inline ModelSet loadModelSet(const std::string& path) {
  auto in = detail::openInput(path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw UsageError(path + ": malformed JSON (" + e.what() + ")");
  }
  try {
    return modelSetFromJson(j);
  } catch (const UsageError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

inline std::vector<Event> loadEvents(const std::string& path) {
  std::vector<Event> out;
  detail::forEachJsonLine(path, [&](const Json& j, std::size_t) {
    Event e;
    e.userId = detail::stringField(j, "user");
    if (!j.contains("ts") || !j.at("ts").is_number()) throw UsageError("missing numeric field 'ts'");
    e.timestamp = j.at("ts").get<double>();
    e.action = detail::stringField(j, "action");
    out.push_back(std::move(e));
  });
  return out;
}

inline std::vector<PublicationRecord> loadPublications(const std::string& path) {
  std::vector<PublicationRecord> out;
  detail::forEachJsonLine(path, [&](const Json& j, std::size_t) {
    PublicationRecord r;
    r.authorId = detail::stringField(j, "author");
    if (!j.contains("year") || !j.at("year").is_number_integer()) throw UsageError("missing integer field 'year'");
    r.year = j.at("year").get<int>();
    r.subfield = detail::stringField(j, "subfield");
    out.push_back(std::move(r));
  });
  return out;
}

inline void saveAssignments(const Corpus& corpus, const std::vector<Assignment>& assignments,
                            const std::string& path) {
  if (corpus.size() != assignments.size()) throw UsageError("saveAssignments: size mismatch");
  auto out = detail::openOutput(path);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Json j;
    j["id"] = corpus[i].id;
    j["archetype"] = assignments[i].archetype;
    j["logLik"] = assignments[i].logLik;
    j["path"] = assignments[i].path;
    out << j.dump() << '\n';
  }
}

inline std::vector<Assignment> loadAssignments(const std::string& path) {
  std::vector<Assignment> out;
  detail::forEachJsonLine(path, [&](const Json& j, std::size_t) {
    Assignment a;
    a.archetype = j.at("archetype").get<std::size_t>();
    a.logLik = j.at("logLik").is_null() ? kNegInf : j.at("logLik").get<double>();
    if (j.contains("path")) a.path = j.at("path").get<StatePath>();
    out.push_back(std::move(a));
  });
  return out;
}

inline Json trainReportToJson(const TrainReport& r) {
  Json j;
  j["stopReason"] = toString(r.stopReason);
  j["emptyClusterEvents"] = r.emptyClusterEvents;
  j["emptyStateEvents"] = r.emptyStateEvents;
  j["finalLogLik"] = r.finalLogLik();
  Json iters = Json::array();
  for (const auto& it : r.iterations) {
    Json x;
    x["preAssignLogLik"] = std::isfinite(it.preAssignLogLik) ? Json(it.preAssignLogLik) : Json(nullptr);
    x["assignedLogLik"] = it.assignedLogLik;
    x["totalLogLik"] = it.totalLogLik;
    x["reassigned"] = it.reassigned;
    x["repairedClusters"] = it.repairedClusters;
    x["clusterSizes"] = it.clusterSizes;
    x["innerHistories"] = it.innerHistories;
    iters.push_back(std::move(x));
  }
  j["iterations"] = std::move(iters);
  return j;
}

inline void writeJson(const Json& j, const std::string& path) {
  auto out = detail::openOutput(path);
  out << j.dump(2) << '\n';
  if (!out) throw NumericalError("failed writing '" + path + "'");
}

inline void writeText(const std::string& text, const std::string& path) {
  auto out = detail::openOutput(path);
  out << text;
  if (!out) throw NumericalError("failed writing '" + path + "'");
}

}  // namespace archetype
