#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "archetype/archetype.hpp"

namespace fs = std::filesystem;
using namespace archetype;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string outputDir = ".";
};

// Collects what a run read, wrote and was configured with; written as
// manifest.json next to the outputs.
class Run {
 public:
  Run(std::string command, const Globals& g)
      : command_(std::move(command)), globals_(g), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(g.outputDir);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    startedAt_ = ts.str();
  }

  Json config = Json::object();

  void input(const std::string& role, const std::string& path) { inputs_[role] = path; }

  std::string output(const std::string& name) {
    const auto path = (fs::path(globals_.outputDir) / name).string();
    outputs_.push_back(path);
    return path;
  }

  void finish() {
    Json m;
    m["command"] = command_;
    m["config"] = config;
    m["seed"] = globals_.seed;
    m["threads"] = globals_.threads;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["startedAt"] = startedAt_;
    m["wallClockSeconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["version"] = ARCHETYPE_VERSION;
    writeJson(m, (fs::path(globals_.outputDir) / "manifest.json").string());
  }

 private:
  std::string command_;
  Globals globals_;
  std::chrono::steady_clock::time_point start_;
  std::string startedAt_;
  Json inputs_ = Json::object();
  std::vector<std::string> outputs_;
};

std::string fixed(double x, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << x;
  return out.str();
}

std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Assignment> decodedAssignments(const ModelSet& ms, const Corpus& corpus, std::size_t threads) {
  if (corpusDim(corpus) != ms.dim()) {
    throw UsageError("corpus dimension " + std::to_string(corpusDim(corpus)) + " does not match model dimension " +
                     std::to_string(ms.dim()));
  }
  auto assign = assignAll(corpus, ms, threads);
  decodePaths(corpus, ms, assign, threads);
  return assign;
}

// ---- ingest ----

struct IngestOptions {
  std::string events, publications, corpus;
  std::string vocab;
  double gapSeconds = kDefaultSessionGap;
  int yearFrom = 1970, yearTo = 2016;
  bool filter = false;
  std::size_t minLen = 10, maxLen = 750;
  std::string out = "corpus.jsonl";
};

int cmdIngest(const IngestOptions& o, const Globals& g) {
  const int sources = !o.events.empty() + !o.publications.empty() + !o.corpus.empty();
  if (sources != 1) throw UsageError("ingest: give exactly one of --events, --publications, --corpus");
  Run run("ingest", g);
  Corpus corpus;
  std::vector<std::string> vocab;
  Json extra = Json::object();
  if (!o.events.empty()) {
    run.input("events", o.events);
    const auto events = loadEvents(o.events);
    vocab = splitList(o.vocab);
    if (vocab.empty()) {
      std::set<std::string> seen;
      for (const auto& e : events) seen.insert(e.action);
      vocab.assign(seen.begin(), seen.end());
    }
    corpus = sessionize(events, vocab, o.gapSeconds);
  } else if (!o.publications.empty()) {
    run.input("publications", o.publications);
    const auto authors = labelAuthors(loadPublications(o.publications), YearWindow{o.yearFrom, o.yearTo});
    corpus = authors.corpus;
    vocab = {"D1", "D2", "D3", "D4", "D5", "Explore"};
    extra["unlabelable"] = authors.unlabelable.size();
    Json areas = Json::array();
    for (const auto& l : authors.labelings) areas.push_back({{"author", l.authorId}, {"areas", l.areas}, {"activeFrom", l.activeFrom}});
    writeJson(areas, run.output("areas.json"));
  } else {
    run.input("corpus", o.corpus);
    corpus = loadCorpus(o.corpus);
  }
  if (o.filter) {
    auto report = filterSequences(std::move(corpus), o.minLen, o.maxLen);
    extra["droppedShort"] = report.droppedShort;
    extra["droppedLong"] = report.droppedLong;
    corpus = std::move(report.kept);
  }
  saveCorpus(corpus, run.output(o.out));

  const auto stats = corpusStats(corpus, vocab);
  Json j = {{"N", stats.sequences},       {"meanLength", stats.meanLength}, {"maxLength", stats.maxLength},
            {"minLength", stats.minLength}, {"M", stats.dims},              {"vocabulary", stats.vocabulary}};
  j.update(extra);
  writeJson(j, run.output("stats.json"));
  std::cout << "N\tt_mean\tt_max\tM\n"
            << stats.sequences << '\t' << fixed(stats.meanLength, 2) << '\t' << stats.maxLength << '\t' << stats.dims
            << '\n';
  run.config = {{"gapSeconds", o.gapSeconds}, {"vocab", vocab},     {"yearFrom", o.yearFrom}, {"yearTo", o.yearTo},
                {"filter", o.filter},         {"minLen", o.minLen}, {"maxLen", o.maxLen}};
  run.finish();
  return 0;
}

// ---- train ----

struct TrainOptions {
  std::string corpus;
  std::size_t clusters = 4, states = 5, maxIter = 100, innerIter = 10;
  bool fullTransitions = false, learnVariance = false;
  std::string init = "partition";
};

TrainConfig trainConfig(const TrainOptions& o, const Globals& g) {
  TrainConfig cfg;
  cfg.clusters = o.clusters;
  cfg.states = o.states;
  cfg.maxIter = o.maxIter;
  cfg.innerBWIter = o.innerIter;
  cfg.leftRight = !o.fullTransitions;
  cfg.learnVariance = o.learnVariance;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  if (o.init == "partition") {
    cfg.init = InitStrategy::SequencePartition;
  } else if (o.init == "shared") {
    cfg.init = InitStrategy::SharedMeans;
  } else {
    throw UsageError("unknown --init '" + o.init + "' (expected partition or shared)");
  }
  return cfg;
}

Json trainConfigJson(const TrainConfig& cfg) {
  return {{"clusters", cfg.clusters},
          {"states", cfg.states},
          {"maxIter", cfg.maxIter},
          {"llTol", cfg.llTol},
          {"reassignFrac", cfg.reassignFrac},
          {"leftRight", cfg.leftRight},
          {"learnVariance", cfg.learnVariance},
          {"innerBWIter", cfg.innerBWIter},
          {"innerTol", cfg.innerTol},
          {"initVar", cfg.initVar},
          {"varFloor", cfg.varFloor},
          {"init", cfg.init == InitStrategy::SharedMeans ? "shared" : "partition"}};
}

int cmdTrain(const TrainOptions& o, const Globals& g) {
  const auto cfg = trainConfig(o, g);
  Run run("train", g);
  run.input("corpus", o.corpus);
  run.config = trainConfigJson(cfg);
  const auto corpus = loadCorpus(o.corpus);
  if (corpus.empty()) throw UsageError("train: corpus '" + o.corpus + "' is empty");
  const auto result = train(corpus, cfg);
  saveModelSet(result.models, run.output("model.json"));
  saveAssignments(corpus, result.assignments, run.output("assignments.jsonl"));
  writeJson(trainReportToJson(result.report), run.output("train_report.json"));
  const auto sizes = detail::clusterSizes(result.assignments, cfg.clusters);
  std::cout << "stop: " << toString(result.report.stopReason) << " after " << result.report.iterations.size()
            << " iterations, log-likelihood " << fixed(result.report.finalLogLik(), 4) << '\n';
  for (std::size_t c = 0; c < sizes.size(); ++c) std::cout << "archetype " << c << ": " << sizes[c] << " sequences\n";
  run.finish();
  return 0;
}

// ---- evaluate ----

struct EvalOptions {
  TrainOptions train;
  std::string task = "predict";
  std::vector<std::string> methods;
  std::size_t folds = 5;
  double trainFrac = 0.9;
};

int cmdEvaluate(const EvalOptions& o, const Globals& g) {
  if (o.task != "predict" && o.task != "perplexity") {
    throw UsageError("unknown --task '" + o.task + "' (expected predict or perplexity)");
  }
  std::vector<Method> methods;
  auto names = o.methods;
  if (names.empty()) {
    names = o.task == "predict" ? std::vector<std::string>{"ghmm", "gcluster", "var", "dhmm"}
                                : std::vector<std::string>{"ghmm", "gcluster", "dhmm"};
  }
  for (const auto& n : names) {
    for (const auto& part : splitList(n)) methods.push_back(parseMethod(part));
  }
  if (o.task == "perplexity" && std::count(methods.begin(), methods.end(), Method::Var)) {
    throw UsageError("perplexity is not defined for the var method");
  }
  SplitSpec split;
  split.trainFrac = o.trainFrac;
  split.validate();
  const auto cfg = trainConfig(o.train, g);

  Run run("evaluate", g);
  run.input("corpus", o.train.corpus);
  run.config = trainConfigJson(cfg);
  run.config["task"] = o.task;
  run.config["folds"] = o.folds;
  run.config["trainFrac"] = o.trainFrac;
  const auto corpus = loadCorpus(o.train.corpus);

  std::ostringstream csv;
  csv << std::setprecision(17);
  csv << "metric,method,fold,value\n";
  for (const auto m : methods) {
    if (o.task == "predict") {
      const auto r = futurePrediction(corpus, m, cfg, split);
      csv << "js_divergence," << toString(m) << ",all," << r.meanJs << '\n';
    } else {
      const auto px = crossValidatedPerplexity(corpus, m, cfg, o.folds);
      for (std::size_t f = 0; f < px.size(); ++f) csv << "perplexity," << toString(m) << ',' << f << ',' << px[f] << '\n';
      csv << "perplexity," << toString(m) << ",mean,"
          << std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(px.size()) << '\n';
    }
  }
  writeText(csv.str(), run.output("evaluation.csv"));
  std::cout << csv.str();
  run.finish();
  return 0;
}

// ---- describe ----

struct DescribeOptions {
  std::string model, corpus;
  std::string labels;
  bool rawTransitions = false;
  bool dot = false;
};

std::string stateName(std::size_t c, std::size_t s) { return "a" + std::to_string(c) + "s" + std::to_string(s); }

std::vector<std::pair<std::string, double>> sortedComponents(const std::vector<double>& mean,
                                                             const std::vector<std::string>& labels) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t d = 0; d < mean.size(); ++d) out.emplace_back(labels[d], mean[d]);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::string transitionText(const ArchetypeModel& m, std::size_t k, bool raw) {
  std::vector<std::string> parts;
  const double stay = m.trans(k, k);
  for (std::size_t l = 0; l < m.numStates(); ++l) {
    if (l == k || m.trans(k, l) <= 0.0) continue;
    const double p = raw ? m.trans(k, l) : m.trans(k, l) / (1.0 - stay);
    parts.push_back("->" + std::to_string(l) + " " + fixed(p, 2));
  }
  if (raw) parts.insert(parts.begin(), "stay " + fixed(stay, 2));
  if (parts.empty()) return "absorbing";
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ", ") + p;
  return out;
}

int cmdDescribe(const DescribeOptions& o, const Globals& g) {
  Run run("describe", g);
  run.input("model", o.model);
  run.input("corpus", o.corpus);
  const auto ms = loadModelSet(o.model);
  const auto corpus = loadCorpus(o.corpus);
  auto labels = splitList(o.labels);
  if (labels.empty()) {
    for (std::size_t d = 0; d < ms.dim(); ++d) labels.push_back("d" + std::to_string(d));
  }
  if (labels.size() != ms.dim()) {
    throw UsageError("--labels has " + std::to_string(labels.size()) + " entries, model has M = " +
                     std::to_string(ms.dim()));
  }
  run.config = {{"labels", labels}, {"rawTransitions", o.rawTransitions}, {"dot", o.dot}};
  const auto assign = decodedAssignments(ms, corpus, g.threads);
  const auto durations = stateDurationStats(ms, corpus, assign);

  std::ostringstream md;
  for (std::size_t c = 0; c < ms.numArchetypes(); ++c) {
    const auto& m = ms.models[c];
    md << "## Archetype " << c << " (" << durations[c].members << " sequences)\n\n";
    md << "| state | mean components | dwell | start | prior | " << (o.rawTransitions ? "transitions" : "next state")
       << " |\n|---|---|---|---|---|---|\n";
    for (std::size_t k = 0; k < m.numStates(); ++k) {
      std::string comps;
      for (const auto& [name, v] : sortedComponents(m.means[k], labels)) {
        std::string cell = name + " " + fixed(100.0 * v, 1) + "%";
        if (v > 0.11) cell = "**" + cell + "**";
        comps += (comps.empty() ? "" : ", ") + cell;
      }
      const auto& st = durations[c].states[k];
      md << "| " << k << " | " << comps << " | " << (st.meanDwell ? fixed(*st.meanDwell, 2) : "-") << " | "
         << fixed(100.0 * st.startFraction, 1) << "% | " << fixed(m.prior[k], 3) << " | "
         << transitionText(m, k, o.rawTransitions) << " |\n";
    }
    md << '\n';
  }
  writeText(md.str(), run.output("describe.md"));
  std::cout << md.str();

  if (o.dot) {
    std::ostringstream dot;
    dot << "digraph archetypes {\n  rankdir=LR;\n  node [shape=box];\n";
    for (std::size_t c = 0; c < ms.numArchetypes(); ++c) {
      const auto& m = ms.models[c];
      dot << "  subgraph cluster_" << c << " {\n    label=\"archetype " << c << "\";\n";
      for (std::size_t k = 0; k < m.numStates(); ++k) {
        std::string top;
        for (const auto& [name, v] : sortedComponents(m.means[k], labels)) {
          if (v > 0.11) top += "\\n" + name + " " + fixed(100.0 * v, 0) + "%";
        }
        const auto& dwell = durations[c].states[k].meanDwell;
        dot << "    " << stateName(c, k) << " [label=\"state " << k << top << "\\ndwell "
            << (dwell ? fixed(*dwell, 2) : "-") << "\"];\n";
      }
      for (std::size_t k = 0; k < m.numStates(); ++k) {
        const double stay = m.trans(k, k);
        for (std::size_t l = 0; l < m.numStates(); ++l) {
          if (l == k || m.trans(k, l) <= 0.0) continue;
          const double p = o.rawTransitions ? m.trans(k, l) : m.trans(k, l) / (1.0 - stay);
          dot << "    " << stateName(c, k) << " -> " << stateName(c, l) << " [label=\"" << fixed(p, 2) << "\"];\n";
        }
      }
      dot << "  }\n";
    }
    dot << "}\n";
    writeText(dot.str(), run.output("archetypes.dot"));
  }
  run.finish();
  return 0;
}

// ---- compare-groups ----

struct CompareOptions {
  std::string model, corpus;
  std::string groupField = "group";
  std::string groups;
  bool refitEmissions = false;
};

int cmdCompareGroups(const CompareOptions& o, const Globals& g) {
  Run run("compare-groups", g);
  run.input("model", o.model);
  run.input("corpus", o.corpus);
  const auto ms = loadModelSet(o.model);
  CorpusFormat format;
  format.groupField = o.groupField;
  const auto corpus = loadCorpus(o.corpus, format);

  std::set<std::string> present;
  for (const auto& s : corpus) {
    if (s.group) present.insert(*s.group);
  }
  if (present.empty()) throw UsageError("no sequence in '" + o.corpus + "' has the field '" + o.groupField + "'");
  auto groups = splitList(o.groups);
  if (groups.empty()) groups.assign(present.begin(), present.end());
  if (groups.size() != 2) {
    throw UsageError("compare-groups needs exactly two groups, found " + std::to_string(groups.size()) +
                     " (choose with --groups A,B)");
  }
  for (const auto& name : groups) {
    if (!present.contains(name)) throw UsageError("group '" + name + "' does not occur in field '" + o.groupField + "'");
  }
  RefitConfig cfg;
  cfg.refitEmissions = o.refitEmissions;
  cfg.threads = g.threads;
  run.config = {{"groupField", o.groupField}, {"groups", groups}, {"refitEmissions", o.refitEmissions}};

  const auto assign = decodedAssignments(ms, corpus, g.threads);
  const auto cmp = compareGroups(ms, corpus, assign, groups[0], groups[1], cfg);

  std::ostringstream csv, table;
  csv << std::setprecision(17) << "archetype,group,members,ratio,t,p,stars\n";
  table << "| archetype | " << groups[0] << " (n) | " << groups[0] << " ratio | " << groups[1] << " (n) | "
        << groups[1] << " ratio |\n|---|---|---|---|---|\n";
  auto cell = [](const GroupRatio& r) {
    if (r.test.degenerate) return fixed(r.ratio, 3) + " (p n/a)";
    return fixed(r.ratio, 3) + significanceStars(r.test.pValue);
  };
  for (const auto& a : cmp.archetypes) {
    if (!a.comparable) {
      table << "| " << a.archetype << " | - | n/a | - | n/a |\n";
      continue;
    }
    for (const auto& [name, r] : {std::pair{groups[0], a.a}, std::pair{groups[1], a.b}}) {
      csv << a.archetype << ',' << name << ',' << r.members << ',' << r.ratio << ',' << r.test.t << ','
          << r.test.pValue << ',' << (r.test.degenerate ? "" : significanceStars(r.test.pValue)) << '\n';
    }
    table << "| " << a.archetype << " | " << a.a.members << " | " << cell(a.a) << " | " << a.b.members << " | "
          << cell(a.b) << " |\n";
  }
  table << "\n* p < .05, ** p < .01, *** p < .001\n";
  writeText(csv.str(), run.output("compare_groups.csv"));
  std::cout << table.str();
  run.finish();
  return 0;
}

// ---- synth ----

int cmdSynth(SynthSpec spec, const Globals& g) {
  spec.seed = g.seed;
  Run run("synth", g);
  run.config = {{"clusters", spec.clusters}, {"states", spec.states},         {"dims", spec.dims},
                {"sequences", spec.sequences}, {"minLen", spec.minLen},       {"maxLen", spec.maxLen},
                {"separation", spec.separation}, {"noiseVar", spec.noiseVar}, {"selfLoopMin", spec.selfLoopMin}};
  const auto syn = generateSyntheticCorpus(spec);
  saveCorpus(syn.corpus, run.output("corpus.jsonl"));
  saveModelSet(syn.truth, run.output("truth_model.json"));
  writeJson(Json(syn.labels), run.output("truth_labels.json"));
  std::cout << "wrote " << syn.corpus.size() << " sequences\n";
  run.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioral archetypes: joint sequence clustering with left-right Gaussian HMMs"};
  app.set_version_flag("--version", ARCHETYPE_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--output-dir", g.outputDir, "Directory for outputs and manifest.json")->capture_default_str();

  IngestOptions ingest;
  auto* ing = app.add_subcommand("ingest", "Build a corpus from events, publications or an existing corpus");
  ing->add_option("--events", ingest.events, "Events file {user, ts, action}");
  ing->add_option("--publications", ingest.publications, "Publications file {author, year, subfield}");
  ing->add_option("--corpus", ingest.corpus, "Existing corpus file");
  ing->add_option("--vocab", ingest.vocab, "Comma-separated action vocabulary (default: sorted actions seen)");
  ing->add_option("--gap-seconds", ingest.gapSeconds, "Session gap")->capture_default_str();
  ing->add_option("--year-from", ingest.yearFrom)->capture_default_str();
  ing->add_option("--year-to", ingest.yearTo)->capture_default_str();
  ing->add_flag("--filter", ingest.filter, "Keep sequences with min-len <= length <= max-len");
  ing->add_option("--min-len", ingest.minLen)->capture_default_str();
  ing->add_option("--max-len", ingest.maxLen)->capture_default_str();
  ing->add_option("--out", ingest.out, "Corpus file name inside the output directory")->capture_default_str();

  auto addTrainOptions = [](CLI::App* sub, TrainOptions& t) {
    sub->add_option("--corpus", t.corpus, "Corpus file")->required();
    sub->add_option("--clusters,-C", t.clusters)->capture_default_str();
    sub->add_option("--states,-K", t.states)->capture_default_str();
    sub->add_option("--max-iter", t.maxIter)->capture_default_str();
    sub->add_option("--inner-iter", t.innerIter, "Baum-Welch iterations per outer step")->capture_default_str();
    sub->add_flag("--full-transitions", t.fullTransitions, "Unconstrained transition matrix");
    sub->add_flag("--learn-variance", t.learnVariance, "Re-estimate emission variances");
    sub->add_option("--init", t.init, "partition or shared")->capture_default_str();
  };

  TrainOptions trainOpts;
  auto* tr = app.add_subcommand("train", "Cluster sequences into archetypes");
  addTrainOptions(tr, trainOpts);

  EvalOptions evalOpts;
  auto* ev = app.add_subcommand("evaluate", "Future prediction or cross-validated perplexity");
  addTrainOptions(ev, evalOpts.train);
  ev->add_option("--task", evalOpts.task, "predict or perplexity")->capture_default_str();
  ev->add_option("--method", evalOpts.methods, "ghmm, gcluster, var, dhmm (repeatable or comma-separated)");
  ev->add_option("--folds", evalOpts.folds)->capture_default_str();
  ev->add_option("--train-frac", evalOpts.trainFrac)->capture_default_str();

  DescribeOptions describeOpts;
  auto* de = app.add_subcommand("describe", "Per-archetype state tables");
  de->add_option("--model", describeOpts.model)->required();
  de->add_option("--corpus", describeOpts.corpus)->required();
  de->add_option("--labels", describeOpts.labels, "Comma-separated names of the M dimensions");
  de->add_flag("--raw-transitions", describeOpts.rawTransitions, "Show raw tau instead of conditional probabilities");
  de->add_flag("--dot", describeOpts.dot, "Also write archetypes.dot");

  CompareOptions compareOpts;
  auto* cg = app.add_subcommand("compare-groups", "Subgroup likelihood ratios per archetype");
  cg->add_option("--model", compareOpts.model)->required();
  cg->add_option("--corpus", compareOpts.corpus)->required();
  cg->add_option("--group-field", compareOpts.groupField)->capture_default_str();
  cg->add_option("--groups", compareOpts.groups, "Two comma-separated group values");
  cg->add_flag("--refit-emissions", compareOpts.refitEmissions, "Also re-estimate state means");

  SynthSpec spec;
  auto* sy = app.add_subcommand("synth", "Generate a synthetic corpus with known archetypes");
  sy->add_option("--clusters,-C", spec.clusters)->capture_default_str();
  sy->add_option("--states,-K", spec.states)->capture_default_str();
  sy->add_option("--dims,-M", spec.dims)->capture_default_str();
  sy->add_option("--sequences,-N", spec.sequences)->capture_default_str();
  sy->add_option("--min-len", spec.minLen)->capture_default_str();
  sy->add_option("--max-len", spec.maxLen)->capture_default_str();
  sy->add_option("--separation", spec.separation)->capture_default_str();
  sy->add_option("--noise-var", spec.noiseVar)->capture_default_str();
  sy->add_option("--self-loop-min", spec.selfLoopMin)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ing) return cmdIngest(ingest, g);
    if (*tr) return cmdTrain(trainOpts, g);
    if (*ev) return cmdEvaluate(evalOpts, g);
    if (*de) return cmdDescribe(describeOpts, g);
    if (*cg) return cmdCompareGroups(compareOpts, g);
    if (*sy) return cmdSynth(spec, g);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
