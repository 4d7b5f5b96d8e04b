#include "cpmr/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "cpmr/dsl.hpp"

namespace cpmr {

std::string_view to_string(OutcomeCategory c) noexcept {
  switch (c) {
    case OutcomeCategory::NotIdentified: return "NotIdentified";
    case OutcomeCategory::MeaningNotDerived: return "MeaningNotDerived";
    case OutcomeCategory::CorrectBehaviour: return "CorrectBehaviour";
    case OutcomeCategory::IncorrectPatternImplementation: return "IncorrectPatternImplementation";
    case OutcomeCategory::IncorrectApplicationOrIdentification: return "IncorrectApplicationOrIdentification";
    case OutcomeCategory::CriticalInconsistency: return "CriticalInconsistency";
  }
  return "?";
}

OutcomeCategory classify(const PipelineTrace& t) {
  if (t.approach != Approach::Cpmr) throw Error(Errc::InvalidTrace, "baseline traces are not classified");
  check_trace_shape(t);
  if (!t.step_1a) return OutcomeCategory::NotIdentified;
  if (!t.step_2) throw Error(Errc::IncompleteTrace, "identified pattern but no derive result");
  if (!*t.step_2) return OutcomeCategory::MeaningNotDerived;
  if (!t.step_1b) throw Error(Errc::IncompleteTrace, "expected pattern was not supplied");
  if (!t.step_3) throw Error(Errc::IncompleteTrace, "expected model was not supplied");
  if (*t.step_1b)
    return *t.step_3 ? OutcomeCategory::CorrectBehaviour : OutcomeCategory::IncorrectPatternImplementation;
  return *t.step_3 ? OutcomeCategory::IncorrectApplicationOrIdentification : OutcomeCategory::CriticalInconsistency;
}

std::string_view to_string(Reason r) noexcept {
  switch (r) {
    case Reason::NoFailure: return "no_failure";
    case Reason::User: return "user";
    case Reason::Llm: return "llm";
    case Reason::PatternAmbiguity: return "pattern_ambiguity";
  }
  return "?";
}

Reason reason_of(OutcomeCategory c) noexcept {
  switch (c) {
    case OutcomeCategory::CorrectBehaviour: return Reason::NoFailure;
    case OutcomeCategory::NotIdentified:
    case OutcomeCategory::MeaningNotDerived: return Reason::User;
    case OutcomeCategory::IncorrectPatternImplementation: return Reason::Llm;
    case OutcomeCategory::IncorrectApplicationOrIdentification:
    case OutcomeCategory::CriticalInconsistency: return Reason::PatternAmbiguity;
  }
  return Reason::User;
}

RollupRow reason_rollup(const std::vector<OutcomeCategory>& categories) {
  RollupRow row;
  row.count = categories.size();
  if (categories.empty()) return row;
  double unit = 1.0 / static_cast<double>(categories.size());
  for (auto c : categories) {
    switch (reason_of(c)) {
      case Reason::NoFailure: row.no_failure += unit; break;
      case Reason::User: row.user += unit; break;
      case Reason::Llm: row.llm += unit; break;
      case Reason::PatternAmbiguity: row.pattern_ambiguity += unit; break;
    }
  }
  return row;
}

double agreement(const std::vector<Verdict>& baseline, const std::vector<Verdict>& cpmr) {
  if (baseline.empty() || cpmr.empty()) throw Error(Errc::EmptyInput, "no verdicts to compare");
  std::map<std::string, bool> b;
  for (const auto& v : baseline)
    if (!b.emplace(v.record_id, v.aao_equals_eao).second)
      throw Error(Errc::IdMismatch, "duplicate record id '" + v.record_id + "'");
  if (cpmr.size() != b.size()) throw Error(Errc::IdMismatch, "record id sets differ");
  std::set<std::string> seen;
  std::size_t same = 0;
  for (const auto& v : cpmr) {
    auto it = b.find(v.record_id);
    if (it == b.end() || !seen.insert(v.record_id).second)
      throw Error(Errc::IdMismatch, "record id '" + v.record_id + "' does not match");
    if (it->second == v.aao_equals_eao) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(b.size());
}

// ---- survey ----------------------------------------------------------------

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false, after_quote = false;
  int line = 1, row_line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = after_quote = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  auto bad = [&](const std::string& why) {
    throw Error(Errc::BadCsv, "line " + std::to_string(line) + ": " + why);
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      end_row();
      row_line = ++line;
    } else if (c == '"') {
      if (field_started) bad("stray quote inside unquoted field");
      quoted = field_started = true;
    } else {
      if (after_quote) bad("text after closing quote");
      field += c;
      field_started = true;
    }
  }
  if (quoted) {
    line = row_line;
    bad("unterminated quoted field");
  }
  if (!row.empty() || field_started || !field.empty()) end_row();
  return rows;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<EvaluationRecord> load_survey(const std::filesystem::path& dir) {
  auto csv_path = dir / "records.csv";
  if (!std::filesystem::is_regular_file(csv_path)) throw Error(Errc::MissingFile, "missing " + csv_path.string());
  std::string text = read_file(csv_path);
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);

  // Track physical line numbers per row for error messages.
  auto rows = parse_csv(text);
  std::vector<int> row_lines;
  {
    int line = 1;
    bool quoted = false, row_has_content = false;
    int start = 1;
    for (char c : text) {
      if (c == '"') quoted = !quoted;
      if (c == '\n') {
        if (!quoted) {
          if (row_has_content) row_lines.push_back(start);
          row_has_content = false;
          start = line + 1;
        }
        ++line;
      } else if (c != '\r') {
        row_has_content = true;
      }
    }
    if (row_has_content) row_lines.push_back(start);
  }
  auto line_of = [&](std::size_t r) { return r < row_lines.size() ? row_lines[r] : static_cast<int>(r + 1); };
  auto bad = [&](std::size_t r, const std::string& why) {
    throw Error(Errc::BadCsv, "line " + std::to_string(line_of(r)) + ": " + why);
  };

  static const std::vector<std::string> header = {"record_id", "pattern_expected", "wording", "input_model",
                                                  "eao_model"};
  if (rows.empty()) throw Error(Errc::BadCsv, "line 1: empty file");
  if (rows[0] != header) bad(0, "header must be record_id,pattern_expected,wording,input_model,eao_model");

  std::map<std::string, ProcessModel> cache;
  auto model = [&](const std::string& ref) -> const ProcessModel& {
    auto it = cache.find(ref);
    if (it != cache.end()) return it->second;
    auto p = dir / ref;
    if (!std::filesystem::is_regular_file(p)) throw Error(Errc::MissingFile, "missing model file " + ref);
    try {
      return cache.emplace(ref, parse_dsl(read_file(p))).first->second;
    } catch (const Error& e) {
      if (e.code() == Errc::MissingFile) throw;
      throw Error(Errc::InvalidModel, ref + ": " + e.code_name() + ": " + e.what());
    }
  };

  std::vector<EvaluationRecord> out;
  std::set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      bad(r, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(row.size()));
    EvaluationRecord rec;
    rec.id = row[0];
    if (rec.id.empty()) bad(r, "empty record_id");
    if (!ids.insert(rec.id).second) bad(r, "duplicate record_id '" + rec.id + "'");
    auto pid = parse_pattern_id(row[1]);
    if (!pid) bad(r, "unknown pattern id '" + row[1] + "'");
    rec.expected = *pid;
    try {
      rec.wording = Wording(row[2]).text();
    } catch (const Error&) {
      bad(r, "empty wording");
    }
    if (row[3].empty() || row[4].empty()) bad(r, "empty model reference");
    rec.input_ref = row[3];
    rec.eao_ref = row[4];
    rec.input = model(rec.input_ref);
    rec.eao = model(rec.eao_ref);
    out.push_back(std::move(rec));
  }
  return out;
}

// ---- running ---------------------------------------------------------------

void run_evaluation(std::vector<EvaluationRecord>& records,
                    const std::vector<std::shared_ptr<const Backend>>& backends, const RunOptions& options) {
  std::set<std::string> names;
  for (const auto& b : backends)
    if (!names.insert(b->name()).second) throw Error(Errc::BadRequest, "duplicate backend name " + b->name());

  struct Job {
    EvaluationRecord* record;
    const Pipeline* pipeline;
    RunPair* slot;
  };
  std::vector<Pipeline> pipelines;
  pipelines.reserve(backends.size());
  for (const auto& b : backends) pipelines.emplace_back(b, options.sink);

  std::vector<Job> jobs;
  for (auto& rec : records)
    for (std::size_t i = 0; i < backends.size(); ++i)
      jobs.push_back({&rec, &pipelines[i], &rec.traces[backends[i]->name()]});

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    while (!failed) {
      std::size_t k = next++;
      if (k >= jobs.size()) return;
      const Job& job = jobs[k];
      try {
        Wording w(job.record->wording);
        if (options.baseline) job.slot->baseline = job.pipeline->run_baseline(job.record->input, w, job.record->eao);
        if (options.cpmr)
          job.slot->cpmr = job.pipeline->run_cpmr(job.record->input, w, {job.record->expected, job.record->eao});
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  unsigned n = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

// ---- aggregation -----------------------------------------------------------

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::BaselineCorrect: return "baseline_correct";
    case Metric::CpmrCorrect: return "cpmr_correct";
    case Metric::NotIdentified: return "not_identified";
    case Metric::MeaningNotDerived: return "no_meaning";
    case Metric::IncorrectApplication: return "incorrect_application";
    case Metric::IncorrectImplementation: return "incorrect_implementation";
    case Metric::CriticalInconsistency: return "critical_inconsistency";
  }
  return "?";
}

std::optional<double> AggregateReport::rate(Metric m, PatternId p, const std::string& backend) const {
  auto mi = rates.find(m);
  if (mi == rates.end()) return std::nullopt;
  auto pi = mi->second.find(p);
  if (pi == mi->second.end()) return std::nullopt;
  auto bi = pi->second.find(backend);
  if (bi == pi->second.end()) return std::nullopt;
  return bi->second;
}

std::optional<double> AggregateReport::average(Metric m, PatternId p) const {
  double sum = 0;
  int n = 0;
  for (const auto& b : backends) {
    if (auto r = rate(m, p, b)) {
      sum += *r;
      ++n;
    }
  }
  if (!n) return std::nullopt;
  return sum / n;
}

namespace {

std::optional<Metric> metric_of(OutcomeCategory c) {
  switch (c) {
    case OutcomeCategory::NotIdentified: return Metric::NotIdentified;
    case OutcomeCategory::MeaningNotDerived: return Metric::MeaningNotDerived;
    case OutcomeCategory::IncorrectPatternImplementation: return Metric::IncorrectImplementation;
    case OutcomeCategory::IncorrectApplicationOrIdentification: return Metric::IncorrectApplication;
    case OutcomeCategory::CriticalInconsistency: return Metric::CriticalInconsistency;
    case OutcomeCategory::CorrectBehaviour: return std::nullopt;
  }
  return std::nullopt;
}

// Alternatives whose share exceeds the threshold in every backend; at most
// two, largest average share first.
std::vector<PatternId> predominant(const std::map<std::string, std::map<PatternId, double>>& shares,
                                   std::size_t backend_count) {
  if (shares.size() != backend_count || backend_count == 0) return {};
  std::vector<std::pair<double, PatternId>> hits;
  for (PatternId x : kAllPatterns) {
    bool all = true;
    double sum = 0;
    for (const auto& [b, per] : shares) {
      auto it = per.find(x);
      double s = it == per.end() ? 0.0 : it->second;
      all = all && s > kPredominantThreshold;
      sum += s;
    }
    if (all) hits.push_back({sum / static_cast<double>(backend_count), x});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<PatternId> out;
  for (std::size_t i = 0; i < hits.size() && i < 2; ++i) out.push_back(hits[i].second);
  return out;
}

}  // namespace

AggregateReport aggregate(const std::vector<EvaluationRecord>& records) {
  AggregateReport rep;
  std::set<std::string> backends;
  std::set<PatternId> patterns;
  for (const auto& r : records) {
    patterns.insert(r.expected);
    rep.record_counts[r.expected]++;
    for (const auto& [b, runs] : r.traces)
      if (runs.baseline || runs.cpmr) backends.insert(b);
  }
  rep.backends.assign(backends.begin(), backends.end());
  for (PatternId p : kAllPatterns)
    if (patterns.count(p)) rep.patterns.push_back(p);

  for (PatternId p : rep.patterns) {
    std::map<std::string, std::map<PatternId, double>> app_shares, inc_shares;
    std::vector<RollupRow> rollups;
    for (const auto& b : rep.backends) {
      std::size_t n_base = 0, base_ok = 0, n_cpmr = 0, cpmr_ok = 0;
      std::map<Metric, std::size_t> counts;
      std::map<PatternId, std::size_t> app_alt, inc_alt;
      std::vector<OutcomeCategory> cats;
      for (const auto& r : records) {
        if (r.expected != p) continue;
        auto it = r.traces.find(b);
        if (it == r.traces.end()) continue;
        if (const auto& t = it->second.baseline) {
          ++n_base;
          if (t->step_3.value_or(false)) ++base_ok;
        }
        if (const auto& t = it->second.cpmr) {
          ++n_cpmr;
          if (t->step_3.value_or(false)) ++cpmr_ok;
          OutcomeCategory c = classify(*t);
          cats.push_back(c);
          if (auto m = metric_of(c)) counts[*m]++;
          if (c == OutcomeCategory::IncorrectApplicationOrIdentification) app_alt[*t->identified]++;
          if (c == OutcomeCategory::CriticalInconsistency) inc_alt[*t->identified]++;
        }
      }
      if (n_base) rep.rates[Metric::BaselineCorrect][p][b] = static_cast<double>(base_ok) / n_base;
      if (n_cpmr) {
        double n = static_cast<double>(n_cpmr);
        rep.rates[Metric::CpmrCorrect][p][b] = cpmr_ok / n;
        for (Metric m : {Metric::NotIdentified, Metric::MeaningNotDerived, Metric::IncorrectApplication,
                         Metric::IncorrectImplementation, Metric::CriticalInconsistency})
          rep.rates[m][p][b] = counts[m] / n;
        for (const auto& [x, k] : app_alt) app_shares[b][x] = k / n;
        for (const auto& [x, k] : inc_alt) inc_shares[b][x] = k / n;
        app_shares[b];
        inc_shares[b];
        rollups.push_back(reason_rollup(cats));
      }
    }
    std::size_t cpmr_backends = rollups.size();
    if (auto v = predominant(app_shares, cpmr_backends); !v.empty()) rep.predominant_application[p] = v;
    if (auto v = predominant(inc_shares, cpmr_backends); !v.empty()) rep.predominant_inconsistency[p] = v;
    if (!rollups.empty()) {
      RollupRow avg;
      for (const auto& r : rollups) {
        avg.no_failure += r.no_failure;
        avg.user += r.user;
        avg.llm += r.llm;
        avg.pattern_ambiguity += r.pattern_ambiguity;
        avg.count += r.count;
      }
      double k = static_cast<double>(rollups.size());
      avg.no_failure /= k;
      avg.user /= k;
      avg.llm /= k;
      avg.pattern_ambiguity /= k;
      rep.rollup[p] = avg;
    }
  }

  for (const auto& b : rep.backends) {
    std::vector<Verdict> base, cp;
    bool complete = true;
    for (const auto& r : records) {
      auto it = r.traces.find(b);
      if (it == r.traces.end() || !it->second.baseline || !it->second.cpmr) {
        complete = false;
        break;
      }
      base.push_back({r.id, it->second.baseline->step_3.value_or(false)});
      cp.push_back({r.id, it->second.cpmr->step_3.value_or(false)});
    }
    if (complete && !base.empty()) rep.agreement[b] = agreement(base, cp);
  }
  return rep;
}

// ---- rendering -------------------------------------------------------------

namespace {

std::string pct(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
  return buf;
}

std::string join_patterns(const std::vector<PatternId>& ps, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += sep;
    out += to_string(ps[i]);
  }
  return out.empty() ? "-" : out;
}

using Table = std::vector<std::vector<std::string>>;

Table metric_table(const AggregateReport& rep, Metric m) {
  Table t;
  std::vector<std::string> head = {"backend"};
  for (PatternId p : rep.patterns) head.emplace_back(to_string(p));
  t.push_back(head);
  for (const auto& b : rep.backends) {
    std::vector<std::string> row = {b};
    for (PatternId p : rep.patterns) row.push_back(pct(rep.rate(m, p, b)));
    t.push_back(row);
  }
  std::vector<std::string> avg = {"average"};
  for (PatternId p : rep.patterns) avg.push_back(pct(rep.average(m, p)));
  t.push_back(avg);
  const std::map<PatternId, std::vector<PatternId>>* pred = nullptr;
  if (m == Metric::IncorrectApplication) pred = &rep.predominant_application;
  if (m == Metric::CriticalInconsistency) pred = &rep.predominant_inconsistency;
  if (pred) {
    std::vector<std::string> row = {"predominant"};
    for (PatternId p : rep.patterns) {
      auto it = pred->find(p);
      row.push_back(it == pred->end() ? "-" : join_patterns(it->second, ";"));
    }
    t.push_back(row);
  }
  return t;
}

Table comparison_table(const AggregateReport& rep) {
  Table t;
  std::vector<std::string> head = {"backend", "approach"};
  for (PatternId p : rep.patterns) head.emplace_back(to_string(p));
  t.push_back(head);
  auto rows_for = [&](const std::string& b, bool avg) {
    for (auto [m, name] : {std::pair{Metric::BaselineCorrect, "baseline"}, std::pair{Metric::CpmrCorrect, "cpmr"}}) {
      std::vector<std::string> row = {b, name};
      for (PatternId p : rep.patterns) row.push_back(pct(avg ? rep.average(m, p) : rep.rate(m, p, b)));
      t.push_back(row);
    }
  };
  for (const auto& b : rep.backends) rows_for(b, false);
  rows_for("average", true);
  return t;
}

Table agreement_table(const AggregateReport& rep) {
  Table t = {{"backend", "agreement"}};
  double sum = 0;
  for (const auto& b : rep.backends) {
    auto it = rep.agreement.find(b);
    t.push_back({b, it == rep.agreement.end() ? "-" : pct(it->second)});
    if (it != rep.agreement.end()) sum += it->second;
  }
  if (!rep.agreement.empty()) t.push_back({"average", pct(sum / static_cast<double>(rep.agreement.size()))});
  return t;
}

Table reasons_table(const AggregateReport& rep) {
  Table t = {{"pattern", "no_failure", "user", "llm", "pattern_ambiguity"}};
  for (PatternId p : rep.patterns) {
    auto it = rep.rollup.find(p);
    if (it == rep.rollup.end()) {
      t.push_back({std::string(to_string(p)), "-", "-", "-", "-"});
      continue;
    }
    const auto& r = it->second;
    t.push_back({std::string(to_string(p)), pct(r.no_failure), pct(r.user), pct(r.llm), pct(r.pattern_ambiguity)});
  }
  return t;
}

std::vector<std::pair<std::string, Table>> all_tables(const AggregateReport& rep) {
  std::vector<std::pair<std::string, Table>> out;
  for (Metric m : kAllMetrics) out.emplace_back(std::string(to_string(m)), metric_table(rep, m));
  out.emplace_back("comparison", comparison_table(rep));
  out.emplace_back("agreement", agreement_table(rep));
  out.emplace_back("reasons", reasons_table(rep));
  return out;
}

std::string to_csv(const Table& t) {
  std::string out;
  for (const auto& row : t) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string to_text(const Table& t) {
  std::vector<std::size_t> width;
  for (const auto& row : t)
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (width.size() <= i) width.push_back(0);
      width[i] = std::max(width[i], row[i].size());
    }
  std::string out;
  for (const auto& row : t) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::string cell = row[i];
      if (i + 1 < row.size()) cell.resize(width[i] + 2, ' ');
      line += cell;
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> render_csv(const AggregateReport& report) {
  std::map<std::string, std::string> out;
  for (const auto& [name, table] : all_tables(report)) out[name + ".csv"] = to_csv(table);
  return out;
}

std::string render_text(const AggregateReport& report) {
  std::string out;
  for (const auto& [name, table] : all_tables(report)) {
    out += "== " + name + " (%) ==\n";
    out += to_text(table);
    out += "\n";
  }
  return out;
}

void write_reports(const AggregateReport& report, const std::filesystem::path& out_dir, ReportFormat format) {
  std::filesystem::create_directories(out_dir);
  auto write = [](const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(Errc::MissingFile, "cannot write " + p.string());
    f << content;
  };
  if (format == ReportFormat::Text) {
    write(out_dir / "report.txt", render_text(report));
    return;
  }
  for (const auto& [name, content] : render_csv(report)) write(out_dir / name, content);
}

}  // namespace cpmr
