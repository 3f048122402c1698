// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include "cacheshield/eval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include "cacheshield/config_file.hpp"
#include "cacheshield/error.hpp"
#include "json.hpp"

namespace cacheshield {
namespace {

using Json = nlohmann::json;

[[noreturn]] void Malformed(const std::string& msg, std::size_t line) {
  throw Error(ErrorCode::kMalformedInput, msg, line);
}

std::uint32_t ToU32(const ConfigEntry& e) {
  const auto v = ToUint(e);
  if (v > 0xffffffffULL) Malformed("value out of range for '" + e.key + "'", e.line);
  return static_cast<std::uint32_t>(v);
}

// Top-level keys shared by corpus and grid files. Returns false for other keys.
bool ApplyCommonKey(const ConfigEntry& e, DetectorConfig& detector, std::uint32_t& period_us) {
  if (e.key == "period_us") {
    period_us = ToU32(e);
  } else if (e.key == "detector.beta") {
    detector.beta = ToDouble(e);
  } else if (e.key == "detector.mu_a_init") {
    detector.mu_a_init = ToDouble(e);
  } else if (e.key == "detector.tau_e") {
    detector.tau_e = ToU32(e);
  } else if (e.key == "detector.comparison") {
    try {
      detector.comparison = ParseComparison(e.value);
    } catch (const Error& err) {
      Malformed(err.what(), e.line);
    }
  } else {
    return false;
  }
  return true;
}

void ValidateName(const std::string& name, std::size_t line) {
  if (name.empty() || name == "*" ||
      name.find_first_of(",\"\n\r") != std::string::npos) {
    throw Error(ErrorCode::kInvalidSpec, "invalid name '" + name + "'", line);
  }
}

void ValidateDetector(const DetectorConfig& detector, std::uint32_t period_us) {
  try {
    detector.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidSpec, e.what());
  }
  if (period_us == 0) throw Error(ErrorCode::kInvalidSpec, "period_us must be positive");
}

template <typename Job, typename Fn>
auto ParallelMap(const std::vector<Job>& jobs, unsigned threads, Fn fn) {
  using Result = decltype(fn(jobs.front()));
  std::vector<Result> results(jobs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = fn(jobs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

// Report table schema.
enum class Type { kString, kUint, kDouble };
using Cell = std::variant<std::monostate, std::string, std::uint64_t, double>;

struct Column {
  const char* name;
  Type type;
};

constexpr Column kColumns[] = {
    {"record", Type::kString},
    {"scenario", Type::kString},
    {"repetition", Type::kUint},
    {"seed", Type::kUint},
    {"period_us", Type::kUint},
    {"traces", Type::kUint},
    {"attack_traces", Type::kUint},
    {"attack_free_traces", Type::kUint},
    {"detected", Type::kUint},
    {"early_alarms", Type::kUint},
    {"add_samples", Type::kDouble},
    {"add_ms", Type::kDouble},
    {"detection_rate", Type::kDouble},
    {"attack_free_samples", Type::kUint},
    {"false_alarms", Type::kUint},
    {"alarmed_attack_free_traces", Type::kUint},
    {"far_per_sample", Type::kDouble},
    {"far_run_length", Type::kDouble},
    {"far_per_trace", Type::kDouble},
    {"samples", Type::kUint},
    {"lambda", Type::kUint},
    {"first_alarm", Type::kUint},
    {"alarms", Type::kUint},
    {"run_samples", Type::kUint},
};
constexpr std::size_t kNumColumns = std::size(kColumns);

std::size_t ColumnIndex(std::string_view name) {
  for (std::size_t i = 0; i < kNumColumns; ++i) {
    if (name == kColumns[i].name) return i;
  }
  return kNumColumns;
}

class Row {
 public:
  Row() : cells_(kNumColumns) {}

  Row& Set(std::string_view column, Cell value) {
    cells_.at(ColumnIndex(column)) = std::move(value);
    return *this;
  }
  template <typename T>
  Row& SetOpt(std::string_view column, const std::optional<T>& value) {
    if (value) Set(column, *value);
    return *this;
  }
  const Cell& at(std::size_t i) const { return cells_[i]; }
  Cell& at(std::size_t i) { return cells_[i]; }

  std::string Str(std::string_view column) const {
    const auto* v = std::get_if<std::string>(&cells_[ColumnIndex(column)]);
    return v ? *v : std::string();
  }
  std::optional<std::uint64_t> OptU(std::string_view column) const {
    const auto* v = std::get_if<std::uint64_t>(&cells_[ColumnIndex(column)]);
    return v ? std::optional(*v) : std::nullopt;
  }
  std::optional<double> OptD(std::string_view column) const {
    const auto* v = std::get_if<double>(&cells_[ColumnIndex(column)]);
    return v ? std::optional(*v) : std::nullopt;
  }
  std::uint64_t U(std::string_view column, std::size_t line) const {
    const auto v = OptU(column);
    if (!v) Malformed("missing value for '" + std::string(column) + "'", line);
    return *v;
  }
  double D(std::string_view column, std::size_t line) const {
    const auto v = OptD(column);
    if (!v) Malformed("missing value for '" + std::string(column) + "'", line);
    return *v;
  }

 private:
  std::vector<Cell> cells_;
};

Row SummaryRow(const char* record, const EvalSummary& s, std::uint32_t period_us) {
  Row r;
  r.Set("record", std::string(record)).Set("scenario", s.scenario);
  if (std::string_view(record) == "summary") r.Set("period_us", std::uint64_t{period_us});
  r.Set("traces", s.traces)
      .Set("attack_traces", s.attack_traces)
      .Set("attack_free_traces", s.attack_free_traces)
      .Set("detected", s.detected)
      .Set("early_alarms", s.early_alarms)
      .SetOpt("add_samples", s.add_samples)
      .SetOpt("add_ms", s.add_ms)
      .SetOpt("detection_rate", s.detection_rate)
      .Set("attack_free_samples", s.attack_free_samples)
      .Set("false_alarms", s.false_alarms)
      .Set("alarmed_attack_free_traces", s.alarmed_attack_free_traces)
      .Set("far_per_sample", s.far_per_sample)
      .Set("far_run_length", s.far_run_length)
      .Set("far_per_trace", s.far_per_trace);
  return r;
}

Row TraceRow(const TraceResult& t) {
  Row r;
  r.Set("record", std::string("trace"))
      .Set("scenario", t.scenario)
      .Set("repetition", std::uint64_t{t.repetition})
      .Set("seed", t.seed)
      .Set("samples", t.samples)
      .SetOpt("lambda", t.lambda)
      .SetOpt("first_alarm", t.first_alarm)
      .Set("alarms", t.alarms)
      .Set("run_samples", t.run_samples);
  return r;
}

EvalSummary SummaryFromRow(const Row& r, std::size_t line) {
  EvalSummary s;
  s.scenario = r.Str("scenario");
  s.traces = r.U("traces", line);
  s.attack_traces = r.U("attack_traces", line);
  s.attack_free_traces = r.U("attack_free_traces", line);
  s.detected = r.U("detected", line);
  s.early_alarms = r.U("early_alarms", line);
  s.add_samples = r.OptD("add_samples");
  s.add_ms = r.OptD("add_ms");
  s.detection_rate = r.OptD("detection_rate");
  s.attack_free_samples = r.U("attack_free_samples", line);
  s.false_alarms = r.U("false_alarms", line);
  s.alarmed_attack_free_traces = r.U("alarmed_attack_free_traces", line);
  s.far_per_sample = r.D("far_per_sample", line);
  s.far_run_length = r.D("far_run_length", line);
  s.far_per_trace = r.D("far_per_trace", line);
  return s;
}

TraceResult TraceFromRow(const Row& r, std::size_t line) {
  TraceResult t;
  t.scenario = r.Str("scenario");
  const auto rep = r.U("repetition", line);
  if (rep > 0xffffffffULL) Malformed("repetition out of range", line);
  t.repetition = static_cast<std::uint32_t>(rep);
  t.seed = r.U("seed", line);
  t.samples = r.U("samples", line);
  t.lambda = r.OptU("lambda");
  t.first_alarm = r.OptU("first_alarm");
  t.alarms = r.U("alarms", line);
  t.run_samples = r.U("run_samples", line);
  return t;
}

std::vector<Row> ReportRows(const EvalReport& report) {
  std::vector<Row> rows;
  rows.push_back(SummaryRow("summary", report.overall, report.period_us));
  for (const auto& s : report.per_scenario) rows.push_back(SummaryRow("scenario", s, 0));
  for (const auto& t : report.traces) rows.push_back(TraceRow(t));
  return rows;
}

EvalReport ReportFromRows(const std::vector<std::pair<Row, std::size_t>>& rows) {
  EvalReport report;
  bool have_summary = false;
  for (const auto& [row, line] : rows) {
    const auto record = row.Str("record");
    if (record == "summary") {
      if (have_summary) Malformed("duplicate summary record", line);
      have_summary = true;
      const auto period = row.U("period_us", line);
      if (period > 0xffffffffULL) Malformed("period_us out of range", line);
      report.period_us = static_cast<std::uint32_t>(period);
      report.overall = SummaryFromRow(row, line);
    } else if (record == "scenario") {
      report.per_scenario.push_back(SummaryFromRow(row, line));
    } else if (record == "trace") {
      report.traces.push_back(TraceFromRow(row, line));
    } else {
      Malformed("unknown record '" + record + "'", line);
    }
  }
  if (!have_summary) Malformed("report has no summary record", rows.empty() ? 1 : rows.back().second);
  return report;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Cell ParseCsvCell(const std::string& text, Type type, const char* column, std::size_t line) {
  if (text.empty()) return std::monostate{};
  const ConfigEntry entry{column, text, line};
  switch (type) {
    case Type::kString: return text;
    case Type::kUint: return ToUint(entry);
    case Type::kDouble: return ToDouble(entry);
  }
  return std::monostate{};
}

Cell JsonCell(const Json& j, Type type, const char* column, std::size_t line) {
  if (j.is_null()) return std::monostate{};
  switch (type) {
    case Type::kString:
      if (j.is_string()) return j.get<std::string>();
      break;
    case Type::kUint:
      if (j.is_number_unsigned()) return j.get<std::uint64_t>();
      break;
    case Type::kDouble:
      if (j.is_number()) return j.get<double>();
      break;
  }
  Malformed(std::string("wrong type for '") + column + "'", line);
}

std::string CsvHeader() {
  std::string h;
  for (std::size_t i = 0; i < kNumColumns; ++i) {
    if (i) h += ',';
    h += kColumns[i].name;
  }
  return h;
}

}  // namespace

void CorpusSpec::Validate() const {
  ValidateDetector(detector, period_us);
  if (entries.empty()) throw Error(ErrorCode::kInvalidSpec, "corpus has no entries");
  std::set<std::string> names;
  for (const auto& e : entries) {
    ValidateName(e.name, 0);
    if (!names.insert(e.name).second) {
      throw Error(ErrorCode::kInvalidSpec, "duplicate corpus entry '" + e.name + "'");
    }
    if (e.repetitions < 1) {
      throw Error(ErrorCode::kInvalidSpec, "repetitions must be at least 1 for '" + e.name + "'");
    }
    if (e.scenario.has_value() == e.trace.has_value()) {
      throw Error(ErrorCode::kInvalidSpec, "entry '" + e.name + "' needs a scenario or a trace");
    }
    if (e.scenario) e.scenario->Validate();
  }
}

CorpusSpec ParseCorpus(std::string_view text, const std::filesystem::path& base_dir) {
  const auto doc = ParseConfig(text);
  CorpusSpec spec;
  for (const auto& e : doc.sections[0].entries) {
    if (!ApplyCommonKey(e, spec.detector, spec.period_us)) {
      Malformed("unknown key '" + e.key + "'", e.line);
    }
  }
  for (std::size_t i = 1; i < doc.sections.size(); ++i) {
    const auto& section = doc.sections[i];
    CorpusEntry entry;
    entry.name = section.name + "-" + std::to_string(i);
    if (section.name == "scenario") {
      ConfigSection scenario_keys;
      scenario_keys.line = section.line;
      for (const auto& e : section.entries) {
        if (e.key == "name") {
          entry.name = e.value;
        } else if (e.key == "repetitions") {
          entry.repetitions = ToU32(e);
        } else if (IsScenarioKey(e.key)) {
          scenario_keys.entries.push_back(e);
        } else {
          Malformed("unknown key '" + e.key + "'", e.line);
        }
      }
      entry.scenario = ScenarioFromSection(scenario_keys);
    } else if (section.name == "trace") {
      for (const auto& e : section.entries) {
        if (e.key == "name") {
          entry.name = e.value;
        } else if (e.key == "path") {
          std::filesystem::path p(e.value);
          entry.trace = p.is_relative() ? base_dir / p : p;
        } else {
          Malformed("unknown key '" + e.key + "'", e.line);
        }
      }
      if (!entry.trace) Malformed("trace section needs a path", section.line);
    } else {
      Malformed("unknown section '" + section.name + "'", section.line);
    }
    ValidateName(entry.name, section.line);
    spec.entries.push_back(std::move(entry));
  }
  spec.Validate();
  return spec;
}

CorpusSpec LoadCorpus(const std::filesystem::path& path) {
  return ParseCorpus(ReadTextFile(path), path.parent_path());
}

bool TraceResult::detected() const {
  return lambda && first_alarm && *first_alarm >= *lambda;
}

bool TraceResult::early_alarm() const {
  return lambda && first_alarm && *first_alarm < *lambda;
}

std::optional<std::uint64_t> TraceResult::delay_samples() const {
  if (!detected()) return std::nullopt;
  return *first_alarm - *lambda + 1;
}

TraceResult EvaluateTrace(const Trace& trace, std::optional<std::uint64_t> lambda,
                          const DetectorConfig& detector) {
  TraceResult r;
  r.samples = trace.size();
  r.lambda = lambda;
  DetectorState state = NewDetector(detector);
  std::uint64_t run_start = 0;
  for (std::uint64_t i = 0; i < trace.size(); ++i) {
    if (!Update(state, trace[i], detector).alarm) continue;
    if (!r.first_alarm) r.first_alarm = i;
    if (lambda) break;
    ++r.alarms;
    r.run_samples += i - run_start + 1;
    run_start = i + 1;
    state = Reset(detector);
  }
  return r;
}

EvalSummary Summarize(std::string scenario, const std::vector<TraceResult>& traces,
                      std::uint32_t period_us) {
  EvalSummary s;
  s.scenario = std::move(scenario);
  double delay_sum = 0.0;
  std::uint64_t run_samples = 0;
  for (const auto& t : traces) {
    ++s.traces;
    if (t.is_attack()) {
      ++s.attack_traces;
      if (t.detected()) {
        ++s.detected;
        delay_sum += static_cast<double>(*t.delay_samples());
      } else if (t.early_alarm()) {
        ++s.early_alarms;
      }
    } else {
      ++s.attack_free_traces;
      s.attack_free_samples += t.samples;
      s.false_alarms += t.alarms;
      run_samples += t.run_samples;
      if (t.alarms > 0) ++s.alarmed_attack_free_traces;
    }
  }
  if (s.detected > 0) {
    s.add_samples = delay_sum / static_cast<double>(s.detected);
    s.add_ms = *s.add_samples * static_cast<double>(period_us) / 1000.0;
  }
  if (s.attack_traces > 0) {
    s.detection_rate = static_cast<double>(s.detected) / static_cast<double>(s.attack_traces);
  }
  if (s.attack_free_samples > 0) {
    s.far_per_sample =
        static_cast<double>(s.false_alarms) / static_cast<double>(s.attack_free_samples);
  }
  if (run_samples > 0) {
    s.far_run_length = static_cast<double>(s.false_alarms) / static_cast<double>(run_samples);
  }
  if (s.attack_free_traces > 0) {
    s.far_per_trace = static_cast<double>(s.alarmed_attack_free_traces) /
                      static_cast<double>(s.attack_free_traces);
  }
  return s;
}

EvalReport EvaluateCorpus(const CorpusSpec& spec, const EvalOptions& options) {
  spec.Validate();
  struct Job {
    std::size_t entry;
    std::uint32_t repetition;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < spec.entries.size(); ++i) {
    for (std::uint32_t r = 0; r < spec.entries[i].repetitions; ++r) jobs.push_back({i, r});
  }

  auto run = [&](const Job& job) {
    const auto& entry = spec.entries[job.entry];
    TraceResult result;
    if (entry.scenario) {
      ScenarioSpec s = *entry.scenario;
      s.period_us = spec.period_us;
      s.seed = MixSeed(entry.scenario->seed, job.repetition);
      std::optional<std::uint64_t> lambda;
      if (s.attack) lambda = s.attack->onset_sample;
      result = EvaluateTrace(GenerateTrace(s).trace, lambda, spec.detector);
      result.seed = s.seed;
    } else {
      const auto loaded = ReadTrace(*entry.trace);
      std::optional<std::uint64_t> lambda;
      if (loaded.label) lambda = loaded.label->lambda;
      result = EvaluateTrace(loaded.trace, lambda, spec.detector);
    }
    result.scenario = entry.name;
    result.repetition = job.repetition;
    return result;
  };

  EvalReport report;
  report.period_us = spec.period_us;
  report.traces = ParallelMap(jobs, options.threads, run);

  std::size_t begin = 0;
  for (const auto& entry : spec.entries) {
    const std::vector<TraceResult> slice(report.traces.begin() + begin,
                                         report.traces.begin() + begin + entry.repetitions);
    report.per_scenario.push_back(Summarize(entry.name, slice, spec.period_us));
    begin += entry.repetitions;
  }
  report.overall = Summarize("*", report.traces, spec.period_us);
  return report;
}

std::vector<bool> EvaluateSweep(const std::vector<SweepTrace>& sweep,
                                const DetectorConfig& detector) {
  std::vector<bool> bitmap;
  bitmap.reserve(sweep.size());
  for (const auto& set : sweep) {
    bitmap.push_back(EvaluateTrace(set.trace, 0, detector).first_alarm.has_value());
  }
  return bitmap;
}

void WriteSweepBitmap(std::ostream& out, const std::vector<SweepTrace>& sweep,
                      const std::vector<bool>& bitmap) {
  out << "set,alarm,victim\n";
  for (std::size_t i = 0; i < sweep.size() && i < bitmap.size(); ++i) {
    out << sweep[i].set_index << ',' << (bitmap[i] ? 1 : 0) << ','
        << (sweep[i].label.lambda ? 1 : 0) << '\n';
  }
}

void NoiseGrid::Validate() const {
  ValidateDetector(detector, period_us);
  base.Validate();
  if (base.attack) throw Error(ErrorCode::kInvalidSpec, "noise grid base must be attack-free");
  if (levels.empty()) throw Error(ErrorCode::kInvalidSpec, "noise grid has no levels");
  if (repetitions < 1) throw Error(ErrorCode::kInvalidSpec, "repetitions must be at least 1");
  std::set<std::string> names;
  for (const auto& l : levels) {
    ValidateName(l.name, 0);
    if (!names.insert(l.name).second) {
      throw Error(ErrorCode::kInvalidSpec, "duplicate level '" + l.name + "'");
    }
  }
}

NoiseGrid ParseNoiseGrid(std::string_view text) {
  const auto doc = ParseConfig(text);
  NoiseGrid grid;
  ConfigSection base_keys;
  for (const auto& e : doc.sections[0].entries) {
    if (e.key == "repetitions") {
      grid.repetitions = ToU32(e);
    } else if (ApplyCommonKey(e, grid.detector, grid.period_us)) {
      if (e.key == "period_us") base_keys.entries.push_back(e);
    } else if (IsScenarioKey(e.key) && !e.key.starts_with("noise.")) {
      base_keys.entries.push_back(e);
    } else {
      Malformed("unknown key '" + e.key + "'", e.line);
    }
  }
  grid.base = ScenarioFromSection(base_keys);
  for (std::size_t i = 1; i < doc.sections.size(); ++i) {
    const auto& section = doc.sections[i];
    if (section.name != "level") Malformed("unknown section '" + section.name + "'", section.line);
    NoiseLevel level;
    level.name = "level-" + std::to_string(i);
    ConfigSection merged = base_keys;
    for (const auto& e : section.entries) {
      if (e.key == "name") {
        level.name = e.value;
      } else if (e.key.starts_with("noise.") && IsScenarioKey(e.key)) {
        merged.entries.push_back(e);
      } else {
        Malformed("unknown key '" + e.key + "'", e.line);
      }
    }
    level.noise = ScenarioFromSection(merged).noise;
    ValidateName(level.name, section.line);
    grid.levels.push_back(std::move(level));
  }
  grid.Validate();
  return grid;
}

NoiseGrid LoadNoiseGrid(const std::filesystem::path& path) {
  return ParseNoiseGrid(ReadTextFile(path));
}

std::vector<FarPoint> NoiseFarCurve(const NoiseGrid& grid, const EvalOptions& options) {
  grid.Validate();
  CorpusSpec corpus;
  corpus.detector = grid.detector;
  corpus.period_us = grid.period_us;
  for (const auto& level : grid.levels) {
    ScenarioSpec s = grid.base;
    s.noise = level.noise;
    corpus.entries.push_back({level.name, s, std::nullopt, grid.repetitions});
  }
  const auto report = EvaluateCorpus(corpus, options);
  std::vector<FarPoint> curve;
  for (std::size_t i = 0; i < grid.levels.size(); ++i) {
    curve.push_back({grid.levels[i], report.per_scenario[i]});
  }
  return curve;
}

void WriteFarCurve(std::ostream& out, const std::vector<FarPoint>& curve) {
  out << "level,profile,burst_rate,burst_miss_mean,burst_len_mean,traces,samples,"
         "false_alarms,far_per_sample,far_run_length,far_per_trace\n";
  for (const auto& p : curve) {
    const auto& n = p.level.noise;
    out << p.level.name << ',' << (n ? std::string(ToString(n->profile)) : "none") << ','
        << FormatDouble(n ? n->burst_rate : 0.0) << ','
        << FormatDouble(n ? n->burst_miss_mean : 0.0) << ','
        << FormatDouble(n ? n->burst_len_mean : 0.0) << ',' << p.summary.traces << ','
        << p.summary.attack_free_samples << ',' << p.summary.false_alarms << ','
        << FormatDouble(p.summary.far_per_sample) << ','
        << FormatDouble(p.summary.far_run_length) << ','
        << FormatDouble(p.summary.far_per_trace) << '\n';
  }
}

ReportFormat ParseReportFormat(std::string_view text) {
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "jsonl") return ReportFormat::kJsonl;
  throw Error(ErrorCode::kInvalidArgument, "format must be csv or jsonl, got '" +
                                               std::string(text) + "'");
}

void WriteReport(std::ostream& out, const EvalReport& report, ReportFormat format) {
  const auto rows = ReportRows(report);
  if (format == ReportFormat::kCsv) {
    out << CsvHeader() << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < kNumColumns; ++i) {
        if (i) out << ',';
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) {
                out << FormatDouble(v);
              } else if constexpr (!std::is_same_v<T, std::monostate>) {
                out << v;
              }
            },
            row.at(i));
      }
      out << '\n';
    }
    return;
  }
  for (const auto& row : rows) {
    Json j = Json::object();
    for (std::size_t i = 0; i < kNumColumns; ++i) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
              j[kColumns[i].name] = nullptr;
            } else {
              j[kColumns[i].name] = v;
            }
          },
          row.at(i));
    }
    out << j.dump() << '\n';
  }
}

void ExportReport(const EvalReport& report, ReportFormat format,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  WriteReport(out, report, format);
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

EvalReport ReadReport(std::istream& in) {
  std::vector<std::pair<Row, std::size_t>> rows;
  std::string line;
  std::size_t n = 0;
  std::optional<ReportFormat> format;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!format) {
      if (!line.empty() && line.front() == '{') {
        format = ReportFormat::kJsonl;
      } else {
        if (line != CsvHeader()) Malformed("unexpected report header", n);
        format = ReportFormat::kCsv;
        continue;
      }
    }
    if (line.empty()) continue;
    Row row;
    if (*format == ReportFormat::kCsv) {
      const auto cells = SplitCsv(line);
      if (cells.size() != kNumColumns) {
        Malformed("expected " + std::to_string(kNumColumns) + " fields, got " +
                      std::to_string(cells.size()),
                  n);
      }
      for (std::size_t i = 0; i < kNumColumns; ++i) {
        row.at(i) = ParseCsvCell(cells[i], kColumns[i].type, kColumns[i].name, n);
      }
    } else {
      Json j;
      try {
        j = Json::parse(line);
      } catch (const Json::exception& e) {
        Malformed(e.what(), n);
      }
      if (!j.is_object()) Malformed("record is not an object", n);
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (ColumnIndex(it.key()) == kNumColumns) Malformed("unknown field '" + it.key() + "'", n);
      }
      for (std::size_t i = 0; i < kNumColumns; ++i) {
        if (!j.contains(kColumns[i].name)) {
          Malformed(std::string("missing field '") + kColumns[i].name + "'", n);
        }
        row.at(i) = JsonCell(j.at(kColumns[i].name), kColumns[i].type, kColumns[i].name, n);
      }
    }
    rows.emplace_back(std::move(row), n);
  }
  return ReportFromRows(rows);
}

EvalReport ReadReport(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  return ReadReport(in);
}

}  // namespace cacheshield
