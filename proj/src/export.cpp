#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fvopt/bench.hpp"
#include "fvopt/error.hpp"

namespace fvopt {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw Error(ErrorKind::io_error, "bad number in CSV: " + s);
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE || s.front() == '-') {
    throw Error(ErrorKind::io_error, "bad integer in CSV: " + s);
  }
  return v;
}

nlohmann::ordered_json to_json(const MethodSummary& m) {
  return {{"min", m.min}, {"q1", m.q1}, {"median", m.median}, {"q3", m.q3}, {"max", m.max}};
}

}  // namespace

void write_csv(std::ostream& out, std::span<const RunRecord> records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.function_id << ',' << to_string(r.method) << ',' << r.replication << ','
        << fmt_double(r.best_value) << ',' << fmt_double(r.relative_error) << ',' << r.eval_count
        << ',' << r.absorptions << ',' << r.reinitializations << ',' << r.reactivations << ','
        << r.seed << '\n';
  }
  if (!out) throw Error(ErrorKind::io_error, "failed writing CSV");
}

std::vector<RunRecord> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(ErrorKind::io_error, "CSV header mismatch");
  }
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw Error(ErrorKind::io_error, "CSV row needs 10 fields: " + line);
    RunRecord r;
    r.function_id = parse_uint(f[0]);
    if (f[1] == "SA") {
      r.method = Method::sa;
    } else if (f[1] == "FV") {
      r.method = Method::fv;
    } else {
      throw Error(ErrorKind::io_error, "unknown method " + f[1]);
    }
    r.replication = parse_uint(f[2]);
    r.best_value = parse_double(f[3]);
    r.relative_error = parse_double(f[4]);
    r.eval_count = parse_uint(f[5]);
    r.absorptions = parse_uint(f[6]);
    r.reinitializations = parse_uint(f[7]);
    r.reactivations = parse_uint(f[8]);
    r.seed = parse_uint(f[9]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary_json(std::ostream& out, std::span<const FunctionSummary> summary) {
  nlohmann::ordered_json j;
  j["version"] = "fvsummary/1";
  auto fns = nlohmann::ordered_json::array();
  for (const auto& f : summary) {
    fns.push_back({{"function_id", f.function_id},
                   {"advantage", f.advantage},
                   {"SA", to_json(f.sa)},
                   {"FV", to_json(f.fv)}});
  }
  j["functions"] = std::move(fns);
  const auto stats = advantage_stats(summary);
  j["mean_advantage"] = stats.mean;
  j["positive_advantage_count"] = stats.positive;
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io_error, "failed writing summary");
}

void export_records(const std::string& dir, std::span<const RunRecord> records) {
  if (records.empty()) throw Error(ErrorKind::invalid_params, "nothing to export");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);

  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw Error(ErrorKind::io_error, "cannot open " + p.string());
    return out;
  };
  {
    auto out = open(base / "records.csv");
    write_csv(out, records);
  }
  {
    auto out = open(base / "summary.json");
    write_summary_json(out, summarize(records));
  }
  {
    auto out = open(base / "events.csv");
    out << "function_id,method,replication,";
    std::ostringstream head;
    write_event_log(head, {});
    out << head.str();
    for (const auto& r : records) {
      std::ostringstream body;
      write_event_log(body, r.events);
      std::istringstream lines(body.str());
      std::string line;
      std::getline(lines, line);  // header
      while (std::getline(lines, line)) {
        out << r.function_id << ',' << to_string(r.method) << ',' << r.replication << ',' << line
            << '\n';
      }
    }
    if (!out) throw Error(ErrorKind::io_error, "failed writing events");
  }
}

}  // namespace fvopt
