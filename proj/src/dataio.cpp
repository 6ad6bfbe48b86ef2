#include "fsurv/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fsurv/detail/numfmt.hpp"

namespace fsurv {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << text;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

// Yields (row_number, cells) for each non-empty line after the header.
template <typename Fn>
void for_each_row(const std::string& text, const std::string& expected_header, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file, expected header " + expected_header);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t row = 1;
  std::string header = line;
  if (expected_header.find("...") == std::string::npos && header != expected_header)
    throw DataError("bad header '" + header + "', expected '" + expected_header + "'");
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(row, split_line(line));
  }
}

}  // namespace

std::vector<LongitudinalSample> parse_longitudinal_csv(const std::string& text) {
  std::map<std::string, LongitudinalSample> by_id;
  for_each_row(text, "id,time,value", [&](std::size_t row, const std::vector<std::string>& cells) {
    if (cells.size() != 3)
      throw DataError("row " + std::to_string(row) + ": expected 3 cells, got " +
                      std::to_string(cells.size()));
    const std::string where = "row " + std::to_string(row);
    const double t = detail::parse_double(cells[1], where);
    const double v = detail::parse_double(cells[2], where);
    if (!std::isfinite(t) || !std::isfinite(v))
      throw DataError(where + ": non-finite time or value");
    auto& sample = by_id[cells[0]];
    sample.id = cells[0];
    sample.times.push_back(t);
    sample.values.push_back(v);
  });
  std::vector<LongitudinalSample> samples;
  samples.reserve(by_id.size());
  for (auto& [id, sample] : by_id) {
    std::vector<std::size_t> order(sample.times.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return sample.times[a] < sample.times[b]; });
    LongitudinalSample sorted;
    sorted.id = id;
    for (std::size_t k : order) {
      if (!sorted.times.empty() && sorted.times.back() == sample.times[k])
        throw DataError("duplicate observation (id=" + id +
                        ", time=" + detail::format_double(sample.times[k]) + ")");
      sorted.times.push_back(sample.times[k]);
      sorted.values.push_back(sample.values[k]);
    }
    samples.push_back(std::move(sorted));
  }
  return samples;
}

std::vector<LongitudinalSample> load_longitudinal(const std::string& path) {
  return parse_longitudinal_csv(read_file(path));
}

std::vector<SurvivalRecord> parse_survival_csv(const std::string& text) {
  std::istringstream probe(text);
  std::string header;
  if (!std::getline(probe, header)) throw DataError("empty file, expected header id,time,status,...");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const auto head_cells = split_line(header);
  if (head_cells.size() < 3 || head_cells[0] != "id" || head_cells[1] != "time" ||
      head_cells[2] != "status")
    throw DataError("bad header '" + header + "', expected 'id,time,status,x1..xq'");
  const std::size_t q = head_cells.size() - 3;

  std::vector<SurvivalRecord> records;
  for_each_row(text, "id,time,status,...", [&](std::size_t row, const std::vector<std::string>& cells) {
    if (cells.size() != 3 + q)
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(3 + q) +
                      " cells, got " + std::to_string(cells.size()));
    const std::string where = "row " + std::to_string(row);
    SurvivalRecord rec;
    rec.id = cells[0];
    rec.event_time = detail::parse_double(cells[1], where);
    const long status = detail::parse_long(cells[2], where);
    if (status != 0 && status != 1)
      throw DataError(where + ": status must be 0 or 1, got " + cells[2]);
    rec.status = static_cast<std::uint8_t>(status);
    if (!(rec.event_time > 0.0) || !std::isfinite(rec.event_time))
      throw DataError(where + ": event time must be positive and finite");
    rec.covariates.reserve(q);
    for (std::size_t j = 0; j < q; ++j) {
      if (cells[3 + j].empty()) throw DataError(where + ": missing covariate " + head_cells[3 + j]);
      const double x = detail::parse_double(cells[3 + j], where);
      if (!std::isfinite(x)) throw DataError(where + ": non-finite covariate " + head_cells[3 + j]);
      rec.covariates.push_back(x);
    }
    records.push_back(std::move(rec));
  });
  return records;
}

std::vector<SurvivalRecord> load_survival(const std::string& path) {
  return parse_survival_csv(read_file(path));
}

void write_longitudinal(const std::string& path, const std::vector<LongitudinalSample>& samples) {
  std::string out = "id,time,value\n";
  for (const auto& s : samples)
    for (std::size_t j = 0; j < s.times.size(); ++j)
      out += s.id + "," + detail::format_double(s.times[j]) + "," +
             detail::format_double(s.values[j]) + "\n";
  write_file(path, out);
}

void write_survival(const std::string& path, const std::vector<SurvivalRecord>& records) {
  const std::size_t q = records.empty() ? 0 : records.front().covariates.size();
  std::string out = "id,time,status";
  for (std::size_t j = 1; j <= q; ++j) out += ",x" + std::to_string(j);
  out += "\n";
  for (const auto& r : records) {
    out += r.id + "," + detail::format_double(r.event_time) + "," + std::to_string(int(r.status));
    for (double x : r.covariates) out += "," + detail::format_double(x);
    out += "\n";
  }
  write_file(path, out);
}

Interval infer_window(const std::vector<LongitudinalSample>& samples,
                      const std::vector<SurvivalRecord>& records) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (s.times.empty()) continue;
    lo = std::min(lo, s.times.front());
    hi = std::max(hi, s.times.back());
  }
  for (const auto& r : records) {
    lo = std::min(lo, r.event_time);
    hi = std::max(hi, r.event_time);
  }
  if (!(lo < hi)) throw DataError("cannot infer a study window from the inputs");
  return {lo, hi};
}

MixedSurvivalDataset join(std::vector<LongitudinalSample> samples,
                          std::vector<SurvivalRecord> records, Interval window) {
  std::sort(samples.begin(), samples.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::string orphans;
  std::size_t i = 0, j = 0;
  while (i < samples.size() || j < records.size()) {
    if (i < samples.size() && j < records.size() && samples[i].id == records[j].id) {
      ++i;
      ++j;
    } else if (j >= records.size() || (i < samples.size() && samples[i].id < records[j].id)) {
      orphans += " " + samples[i].id + " (longitudinal only)";
      ++i;
    } else {
      orphans += " " + records[j].id + " (survival only)";
      ++j;
    }
  }
  if (!orphans.empty()) throw DataError("unmatched subject ids:" + orphans);

  MixedSurvivalDataset data;
  data.samples = std::move(samples);
  data.survival = std::move(records);
  data.window = window;
  validate(data);
  return data;
}

void validate(const MixedSurvivalDataset& data) {
  if (data.samples.size() != data.survival.size())
    throw DataError("sample/survival tables have different lengths");
  if (data.size() < 2) throw DataError("dataset needs at least 2 subjects");
  if (!(data.window.lo < data.window.hi)) throw DataError("study window is empty");
  const std::size_t q = data.survival.front().covariates.size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.samples[i];
    const auto& r = data.survival[i];
    if (s.id != r.id) throw DataError("subject order mismatch at index " + std::to_string(i));
    if (i > 0 && data.samples[i - 1].id == s.id) throw DataError("duplicate subject id " + s.id);
    if (s.times.empty()) throw DataError("subject " + s.id + " has no observations");
    if (s.times.size() != s.values.size())
      throw DataError("subject " + s.id + " has mismatched times/values");
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      if (k > 0 && !(s.times[k] > s.times[k - 1]))
        throw DataError("subject " + s.id + " times not strictly increasing");
      if (!data.window.contains(s.times[k]))
        throw DataError("subject " + s.id + " has an observation outside the study window");
      if (!std::isfinite(s.values[k])) throw DataError("subject " + s.id + " has a non-finite value");
    }
    if (!(r.event_time > 0.0) || !data.window.contains(r.event_time))
      throw DataError("subject " + r.id + " event time outside the study window");
    if (r.status != 0 && r.status != 1) throw DataError("subject " + r.id + " has invalid status");
    if (r.covariates.size() != q)
      throw DataError("subject " + r.id + " has inconsistent covariate count");
  }
}

std::string dataset_to_json(const MixedSurvivalDataset& data) {
  nlohmann::json subjects = nlohmann::json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.samples[i];
    const auto& r = data.survival[i];
    subjects.push_back({{"id", s.id},
                        {"times", s.times},
                        {"values", s.values},
                        {"event_time", r.event_time},
                        {"status", int(r.status)},
                        {"covariates", r.covariates}});
  }
  nlohmann::json doc{{"window", {data.window.lo, data.window.hi}}, {"subjects", subjects}};
  return doc.dump();
}

MixedSurvivalDataset dataset_from_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  std::vector<LongitudinalSample> samples;
  std::vector<SurvivalRecord> records;
  for (const auto& sub : doc.at("subjects")) {
    LongitudinalSample s;
    s.id = sub.at("id").get<std::string>();
    s.times = sub.at("times").get<std::vector<double>>();
    s.values = sub.at("values").get<std::vector<double>>();
    SurvivalRecord r;
    r.id = s.id;
    r.event_time = sub.at("event_time").get<double>();
    r.status = static_cast<std::uint8_t>(sub.at("status").get<int>());
    r.covariates = sub.at("covariates").get<std::vector<double>>();
    samples.push_back(std::move(s));
    records.push_back(std::move(r));
  }
  Interval window{doc.at("window").at(0).get<double>(), doc.at("window").at(1).get<double>()};
  return join(std::move(samples), std::move(records), window);
}

}  // namespace fsurv
