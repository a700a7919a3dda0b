#include "define/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "define/errors.hpp"
#include "json.hpp"

namespace define {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IOError("write failed for '" + path + "'");
}

// Translates a byte offset into "line L, column C".
std::string position_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json parse_json_document(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": malformed JSON at " + position_of(text, e.byte));
  }
}

const json& require(const json& obj, const char* key, const std::string& context) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw SchemaViolation(context + ": missing required field '" + key + "'");
  }
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key, const std::string& context) {
  const auto& v = require(obj, key, context);
  if (!v.is_string()) throw SchemaViolation(context + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

std::string optional_string(const json& obj, const char* key) {
  if (obj.is_object() && obj.contains(key) && obj.at(key).is_string()) {
    return obj.at(key).get<std::string>();
  }
  return {};
}

Utterance parse_utterance(const json& obj, const std::string& context) {
  return {require_string(obj, "speaker", context), require_string(obj, "text", context)};
}

json utterance_json(const Utterance& u) { return {{"speaker", u.speaker}, {"text", u.text}}; }

std::string to_upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv_row(std::string_view row) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    auto comma = row.find(',', start);
    cells.push_back(trim(row.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw ParseError("'" + std::string(cell) + "' is not a number");
  }
  return v;
}

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Iterates non-empty CSV rows after validating the header.
template <typename RowFn>
void for_each_csv_row(std::string_view csv, std::span<const std::string_view> header,
                      const std::string& source, RowFn&& fn) {
  std::size_t line_no = 0;
  bool seen_header = false;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    auto nl = csv.find('\n', pos);
    auto line = csv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? csv.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    auto cells = split_csv_row(line);
    const auto where = source + ":" + std::to_string(line_no);
    if (!seen_header) {
      bool ok = cells.size() == header.size();
      for (std::size_t i = 0; ok && i < cells.size(); ++i) {
        std::string lowered(cells[i]);
        std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        ok = lowered == header[i];
      }
      if (!ok) {
        std::string expected;
        for (auto h : header) expected += (expected.empty() ? "" : ",") + std::string(h);
        throw ParseError(where + ": expected header '" + expected + "'");
      }
      seen_header = true;
      continue;
    }
    if (cells.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " columns, got " +
                       std::to_string(cells.size()));
    }
    try {
      fn(cells, where);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  if (!seen_header) throw ParseError(source + ": empty CSV, missing header");
}

template <typename Point>
void sort_unique_dates(std::vector<Point>& points, const std::string& source) {
  std::stable_sort(points.begin(), points.end(),
                   [](const Point& a, const Point& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].date == points[i - 1].date) {
      throw DuplicateDate(source + ": duplicate date " + points[i].date.iso());
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Transcripts

TranscriptRecord parse_transcript(std::string_view text, const std::string& source) {
  if (trim(text).empty()) throw ParseError(source + ": empty transcript file");
  const json doc = parse_json_document(text, source);
  if (!doc.is_object()) throw SchemaViolation(source + ": transcript must be a JSON object");

  TranscriptRecord r;
  r.ticker = to_upper(require_string(doc, "ticker", source));
  if (r.ticker.empty()) throw SchemaViolation(source + ": ticker is empty");
  try {
    r.announcement_date = Date::parse(require_string(doc, "announcement_date", source));
  } catch (const ParseError& e) {
    throw SchemaViolation(source + ": announcement_date: " + e.what());
  }
  if (doc.contains("sector") && doc.at("sector").is_string() &&
      !doc.at("sector").get<std::string>().empty()) {
    r.sector = doc.at("sector").get<std::string>();
  }
  if (doc.contains("participants")) {
    for (const auto& p : doc.at("participants")) {
      r.participants.push_back({require_string(p, "name", source + ": participants"),
                                optional_string(p, "affiliation"), optional_string(p, "role")});
    }
  }
  const auto& remarks = require(doc, "prepared_remarks", source);
  if (!remarks.is_array() || remarks.empty()) {
    throw SchemaViolation(source + ": prepared_remarks must be a non-empty array");
  }
  for (std::size_t i = 0; i < remarks.size(); ++i) {
    r.prepared_remarks.push_back(
        parse_utterance(remarks[i], source + ": prepared_remarks[" + std::to_string(i) + "]"));
  }
  if (doc.contains("qa_pairs")) {
    const auto& qa = doc.at("qa_pairs");
    if (!qa.is_array()) throw SchemaViolation(source + ": qa_pairs must be an array");
    for (std::size_t i = 0; i < qa.size(); ++i) {
      const auto ctx = source + ": qa_pairs[" + std::to_string(i) + "]";
      r.qa_pairs.push_back({parse_utterance(require(qa[i], "question", ctx), ctx + ".question"),
                            parse_utterance(require(qa[i], "answer", ctx), ctx + ".answer")});
    }
  }
  return r;
}

TranscriptRecord load_transcript(const std::string& path) {
  return parse_transcript(read_file(path), path);
}

std::string transcript_to_json(const TranscriptRecord& r) {
  json doc;
  doc["ticker"] = r.ticker;
  doc["announcement_date"] = r.announcement_date.iso();
  if (r.sector) doc["sector"] = *r.sector;
  doc["participants"] = json::array();
  for (const auto& p : r.participants) {
    doc["participants"].push_back(
        {{"name", p.name}, {"affiliation", p.affiliation}, {"role", p.role}});
  }
  doc["prepared_remarks"] = json::array();
  for (const auto& u : r.prepared_remarks) doc["prepared_remarks"].push_back(utterance_json(u));
  doc["qa_pairs"] = json::array();
  for (const auto& qa : r.qa_pairs) {
    doc["qa_pairs"].push_back(
        {{"question", utterance_json(qa.question)}, {"answer", utterance_json(qa.answer)}});
  }
  return doc.dump(2);
}

void save_transcript(const TranscriptRecord& record, const std::string& path) {
  write_file(path, transcript_to_json(record) + "\n");
}

// ---------------------------------------------------------------------------
// Prices and financials

PriceSeries parse_prices(std::string_view csv, std::string ticker, const std::string& source) {
  static constexpr std::string_view kHeader[] = {"date", "close"};
  PriceSeries series{to_upper(std::move(ticker)), {}};
  for_each_csv_row(csv, kHeader, source, [&](const auto& cells, const std::string& where) {
    const auto date = Date::parse(cells[0]);
    const auto close = parse_number(cells[1]);
    if (!close) throw ParseError("missing close price");
    if (*close <= 0.0) {
      throw NonPositivePrice(where + ": close price " + format_number(*close) + " on " +
                             date.iso() + " is not positive");
    }
    series.points.push_back({date, *close});
  });
  sort_unique_dates(series.points, source);
  return series;
}

PriceSeries load_prices(const std::string& path, std::string ticker) {
  return parse_prices(read_file(path), std::move(ticker), path);
}

std::string prices_to_csv(const PriceSeries& series) {
  std::string out = "date,close\n";
  for (const auto& p : series.points) out += p.date.iso() + "," + format_number(p.close) + "\n";
  return out;
}

void save_prices(const PriceSeries& series, const std::string& path) {
  write_file(path, prices_to_csv(series));
}

FinancialHistory parse_financials(std::string_view csv, std::string ticker,
                                  const std::string& source) {
  static constexpr std::string_view kHeader[] = {"date", "eps", "revenue"};
  FinancialHistory h{to_upper(std::move(ticker)), {}, {}};
  for_each_csv_row(csv, kHeader, source, [&](const auto& cells, const std::string&) {
    const auto date = Date::parse(cells[0]);
    if (auto eps = parse_number(cells[1])) h.eps.push_back({date, *eps});
    if (auto rev = parse_number(cells[2])) h.revenue.push_back({date, *rev});
  });
  sort_unique_dates(h.eps, source);
  sort_unique_dates(h.revenue, source);
  return h;
}

FinancialHistory load_financials(const std::string& path, std::string ticker) {
  return parse_financials(read_file(path), std::move(ticker), path);
}

std::string financials_to_csv(const FinancialHistory& h) {
  std::map<Date, std::pair<std::string, std::string>> rows;
  for (const auto& p : h.eps) rows[p.date].first = format_number(p.value);
  for (const auto& p : h.revenue) rows[p.date].second = format_number(p.value);
  std::string out = "date,eps,revenue\n";
  for (const auto& [date, cells] : rows) {
    out += date.iso() + "," + cells.first + "," + cells.second + "\n";
  }
  return out;
}

void save_financials(const FinancialHistory& history, const std::string& path) {
  write_file(path, financials_to_csv(history));
}

// ---------------------------------------------------------------------------
// Manifest

DatasetManifest load_manifest(const std::string& path) {
  const auto text = read_file(path);
  const json doc = parse_json_document(text, path);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p, const std::string& ctx) {
    fs::path candidate(p);
    if (candidate.is_relative()) candidate = base / candidate;
    if (!fs::exists(candidate)) throw IOError(ctx + ": '" + candidate.string() + "' not found");
    return candidate.lexically_normal().string();
  };

  const json& entries = doc.is_array() ? doc : require(doc, "entries", path);
  DatasetManifest m;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto ctx = path + ": entries[" + std::to_string(i) + "]";
    const auto& e = entries[i];
    ManifestEntry entry;
    entry.transcript_path = resolve(require_string(e, "transcript_path", ctx), ctx);
    entry.prices_path = resolve(require_string(e, "prices_path", ctx), ctx);
    if (auto f = optional_string(e, "financials_path"); !f.empty()) {
      entry.financials_path = resolve(f, ctx);
    }
    if (auto id = optional_string(e, "profile_id"); !id.empty()) {
      if (!ids.insert(id).second) throw ValidationError(ctx + ": duplicate profile_id '" + id + "'");
      entry.profile_id = id;
    }
    if (auto l = optional_string(e, "label"); !l.empty()) entry.label = parse_label(l);
    m.entries.push_back(std::move(entry));
  }
  return m;
}

std::string resolve_profile_id(const ManifestEntry& entry, const TranscriptRecord& transcript) {
  if (entry.profile_id) return *entry.profile_id;
  return transcript.ticker + "-" + transcript.announcement_date.iso();
}

// ---------------------------------------------------------------------------
// Profile JSONL

std::string profile_to_jsonl_line(const ProfileRecord& r) {
  const auto& schema = r.profile.schema();
  json line;
  line["profile_id"] = r.profile_id;
  line["ticker"] = r.ticker;
  line["date"] = r.date.iso();
  if (r.sector) line["sector"] = *r.sector;
  if (r.label) line["label"] = to_string(*r.label);
  line["summaries"] = r.profile.summaries();
  json grades = nullptr;
  if (r.profile.grades()) {
    grades = json::array();
    for (std::size_t i = 0; i < schema.factor_count(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < schema.outcome_count(i); ++j) {
        row.push_back(grade_value((*r.profile.grades())[schema.offset(i) + j]));
      }
      grades.push_back(std::move(row));
    }
  }
  line["grades"] = std::move(grades);
  json probs = json::array();
  for (std::size_t i = 0; i < schema.factor_count(); ++i) {
    const auto seg = r.profile.factor_probabilities(i);
    probs.push_back(std::vector<double>(seg.begin(), seg.end()));
  }
  line["probabilities"] = std::move(probs);
  return line.dump();
}

ProfileRecord parse_profile_line(std::string_view text, const SchemaPtr& schema) {
  const json line = parse_json_document(text, "profile line");
  const std::string ctx = "profile";
  const auto id = require_string(line, "profile_id", ctx);
  const auto where = ctx + " '" + id + "'";
  const auto& s = *schema;

  std::vector<std::string> summaries;
  if (line.contains("summaries") && !line.at("summaries").is_null()) {
    summaries = line.at("summaries").get<std::vector<std::string>>();
  }
  const auto& probs_json = require(line, "probabilities", where);
  if (!probs_json.is_array() || probs_json.size() != s.factor_count()) {
    throw ValidationError(where + ": probabilities must list " +
                          std::to_string(s.factor_count()) + " factors");
  }
  Eigen::VectorXd stored(static_cast<Eigen::Index>(s.item_count()));
  for (std::size_t i = 0; i < s.factor_count(); ++i) {
    const auto row = probs_json[i].get<std::vector<double>>();
    if (row.size() != s.outcome_count(i)) {
      throw ValidationError(where + ": factor '" + s.factor(i).name + "' has " +
                            std::to_string(row.size()) + " probabilities, expected " +
                            std::to_string(s.outcome_count(i)));
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      stored[static_cast<Eigen::Index>(s.offset(i) + j)] = row[j];
    }
  }

  auto build = [&]() -> FactorProfile {
    if (!line.contains("grades") || line.at("grades").is_null()) {
      return FactorProfile::from_probabilities(schema, stored, summaries);
    }
    const auto& g = line.at("grades");
    if (!g.is_array() || g.size() != s.factor_count()) {
      throw ValidationError(where + ": grades must list " + std::to_string(s.factor_count()) +
                            " factors");
    }
    std::vector<LikelihoodGrade> flat;
    for (std::size_t i = 0; i < s.factor_count(); ++i) {
      if (g[i].size() != s.outcome_count(i)) {
        throw ValidationError(where + ": factor '" + s.factor(i).name + "' grade arity mismatch");
      }
      for (const auto& v : g[i]) flat.push_back(grade_from_value(v.get<int>()));
    }
    auto profile = FactorProfile::from_grades(schema, std::move(flat), summaries);
    const double drift = (profile.flat() - stored).cwiseAbs().maxCoeff();
    if (!(drift <= kProfileTolerance)) {
      throw ValidationError(where + ": stored probabilities disagree with grades (max drift " +
                            std::to_string(drift) + ")");
    }
    return profile;
  };

  try {
    ProfileRecord r{id,
                    optional_string(line, "ticker"),
                    Date{},
                    std::nullopt,
                    std::nullopt,
                    build()};
    if (auto d = optional_string(line, "date"); !d.empty()) r.date = Date::parse(d);
    if (auto sec = optional_string(line, "sector"); !sec.empty()) r.sector = sec;
    if (auto l = optional_string(line, "label"); !l.empty()) r.label = parse_label(l);
    return r;
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    throw ValidationError(msg.rfind(where, 0) == 0 ? msg : where + ": " + msg);
  } catch (const json::exception& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

void write_profiles(std::span<const ProfileRecord> records, std::ostream& out) {
  for (const auto& r : records) out << profile_to_jsonl_line(r) << '\n';
}

void save_profiles(std::span<const ProfileRecord> records, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write '" + path + "'");
  write_profiles(records, out);
  if (!out) throw IOError("write failed for '" + path + "'");
}

std::vector<ProfileRecord> read_profiles(std::istream& in, const SchemaPtr& schema,
                                         const std::string& source) {
  std::vector<ProfileRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto r = parse_profile_line(line, schema);
      if (!ids.insert(r.profile_id).second) {
        throw ValidationError("duplicate profile_id '" + r.profile_id + "'");
      }
      out.push_back(std::move(r));
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ProfileRecord> load_profiles(const std::string& path, const SchemaPtr& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open '" + path + "'");
  return read_profiles(in, schema, path);
}

// ---------------------------------------------------------------------------
// Labels

std::vector<LabelRecord> read_labels(std::istream& in, const std::string& source) {
  std::vector<LabelRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = source + ":" + std::to_string(line_no);
    const json doc = parse_json_document(line, where);
    LabelRecord r;
    r.profile_id = require_string(doc, "profile_id", where);
    r.label = parse_label(require_string(doc, "label", where));
    if (doc.contains("return_pct") && doc.at("return_pct").is_number()) {
      r.return_pct = doc.at("return_pct").get<double>();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<LabelRecord> load_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open '" + path + "'");
  return read_labels(in, path);
}

std::map<std::string, DecisionLabel> label_map(std::span<const LabelRecord> labels) {
  std::map<std::string, DecisionLabel> out;
  for (const auto& l : labels) {
    if (!out.emplace(l.profile_id, l.label).second) {
      throw ValidationError("duplicate label for profile '" + l.profile_id + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ProfileStore

ProfileStore::ProfileStore(std::string path, SchemaPtr schema)
    : path_(std::move(path)), schema_(std::move(schema)) {
  if (fs::exists(path_)) records_ = load_profiles(path_, schema_);
}

void ProfileStore::append(const ProfileRecord& record) {
  std::unique_lock lock(mutex_);
  for (const auto& r : records_) {
    if (r.profile_id == record.profile_id) {
      throw ValidationError("profile '" + record.profile_id + "' already stored");
    }
  }
  require_same_schema(*schema_, record.profile.schema());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IOError("cannot append to '" + path_ + "'");
  out << profile_to_jsonl_line(record) << '\n';
  out.flush();
  if (!out) throw IOError("append failed for '" + path_ + "'");
  records_.push_back(record);
}

std::vector<ProfileRecord> ProfileStore::snapshot() const {
  std::shared_lock lock(mutex_);
  return records_;
}

std::optional<ProfileRecord> ProfileStore::find(const std::string& profile_id) const {
  std::shared_lock lock(mutex_);
  for (const auto& r : records_) {
    if (r.profile_id == profile_id) return r;
  }
  return std::nullopt;
}

std::size_t ProfileStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

}  // namespace define
