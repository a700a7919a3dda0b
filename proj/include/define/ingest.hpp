#pragma once

#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "define/date.hpp"
#include "define/decision_label.hpp"
#include "define/schema.hpp"

namespace define {

struct Participant {
  std::string name;
  std::string affiliation;
  std::string role;
  friend bool operator==(const Participant&, const Participant&) = default;
};

struct Utterance {
  std::string speaker;
  std::string text;
  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct QaPair {
  Utterance question;
  Utterance answer;
  friend bool operator==(const QaPair&, const QaPair&) = default;
};

struct TranscriptRecord {
  std::string ticker;  // uppercase
  Date announcement_date;
  std::optional<std::string> sector;
  std::vector<Participant> participants;
  std::vector<Utterance> prepared_remarks;
  std::vector<QaPair> qa_pairs;
  friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

// `source` names the input in error messages.
TranscriptRecord parse_transcript(std::string_view text, const std::string& source = "<input>");
TranscriptRecord load_transcript(const std::string& path);
std::string transcript_to_json(const TranscriptRecord& record);
void save_transcript(const TranscriptRecord& record, const std::string& path);

struct PricePoint {
  Date date;
  double close = 0.0;
  friend bool operator==(const PricePoint&, const PricePoint&) = default;
};

// Daily closes, dates strictly increasing, closes > 0.
struct PriceSeries {
  std::string ticker;
  std::vector<PricePoint> points;
  friend bool operator==(const PriceSeries&, const PriceSeries&) = default;
};

PriceSeries parse_prices(std::string_view csv, std::string ticker = {},
                         const std::string& source = "<input>");
PriceSeries load_prices(const std::string& path, std::string ticker = {});
std::string prices_to_csv(const PriceSeries& series);
void save_prices(const PriceSeries& series, const std::string& path);

struct MetricPoint {
  Date date;
  double value = 0.0;
  friend bool operator==(const MetricPoint&, const MetricPoint&) = default;
};

struct FinancialHistory {
  std::string ticker;
  std::vector<MetricPoint> eps;
  std::vector<MetricPoint> revenue;
  friend bool operator==(const FinancialHistory&, const FinancialHistory&) = default;
};

// CSV `date,eps,revenue`; an empty cell omits that metric for the row.
FinancialHistory parse_financials(std::string_view csv, std::string ticker = {},
                                  const std::string& source = "<input>");
FinancialHistory load_financials(const std::string& path, std::string ticker = {});
std::string financials_to_csv(const FinancialHistory& history);
void save_financials(const FinancialHistory& history, const std::string& path);

struct ManifestEntry {
  std::string transcript_path;
  std::string prices_path;
  std::optional<std::string> financials_path;
  std::optional<std::string> profile_id;
  std::optional<DecisionLabel> label;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

// Relative paths are resolved against the manifest's directory and must
// exist; explicit profile ids must be unique.
DatasetManifest load_manifest(const std::string& path);

// Explicit id, else "TICKER-YYYY-MM-DD".
std::string resolve_profile_id(const ManifestEntry& entry, const TranscriptRecord& transcript);

/// One line of a profile JSONL file.
struct ProfileRecord {
  std::string profile_id;
  std::string ticker;
  Date date;
  std::optional<std::string> sector;
  std::optional<DecisionLabel> label;
  FactorProfile profile;
};

std::string profile_to_jsonl_line(const ProfileRecord& record);
ProfileRecord parse_profile_line(std::string_view line, const SchemaPtr& schema);

void write_profiles(std::span<const ProfileRecord> records, std::ostream& out);
void save_profiles(std::span<const ProfileRecord> records, const std::string& path);
// Blank lines are skipped. Grades, when present, are re-normalized and must
// match the stored probabilities within kProfileTolerance.
std::vector<ProfileRecord> read_profiles(std::istream& in, const SchemaPtr& schema,
                                         const std::string& source = "<input>");
std::vector<ProfileRecord> load_profiles(const std::string& path, const SchemaPtr& schema);

struct LabelRecord {
  std::string profile_id;
  DecisionLabel label = DecisionLabel::hold;
  std::optional<double> return_pct;
};

std::vector<LabelRecord> read_labels(std::istream& in, const std::string& source = "<input>");
std::vector<LabelRecord> load_labels(const std::string& path);
std::map<std::string, DecisionLabel> label_map(std::span<const LabelRecord> labels);

/// Append-only profile store backed by a JSONL file. Reads may run
/// concurrently; appends are serialized and flushed line by line.
class ProfileStore {
 public:
  ProfileStore(std::string path, SchemaPtr schema);

  void append(const ProfileRecord& record);
  std::vector<ProfileRecord> snapshot() const;
  std::optional<ProfileRecord> find(const std::string& profile_id) const;
  std::size_t size() const;

 private:
  std::string path_;
  SchemaPtr schema_;
  mutable std::shared_mutex mutex_;
  std::vector<ProfileRecord> records_;
};

}  // namespace define
