#include "cli.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "define/analogy.hpp"
#include "define/btmodel.hpp"
#include "define/client.hpp"
#include "define/decide.hpp"
#include "define/errors.hpp"
#include "define/evalx.hpp"
#include "define/extractor.hpp"
#include "define/ingest.hpp"
#include "define/labeler.hpp"
#include "define/schema.hpp"
#include "json.hpp"

namespace define::cli {

namespace {

using nlohmann::json;

// JSON config files: top-level keys are global flags, nested objects hold
// the flags of the subcommand with that name.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json doc = json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        doc[name] = opt->as<std::string>();
      } else if (default_also && !opt->get_default_str().empty()) {
        doc[name] = opt->get_default_str();
      }
    }
    return doc.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      doc = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config", std::string("config file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("config", "config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(doc, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void flatten(const json& obj, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto sub = parents;
        sub.push_back(key);
        flatten(value, sub, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

std::string read_text(const std::string& path, Io& io) {
  if (path == "-") {
    std::ostringstream buf;
    buf << io.in.rdbuf();
    return buf.str();
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IOError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text, Io& io) {
  if (path.empty() || path == "-") {
    io.out << text;
    io.out.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IOError("cannot write '" + path + "'");
  f << text;
}

std::string with_newline(std::string s) {
  if (!s.empty() && s.back() != '\n') s += '\n';
  return s;
}

std::vector<ProfileRecord> read_profile_file(const std::string& path, const SchemaPtr& schema,
                                             Io& io) {
  std::istringstream in(read_text(path, io));
  return read_profiles(in, schema, path);
}

// Any JSONL with `profile_id` and a string `label` (labels, predictions or
// labelled profiles). Lines whose label is null are skipped.
LabelMap read_label_file(const std::string& path, Io& io) {
  std::istringstream in(read_text(path, io));
  LabelMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path + ":" + std::to_string(line_no);
    const auto doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ParseError(where + ": not a JSON object");
    if (!doc.contains("profile_id") || !doc["profile_id"].is_string()) {
      throw SchemaViolation(where + ": missing string 'profile_id'");
    }
    if (!doc.contains("label") || doc["label"].is_null()) continue;
    if (!doc["label"].is_string()) throw SchemaViolation(where + ": 'label' must be a string");
    const auto id = doc["profile_id"].get<std::string>();
    if (!out.emplace(id, parse_label(doc["label"].get<std::string>())).second) {
      throw ValidationError(where + ": duplicate profile id '" + id + "'");
    }
  }
  return out;
}

// Labels from a separate file replace any labels stored with the profiles.
void apply_labels(std::vector<ProfileRecord>& records, const std::string& labels_path, Io& io) {
  if (labels_path.empty()) return;
  const auto labels = read_label_file(labels_path, io);
  for (auto& r : records) {
    const auto it = labels.find(r.profile_id);
    r.label = it == labels.end() ? std::nullopt : std::optional<DecisionLabel>(it->second);
  }
}

LabelCounts counts_of(const LabelMap& labels) {
  LabelCounts c{};
  for (const auto& [id, l] : labels) ++c[label_index(l)];
  return c;
}

LabelCounts parse_counts(const std::string& text) {
  LabelCounts c{};
  std::size_t i = 0;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (i >= c.size()) throw ConfigError("--counts takes five comma-separated integers");
    try {
      std::size_t used = 0;
      const long long v = std::stoll(field, &used);
      if (used != field.size() || v < 0) throw std::invalid_argument(field);
      c[i++] = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ConfigError("--counts entry '" + field + "' is not a non-negative integer");
    }
  }
  if (i != c.size()) throw ConfigError("--counts takes five comma-separated integers");
  return c;
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(field, &used);
      if (used != field.size() || v < 1) throw std::invalid_argument(field);
      ks.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("K value '" + field + "' must be a positive integer");
    }
  }
  if (ks.empty()) throw ConfigError("no K values given");
  return ks;
}

SchemaPtr schema_from(const std::string& path) {
  if (path.empty()) return default_schema();
  return std::make_shared<const FactorSchema>(FactorSchema::load(path));
}

// ---------------------------------------------------------------------------

struct ClientFlags {
  bool live = false;
  bool record = false;
  std::string fixtures;
  std::string endpoint = ClientConfig{}.endpoint;
  std::string model = ClientConfig{}.model;
  int concurrency = ClientConfig{}.concurrency;
  int retries = ClientConfig{}.max_retries;
  int timeout_ms = static_cast<int>(ClientConfig{}.timeout.count());
  std::optional<int> seed;

  void add_to(CLI::App* cmd) {
    cmd->add_flag("--live", live, "Call the chat-completions endpoint (needs DEFINE_API_KEY)");
    cmd->add_flag("--record", record, "In live mode, store every response under --fixtures");
    cmd->add_option("--fixtures", fixtures, "Fixture directory ({hash}.json replies)");
    cmd->add_option("--endpoint", endpoint, "Chat-completions URL")->capture_default_str();
    cmd->add_option("--llm-model", model, "Model name sent to the endpoint")->capture_default_str();
    cmd->add_option("--concurrency", concurrency, "Requests in flight")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--retries", retries, "Retries after a failed request")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--timeout-ms", timeout_ms, "Per-request timeout")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--llm-seed", seed, "Sampling seed sent to the endpoint");
  }

  std::unique_ptr<CompletionClient> make() const {
    ClientConfig c;
    c.mode = live ? ClientMode::live : ClientMode::fixture;
    c.endpoint = endpoint;
    c.model = model;
    c.concurrency = concurrency;
    c.max_retries = retries;
    c.timeout = std::chrono::milliseconds(timeout_ms);
    c.seed = seed;
    c.fixtures_dir = fixtures;
    c.record = record;
    if (!live && fixtures.empty()) {
      throw ConfigError("fixture mode needs --fixtures DIR (or pass --live with DEFINE_API_KEY set)");
    }
    if (live && record && fixtures.empty()) throw ConfigError("--record needs --fixtures DIR");
    return make_client(c);
  }
};

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first
// failure after all threads finish.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), n);
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < count; ++t) threads.emplace_back(body);
  body();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct LoadedEntry {
  TranscriptRecord transcript;
  PriceSeries prices;
  std::optional<FinancialHistory> financials;
  std::string profile_id;
};

std::vector<LoadedEntry> load_entries(const DatasetManifest& manifest) {
  std::vector<LoadedEntry> out;
  for (const auto& e : manifest.entries) {
    LoadedEntry le;
    le.transcript = load_transcript(e.transcript_path);
    le.prices = load_prices(e.prices_path, le.transcript.ticker);
    if (e.financials_path) le.financials = load_financials(*e.financials_path, le.transcript.ticker);
    le.profile_id = resolve_profile_id(e, le.transcript);
    out.push_back(std::move(le));
  }
  return out;
}

std::string predictions_jsonl(const std::vector<DecisionScore>& scores, const LabelMap& labels) {
  std::string out;
  for (const auto& s : scores) {
    out += json{{"profile_id", s.profile_id},
                {"score", s.score},
                {"label", std::string(to_string(labels.at(s.profile_id)))}}
               .dump();
    out += '\n';
  }
  return out;
}

json salience_json(const SalienceModel& model, std::size_t k) {
  json arr = json::array();
  std::size_t rank = 0;
  for (const auto& [id, p] : top_factors(model, k)) {
    const auto& f = model.schema->factor(id.factor_index);
    arr.push_back({{"rank", ++rank},
                   {"factor", f.name},
                   {"outcome", f.outcomes[id.outcome_index].name},
                   {"salience", p}});
  }
  return arr;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  Io io{in, out, err};

  CLI::App app{"Decision engine over earnings-call factor profiles", "define"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  std::string schema_path;
  app.add_option("--schema", schema_path, "Factor schema JSON (default: built-in 15-factor schema)")
      ->check(CLI::ExistingFile);

  // Shared option storage; each subcommand binds what it uses.
  std::string out_path = "-";
  std::string manifest_path, profiles_path, labels_path, model_path, pairs_path;
  std::string regime_text = "cross-sector";
  std::optional<std::size_t> cap;
  std::uint64_t seed = 0;
  int horizon = kDefaultHorizonDays;
  ClientFlags client_flags;

  const auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("-o,--out", out_path, "Output file ('-' = stdout)")->capture_default_str();
  };

  // schema ------------------------------------------------------------------
  auto* schema_cmd = app.add_subcommand("schema", "Print the factor schema, or its flat item list");
  bool schema_items = false;
  schema_cmd->add_flag("--items", schema_items, "List flattened outcome items with polarities");
  add_out(schema_cmd);

  // ingest ------------------------------------------------------------------
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a dataset manifest and summarize it");
  ingest_cmd->add_option("--manifest", manifest_path, "Dataset manifest JSON")->required();
  add_out(ingest_cmd);

  // label -------------------------------------------------------------------
  auto* label_cmd = app.add_subcommand("label", "Label transcripts from post-announcement returns");
  label_cmd->add_option("--manifest", manifest_path, "Dataset manifest JSON")->required();
  label_cmd->add_option("--horizon", horizon, "Return horizon in calendar days")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_out(label_cmd);

  // extract -----------------------------------------------------------------
  auto* extract_cmd = app.add_subcommand("extract", "Build factor profiles with the language model");
  extract_cmd->add_option("--manifest", manifest_path, "Dataset manifest JSON")->required();
  extract_cmd->add_option("--labels", labels_path, "Labels JSONL to attach to the profiles");
  client_flags.add_to(extract_cmd);
  add_out(extract_cmd);

  // pairs -------------------------------------------------------------------
  auto* pairs_cmd = app.add_subcommand("pairs", "Generate preference pairs from labelled profiles");
  pairs_cmd->add_option("--profiles", profiles_path, "Profiles JSONL ('-' = stdin)")->required();
  pairs_cmd->add_option("--labels", labels_path, "Labels JSONL (overrides stored labels)");
  pairs_cmd->add_option("--regime", regime_text, "same-sector | cross-sector | same-company")
      ->capture_default_str();
  pairs_cmd->add_option("--cap", cap, "Downsample to at most N pairs");
  pairs_cmd->add_option("--seed", seed, "Downsampling seed")->capture_default_str();
  add_out(pairs_cmd);

  // fit ---------------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "Fit outcome salience from preference pairs");
  fit_cmd->add_option("--profiles", profiles_path, "Profiles JSONL ('-' = stdin)")->required();
  fit_cmd->add_option("--labels", labels_path, "Labels JSONL (overrides stored labels)");
  fit_cmd->add_option("--pairs", pairs_path, "Pairs JSONL from `pairs` (else generated)");
  fit_cmd->add_option("--regime", regime_text, "same-sector | cross-sector | same-company")
      ->capture_default_str();
  fit_cmd->add_option("--cap", cap, "Downsample to at most N pairs");
  fit_cmd->add_option("--seed", seed, "Downsampling seed")->capture_default_str();
  double tol = FitOptions<double>{}.tol;
  int max_iter = FitOptions<double>{}.max_iter;
  bool literal_diagonal = false;
  fit_cmd->add_option("--tol", tol, "Convergence tolerance on max |delta p|")->capture_default_str();
  fit_cmd->add_option("--max-iter", max_iter, "Iteration limit")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--literal-diagonal", literal_diagonal,
                    "Use same-item products (diagonal only; yields a uniform fit)");
  add_out(fit_cmd);

  // predict -----------------------------------------------------------------
  auto* predict_cmd = app.add_subcommand("predict", "Score profiles and assign decisions");
  predict_cmd->add_option("--model", model_path, "Model JSON ('-' = stdin)")->required();
  predict_cmd->add_option("--profiles", profiles_path, "Profiles JSONL ('-' = stdin)")->required();
  std::string counts_from, counts_text, cutpoints_text;
  auto* counts_from_opt = predict_cmd->add_option(
      "--counts-from", counts_from, "Labels JSONL whose class proportions set the quantiles");
  auto* counts_opt =
      predict_cmd->add_option("--counts", counts_text, "Explicit class counts SB,B,H,S,SS");
  auto* cut_opt =
      predict_cmd->add_option("--cutpoints", cutpoints_text, "Four ascending score thresholds");
  counts_from_opt->excludes(counts_opt)->excludes(cut_opt);
  counts_opt->excludes(cut_opt);
  add_out(predict_cmd);

  // retrieve / decide-analogical ---------------------------------------------
  std::string target_id, corpus_path, target_profiles_path;
  std::size_t k = kDefaultNeighbors;
  bool exclude_ticker = false;
  const auto add_retrieval = [&](CLI::App* cmd) {
    cmd->add_option("--target", target_id, "Target profile id")->required();
    cmd->add_option("--corpus", corpus_path, "Labelled profiles JSONL to search")->required();
    cmd->add_option("--target-profiles", target_profiles_path,
                    "Profiles JSONL holding the target (default: the corpus)");
    cmd->add_option("--labels", labels_path, "Labels JSONL for the corpus");
    cmd->add_option("--k", k, "Number of neighbours")->capture_default_str()->check(
        CLI::PositiveNumber);
    cmd->add_flag("--exclude-ticker", exclude_ticker,
                  "Drop the target company's own profiles from the candidates");
    add_out(cmd);
  };
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Nearest profiles by KL divergence");
  add_retrieval(retrieve_cmd);
  auto* analogical_cmd =
      app.add_subcommand("decide-analogical", "Decide by consulting retrieved analogous cases");
  add_retrieval(analogical_cmd);
  client_flags.add_to(analogical_cmd);

  // eval --------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy, macro metrics and confusion matrix");
  std::string preds_path, golds_path, confusion_csv;
  eval_cmd->add_option("--preds", preds_path, "Predictions JSONL ('-' = stdin)")->required();
  eval_cmd->add_option("--golds", golds_path, "Gold labels JSONL (labels or labelled profiles)")
      ->required();
  eval_cmd->add_option("--confusion-csv", confusion_csv, "Also write the confusion matrix CSV");
  add_out(eval_cmd);

  // synth -------------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted-factor synthetic corpus");
  SynthSpec synth;
  std::string planted_text;
  std::vector<double> proportions, grade_weights, distractor_weights;
  synth_cmd->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("--n", synth.n, "Corpus size")->capture_default_str()->check(
      CLI::PositiveNumber);
  synth_cmd->add_option("--noise", synth.noise, "Label noise level in [0,1]")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--planted", planted_text, "Planted item FACTOR:OUTCOME")->required();
  synth_cmd->add_option("--proportions", proportions, "Label proportions SB B H S SS")
      ->expected(5)
      ->delimiter(',');
  synth_cmd->add_option("--grade-weights", grade_weights,
                        "Weights of grades 1..6 for the planted factor (default uniform)")
      ->expected(6)
      ->delimiter(',');
  synth_cmd->add_option("--distractor-weights", distractor_weights,
                        "Weights of grades 1..6 for other factors (default 0,1,2,2,1,0)")
      ->expected(6)
      ->delimiter(',');
  add_out(synth_cmd);

  // report ------------------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "Analysis reports");
  report_cmd->require_subcommand(1);

  auto* density_cmd = report_cmd->add_subcommand("density", "Positive/negative outcome mass CSV");
  density_cmd->add_option("--profiles", profiles_path, "Profiles JSONL")->required();
  density_cmd->add_option("--labels", labels_path, "Labels JSONL (overrides stored labels)");
  add_out(density_cmd);

  auto* salience_cmd = report_cmd->add_subcommand("salience", "Top outcome items by salience");
  salience_cmd->add_option("--model", model_path, "Model JSON")->required();
  std::size_t top_k = 10;
  salience_cmd->add_option("--top", top_k, "Number of items")->capture_default_str()->check(
      CLI::PositiveNumber);
  add_out(salience_cmd);

  auto* confusion_cmd = report_cmd->add_subcommand("confusion", "Confusion matrix CSV");
  confusion_cmd->add_option("--preds", preds_path, "Predictions JSONL")->required();
  confusion_cmd->add_option("--golds", golds_path, "Gold labels JSONL")->required();
  add_out(confusion_cmd);

  auto* agreement_cmd =
      report_cmd->add_subcommand("agreement", "Agreement with nearest-neighbour labels");
  std::string nearest_path;
  agreement_cmd->add_option("--preds", preds_path, "System predictions JSONL")->required();
  agreement_cmd->add_option("--nearest", nearest_path, "Nearest-example labels JSONL")->required();
  add_out(agreement_cmd);

  std::string train_path, test_path;
  const auto add_train_test = [&](CLI::App* cmd) {
    cmd->add_option("--train", train_path, "Training profiles JSONL")->required();
    cmd->add_option("--test", test_path, "Test profiles JSONL")->required();
    cmd->add_option("--cap", cap, "Pair cap");
    cmd->add_option("--seed", seed, "Downsampling seed")->capture_default_str();
    add_out(cmd);
  };
  auto* regimes_cmd =
      report_cmd->add_subcommand("regimes", "Compare pairing regimes at equal pair counts");
  add_train_test(regimes_cmd);
  auto* grid_cmd =
      report_cmd->add_subcommand("cross-sector", "Train-on-sector / test-on-sector grid CSV");
  add_train_test(grid_cmd);

  auto* ksweep_cmd = report_cmd->add_subcommand("k-sweep", "Majority vote over K neighbours");
  std::string ks_text = "1,3,5,7,9";
  ksweep_cmd->add_option("--profiles", profiles_path, "Labelled profiles JSONL")->required();
  ksweep_cmd->add_option("--labels", labels_path, "Labels JSONL (overrides stored labels)");
  ksweep_cmd->add_option("--ks", ks_text, "Comma-separated K values")->capture_default_str();
  ksweep_cmd->add_flag("--exclude-ticker", exclude_ticker,
                       "Drop each target company's own profiles");
  add_out(ksweep_cmd);

  auto* cot_cmd = report_cmd->add_subcommand("cot", "Chain-of-thought baseline");
  std::string payloads_path, kind_text = "profile";
  cot_cmd->add_option("--profiles", profiles_path, "Labelled profiles JSONL")->required();
  cot_cmd->add_option("--labels", labels_path, "Labels JSONL (overrides stored labels)");
  cot_cmd->add_option("--kind", kind_text, "transcript | summary | profile")->capture_default_str();
  cot_cmd->add_option("--payloads", payloads_path,
                      "JSONL {profile_id, text}; optional for --kind profile");
  client_flags.add_to(cot_cmd);
  add_out(cot_cmd);

  std::vector<std::string> argv_store{"define"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto schema = schema_from(schema_path);

    if (schema_cmd->parsed()) {
      if (!schema_items) {
        write_text(out_path, with_newline(schema->to_json()), io);
      } else {
        std::string text = "index,factor,outcome,polarity\n";
        for (std::size_t x = 0; x < schema->item_count(); ++x) {
          const auto id = schema->outcome_at(x);
          const auto& f = schema->factor(id.factor_index);
          text += std::to_string(x) + ",\"" + f.name + "\",\"" +
                  f.outcomes[id.outcome_index].name + "\"," +
                  std::string(to_string(schema->polarity(x))) + "\n";
        }
        write_text(out_path, text, io);
      }
    } else if (ingest_cmd->parsed()) {
      const auto entries = load_entries(load_manifest(manifest_path));
      json arr = json::array();
      for (const auto& e : entries) {
        arr.push_back({{"profile_id", e.profile_id},
                       {"ticker", e.transcript.ticker},
                       {"date", e.transcript.announcement_date.iso()},
                       {"sector", e.transcript.sector ? json(*e.transcript.sector) : json(nullptr)},
                       {"prepared_remarks", e.transcript.prepared_remarks.size()},
                       {"qa_pairs", e.transcript.qa_pairs.size()},
                       {"price_points", e.prices.points.size()},
                       {"has_financials", e.financials.has_value()}});
      }
      write_text(out_path, arr.dump(2) + "\n", io);
    } else if (label_cmd->parsed()) {
      const auto entries = load_entries(load_manifest(manifest_path));
      std::string text;
      for (const auto& e : entries) {
        const auto r = label_from_prices(e.prices, e.transcript.announcement_date, horizon);
        text += json{{"profile_id", e.profile_id},
                     {"label", std::string(to_string(r.label))},
                     {"return_pct", r.return_pct}}
                    .dump();
        text += '\n';
      }
      write_text(out_path, text, io);
    } else if (extract_cmd->parsed()) {
      const auto manifest = load_manifest(manifest_path);
      const auto entries = load_entries(manifest);
      const auto client = client_flags.make();
      std::vector<std::optional<ProfileRecord>> results(entries.size());
      parallel_for(entries.size(), client_flags.concurrency, [&](std::size_t i) {
        const auto& e = entries[i];
        auto profile = extract_profile(*client, e.transcript, e.prices,
                                       e.financials ? &*e.financials : nullptr, schema);
        results[i] = ProfileRecord{e.profile_id,        e.transcript.ticker,
                                   e.transcript.announcement_date, e.transcript.sector,
                                   manifest.entries[i].label,      std::move(profile)};
      });
      std::vector<ProfileRecord> records;
      for (auto& r : results) records.push_back(std::move(*r));
      apply_labels(records, labels_path, io);
      std::ostringstream buf;
      write_profiles(records, buf);
      write_text(out_path, buf.str(), io);
    } else if (pairs_cmd->parsed()) {
      auto records = read_profile_file(profiles_path, schema, io);
      apply_labels(records, labels_path, io);
      const auto pairs =
          preference_pairs(labeled_items(records), parse_regime(regime_text), seed, cap);
      write_text(out_path, pairs_to_jsonl(pairs), io);
    } else if (fit_cmd->parsed()) {
      auto records = read_profile_file(profiles_path, schema, io);
      apply_labels(records, labels_path, io);
      const auto regime = parse_regime(regime_text);
      const auto pairs = pairs_path.empty()
                             ? preference_pairs(labeled_items(records), regime, seed, cap)
                             : pairs_from_jsonl(read_text(pairs_path, io));
      const auto lookup = index_profiles(records);
      FitOptions<double> options;
      options.tol = tol;
      options.max_iter = max_iter;
      ComparisonMatrix w;
      Eigen::VectorXd same_item;
      if (literal_diagonal) {
        same_item = accumulate_same_item(pairs, lookup, *schema);
        w = ComparisonMatrix::Zero(same_item.size(), same_item.size());
        err << "note: --literal-diagonal places all weight on the diagonal; the fit is uniform\n";
      } else {
        w = accumulate(pairs, lookup, *schema);
      }
      auto model = fit(w, schema, options);
      model.regime = regime;
      model.seed = seed;
      auto doc = json::parse(model_to_json(model));
      doc["pairs"] = pairs.size();
      if (literal_diagonal) {
        doc["same_item_weights"] =
            std::vector<double>(same_item.data(), same_item.data() + same_item.size());
      }
      write_text(out_path, doc.dump(2) + "\n", io);
    } else if (predict_cmd->parsed()) {
      const auto model = model_from_json(read_text(model_path, io), schema);
      const auto records = read_profile_file(profiles_path, schema, io);
      const auto scores = score_all(records, model);
      LabelMap labels;
      if (!cutpoints_text.empty()) {
        const auto cut = parse_cutpoints(cutpoints_text);
        for (const auto& s : scores) labels.emplace(s.profile_id, assign_by_threshold(s.score, cut));
      } else {
        LabelCounts counts{};
        if (!counts_text.empty()) {
          counts = parse_counts(counts_text);
        } else if (!counts_from.empty()) {
          const auto ref = counts_of(read_label_file(counts_from, io));
          std::array<double, kLabelCount> props{};
          for (std::size_t c = 0; c < kLabelCount; ++c) props[c] = static_cast<double>(ref[c]);
          counts = apportion(scores.size(), props);
        } else {
          throw ConfigError("predict needs one of --counts-from, --counts or --cutpoints");
        }
        labels = assign_by_quantile(scores, counts);
      }
      write_text(out_path, predictions_jsonl(scores, labels), io);
    } else if (retrieve_cmd->parsed() || analogical_cmd->parsed()) {
      auto corpus_records = read_profile_file(corpus_path, schema, io);
      apply_labels(corpus_records, labels_path, io);
      std::vector<ProfileRecord> target_records;
      if (!target_profiles_path.empty()) {
        target_records = read_profile_file(target_profiles_path, schema, io);
      }
      const auto& pool = target_profiles_path.empty() ? corpus_records : target_records;
      const auto it = std::find_if(pool.begin(), pool.end(),
                                   [&](const ProfileRecord& r) { return r.profile_id == target_id; });
      if (it == pool.end()) throw MissingProfile("target profile '" + target_id + "' not found");
      const auto corpus = corpus_from(corpus_records);
      RetrieveOptions opt;
      opt.k = k;
      opt.target_id = target_id;
      if (exclude_ticker) opt.exclude_ticker = it->ticker;
      const auto neighbors = retrieve(it->profile, corpus, opt);
      if (retrieve_cmd->parsed()) {
        json doc{{"target", target_id},
                 {"k", k},
                 {"neighbors", json::parse(neighbors_to_json(neighbors))},
                 {"majority_vote", std::string(to_string(majority_vote(neighbors)))}};
        write_text(out_path, doc.dump(2) + "\n", io);
      } else {
        const auto client = client_flags.make();
        const auto d =
            analogical_decision(*client, it->profile, neighbors, corpus, it->ticker, it->date);
        json doc{{"profile_id", target_id},
                 {"chosen_idx", d.chosen_idx},
                 {"chosen_profile_id", d.chosen_profile_id},
                 {"label", std::string(to_string(d.label))},
                 {"justification", d.justification},
                 {"nearest_label", std::string(to_string(neighbors.front().label))},
                 {"neighbors", json::parse(neighbors_to_json(neighbors))}};
        write_text(out_path, doc.dump(2) + "\n", io);
      }
    } else if (eval_cmd->parsed()) {
      const auto preds = read_label_file(preds_path, io);
      const auto golds = read_label_file(golds_path, io);
      const auto report = evaluate(preds, golds);
      if (!confusion_csv.empty()) write_text(confusion_csv, confusion_to_csv(report.confusion), io);
      write_text(out_path, report_to_json(report) + "\n", io);
    } else if (synth_cmd->parsed()) {
      synth.planted = schema->parse_item(planted_text);
      if (!proportions.empty()) std::copy(proportions.begin(), proportions.end(), synth.proportions.begin());
      if (!grade_weights.empty()) {
        std::copy(grade_weights.begin(), grade_weights.end(), synth.grade_weights.begin());
      }
      if (!distractor_weights.empty()) {
        std::copy(distractor_weights.begin(), distractor_weights.end(),
                  synth.distractor_weights.begin());
      }
      const auto records = synth_corpus(synth, schema);
      std::ostringstream buf;
      write_profiles(records, buf);
      write_text(out_path, buf.str(), io);
    } else if (report_cmd->parsed()) {
      if (density_cmd->parsed()) {
        auto records = read_profile_file(profiles_path, schema, io);
        apply_labels(records, labels_path, io);
        write_text(out_path, density_to_csv(density_report(records)), io);
      } else if (salience_cmd->parsed()) {
        const auto model = model_from_json(read_text(model_path, io), schema);
        write_text(out_path,
                   salience_json(model, std::min<std::size_t>(top_k, schema->item_count())).dump(2) +
                       "\n",
                   io);
      } else if (confusion_cmd->parsed()) {
        write_text(out_path,
                   confusion_to_csv(confusion(read_label_file(preds_path, io),
                                              read_label_file(golds_path, io))),
                   io);
      } else if (agreement_cmd->parsed()) {
        const auto report = agreement_analysis(read_label_file(preds_path, io),
                                               read_label_file(nearest_path, io));
        write_text(out_path, agreement_to_json(report) + "\n", io);
      } else if (regimes_cmd->parsed() || grid_cmd->parsed()) {
        const auto train = read_profile_file(train_path, schema, io);
        const auto test = read_profile_file(test_path, schema, io);
        if (regimes_cmd->parsed()) {
          json arr = json::array();
          for (const auto& r : run_regimes(train, test, seed, cap, schema)) {
            arr.push_back({{"regime", std::string(to_string(r.regime))},
                           {"candidate_pairs", r.candidate_pairs},
                           {"pairs_used", r.result.pair_count},
                           {"report", json::parse(report_to_json(r.result.report))},
                           {"top_items", salience_json(r.result.model, 5)}});
          }
          write_text(out_path, arr.dump(2) + "\n", io);
        } else {
          write_text(out_path, sector_grid_to_csv(cross_sector_grid(train, test, seed, cap, schema)),
                     io);
        }
      } else if (ksweep_cmd->parsed()) {
        auto records = read_profile_file(profiles_path, schema, io);
        apply_labels(records, labels_path, io);
        const auto ks = parse_ks(ks_text);
        json arr = json::array();
        for (const auto& pt : k_sweep(records, ks, exclude_ticker)) {
          arr.push_back({{"k", pt.k},
                         {"macro_f1", pt.report.macro_f1},
                         {"accuracy", pt.report.accuracy}});
        }
        write_text(out_path, arr.dump(2) + "\n", io);
      } else if (cot_cmd->parsed()) {
        auto records = read_profile_file(profiles_path, schema, io);
        apply_labels(records, labels_path, io);
        const auto kind_token = normalize_token(kind_text);
        CotPayload kind;
        if (kind_token == "transcript") {
          kind = CotPayload::transcript;
        } else if (kind_token == "summary") {
          kind = CotPayload::summary;
        } else if (kind_token == "profile" || kind_token == "factor profile") {
          kind = CotPayload::factor_profile;
        } else {
          throw ConfigError("unknown --kind '" + kind_text + "'");
        }
        std::map<std::string, std::string> payloads;
        if (!payloads_path.empty()) {
          std::istringstream lines(read_text(payloads_path, io));
          std::string line;
          while (std::getline(lines, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const auto doc = json::parse(line, nullptr, false);
            if (doc.is_discarded() || !doc.contains("profile_id") || !doc.contains("text")) {
              throw ParseError(payloads_path + ": lines need 'profile_id' and 'text'");
            }
            payloads[doc["profile_id"].get<std::string>()] = doc["text"].get<std::string>();
          }
        } else if (kind == CotPayload::factor_profile) {
          for (const auto& r : records) payloads[r.profile_id] = render_profile(r.profile);
        } else {
          throw ConfigError("--kind " + kind_text + " needs --payloads");
        }
        const auto client = client_flags.make();
        const auto run = run_cot_baseline(*client, kind, records, payloads);
        write_text(out_path, report_to_json(run.report) + "\n", io);
      }
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace define::cli
