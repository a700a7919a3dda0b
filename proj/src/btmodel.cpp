#include "define/btmodel.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "define/errors.hpp"
#include "define/random.hpp"
#include "json.hpp"

namespace define {

using nlohmann::json;

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::same_sector: return "same-sector";
    case Regime::cross_sector: return "cross-sector";
    case Regime::same_company: return "same-company";
  }
  return "?";
}

Regime parse_regime(std::string_view text) {
  const auto t = normalize_token(text);
  if (t == "same sector") return Regime::same_sector;
  if (t == "cross sector") return Regime::cross_sector;
  if (t == "same company") return Regime::same_company;
  throw ConfigError("unknown regime '" + std::string(text) +
                    "' (expected same-sector, cross-sector or same-company)");
}

std::vector<LabeledItem> labeled_items(std::span<const ProfileRecord> records) {
  std::vector<LabeledItem> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.label) continue;
    out.push_back({r.profile_id, *r.label, r.sector, r.ticker});
  }
  return out;
}

bool outranks(DecisionLabel a, DecisionLabel b) {
  using L = DecisionLabel;
  switch (a) {
    case L::strong_buy: return b == L::hold || b == L::sell || b == L::strong_sell;
    case L::buy: return b == L::sell || b == L::strong_sell;
    case L::hold: return b == L::strong_sell;
    default: return false;
  }
}

bool regime_admits(Regime regime, const LabeledItem& a, const LabeledItem& b) {
  switch (regime) {
    case Regime::same_sector:
      return a.sector && b.sector && normalize_token(*a.sector) == normalize_token(*b.sector);
    case Regime::cross_sector:
      return a.sector && b.sector && normalize_token(*a.sector) != normalize_token(*b.sector);
    case Regime::same_company:
      return !a.ticker.empty() && a.ticker == b.ticker;
  }
  return false;
}

std::vector<PreferencePair> preference_pairs(std::span<const LabeledItem> items, Regime regime,
                                             std::uint64_t seed, std::optional<std::size_t> cap) {
  std::vector<PreferencePair> pairs;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const auto& a = items[i];
      const auto& b = items[j];
      if (!regime_admits(regime, a, b)) continue;
      if (outranks(a.label, b.label)) {
        pairs.push_back({a.profile_id, b.profile_id, regime});
      } else if (outranks(b.label, a.label)) {
        pairs.push_back({b.profile_id, a.profile_id, regime});
      }
    }
  }
  if (cap && pairs.size() > *cap) {
    Rng rng(seed);
    std::vector<PreferencePair> kept;
    kept.reserve(*cap);
    for (auto idx : rng.sample_indices(pairs.size(), *cap)) kept.push_back(std::move(pairs[idx]));
    pairs = std::move(kept);
  }
  return pairs;
}

ProfileLookup index_profiles(std::span<const ProfileRecord> records) {
  ProfileLookup out;
  for (const auto& r : records) out.emplace(r.profile_id, &r.profile);
  return out;
}

namespace {

const FactorProfile& lookup(const ProfileLookup& profiles, const std::string& id,
                            const FactorSchema& schema) {
  const auto it = profiles.find(id);
  if (it == profiles.end() || it->second == nullptr) {
    throw MissingProfile("no profile for id '" + id + "'");
  }
  require_same_schema(it->second->schema(), schema);
  return *it->second;
}

// Row k of `winners` / `losers` holds the flat probabilities of pair k.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> pair_rows(std::span<const PreferencePair> pairs,
                                                      const ProfileLookup& profiles,
                                                      const FactorSchema& schema) {
  const auto m = static_cast<Eigen::Index>(schema.item_count());
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd winners(n, m);
  Eigen::MatrixXd losers(n, m);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& pair = pairs[static_cast<std::size_t>(k)];
    winners.row(k) = lookup(profiles, pair.winner_profile_id, schema).flat().transpose();
    losers.row(k) = lookup(profiles, pair.loser_profile_id, schema).flat().transpose();
  }
  return {std::move(winners), std::move(losers)};
}

}  // namespace

ComparisonMatrix accumulate(std::span<const PreferencePair> pairs, const ProfileLookup& profiles,
                            const FactorSchema& schema) {
  const auto [winners, losers] = pair_rows(pairs, profiles, schema);
  ComparisonMatrix w = winners.transpose() * losers;
  w.diagonal().setZero();
  return w;
}

Eigen::VectorXd accumulate_same_item(std::span<const PreferencePair> pairs,
                                     const ProfileLookup& profiles, const FactorSchema& schema) {
  const auto [winners, losers] = pair_rows(pairs, profiles, schema);
  return winners.cwiseProduct(losers).colwise().sum().transpose();
}

SalienceModel fit(const ComparisonMatrix& matrix, SchemaPtr schema,
                  const FitOptions<double>& options) {
  if (static_cast<std::size_t>(matrix.rows()) != schema->item_count()) {
    throw SchemaMismatch("comparison matrix has " + std::to_string(matrix.rows()) +
                         " items, schema has " + std::to_string(schema->item_count()));
  }
  const auto result = fit_strengths(matrix, options);
  SalienceModel model;
  model.schema = std::move(schema);
  model.p = result.p;
  model.iterations = result.iterations;
  model.max_change = result.max_change;
  model.tol = options.tol;
  return model;
}

double pairwise_prob(const SalienceModel& model, OutcomeId x, OutcomeId y) {
  const auto& s = *model.schema;
  const auto ix = static_cast<Eigen::Index>(s.flat_index(x));
  const auto iy = static_cast<Eigen::Index>(s.flat_index(y));
  if (ix == iy) throw PreconditionError("pairwise_prob needs two distinct items");
  return win_probability(model.p, ix, iy);
}

std::vector<std::pair<OutcomeId, double>> top_factors(const SalienceModel& model, std::size_t k) {
  const auto m = static_cast<std::size_t>(model.p.size());
  if (k < 1 || k > m) {
    throw PreconditionError("k must be in [1, " + std::to_string(m) + "], got " +
                            std::to_string(k));
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return model.p[static_cast<Eigen::Index>(a)] > model.p[static_cast<Eigen::Index>(b)];
  });
  std::vector<std::pair<OutcomeId, double>> out;
  for (std::size_t r = 0; r < k; ++r) {
    out.emplace_back(model.schema->outcome_at(order[r]),
                     model.p[static_cast<Eigen::Index>(order[r])]);
  }
  return out;
}

std::string model_to_json(const SalienceModel& model) {
  json doc;
  doc["schema_hash"] = model.schema->hash();
  doc["p"] = std::vector<double>(model.p.data(), model.p.data() + model.p.size());
  doc["iterations"] = model.iterations;
  doc["tol"] = model.tol;
  doc["max_change"] = model.max_change;
  doc["regime"] = model.regime ? json(std::string(to_string(*model.regime))) : json(nullptr);
  doc["seed"] = model.seed ? json(*model.seed) : json(nullptr);
  return doc.dump(2);
}

SalienceModel model_from_json(std::string_view text, SchemaPtr schema) {
  const auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ParseError("model file is not a JSON object");
  try {
    if (doc.at("schema_hash").get<std::string>() != schema->hash()) {
      throw SchemaMismatch("model was fitted on a different schema (hash " +
                           doc.at("schema_hash").get<std::string>() + ")");
    }
    const auto p = doc.at("p").get<std::vector<double>>();
    if (p.size() != schema->item_count()) {
      throw SchemaMismatch("model has " + std::to_string(p.size()) + " saliences, schema has " +
                           std::to_string(schema->item_count()) + " items");
    }
    SalienceModel model;
    model.schema = std::move(schema);
    model.p = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    if ((model.p.array() <= 0.0).any() || std::abs(model.p.sum() - 1.0) > 1e-9) {
      throw ValidationError("model saliences must be positive and sum to 1");
    }
    model.iterations = doc.value("iterations", 0);
    model.tol = doc.value("tol", 0.0);
    model.max_change = doc.value("max_change", 0.0);
    if (doc.contains("regime") && doc["regime"].is_string()) {
      model.regime = parse_regime(doc["regime"].get<std::string>());
    }
    if (doc.contains("seed") && doc["seed"].is_number_integer()) {
      model.seed = doc["seed"].get<std::uint64_t>();
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

void save_model(const SalienceModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write model file '" + path + "'");
  out << model_to_json(model) << '\n';
}

SalienceModel load_model(const std::string& path, SchemaPtr schema) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot read model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str(), std::move(schema));
}

std::string pairs_to_jsonl(std::span<const PreferencePair> pairs) {
  std::string out;
  for (const auto& p : pairs) {
    json line{{"winner", p.winner_profile_id},
              {"loser", p.loser_profile_id},
              {"regime", std::string(to_string(p.regime))}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<PreferencePair> pairs_from_jsonl(std::string_view text) {
  std::vector<PreferencePair> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw ParseError("pairs line " + std::to_string(line_no) + " is not a JSON object");
    }
    try {
      out.push_back({doc.at("winner").get<std::string>(), doc.at("loser").get<std::string>(),
                     parse_regime(doc.at("regime").get<std::string>())});
    } catch (const json::exception& e) {
      throw ParseError("pairs line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace define
