#include <cstdio>
#include <sstream>

#include "define/errors.hpp"
#include "define/evalx.hpp"
#include "json.hpp"

namespace define {

using nlohmann::json;

namespace {

void require_same_ids(const LabelMap& a, const LabelMap& b, const char* what) {
  if (a.size() == b.size()) {
    bool same = true;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
      if (ia->first != ib->first) {
        same = false;
        break;
      }
    }
    if (same) return;
  }
  for (const auto& [id, l] : a) {
    if (!b.count(id)) throw IdMismatch(std::string(what) + ": id '" + id + "' has no counterpart");
  }
  for (const auto& [id, l] : b) {
    if (!a.count(id)) throw IdMismatch(std::string(what) + ": id '" + id + "' has no counterpart");
  }
}

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

json per_class_json(const PerClass& v) {
  json out = json::object();
  for (auto l : kAllLabels) out[std::string(to_string(l))] = v[label_index(l)];
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

ConfusionMatrix confusion(const LabelMap& preds, const LabelMap& golds) {
  require_same_ids(preds, golds, "confusion");
  ConfusionMatrix m = ConfusionMatrix::Zero();
  for (const auto& [id, gold] : golds) {
    m(static_cast<Eigen::Index>(label_index(gold)),
      static_cast<Eigen::Index>(label_index(preds.at(id))))++;
  }
  return m;
}

EvalReport evaluate(const LabelMap& preds, const LabelMap& golds) {
  EvalReport r;
  r.confusion = confusion(preds, golds);
  r.n = golds.size();
  const auto gold_totals = r.confusion.rowwise().sum();
  const auto pred_totals = r.confusion.colwise().sum();
  r.accuracy = ratio(static_cast<double>(r.confusion.trace()), static_cast<double>(r.n));

  std::size_t present = 0;
  for (Eigen::Index c = 0; c < 5; ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double tp = static_cast<double>(r.confusion(c, c));
    r.support[i] = static_cast<std::size_t>(gold_totals[c]);
    r.precision[i] = ratio(tp, static_cast<double>(pred_totals[c]));
    r.recall[i] = ratio(tp, static_cast<double>(gold_totals[c]));
    r.f1[i] = ratio(2.0 * r.precision[i] * r.recall[i], r.precision[i] + r.recall[i]);
    if (gold_totals[c] + pred_totals[c] == 0) continue;
    ++present;
    r.macro_precision += r.precision[i];
    r.macro_recall += r.recall[i];
    r.macro_f1 += r.f1[i];
  }
  if (present > 0) {
    r.macro_precision /= static_cast<double>(present);
    r.macro_recall /= static_cast<double>(present);
    r.macro_f1 /= static_cast<double>(present);
  }
  return r;
}

std::string report_to_json(const EvalReport& r) {
  json cm = json::array();
  for (Eigen::Index g = 0; g < 5; ++g) {
    json row = json::array();
    for (Eigen::Index p = 0; p < 5; ++p) row.push_back(r.confusion(g, p));
    cm.push_back(row);
  }
  json support = json::object();
  for (auto l : kAllLabels) support[std::string(to_string(l))] = r.support[label_index(l)];
  json labels = json::array();
  for (auto l : kAllLabels) labels.push_back(std::string(to_string(l)));
  json doc{{"n", r.n},
           {"accuracy", r.accuracy},
           {"macro_precision", r.macro_precision},
           {"macro_recall", r.macro_recall},
           {"macro_f1", r.macro_f1},
           {"precision", per_class_json(r.precision)},
           {"recall", per_class_json(r.recall)},
           {"f1", per_class_json(r.f1)},
           {"support", support},
           {"labels", labels},
           {"confusion", cm}};
  return doc.dump(2);
}

std::string confusion_to_csv(const ConfusionMatrix& m) {
  std::ostringstream out;
  out << "gold";
  for (auto l : kAllLabels) out << ',' << to_string(l);
  out << '\n';
  for (auto g : kAllLabels) {
    out << to_string(g);
    for (auto p : kAllLabels) {
      out << ',' << m(static_cast<Eigen::Index>(label_index(g)),
                      static_cast<Eigen::Index>(label_index(p)));
    }
    out << '\n';
  }
  return out.str();
}

double random_baseline_macro_f1(const LabelCounts& gold_counts) {
  double n = 0;
  for (auto c : gold_counts) n += static_cast<double>(c);
  if (n == 0) return 0.0;
  // A uniform guesser predicts every class, so all five enter the macro mean.
  constexpr double q = 1.0 / kLabelCount;
  double sum = 0.0;
  for (auto c : gold_counts) {
    const double pi = static_cast<double>(c) / n;
    sum += ratio(2.0 * q * pi, q + pi);
  }
  return sum / kLabelCount;
}

AgreementReport agreement_analysis(const LabelMap& system_preds, const LabelMap& nearest_labels) {
  require_same_ids(system_preds, nearest_labels, "agreement");
  AgreementReport r;
  for (const auto& [id, nearest] : nearest_labels) {
    r.counts(static_cast<Eigen::Index>(label_index(nearest)),
             static_cast<Eigen::Index>(label_index(system_preds.at(id))))++;
  }
  r.n = nearest_labels.size();
  r.agreement_rate = ratio(static_cast<double>(r.counts.trace()), static_cast<double>(r.n));
  for (Eigen::Index row = 0; row < 5; ++row) {
    const auto total = r.counts.row(row).sum();
    if (total > 0) {
      r.conditional.row(row) = r.counts.row(row).cast<double>() / static_cast<double>(total);
    }
  }
  return r;
}

std::string agreement_to_json(const AgreementReport& r) {
  json table = json::object();
  for (auto nearest : kAllLabels) {
    json row = json::object();
    for (auto pred : kAllLabels) {
      row[std::string(to_string(pred))] =
          r.conditional(static_cast<Eigen::Index>(label_index(nearest)),
                        static_cast<Eigen::Index>(label_index(pred)));
    }
    table[std::string(to_string(nearest))] = row;
  }
  return json{{"n", r.n}, {"agreement_rate", r.agreement_rate}, {"conditional", table}}.dump(2);
}

DensityReport density_report(std::span<const ProfileRecord> records) {
  DensityReport out;
  for (const auto& rec : records) {
    if (!rec.label) continue;
    const auto& s = rec.profile.schema();
    double pos = 0, neg = 0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t x = 0; x < s.item_count(); ++x) {
      const double p = rec.profile.flat()[static_cast<Eigen::Index>(x)];
      switch (s.polarity(x)) {
        case Polarity::positive: pos += p; ++n_pos; break;
        case Polarity::negative: neg += p; ++n_neg; break;
        case Polarity::neutral_uncertain: break;
      }
    }
    out[label_index(*rec.label)].push_back(
        {rec.profile_id, ratio(pos, static_cast<double>(n_pos)), ratio(neg, static_cast<double>(n_neg))});
  }
  return out;
}

std::string density_to_csv(const DensityReport& report) {
  std::ostringstream out;
  out << "label,profile_id,positive_mass,negative_mass\n";
  for (auto l : kAllLabels) {
    for (const auto& pt : report[label_index(l)]) {
      out << to_string(l) << ',' << pt.profile_id << ',' << format_double(pt.positive_mass) << ','
          << format_double(pt.negative_mass) << '\n';
    }
  }
  return out.str();
}

}  // namespace define
