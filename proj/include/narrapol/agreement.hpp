// Copyright 2026 The Narrapol Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Inter-annotator agreement on categorical labels: nominal Krippendorff's
// alpha and single-label F1 scores, and the per-actant report combining them.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "narrapol/corpus.hpp"
#include "narrapol/error.hpp"
#include "narrapol/model.hpp"

namespace narrapol {

using Label = std::optional<std::string>;

// units x coders; nullopt marks a missing coding.
struct AgreementTable {
  std::vector<std::string> unit_ids;
  std::vector<std::string> coders;
  std::vector<std::vector<Label>> labels;  // labels[unit][coder]
};

struct AlphaResult {
  double alpha = 1.0;
  // Every pairable value falls in one category, so expected disagreement is
  // zero and alpha is undefined; reported as 1.
  bool degenerate = false;
  std::size_t pairable_units = 0;
  double pairable_values = 0.0;
};

// Nominal alpha via the coincidence matrix. Units with fewer than two
// codings are not pairable and are ignored.
inline AlphaResult krippendorff_alpha(const AgreementTable& table) {
  if (table.coders.size() < 2) throw DataContractError("alpha: need at least two coders");
  std::map<std::string, std::map<std::string, double>> coincidence;
  AlphaResult out;
  for (const auto& row : table.labels) {
    std::vector<std::string> values;
    for (const auto& label : row) {
      if (label) values.push_back(*label);
    }
    if (values.size() < 2) continue;
    ++out.pairable_units;
    const double weight = 1.0 / static_cast<double>(values.size() - 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (std::size_t j = 0; j < values.size(); ++j) {
        if (i != j) coincidence[values[i]][values[j]] += weight;
      }
    }
  }
  if (out.pairable_units < 2) throw DataContractError("alpha: need at least two pairable units");

  std::map<std::string, double> marginal;
  double n = 0.0, disagree = 0.0;
  for (const auto& [c, row] : coincidence) {
    for (const auto& [k, o] : row) {
      marginal[c] += o;
      n += o;
      if (c != k) disagree += o;
    }
  }
  out.pairable_values = n;
  double expected = 0.0;
  for (const auto& [c, nc] : marginal) {
    for (const auto& [k, nk] : marginal) {
      if (c != k) expected += nc * nk;
    }
  }
  if (expected == 0.0) {
    out.degenerate = true;
    out.alpha = 1.0;
    return out;
  }
  out.alpha = 1.0 - (n - 1.0) * disagree / expected;
  return out;
}

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
  double weighted = 0.0;
  std::size_t n = 0;
};

// Single-label F1 of `predicted` against `reference`. Pairs where either
// side is missing are dropped. Macro averages over every class seen on either
// side; weighted uses reference support. Zero denominators give 0.
inline F1Scores f1_scores(const std::vector<Label>& reference, const std::vector<Label>& predicted) {
  if (reference.size() != predicted.size()) {
    throw DataContractError("f1: reference and predicted lengths differ");
  }
  struct Tally {
    double tp = 0, fp = 0, fn = 0, support = 0;
  };
  std::map<std::string, Tally> classes;
  F1Scores out;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (!reference[i] || !predicted[i]) continue;
    ++out.n;
    auto& truth = classes[*reference[i]];
    auto& guess = classes[*predicted[i]];
    truth.support += 1;
    if (*reference[i] == *predicted[i]) {
      truth.tp += 1;
    } else {
      truth.fn += 1;
      guess.fp += 1;
    }
  }
  if (out.n == 0) throw EmptySliceError("f1: no units labelled by both sides");
  // Harmonic mean of precision and recall, as 2tp / (2tp + fp + fn).
  auto f1 = [](double tp, double fp, double fn) { return tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0; };
  double tp = 0, fp = 0, fn = 0, macro = 0, weighted = 0, support = 0;
  for (const auto& [label, t] : classes) {
    tp += t.tp;
    fp += t.fp;
    fn += t.fn;
    const double score = f1(t.tp, t.fp, t.fn);
    macro += score;
    weighted += score * t.support;
    support += t.support;
  }
  out.micro = f1(tp, fp, fn);
  out.macro = macro / static_cast<double>(classes.size());
  out.weighted = support > 0 ? weighted / support : 0.0;
  return out;
}

struct AgreementRow {
  std::string actant;
  double f1_micro = 0.0;
  double f1_weighted = 0.0;
  double f1_macro = 0.0;
  double alpha = 0.0;
  bool alpha_degenerate = false;
  std::size_t coder_pairs = 0;
};

struct AgreementReport {
  std::vector<AgreementRow> rows;
  std::optional<AgreementRow> average;  // mean over reported actants
  std::vector<std::string> warnings;
};

// Roles that enter the agreement report; Helper is left out.
inline constexpr std::array<ActantRole, 5> kAgreementRoles = {
    ActantRole::Subject, ActantRole::Object, ActantRole::Sender, ActantRole::Receiver,
    ActantRole::Opponent};

// Aligns coder corpora on document id (union of ids); a coder without a
// document, or without a frame for it, contributes missing labels.
inline std::map<ActantRole, AgreementTable> build_agreement_tables(
    const std::vector<std::pair<std::string, Corpus>>& coders) {
  if (coders.size() < 2) throw ConfigError("agreement: need at least two coder files");
  std::set<std::string> ids;
  std::vector<std::map<std::string, const Document*>> index(coders.size());
  for (std::size_t c = 0; c < coders.size(); ++c) {
    for (const auto& doc : coders[c].second) {
      ids.insert(doc.id);
      index[c][doc.id] = &doc;
    }
  }
  std::map<ActantRole, AgreementTable> tables;
  for (ActantRole role : kAllRoles) {
    auto& table = tables[role];
    table.unit_ids.assign(ids.begin(), ids.end());
    for (const auto& [name, corpus] : coders) table.coders.push_back(name);
    for (const auto& id : table.unit_ids) {
      auto& row = table.labels.emplace_back();
      for (std::size_t c = 0; c < coders.size(); ++c) {
        auto it = index[c].find(id);
        if (it == index[c].end() || !it->second->frame) {
          row.emplace_back();
        } else {
          row.push_back(it->second->frame->slot(role));
        }
      }
    }
  }
  return tables;
}

// Per-actant alpha plus F1 averaged over ordered coder pairs (each coder
// taken in turn as the reference).
inline AgreementReport agreement_report(const std::map<ActantRole, AgreementTable>& tables) {
  AgreementReport report;
  for (ActantRole role : kAgreementRoles) {
    auto it = tables.find(role);
    if (it == tables.end()) continue;
    const auto& table = it->second;
    const std::string actant(role_name(role));
    const std::size_t n_coders = table.coders.size();
    if (n_coders < 2) throw ConfigError("agreement: need at least two coders");

    bool empty_column = false;
    for (std::size_t c = 0; c < n_coders; ++c) {
      bool any = std::any_of(table.labels.begin(), table.labels.end(),
                             [c](const auto& row) { return row[c].has_value(); });
      if (!any) {
        report.warnings.push_back(actant + ": coder '" + table.coders[c] + "' has no labels; actant skipped");
        empty_column = true;
      }
    }
    if (empty_column) continue;

    AgreementRow row;
    row.actant = actant;
    for (std::size_t a = 0; a < n_coders; ++a) {
      for (std::size_t b = 0; b < n_coders; ++b) {
        if (a == b) continue;
        std::vector<Label> ref, pred;
        for (const auto& units : table.labels) {
          ref.push_back(units[a]);
          pred.push_back(units[b]);
        }
        try {
          auto s = f1_scores(ref, pred);
          row.f1_micro += s.micro;
          row.f1_weighted += s.weighted;
          row.f1_macro += s.macro;
          ++row.coder_pairs;
        } catch (const EmptySliceError&) {
          report.warnings.push_back(actant + ": coders '" + table.coders[a] + "' and '" + table.coders[b] +
                                    "' share no labelled units");
        }
      }
    }
    if (row.coder_pairs == 0) continue;
    const double pairs = static_cast<double>(row.coder_pairs);
    row.f1_micro /= pairs;
    row.f1_weighted /= pairs;
    row.f1_macro /= pairs;
    try {
      auto alpha = krippendorff_alpha(table);
      row.alpha = alpha.alpha;
      row.alpha_degenerate = alpha.degenerate;
    } catch (const DataContractError& e) {
      report.warnings.push_back(actant + ": " + e.what() + "; actant skipped");
      continue;
    }
    report.rows.push_back(row);
  }
  if (!report.rows.empty()) {
    AgreementRow avg;
    avg.actant = "average";
    for (const auto& r : report.rows) {
      avg.f1_micro += r.f1_micro;
      avg.f1_weighted += r.f1_weighted;
      avg.f1_macro += r.f1_macro;
      avg.alpha += r.alpha;
    }
    const double n = static_cast<double>(report.rows.size());
    avg.f1_micro /= n;
    avg.f1_weighted /= n;
    avg.f1_macro /= n;
    avg.alpha /= n;
    report.average = avg;
  }
  return report;
}

}  // namespace narrapol
