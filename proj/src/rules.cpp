#include "carmine/rules.hpp"

#include "carmine/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace carmine {

int ItemDictionary::add(std::string attribute, std::string category, bool class_item) {
  const auto key = std::make_pair(attribute, category);
  const auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(items_.size());
  index_.emplace(key, id);
  items_.push_back({std::move(attribute), std::move(category)});
  class_flag_.push_back(class_item);
  if (class_item) class_items_.push_back(id);
  return id;
}

std::optional<int> ItemDictionary::find(const std::string& attribute,
                                        const std::string& category) const {
  const auto it = index_.find(std::make_pair(attribute, category));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string ItemDictionary::display(int id) const {
  return items_[static_cast<std::size_t>(id)].attribute + " = " +
         items_[static_cast<std::size_t>(id)].category;
}

TransactionSet::TransactionSet(ItemDictionary dictionary, std::vector<Transaction> observations)
    : dictionary_(std::move(dictionary)), observations_(std::move(observations)) {
  tidlists_.resize(static_cast<std::size_t>(dictionary_.size()));
  for (std::size_t t = 0; t < observations_.size(); ++t) {
    const Transaction& obs = observations_[t];
    std::set<std::string> attributes;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const int id = obs[i];
      if (id < 0 || id >= dictionary_.size())
        throw Error("transactions: item id out of range");
      if (i > 0 && !(obs[i - 1] < id))
        throw Error("transactions: items must be sorted and distinct");
      if (!attributes.insert(dictionary_.item(id).attribute).second)
        throw Error("transactions: two items of attribute '" + dictionary_.item(id).attribute +
                    "' in one observation");
      tidlists_[static_cast<std::size_t>(id)].push_back(static_cast<std::uint32_t>(t));
    }
  }
}

std::int64_t TransactionSet::support_count(const std::vector<int>& itemset) const {
  if (itemset.empty()) return size();
  for (const int id : itemset) {
    if (id < 0 || id >= dictionary_.size()) throw Error("support_count: item id out of range");
  }
  // Intersect tidlists, smallest first.
  std::vector<const std::vector<std::uint32_t>*> lists;
  lists.reserve(itemset.size());
  for (const int id : itemset) lists.push_back(&tidlists_[static_cast<std::size_t>(id)]);
  std::sort(lists.begin(), lists.end(),
            [](const auto* a, const auto* b) { return a->size() < b->size(); });

  std::vector<std::uint32_t> acc = *lists[0];
  std::vector<std::uint32_t> next;
  for (std::size_t i = 1; i < lists.size() && !acc.empty(); ++i) {
    next.clear();
    std::set_intersection(acc.begin(), acc.end(), lists[i]->begin(), lists[i]->end(),
                          std::back_inserter(next));
    acc.swap(next);
  }
  return static_cast<std::int64_t>(acc.size());
}

EncodeResult encode_transactions(const CategoricalTable& table,
                                 const std::string& class_attribute) {
  if (table.row_count() == 0) throw Error("encode: empty table");
  const Eigen::Index class_col = table.require_column(class_attribute);

  std::vector<Eigen::Index> retained;
  std::vector<std::string> excluded;
  for (Eigen::Index r = 0; r < table.row_count(); ++r) {
    if (table.code(r, class_col) >= 0) retained.push_back(r);
    else excluded.push_back(table.row_ids()[r]);
  }
  if (retained.empty()) throw Error("encode: no rows carry a '" + class_attribute + "' label");

  // Observed pairs only, ids in column order then ordinal label order.
  ItemDictionary dict;
  std::vector<std::vector<int>> cell_ids(static_cast<std::size_t>(table.column_count()));
  for (Eigen::Index c = 0; c < table.column_count(); ++c) {
    const CatColumn& column = table.columns()[static_cast<std::size_t>(c)];
    std::vector<int> label_count(column.labels.size(), 0);
    for (const auto r : retained) {
      const int code = table.code(r, c);
      if (code >= 0) ++label_count[static_cast<std::size_t>(code)];
    }
    auto& ids = cell_ids[static_cast<std::size_t>(c)];
    ids.assign(column.labels.size(), -1);
    for (std::size_t l = 0; l < column.labels.size(); ++l) {
      if (label_count[l] > 0) {
        ids[l] = dict.add(column.name, column.labels[l], c == class_col);
      }
    }
  }

  std::vector<Transaction> observations;
  observations.reserve(retained.size());
  for (const auto r : retained) {
    Transaction obs;
    for (Eigen::Index c = 0; c < table.column_count(); ++c) {
      const int code = table.code(r, c);
      if (code >= 0) obs.push_back(cell_ids[static_cast<std::size_t>(c)][static_cast<std::size_t>(code)]);
    }
    std::sort(obs.begin(), obs.end());
    observations.push_back(std::move(obs));
  }
  return {TransactionSet(std::move(dict), std::move(observations)), std::move(excluded)};
}

std::vector<FrequentItemset> apriori_frequent(const TransactionSet& ts, double min_support,
                                              int max_size) {
  if (!(min_support > 0.0 && min_support <= 1.0))
    throw Error("apriori: min_support must lie in (0, 1]");
  if (max_size < 1) throw Error("apriori: max_size must be positive");
  const std::int64_t n = ts.size();

  struct Entry {
    std::vector<int> items;
    std::vector<std::uint32_t> tids;
  };

  std::vector<FrequentItemset> out;
  std::vector<Entry> level;
  for (int id = 0; id < ts.dictionary().size(); ++id) {
    if (meets_support(ts.item_count(id), n, min_support)) {
      level.push_back({{id}, ts.tidlist(id)});
    }
  }

  for (int size = 1; !level.empty(); ++size) {
    for (const auto& e : level) {
      out.push_back({e.items, static_cast<std::int64_t>(e.tids.size())});
    }
    if (size == max_size) break;

    std::set<std::vector<int>> current;
    for (const auto& e : level) current.insert(e.items);

    std::vector<Entry> next;
    for (std::size_t i = 0; i < level.size(); ++i) {
      for (std::size_t j = i + 1; j < level.size(); ++j) {
        const auto& a = level[i].items;
        const auto& b = level[j].items;
        if (!std::equal(a.begin(), a.end() - 1, b.begin())) break;  // sorted level: prefix run ended
        // One item per attribute in any observation, so mixed-attribute pairs
        // are the only candidates that can be frequent.
        if (ts.dictionary().item(a.back()).attribute == ts.dictionary().item(b.back()).attribute)
          continue;

        std::vector<int> candidate = a;
        candidate.push_back(b.back());

        bool closed = true;  // downward closure over the (size)-subsets
        if (size >= 2) {
          std::vector<int> subset(candidate.size() - 1);
          for (std::size_t drop = 0; drop + 2 < candidate.size() && closed; ++drop) {
            std::size_t k = 0;
            for (std::size_t m = 0; m < candidate.size(); ++m) {
              if (m != drop) subset[k++] = candidate[m];
            }
            closed = current.count(subset) > 0;
          }
        }
        if (!closed) continue;

        std::vector<std::uint32_t> tids;
        std::set_intersection(level[i].tids.begin(), level[i].tids.end(), level[j].tids.begin(),
                              level[j].tids.end(), std::back_inserter(tids));
        if (meets_support(static_cast<std::int64_t>(tids.size()), n, min_support)) {
          next.push_back({std::move(candidate), std::move(tids)});
        }
      }
    }
    level.swap(next);
  }

  std::sort(out.begin(), out.end(), [](const FrequentItemset& a, const FrequentItemset& b) {
    if (a.items.size() != b.items.size()) return a.items.size() < b.items.size();
    return a.items < b.items;
  });
  return out;
}

ClassRule make_rule(const TransactionSet& ts, std::vector<int> antecedent, int consequent) {
  std::sort(antecedent.begin(), antecedent.end());
  std::vector<int> full = antecedent;
  full.push_back(consequent);
  std::sort(full.begin(), full.end());

  const std::int64_t n = ts.size();
  const std::int64_t sigma_xy = ts.support_count(full);
  const std::int64_t sigma_x = ts.support_count(antecedent);
  const std::int64_t sigma_y = ts.item_count(consequent);

  ClassRule rule;
  rule.antecedent = std::move(antecedent);
  rule.consequent = consequent;
  rule.support_count = sigma_xy;
  rule.support = static_cast<double>(sigma_xy) / static_cast<double>(n);
  rule.confidence =
      sigma_x > 0 ? static_cast<double>(sigma_xy) / static_cast<double>(sigma_x) : 0.0;
  // Integer products keep exact independence at lift == 1.0 exactly.
  rule.lift = (sigma_x > 0 && sigma_y > 0)
                  ? static_cast<double>(sigma_xy * n) / static_cast<double>(sigma_x * sigma_y)
                  : 0.0;
  return rule;
}

void sort_rules(std::vector<ClassRule>& rules) {
  std::sort(rules.begin(), rules.end(), [](const ClassRule& a, const ClassRule& b) {
    if (a.lift != b.lift) return a.lift > b.lift;
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.support != b.support) return a.support > b.support;
    if (a.antecedent != b.antecedent) return a.antecedent < b.antecedent;
    return a.consequent < b.consequent;
  });
}

MiningResult generate_cars(const TransactionSet& ts, const MiningParams& params) {
  if (params.consequent_attribute.empty()) throw Error("mining: no consequent attribute");
  if (params.min_len < 2 || params.max_len < params.min_len)
    throw Error("mining: need 2 <= min_len <= max_len");
  if (!(params.min_confidence >= 0.0 && params.min_confidence <= 1.0))
    throw Error("mining: min_confidence must lie in [0, 1]");

  MiningResult result;
  const ItemDictionary& dict = ts.dictionary();

  std::set<int> targets;
  for (int id = 0; id < dict.size(); ++id) {
    if (dict.item(id).attribute != params.consequent_attribute) continue;
    if (params.target_classes.empty() ||
        std::find(params.target_classes.begin(), params.target_classes.end(),
                  dict.item(id).category) != params.target_classes.end()) {
      targets.insert(id);
    }
  }
  for (const auto& category : params.target_classes) {
    if (!dict.find(params.consequent_attribute, category)) {
      result.warnings.push_back("consequent " + params.consequent_attribute + "=" + category +
                                " has zero support; no rules for it");
    }
  }
  if (targets.empty()) return result;

  const auto frequent = apriori_frequent(ts, params.min_support, params.max_len);
  for (const auto& itemset : frequent) {
    int consequent = -1;
    for (const int id : itemset.items) {
      if (targets.count(id)) {
        consequent = id;
        break;  // at most one item of the consequent attribute can occur
      }
    }
    if (consequent < 0) continue;
    ++result.counts.candidates;

    const int length = static_cast<int>(itemset.items.size());
    if (length < params.min_len || length > params.max_len) continue;
    ++result.counts.after_length;

    std::vector<int> antecedent;
    antecedent.reserve(itemset.items.size() - 1);
    for (const int id : itemset.items) {
      if (id != consequent) antecedent.push_back(id);
    }
    ClassRule rule = make_rule(ts, std::move(antecedent), consequent);

    if (rule.confidence < params.min_confidence) continue;
    ++result.counts.after_confidence;
    if (!meets_support(rule.support_count, ts.size(), params.min_support)) continue;
    ++result.counts.after_support;
    if (params.lift_floor && rule.lift < *params.lift_floor) continue;
    ++result.counts.after_lift;

    result.rules.push_back(std::move(rule));
  }
  sort_rules(result.rules);
  return result;
}

std::vector<ClassRule> prune_redundant(std::vector<ClassRule> rules, const TransactionSet& ts) {
  std::vector<ClassRule> kept;
  kept.reserve(rules.size());
  for (auto& rule : rules) {
    const std::size_t k = rule.antecedent.size();
    bool redundant = false;
    // Every proper sub-antecedent, the empty set included: the candidate
    // X' -> Y is evaluated on the transaction set even if it was filtered
    // out of the mined list.
    for (std::uint32_t mask = 0; mask + 1 < (1u << k) && !redundant; ++mask) {
      std::vector<int> sub;
      for (std::size_t i = 0; i < k; ++i) {
        if (mask & (1u << i)) sub.push_back(rule.antecedent[i]);
      }
      std::vector<int> sub_full = sub;
      sub_full.push_back(rule.consequent);
      std::sort(sub_full.begin(), sub_full.end());
      const std::int64_t sigma_sub = ts.support_count(sub);
      if (sigma_sub == 0) continue;
      const double confidence =
          static_cast<double>(ts.support_count(sub_full)) / static_cast<double>(sigma_sub);
      redundant = confidence >= rule.confidence;
    }
    if (!redundant) kept.push_back(std::move(rule));
  }
  sort_rules(kept);
  return kept;
}

std::map<std::pair<std::string, std::string>, int> antecedent_histogram(
    const std::vector<ClassRule>& rules, const ItemDictionary& dictionary) {
  std::map<std::pair<std::string, std::string>, int> counts;
  for (const auto& rule : rules) {
    for (const int id : rule.antecedent) {
      const Item& item = dictionary.item(id);
      ++counts[{item.attribute, item.category}];
    }
  }
  return counts;
}

std::string rules_to_json_text(const std::vector<ClassRule>& rules,
                               const ItemDictionary& dictionary) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& rule : rules) {
    nlohmann::ordered_json antecedent = nlohmann::ordered_json::array();
    for (const int id : rule.antecedent) {
      antecedent.push_back({{"attribute", dictionary.item(id).attribute},
                            {"category", dictionary.item(id).category}});
    }
    arr.push_back({{"antecedent", std::move(antecedent)},
                   {"consequent",
                    {{"attribute", dictionary.item(rule.consequent).attribute},
                     {"category", dictionary.item(rule.consequent).category}}},
                   {"support", rule.support},
                   {"confidence", rule.confidence},
                   {"lift", rule.lift},
                   {"support_count", rule.support_count}});
  }
  return arr.dump(2) + "\n";
}

ParsedRules rules_from_json_text(const std::string& text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("rules JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error("rules JSON: top level must be an array");

  ParsedRules out;
  for (const auto& entry : doc) {
    ClassRule rule;
    for (const auto& item : entry.at("antecedent")) {
      rule.antecedent.push_back(out.dictionary.add(item.at("attribute").get<std::string>(),
                                                   item.at("category").get<std::string>(), false));
    }
    const auto& consequent = entry.at("consequent");
    rule.consequent = out.dictionary.add(consequent.at("attribute").get<std::string>(),
                                         consequent.at("category").get<std::string>(), true);
    rule.support = entry.at("support").get<double>();
    rule.confidence = entry.at("confidence").get<double>();
    rule.lift = entry.at("lift").get<double>();
    rule.support_count = entry.at("support_count").get<std::int64_t>();
    std::sort(rule.antecedent.begin(), rule.antecedent.end());
    out.rules.push_back(std::move(rule));
  }
  return out;
}

std::string rules_to_text_table(const std::vector<ClassRule>& rules,
                                const ItemDictionary& dictionary) {
  std::ostringstream out;
  out << "# antecedents => consequent | support, confidence, lift, count\n";
  for (const auto& rule : rules) {
    for (std::size_t i = 0; i < rule.antecedent.size(); ++i) {
      if (i) out << ", ";
      out << dictionary.display(rule.antecedent[i]);
    }
    out << " => " << dictionary.display(rule.consequent);
    char metrics[128];
    std::snprintf(metrics, sizeof(metrics), " | s=%.4f, c=%.4f, lift=%.4f, n=%lld",
                  rule.support, rule.confidence, rule.lift,
                  static_cast<long long>(rule.support_count));
    out << metrics << "\n";
  }
  return out.str();
}

}  // namespace carmine
