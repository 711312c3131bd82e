#pragma once

#include "carmine/discretizer.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace carmine {

struct Item {
  std::string attribute;
  std::string category;
};

/// Dense ids for the (attribute, category) pairs observed in a transaction
/// set; ids are contiguous from 0 in registration order.
class ItemDictionary {
 public:
  int add(std::string attribute, std::string category, bool class_item);
  int size() const { return static_cast<int>(items_.size()); }
  const Item& item(int id) const { return items_[id]; }
  std::optional<int> find(const std::string& attribute, const std::string& category) const;
  bool is_class_item(int id) const { return class_flag_[id]; }
  const std::vector<int>& class_items() const { return class_items_; }
  std::string display(int id) const;  // "Attr = Cat"

 private:
  std::vector<Item> items_;
  std::vector<bool> class_flag_;
  std::vector<int> class_items_;
  std::map<std::pair<std::string, std::string>, int> index_;
};

using Transaction = std::vector<int>;  // sorted item ids, at most one per attribute

/// Observations plus per-item transaction-id lists (vertical layout) used for
/// all support counting.
class TransactionSet {
 public:
  TransactionSet(ItemDictionary dictionary, std::vector<Transaction> observations);

  std::int64_t size() const { return static_cast<std::int64_t>(observations_.size()); }
  const std::vector<Transaction>& observations() const { return observations_; }
  const ItemDictionary& dictionary() const { return dictionary_; }

  std::int64_t item_count(int id) const { return static_cast<std::int64_t>(tidlists_[id].size()); }
  const std::vector<std::uint32_t>& tidlist(int id) const { return tidlists_[id]; }

  // |{ o : itemset subseteq o }|; the empty itemset is contained everywhere.
  std::int64_t support_count(const std::vector<int>& itemset) const;

 private:
  ItemDictionary dictionary_;
  std::vector<Transaction> observations_;
  std::vector<std::vector<std::uint32_t>> tidlists_;
};

struct EncodeResult {
  TransactionSet transactions;
  std::vector<std::string> excluded_rows;  // rows missing the class label
};

// One transaction per row from its present (attribute, category) cells; rows
// without a class label are excluded and reported. Dictionary ids follow
// column order then ordinal label order, observed pairs only.
EncodeResult encode_transactions(const CategoricalTable& table, const std::string& class_attribute);

struct FrequentItemset {
  std::vector<int> items;  // sorted ids
  std::int64_t count = 0;
};

// The support predicate used everywhere: count/N >= min_support in double.
inline bool meets_support(std::int64_t count, std::int64_t n, double min_support) {
  return static_cast<double>(count) / static_cast<double>(n) >= min_support;
}

// Level-wise Apriori with the downward-closure prune and tidlist-intersection
// counting. Output is sorted by (size, lexicographic ids).
std::vector<FrequentItemset> apriori_frequent(const TransactionSet& ts, double min_support,
                                              int max_size);

struct ClassRule {
  std::vector<int> antecedent;  // sorted ids, disjoint from the consequent
  int consequent = -1;
  std::int64_t support_count = 0;  // sigma(X u {Y})
  double support = 0;
  double confidence = 0;
  double lift = 0;
};

// Metrics from the transaction set: s = sigma(XY)/N, c = sigma(XY)/sigma(X),
// lift = sigma(XY)*N / (sigma(X)*sigma(Y)) computed on integer products so
// exact independence yields lift == 1.0 exactly.
ClassRule make_rule(const TransactionSet& ts, std::vector<int> antecedent, int consequent);

struct MiningParams {
  std::string consequent_attribute;
  std::vector<std::string> target_classes;  // empty = every category
  double min_support = 0.065;
  double min_confidence = 0.9;
  int min_len = 2;  // rule length = antecedent items + 1
  int max_len = 5;
  std::optional<double> lift_floor;
};

struct FiltrationCounts {
  std::int64_t candidates = 0;
  std::int64_t after_length = 0;
  std::int64_t after_confidence = 0;
  std::int64_t after_support = 0;
  std::int64_t after_lift = 0;
  std::optional<std::int64_t> after_redundancy;
};

struct MiningResult {
  std::vector<ClassRule> rules;
  FiltrationCounts counts;
  std::vector<std::string> warnings;
};

// Emits X -> Y for every frequent itemset holding exactly one consequent
// item, then applies the filtration chain (length, confidence, support,
// lift floor). Output order: lift desc, confidence desc, support desc,
// lexicographic antecedent.
MiningResult generate_cars(const TransactionSet& ts, const MiningParams& params);

// Minimal-improvement pruning: X -> Y is dropped when any proper
// sub-antecedent X' (the empty set included) reaches confidence >= c(X -> Y)
// on the same transaction set, whether or not X' -> Y survived the earlier
// filters. Idempotent and input-order independent; output re-sorted.
std::vector<ClassRule> prune_redundant(std::vector<ClassRule> rules, const TransactionSet& ts);

// (attribute, category) -> number of antecedents containing the item.
std::map<std::pair<std::string, std::string>, int> antecedent_histogram(
    const std::vector<ClassRule>& rules, const ItemDictionary& dictionary);

void sort_rules(std::vector<ClassRule>& rules);

std::string rules_to_json_text(const std::vector<ClassRule>& rules, const ItemDictionary& dictionary);

struct ParsedRules {
  std::vector<ClassRule> rules;
  ItemDictionary dictionary;
};
ParsedRules rules_from_json_text(const std::string& text);

// Plain-text listing, one rule per line with comma-joined "Attr = Cat"
// antecedents and the metric triple.
std::string rules_to_text_table(const std::vector<ClassRule>& rules,
                                const ItemDictionary& dictionary);

}  // namespace carmine
