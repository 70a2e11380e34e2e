#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace jigsaw {

enum class Criticality { Critical, SemiCritical, OffCritical };
const char* to_string(Criticality c);

// Depth-bounded tableau. Column j is summarized by scd(j); a truncated column
// is critical through every computed row and scd(j) holds the lower bound
// depth+1. Columns may also carry an exact scd beyond the computed depth.
class Tableau {
 public:
  Tableau() = default;
  Tableau(int width, int depth);

  static Tableau from_scd(int depth, const std::vector<int>& scd, const std::vector<bool>& truncated);
  // Raw grid (rows 0..depth, one vector per column); scd is derived when the
  // column obeys the first rule, otherwise the column is marked malformed.
  static Tableau from_entries(const std::vector<std::vector<Criticality>>& columns);

  int width() const { return width_; }
  int depth() const { return depth_; }
  int scd(int j) const { return scd_[j]; }
  bool truncated(int j) const { return truncated_[j]; }
  bool malformed(int j) const { return malformed_[j]; }
  const std::vector<int>& scd_values() const { return scd_; }
  const std::vector<bool>& truncated_flags() const { return truncated_; }

  Criticality entry(int d, int j) const { return entries_[static_cast<std::size_t>(j) * (depth_ + 1) + d]; }
  // Any row, including rows below the computed depth when the column is exact.
  std::optional<Criticality> cell(int d, int j) const;
  // Truth of scd(j) >= v when determinable.
  std::optional<bool> scd_at_least(int j, int v) const;
  std::optional<int> exact_scd(int j) const;

  void set_column(int j, int scd, bool truncated);
  void truncate_width(int new_width);

  std::string ascii() const;
  std::string json() const;

 private:
  int width_ = 0;
  int depth_ = 0;
  std::vector<int> scd_;
  std::vector<bool> truncated_;
  std::vector<bool> malformed_;
  std::vector<Criticality> entries_;
};

struct RuleViolation {
  std::string rule;  // "rule1", "rule2", "rule3", "p14_values", "p14_run", "p14_iff", "forced"
  int depth = -1;
  int column = -1;
  std::string detail;
};

std::vector<RuleViolation> validate(const Tableau& critical, const Tableau& other, int q);

// tau(d) = d - k for the smallest k >= 1 with scd(c_k) >= d - k; -1 if none.
// nullopt when the answer needs rows or columns outside the tableau.
std::optional<int> tau(const Tableau& critical, int d);

struct Genealogy {
  std::map<int, std::vector<int>> children;
  std::map<int, bool> excellent;
  std::map<int, int> tau;
  std::vector<int> depth_truncated;  // depths whose verdict needs unavailable rows
};

Genealogy genealogy(const Tableau& critical);
// Children found by marching right along row d to a critical column k and
// checking the south-west diagonal; used to cross-check the tau criterion.
std::optional<std::vector<int>> children_by_march(const Tableau& critical, int d);

enum class TableauClass { Periodic, RecurrentNonperiodic, Nonrecurrent };
const char* to_string(TableauClass c);

struct Classification {
  TableauClass kind = TableauClass::Nonrecurrent;
  int period = 0;              // when periodic
  int depth = 0;               // verdict horizon
  bool persistent = false;     // tau lim-inf proxy
  int tau_liminf_proxy = -1;
  std::string note;
};

Classification classify(const Tableau& critical);

// Rule propagation over partially specified critical-tableau columns.
struct Propagation {
  std::vector<std::optional<int>> scd;  // exact values where forced; nullopt = undetermined
  std::vector<int> lower;               // best lower bound (may be huge for "infinite")
  std::vector<RuleViolation> conflicts;
};

constexpr int kInfiniteScd = 1 << 28;

Propagation propagate_critical(const std::vector<std::optional<int>>& specified, int q, int width);

Tableau fibonacci_tableau(int depth, int width);

}  // namespace jigsaw
