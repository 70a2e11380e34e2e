#include "jigsaw/tableau.hpp"

#include <algorithm>
#include <sstream>

#include "jigsaw/errors.hpp"
#include "json.hpp"

namespace jigsaw {

const char* to_string(Criticality c) {
  switch (c) {
    case Criticality::Critical: return "critical";
    case Criticality::SemiCritical: return "semi-critical";
    case Criticality::OffCritical: return "off-critical";
  }
  return "?";
}

const char* to_string(TableauClass c) {
  switch (c) {
    case TableauClass::Periodic: return "periodic";
    case TableauClass::RecurrentNonperiodic: return "recurrent_nonperiodic";
    case TableauClass::Nonrecurrent: return "nonrecurrent";
  }
  return "?";
}

namespace {
Criticality from_scd_value(int d, int scd) {
  if (d < scd) return Criticality::Critical;
  if (d == scd) return Criticality::SemiCritical;
  return Criticality::OffCritical;
}
}  // namespace

Tableau::Tableau(int width, int depth)
    : width_(width),
      depth_(depth),
      scd_(width, -1),
      truncated_(width, false),
      malformed_(width, false),
      entries_(static_cast<std::size_t>(width) * (depth + 1), Criticality::OffCritical) {
  if (width < 0 || depth < 0) throw Error(ErrorKind::BadInput, "negative tableau size");
}

void Tableau::set_column(int j, int scd, bool truncated) {
  if (truncated) scd = std::max(scd, depth_ + 1);
  scd_[j] = scd;
  truncated_[j] = truncated;
  malformed_[j] = false;
  for (int d = 0; d <= depth_; ++d) entries_[static_cast<std::size_t>(j) * (depth_ + 1) + d] = from_scd_value(d, scd);
}

void Tableau::truncate_width(int new_width) {
  if (new_width >= width_) return;
  width_ = new_width;
  scd_.resize(new_width);
  truncated_.resize(new_width);
  malformed_.resize(new_width);
  entries_.resize(static_cast<std::size_t>(new_width) * (depth_ + 1));
}

Tableau Tableau::from_scd(int depth, const std::vector<int>& scd, const std::vector<bool>& truncated) {
  Tableau t(static_cast<int>(scd.size()), depth);
  for (int j = 0; j < t.width_; ++j) t.set_column(j, scd[j], j < static_cast<int>(truncated.size()) && truncated[j]);
  return t;
}

Tableau Tableau::from_entries(const std::vector<std::vector<Criticality>>& columns) {
  if (columns.empty()) return Tableau(0, 0);
  const int depth = static_cast<int>(columns[0].size()) - 1;
  Tableau t(static_cast<int>(columns.size()), depth);
  for (int j = 0; j < t.width_; ++j) {
    const auto& col = columns[j];
    for (int d = 0; d <= depth; ++d) t.entries_[static_cast<std::size_t>(j) * (depth + 1) + d] = col[d];
    // First rule: critical* semi? off*.
    int d = 0;
    while (d <= depth && col[d] == Criticality::Critical) ++d;
    int scd;
    bool trunc = false;
    if (d > depth) {
      scd = depth + 1;
      trunc = true;
    } else if (col[d] == Criticality::SemiCritical) {
      scd = d;
      ++d;
    } else {
      scd = d == 0 ? -1 : -2;  // critical followed directly by off-critical breaks the rule
    }
    bool ok = scd != -2;
    for (; ok && d <= depth; ++d) ok = col[d] == Criticality::OffCritical;
    t.malformed_[j] = !ok;
    t.scd_[j] = ok ? scd : -1;
    t.truncated_[j] = ok && trunc;
  }
  return t;
}

std::optional<Criticality> Tableau::cell(int d, int j) const {
  if (j < 0 || j >= width_ || d < 0) return std::nullopt;
  if (d <= depth_) return entry(d, j);
  if (malformed_[j]) return std::nullopt;
  if (truncated_[j]) {
    if (d < scd_[j]) return Criticality::Critical;
    return std::nullopt;
  }
  return from_scd_value(d, scd_[j]);
}

std::optional<bool> Tableau::scd_at_least(int j, int v) const {
  if (j < 0 || j >= width_ || malformed_[j]) return std::nullopt;
  if (truncated_[j]) {
    if (scd_[j] >= v) return true;
    return std::nullopt;
  }
  return scd_[j] >= v;
}

std::optional<int> Tableau::exact_scd(int j) const {
  if (j < 0 || j >= width_ || malformed_[j] || truncated_[j]) return std::nullopt;
  return scd_[j];
}

std::string Tableau::ascii() const {
  std::ostringstream os;
  os << "d\\j ";
  for (int j = 0; j < width_; ++j) os << (j < 10 ? "  " : " ") << j;
  os << '\n';
  for (int d = 0; d <= depth_; ++d) {
    os << (d < 10 ? "  " : " ") << d << ' ';
    for (int j = 0; j < width_; ++j) {
      os << "  ";
      switch (entry(d, j)) {
        case Criticality::Critical: os << "|"; break;
        case Criticality::SemiCritical: os << "‖"; break;
        case Criticality::OffCritical: os << "."; break;
      }
    }
    os << '\n';
  }
  return os.str();
}

std::string Tableau::json() const {
  nlohmann::json j;
  j["width"] = width_;
  j["depth"] = depth_;
  j["scd"] = scd_;
  std::vector<bool> t(truncated_.begin(), truncated_.end());
  j["truncated"] = t;
  return j.dump();
}

std::optional<int> tau(const Tableau& critical, int d) {
  for (int k = 1; k <= d; ++k) {
    auto ok = critical.scd_at_least(k, d - k);
    if (!ok) return std::nullopt;
    if (*ok) return d - k;
  }
  return -1;
}

std::optional<std::vector<int>> children_by_march(const Tableau& critical, int d) {
  std::vector<int> out;
  bool determined = true;
  for (int k = 1; k < critical.width(); ++k) {
    auto crit = critical.scd_at_least(k, d + 1);
    if (!crit) {
      determined = false;
      continue;
    }
    if (!*crit) continue;
    bool clean = true, known = true;
    for (int kk = 1; kk < k; ++kk) {
      auto hit = critical.scd_at_least(kk, d + k - kk);
      if (!hit) {
        known = false;
        break;
      }
      if (*hit) {
        clean = false;
        break;
      }
    }
    if (!known) {
      determined = false;
      continue;
    }
    if (clean) out.push_back(d + k);
  }
  if (!determined) return std::nullopt;
  return out;
}

Genealogy genealogy(const Tableau& critical) {
  Genealogy g;
  for (int d = 0; d <= critical.depth() + 1; ++d) {
    auto t = tau(critical, d);
    if (t) g.tau[d] = *t;
  }
  for (int d = 0; d <= critical.depth(); ++d) {
    auto kids = children_by_march(critical, d);
    if (kids) {
      g.children[d] = *kids;
    } else {
      g.depth_truncated.push_back(d);
      // Keep the children that are determined anyway.
      std::vector<int> partial;
      for (int k = 1; k < critical.width(); ++k) {
        auto crit = critical.scd_at_least(k, d + 1);
        if (!crit || !*crit) continue;
        bool clean = true, known = true;
        for (int kk = 1; kk < k && clean && known; ++kk) {
          auto hit = critical.scd_at_least(kk, d + k - kk);
          if (!hit) known = false;
          else if (*hit) clean = false;
        }
        if (known && clean) partial.push_back(d + k);
      }
      g.children[d] = partial;
    }
    bool excellent = true;
    for (int j = 1; j < critical.width(); ++j)
      if (critical.entry(d, j) == Criticality::SemiCritical) excellent = false;
    g.excellent[d] = excellent;
  }
  return g;
}

std::vector<RuleViolation> validate(const Tableau& critical, const Tableau& other, int q) {
  std::vector<RuleViolation> out;
  const int depth = std::min(critical.depth(), other.depth());
  for (const Tableau* t : {&critical, &other})
    for (int j = 0; j < t->width(); ++j)
      if (t->malformed(j))
        out.push_back({"rule1", -1, j, t == &critical ? "critical tableau column" : "column"});

  // Second rule: strict-above-diagonal copy.
  for (int m = 0; m < other.width(); ++m) {
    for (int d = 0; d <= depth; ++d) {
      if (other.entry(d, m) == Criticality::OffCritical) continue;
      for (int j = 1; j <= d && m + j < other.width() && j < critical.width(); ++j) {
        for (int dd = 0; dd < d - j; ++dd) {
          if (other.entry(dd, m + j) != critical.entry(dd, j)) {
            out.push_back({"rule2", dd, m + j,
                           "differs from critical column " + std::to_string(j) + " above the diagonal from (" +
                               std::to_string(d) + "," + std::to_string(m) + ")"});
            break;
          }
        }
      }
    }
  }

  // Third rule.
  const Genealogy gen = genealogy(critical);
  for (const auto& [parent, kids] : gen.children) {
    for (int child : kids) {
      if (child > depth) continue;
      const int k = child - parent;
      for (int m = 0; m + k < other.width(); ++m) {
        if (other.entry(child, m) != Criticality::SemiCritical) continue;
        if (other.entry(parent, m + k) != Criticality::SemiCritical)
          out.push_back({"rule3", parent, m + k,
                         "child " + std::to_string(child) + " semi-critical at column " + std::to_string(m) +
                             " not carried to its parent"});
      }
    }
  }

  // Further rules with q rays at alpha.
  for (int j = 0; j < other.width(); ++j) {
    auto s = other.exact_scd(j);
    if (s && *s >= 1 && *s <= q - 1)
      out.push_back({"p14_values", *s, j, "semi-critical depth in 1..q-1"});
  }
  int run = 0;
  for (int j = 0; j < other.width(); ++j) {
    auto s = other.exact_scd(j);
    run = (s && *s == -1) ? run + 1 : 0;
    if (run == q) out.push_back({"p14_run", -1, j, "more than q-1 consecutive off-critical columns"});
  }
  for (int m = 0; m + q - 1 < other.width(); ++m) {
    auto rhs = other.scd_at_least(m, q);
    if (!rhs) continue;
    bool lhs = true, known = true;
    for (int i = m + 1; i < m + q; ++i) {
      auto s = other.exact_scd(i);
      if (!s && !other.truncated(i)) known = false;
      if (!s || *s != -1) lhs = false;
    }
    if (known && lhs != *rhs) out.push_back({"p14_iff", -1, m, "off-critical run does not match scd >= q"});
  }
  return out;
}

Classification classify(const Tableau& critical) {
  Classification c;
  const int D = critical.depth();
  const int W = critical.width();
  c.depth = D;
  for (int p = 1; 2 * p < W; ++p) {
    bool full = critical.truncated(p);
    for (int k = 2; full && k * p < W; ++k) full = critical.truncated(k * p);
    if (full) {
      c.kind = TableauClass::Periodic;
      c.period = p;
      c.note = "column " + std::to_string(p) + " and its multiples critical to depth " + std::to_string(D);
      break;
    }
  }
  if (c.kind != TableauClass::Periodic) {
    bool recurrent = false;
    for (int k = 1; k < W; ++k) {
      auto ok = critical.scd_at_least(k, (D + 1) / 2);
      if (ok && *ok) recurrent = true;
    }
    c.kind = recurrent ? TableauClass::RecurrentNonperiodic : TableauClass::Nonrecurrent;
    c.note = "verdict to depth " + std::to_string(D);
  }
  // Persistence proxy: the minimum of tau over the second half of the depth
  // range must exceed its minimum over the preceding quarter.
  auto min_tau = [&](int from, int to) {
    int best = 1 << 30;
    for (int d = from; d <= to; ++d) {
      auto t = tau(critical, d);
      if (t) best = std::min(best, *t);
    }
    return best;
  };
  const int half = (D + 1) / 2, quarter = (D + 3) / 4;
  const int late = min_tau(half, D);
  const int early = min_tau(quarter, half - 1);
  c.tau_liminf_proxy = late == (1 << 30) ? -1 : late;
  c.persistent = c.kind == TableauClass::RecurrentNonperiodic && late != (1 << 30) && early != (1 << 30) &&
                 late > early;
  return c;
}

Propagation propagate_critical(const std::vector<std::optional<int>>& specified, int q, int width) {
  Propagation pr;
  std::vector<int> lo(width, -1), hi(width, kInfiniteScd);
  for (int j = 0; j < width && j < static_cast<int>(specified.size()); ++j)
    if (specified[j]) lo[j] = hi[j] = *specified[j];
  lo[0] = hi[0] = kInfiniteScd;

  bool changed = true;
  auto conflict = [&](int j, const std::string& why) {
    for (const auto& v : pr.conflicts)
      if (v.column == j && v.detail == why) return;
    pr.conflicts.push_back({"forced", -1, j, why});
  };
  auto force = [&](int j, int v, const std::string& why) {
    if (j >= width) return;
    if (v < lo[j] || v > hi[j]) {
      conflict(j, why + " forces " + std::to_string(v));
      return;
    }
    if (lo[j] != v || hi[j] != v) {
      lo[j] = hi[j] = v;
      changed = true;
    }
  };
  auto raise = [&](int j, int v) {
    if (j >= width || v <= lo[j]) return;
    if (v > hi[j]) {
      conflict(j, "lower bound " + std::to_string(v));
      return;
    }
    lo[j] = v;
    changed = true;
  };
  auto exact = [&](int j) { return lo[j] == hi[j]; };

  for (int guard = 0; changed && guard < 10000; ++guard) {
    changed = false;
    // Second rule between column j and column m + j, top t - j rows equal.
    for (int m = 1; m < width; ++m) {
      const int t = std::min(lo[m], kInfiniteScd / 2);
      for (int j = 1; j < t && m + j < width; ++j) {
        const int r = t - j;
        if (exact(j) && lo[j] < r) force(m + j, lo[j], "rule2 from column " + std::to_string(m));
        else if (lo[j] >= r) raise(m + j, r);
        if (exact(m + j) && lo[m + j] < r) force(j, lo[m + j], "rule2 into column " + std::to_string(j));
        else if (lo[m + j] >= r) raise(j, r);
      }
    }
    // Third rule using the partially known genealogy.
    auto tau_partial = [&](int d) -> std::optional<int> {
      for (int k = 1; k <= d; ++k) {
        if (k >= width) return std::nullopt;
        if (lo[k] >= d - k) return d - k;
        if (hi[k] < d - k) continue;
        return std::nullopt;
      }
      return -1;
    };
    for (int m = 1; m < width; ++m) {
      if (!exact(m) || lo[m] < 0 || lo[m] >= kInfiniteScd / 2) continue;
      const int D = lo[m];
      auto t0 = tau_partial(D), t1 = tau_partial(D + 1);
      if (t0 && t1 && *t0 >= 0 && *t1 == *t0 + 1) {
        const int k = D - *t0;
        force(m + k, *t0, "rule3 from column " + std::to_string(m));
      }
    }
    // Values allowed next to a semi-critical cell.
    for (int j = 1; j < width; ++j) {
      if (lo[j] >= 1 && lo[j] <= q - 1) raise(j, q);
      if (hi[j] >= 1 && hi[j] <= q - 1 && !exact(j)) {
        hi[j] = 0;
        changed = true;
      }
      if (exact(j) && lo[j] >= 1 && lo[j] <= q - 1) conflict(j, "scd in 1..q-1");
    }
    for (int m = 0; m < width; ++m) {
      if (lo[m] >= q)
        for (int i = m + 1; i < m + q && i < width; ++i) force(i, -1, "p14 after column " + std::to_string(m));
      bool run = m + q - 1 < width;
      for (int i = m + 1; run && i < m + q; ++i) run = exact(i) && lo[i] == -1;
      if (run) raise(m, q);
    }
  }
  pr.scd.resize(width);
  pr.lower = lo;
  for (int j = 0; j < width; ++j)
    if (exact(j)) pr.scd[j] = lo[j];
  return pr;
}

Tableau fibonacci_tableau(int depth, int width) {
  if (depth < 0 || width < 1) throw Error(ErrorKind::BadInput, "fibonacci_tableau needs depth >= 0, width >= 1");
  std::vector<std::optional<int>> spec(width);
  long a = 1, b = 2;  // u_n, u_{n+1}
  while (a < width) {
    spec[a] = static_cast<int>(b - 3);
    const long c = a + b;
    a = b;
    b = c;
  }
  Propagation pr = propagate_critical(spec, 2, width);
  if (!pr.conflicts.empty()) throw Error(ErrorKind::BadInput, "Fibonacci specification is inconsistent");
  std::vector<int> scd(width);
  std::vector<bool> trunc(width, false);
  for (int j = 0; j < width; ++j) {
    if (j == 0) {
      scd[j] = depth + 1;
      trunc[j] = true;
    } else if (pr.scd[j]) {
      scd[j] = *pr.scd[j];
    } else {
      throw Error(ErrorKind::BadInput, "Fibonacci column left undetermined", j);
    }
  }
  return Tableau::from_scd(depth, scd, trunc);
}

}  // namespace jigsaw
