#include "flowbound/trees.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>

namespace flowbound {

namespace {

int popcount(LabelMask m) { return std::popcount(static_cast<unsigned>(m)); }

bool laminar(LabelMask a, LabelMask b) {
  const LabelMask i = a & b;
  // Both sides avoid label 0, so the "complementary union" case cannot occur.
  return i == 0 || i == a || i == b;
}

}  // namespace

void WeightedTree::canonicalize() { std::sort(splits.begin(), splits.end()); }

int TreeStructure::coord3_count() const {
  int c = 0;
  for (int x : coordination) c += (x == 3);
  return c;
}

int coord3_count(const WeightedTree& tree) {
  // Allocation-free coordination census for enumerator-produced trees; the
  // splits are trusted to be laminar and 0-free.
  const int m = static_cast<int>(tree.splits.size());
  int lines[17] = {0};
  int covered[17] = {0};
  for (int i = 0; i < m; ++i) {
    int best = -1;
    const LabelMask a = tree.splits[i].side;
    for (int j = 0; j < m; ++j) {
      const LabelMask b = tree.splits[j].side;
      if (j != i && (a & b) == a && (best < 0 || popcount(b) < popcount(tree.splits[best].side)))
        best = j;
    }
    ++lines[best + 1];
    ++lines[i + 1];
    covered[best + 1] += popcount(a);
  }
  int n3 = 0;
  n3 += (tree.n_ext - covered[0] + lines[0]) == 3;
  for (int i = 0; i < m; ++i)
    n3 += (popcount(tree.splits[i].side) - covered[i + 1] + lines[i + 1]) == 3;
  return n3;
}

TreeStructure derive_structure(const WeightedTree& tree) {
  const int n = tree.n_ext;
  if (n < 2 || n > 16) throw StructuralError("external leg count out of range [2,16]");
  const int m = static_cast<int>(tree.splits.size());
  const LabelMask full = static_cast<LabelMask>((1u << n) - 1u);
  for (int i = 0; i < m; ++i) {
    const Split& s = tree.splits[i];
    if (s.rho != 1 && s.rho != 2) throw StructuralError("line weight outside {1,2}");
    if (s.side == 0 || (s.side & 1u) || (s.side & static_cast<LabelMask>(~full)))
      throw StructuralError("split side must be a nonempty 0-free subset of the labels");
    const int pc = popcount(s.side);
    if (pc < 2 || pc > n - 2) throw StructuralError("split side size outside [2, n_ext-2]");
    for (int j = 0; j < i; ++j) {
      if (tree.splits[j].side == s.side) throw StructuralError("duplicate split side");
      if (!laminar(tree.splits[j].side, s.side))
        throw StructuralError("split sides overlap without nesting");
    }
  }

  TreeStructure st;
  st.parent_vertex.assign(m, 0);
  st.lines_at_vertex.assign(m + 1, {});
  st.externals_at_vertex.assign(m + 1, 0);
  st.coordination.assign(m + 1, 0);

  // Parent of split i: smallest strict superset among the sides, or the root
  // when none exists.  Laminarity makes the smallest superset unique.
  for (int i = 0; i < m; ++i) {
    int best = -1;
    for (int j = 0; j < m; ++j) {
      const LabelMask a = tree.splits[i].side, b = tree.splits[j].side;
      if (j != i && (a & b) == a &&
          (best < 0 || popcount(b) < popcount(tree.splits[best].side)))
        best = j;
    }
    st.parent_vertex[i] = best + 1;  // -1 maps to the root vertex 0
    st.lines_at_vertex[best + 1].push_back(i);
    st.lines_at_vertex[i + 1].push_back(i);
  }

  // Each label sits at the vertex of the smallest side containing it; leg 0
  // is always at the root.
  std::vector<int> covered(m + 1, 0);
  for (int i = 0; i < m; ++i) covered[st.parent_vertex[i]] += popcount(tree.splits[i].side);
  for (int i = 0; i < m; ++i)
    st.externals_at_vertex[i + 1] = popcount(tree.splits[i].side) - covered[i + 1];
  st.externals_at_vertex[0] = n - covered[0];
  for (int v = 0; v <= m; ++v)
    st.coordination[v] = static_cast<int>(st.lines_at_vertex[v].size()) + st.externals_at_vertex[v];
  return st;
}

namespace {

bool kuhn_augment(int v, const std::vector<std::vector<int>>& adj, std::vector<int>& match_right,
                  std::vector<char>& used) {
  for (int r : adj[v]) {
    if (used[r]) continue;
    used[r] = 1;
    if (match_right[r] < 0 || kuhn_augment(match_right[r], adj, match_right, used)) {
      match_right[r] = v;
      return true;
    }
  }
  return false;
}

// Perfect matching between coordination-3 vertices and incident rho=1 lines.
bool incidence_bijection(const WeightedTree& tree, const TreeStructure& st) {
  std::vector<int> lefts;
  for (int v = 0; v < st.vertex_count(); ++v)
    if (st.coordination[v] == 3) lefts.push_back(v);
  std::vector<int> right_pos(tree.splits.size(), -1);
  int n_right = 0;
  for (std::size_t i = 0; i < tree.splits.size(); ++i)
    if (tree.splits[i].rho == 1) right_pos[i] = n_right++;
  if (static_cast<int>(lefts.size()) != n_right) return false;
  std::vector<std::vector<int>> adj(lefts.size());
  for (std::size_t a = 0; a < lefts.size(); ++a)
    for (int i : st.lines_at_vertex[lefts[a]])
      if (right_pos[i] >= 0) adj[a].push_back(right_pos[i]);
  std::vector<int> match_right(n_right, -1);
  for (std::size_t a = 0; a < lefts.size(); ++a) {
    std::vector<char> used(n_right, 0);
    if (!kuhn_augment(static_cast<int>(a), adj, match_right, used)) return false;
  }
  return true;
}

std::string check_a(const TreeStructure& st) {
  for (int v = 0; v < st.vertex_count(); ++v)
    if (st.coordination[v] < 3 || st.coordination[v] > 4)
      return "a: vertex coordination " + std::to_string(st.coordination[v]) + " outside {3,4}";
  return {};
}

std::string check_c(const WeightedTree& tree) {
  int sum = 0;
  for (const Split& s : tree.splits) sum += s.rho;
  if (sum != tree.n_ext - 4)
    return "c: weight sum " + std::to_string(sum) + " differs from n_ext-4 = " +
           std::to_string(tree.n_ext - 4);
  return {};
}

std::string check_d(const WeightedTree& tree, const TreeStructure& st, MatchPolicy policy) {
  int n_rho1 = 0;
  for (const Split& s : tree.splits) n_rho1 += (s.rho == 1);
  const bool ok = (st.coord3_count() == n_rho1) &&
                  (policy == MatchPolicy::cardinality || incidence_bijection(tree, st));
  if (!ok) return "d: no bijection between coordination-3 vertices and rho=1 lines";
  return {};
}

}  // namespace

ValidationResult validate(const WeightedTree& tree, const TreeClassParams& params,
                          MatchPolicy policy) {
  if (params.n_ext != tree.n_ext) throw std::invalid_argument("class and tree leg counts differ");
  if (params.r < 0) throw std::invalid_argument("negative coordination-3 budget");
  const TreeStructure st = derive_structure(tree);
  ValidationResult res;
  if (auto v = check_a(st); !v.empty()) res.violations.push_back(v);
  if (const int n3 = st.coord3_count(); n3 > params.r)
    res.violations.push_back("b: " + std::to_string(n3) +
                             " coordination-3 vertices exceed R = " + std::to_string(params.r));
  if (auto v = check_c(tree); !v.empty()) res.violations.push_back(v);
  if (auto v = check_d(tree, st, policy); !v.empty()) res.violations.push_back(v);
  res.valid = res.violations.empty();
  return res;
}

namespace {

struct Enumerator {
  int n_ext;
  int r_cap;
  MatchPolicy policy;
  int m_lo, m_hi;
  std::vector<LabelMask> cand;  // descending size, then ascending mask
  std::vector<LabelMask> family;
  std::vector<int> parent;               // index into family, -1 for root
  std::vector<int> coordination;         // [0] root, then one per family entry
  std::vector<WeightedTree> out;
  // Forward laminar compatibility: row i holds bits j > i with cand[j]
  // laminar against cand[i].  One scratch bitset per recursion depth.
  std::vector<std::vector<std::uint64_t>> compat;
  std::vector<std::vector<std::uint64_t>> allowed;
  int words = 0;

  void run() {
    const int nc = static_cast<int>(cand.size());
    words = (nc + 63) / 64;
    compat.assign(nc, std::vector<std::uint64_t>(words, 0));
    for (int i = 0; i < nc; ++i)
      for (int j = i + 1; j < nc; ++j)
        if (laminar(cand[i], cand[j])) compat[i][j >> 6] |= std::uint64_t{1} << (j & 63);
    allowed.assign(m_hi + 1, std::vector<std::uint64_t>(words, 0));
    if (m_hi > 0 && nc > 0) {
      for (int w = 0; w < words; ++w) allowed[0][w] = ~std::uint64_t{0};
      if (nc & 63) allowed[0][words - 1] = (std::uint64_t{1} << (nc & 63)) - 1;
    }
    coordination.assign(1, n_ext);  // bare star: leg 0 plus the rest at one vertex
    extend(0);
  }

  void maybe_emit() {
    const int m = static_cast<int>(family.size());
    if (m < m_lo || m > m_hi) return;
    int n3 = 0;
    for (int c : coordination) {
      if (c > 4) return;  // some vertex still too crowded
      n3 += (c == 3);
    }
    if (n3 > r_cap) return;
    const int n_rho1 = 2 * m - (n_ext - 4);
    if (n3 != n_rho1) return;  // cardinality half of the bijection, weight blind
    WeightedTree t;
    t.n_ext = n_ext;
    t.splits.reserve(m);
    for (int i = 0; i < m; ++i) t.splits.push_back({family[i], 2});
    const TreeStructure st = derive_structure(t);
    std::vector<int> pick(m, 0);
    std::fill(pick.begin(), pick.begin() + n_rho1, 1);
    std::sort(pick.begin(), pick.end());
    // iterate all subsets of size n_rho1 via permutations of the indicator
    do {
      for (int i = 0; i < m; ++i) t.splits[i].rho = pick[i] ? 1 : 2;
      if (policy == MatchPolicy::incidence && !incidence_bijection(t, st)) continue;
      WeightedTree keep = t;
      keep.canonicalize();
      out.push_back(std::move(keep));
    } while (std::next_permutation(pick.begin(), pick.end()));
  }

  void extend(int depth) {
    maybe_emit();
    const int m = static_cast<int>(family.size());
    if (m == m_hi) return;
    const int slots = m_hi - m;
    for (int w = 0; w < words; ++w) {
      std::uint64_t bits = allowed[depth][w];
      while (bits) {
        const int idx = (w << 6) + std::countr_zero(bits);
        bits &= bits - 1;
        const int size = popcount(cand[idx]);
        // A fresh vertex starts at coordination size+1 and can only be relieved
        // by later children strictly inside the side, each shedding at most
        // size-2.  Likewise every vertex above 4 needs at least one more child.
        if (size > 3 && size - 3 > (slots - 1) * (size - 2)) continue;
        int par = -1;
        for (std::size_t j = 0; j < family.size(); ++j) {
          const LabelMask b = family[j];
          if ((cand[idx] & b) == cand[idx] && cand[idx] != b &&
              (par < 0 || popcount(b) < popcount(family[par])))
            par = static_cast<int>(j);
        }
        const int pv = par + 1;  // coordination slot (0 = root)
        // Adding a child of size s changes the parent coordination by 1 - s;
        // coordinations only decrease from here on, so < 3 prunes the branch.
        const int delta = 1 - size;
        if (coordination[pv] + delta < 3) continue;
        coordination[pv] += delta;
        coordination.push_back(1 + size);
        family.push_back(cand[idx]);
        parent.push_back(par);
        int over = 0;
        for (int c : coordination) over += (c > 4);
        if (over <= slots - 1) {
          const auto& row = compat[idx];
          for (int w2 = 0; w2 < words; ++w2) allowed[depth + 1][w2] = allowed[depth][w2] & row[w2];
          extend(depth + 1);
        }
        family.pop_back();
        parent.pop_back();
        coordination.pop_back();
        coordination[pv] -= delta;
      }
    }
  }
};

}  // namespace

std::vector<WeightedTree> enumerate_class(const TreeClassParams& params, MatchPolicy policy) {
  const int n = params.n_ext;
  if (n < 4) throw std::invalid_argument("tree classes need at least 4 external legs");
  if (n > 12) throw std::invalid_argument("enumeration guarded at n_ext <= 12");
  if (params.r < 0) throw std::invalid_argument("negative coordination-3 budget");

  Enumerator en;
  en.n_ext = n;
  en.r_cap = params.r;
  en.policy = policy;
  en.m_lo = (n - 4 + 1) / 2;
  // Emission pairs the coordination-3 count with the rho=1 line count
  // 2m - (n-4), so budgets below n-4 cap the family size too.
  en.m_hi = std::min(n - 4, (params.r + n - 4) / 2);
  if (en.m_hi < en.m_lo) return {};
  for (LabelMask mask = 0; mask < (1u << n); ++mask) {
    if (mask & 1u) continue;
    const int pc = popcount(mask);
    if (pc >= 2 && pc <= n - 2) en.cand.push_back(mask);
  }
  std::sort(en.cand.begin(), en.cand.end(), [](LabelMask a, LabelMask b) {
    const int pa = popcount(a), pb = popcount(b);
    return pa != pb ? pa > pb : a < b;
  });
  en.run();
  std::sort(en.out.begin(), en.out.end());
  return en.out;
}

namespace {

std::string encode_from(int v, int from, const std::vector<std::vector<std::pair<int, int>>>& adj,
                        const std::vector<int>& externals) {
  std::vector<std::string> kids;
  for (const auto& [w, rho] : adj[v])
    if (w != from) kids.push_back(std::to_string(rho) + encode_from(w, v, adj, externals));
  std::sort(kids.begin(), kids.end());
  std::string s = "(" + std::to_string(externals[v]);
  for (const auto& k : kids) {
    s += '|';
    s += k;
  }
  s += ')';
  return s;
}

// Label-free canonical form of the weighted shape: rooted encoding with
// sorted children, minimized over the choice of root.
std::string shape_signature(const WeightedTree& tree) {
  const TreeStructure st = derive_structure(tree);
  const int nv = st.vertex_count();
  std::vector<std::vector<std::pair<int, int>>> adj(nv);
  for (std::size_t i = 0; i < tree.splits.size(); ++i) {
    const int a = st.parent_vertex[i], b = static_cast<int>(i) + 1;
    adj[a].push_back({b, tree.splits[i].rho});
    adj[b].push_back({a, tree.splits[i].rho});
  }
  std::string best;
  for (int v = 0; v < nv; ++v) {
    std::string s = encode_from(v, -1, adj, st.externals_at_vertex);
    if (best.empty() || s < best) best = s;
  }
  return best;
}

}  // namespace

std::vector<ShapeClass> shapes(const std::vector<WeightedTree>& trees) {
  std::vector<ShapeClass> out;
  if (trees.empty()) return out;
  std::map<std::string, ShapeClass> buckets;
  for (const WeightedTree& t : trees) {
    if (t.n_ext != trees.front().n_ext)
      throw std::invalid_argument("shape grouping needs a uniform leg count");
    WeightedTree c = t;
    c.canonicalize();
    std::string sig = shape_signature(c);
    auto [it, inserted] = buckets.try_emplace(sig, ShapeClass{c, 1, sig});
    if (!inserted) {
      ++it->second.orbit_size;
      if (c < it->second.representative) it->second.representative = c;
    }
  }
  for (auto& [sig, cls] : buckets) out.push_back(std::move(cls));
  std::sort(out.begin(), out.end(),
            [](const ShapeClass& a, const ShapeClass& b) { return a.representative < b.representative; });
  return out;
}

WeightedTree relabel(const WeightedTree& tree, const std::vector<int>& perm) {
  const int n = tree.n_ext;
  if (static_cast<int>(perm.size()) != n) throw std::invalid_argument("permutation size mismatch");
  LabelMask seen = 0;
  for (int v : perm) {
    if (v < 0 || v >= n) throw std::invalid_argument("permutation value out of range");
    seen |= static_cast<LabelMask>(1u << v);
  }
  if (seen != static_cast<LabelMask>((1u << n) - 1u))
    throw std::invalid_argument("not a permutation");
  const LabelMask full = static_cast<LabelMask>((1u << n) - 1u);
  WeightedTree out;
  out.n_ext = n;
  for (const Split& s : tree.splits) {
    LabelMask side = 0;
    for (int e = 0; e < n; ++e)
      if (s.side & (1u << e)) side |= static_cast<LabelMask>(1u << perm[e]);
    if (side & 1u) side = full ^ side;
    out.splits.push_back({side, s.rho});
  }
  out.canonicalize();
  return out;
}

WeightedTree junction(const WeightedTree& t1, int e1, const WeightedTree& t2, int e2) {
  if (t1.n_ext < 4 || t2.n_ext < 4)
    throw std::invalid_argument("junction needs at least 4 legs on each tree");
  if (e1 < 0 || e1 >= t1.n_ext || e2 < 0 || e2 >= t2.n_ext)
    throw std::invalid_argument("junction leg label out of range");
  derive_structure(t1);
  derive_structure(t2);
  const int n = t1.n_ext + t2.n_ext - 2;
  if (n > 16) throw std::invalid_argument("junction result exceeds 16 external legs");

  std::vector<int> map1(t1.n_ext, -1), map2(t2.n_ext, -1);
  int next = 0;
  for (int e = 0; e < t1.n_ext; ++e)
    if (e != e1) map1[e] = next++;
  for (int e = 0; e < t2.n_ext; ++e)
    if (e != e2) map2[e] = next++;

  const LabelMask full = static_cast<LabelMask>((1u << n) - 1u);
  LabelMask block2 = 0;
  for (int e = 0; e < t2.n_ext; ++e)
    if (e != e2) block2 |= static_cast<LabelMask>(1u << map2[e]);
  const LabelMask block1 = full ^ block2;

  WeightedTree out;
  out.n_ext = n;
  auto push = [&](LabelMask side, int rho) {
    if (side & 1u) side = full ^ side;
    out.splits.push_back({side, rho});
  };
  for (const Split& s : t1.splits) {
    LabelMask side = 0;
    bool glued = false;
    for (int e = 0; e < t1.n_ext; ++e) {
      if (!(s.side & (1u << e))) continue;
      if (e == e1)
        glued = true;
      else
        side |= static_cast<LabelMask>(1u << map1[e]);
    }
    push(glued ? static_cast<LabelMask>(side | block2) : side, s.rho);
  }
  for (const Split& s : t2.splits) {
    LabelMask side = 0;
    bool glued = false;
    for (int e = 0; e < t2.n_ext; ++e) {
      if (!(s.side & (1u << e))) continue;
      if (e == e2)
        glued = true;
      else
        side |= static_cast<LabelMask>(1u << map2[e]);
    }
    push(glued ? static_cast<LabelMask>(side | block1) : side, s.rho);
  }
  push(block2, 2);
  out.canonicalize();
  return out;
}

WeightReduction reduce_weights(const WeightedTree& tree,
                               const std::vector<WeightDecrement>& decrements,
                               MatchPolicy policy) {
  derive_structure(tree);
  if (decrements.empty() || decrements.size() > 2)
    throw std::invalid_argument("choose one or two lines to reduce");
  int total = 0;
  for (const WeightDecrement& d : decrements) {
    if (d.amount <= 0) throw std::invalid_argument("decrements must be positive");
    total += d.amount;
  }
  if (total != 2) throw std::invalid_argument("decrements must total two units");
  if (decrements.size() == 2 && decrements[0].side == decrements[1].side)
    throw std::invalid_argument("the same line was chosen twice");

  std::vector<Split> splits = tree.splits;
  for (const WeightDecrement& d : decrements) {
    bool found = false;
    for (Split& s : splits) {
      if (s.side != d.side) continue;
      if (d.amount > s.rho) throw std::invalid_argument("decrement exceeds the line weight");
      s.rho -= d.amount;
      found = true;
      break;
    }
    if (!found) throw std::invalid_argument("no internal line with the given side");
  }

  WeightReduction res;
  res.tree.n_ext = tree.n_ext;
  for (const Split& s : splits)
    if (s.rho > 0) res.tree.splits.push_back(s);  // weight-0 lines are contracted
  res.tree.canonicalize();

  const TreeStructure st = derive_structure(res.tree);
  // Weight arithmetic first: a reduction that leaves the wrong total is
  // reported as such even when the contraction also broke a coordination.
  std::string v = check_c(res.tree);
  if (v.empty()) v = check_a(st);
  if (v.empty()) v = check_d(res.tree, st, policy);
  if (v.empty()) {
    res.accepted = true;
    res.min_r = st.coord3_count();
  } else {
    res.violated = v;
  }
  return res;
}

Momentum4 line_momentum(const WeightedTree& tree, LabelMask side, const MomentumConfig& cfg) {
  if (cfg.n_ext() != tree.n_ext) throw std::invalid_argument("configuration leg count mismatch");
  bool found = false;
  for (const Split& s : tree.splits) found = found || (s.side == side);
  if (!found) throw std::invalid_argument("no internal line with the given side");
  Momentum4 k{0.0, 0.0, 0.0, 0.0};
  for (int e = 1; e < tree.n_ext; ++e)
    if (side & (1u << e)) k = k + cfg.external()[static_cast<std::size_t>(e - 1)];
  return k;
}

}  // namespace flowbound
