#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowbound/kinematics.hpp"

namespace flowbound {

// External labels are 0..n_ext-1; a label set is a bitmask over them.
using LabelMask = std::uint16_t;

// One internal line of a weighted tree, stored as the bipartition side that
// does not contain label 0, with weight rho in {1, 2}.
struct Split {
  LabelMask side = 0;
  int rho = 0;
  friend auto operator<=>(const Split&, const Split&) = default;
};

// Laminar family of 0-avoiding bipartitions plus line weights.  The family
// reconstructs a tree with n_ext external legs; vertex v_0 carries leg 0 and
// each split contributes one further vertex at its far end.
struct WeightedTree {
  int n_ext = 0;
  std::vector<Split> splits;

  void canonicalize();  // sorts splits; sides are unique so this is canonical
  friend auto operator<=>(const WeightedTree&, const WeightedTree&) = default;
};

struct TreeClassParams {
  int n_ext = 0;
  int r = 0;  // cap on the number of coordination-3 vertices

  static int saturation_threshold(int n_ext) { return 3 * n_ext - 2; }
};

// Malformed split families (bad labels, overlapping non-nested sides,
// duplicate sides, weights outside {1,2}) are structural defects, reported
// separately from class-membership violations.
struct StructuralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tree shape reconstructed from the split family.  Vertex 0 holds external
// leg 0; vertex i+1 is the far end of splits[i].
struct TreeStructure {
  std::vector<int> parent_vertex;               // per split, vertex at the near end
  std::vector<std::vector<int>> lines_at_vertex;  // split indices incident to each vertex
  std::vector<int> externals_at_vertex;         // external leg count per vertex
  std::vector<int> coordination;                // lines + externals per vertex

  int vertex_count() const { return static_cast<int>(coordination.size()); }
  int coord3_count() const;
};

TreeStructure derive_structure(const WeightedTree& tree);

// Coordination-3 vertex count without materializing the structure.  Assumes
// a well-formed split family (as produced by the enumerator); feed anything
// questionable through derive_structure instead.
int coord3_count(const WeightedTree& tree);

// Condition d reads "a bijection among the coordination-3 vertices and the
// rho=1 lines".  The default requires the bijection to respect incidence
// (a perfect matching); the relaxed policy only compares cardinalities.
enum class MatchPolicy { incidence, cardinality };

struct ValidationResult {
  bool valid = false;
  std::vector<std::string> violations;  // each starts with the condition name a|b|c|d
};

ValidationResult validate(const WeightedTree& tree, const TreeClassParams& params,
                          MatchPolicy policy = MatchPolicy::incidence);

// Complete class for the given parameters, canonically ordered.  Guarded at
// n_ext <= 12.  Odd n_ext is a legal input; callers decide whether to warn.
std::vector<WeightedTree> enumerate_class(const TreeClassParams& params,
                                          MatchPolicy policy = MatchPolicy::incidence);

// Isomorphism classes under permutations of the external labels (weights
// respected).  Grouping uses a label-free canonical encoding of the weighted
// shape, so it is exact for arbitrary input sets.
struct ShapeClass {
  WeightedTree representative;  // least member under the canonical tree order
  std::size_t orbit_size = 0;
  std::string signature;
};

std::vector<ShapeClass> shapes(const std::vector<WeightedTree>& trees);

// Applies perm (perm[old_label] = new_label) to the external labels.
WeightedTree relabel(const WeightedTree& tree, const std::vector<int>& perm);

// Joins leg e1 of t1 to leg e2 of t2 through a new rho=2 internal line.
// Remaining t1 legs keep their relative order as labels 0..n1-2, t2 legs
// follow as n1-1..n1+n2-3.
WeightedTree junction(const WeightedTree& t1, int e1, const WeightedTree& t2, int e2);

// Weight reduction by a total of two units on one or two chosen lines.
// Lines whose weight reaches zero are contracted (their split is removed).
struct WeightDecrement {
  LabelMask side = 0;  // identifies the line
  int amount = 0;      // 1 or 2
};

struct WeightReduction {
  bool accepted = false;
  WeightedTree tree;      // the post-contraction tree, even when rejected
  int min_r = -1;         // least R with tree in the class; set when accepted
  std::string violated;   // first failed condition (a, c or d) when rejected
};

WeightReduction reduce_weights(const WeightedTree& tree,
                               const std::vector<WeightDecrement>& decrements,
                               MatchPolicy policy = MatchPolicy::incidence);

// Momentum through the line with the given side, oriented away from leg 0:
// sum of cfg momenta over the side labels.
Momentum4 line_momentum(const WeightedTree& tree, LabelMask side, const MomentumConfig& cfg);

}  // namespace flowbound
