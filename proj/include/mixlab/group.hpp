#pragma once

// Finite groups with dense element indexing.
//
// Elements of every group are the integers 0..order()-1 and the identity is
// always index 0. The group law is evaluated on demand from coordinates, so
// no |G|^2 table is ever materialised:
//   * Z_n:        index = residue.
//   * H_m:        the triple (i,j,k) of the unipotent matrix
//                 [[1,i,k],[0,1,j],[0,0,1]] over Z_m, index = (i*m + j)*m + k.
//   * G_1 x ... : mixed radix with the first factor most significant.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mixlab {

using Index = std::uint32_t;

inline constexpr std::size_t kDefaultEnumerationCap = 50'000;

struct HeisenbergCoords {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  std::uint32_t k = 0;
  friend bool operator==(const HeisenbergCoords&, const HeisenbergCoords&) = default;
};

class GroupTable {
 public:
  enum class Kind { kCyclic, kHeisenberg, kProduct };

  std::size_t order() const noexcept { return order_; }
  Index identity() const noexcept { return 0; }
  Kind kind() const noexcept { return kind_; }
  const std::string& label() const noexcept { return label_; }

  Index op(Index a, Index b) const noexcept;
  Index inv(Index a) const noexcept;

  /// Modulus of a cyclic or Heisenberg group; 0 for products.
  std::uint32_t modulus() const noexcept { return modulus_; }

  /// Factor groups of a product; empty for the other kinds.
  std::span<const GroupTable> factors() const noexcept;

  /// Product coordinates of `x` (one index per factor).
  std::vector<Index> coordinates(Index x) const;
  Index from_coordinates(std::span<const Index> coords) const;

  /// Embeds an element of factor `f` with identity in every other slot.
  Index lift(std::size_t f, Index x) const;

  HeisenbergCoords heisenberg_coords(Index x) const noexcept;
  Index heisenberg_index(HeisenbergCoords c) const noexcept;

  /// True for cyclic groups and products whose factors are all abelian-cyclic.
  bool is_abelian_cyclic_product() const noexcept;

  /// Moduli of the cyclic factors (flattened) for abelian groups.
  std::vector<std::uint32_t> cyclic_moduli() const;

  friend GroupTable make_cyclic(std::uint32_t n);
  friend GroupTable make_heisenberg(std::uint32_t m, std::size_t cap);
  friend GroupTable make_product(std::span<const GroupTable> factors, std::size_t cap);

 private:
  GroupTable() = default;

  Kind kind_ = Kind::kCyclic;
  std::size_t order_ = 1;
  std::uint32_t modulus_ = 1;
  std::string label_;
  std::shared_ptr<const std::vector<GroupTable>> factors_;
  std::vector<std::size_t> strides_;
};

GroupTable make_cyclic(std::uint32_t n);
GroupTable make_heisenberg(std::uint32_t m, std::size_t cap = kDefaultEnumerationCap);
GroupTable make_product(std::span<const GroupTable> factors,
                        std::size_t cap = kDefaultEnumerationCap);

/// Parses "Z:<n>", "H:<m>" and "P:<desc>,<desc>,..." (parentheses may wrap
/// nested product descriptors, e.g. "P:(P:Z:2,Z:3),Z:5").
GroupTable parse_group(std::string_view descriptor,
                       std::size_t cap = kDefaultEnumerationCap);

/// A set of group elements. `symmetric` records whether the set is closed
/// under inversion; it is computed, never trusted from callers.
struct GeneratorSet {
  std::vector<Index> members;  // sorted, unique
  bool symmetric = false;

  bool contains(Index x) const noexcept;
};

GeneratorSet make_generator_set(const GroupTable& g, std::vector<Index> members);

/// True if the members generate the whole group (BFS closure under right
/// multiplication).
bool generates(const GroupTable& g, std::span<const Index> members);

/// The usual generating set: {0,+-1} for Z_n, the identity plus the four
/// elementary matrices for H_m, and the union of lifted factor sets for
/// products.
GeneratorSet standard_generators(const GroupTable& g);

/// {0, +-1, +-floor(sqrt(n))} on Z_n.
GeneratorSet sqrt_jump_generators(const GroupTable& cyclic);

/// Parses a generator list for `g`: "default", "sqrt" (cyclic only), or a
/// comma-separated list whose tokens are integers (reduced mod |G| for cyclic
/// groups, raw indices otherwise) or Heisenberg triples "i/j/k".
GeneratorSet parse_generators(const GroupTable& g, std::string_view text);

}  // namespace mixlab
