#include "mixlab/group.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "mixlab/error.hpp"

namespace mixlab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kCapacityExceeded: return "capacity-exceeded";
    case ErrorKind::kNotGenerating: return "not-generating";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kCapExceeded: return "cap-exceeded";
  }
  return "unknown";
}

Index GroupTable::op(Index a, Index b) const noexcept {
  switch (kind_) {
    case Kind::kCyclic: {
      const std::uint64_t s = std::uint64_t{a} + b;
      return static_cast<Index>(s % modulus_);
    }
    case Kind::kHeisenberg: {
      const std::uint64_t m = modulus_;
      const std::uint64_t ai = a / (m * m), aj = (a / m) % m, ak = a % m;
      const std::uint64_t bi = b / (m * m), bj = (b / m) % m, bk = b % m;
      const std::uint64_t i = (ai + bi) % m;
      const std::uint64_t j = (aj + bj) % m;
      const std::uint64_t k = (ak + bk + ai * bj) % m;
      return static_cast<Index>((i * m + j) * m + k);
    }
    case Kind::kProduct: {
      const auto& fs = *factors_;
      std::size_t out = 0;
      for (std::size_t f = 0; f < fs.size(); ++f) {
        const std::size_t n = fs[f].order();
        const auto xa = static_cast<Index>((a / strides_[f]) % n);
        const auto xb = static_cast<Index>((b / strides_[f]) % n);
        out += fs[f].op(xa, xb) * strides_[f];
      }
      return static_cast<Index>(out);
    }
  }
  return 0;
}

Index GroupTable::inv(Index a) const noexcept {
  switch (kind_) {
    case Kind::kCyclic:
      return a == 0 ? 0 : static_cast<Index>(modulus_ - a);
    case Kind::kHeisenberg: {
      // (i,j,k)^{-1} = (-i, -j, -k + i*j)
      const std::uint64_t m = modulus_;
      const std::uint64_t i = a / (m * m), j = (a / m) % m, k = a % m;
      const std::uint64_t ni = (m - i) % m, nj = (m - j) % m;
      const std::uint64_t nk = ((m - k) % m + (i * j) % m) % m;
      return static_cast<Index>((ni * m + nj) * m + nk);
    }
    case Kind::kProduct: {
      const auto& fs = *factors_;
      std::size_t out = 0;
      for (std::size_t f = 0; f < fs.size(); ++f) {
        const auto x = static_cast<Index>((a / strides_[f]) % fs[f].order());
        out += fs[f].inv(x) * strides_[f];
      }
      return static_cast<Index>(out);
    }
  }
  return 0;
}

std::span<const GroupTable> GroupTable::factors() const noexcept {
  if (!factors_) return {};
  return {factors_->data(), factors_->size()};
}

std::vector<Index> GroupTable::coordinates(Index x) const {
  require(kind_ == Kind::kProduct, "coordinates() needs a product group");
  std::vector<Index> out(factors_->size());
  for (std::size_t f = 0; f < out.size(); ++f) {
    out[f] = static_cast<Index>((x / strides_[f]) % (*factors_)[f].order());
  }
  return out;
}

Index GroupTable::from_coordinates(std::span<const Index> coords) const {
  require(kind_ == Kind::kProduct, "from_coordinates() needs a product group");
  require(coords.size() == factors_->size(), "coordinate count mismatch");
  std::size_t out = 0;
  for (std::size_t f = 0; f < coords.size(); ++f) {
    require(coords[f] < (*factors_)[f].order(), "coordinate out of range");
    out += coords[f] * strides_[f];
  }
  return static_cast<Index>(out);
}

Index GroupTable::lift(std::size_t f, Index x) const {
  require(kind_ == Kind::kProduct && f < factors_->size(), "lift() out of range");
  require(x < (*factors_)[f].order(), "lift() element out of range");
  return static_cast<Index>(x * strides_[f]);
}

HeisenbergCoords GroupTable::heisenberg_coords(Index x) const noexcept {
  const std::uint32_t m = modulus_;
  return {x / (m * m), (x / m) % m, x % m};
}

Index GroupTable::heisenberg_index(HeisenbergCoords c) const noexcept {
  const std::uint32_t m = modulus_;
  return ((c.i % m) * m + (c.j % m)) * m + (c.k % m);
}

bool GroupTable::is_abelian_cyclic_product() const noexcept {
  if (kind_ == Kind::kCyclic) return true;
  if (kind_ == Kind::kHeisenberg) return false;
  return std::all_of(factors_->begin(), factors_->end(),
                     [](const GroupTable& f) { return f.is_abelian_cyclic_product(); });
}

std::vector<std::uint32_t> GroupTable::cyclic_moduli() const {
  require(is_abelian_cyclic_product(), "group is not a product of cyclic groups");
  if (kind_ == Kind::kCyclic) return {modulus_};
  std::vector<std::uint32_t> out;
  for (const auto& f : *factors_) {
    auto sub = f.cyclic_moduli();
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

GroupTable make_cyclic(std::uint32_t n) {
  require(n >= 1, "cyclic group order must be >= 1");
  GroupTable g;
  g.kind_ = GroupTable::Kind::kCyclic;
  g.order_ = n;
  g.modulus_ = n;
  g.label_ = "Z:" + std::to_string(n);
  return g;
}

GroupTable make_heisenberg(std::uint32_t m, std::size_t cap) {
  require(m >= 2, "Heisenberg modulus must be >= 2");
  const std::uint64_t order = std::uint64_t{m} * m * m;
  if (order > cap) {
    fail(ErrorKind::kCapacityExceeded,
         "H:" + std::to_string(m) + " has " + std::to_string(order) +
             " elements, cap is " + std::to_string(cap));
  }
  GroupTable g;
  g.kind_ = GroupTable::Kind::kHeisenberg;
  g.order_ = static_cast<std::size_t>(order);
  g.modulus_ = m;
  g.label_ = "H:" + std::to_string(m);
  return g;
}

GroupTable make_product(std::span<const GroupTable> factors, std::size_t cap) {
  require(!factors.empty(), "product needs at least one factor");
  std::uint64_t order = 1;
  for (const auto& f : factors) {
    order *= f.order();
    if (order > cap) {
      fail(ErrorKind::kCapacityExceeded,
           "product order exceeds the enumeration cap " + std::to_string(cap));
    }
  }
  GroupTable g;
  g.kind_ = GroupTable::Kind::kProduct;
  g.order_ = static_cast<std::size_t>(order);
  g.modulus_ = 0;
  g.factors_ = std::make_shared<const std::vector<GroupTable>>(factors.begin(), factors.end());
  g.strides_.assign(factors.size(), 1);
  for (std::size_t f = factors.size() - 1; f > 0; --f) {
    g.strides_[f - 1] = g.strides_[f] * factors[f].order();
  }
  g.label_ = "P:";
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (f) g.label_ += ',';
    const bool nested = factors[f].kind() == GroupTable::Kind::kProduct;
    g.label_ += nested ? "(" + factors[f].label() + ")" : factors[f].label();
  }
  return g;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

long long parse_integer(std::string_view s, std::string_view what) {
  s = trim(s);
  long long value = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    fail(ErrorKind::kInvalidParameter,
         "cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return value;
}

// Splits on commas that are not nested inside parentheses.
std::vector<std::string_view> split_top_level(std::string_view s) {
  std::vector<std::string_view> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    require(depth >= 0, "unbalanced parentheses in '" + std::string(s) + "'");
    if (s[i] == ',' && depth == 0) {
      parts.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  require(depth == 0, "unbalanced parentheses in '" + std::string(s) + "'");
  parts.push_back(trim(s.substr(start)));
  return parts;
}

}  // namespace

GroupTable parse_group(std::string_view descriptor, std::size_t cap) {
  auto d = trim(descriptor);
  while (d.size() >= 2 && d.front() == '(' && d.back() == ')') d = trim(d.substr(1, d.size() - 2));
  require(d.size() > 2 && d[1] == ':', "bad group descriptor '" + std::string(descriptor) + "'");
  const char kind = d[0];
  const auto body = d.substr(2);
  switch (kind) {
    case 'Z': {
      const auto n = parse_integer(body, "cyclic order");
      require(n >= 1 && n <= static_cast<long long>(cap), "cyclic order out of range");
      return make_cyclic(static_cast<std::uint32_t>(n));
    }
    case 'H': {
      const auto m = parse_integer(body, "Heisenberg modulus");
      require(m >= 2 && m < 100000, "Heisenberg modulus out of range");
      return make_heisenberg(static_cast<std::uint32_t>(m), cap);
    }
    case 'P': {
      std::vector<GroupTable> factors;
      for (auto part : split_top_level(body)) factors.push_back(parse_group(part, cap));
      return make_product(factors, cap);
    }
    default:
      fail(ErrorKind::kInvalidParameter, "unknown group kind in '" + std::string(descriptor) + "'");
  }
}

bool GeneratorSet::contains(Index x) const noexcept {
  return std::binary_search(members.begin(), members.end(), x);
}

GeneratorSet make_generator_set(const GroupTable& g, std::vector<Index> members) {
  for (Index x : members) require(x < g.order(), "generator index out of range");
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  GeneratorSet out;
  out.symmetric = std::all_of(members.begin(), members.end(), [&](Index x) {
    return std::binary_search(members.begin(), members.end(), g.inv(x));
  });
  out.members = std::move(members);
  return out;
}

bool generates(const GroupTable& g, std::span<const Index> members) {
  std::vector<char> seen(g.order(), 0);
  std::vector<Index> frontier{g.identity()};
  seen[g.identity()] = 1;
  std::size_t count = 1;
  while (!frontier.empty()) {
    std::vector<Index> next;
    for (Index x : frontier) {
      for (Index s : members) {
        const Index y = g.op(x, s);
        if (!seen[y]) {
          seen[y] = 1;
          ++count;
          next.push_back(y);
        }
      }
    }
    frontier.swap(next);
  }
  return count == g.order();
}

GeneratorSet standard_generators(const GroupTable& g) {
  switch (g.kind()) {
    case GroupTable::Kind::kCyclic: {
      const auto n = g.modulus();
      return make_generator_set(g, {0, 1 % n, (n - 1) % n});
    }
    case GroupTable::Kind::kHeisenberg: {
      const auto m = g.modulus();
      return make_generator_set(g, {g.identity(), g.heisenberg_index({1, 0, 0}),
                                    g.heisenberg_index({m - 1, 0, 0}),
                                    g.heisenberg_index({0, 1, 0}),
                                    g.heisenberg_index({0, m - 1, 0})});
    }
    case GroupTable::Kind::kProduct: {
      std::vector<Index> members;
      const auto fs = g.factors();
      for (std::size_t f = 0; f < fs.size(); ++f) {
        for (Index x : standard_generators(fs[f]).members) members.push_back(g.lift(f, x));
      }
      return make_generator_set(g, std::move(members));
    }
  }
  return {};
}

GeneratorSet sqrt_jump_generators(const GroupTable& cyclic) {
  require(cyclic.kind() == GroupTable::Kind::kCyclic, "sqrt jumps need a cyclic group");
  const auto n = cyclic.modulus();
  const auto r = static_cast<std::uint32_t>(std::floor(std::sqrt(static_cast<double>(n))));
  return make_generator_set(cyclic, {0, 1 % n, (n - 1) % n, r % n, (n - r % n) % n});
}

GeneratorSet parse_generators(const GroupTable& g, std::string_view text) {
  const auto t = trim(text);
  if (t.empty() || t == "default") return standard_generators(g);
  if (t == "sqrt") return sqrt_jump_generators(g);
  std::vector<Index> members;
  const auto order = static_cast<long long>(g.order());
  for (auto token : split_top_level(t)) {
    if (token.find('/') != std::string_view::npos) {
      require(g.kind() == GroupTable::Kind::kHeisenberg,
              "triple generators need a Heisenberg group");
      const auto m = static_cast<long long>(g.modulus());
      long long c[3];
      for (int part = 0; part < 3; ++part) {
        const auto slash = token.find('/');
        require((slash == std::string_view::npos) == (part == 2),
                "Heisenberg generator must be i/j/k");
        c[part] = parse_integer(token.substr(0, slash), "Heisenberg coordinate");
        c[part] = ((c[part] % m) + m) % m;
        if (slash != std::string_view::npos) token.remove_prefix(slash + 1);
      }
      members.push_back(g.heisenberg_index({static_cast<std::uint32_t>(c[0]),
                                            static_cast<std::uint32_t>(c[1]),
                                            static_cast<std::uint32_t>(c[2])}));
      continue;
    }
    long long v = parse_integer(token, "generator");
    if (g.kind() == GroupTable::Kind::kCyclic) {
      v = ((v % order) + order) % order;
    } else {
      require(v >= 0 && v < order, "generator index out of range");
    }
    members.push_back(static_cast<Index>(v));
  }
  return make_generator_set(g, std::move(members));
}

}  // namespace mixlab
