#include "rewb/monoid.hpp"

#include <algorithm>
#include <cassert>
#include <cstdlib>
#include <deque>
#include <unordered_map>

namespace rewb {

BoolMatrix::BoolMatrix(std::uint32_t dim, bool identity_diagonal)
    : dim_(dim),
      words_per_row_((dim + 63) / 64),
      bits_(std::size_t{dim} * ((dim + 63) / 64), 0) {
  if (identity_diagonal)
    for (std::uint32_t i = 0; i < dim; ++i) set(i, i);
}

BoolMatrix multiply(const BoolMatrix& a, const BoolMatrix& b) {
  assert(a.dim_ == b.dim_);
  BoolMatrix out = BoolMatrix::zero(a.dim_);
  std::uint32_t wpr = a.words_per_row_;
  for (std::uint32_t i = 0; i < a.dim_; ++i) {
    const std::uint64_t* arow = a.row(i);
    std::uint64_t* orow = out.row(i);
    for (std::uint32_t wi = 0; wi < wpr; ++wi) {
      std::uint64_t word = arow[wi];
      while (word) {
        std::uint32_t k = wi * 64 + __builtin_ctzll(word);
        word &= word - 1;
        const std::uint64_t* brow = b.row(k);
        for (std::uint32_t wj = 0; wj < wpr; ++wj) orow[wj] |= brow[wj];
      }
    }
  }
  return out;
}

bool BoolMatrix::row_intersects(std::uint32_t r, const DynBitset& mask) const {
  const std::uint64_t* rw = row(r);
  for (std::uint32_t wi = 0; wi < words_per_row_; ++wi)
    if (rw[wi] & mask.data()[wi]) return true;
  return false;
}

std::uint64_t BoolMatrix::hash() const {
  std::uint64_t h = 0x9e3779b97f4a7c15ull ^ dim_;
  for (std::uint64_t w : bits_) {
    h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdull;
  }
  return h;
}

std::size_t default_monoid_cap() {
  if (const char* env = std::getenv("REWB_MONOID_CAP")) {
    char* end = nullptr;
    unsigned long long value = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && value > 0)
      return static_cast<std::size_t>(value);
  }
  return 20000;
}

std::size_t TransitionMonoid::letter_index(char letter) const {
  std::size_t pos = alphabet_.find(letter);
  if (pos == std::string::npos)
    throw std::invalid_argument("letter outside the monoid alphabet");
  return pos;
}

ElemId TransitionMonoid::intern(BoolMatrix m) {
  std::uint64_t h = m.hash();
  auto& bucket = hash_buckets_[h & bucket_mask_];
  for (ElemId id : bucket)
    if (elements_[id] == m) return id;
  ElemId id = static_cast<ElemId>(elements_.size());
  accepting_.push_back(m.row_intersects(initial_, final_mask_) ? 1 : 0);
  elements_.push_back(std::move(m));
  bucket.push_back(id);
  return id;
}

ElemId TransitionMonoid::find(const BoolMatrix& m) const {
  std::uint64_t h = m.hash();
  const auto& bucket = hash_buckets_[h & bucket_mask_];
  for (ElemId id : bucket)
    if (elements_[id] == m) return id;
  throw std::logic_error("matrix is not an element of the monoid");
}

ElemId TransitionMonoid::multiply(ElemId a, ElemId b) const {
  if (!product_table_.empty())
    return product_table_[std::size_t{a} * elements_.size() + b];
  if (a == identity_id()) return b;
  if (b == identity_id()) return a;
  return find(rewb::multiply(elements_[a], elements_[b]));
}

TransitionMonoid TransitionMonoid::build(const EpsNfa& machine,
                                         std::size_t cap) {
  EpsNfa flat;
  const EpsNfa* source = &machine;
  bool has_eps = false;
  for (const auto& edges : machine.eps_edges)
    if (!edges.empty()) has_eps = true;
  if (has_eps) {
    flat = eps_free(machine);
    source = &flat;
  }

  TransitionMonoid monoid;
  monoid.dim_ = source->state_count;
  monoid.alphabet_ = source->alphabet;
  monoid.initial_ = source->initial;
  monoid.final_mask_ = DynBitset(source->state_count);
  for (State f : source->finals) monoid.final_mask_.set(f);

  std::size_t buckets = 64;
  while (buckets < 4 * (cap + 1) && buckets < (std::size_t{1} << 22))
    buckets <<= 1;
  monoid.hash_buckets_.resize(buckets);
  monoid.bucket_mask_ = buckets - 1;

  ElemId identity = monoid.intern(BoolMatrix::identity(monoid.dim_));
  assert(identity == 0);
  (void)identity;

  std::size_t letter_count = monoid.alphabet_.size();
  monoid.letter_ids_.resize(letter_count);
  std::vector<BoolMatrix> generators(letter_count);
  for (std::size_t li = 0; li < letter_count; ++li) {
    BoolMatrix gen = BoolMatrix::zero(monoid.dim_);
    char letter = monoid.alphabet_[li];
    for (State q = 0; q < source->state_count; ++q)
      for (auto [edge_letter, to] : source->letter_edges[q])
        if (edge_letter == letter) gen.set(q, to);
    generators[li] = std::move(gen);
  }

  monoid.right_by_letter_.assign(letter_count, {});
  // Derivation of each element as parent * letter, in discovery order; lets
  // the dense product table be filled with one table step per cell.
  std::vector<std::pair<ElemId, std::uint32_t>> derivation{{0, 0}};
  std::deque<ElemId> worklist{0};
  std::size_t processed = 0;
  while (!worklist.empty()) {
    ElemId id = worklist.front();
    worklist.pop_front();
    ++processed;
    for (std::size_t li = 0; li < letter_count; ++li) {
      BoolMatrix next = rewb::multiply(monoid.elements_[id], generators[li]);
      std::size_t before = monoid.elements_.size();
      ElemId next_id = monoid.intern(std::move(next));
      if (monoid.elements_.size() > before) {
        if (monoid.elements_.size() > cap) throw MonoidCapError(cap);
        worklist.push_back(next_id);
        derivation.emplace_back(id, static_cast<std::uint32_t>(li));
      }
      auto& table = monoid.right_by_letter_[li];
      if (table.size() <= id) table.resize(monoid.elements_.size(), 0);
      table[id] = next_id;
    }
  }
  assert(processed == monoid.elements_.size());
  for (std::size_t li = 0; li < letter_count; ++li) {
    monoid.letter_ids_[li] = monoid.right_by_letter_[li][0];
    assert(monoid.right_by_letter_[li].size() >= monoid.elements_.size());
    monoid.right_by_letter_[li].resize(monoid.elements_.size());
  }

  const std::size_t count = monoid.elements_.size();
  if (count <= kDenseProductLimit) {
    monoid.product_table_.resize(count * count);
    for (std::size_t a = 0; a < count; ++a) {
      ElemId* row = monoid.product_table_.data() + a * count;
      row[0] = static_cast<ElemId>(a);
      // Discovery order guarantees derivation parents precede their children.
      for (std::size_t b = 1; b < count; ++b) {
        auto [parent, letter] = derivation[b];
        row[b] = monoid.right_by_letter_[letter][row[parent]];
      }
    }
  }
  return monoid;
}

TransitionMonoid build_monoid(const ExprPtr& e, std::string_view alphabet,
                              std::size_t cap) {
  return TransitionMonoid::build(thompson(e, alphabet), cap);
}

namespace {

// Builds the set {i : values[i]} where values has an initial segment
// [0, tail_start) and then repeats with the given cycle length.
UpSet up_from_rho(const std::vector<bool>& values, std::size_t tail_start,
                  std::size_t cycle) {
  std::vector<bool> head(values.begin(),
                         values.begin() + static_cast<long>(tail_start));
  std::vector<bool> tail(cycle);
  for (std::size_t j = tail_start; j < tail_start + cycle; ++j)
    tail[j % cycle] = values[j];
  return UpSet(std::move(head), std::move(tail));
}

// Walks identity, theta, theta^2, ... until the first repeat and collects
// {i : hit(theta^i)}; the power sequence is eventually periodic, so the
// walk is finite and the set comes out exact.
template <typename Hit>
UpSet up_from_power_walk(const TransitionMonoid& m, ElemId theta, Hit hit) {
  std::unordered_map<ElemId, std::size_t> first_seen;
  std::vector<bool> hits;
  std::size_t length = 0;
  ElemId current = m.identity_id();
  while (true) {
    auto it = first_seen.find(current);
    if (it != first_seen.end())
      return up_from_rho(hits, it->second, length - it->second);
    first_seen.emplace(current, length);
    hits.push_back(hit(current));
    ++length;
    current = m.multiply(current, theta);
  }
}

}  // namespace

UpSet power_profile(const TransitionMonoid& m, ElemId base, ElemId target) {
  return up_from_power_walk(
      m, base, [&](ElemId current) { return current == target; });
}

namespace {

// Iterative Tarjan; returns dense component ids, one per vertex.
std::vector<std::uint32_t> strongly_connected(
    std::size_t n, const std::vector<std::vector<std::uint32_t>>& out) {
  std::vector<std::uint32_t> order(n, 0);
  std::vector<std::uint32_t> low(n, 0);
  std::vector<std::uint32_t> component(n, 0);
  std::vector<std::uint8_t> visited(n, 0);
  std::vector<std::uint8_t> open(n, 0);
  std::vector<std::uint32_t> pending;
  struct Frame {
    std::uint32_t vertex;
    std::size_t edge;
  };
  std::vector<Frame> frames;
  std::uint32_t next_order = 1;
  std::uint32_t component_count = 0;
  for (std::uint32_t start = 0; start < n; ++start) {
    if (visited[start]) continue;
    frames.push_back({start, 0});
    while (!frames.empty()) {
      Frame& frame = frames.back();
      const std::uint32_t v = frame.vertex;
      if (frame.edge == 0) {
        visited[v] = 1;
        order[v] = low[v] = next_order++;
        pending.push_back(v);
        open[v] = 1;
      }
      if (frame.edge < out[v].size()) {
        const std::uint32_t next = out[v][frame.edge++];
        if (!visited[next]) {
          frames.push_back({next, 0});
        } else if (open[next]) {
          low[v] = std::min(low[v], order[next]);
        }
      } else {
        if (low[v] == order[v]) {
          while (true) {
            const std::uint32_t member = pending.back();
            pending.pop_back();
            open[member] = 0;
            component[member] = component_count;
            if (member == v) break;
          }
          ++component_count;
        }
        frames.pop_back();
        if (!frames.empty()) {
          Frame& parent = frames.back();
          low[parent.vertex] = std::min(low[parent.vertex], low[v]);
        }
      }
    }
  }
  return component;
}

}  // namespace

GreenIndex::GreenIndex(const TransitionMonoid& m) : monoid_(&m) {
  const std::size_t count = m.size();
  const std::string& sigma = m.alphabet();
  std::vector<ElemId> letter_elems;
  letter_elems.reserve(sigma.size());
  for (char letter : sigma) letter_elems.push_back(m.letter_id(letter));

  std::vector<std::vector<std::uint32_t>> right(count);
  std::vector<std::vector<std::uint32_t>> left(count);
  std::vector<std::vector<std::uint32_t>> both(count);
  for (std::uint32_t x = 0; x < count; ++x) {
    right[x].reserve(sigma.size());
    left[x].reserve(sigma.size());
    for (char letter : sigma) right[x].push_back(m.step_letter(x, letter));
    for (ElemId g : letter_elems) left[x].push_back(m.multiply(g, x));
    both[x] = right[x];
    both[x].insert(both[x].end(), left[x].begin(), left[x].end());
  }
  r_class_ = strongly_connected(count, right);
  l_class_ = strongly_connected(count, left);
  j_class_ = strongly_connected(count, both);

  h_class_.resize(count);
  std::unordered_map<std::uint64_t, std::uint32_t> pair_ids;
  for (std::uint32_t x = 0; x < count; ++x) {
    const std::uint64_t key =
        (std::uint64_t{r_class_[x]} << 32) | l_class_[x];
    auto [it, inserted] = pair_ids.emplace(
        key, static_cast<std::uint32_t>(h_members_.size()));
    if (inserted) h_members_.emplace_back();
    h_class_[x] = it->second;
    h_members_[it->second].push_back(x);
  }
}

std::optional<ElemId> GreenIndex::group_identity(std::uint32_t h) const {
  for (ElemId z : h_members_[h]) {
    if (monoid_->multiply(z, z) == z) return z;
  }
  return std::nullopt;
}

UpSet up_from_sandwich(const TransitionMonoid& m, std::string_view w1,
                       std::string_view theta, std::string_view w2,
                       ElemId target) {
  const ElemId left = m.delta_of(w1);
  const ElemId right = m.delta_of(w2);
  return up_from_power_walk(m, m.delta_of(theta), [&](ElemId current) {
    return m.multiply(m.multiply(left, current), right) == target;
  });
}

UpSet up_accepting_sandwich(const TransitionMonoid& m, ElemId left,
                            ElemId theta, ElemId right) {
  return up_from_power_walk(m, theta, [&](ElemId current) {
    return m.accepting(m.multiply(m.multiply(left, current), right));
  });
}

std::map<ElemId, UpSet> up_sandwich_classes(const TransitionMonoid& m,
                                            ElemId left, ElemId theta,
                                            ElemId right) {
  // One rho walk of the powers of theta; each exponent is charged to the
  // sandwich value it produces, so the class sets partition {0, 1, ...}.
  std::unordered_map<ElemId, std::size_t> first_seen;
  std::vector<ElemId> values;
  std::size_t tail_start = 0;
  std::size_t cycle = 0;
  ElemId current = m.identity_id();
  while (true) {
    auto it = first_seen.find(current);
    if (it != first_seen.end()) {
      tail_start = it->second;
      cycle = values.size() - it->second;
      break;
    }
    first_seen.emplace(current, values.size());
    values.push_back(m.multiply(m.multiply(left, current), right));
    current = m.multiply(current, theta);
  }
  std::map<ElemId, UpSet> classes;
  for (const ElemId value : values) {
    if (classes.count(value)) continue;
    std::vector<bool> hits(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) hits[i] = values[i] == value;
    classes.emplace(value, up_from_rho(hits, tail_start, cycle));
  }
  return classes;
}

}  // namespace rewb
