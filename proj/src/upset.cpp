#include "rewb/upset.hpp"

#include <cassert>
#include <numeric>
#include <stdexcept>

namespace rewb {

namespace {

// Guards against adversarial period blow-up in chained operations.
constexpr std::uint64_t kMaxSpan = std::uint64_t{1} << 26;

std::uint64_t checked_lcm(std::uint64_t a, std::uint64_t b) {
  std::uint64_t g = std::gcd(a, b);
  std::uint64_t l = a / g * b;
  if (l > kMaxSpan)
    throw std::length_error("ultimately periodic set period too large");
  return l;
}

// Smallest n >= start with n % modulus == remainder % modulus.
std::uint64_t first_at_least(std::uint64_t start, std::uint64_t remainder,
                             std::uint64_t modulus) {
  std::uint64_t r = remainder % modulus;
  std::uint64_t s = start % modulus;
  return start + (r + modulus - s) % modulus;
}

}  // namespace

UpSet::UpSet(std::vector<bool> head, std::vector<bool> tail)
    : head_(std::move(head)), tail_(std::move(tail)) {
  if (tail_.empty()) throw std::invalid_argument("period must be positive");
  canonicalize();
}

void UpSet::canonicalize() {
  // Smallest period divides every period of the eventually repeating part.
  std::uint64_t lambda = tail_.size();
  for (std::uint64_t d = 1; d < lambda; ++d) {
    if (lambda % d != 0) continue;
    bool periodic = true;
    for (std::uint64_t j = 0; j < lambda && periodic; ++j)
      periodic = tail_[j] == tail_[(j + d) % lambda];
    if (periodic) {
      tail_.resize(d);
      lambda = d;
      break;
    }
  }
  // Fold head entries that already follow the periodic pattern.
  while (!head_.empty() &&
         head_.back() == tail_[(head_.size() - 1) % lambda])
    head_.pop_back();
}

UpSet UpSet::all_from(std::uint64_t start) {
  std::vector<bool> head(start, false);
  return UpSet(std::move(head), {true});
}

UpSet UpSet::singleton(std::uint64_t n) {
  std::vector<bool> head(n + 1, false);
  head[n] = true;
  return UpSet(std::move(head), {false});
}

UpSet UpSet::residue_class(std::uint64_t lambda,
                           const std::vector<std::uint64_t>& residues) {
  if (lambda == 0) throw std::invalid_argument("period must be positive");
  std::vector<bool> tail(lambda, false);
  for (auto r : residues) tail[r % lambda] = true;
  return UpSet({}, std::move(tail));
}

bool UpSet::is_empty() const { return !min().has_value(); }

std::optional<std::uint64_t> UpSet::min() const {
  for (std::uint64_t n = 0; n < head_.size(); ++n)
    if (head_[n]) return n;
  std::uint64_t mu = head_.size();
  for (std::uint64_t n = mu; n < mu + tail_.size(); ++n)
    if (tail_[n % tail_.size()]) return n;
  return std::nullopt;
}

UpSet up_union(const UpSet& p, const UpSet& q) {
  std::uint64_t lambda = checked_lcm(p.period(), q.period());
  std::uint64_t mu = std::max(p.threshold(), q.threshold());
  if (mu > kMaxSpan)
    throw std::length_error("ultimately periodic set threshold too large");
  std::vector<bool> head(mu);
  for (std::uint64_t n = 0; n < mu; ++n)
    head[n] = p.contains(n) || q.contains(n);
  std::vector<bool> tail(lambda);
  for (std::uint64_t r = 0; r < lambda; ++r) {
    std::uint64_t n = first_at_least(mu, r, lambda);
    tail[r % lambda] = p.contains(n) || q.contains(n);
  }
  return UpSet(std::move(head), std::move(tail));
}

UpSet up_minkowski(const UpSet& p, const UpSet& q) {
  if (p.is_empty() || q.is_empty()) return UpSet::empty_set();
  std::uint64_t lambda = checked_lcm(p.period(), q.period());
  std::uint64_t mu = p.threshold() + q.threshold() + lambda;
  std::uint64_t span = mu + lambda;  // values decided on [0, span)
  if (span > kMaxSpan)
    throw std::length_error("ultimately periodic set threshold too large");
  std::size_t words = static_cast<std::size_t>((span + 63) / 64);
  std::vector<std::uint64_t> q_bits(words, 0), sums(words, 0);
  for (std::uint64_t n = 0; n < span; ++n)
    if (q.contains(n)) q_bits[n >> 6] |= std::uint64_t{1} << (n & 63);
  for (std::uint64_t a = 0; a < span; ++a) {
    if (!p.contains(a)) continue;
    // sums |= q_bits << a, truncated to span bits.
    std::uint64_t word_shift = a >> 6, bit_shift = a & 63;
    for (std::size_t i = words; i-- > word_shift;) {
      std::uint64_t value = q_bits[i - word_shift] << bit_shift;
      if (bit_shift != 0 && i > word_shift)
        value |= q_bits[i - word_shift - 1] >> (64 - bit_shift);
      sums[i] |= value;
    }
  }
  auto bit = [&](std::uint64_t n) {
    return (sums[n >> 6] >> (n & 63)) & 1;
  };
  std::vector<bool> head(mu);
  for (std::uint64_t n = 0; n < mu; ++n) head[n] = bit(n);
  std::vector<bool> tail(lambda);
  for (std::uint64_t r = 0; r < lambda; ++r)
    tail[r % lambda] = bit(first_at_least(mu, r, lambda));
  return UpSet(std::move(head), std::move(tail));
}

UpSet up_scale(std::uint64_t e, const UpSet& p) {
  if (e == 0) throw std::invalid_argument("scale factor must be positive");
  std::uint64_t mu = p.threshold(), lambda = p.period();
  if (e * std::max(mu, lambda) > kMaxSpan)
    throw std::length_error("ultimately periodic set threshold too large");
  std::vector<bool> head(e * mu, false);
  for (std::uint64_t n = 0; n < mu; ++n)
    if (p.head()[n]) head[e * n] = true;
  std::vector<bool> tail(e * lambda, false);
  for (std::uint64_t t = 0; t < lambda; ++t)
    if (p.tail()[t]) tail[(e * t) % (e * lambda)] = true;
  return UpSet(std::move(head), std::move(tail));
}

}  // namespace rewb
