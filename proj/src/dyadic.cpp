#include "incgeo/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "incgeo/error.hpp"

namespace incgeo {

namespace {

constexpr std::int64_t kOffset = std::int64_t{1} << 31;

std::uint64_t spread_bits(std::uint32_t v) {
  std::uint64_t x = v;
  x = (x | (x << 16)) & 0x0000FFFF0000FFFFull;
  x = (x | (x << 8)) & 0x00FF00FF00FF00FFull;
  x = (x | (x << 4)) & 0x0F0F0F0F0F0F0F0Full;
  x = (x | (x << 2)) & 0x3333333333333333ull;
  x = (x | (x << 1)) & 0x5555555555555555ull;
  return x;
}

void check_coordinate(std::int64_t v) {
  if (v < -kOffset || v >= kOffset) {
    throw PreconditionError("cell coordinate out of range: " + std::to_string(v));
  }
}

} // namespace

Scale::Scale(int exponent) : m_(exponent) {
  if (exponent < 0 || exponent > kMaxExponent) {
    throw InvalidScale("scale exponent must be in [0, " + std::to_string(kMaxExponent) +
                       "], got " + std::to_string(exponent));
  }
}

double Scale::value() const noexcept { return std::ldexp(1.0, -m_); }

std::uint64_t morton_key(Cell c) {
  check_coordinate(c.i);
  check_coordinate(c.j);
  auto x = static_cast<std::uint32_t>(c.i + kOffset);
  auto y = static_cast<std::uint32_t>(c.j + kOffset);
  return (spread_bits(y) << 1) | spread_bits(x);
}

DyadicSquare DyadicSquare::ancestor(Scale r) const {
  if (r < scale_) {
    throw InvalidScale("ancestor scale finer than the square");
  }
  int k = scale_.exponent() - r.exponent();
  return DyadicSquare(r, cell_.i >> k, cell_.j >> k);
}

std::vector<DyadicSquare> DyadicSquare::children() const {
  Scale half(scale_.exponent() + 1);
  std::int64_t i2 = cell_.i * 2, j2 = cell_.j * 2;
  return {DyadicSquare(half, i2, j2), DyadicSquare(half, i2 + 1, j2),
          DyadicSquare(half, i2, j2 + 1), DyadicSquare(half, i2 + 1, j2 + 1)};
}

bool DyadicSquare::contains(const DyadicSquare& other) const {
  if (other.scale_ > scale_) return false;
  return other.ancestor(scale_) == *this;
}

PointSet::PointSet(Scale base, std::vector<Cell> cells, Bounds bounds)
    : base_(base), bounds_(bounds), cells_(std::move(cells)) {
  const std::int64_t n = base.inverse();
  if (bounds_ == Bounds::unit_square) {
    for (const Cell& c : cells_) {
      if (c.i < 0 || c.j < 0 || c.i >= n || c.j >= n) {
        throw PreconditionError("square (" + std::to_string(c.i) + ", " + std::to_string(c.j) +
                                ") outside [0,1)^2 at scale 2^-" +
                                std::to_string(base.exponent()));
      }
    }
  }
  std::vector<std::pair<std::uint64_t, Cell>> tagged;
  tagged.reserve(cells_.size());
  for (const Cell& c : cells_) tagged.emplace_back(morton_key(c), c);
  std::sort(tagged.begin(), tagged.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t k = 1; k < tagged.size(); ++k) {
    if (tagged[k].first == tagged[k - 1].first) {
      throw PreconditionError("duplicate square (" + std::to_string(tagged[k].second.i) + ", " +
                              std::to_string(tagged[k].second.j) + ")");
    }
  }
  keys_.resize(tagged.size());
  for (std::size_t k = 0; k < tagged.size(); ++k) {
    keys_[k] = tagged[k].first;
    cells_[k] = tagged[k].second;
  }
}

PointSet PointSet::collect(Scale base, std::vector<Cell> cells, Bounds bounds) {
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return PointSet(base, std::move(cells), bounds);
}

std::optional<std::size_t> PointSet::index_of(Cell c) const {
  std::uint64_t key = morton_key(c);
  auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - keys_.begin());
}

std::pair<std::size_t, std::size_t> PointSet::range_in(const DyadicSquare& Q) const {
  if (Q.scale() < base_) {
    throw InvalidScale("restricting square is finer than the base scale");
  }
  int k = base_.exponent() - Q.scale().exponent();
  Cell corner{Q.i() * (std::int64_t{1} << k), Q.j() * (std::int64_t{1} << k)};
  std::uint64_t lo = morton_key(corner);
  std::uint64_t hi = lo + (std::uint64_t{1} << (2 * k));
  auto first = std::lower_bound(keys_.begin(), keys_.end(), lo);
  auto last = std::lower_bound(first, keys_.end(), hi);
  return {static_cast<std::size_t>(first - keys_.begin()),
          static_cast<std::size_t>(last - keys_.begin())};
}

std::vector<Cell> PointSet::lexicographic_cells() const {
  std::vector<Cell> out = cells_;
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

int levels_up(const PointSet& X, Scale r) {
  if (r < X.base_scale()) {
    throw InvalidScale("scale 2^-" + std::to_string(r.exponent()) +
                       " is finer than the base scale 2^-" +
                       std::to_string(X.base_scale().exponent()));
  }
  return X.base_scale().exponent() - r.exponent();
}

} // namespace

std::int64_t covering_number(const PointSet& X, Scale r) {
  int k = levels_up(X, r);
  auto keys = X.keys();
  std::int64_t count = 0;
  for (std::size_t n = 0; n < keys.size(); ++n) {
    if (n == 0 || (keys[n] >> (2 * k)) != (keys[n - 1] >> (2 * k))) ++count;
  }
  return count;
}

std::vector<DyadicSquare> dyadic_cubes(const PointSet& X, Scale r) {
  int k = levels_up(X, r);
  auto keys = X.keys();
  auto cells = X.cells();
  std::vector<DyadicSquare> out;
  for (std::size_t n = 0; n < keys.size(); ++n) {
    if (n == 0 || (keys[n] >> (2 * k)) != (keys[n - 1] >> (2 * k))) {
      out.emplace_back(r, cells[n].i >> k, cells[n].j >> k);
    }
  }
  return out;
}

std::vector<std::int64_t> cube_populations(const PointSet& X, Scale r) {
  int k = levels_up(X, r);
  auto keys = X.keys();
  std::vector<std::int64_t> out;
  for (std::size_t n = 0; n < keys.size(); ++n) {
    if (n == 0 || (keys[n] >> (2 * k)) != (keys[n - 1] >> (2 * k))) {
      out.push_back(1);
    } else {
      ++out.back();
    }
  }
  return out;
}

PointSet restrict_to(const PointSet& P, const DyadicSquare& Q) {
  auto [first, last] = P.range_in(Q);
  std::vector<Cell> cells(P.cells().begin() + first, P.cells().begin() + last);
  return PointSet(P.base_scale(), std::move(cells), P.bounds());
}

PointSet rescale(const PointSet& P, const DyadicSquare& Q) {
  if (Q.scale() < P.base_scale()) {
    throw InvalidScale("rescaling square is finer than the base scale");
  }
  int k = P.base_scale().exponent() - Q.scale().exponent();
  const std::int64_t side = std::int64_t{1} << k;
  std::vector<Cell> cells;
  cells.reserve(P.size());
  for (const Cell& c : P.cells()) {
    Cell local{c.i - Q.i() * side, c.j - Q.j() * side};
    if (local.i < 0 || local.j < 0 || local.i >= side || local.j >= side) {
      throw PreconditionError("rescale: square outside the rescaling square");
    }
    cells.push_back(local);
  }
  return PointSet(Scale(k), std::move(cells), Bounds::unit_square);
}

PointSet full_grid(Scale delta) {
  const std::int64_t n = delta.inverse();
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n * n));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) cells.push_back({i, j});
  }
  return PointSet(delta, std::move(cells));
}

ColumnIndex::ColumnIndex(const PointSet& P) {
  if (P.empty()) return;
  std::vector<Cell> cells = P.lexicographic_cells();
  imin_ = cells.front().i;
  imax_ = cells.back().i;
  offsets_.assign(static_cast<std::size_t>(imax_ - imin_ + 2), 0);
  rows_.reserve(cells.size());
  for (const Cell& c : cells) {
    ++offsets_[static_cast<std::size_t>(c.i - imin_ + 1)];
    rows_.push_back(c.j);
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

std::span<const std::int64_t> ColumnIndex::rows(std::int64_t i, std::int64_t jlo,
                                                std::int64_t jhi) const {
  if (i < imin_ || i > imax_ || jlo > jhi) return {};
  auto col = static_cast<std::size_t>(i - imin_);
  auto begin = rows_.begin() + static_cast<std::ptrdiff_t>(offsets_[col]);
  auto end = rows_.begin() + static_cast<std::ptrdiff_t>(offsets_[col + 1]);
  auto lo = std::lower_bound(begin, end, jlo);
  auto hi = std::upper_bound(lo, end, jhi);
  return std::span<const std::int64_t>(rows_).subspan(static_cast<std::size_t>(lo - rows_.begin()),
                                                      static_cast<std::size_t>(hi - lo));
}

std::int64_t ColumnIndex::count(std::int64_t i, std::int64_t jlo, std::int64_t jhi) const {
  return static_cast<std::int64_t>(rows(i, jlo, jhi).size());
}

} // namespace incgeo
