#pragma once

// Dyadic scales, squares and finite unions of squares at a base scale.
//
// Coordinates are stored as integers at the base scale. A square (i, j) at
// scale r = 2^-m is the half-open box [i r, (i+1) r) x [j r, (j+1) r).
// Point sets keep their cells in Z-order, so the cells sharing an ancestor at
// any coarser scale form one contiguous run.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace incgeo {

class Scale {
public:
  static constexpr int kMaxExponent = 24;

  constexpr Scale() = default;
  explicit Scale(int exponent);

  constexpr int exponent() const noexcept { return m_; }
  double value() const noexcept;
  /// 1/r as an integer.
  constexpr std::int64_t inverse() const noexcept { return std::int64_t{1} << m_; }

  /// Ordered by the length r, so Scale(8) < Scale(4).
  friend constexpr std::strong_ordering operator<=>(Scale a, Scale b) noexcept {
    return b.m_ <=> a.m_;
  }
  friend constexpr bool operator==(Scale a, Scale b) noexcept = default;

private:
  int m_ = 0;
};

struct Cell {
  std::int64_t i = 0;
  std::int64_t j = 0;

  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

/// Z-order key; ancestors at k levels up are key >> 2k.
std::uint64_t morton_key(Cell c);

class DyadicSquare {
public:
  DyadicSquare() = default;
  DyadicSquare(Scale scale, std::int64_t i, std::int64_t j) : scale_(scale), cell_{i, j} {}
  DyadicSquare(Scale scale, Cell c) : scale_(scale), cell_(c) {}

  static DyadicSquare unit() { return DyadicSquare(Scale(0), 0, 0); }

  Scale scale() const noexcept { return scale_; }
  std::int64_t i() const noexcept { return cell_.i; }
  std::int64_t j() const noexcept { return cell_.j; }
  Cell cell() const noexcept { return cell_; }

  /// The unique square at the coarser (or equal) scale r containing this one.
  DyadicSquare ancestor(Scale r) const;
  /// The four squares at half the side length, in Z-order.
  std::vector<DyadicSquare> children() const;
  /// True iff `other` (at this or a finer scale) lies inside this square.
  bool contains(const DyadicSquare& other) const;

  friend bool operator==(const DyadicSquare&, const DyadicSquare&) = default;

private:
  Scale scale_;
  Cell cell_;
};

enum class Bounds { unit_square, unbounded };

/// A finite family of dyadic squares at one base scale, identified with its union.
class PointSet {
public:
  PointSet() = default;
  /// Rejects duplicates; with Bounds::unit_square every cell must lie in [0,1)^2.
  PointSet(Scale base, std::vector<Cell> cells, Bounds bounds = Bounds::unit_square);

  /// Like the constructor but silently merges duplicate cells.
  static PointSet collect(Scale base, std::vector<Cell> cells,
                          Bounds bounds = Bounds::unit_square);

  Scale base_scale() const noexcept { return base_; }
  Bounds bounds() const noexcept { return bounds_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool empty() const noexcept { return cells_.empty(); }

  /// Cells in Z-order.
  std::span<const Cell> cells() const noexcept { return cells_; }
  std::span<const std::uint64_t> keys() const noexcept { return keys_; }
  DyadicSquare square(std::size_t k) const { return DyadicSquare(base_, cells_[k]); }

  std::optional<std::size_t> index_of(Cell c) const;
  bool contains(Cell c) const { return index_of(c).has_value(); }

  /// Half-open index range [first, last) of the cells inside Q.
  std::pair<std::size_t, std::size_t> range_in(const DyadicSquare& Q) const;

  /// Cells sorted lexicographically by (i, j), as used by the text format.
  std::vector<Cell> lexicographic_cells() const;

  friend bool operator==(const PointSet& a, const PointSet& b) {
    return a.base_ == b.base_ && a.cells_ == b.cells_;
  }

private:
  Scale base_;
  Bounds bounds_ = Bounds::unit_square;
  std::vector<Cell> cells_;
  std::vector<std::uint64_t> keys_;
};

/// |X|_r over the dyadic grid: the number of distinct scale-r ancestors.
std::int64_t covering_number(const PointSet& X, Scale r);

/// D_r(X): the distinct scale-r ancestors, in Z-order.
std::vector<DyadicSquare> dyadic_cubes(const PointSet& X, Scale r);

/// For each ancestor at scale r (Z-order), the number of base cells below it.
std::vector<std::int64_t> cube_populations(const PointSet& X, Scale r);

/// The squares of P contained in Q.
PointSet restrict_to(const PointSet& P, const DyadicSquare& Q);

/// S_Q(P): the homothety taking Q onto [0,1)^2, at base scale delta / Delta.
PointSet rescale(const PointSet& P, const DyadicSquare& Q);

/// All cells of [0,1)^2 at the given scale.
PointSet full_grid(Scale delta);

/// Column-major lookup of a point set: per column i, the sorted row indices.
/// Counting kernel behind ball and tube counts.
class ColumnIndex {
public:
  explicit ColumnIndex(const PointSet& P);

  /// Number of cells (i, j) with jlo <= j <= jhi.
  std::int64_t count(std::int64_t i, std::int64_t jlo, std::int64_t jhi) const;
  /// Cells (i, j) with jlo <= j <= jhi, in increasing j.
  std::span<const std::int64_t> rows(std::int64_t i, std::int64_t jlo, std::int64_t jhi) const;

  std::int64_t min_column() const noexcept { return imin_; }
  std::int64_t max_column() const noexcept { return imax_; }
  bool empty() const noexcept { return rows_.empty(); }

private:
  std::int64_t imin_ = 0;
  std::int64_t imax_ = -1;
  std::vector<std::size_t> offsets_;
  std::vector<std::int64_t> rows_;
};

} // namespace incgeo
