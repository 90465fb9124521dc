#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dslit {

struct Interval {
  double lo; // m
  double hi; // m
  double length() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Binary transmission on the transverse axis, stored as sorted, disjoint
/// open intervals. An empty interval list is the fully blocked aperture.
class ApertureSpec {
public:
  ApertureSpec() = default;
  /// Sorts the intervals; throws DomainError on empty or overlapping ones.
  explicit ApertureSpec(std::vector<Interval> open_intervals);

  static ApertureSpec blocked() { return ApertureSpec{}; }

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool is_blocked() const { return intervals_.empty(); }
  double open_length() const;
  /// Distance from the leftmost open edge to the rightmost one.
  double extent() const;
  bool transmits(double x) const;
  /// Length of [lo, hi] that is open.
  double covered_length(double lo, double hi) const;

  ApertureSpec mirrored() const;
  ApertureSpec translated(double shift) const;

  friend bool operator==(const ApertureSpec&, const ApertureSpec&) = default;

private:
  std::vector<Interval> intervals_;
};

/// Two slits of equal width centred at -separation/2 (slit 1) and
/// +separation/2 (slit 2).
ApertureSpec make_double_slit(double width, double separation);

/// Single opening of the given width centred at `center`.
ApertureSpec make_mask(double opening_width, double center);

struct SlitFractions {
  double slit1;
  double slit2;
};

/// Fraction of each slit's width whose forward projection falls inside the
/// mask opening. Illumination is a plane wave along z, so the projection is
/// parallel and `z_gap` only has to be non-negative.
SlitFractions open_fraction(const ApertureSpec& slits, const ApertureSpec& mask, double z_gap);

enum class SlitState { blocked, p1, p2, p12, mixed };

/// Label for a pair of open fractions: p1 / p2 when only one slit is
/// (partially) open, p12 when both are fully open, mixed otherwise.
SlitState classify(const SlitFractions& fractions, double tolerance = 1e-12);
std::string to_string(SlitState state);

struct BeamlineLayout {
  double z_collimation_to_doubleslit = 0.305;
  double z_doubleslit_to_mask = 230e-6;
  double z_mask_to_detector = 0.5;
  double magnification = 10.0;
  ApertureSpec collimation = ApertureSpec({{-1e-6, 1e-6}});
  ApertureSpec doubleslit = make_double_slit(50e-9, 280e-9);
  double mask_opening_width = 5e-6;

  /// Throws DomainError naming the first offending field.
  void validate() const;
};

} // namespace dslit
