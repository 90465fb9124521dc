#include "dslit/geometry.hpp"

#include "dslit/core.hpp"

#include <algorithm>
#include <cmath>

namespace dslit {

ApertureSpec::ApertureSpec(std::vector<Interval> open_intervals) : intervals_(std::move(open_intervals)) {
  std::sort(intervals_.begin(), intervals_.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto& iv = intervals_[i];
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo < iv.hi))
      throw DomainError("ApertureSpec: interval must satisfy lo < hi");
    if (i > 0 && intervals_[i - 1].hi > iv.lo)
      throw DomainError("ApertureSpec: intervals overlap");
  }
}

double ApertureSpec::open_length() const {
  double total = 0.0;
  for (const auto& iv : intervals_) total += iv.length();
  return total;
}

double ApertureSpec::extent() const {
  if (intervals_.empty()) return 0.0;
  return intervals_.back().hi - intervals_.front().lo;
}

bool ApertureSpec::transmits(double x) const {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [x](const Interval& iv) { return iv.lo < x && x < iv.hi; });
}

double ApertureSpec::covered_length(double lo, double hi) const {
  double total = 0.0;
  for (const auto& iv : intervals_) {
    const double a = std::max(lo, iv.lo);
    const double b = std::min(hi, iv.hi);
    if (b > a) total += b - a;
  }
  return total;
}

ApertureSpec ApertureSpec::mirrored() const {
  std::vector<Interval> out;
  out.reserve(intervals_.size());
  for (const auto& iv : intervals_) out.push_back({-iv.hi, -iv.lo});
  return ApertureSpec(std::move(out));
}

ApertureSpec ApertureSpec::translated(double shift) const {
  std::vector<Interval> out;
  out.reserve(intervals_.size());
  for (const auto& iv : intervals_) out.push_back({iv.lo + shift, iv.hi + shift});
  return ApertureSpec(std::move(out));
}

ApertureSpec make_double_slit(double width, double separation) {
  if (!(width > 0.0)) throw DomainError("make_double_slit: slit width must be positive");
  if (!(width < separation))
    throw DomainError("make_double_slit: slit width must be smaller than the separation");
  const double c = separation / 2.0;
  const double h = width / 2.0;
  return ApertureSpec({{-c - h, -c + h}, {c - h, c + h}});
}

ApertureSpec make_mask(double opening_width, double center) {
  if (!(opening_width > 0.0)) throw DomainError("make_mask: opening width must be positive");
  const double h = opening_width / 2.0;
  return ApertureSpec({{center - h, center + h}});
}

SlitFractions open_fraction(const ApertureSpec& slits, const ApertureSpec& mask, double z_gap) {
  if (slits.intervals().size() != 2)
    throw DomainError("open_fraction: expected exactly two slits");
  if (!(z_gap >= 0.0)) throw DomainError("open_fraction: gap must be non-negative");
  const auto fraction = [&mask](const Interval& slit) {
    return std::clamp(mask.covered_length(slit.lo, slit.hi) / slit.length(), 0.0, 1.0);
  };
  return {fraction(slits.intervals()[0]), fraction(slits.intervals()[1])};
}

SlitState classify(const SlitFractions& f, double tolerance) {
  const bool open1 = f.slit1 > tolerance;
  const bool open2 = f.slit2 > tolerance;
  if (!open1 && !open2) return SlitState::blocked;
  if (open1 && !open2) return SlitState::p1;
  if (!open1 && open2) return SlitState::p2;
  if (f.slit1 >= 1.0 - tolerance && f.slit2 >= 1.0 - tolerance) return SlitState::p12;
  return SlitState::mixed;
}

std::string to_string(SlitState state) {
  switch (state) {
  case SlitState::blocked: return "blocked";
  case SlitState::p1: return "P1";
  case SlitState::p2: return "P2";
  case SlitState::p12: return "P12";
  case SlitState::mixed: return "mixed";
  }
  return "unknown";
}

void BeamlineLayout::validate() const {
  if (!(z_collimation_to_doubleslit > 0.0))
    throw DomainError("layout.z_collimation_to_doubleslit must be positive");
  if (!(z_doubleslit_to_mask > 0.0)) throw DomainError("layout.z_doubleslit_to_mask must be positive");
  if (!(z_mask_to_detector > 0.0)) throw DomainError("layout.z_mask_to_detector must be positive");
  if (!(magnification > 0.0)) throw DomainError("layout.magnification must be positive");
  if (!(mask_opening_width > 0.0)) throw DomainError("layout.mask_opening must be positive");
  if (doubleslit.is_blocked()) throw DomainError("layout.doubleslit has no open interval");
}

} // namespace dslit
