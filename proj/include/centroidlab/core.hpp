#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "centroidlab/special.hpp"

namespace centroidlab {

using Label = std::uint32_t;

enum class Variant { Recursive, PlaneOriented, DAry, GeneralAlpha };

/// A very simple increasing tree family. Attachment to a node of out-degree k
/// has weight c1 + c2 - c2 k; alpha = 1 + c2 / c1.
class FamilyParams {
 public:
  static FamilyParams recursive() { return FamilyParams(Variant::Recursive, 1.0, 0.0, 0); }
  static FamilyParams plane_oriented() { return FamilyParams(Variant::PlaneOriented, 2.0, -1.0, 0); }
  static FamilyParams d_ary(int d) {
    if (d < 2) throw std::invalid_argument("d ≥ 2 required for the d-ary family");
    return FamilyParams(Variant::DAry, d - 1.0, 1.0, d);
  }
  // c1 is normalised to 1.
  static FamilyParams general(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw std::invalid_argument("alpha must be positive");
    }
    return FamilyParams(Variant::GeneralAlpha, 1.0, alpha - 1.0, 0);
  }

  Variant variant() const { return variant_; }
  double c1() const { return c1_; }
  double c2() const { return c2_; }
  double alpha() const { return 1.0 + c2_ / c1_; }
  // d for DAry families, 0 otherwise.
  int arity() const { return d_; }

  /// Maximum out-degree, if the family caps it. For alpha > 1 a general
  /// family is only realisable when alpha = d / (d - 1) for an integer d.
  std::optional<int> degree_cap() const {
    if (variant_ == Variant::DAry) return d_;
    if (variant_ == Variant::GeneralAlpha && c2_ > 0.0) {
      const double q = 1.0 / c2_;
      const double rounded = std::round(q);
      if (rounded >= 1.0 && std::fabs(q - rounded) <= 1e-9 * rounded) {
        return static_cast<int>(rounded) + 1;
      }
    }
    return std::nullopt;
  }

  /// True when the growth process has non-negative weights at every step.
  bool realizable() const { return c2_ <= 0.0 || degree_cap().has_value(); }

  /// recursive | plane | dary-<d> | alpha-<value>
  std::string tag() const {
    switch (variant_) {
      case Variant::Recursive: return "recursive";
      case Variant::PlaneOriented: return "plane";
      case Variant::DAry: return "dary-" + std::to_string(d_);
      case Variant::GeneralAlpha: break;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "alpha-%.17g", alpha());
    return buf;
  }

  friend bool operator==(const FamilyParams&, const FamilyParams&) = default;

 private:
  FamilyParams(Variant v, double c1, double c2, int d) : variant_(v), c1_(c1), c2_(c2), d_(d) {}

  Variant variant_;
  double c1_;
  double c2_;
  int d_;
};

/// Builds a family from its tag; `alpha` is required for GeneralAlpha and `d`
/// for DAry.
inline FamilyParams make_family(Variant variant, std::optional<double> alpha = std::nullopt,
                                std::optional<int> d = std::nullopt) {
  switch (variant) {
    case Variant::Recursive: return FamilyParams::recursive();
    case Variant::PlaneOriented: return FamilyParams::plane_oriented();
    case Variant::DAry:
      if (!d) throw std::invalid_argument("d-ary family requires d");
      return FamilyParams::d_ary(*d);
    case Variant::GeneralAlpha:
      if (!alpha) throw std::invalid_argument("general family requires alpha");
      return FamilyParams::general(*alpha);
  }
  throw std::invalid_argument("unknown family variant");
}

/// Parses the tag produced by FamilyParams::tag().
inline FamilyParams family_from_tag(const std::string& tag) {
  if (tag == "recursive") return FamilyParams::recursive();
  if (tag == "plane") return FamilyParams::plane_oriented();
  try {
    if (tag.rfind("dary-", 0) == 0) return FamilyParams::d_ary(std::stoi(tag.substr(5)));
    if (tag.rfind("alpha-", 0) == 0) return FamilyParams::general(std::stod(tag.substr(6)));
  } catch (const std::logic_error&) {
  }
  throw std::invalid_argument("unrecognised family tag '" + tag + "'");
}

/// log of the total weight y_n = prod_{j=1}^{n-1} (c1 j + c2).
inline double total_weight(const FamilyParams& family, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("total_weight: n must be at least 1");
  if (n == 1) return 0.0;
  return static_cast<double>(n - 1) * std::log(family.c1()) +
         log_rising_factorial(family.alpha(), n - 1);
}

/// Unnormalised attachment weight c1 + c2 - c2 * outdeg.
inline double attach_weight(const FamilyParams& family, std::uint64_t outdeg) {
  if (auto cap = family.degree_cap()) {
    if (outdeg > static_cast<std::uint64_t>(*cap)) {
      throw std::domain_error("attach_weight: out-degree exceeds the family's cap");
    }
    if (outdeg == static_cast<std::uint64_t>(*cap)) return 0.0;
    if (family.variant() == Variant::DAry) return static_cast<double>(family.arity() - outdeg);
  }
  const double w = family.c1() + family.c2() - family.c2() * static_cast<double>(outdeg);
  if (w < 0.0) throw std::domain_error("attach_weight: negative weight, family not realisable");
  return w;
}

/// floor(sigma * n), tolerant of sigma values such as 0.6 that are not
/// exactly representable.
inline std::uint64_t descendant_threshold(double sigma, std::uint64_t n) {
  return static_cast<std::uint64_t>(std::floor(sigma * static_cast<double>(n) + 1e-9));
}

enum class Provenance { Exact, Asymptotic, Empirical };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Exact: return "exact";
    case Provenance::Asymptotic: return "asymptotic";
    case Provenance::Empirical: return "empirical";
  }
  return "unknown";
}

enum class SupportKind { Integer, Binned };

/// A discrete distribution. Binned tables store the left edge of each bin
/// (bins are right-closed, width `bin_width`), and may carry an atom as a final
/// support point outside the bins.
struct DistributionTable {
  SupportKind kind = SupportKind::Integer;
  std::vector<double> support;
  std::vector<double> mass;
  Provenance provenance = Provenance::Exact;
  double truncation_tail_bound = 0.0;
  double bin_width = 0.0;
  std::uint64_t sample_count = 0;  // empirical tables only

  double total_mass() const {
    CompensatedSum sum;
    for (double m : mass) sum.add(m);
    return sum.value();
  }

  double mass_at(double point) const {
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (support[i] == point) return mass[i];
    }
    return 0.0;
  }

  void validate_probability(double tolerance = 1e-9) const {
    if (support.size() != mass.size()) {
      throw std::logic_error("DistributionTable: support and mass lengths differ");
    }
    for (double m : mass) {
      if (!(m >= 0.0)) throw std::logic_error("DistributionTable: negative mass");
    }
    const double total = total_mass() + truncation_tail_bound;
    if (total < 1.0 - tolerance || total > 1.0 + tolerance) {
      throw std::logic_error("DistributionTable: masses do not sum to one");
    }
  }
};

}  // namespace centroidlab
